//! Partial programs: value nodes, holes and uniform holes stored in an arena,
//! with a trail so that domain removals and structural edits can be undone.
//!
//! Every node carries a domain of rule indices. The node kind is derived:
//! a node whose domain spans several shapes is a (non-uniform) hole and has
//! no children; a node whose domain has a single shape has its children
//! instantiated and is a uniform hole, or a value node once the domain is a
//! singleton.

use std::fmt;
use std::ops::Range;
use std::sync::Arc;

use thiserror::Error;

use crate::domain::SparseDomain;
use crate::grammar::{Grammar, RuleId, TypeId};
use crate::program::Program;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Sequence of 1-based child positions from the root.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path(pub Vec<usize>);

impl Path {
    pub fn root() -> Self {
        Path(Vec::new())
    }

    pub fn child(&self, position: usize) -> Path {
        let mut v = self.0.clone();
        v.push(position);
        Path(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Path {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{p}")?;
        }
        write!(f, "]")
    }
}

impl From<Vec<usize>> for Path {
    fn from(v: Vec<usize>) -> Self {
        Path(v)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    Value(RuleId),
    Hole,
    UniformHole,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TreeError {
    #[error("path {path} leaves the tree at position {position}")]
    InvalidPath { path: Path, position: usize },
    #[error("checkpoint already restored or discarded")]
    StaleCheckpoint,
    #[error("partial tree syntax: {0}")]
    Syntax(String),
    #[error("type mismatch: expected `{expected}`, found `{found}`")]
    Type { expected: String, found: String },
}

#[derive(Debug, Clone)]
struct Node {
    ty: TypeId,
    domain: SparseDomain,
    children: Vec<NodeId>,
    uniform: bool,
    parent: Option<NodeId>,
    position: u16,
    depth: u32,
}

#[derive(Debug, Clone)]
enum Undo {
    DomainLen { node: NodeId, len: usize },
    Expanded { node: NodeId },
    Replaced { node: NodeId, domain: SparseDomain, children: Vec<NodeId>, uniform: bool },
}

#[derive(Debug, Clone, Copy)]
struct Mark {
    trail_len: usize,
    arena_len: usize,
    serial: u64,
}

/// Token returned by [`ProgramTree::save`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Checkpoint {
    level: usize,
    serial: u64,
}

/// Effect of a domain edit.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Change {
    /// Number of rules removed from the edited node.
    pub removed: usize,
    /// Nodes created by instantiating children after the edit.
    pub created: Range<u32>,
}

impl Change {
    pub fn created_nodes(&self) -> impl Iterator<Item = NodeId> {
        self.created.clone().map(NodeId)
    }

    pub fn is_noop(&self) -> bool {
        self.removed == 0 && self.created.is_empty()
    }
}

#[derive(Debug, Clone)]
pub struct ProgramTree {
    grammar: Arc<Grammar>,
    nodes: Vec<Node>,
    root: NodeId,
    trail: Vec<Undo>,
    marks: Vec<Mark>,
    serial: u64,
}

impl ProgramTree {
    /// A single hole holding every rule of type `ty`.
    pub fn new_hole(grammar: Arc<Grammar>, ty: TypeId) -> Self {
        let mut t = ProgramTree::empty(grammar);
        let domain = t.grammar.rules_of_type(ty).to_vec();
        t.root = t.alloc(ty, &domain, None, 0);
        t
    }

    /// A tree of value nodes mirroring `program`.
    pub fn from_program(grammar: Arc<Grammar>, program: &Program) -> Self {
        let mut t = ProgramTree::empty(grammar);
        t.root = t.alloc_program(program, None, 0);
        t
    }

    /// A uniform tree whose root holds `rules` (one shape) and whose
    /// children are copies of `children`. Checkpoints are not copied.
    pub fn compose(
        grammar: Arc<Grammar>,
        rules: &[RuleId],
        children: &[&ProgramTree],
    ) -> Result<ProgramTree, TreeError> {
        let mut t = ProgramTree::empty(grammar);
        let Some(&first) = rules.first() else {
            return Err(TreeError::Syntax("empty root domain".into()));
        };
        let shape = t.grammar.shape(first);
        if rules.iter().any(|r| t.grammar.shape(*r) != shape) {
            return Err(TreeError::Syntax("root rules differ in shape".into()));
        }
        let expected = t.grammar.child_types(first).to_vec();
        if expected.len() != children.len() {
            return Err(TreeError::Syntax(format!(
                "expected {} children, got {}",
                expected.len(),
                children.len()
            )));
        }
        for (ty, c) in expected.iter().zip(children) {
            let found = c.node_type(c.root);
            if found != *ty {
                return Err(TreeError::Type {
                    expected: t.grammar.type_name(*ty).to_string(),
                    found: t.grammar.type_name(found).to_string(),
                });
            }
        }
        let ty = t.grammar.return_type(first);
        t.nodes.push(Node {
            ty,
            domain: SparseDomain::new(t.grammar.len(), rules),
            children: Vec::new(),
            uniform: true,
            parent: None,
            position: 0,
            depth: 0,
        });
        let kids = children
            .iter()
            .enumerate()
            .map(|(i, c)| t.copy_from(c, c.root, NodeId(0), i, 1))
            .collect();
        t.nodes[0].children = kids;
        Ok(t)
    }

    fn copy_from(&mut self, src: &ProgramTree, n: NodeId, parent: NodeId, position: usize, depth: u32) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        let s = &src.nodes[n.index()];
        self.nodes.push(Node {
            ty: s.ty,
            domain: SparseDomain::new(self.grammar.len(), s.domain.as_slice()),
            children: Vec::new(),
            uniform: s.uniform,
            parent: Some(parent),
            position: position as u16,
            depth,
        });
        let kids = s
            .children
            .iter()
            .enumerate()
            .map(|(i, c)| self.copy_from(src, *c, id, i, depth + 1))
            .collect();
        self.nodes[id.index()].children = kids;
        id
    }

    fn empty(grammar: Arc<Grammar>) -> Self {
        ProgramTree {
            grammar,
            nodes: Vec::new(),
            root: NodeId(0),
            trail: Vec::new(),
            marks: Vec::new(),
            serial: 0,
        }
    }

    pub fn grammar(&self) -> &Arc<Grammar> {
        &self.grammar
    }

    pub fn root(&self) -> NodeId {
        self.root
    }

    /// Number of arena slots, including nodes detached by substitution.
    pub fn arena_len(&self) -> usize {
        self.nodes.len()
    }

    pub fn domain(&self, n: NodeId) -> &SparseDomain {
        &self.nodes[n.index()].domain
    }

    pub fn node_type(&self, n: NodeId) -> TypeId {
        self.nodes[n.index()].ty
    }

    pub fn children(&self, n: NodeId) -> &[NodeId] {
        &self.nodes[n.index()].children
    }

    pub fn parent(&self, n: NodeId) -> Option<NodeId> {
        self.nodes[n.index()].parent
    }

    /// Depth of `n` below the root (root = 0).
    pub fn level(&self, n: NodeId) -> usize {
        self.nodes[n.index()].depth as usize
    }

    /// Whether the node's shape is fixed (children instantiated).
    pub fn is_shaped(&self, n: NodeId) -> bool {
        self.nodes[n.index()].uniform
    }

    pub fn kind(&self, n: NodeId) -> NodeKind {
        let node = &self.nodes[n.index()];
        if !node.uniform {
            NodeKind::Hole
        } else if let Some(r) = node.domain.single() {
            NodeKind::Value(r)
        } else {
            NodeKind::UniformHole
        }
    }

    /// The rule of a value node.
    pub fn fixed_rule(&self, n: NodeId) -> Option<RuleId> {
        let node = &self.nodes[n.index()];
        if node.uniform {
            node.domain.single()
        } else {
            None
        }
    }

    pub fn node_at(&self, path: &Path) -> Result<NodeId, TreeError> {
        let mut cur = self.root;
        for (i, &p) in path.0.iter().enumerate() {
            let children = self.children(cur);
            if p == 0 || p > children.len() {
                return Err(TreeError::InvalidPath {
                    path: path.clone(),
                    position: i,
                });
            }
            cur = children[p - 1];
        }
        Ok(cur)
    }

    pub fn path_of(&self, n: NodeId) -> Path {
        let mut v = Vec::new();
        let mut cur = n;
        while let Some(p) = self.nodes[cur.index()].parent {
            v.push(self.nodes[cur.index()].position as usize + 1);
            cur = p;
        }
        v.reverse();
        Path(v)
    }

    /// Ancestors of `n` from its parent up to the root.
    pub fn ancestors(&self, n: NodeId) -> Ancestors<'_> {
        Ancestors {
            tree: self,
            next: self.parent(n),
        }
    }

    /// Pre-order list of the nodes in the subtree rooted at `n`.
    pub fn subtree_nodes(&self, n: NodeId) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut stack = vec![n];
        while let Some(c) = stack.pop() {
            out.push(c);
            stack.extend(self.children(c).iter().rev());
        }
        out
    }

    /// Whether `n` lies in the subtree rooted at `ancestor` (inclusive).
    pub fn is_within(&self, n: NodeId, ancestor: NodeId) -> bool {
        if n == ancestor {
            return true;
        }
        let target_depth = self.level(ancestor);
        let mut cur = n;
        while self.level(cur) > target_depth {
            match self.parent(cur) {
                Some(p) => cur = p,
                None => return false,
            }
        }
        cur == ancestor
    }

    pub fn size(&self) -> usize {
        self.subtree_size(self.root)
    }

    /// Node count; holes count as one node each.
    pub fn subtree_size(&self, n: NodeId) -> usize {
        1 + self
            .children(n)
            .iter()
            .map(|c| self.subtree_size(*c))
            .sum::<usize>()
    }

    pub fn subtree_depth(&self, n: NodeId) -> usize {
        1 + self
            .children(n)
            .iter()
            .map(|c| self.subtree_depth(*c))
            .max()
            .unwrap_or(0)
    }

    /// Least node count of any complete program derivable from the tree.
    pub fn min_completion_size(&self) -> Option<usize> {
        self.min_completion_size_at(self.root)
    }

    pub fn min_completion_size_at(&self, n: NodeId) -> Option<usize> {
        let node = &self.nodes[n.index()];
        if node.uniform {
            node.children
                .iter()
                .try_fold(1, |acc, c| self.min_completion_size_at(*c).map(|m| acc + m))
        } else {
            node.domain
                .iter()
                .filter_map(|r| self.grammar.rule_min_size(r))
                .min()
        }
    }

    /// Least depth (root = 1) of any complete program derivable from the tree.
    pub fn min_completion_depth(&self) -> Option<usize> {
        self.min_completion_depth_at(self.root)
    }

    pub fn min_completion_depth_at(&self, n: NodeId) -> Option<usize> {
        let node = &self.nodes[n.index()];
        if node.uniform {
            node.children
                .iter()
                .try_fold(0, |acc, c| self.min_completion_depth_at(*c).map(|m| acc.max(m)))
                .map(|d| d + 1)
        } else {
            node.domain
                .iter()
                .filter_map(|r| self.grammar.rule_min_depth(r))
                .min()
        }
    }

    pub fn is_complete(&self) -> bool {
        self.is_complete_at(self.root)
    }

    pub fn is_complete_at(&self, n: NodeId) -> bool {
        self.fixed_rule(n).is_some() && self.children(n).iter().all(|c| self.is_complete_at(*c))
    }

    /// Every hole in the tree is uniform.
    pub fn is_uniform(&self) -> bool {
        self.subtree_nodes(self.root).iter().all(|n| self.is_shaped(*n))
    }

    /// First non-uniform hole in pre-order.
    pub fn first_nonuniform_hole(&self) -> Option<NodeId> {
        let mut stack = vec![self.root];
        while let Some(n) = stack.pop() {
            if !self.is_shaped(n) {
                return Some(n);
            }
            stack.extend(self.children(n).iter().rev());
        }
        None
    }

    pub fn to_program(&self) -> Option<Program> {
        self.to_program_at(self.root)
    }

    pub fn to_program_at(&self, n: NodeId) -> Option<Program> {
        let rule = self.fixed_rule(n)?;
        let children = self
            .children(n)
            .iter()
            .map(|c| self.to_program_at(*c))
            .collect::<Option<Vec<_>>>()?;
        Some(Program { rule, children })
    }

    /// Removes `rule` from the domain of `n`. Instantiates children when the
    /// surviving rules share one shape.
    pub fn remove(&mut self, n: NodeId, rule: RuleId) -> Change {
        let len = self.nodes[n.index()].domain.len();
        if !self.nodes[n.index()].domain.remove(rule) {
            return Change::default();
        }
        self.record(Undo::DomainLen { node: n, len });
        self.after_shrink(n, 1)
    }

    pub fn remove_all_but(&mut self, n: NodeId, keep: &[RuleId]) -> Change {
        self.retain(n, |r| keep.contains(&r))
    }

    pub fn retain(&mut self, n: NodeId, keep: impl FnMut(RuleId) -> bool) -> Change {
        let len = self.nodes[n.index()].domain.len();
        let removed = self.nodes[n.index()].domain.retain(keep);
        if removed == 0 {
            return Change::default();
        }
        self.record(Undo::DomainLen { node: n, len });
        self.after_shrink(n, removed)
    }

    fn after_shrink(&mut self, n: NodeId, removed: usize) -> Change {
        let start = self.nodes.len() as u32;
        if !self.nodes[n.index()].uniform && self.single_shape(&self.nodes[n.index()].domain) {
            self.record(Undo::Expanded { node: n });
            self.expand(n);
        }
        Change {
            removed,
            created: start..self.nodes.len() as u32,
        }
    }

    /// Replaces the subtree at `n` by `program`. The node keeps its identity;
    /// its former descendants are detached.
    pub fn substitute(&mut self, n: NodeId, program: &Program) -> Result<Change, TreeError> {
        let ty = self.node_type(n);
        let found = self.grammar.return_type(program.rule);
        if found != ty {
            return Err(TreeError::Type {
                expected: self.grammar.type_name(ty).to_string(),
                found: self.grammar.type_name(found).to_string(),
            });
        }
        let old = &self.nodes[n.index()];
        let undo = Undo::Replaced {
            node: n,
            domain: old.domain.clone(),
            children: old.children.clone(),
            uniform: old.uniform,
        };
        let removed = old.domain.len() - 1;
        self.record(undo);
        let start = self.nodes.len() as u32;
        let universe = self.grammar.len();
        let depth = self.nodes[n.index()].depth;
        let children: Vec<NodeId> = program
            .children
            .iter()
            .enumerate()
            .map(|(i, c)| self.alloc_program_at(c, n, i, depth + 1))
            .collect();
        let node = &mut self.nodes[n.index()];
        node.domain = SparseDomain::new(universe, &[program.rule]);
        node.children = children;
        node.uniform = true;
        Ok(Change {
            removed,
            created: start..self.nodes.len() as u32,
        })
    }

    pub fn save(&mut self) -> Checkpoint {
        self.serial += 1;
        self.marks.push(Mark {
            trail_len: self.trail.len(),
            arena_len: self.nodes.len(),
            serial: self.serial,
        });
        Checkpoint {
            level: self.marks.len() - 1,
            serial: self.serial,
        }
    }

    /// Undoes every change made since `cp` was taken. Checkpoints saved after
    /// `cp` are discarded along with it.
    pub fn restore(&mut self, cp: Checkpoint) -> Result<(), TreeError> {
        match self.marks.get(cp.level) {
            Some(m) if m.serial == cp.serial => {}
            _ => return Err(TreeError::StaleCheckpoint),
        }
        let mark = self.marks[cp.level];
        self.marks.truncate(cp.level);
        while self.trail.len() > mark.trail_len {
            match self.trail.pop().unwrap() {
                Undo::DomainLen { node, len } => self.nodes[node.index()].domain.restore_len(len),
                Undo::Expanded { node } => {
                    let node = &mut self.nodes[node.index()];
                    node.children.clear();
                    node.uniform = false;
                }
                Undo::Replaced {
                    node,
                    domain,
                    children,
                    uniform,
                } => {
                    let node = &mut self.nodes[node.index()];
                    node.domain = domain;
                    node.children = children;
                    node.uniform = uniform;
                }
            }
        }
        self.nodes.truncate(mark.arena_len);
        Ok(())
    }

    /// Number of live checkpoints.
    pub fn checkpoint_depth(&self) -> usize {
        self.marks.len()
    }

    fn record(&mut self, u: Undo) {
        if !self.marks.is_empty() {
            self.trail.push(u);
        }
    }

    fn single_shape(&self, d: &SparseDomain) -> bool {
        let mut it = d.iter();
        match it.next() {
            None => false,
            Some(first) => {
                let s = self.grammar.shape(first);
                it.all(|r| self.grammar.shape(r) == s)
            }
        }
    }

    fn alloc(&mut self, ty: TypeId, domain: &[RuleId], parent: Option<NodeId>, depth: u32) -> NodeId {
        self.alloc_at(ty, domain, parent, 0, depth)
    }

    fn alloc_at(
        &mut self,
        ty: TypeId,
        domain: &[RuleId],
        parent: Option<NodeId>,
        position: usize,
        depth: u32,
    ) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            ty,
            domain: SparseDomain::new(self.grammar.len(), domain),
            children: Vec::new(),
            uniform: false,
            parent,
            position: position as u16,
            depth,
        });
        if self.single_shape(&self.nodes[id.index()].domain) {
            self.expand(id);
        }
        id
    }

    // Marks `n` uniform and creates fresh full-domain children.
    fn expand(&mut self, n: NodeId) {
        let grammar = Arc::clone(&self.grammar);
        let rule = self.nodes[n.index()].domain.as_slice()[0];
        let depth = self.nodes[n.index()].depth + 1;
        let children: Vec<NodeId> = grammar
            .child_types(rule)
            .iter()
            .enumerate()
            .map(|(i, t)| self.alloc_at(*t, grammar.rules_of_type(*t), Some(n), i, depth))
            .collect();
        let node = &mut self.nodes[n.index()];
        node.children = children;
        node.uniform = true;
    }

    fn alloc_program(&mut self, p: &Program, parent: Option<NodeId>, depth: u32) -> NodeId {
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            ty: self.grammar.return_type(p.rule),
            domain: SparseDomain::new(self.grammar.len(), &[p.rule]),
            children: Vec::new(),
            uniform: true,
            parent,
            position: 0,
            depth,
        });
        let children: Vec<NodeId> = p
            .children
            .iter()
            .enumerate()
            .map(|(i, c)| self.alloc_program_at(c, id, i, depth + 1))
            .collect();
        self.nodes[id.index()].children = children;
        id
    }

    fn alloc_program_at(&mut self, p: &Program, parent: NodeId, position: usize, depth: u32) -> NodeId {
        let id = self.alloc_program(p, Some(parent), depth);
        self.nodes[id.index()].position = position as u16;
        id
    }

    /// Parses a partial tree. Syntax:
    ///
    /// ```text
    /// +(1, x)            value nodes
    /// {+,*}(1, {1,x})    holes with explicit domains
    /// ?Int               hole with the full domain of a type
    /// ```
    ///
    /// A hole whose domain has one shape gets fresh children unless they are
    /// written out; a hole spanning several shapes cannot have children.
    pub fn parse(grammar: Arc<Grammar>, text: &str) -> Result<ProgramTree, TreeError> {
        let spec = SpecParser { src: text, at: 0 }.parse_all()?;
        let mut t = ProgramTree::empty(grammar);
        t.root = t.build_spec(&spec, None, 0, 0)?;
        Ok(t)
    }

    fn build_spec(
        &mut self,
        spec: &NodeSpec,
        parent: Option<NodeId>,
        position: usize,
        depth: u32,
    ) -> Result<NodeId, TreeError> {
        let g = Arc::clone(&self.grammar);
        let (ty, domain): (TypeId, Vec<RuleId>) = match &spec.head {
            Head::FullHole(name) => {
                let ty = g
                    .type_by_name(name)
                    .ok_or_else(|| TreeError::Syntax(format!("unknown type `{name}`")))?;
                (ty, g.rules_of_type(ty).to_vec())
            }
            Head::Labels(labels) => {
                let rules = g
                    .resolve_labels(labels.iter().map(String::as_str))
                    .map_err(|e| TreeError::Syntax(e.to_string()))?;
                let ty = g.return_type(rules[0]);
                if let Some(bad) = rules.iter().find(|r| g.return_type(**r) != ty) {
                    return Err(TreeError::Type {
                        expected: g.type_name(ty).to_string(),
                        found: g.type_name(g.return_type(*bad)).to_string(),
                    });
                }
                (ty, rules)
            }
        };
        if let Some(p) = parent {
            let expected = g.child_types(self.fixed_or_any_rule(p))[position];
            if expected != ty {
                return Err(TreeError::Type {
                    expected: g.type_name(expected).to_string(),
                    found: g.type_name(ty).to_string(),
                });
            }
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            ty,
            domain: SparseDomain::new(g.len(), &domain),
            children: Vec::new(),
            uniform: false,
            parent,
            position: position as u16,
            depth,
        });
        let shaped = self.single_shape(&self.nodes[id.index()].domain);
        match (&spec.children, shaped) {
            (None, true) => self.expand(id),
            (None, false) => {}
            (Some(_), false) => {
                return Err(TreeError::Syntax(
                    "a hole spanning several shapes cannot have children".into(),
                ))
            }
            (Some(children), true) => {
                let arity = g.arity(domain[0]);
                if children.len() != arity {
                    return Err(TreeError::Syntax(format!(
                        "expected {arity} children, got {}",
                        children.len()
                    )));
                }
                self.nodes[id.index()].uniform = true;
                let mut ids = Vec::with_capacity(arity);
                for (i, c) in children.iter().enumerate() {
                    ids.push(self.build_spec(c, Some(id), i, depth + 1)?);
                }
                self.nodes[id.index()].children = ids;
            }
        }
        Ok(id)
    }

    fn fixed_or_any_rule(&self, n: NodeId) -> RuleId {
        self.nodes[n.index()].domain.as_slice()[0]
    }

    pub fn display(&self) -> String {
        let mut out = String::new();
        self.write_node(self.root, &mut out);
        out
    }

    pub fn display_at(&self, n: NodeId) -> String {
        let mut out = String::new();
        self.write_node(n, &mut out);
        out
    }

    fn write_node(&self, n: NodeId, out: &mut String) {
        let node = &self.nodes[n.index()];
        match node.domain.single() {
            Some(r) if node.uniform => out.push_str(self.grammar.label(r)),
            _ => {
                out.push('{');
                for (i, r) in node.domain.sorted().into_iter().enumerate() {
                    if i > 0 {
                        out.push(',');
                    }
                    out.push_str(self.grammar.label(r));
                }
                out.push('}');
            }
        }
        if !node.children.is_empty() {
            out.push('(');
            for (i, c) in node.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                self.write_node(*c, out);
            }
            out.push(')');
        }
    }
}

pub struct Ancestors<'a> {
    tree: &'a ProgramTree,
    next: Option<NodeId>,
}

impl Iterator for Ancestors<'_> {
    type Item = NodeId;

    fn next(&mut self) -> Option<NodeId> {
        let n = self.next?;
        self.next = self.tree.parent(n);
        Some(n)
    }
}

enum Head {
    Labels(Vec<String>),
    FullHole(String),
}

struct NodeSpec {
    head: Head,
    children: Option<Vec<NodeSpec>>,
}

struct SpecParser<'s> {
    src: &'s str,
    at: usize,
}

impl SpecParser<'_> {
    fn parse_all(mut self) -> Result<NodeSpec, TreeError> {
        let n = self.node()?;
        self.ws();
        if self.at != self.src.len() {
            return Err(self.err("trailing input"));
        }
        Ok(n)
    }

    fn err(&self, msg: &str) -> TreeError {
        TreeError::Syntax(format!("{msg} at byte {}", self.at))
    }

    fn peek(&self) -> Option<char> {
        self.src[self.at..].chars().next()
    }

    fn ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.at += c.len_utf8();
        }
    }

    fn token(&mut self) -> Result<String, TreeError> {
        self.ws();
        let start = self.at;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || matches!(c, '(' | ')' | ',' | '{' | '}') {
                break;
            }
            self.at += c.len_utf8();
        }
        if start == self.at {
            return Err(self.err("expected a label"));
        }
        Ok(self.src[start..self.at].to_string())
    }

    fn node(&mut self) -> Result<NodeSpec, TreeError> {
        self.ws();
        let head = match self.peek() {
            Some('{') => {
                self.at += 1;
                let mut labels = Vec::new();
                loop {
                    labels.push(self.token()?);
                    self.ws();
                    match self.peek() {
                        Some(',') => self.at += 1,
                        Some('}') => {
                            self.at += 1;
                            break;
                        }
                        _ => return Err(self.err("expected `,` or `}`")),
                    }
                }
                Head::Labels(labels)
            }
            Some('?') => {
                self.at += 1;
                Head::FullHole(self.token()?)
            }
            _ => Head::Labels(vec![self.token()?]),
        };
        self.ws();
        let children = if self.peek() == Some('(') {
            self.at += 1;
            let mut cs = Vec::new();
            loop {
                cs.push(self.node()?);
                self.ws();
                match self.peek() {
                    Some(',') => self.at += 1,
                    Some(')') => {
                        self.at += 1;
                        break;
                    }
                    _ => return Err(self.err("expected `,` or `)`")),
                }
            }
            Some(cs)
        } else {
            None
        };
        Ok(NodeSpec { head, children })
    }
}
