//! Template trees, matching against partial programs, and the two deduction
//! primitives used by propagators (`make_equal`, `make_less_than_or_equal`).

use std::cmp::Ordering;
use std::fmt;

use crate::grammar::{Grammar, RuleId, TypeId};
use crate::program::Program;
use crate::sexpr::{self, ParseError, Sexpr};
use crate::tree::{NodeId, ProgramTree};

/// A constraint pattern. Variable nodes are leaves that match whole subtrees;
/// repeated names must match equal subtrees.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TemplateTree {
    Value {
        rule: RuleId,
        children: Vec<TemplateTree>,
    },
    Domain {
        rules: Vec<RuleId>,
        children: Vec<TemplateTree>,
    },
    Var(String),
}

impl TemplateTree {
    pub fn value(rule: RuleId, children: Vec<TemplateTree>) -> Self {
        TemplateTree::Value { rule, children }
    }

    pub fn domain(mut rules: Vec<RuleId>, children: Vec<TemplateTree>) -> Self {
        rules.sort_unstable();
        rules.dedup();
        TemplateTree::Domain { rules, children }
    }

    pub fn var(name: impl Into<String>) -> Self {
        TemplateTree::Var(name.into())
    }

    pub fn children(&self) -> &[TemplateTree] {
        match self {
            TemplateTree::Value { children, .. } | TemplateTree::Domain { children, .. } => children,
            TemplateTree::Var(_) => &[],
        }
    }

    /// Type of the matched root, or `None` for a bare variable or a domain
    /// node spanning several return types.
    pub fn root_type(&self, g: &Grammar) -> Option<TypeId> {
        match self {
            TemplateTree::Value { rule, .. } => Some(g.return_type(*rule)),
            TemplateTree::Domain { rules, .. } => {
                let t = g.return_type(rules[0]);
                rules.iter().all(|r| g.return_type(*r) == t).then_some(t)
            }
            TemplateTree::Var(_) => None,
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().iter().map(TemplateTree::size).sum::<usize>()
    }

    pub fn has_domain_nodes(&self) -> bool {
        matches!(self, TemplateTree::Domain { .. })
            || self.children().iter().any(TemplateTree::has_domain_nodes)
    }

    /// Variable names in order of first occurrence.
    pub fn var_names(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars<'a>(&'a self, out: &mut Vec<&'a str>) {
        match self {
            TemplateTree::Var(name) => {
                if !out.contains(&name.as_str()) {
                    out.push(name);
                }
            }
            _ => self.children().iter().for_each(|c| c.collect_vars(out)),
        }
    }

    /// Parses one template in constraint-file syntax:
    /// `(rule label child...)`, `(domain (label...) child...)`, `(var name)`.
    /// A bare label stands for a terminal value node and `:name` for a variable.
    pub fn parse(g: &Grammar, text: &str) -> Result<TemplateTree, ParseError> {
        let forms = sexpr::parse_all(text)?;
        match forms.as_slice() {
            [one] => TemplateTree::from_sexpr(g, one),
            _ => Err(ParseError {
                line: forms.get(1).map_or(1, Sexpr::line),
                message: format!("expected exactly one template, found {}", forms.len()),
            }),
        }
    }

    pub(crate) fn from_sexpr(g: &Grammar, e: &Sexpr) -> Result<TemplateTree, ParseError> {
        let line = e.line();
        let err = |message: String| ParseError { line, message };
        let lookup = |label: &str| {
            g.rule_by_label(label)
                .ok_or_else(|| err(format!("unknown rule label `{label}`")))
        };
        let t = match e {
            Sexpr::Atom { text, .. } => match text.strip_prefix(':') {
                Some(name) if !name.is_empty() => TemplateTree::var(name),
                _ => TemplateTree::value(lookup(text)?, Vec::new()),
            },
            Sexpr::List { items, .. } => {
                let head = items
                    .first()
                    .and_then(Sexpr::atom)
                    .ok_or_else(|| err("expected `rule`, `domain` or `var`".into()))?;
                match head {
                    "var" => match items.as_slice() {
                        [_, Sexpr::Atom { text, .. }] => TemplateTree::var(text.as_str()),
                        _ => return Err(err("`var` takes one name".into())),
                    },
                    "rule" => {
                        let label = items
                            .get(1)
                            .and_then(Sexpr::atom)
                            .ok_or_else(|| err("`rule` needs a label".into()))?;
                        let children = items[2..]
                            .iter()
                            .map(|c| TemplateTree::from_sexpr(g, c))
                            .collect::<Result<_, _>>()?;
                        TemplateTree::value(lookup(label)?, children)
                    }
                    "domain" => {
                        let labels = items
                            .get(1)
                            .and_then(Sexpr::list)
                            .ok_or_else(|| err("`domain` needs a label list".into()))?;
                        if labels.is_empty() {
                            return Err(err("empty domain".into()));
                        }
                        let rules = labels
                            .iter()
                            .map(|l| {
                                l.atom()
                                    .ok_or_else(|| err("domain labels must be atoms".into()))
                                    .and_then(lookup)
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        let children = items[2..]
                            .iter()
                            .map(|c| TemplateTree::from_sexpr(g, c))
                            .collect::<Result<_, _>>()?;
                        TemplateTree::domain(rules, children)
                    }
                    other => return Err(err(format!("unknown template form `{other}`"))),
                }
            }
        };
        t.validate(g).map_err(err)?;
        Ok(t)
    }

    /// Checks arity, child-type agreement inside domain nodes, and child
    /// types. Rules of a domain node may differ in return type.
    pub fn validate(&self, g: &Grammar) -> Result<(), String> {
        let rule = match self {
            TemplateTree::Var(_) => return Ok(()),
            TemplateTree::Value { rule, .. } => *rule,
            TemplateTree::Domain { rules, .. } => {
                let first = *rules.first().ok_or("empty domain")?;
                if let Some(bad) = rules.iter().find(|r| g.child_types(**r) != g.child_types(first)) {
                    return Err(format!(
                        "domain mixes child types of `{}` and `{}`",
                        g.label(first),
                        g.label(*bad)
                    ));
                }
                first
            }
        };
        let children = self.children();
        if children.len() != g.arity(rule) {
            return Err(format!(
                "`{}` expects {} children, got {}",
                g.label(rule),
                g.arity(rule),
                children.len()
            ));
        }
        for (c, t) in children.iter().zip(g.child_types(rule)) {
            if let Some(ct) = c.root_type(g) {
                if ct != *t {
                    return Err(format!(
                        "child of `{}` must be `{}`, found `{}`",
                        g.label(rule),
                        g.type_name(*t),
                        g.type_name(ct)
                    ));
                }
            }
            c.validate(g)?;
        }
        Ok(())
    }

    pub fn to_sexpr(&self, g: &Grammar) -> String {
        match self {
            TemplateTree::Var(name) => format!("(var {name})"),
            TemplateTree::Value { rule, children } => {
                let mut s = format!("(rule {}", g.label(*rule));
                for c in children {
                    s.push(' ');
                    s.push_str(&c.to_sexpr(g));
                }
                s.push(')');
                s
            }
            TemplateTree::Domain { rules, children } => {
                let labels: Vec<&str> = rules.iter().map(|r| g.label(*r)).collect();
                let mut s = format!("(domain ({})", labels.join(" "));
                for c in children {
                    s.push(' ');
                    s.push_str(&c.to_sexpr(g));
                }
                s.push(')');
                s
            }
        }
    }

    pub fn display<'a>(&'a self, g: &'a Grammar) -> impl fmt::Display + 'a {
        struct D<'a>(&'a TemplateTree, &'a Grammar);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0.to_sexpr(self.1))
            }
        }
        D(self, g)
    }
}

/// Variable name → matched node, local to one match attempt.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings<'t> {
    entries: Vec<(&'t str, NodeId)>,
}

impl<'t> Bindings<'t> {
    pub fn new() -> Self {
        Bindings::default()
    }

    pub fn get(&self, name: &str) -> Option<NodeId> {
        self.entries.iter().find(|(n, _)| *n == name).map(|(_, id)| *id)
    }

    pub fn insert(&mut self, name: &'t str, node: NodeId) {
        debug_assert!(self.get(name).is_none());
        self.entries.push((name, node));
    }

    pub fn iter(&self) -> impl Iterator<Item = (&'t str, NodeId)> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MatchResult<'t> {
    /// Every completion matches.
    Success(Bindings<'t>),
    /// The match holds iff `hole` takes `rule`.
    SuccessWhenHoleAssignedTo {
        hole: NodeId,
        rule: RuleId,
        bindings: Bindings<'t>,
    },
    SoftFail,
    /// No completion matches.
    HardFail,
}

impl MatchResult<'_> {
    pub fn is_success(&self) -> bool {
        matches!(self, MatchResult::Success(_))
    }

    pub fn is_hard_fail(&self) -> bool {
        matches!(self, MatchResult::HardFail)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeductionResult {
    Success,
    SoftFail,
    HardFail,
}

impl DeductionResult {
    fn and(self, other: DeductionResult) -> DeductionResult {
        use DeductionResult::*;
        match (self, other) {
            (HardFail, _) | (_, HardFail) => HardFail,
            (SoftFail, _) | (_, SoftFail) => SoftFail,
            _ => Success,
        }
    }
}

#[derive(Default)]
struct MatchCtx {
    soft: bool,
    pending: Option<(NodeId, RuleId)>,
}

impl MatchCtx {
    fn assume(&mut self, hole: NodeId, rule: RuleId) {
        match self.pending {
            None => self.pending = Some((hole, rule)),
            Some(p) if p == (hole, rule) => {}
            Some(_) => self.soft = true,
        }
    }
}

/// Matches the subtree at `node` against `template`, extending `bindings`.
pub fn pattern_match<'t>(
    tree: &ProgramTree,
    node: NodeId,
    template: &'t TemplateTree,
    mut bindings: Bindings<'t>,
) -> MatchResult<'t> {
    let mut ctx = MatchCtx::default();
    if !match_node(tree, node, template, &mut bindings, &mut ctx) {
        return MatchResult::HardFail;
    }
    match (ctx.soft, ctx.pending) {
        (true, _) => MatchResult::SoftFail,
        (false, Some((hole, rule))) => MatchResult::SuccessWhenHoleAssignedTo { hole, rule, bindings },
        (false, None) => MatchResult::Success(bindings),
    }
}

// Returns false on a definite mismatch.
fn match_node<'t>(
    tree: &ProgramTree,
    n: NodeId,
    t: &'t TemplateTree,
    b: &mut Bindings<'t>,
    ctx: &mut MatchCtx,
) -> bool {
    let (children, conditional) = match t {
        TemplateTree::Var(name) => {
            return match b.get(name) {
                None => {
                    b.insert(name, n);
                    true
                }
                Some(m) => unify(tree, m, n, ctx),
            };
        }
        TemplateTree::Value { rule, children } => {
            let d = tree.domain(n);
            if !d.contains(*rule) {
                return false;
            }
            (children, (d.len() > 1).then_some(*rule))
        }
        TemplateTree::Domain { rules, children } => {
            let d = tree.domain(n);
            let mut shared = 0;
            let mut last = None;
            for r in d.iter() {
                if rules.binary_search(&r).is_ok() {
                    shared += 1;
                    last = Some(r);
                }
            }
            match shared {
                0 => return false,
                _ if shared == d.len() => (children, None),
                1 => (children, last),
                _ => {
                    ctx.soft = true;
                    (children, None)
                }
            }
        }
    };
    if !tree.is_shaped(n) {
        // A hole spanning several shapes has no children yet; only a terminal
        // template can be decided by a single assignment.
        match conditional {
            Some(r) if children.is_empty() => ctx.assume(n, r),
            _ => ctx.soft = true,
        }
        return true;
    }
    if let Some(r) = conditional {
        ctx.assume(n, r);
    }
    tree.children(n)
        .iter()
        .zip(children)
        .all(|(c, tc)| match_node(tree, *c, tc, b, ctx))
}

// Structural equality of two subtrees.
fn unify(tree: &ProgramTree, a: NodeId, b: NodeId, ctx: &mut MatchCtx) -> bool {
    if a == b {
        return true;
    }
    let (da, db) = (tree.domain(a), tree.domain(b));
    if !da.intersects(db.as_slice()) {
        return false;
    }
    match (tree.fixed_rule(a), tree.fixed_rule(b)) {
        (Some(_), Some(_)) => {}
        (Some(r), None) | (None, Some(r)) => {
            let hole = if tree.fixed_rule(a).is_some() { b } else { a };
            if !tree.is_shaped(hole) {
                if tree.grammar().is_terminal(r) {
                    ctx.assume(hole, r);
                } else {
                    ctx.soft = true;
                }
                return true;
            }
            ctx.assume(hole, r);
        }
        (None, None) => {
            ctx.soft = true;
            if !(tree.is_shaped(a) && tree.is_shaped(b)) {
                return true;
            }
        }
    }
    tree.children(a)
        .iter()
        .zip(tree.children(b))
        .all(|(x, y)| unify(tree, *x, *y, ctx))
}

/// Ground-truth matching of a complete program at its root.
pub fn matches_complete(program: &Program, template: &TemplateTree) -> bool {
    fn go<'p, 't>(p: &'p Program, t: &'t TemplateTree, b: &mut Vec<(&'t str, &'p Program)>) -> bool {
        match t {
            TemplateTree::Var(name) => match b.iter().find(|(n, _)| n == name) {
                Some((_, q)) => *q == p,
                None => {
                    b.push((name, p));
                    true
                }
            },
            TemplateTree::Value { rule, children } => {
                p.rule == *rule
                    && p.children.len() == children.len()
                    && p.children.iter().zip(children).all(|(c, tc)| go(c, tc, b))
            }
            TemplateTree::Domain { rules, children } => {
                rules.contains(&p.rule)
                    && p.children.len() == children.len()
                    && p.children.iter().zip(children).all(|(c, tc)| go(c, tc, b))
            }
        }
    }
    go(program, template, &mut Vec::new())
}

/// Like [`matches_complete`] but returns the bindings on success.
pub fn bind_complete<'p, 't>(
    program: &'p Program,
    template: &'t TemplateTree,
) -> Option<Vec<(&'t str, &'p Program)>> {
    fn go<'p, 't>(p: &'p Program, t: &'t TemplateTree, b: &mut Vec<(&'t str, &'p Program)>) -> bool {
        match t {
            TemplateTree::Var(name) => match b.iter().find(|(n, _)| n == name) {
                Some((_, q)) => *q == p,
                None => {
                    b.push((name, p));
                    true
                }
            },
            TemplateTree::Value { rule, children } => {
                p.rule == *rule && p.children.iter().zip(children).all(|(c, tc)| go(c, tc, b))
            }
            TemplateTree::Domain { rules, children } => {
                rules.contains(&p.rule)
                    && p.children.len() == children.len()
                    && p.children.iter().zip(children).all(|(c, tc)| go(c, tc, b))
            }
        }
    }
    let mut b = Vec::new();
    go(program, template, &mut b).then_some(b)
}

/// Total order on complete programs: root rule index, then children
/// left-to-right, depth first.
pub fn lex_compare(a: &Program, b: &Program) -> Ordering {
    a.rule.cmp(&b.rule).then_with(|| {
        for (x, y) in a.children.iter().zip(&b.children) {
            match lex_compare(x, y) {
                Ordering::Equal => {}
                o => return o,
            }
        }
        a.children.len().cmp(&b.children.len())
    })
}

/// Outcome of comparing two partial subtrees under the lex order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartialOrdering {
    Less,
    Equal,
    Greater,
    Unknown,
}

/// Compares two subtrees as far as their current domains decide.
pub fn compare_partial(tree: &ProgramTree, a: NodeId, b: NodeId) -> PartialOrdering {
    if a == b {
        return PartialOrdering::Equal;
    }
    let (da, db) = (tree.domain(a), tree.domain(b));
    let (Some(amin), Some(amax), Some(bmin), Some(bmax)) = (da.min(), da.max(), db.min(), db.max())
    else {
        return PartialOrdering::Unknown;
    };
    if amax < bmin {
        return PartialOrdering::Less;
    }
    if amin > bmax {
        return PartialOrdering::Greater;
    }
    if tree.fixed_rule(a).is_none() || tree.fixed_rule(b).is_none() {
        return PartialOrdering::Unknown;
    }
    for (x, y) in tree.children(a).iter().zip(tree.children(b)) {
        match compare_partial(tree, *x, *y) {
            PartialOrdering::Equal => {}
            o => return o,
        }
    }
    PartialOrdering::Equal
}

/// Domain edits available to the deduction primitives. Implemented by the
/// solver (with propagation bookkeeping) and by a bare tree (without).
pub trait Narrow {
    fn tree(&self) -> &ProgramTree;

    /// Keeps only rules satisfying `keep` at `n`; returns false if the
    /// domain became empty.
    fn narrow(&mut self, n: NodeId, keep: &mut dyn FnMut(RuleId) -> bool) -> bool;
}

impl Narrow for ProgramTree {
    fn tree(&self) -> &ProgramTree {
        self
    }

    fn narrow(&mut self, n: NodeId, keep: &mut dyn FnMut(RuleId) -> bool) -> bool {
        self.retain(n, keep);
        !self.domain(n).is_empty()
    }
}

/// Prunes domains so that the subtree at `node` can only match `template`.
pub fn make_equal<'t, S: Narrow + ?Sized>(
    s: &mut S,
    node: NodeId,
    template: &'t TemplateTree,
    bindings: &mut Bindings<'t>,
) -> DeductionResult {
    let (children, ok) = match template {
        TemplateTree::Var(name) => {
            return match bindings.get(name) {
                None => {
                    bindings.insert(name, node);
                    DeductionResult::Success
                }
                Some(m) => make_equal_trees(s, m, node),
            };
        }
        TemplateTree::Value { rule, children } => (children, s.narrow(node, &mut |r| r == *rule)),
        TemplateTree::Domain { rules, children } => {
            (children, s.narrow(node, &mut |r| rules.binary_search(&r).is_ok()))
        }
    };
    if !ok {
        return DeductionResult::HardFail;
    }
    let mut result = if s.tree().fixed_rule(node).is_some() {
        DeductionResult::Success
    } else {
        DeductionResult::SoftFail
    };
    let kids = s.tree().children(node).to_vec();
    for (c, tc) in kids.into_iter().zip(children) {
        result = result.and(make_equal(s, c, tc, bindings));
        if result == DeductionResult::HardFail {
            break;
        }
    }
    result
}

/// Enforces structural equality of two subtrees by intersecting domains.
pub fn make_equal_trees<S: Narrow + ?Sized>(s: &mut S, a: NodeId, b: NodeId) -> DeductionResult {
    if a == b {
        return DeductionResult::Success;
    }
    let db = s.tree().domain(b).as_slice().to_vec();
    if !s.narrow(a, &mut |r| db.contains(&r)) {
        return DeductionResult::HardFail;
    }
    let da = s.tree().domain(a).as_slice().to_vec();
    if !s.narrow(b, &mut |r| da.contains(&r)) {
        return DeductionResult::HardFail;
    }
    let tree = s.tree();
    if !(tree.is_shaped(a) && tree.is_shaped(b)) {
        return DeductionResult::SoftFail;
    }
    let mut result = if tree.fixed_rule(a).is_some() && tree.fixed_rule(b).is_some() {
        DeductionResult::Success
    } else {
        DeductionResult::SoftFail
    };
    let pairs: Vec<(NodeId, NodeId)> = tree
        .children(a)
        .iter()
        .copied()
        .zip(tree.children(b).iter().copied())
        .collect();
    for (x, y) in pairs {
        result = result.and(make_equal_trees(s, x, y));
        if result == DeductionResult::HardFail {
            break;
        }
    }
    result
}

/// Enforces `a ≤ b` in the lex order using interval reasoning on root
/// domains, descending into the first undecided child when roots are equal.
pub fn make_less_than_or_equal<S: Narrow + ?Sized>(s: &mut S, a: NodeId, b: NodeId) -> DeductionResult {
    if a == b {
        return DeductionResult::Success;
    }
    let Some(bmax) = s.tree().domain(b).max() else {
        return DeductionResult::HardFail;
    };
    if !s.narrow(a, &mut |r| r <= bmax) {
        return DeductionResult::HardFail;
    }
    let amin = s.tree().domain(a).min().expect("non-empty after narrowing");
    if !s.narrow(b, &mut |r| r >= amin) {
        return DeductionResult::HardFail;
    }
    let tree = s.tree();
    match compare_partial(tree, a, b) {
        PartialOrdering::Less | PartialOrdering::Equal => DeductionResult::Success,
        PartialOrdering::Greater => DeductionResult::HardFail,
        PartialOrdering::Unknown => {
            let (Some(ra), Some(rb)) = (tree.fixed_rule(a), tree.fixed_rule(b)) else {
                return DeductionResult::SoftFail;
            };
            if ra != rb {
                return DeductionResult::SoftFail;
            }
            let pairs: Vec<(NodeId, NodeId)> = tree
                .children(a)
                .iter()
                .copied()
                .zip(tree.children(b).iter().copied())
                .collect();
            for (x, y) in pairs {
                match compare_partial(s.tree(), x, y) {
                    PartialOrdering::Equal => continue,
                    PartialOrdering::Less => return DeductionResult::Success,
                    PartialOrdering::Greater => return DeductionResult::HardFail,
                    PartialOrdering::Unknown => {
                        if make_less_than_or_equal(s, x, y) == DeductionResult::HardFail {
                            return DeductionResult::HardFail;
                        }
                        return match compare_partial(s.tree(), a, b) {
                            PartialOrdering::Less | PartialOrdering::Equal => DeductionResult::Success,
                            PartialOrdering::Greater => DeductionResult::HardFail,
                            PartialOrdering::Unknown => DeductionResult::SoftFail,
                        };
                    }
                }
            }
            DeductionResult::Success
        }
    }
}
