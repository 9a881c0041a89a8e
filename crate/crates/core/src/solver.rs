//! The decomposition solver: a partial program plus local constraints,
//! a propagation queue and a trail for backtracking.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering as AtomicOrdering};
use std::sync::Arc;

use thiserror::Error;

use crate::constraints::Constraint;
use crate::grammar::{Grammar, RuleId, TypeId};
use crate::matcher::{
    make_equal, make_less_than_or_equal, pattern_match, Bindings, DeductionResult, MatchResult, Narrow,
    TemplateTree,
};
use crate::program::Program;
use crate::tree::{Change, Checkpoint, NodeId, ProgramTree};

pub type LocalId = usize;

static NEXT_SOLVER_ID: AtomicU64 = AtomicU64::new(1);

fn fresh_id() -> u64 {
    NEXT_SOLVER_ID.fetch_add(1, AtomicOrdering::Relaxed)
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolverError {
    #[error("the solver state is infeasible")]
    Infeasible,
    #[error("node is not a hole")]
    NotAHole,
    #[error("node already has a single shape")]
    AlreadyUniform,
    #[error("state token belongs to another solver")]
    ForeignToken,
    #[error("state token already restored or discarded")]
    StaleToken,
    #[error("tree is not uniform")]
    NotUniform,
}

/// A global constraint rooted at a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalConstraint {
    pub constraint: usize,
    pub root: NodeId,
    pub active: bool,
}

/// Counters for instrumentation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Stats {
    /// Propagator invocations.
    pub propagations: u64,
    /// Local constraints posted.
    pub posted: u64,
    /// Local constraints deactivated.
    pub deactivated: u64,
}

impl std::ops::AddAssign for Stats {
    fn add_assign(&mut self, o: Stats) {
        self.propagations += o.propagations;
        self.posted += o.posted;
        self.deactivated += o.deactivated;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateToken {
    solver: u64,
    level: usize,
    serial: u64,
}

#[derive(Debug, Clone, Copy)]
struct Mark {
    tree: Checkpoint,
    locals: usize,
    deactivations: usize,
    feasible: bool,
    serial: u64,
}

#[derive(Debug)]
pub struct Solver {
    id: u64,
    grammar: Arc<Grammar>,
    constraints: Arc<[Constraint]>,
    tree: ProgramTree,
    locals: Vec<LocalConstraint>,
    // Locals re-scheduled by changes at or below their root.
    subtree_watch: Vec<Vec<LocalId>>,
    // Locals re-scheduled by changes at or above their root.
    chain_watch: Vec<Vec<LocalId>>,
    queue: VecDeque<LocalId>,
    queued: Vec<bool>,
    feasible: bool,
    posting: bool,
    deactivations: Vec<LocalId>,
    marks: Vec<Mark>,
    serial: u64,
    stats: Stats,
}

impl Clone for Solver {
    /// Forks an independent snapshot; tokens of the original do not apply.
    fn clone(&self) -> Self {
        Solver {
            id: fresh_id(),
            grammar: Arc::clone(&self.grammar),
            constraints: Arc::clone(&self.constraints),
            tree: self.tree.clone(),
            locals: self.locals.clone(),
            subtree_watch: self.subtree_watch.clone(),
            chain_watch: self.chain_watch.clone(),
            queue: self.queue.clone(),
            queued: self.queued.clone(),
            feasible: self.feasible,
            posting: self.posting,
            deactivations: self.deactivations.clone(),
            marks: self.marks.clone(),
            serial: self.serial,
            stats: self.stats,
        }
    }
}

impl Solver {
    /// Root hole of the start type, constraints posted and propagated.
    pub fn new(grammar: Arc<Grammar>, constraints: Arc<[Constraint]>) -> Self {
        let ty = grammar.start_type();
        Solver::with_type(grammar, constraints, ty)
    }

    pub fn with_type(grammar: Arc<Grammar>, constraints: Arc<[Constraint]>, ty: TypeId) -> Self {
        let tree = ProgramTree::new_hole(Arc::clone(&grammar), ty);
        Solver::from_tree(tree, constraints)
    }

    /// Posts constraints on every node of `tree` and runs the fixpoint.
    pub fn from_tree(tree: ProgramTree, constraints: Arc<[Constraint]>) -> Self {
        let mut s = Solver::deferred_from_tree(tree, constraints);
        s.activate();
        s
    }

    /// A solver that posts nothing until [`Solver::activate`] is called.
    /// Used for propagation inside uniform solvers only.
    pub fn deferred(grammar: Arc<Grammar>, constraints: Arc<[Constraint]>) -> Self {
        let tree = ProgramTree::new_hole(Arc::clone(&grammar), grammar.start_type());
        Solver::deferred_from_tree(tree, constraints)
    }

    pub fn deferred_from_tree(tree: ProgramTree, constraints: Arc<[Constraint]>) -> Self {
        let n = tree.arena_len();
        Solver {
            id: fresh_id(),
            grammar: Arc::clone(tree.grammar()),
            constraints,
            tree,
            locals: Vec::new(),
            subtree_watch: vec![Vec::new(); n],
            chain_watch: vec![Vec::new(); n],
            queue: VecDeque::new(),
            queued: Vec::new(),
            feasible: true,
            posting: false,
            deactivations: Vec::new(),
            marks: Vec::new(),
            serial: 0,
            stats: Stats::default(),
        }
    }

    /// Starts posting: local constraints are posted on every live node and
    /// on every node created later. Idempotent.
    pub fn activate(&mut self) {
        if self.posting {
            return;
        }
        self.posting = true;
        let root = self.tree.root();
        let constraints = Arc::clone(&self.constraints);
        for (i, c) in constraints.iter().enumerate() {
            if matches!(c, Constraint::Contains(_) | Constraint::Unique(_)) {
                self.post(i, root, false);
            }
        }
        for n in self.tree.subtree_nodes(root) {
            self.post_at(n);
        }
        self.fixpoint();
    }

    pub fn is_active(&self) -> bool {
        self.posting
    }

    pub fn grammar(&self) -> &Arc<Grammar> {
        &self.grammar
    }

    pub fn constraints(&self) -> &Arc<[Constraint]> {
        &self.constraints
    }

    pub fn tree(&self) -> &ProgramTree {
        &self.tree
    }

    pub fn is_feasible(&self) -> bool {
        self.feasible
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    /// Returns the counters and resets them, so forks count only their own
    /// work.
    pub fn take_stats(&mut self) -> Stats {
        std::mem::take(&mut self.stats)
    }

    pub fn locals(&self) -> &[LocalConstraint] {
        &self.locals
    }

    pub fn active_locals(&self) -> usize {
        self.locals.iter().filter(|l| l.active).count()
    }

    /// Removes `rule` from the domain of hole `n` and propagates.
    pub fn remove(&mut self, n: NodeId, rule: RuleId) -> Result<(), SolverError> {
        self.check_hole(n)?;
        self.narrow(n, &mut |r| r != rule);
        self.fixpoint();
        Ok(())
    }

    /// Restricts hole `n` to `keep` and propagates.
    pub fn remove_all_but(&mut self, n: NodeId, keep: &[RuleId]) -> Result<(), SolverError> {
        self.check_hole(n)?;
        self.narrow(n, &mut |r| keep.contains(&r));
        self.fixpoint();
        Ok(())
    }

    /// Fixes the subtree at hole `n` to `program` and propagates. Rules
    /// outside the current domains make the state infeasible.
    pub fn substitute(&mut self, n: NodeId, program: &Program) -> Result<(), SolverError> {
        self.check_hole(n)?;
        let template = program_template(program);
        if make_equal(self, n, &template, &mut Bindings::new()) == DeductionResult::HardFail {
            self.feasible = false;
        }
        self.fixpoint();
        Ok(())
    }

    /// The shape partition of a non-uniform hole.
    pub fn partition_hole(&self, n: NodeId) -> Result<Vec<Vec<RuleId>>, SolverError> {
        if self.tree.is_shaped(n) {
            return Err(SolverError::AlreadyUniform);
        }
        Ok(self
            .grammar
            .shape_partition(self.tree.domain(n).as_slice())
            .expect("node domains share one type"))
    }

    fn check_hole(&self, n: NodeId) -> Result<(), SolverError> {
        if !self.feasible {
            return Err(SolverError::Infeasible);
        }
        if self.tree.fixed_rule(n).is_some() {
            return Err(SolverError::NotAHole);
        }
        Ok(())
    }

    pub fn save_state(&mut self) -> StateToken {
        self.serial += 1;
        let tree = self.tree.save();
        self.marks.push(Mark {
            tree,
            locals: self.locals.len(),
            deactivations: self.deactivations.len(),
            feasible: self.feasible,
            serial: self.serial,
        });
        StateToken {
            solver: self.id,
            level: self.marks.len() - 1,
            serial: self.serial,
        }
    }

    /// Restores the state saved as `token`, discarding later tokens.
    pub fn load_state(&mut self, token: StateToken) -> Result<(), SolverError> {
        if token.solver != self.id {
            return Err(SolverError::ForeignToken);
        }
        match self.marks.get(token.level) {
            Some(m) if m.serial == token.serial => {}
            _ => return Err(SolverError::StaleToken),
        }
        let mark = self.marks[token.level];
        self.marks.truncate(token.level);
        self.tree.restore(mark.tree).map_err(|_| SolverError::StaleToken)?;
        let n = self.tree.arena_len();
        self.subtree_watch.truncate(n);
        self.chain_watch.truncate(n);
        for l in self.deactivations.drain(mark.deactivations..) {
            if l < mark.locals {
                self.locals[l].active = true;
            }
        }
        self.locals.truncate(mark.locals);
        self.queue.clear();
        self.queued.clear();
        self.queued.resize(self.locals.len(), false);
        self.feasible = mark.feasible;
        Ok(())
    }

    /// Propagates scheduled local constraints until nothing changes.
    pub fn fixpoint(&mut self) {
        while let Some(l) = self.queue.pop_front() {
            self.queued[l] = false;
            if !self.feasible || !self.locals[l].active {
                continue;
            }
            self.stats.propagations += 1;
            self.propagate(l);
        }
    }

    fn schedule(&mut self, l: LocalId) {
        if self.locals[l].active && !self.queued[l] {
            self.queued[l] = true;
            self.queue.push_back(l);
        }
    }

    fn deactivate(&mut self, l: LocalId) {
        if self.locals[l].active {
            self.locals[l].active = false;
            self.stats.deactivated += 1;
            if !self.marks.is_empty() {
                self.deactivations.push(l);
            }
        }
    }

    fn post(&mut self, constraint: usize, root: NodeId, chain: bool) {
        let id = self.locals.len();
        self.locals.push(LocalConstraint {
            constraint,
            root,
            active: true,
        });
        self.queued.push(false);
        self.stats.posted += 1;
        if chain {
            self.chain_watch[root.index()].push(id);
        } else {
            self.subtree_watch[root.index()].push(id);
        }
        self.schedule(id);
    }

    // Posts the per-node constraints whose type filter admits `n`.
    fn post_at(&mut self, n: NodeId) {
        let ty = self.tree.node_type(n);
        let constraints = Arc::clone(&self.constraints);
        for (i, c) in constraints.iter().enumerate() {
            match c {
                Constraint::Forbid(t) | Constraint::Ordered { template: t, .. } => {
                    if t.root_type(&self.grammar).is_none_or(|rt| rt == ty) {
                        self.post(i, n, false);
                    }
                }
                Constraint::ForbiddenSequence { sequence, .. } => {
                    let last = *sequence.last().expect("validated non-empty");
                    if self.grammar.return_type(last) == ty {
                        self.post(i, n, true);
                    }
                }
                Constraint::Contains(_) | Constraint::Unique(_) => {}
            }
        }
    }

    // Bookkeeping after a domain edit at `n`.
    fn apply(&mut self, n: NodeId, change: Change) {
        if change.is_noop() {
            return;
        }
        let len = self.tree.arena_len();
        self.subtree_watch.resize_with(len, Vec::new);
        self.chain_watch.resize_with(len, Vec::new);
        if self.tree.domain(n).is_empty() {
            self.feasible = false;
            return;
        }
        if !self.posting {
            return;
        }
        let mut cur = Some(n);
        while let Some(a) = cur {
            for i in 0..self.subtree_watch[a.index()].len() {
                let l = self.subtree_watch[a.index()][i];
                self.schedule(l);
            }
            cur = self.tree.parent(a);
        }
        for d in self.tree.subtree_nodes(n) {
            for i in 0..self.chain_watch[d.index()].len() {
                let l = self.chain_watch[d.index()][i];
                self.schedule(l);
            }
        }
        for c in change.created_nodes() {
            self.post_at(c);
        }
    }

    fn propagate(&mut self, l: LocalId) {
        let constraints = Arc::clone(&self.constraints);
        match &constraints[self.locals[l].constraint] {
            Constraint::Forbid(t) => self.propagate_forbid(l, t),
            Constraint::Contains(t) => self.propagate_contains(l, t),
            Constraint::Unique(t) => self.propagate_unique(l, t),
            Constraint::Ordered { template, order } => self.propagate_ordered(l, template, order),
            Constraint::ForbiddenSequence {
                sequence,
                ignore_if,
            } => self.propagate_forbidden_sequence(l, sequence, ignore_if),
        }
    }

    fn propagate_forbid(&mut self, l: LocalId, t: &TemplateTree) {
        let root = self.locals[l].root;
        match pattern_match(&self.tree, root, t, Bindings::new()) {
            MatchResult::HardFail => self.deactivate(l),
            MatchResult::Success(_) => self.feasible = false,
            MatchResult::SuccessWhenHoleAssignedTo { hole, rule, .. } => {
                self.narrow(hole, &mut |r| r != rule);
                self.deactivate(l);
            }
            MatchResult::SoftFail => {}
        }
    }

    fn candidates(&self, root: NodeId, t: &TemplateTree) -> (Vec<NodeId>, bool) {
        let ty = t.root_type(&self.grammar);
        let nodes = self.tree.subtree_nodes(root);
        let open = nodes.iter().any(|n| !self.tree.is_shaped(*n));
        let nodes = nodes
            .into_iter()
            .filter(|n| ty.is_none_or(|t| t == self.tree.node_type(*n)))
            .collect();
        (nodes, open)
    }

    fn propagate_contains(&mut self, l: LocalId, t: &TemplateTree) {
        let (nodes, open) = self.candidates(self.locals[l].root, t);
        let mut left = Vec::new();
        for n in nodes {
            match pattern_match(&self.tree, n, t, Bindings::new()) {
                MatchResult::Success(_) => {
                    self.deactivate(l);
                    return;
                }
                MatchResult::HardFail => {}
                _ => left.push(n),
            }
        }
        // A hole that still spans several shapes may grow new candidates.
        if open {
            return;
        }
        match left.as_slice() {
            [] => self.feasible = false,
            [only] => match make_equal(self, *only, t, &mut Bindings::new()) {
                DeductionResult::HardFail => self.feasible = false,
                DeductionResult::Success => self.deactivate(l),
                DeductionResult::SoftFail => {}
            },
            _ => {}
        }
    }

    fn propagate_unique(&mut self, l: LocalId, t: &TemplateTree) {
        let (nodes, _) = self.candidates(self.locals[l].root, t);
        let mut matched = 0;
        let mut conditional = Vec::new();
        for n in nodes {
            match pattern_match(&self.tree, n, t, Bindings::new()) {
                MatchResult::Success(_) => matched += 1,
                MatchResult::SuccessWhenHoleAssignedTo { hole, rule, .. } => conditional.push((hole, rule)),
                MatchResult::HardFail | MatchResult::SoftFail => {}
            }
        }
        if matched >= 2 {
            self.feasible = false;
        } else if matched == 1 {
            // Every other occurrence is forbidden.
            for (hole, rule) in conditional {
                if !self.narrow(hole, &mut |r| r != rule) {
                    return;
                }
            }
        }
    }

    fn propagate_ordered(&mut self, l: LocalId, t: &TemplateTree, order: &[String]) {
        let root = self.locals[l].root;
        let bindings = match pattern_match(&self.tree, root, t, Bindings::new()) {
            MatchResult::HardFail => {
                self.deactivate(l);
                return;
            }
            MatchResult::Success(b) => b,
            _ => return,
        };
        let mut settled = true;
        for pair in order.windows(2) {
            let (Some(a), Some(b)) = (bindings.get(&pair[0]), bindings.get(&pair[1])) else {
                continue;
            };
            match make_less_than_or_equal(self, a, b) {
                DeductionResult::HardFail => {
                    self.feasible = false;
                    return;
                }
                DeductionResult::SoftFail => settled = false,
                DeductionResult::Success => {}
            }
        }
        if settled {
            self.deactivate(l);
        }
    }

    // The local's root is the candidate last element; the ancestor chain
    // supplies the earlier ones. Tracks witnesses of a violation that need
    // at most one further fact, so single-fact witnesses can be refuted.
    fn propagate_forbidden_sequence(&mut self, l: LocalId, seq: &[RuleId], ignore: &[RuleId]) {
        let n = self.locals[l].root;
        let k = seq.len();
        let mut chain: Vec<NodeId> = self.tree.ancestors(n).collect();
        chain.reverse();
        let mut state = vec![Witness::NONE; k];
        for &y in &chain {
            let between = self.between_fact(y, ignore);
            let mut next = vec![Witness::NONE; k];
            for j in 1..k {
                next[j] = state[j].with(between);
            }
            for j in 1..k - 1 {
                let w = state[j].with(self.element_fact(y, seq[j]));
                next[j + 1].merge(&w);
            }
            next[1].merge(&Witness::CERTAIN.with(self.element_fact(y, seq[0])));
            state = next;
        }
        let result = state[k - 1].with(self.element_fact(n, seq[k - 1]));
        if !result.possible {
            self.deactivate(l);
        } else if result.certain {
            self.feasible = false;
        } else {
            for fact in result.facts.into_iter().flatten() {
                let ok = match fact {
                    Fact::Is(node, rule) => self.narrow(node, &mut |r| r != rule),
                    Fact::NotIgnored(node) => self.narrow(node, &mut |r| ignore.contains(&r)),
                };
                if !ok {
                    return;
                }
            }
        }
    }

    fn element_fact(&self, y: NodeId, rule: RuleId) -> Step {
        let d = self.tree.domain(y);
        if !d.contains(rule) {
            Step::Impossible
        } else if d.len() == 1 {
            Step::Certain
        } else {
            Step::Needs(Fact::Is(y, rule))
        }
    }

    fn between_fact(&self, y: NodeId, ignore: &[RuleId]) -> Step {
        let d = self.tree.domain(y);
        let ignored = d.iter().filter(|r| ignore.contains(r)).count();
        if ignored == d.len() {
            Step::Impossible
        } else if ignored == 0 {
            Step::Certain
        } else {
            Step::Needs(Fact::NotIgnored(y))
        }
    }
}

impl Narrow for Solver {
    fn tree(&self) -> &ProgramTree {
        &self.tree
    }

    fn narrow(&mut self, n: NodeId, keep: &mut dyn FnMut(RuleId) -> bool) -> bool {
        if !self.feasible {
            return false;
        }
        let change = self.tree.retain(n, keep);
        self.apply(n, change);
        !self.tree.domain(n).is_empty()
    }
}

fn program_template(p: &Program) -> TemplateTree {
    TemplateTree::value(p.rule, p.children.iter().map(program_template).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Fact {
    Is(NodeId, RuleId),
    NotIgnored(NodeId),
}

#[derive(Debug, Clone, Copy)]
enum Step {
    Impossible,
    Certain,
    Needs(Fact),
}

// Witnesses of a (partial) violation: whether any exists, whether one needs
// no uncertain fact, and the facts of those needing exactly one.
#[derive(Debug, Clone, Copy)]
struct Witness {
    possible: bool,
    certain: bool,
    facts: [Option<Fact>; 4],
    overflow: bool,
}

impl Witness {
    const NONE: Witness = Witness {
        possible: false,
        certain: false,
        facts: [None; 4],
        overflow: false,
    };
    const CERTAIN: Witness = Witness {
        possible: true,
        certain: true,
        facts: [None; 4],
        overflow: false,
    };

    fn with(&self, step: Step) -> Witness {
        if !self.possible {
            return Witness::NONE;
        }
        match step {
            Step::Impossible => Witness::NONE,
            Step::Certain => *self,
            Step::Needs(f) => {
                let mut w = Witness {
                    possible: true,
                    certain: false,
                    facts: [None; 4],
                    overflow: false,
                };
                if self.certain {
                    w.facts[0] = Some(f);
                }
                w
            }
        }
    }

    fn merge(&mut self, other: &Witness) {
        self.possible |= other.possible;
        self.certain |= other.certain;
        self.overflow |= other.overflow;
        for f in other.facts.iter().flatten() {
            if self.facts.contains(&Some(*f)) {
                continue;
            }
            match self.facts.iter_mut().find(|s| s.is_none()) {
                Some(slot) => *slot = Some(*f),
                // Dropping a single-fact witness only weakens pruning.
                None => self.overflow = true,
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::parse_constraints;
    use crate::tree::{NodeKind, Path};

    fn arith() -> Arc<Grammar> {
        Arc::new(
            Grammar::parse(
                "Int -> +(Int, Int)\nInt -> *(Int, Int)\nInt -> -(Int, Int)\n\
                 Int -> 0 | 1 | 2 | 3 | 4 | 5 | 6 | 7 | 8 | 9\nInt -> x",
            )
            .unwrap(),
        )
    }

    fn robots() -> Arc<Grammar> {
        Arc::new(
            Grammar::parse(
                "S -> moveRight(S) | moveDown(S) | moveLeft(S) | moveUp(S) | drop(S) | grab(S)\nS -> return",
            )
            .unwrap(),
        )
    }

    fn cs(g: &Grammar, src: &str) -> Arc<[Constraint]> {
        parse_constraints(g, src).unwrap().into()
    }

    fn r(g: &Grammar, l: &str) -> RuleId {
        g.rule_by_label(l).unwrap()
    }

    #[test]
    fn local_posting_and_deletion_on_five_node_tree() {
        let g = arith();
        let tree = ProgramTree::parse(g.clone(), "{+,*}({1,x,-},{+,*}(1,{1,+,*}))").unwrap();
        let s = Solver::from_tree(tree, cs(&g, "(forbid (rule * 1 :a))"));
        assert!(s.is_feasible());
        assert_eq!(s.stats().posted, 5);
        assert_eq!(s.stats().deactivated, 3);
        assert_eq!(s.active_locals(), 2);
        assert_eq!(s.tree().display(), "{+,*}({-,1,x},+(1,{+,1,*}))".replace("{+,1,*}", "{+,*,1}"));
    }

    #[test]
    fn conditional_forbid_removes_rule() {
        let g = arith();
        let tree = ProgramTree::parse(g.clone(), "{+,*}(1,x)").unwrap();
        let s = Solver::from_tree(tree, cs(&g, "(forbid (rule * 1 :a))"));
        assert_eq!(s.tree().display(), "+(1,x)");
        let tree = ProgramTree::parse(g.clone(), "*(1,{1,x})").unwrap();
        let s = Solver::from_tree(tree, cs(&g, "(forbid (rule * 1 :a))"));
        assert!(!s.is_feasible());
    }

    #[test]
    fn contains_single_candidate_is_forced() {
        let g = arith();
        let tree = ProgramTree::parse(g.clone(), "+(1,{0,1,2,3,4,5,6,7,8,9,x})").unwrap();
        let s = Solver::from_tree(tree, cs(&g, "(contains x)"));
        assert_eq!(s.tree().display(), "+(1,x)");
        assert_eq!(s.active_locals(), 0);
        let tree = ProgramTree::parse(g.clone(), "+({1,x},{1,x})").unwrap();
        let s = Solver::from_tree(tree, cs(&g, "(contains x)"));
        assert_eq!(s.tree().display(), "+({1,x},{1,x})");
        assert_eq!(s.active_locals(), 1);
        let tree = ProgramTree::parse(g.clone(), "+(1,1)").unwrap();
        let s = Solver::from_tree(tree, cs(&g, "(contains x)"));
        assert!(!s.is_feasible());
    }

    #[test]
    fn unique_examples() {
        let g = robots();
        let c = cs(&g, "(unique (rule grab :a))");
        let s = Solver::from_tree(ProgramTree::parse(g.clone(), "grab(grab(return))").unwrap(), c.clone());
        assert!(!s.is_feasible());
        let s = Solver::from_tree(
            ProgramTree::parse(
                g.clone(),
                "grab({moveRight,moveDown,moveLeft,moveUp,drop,grab}(return))",
            )
            .unwrap(),
            c.clone(),
        );
        let hole = s.tree().node_at(&Path(vec![1])).unwrap();
        assert!(!s.tree().domain(hole).contains(r(&g, "grab")));
        assert_eq!(s.tree().domain(hole).len(), 5);
    }

    #[test]
    fn ordered_examples() {
        let g = arith();
        let c = cs(&g, "(ordered (domain (+ *) :a :b) (a b))");
        let s = Solver::from_tree(ProgramTree::parse(g.clone(), "*(x,1)").unwrap(), c.clone());
        assert!(!s.is_feasible());
        let s = Solver::from_tree(ProgramTree::parse(g.clone(), "+(1,x)").unwrap(), c.clone());
        assert!(s.is_feasible());
        assert_eq!(s.active_locals(), 0);
        let s = Solver::from_tree(
            ProgramTree::parse(g.clone(), "+({+,*}(1,1),{+,*}(1,1))").unwrap(),
            c.clone(),
        );
        assert!(s.is_feasible());
        assert!(s.locals()[0].active);
    }

    #[test]
    fn forbidden_sequence_examples() {
        let g = robots();
        let c = cs(&g, "(forbidden-sequence (moveLeft moveRight) (ignore drop grab))");
        let s = Solver::from_tree(
            ProgramTree::parse(
                g.clone(),
                "moveLeft({moveRight,moveDown,moveLeft,moveUp,drop,grab}(return))",
            )
            .unwrap(),
            c.clone(),
        );
        let hole = s.tree().node_at(&Path(vec![1])).unwrap();
        assert!(!s.tree().domain(hole).contains(r(&g, "moveRight")));
        assert_eq!(s.tree().domain(hole).len(), 5);

        let s = Solver::from_tree(
            ProgramTree::parse(
                g.clone(),
                "moveLeft(grab({moveRight,moveDown,moveLeft,moveUp,drop,grab}(return)))",
            )
            .unwrap(),
            c.clone(),
        );
        let hole = s.tree().node_at(&Path(vec![1, 1])).unwrap();
        assert_eq!(s.tree().domain(hole).len(), 6);

        let s = Solver::from_tree(
            ProgramTree::parse(g.clone(), "moveLeft(moveRight(return))").unwrap(),
            c,
        );
        assert!(!s.is_feasible());
    }

    #[test]
    fn uniformization_on_remove_all_but() {
        let g = arith();
        let mut s = Solver::new(g.clone(), cs(&g, "(ordered (rule + :a :b) (a b))"));
        let root = s.tree().root();
        assert_eq!(s.tree().kind(root), NodeKind::Hole);
        s.remove_all_but(root, &[r(&g, "+"), r(&g, "*"), r(&g, "-")]).unwrap();
        assert_eq!(s.tree().kind(root), NodeKind::UniformHole);
        assert_eq!(s.tree().children(root).len(), 2);
        // One local at the root, one at each new child.
        assert_eq!(s.locals().len(), 3);
    }

    #[test]
    fn emptying_a_domain_is_infeasible() {
        let g = arith();
        let mut s = Solver::new(g.clone(), cs(&g, ""));
        let root = s.tree().root();
        s.remove_all_but(root, &[r(&g, "x")]).unwrap();
        assert_eq!(s.remove(root, r(&g, "x")), Err(SolverError::NotAHole));
        let mut s = Solver::from_tree(ProgramTree::parse(g.clone(), "{1,x}").unwrap(), cs(&g, ""));
        let root = s.tree().root();
        s.remove(root, r(&g, "x")).unwrap();
        s.remove(root, r(&g, "1")).unwrap_err();
    }

    #[test]
    fn save_and_load_restore_domains_and_activation() {
        let g = arith();
        let tree = ProgramTree::parse(g.clone(), "{+,*}({1,x},{1,x})").unwrap();
        let mut s = Solver::from_tree(tree, cs(&g, "(forbid (rule * 1 :a))"));
        let before = (s.tree().display(), s.active_locals());
        let token = s.save_state();
        let a = s.tree().node_at(&Path(vec![1])).unwrap();
        s.remove(a, r(&g, "x")).unwrap();
        assert_eq!(s.tree().display(), "+(1,{1,x})");
        s.load_state(token).unwrap();
        assert_eq!((s.tree().display(), s.active_locals()), before);
        assert_eq!(s.load_state(token), Err(SolverError::StaleToken));
        let mut other = s.clone();
        let t2 = other.save_state();
        assert_eq!(s.load_state(t2), Err(SolverError::ForeignToken));
    }

    #[test]
    fn forks_are_independent() {
        let g = arith();
        let s = Solver::new(g.clone(), cs(&g, ""));
        let root = s.tree().root();
        let parts = s.partition_hole(root).unwrap();
        assert_eq!(parts.len(), 2);
        let mut forks: Vec<Solver> = (0..3).map(|_| s.clone()).collect();
        forks[0].remove_all_but(root, &parts[0]).unwrap();
        assert_eq!(forks[1].tree().domain(root).len(), 14);
        assert_eq!(forks[2].tree().domain(root).len(), 14);
        assert_eq!(forks[0].tree().domain(root).len(), 3);
    }

    #[test]
    fn fixpoint_is_idempotent() {
        let g = arith();
        let tree = ProgramTree::parse(g.clone(), "{+,*}({1,x,-},{+,*}(1,{1,+,*}))").unwrap();
        let mut s = Solver::from_tree(tree, cs(&g, "(forbid (rule * 1 :a))"));
        let before = (s.tree().display(), s.active_locals(), s.stats().propagations);
        s.fixpoint();
        assert_eq!((s.tree().display(), s.active_locals(), s.stats().propagations), before);
    }
}
