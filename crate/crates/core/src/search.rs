//! Top-down (priority queue) and bottom-up (bank) enumeration.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;

use crate::constraints::{check_all, Constraint};
use crate::grammar::{Grammar, TypeId};
use crate::program::Program;
use crate::solver::{Solver, Stats};
use crate::tree::ProgramTree;
use crate::uniform::UniformSolver;

/// How constraints are applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    /// Constraints ignored.
    None,
    /// Plain enumeration, then filtering.
    Check,
    /// Propagation in both solvers.
    Propagate,
    /// Propagation inside uniform solvers only.
    UniformOnly,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::None, Mode::Check, Mode::Propagate, Mode::UniformOnly];

    pub fn name(self) -> &'static str {
        match self {
            Mode::None => "none",
            Mode::Check => "check",
            Mode::Propagate => "propagate",
            Mode::UniformOnly => "uniform-only",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown mode `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    TopDownBfs,
    TopDownDfs,
    BottomUp,
}

impl Strategy {
    pub const ALL: [Strategy; 3] = [Strategy::TopDownBfs, Strategy::TopDownDfs, Strategy::BottomUp];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::TopDownBfs => "top-down-bfs",
            Strategy::TopDownDfs => "top-down-dfs",
            Strategy::BottomUp => "bottom-up",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Strategy::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown search strategy `{s}`"))
    }
}

/// Size (node count) and depth (root = 1) limits; `None` is unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Bounds {
    pub max_size: Option<usize>,
    pub max_depth: Option<usize>,
}

impl Bounds {
    pub fn size(n: usize) -> Self {
        Bounds {
            max_size: Some(n),
            max_depth: None,
        }
    }

    pub fn depth(n: usize) -> Self {
        Bounds {
            max_size: None,
            max_depth: Some(n),
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.max_size.is_some() || self.max_depth.is_some()
    }

    pub fn admits(&self, size: usize, depth: usize) -> bool {
        self.max_size.is_none_or(|m| size <= m) && self.max_depth.is_none_or(|m| depth <= m)
    }

    fn admits_tree(&self, t: &ProgramTree) -> bool {
        match (t.min_completion_size(), t.min_completion_depth()) {
            (Some(s), Some(d)) => self.admits(s, d),
            _ => false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchConfig {
    pub mode: Mode,
    pub strategy: Strategy,
    pub bounds: Bounds,
    /// Worker threads for counting; 0 counts on the calling thread.
    pub threads: usize,
}

impl SearchConfig {
    pub fn new(mode: Mode, strategy: Strategy, bounds: Bounds) -> Self {
        SearchConfig {
            mode,
            strategy,
            bounds,
            threads: 0,
        }
    }
}

fn empty() -> Arc<[Constraint]> {
    Arc::from(Vec::new())
}

enum Entry {
    State(Solver),
    Uniform(UniformSolver),
}

struct Item {
    size: usize,
    seq: u64,
    entry: Entry,
}

impl PartialEq for Item {
    fn eq(&self, o: &Self) -> bool {
        (self.size, self.seq) == (o.size, o.seq)
    }
}

impl Eq for Item {}

impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

impl Ord for Item {
    // Reversed: the heap pops the smallest key.
    fn cmp(&self, o: &Self) -> Ordering {
        (o.size, o.seq).cmp(&(self.size, self.seq))
    }
}

/// Top-down enumeration: states are split on their first non-uniform hole
/// until uniform, then handed to uniform solvers.
pub struct TopDown {
    heap: BinaryHeap<Item>,
    counter: u64,
    dfs: bool,
    bounds: Bounds,
    filter: Option<Arc<[Constraint]>>,
    stats: Stats,
}

impl TopDown {
    pub fn new(grammar: Arc<Grammar>, constraints: Arc<[Constraint]>, mode: Mode, bounds: Bounds, dfs: bool) -> Self {
        let (root, filter) = match mode {
            Mode::None => (Solver::new(grammar, empty()), None),
            Mode::Check => (Solver::new(grammar, empty()), Some(constraints)),
            Mode::Propagate => (Solver::new(grammar, constraints), None),
            Mode::UniformOnly => (Solver::deferred(grammar, constraints), None),
        };
        let mut td = TopDown {
            heap: BinaryHeap::new(),
            counter: 0,
            dfs,
            bounds,
            filter,
            stats: Stats::default(),
        };
        td.push_state(root);
        td
    }

    /// Propagation counters accumulated so far.
    pub fn stats(&self) -> Stats {
        self.stats
    }

    fn push(&mut self, size: usize, entry: Entry) {
        self.counter += 1;
        let seq = if self.dfs { u64::MAX - self.counter } else { self.counter };
        self.heap.push(Item { size, seq, entry });
    }

    fn push_state(&mut self, mut s: Solver) {
        if s.is_feasible() && self.bounds.admits_tree(s.tree()) {
            let size = s.tree().min_completion_size().expect("admitted trees complete");
            self.push(size, Entry::State(s));
        } else {
            self.stats += s.take_stats();
        }
    }

    // Splits a state; returns it back when it is already uniform.
    fn expand(&mut self, mut s: Solver) -> Option<Solver> {
        self.stats += s.take_stats();
        let Some(hole) = s.tree().first_nonuniform_hole() else {
            return Some(s);
        };
        let parts = s.partition_hole(hole).expect("hole is not uniform");
        for part in parts {
            let mut f = s.clone();
            f.remove_all_but(hole, &part).expect("fork is feasible");
            self.push_state(f);
        }
        None
    }

    fn accepts(&self, p: &Program) -> bool {
        self.filter.as_ref().is_none_or(|c| check_all(c, p))
    }

    /// Runs decomposition only, returning the next uniform solver.
    pub fn next_uniform(&mut self) -> Option<UniformSolver> {
        while let Some(item) = self.heap.pop() {
            match item.entry {
                Entry::State(s) => {
                    if let Some(s) = self.expand(s) {
                        return Some(UniformSolver::new(s).expect("state is uniform"));
                    }
                }
                Entry::Uniform(u) => return Some(u),
            }
        }
        None
    }

    /// Counts valid programs per size (index = size).
    pub fn count_by_size(mut self, threads: usize) -> (Vec<u64>, Stats) {
        let mut by_size = Vec::new();
        let filter = self.filter.clone();
        let count_one = |mut u: UniformSolver| -> (usize, u64, Stats) {
            let size = u.program_size();
            let n = match &filter {
                None => u.count_remaining(),
                Some(c) => {
                    let mut n = 0;
                    while let Some(p) = u.next_solution() {
                        n += u64::from(check_all(c, &p));
                    }
                    n
                }
            };
            (size, n, u.take_stats())
        };
        let add = |by_size: &mut Vec<u64>, (size, n, st): (usize, u64, Stats), stats: &mut Stats| {
            if by_size.len() <= size {
                by_size.resize(size + 1, 0);
            }
            by_size[size] += n;
            *stats += st;
        };
        let mut stats = Stats::default();
        if threads == 0 {
            while let Some(u) = self.next_uniform() {
                add(&mut by_size, count_one(u), &mut stats);
            }
        } else {
            let mut all = Vec::new();
            while let Some(u) = self.next_uniform() {
                all.push(u);
            }
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .expect("thread pool");
            let results: Vec<_> = pool.install(|| all.into_par_iter().map(count_one).collect());
            for r in results {
                add(&mut by_size, r, &mut stats);
            }
        }
        stats += self.stats;
        (by_size, stats)
    }
}

impl Iterator for TopDown {
    type Item = Program;

    fn next(&mut self) -> Option<Program> {
        while let Some(item) = self.heap.pop() {
            match item.entry {
                Entry::State(s) => {
                    if let Some(s) = self.expand(s) {
                        let u = UniformSolver::new(s).expect("state is uniform");
                        self.push(item.size, Entry::Uniform(u));
                    }
                }
                Entry::Uniform(mut u) => {
                    let Some(p) = u.next_solution() else {
                        self.stats += u.take_stats();
                        continue;
                    };
                    self.stats += u.take_stats();
                    self.push(item.size, Entry::Uniform(u));
                    if self.accepts(&p) {
                        return Some(p);
                    }
                }
            }
        }
        None
    }
}

/// Enumeration ignoring constraints, filtered afterwards.
pub fn enumerate_checked(grammar: Arc<Grammar>, constraints: Arc<[Constraint]>, bounds: Bounds) -> TopDown {
    TopDown::new(grammar, constraints, Mode::Check, bounds, false)
}

/// One uniform tree of the bank and what it holds.
#[derive(Debug, Clone)]
pub struct BankEntry {
    /// The tree after the initial propagation.
    pub tree: ProgramTree,
    pub level: usize,
    pub size: usize,
    /// Completions satisfying the bank constraints.
    pub valid: u64,
    /// Product of domain sizes: the completions the tree stands for.
    pub represented: u128,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LevelReport {
    pub level: usize,
    pub trees: usize,
    pub programs: u64,
    pub represented: u128,
}

/// Bottom-up enumeration by depth level. Level 1 groups the terminals of
/// each type; level `d` fills each shape group of non-terminal rules with
/// bank trees of lower levels, at least one of them from level `d - 1`.
pub struct BottomUp {
    grammar: Arc<Grammar>,
    mode: Mode,
    bounds: Bounds,
    max_level: usize,
    bank_constraints: Arc<[Constraint]>,
    filter: Option<Arc<[Constraint]>>,
    entries: Vec<BankEntry>,
    by_type: HashMap<TypeId, Vec<usize>>,
    level: usize,
    pending: std::vec::IntoIter<Program>,
    reports: Vec<LevelReport>,
    stats: Stats,
}

impl BottomUp {
    pub fn new(grammar: Arc<Grammar>, constraints: Arc<[Constraint]>, mode: Mode, bounds: Bounds) -> Self {
        let max_level = match (bounds.max_depth, bounds.max_size) {
            (Some(d), Some(s)) => d.min(s),
            (Some(d), None) => d,
            (None, Some(s)) => s,
            (None, None) => panic!("bottom-up search needs a bound"),
        };
        // Violations of subtree-closed constraints persist in every
        // enclosing program, so only those may prune the bank.
        let (bank_constraints, filter): (Arc<[Constraint]>, Option<Arc<[Constraint]>>) = match mode {
            Mode::None => (empty(), None),
            Mode::Check => (empty(), Some(constraints)),
            Mode::Propagate | Mode::UniformOnly => {
                let (closed, open): (Vec<_>, Vec<_>) =
                    constraints.iter().cloned().partition(Constraint::is_subtree_closed);
                (closed.into(), (!open.is_empty()).then(|| open.into()))
            }
        };
        BottomUp {
            grammar,
            mode,
            bounds,
            max_level,
            bank_constraints,
            filter,
            entries: Vec::new(),
            by_type: HashMap::new(),
            level: 0,
            pending: Vec::new().into_iter(),
            reports: Vec::new(),
            stats: Stats::default(),
        }
    }

    pub fn bank(&self) -> &[BankEntry] {
        &self.entries
    }

    pub fn reports(&self) -> &[LevelReport] {
        &self.reports
    }

    pub fn stats(&self) -> Stats {
        self.stats
    }

    /// Builds every remaining level, returning the per-level reports.
    pub fn build_all(&mut self) -> &[LevelReport] {
        while self.level < self.max_level {
            let _ = self.build_level();
        }
        &self.reports
    }

    fn solver_for(&self, tree: ProgramTree) -> Solver {
        match self.mode {
            Mode::UniformOnly => Solver::deferred_from_tree(tree, Arc::clone(&self.bank_constraints)),
            _ => Solver::from_tree(tree, Arc::clone(&self.bank_constraints)),
        }
    }

    // Enumerates `tree`, banks it when some completion is valid and returns
    // the completions of the start type passing the output filter.
    fn add_tree(&mut self, tree: ProgramTree, level: usize, out: &mut Vec<Program>, report: &mut LevelReport) {
        let size = tree.size();
        let ty = tree.node_type(tree.root());
        let mut u = UniformSolver::new(self.solver_for(tree)).expect("composed trees are uniform");
        let emit = ty == self.grammar.start_type();
        let mut valid = 0;
        while let Some(p) = u.next_solution() {
            valid += 1;
            if emit && self.filter.as_ref().is_none_or(|c| check_all(c, &p)) {
                out.push(p);
            }
        }
        self.stats += u.take_stats();
        if valid == 0 {
            return;
        }
        let tree = u.tree().clone();
        let represented = tree
            .subtree_nodes(tree.root())
            .iter()
            .map(|n| tree.domain(*n).len() as u128)
            .product();
        report.trees += 1;
        report.programs += valid;
        report.represented += represented;
        self.by_type.entry(ty).or_default().push(self.entries.len());
        self.entries.push(BankEntry {
            tree,
            level,
            size,
            valid,
            represented,
        });
    }

    fn build_level(&mut self) -> Vec<Program> {
        self.level += 1;
        let d = self.level;
        let g = Arc::clone(&self.grammar);
        let mut out = Vec::new();
        let mut report = LevelReport {
            level: d,
            ..LevelReport::default()
        };
        for ty in g.types() {
            let (terminals, others): (Vec<_>, Vec<_>) =
                g.rules_of_type(ty).iter().copied().partition(|r| g.is_terminal(*r));
            if d == 1 {
                if !terminals.is_empty() && self.bounds.admits(1, 1) {
                    let tree = ProgramTree::compose(Arc::clone(&g), &terminals, &[]).expect("terminals share a shape");
                    self.add_tree(tree, 1, &mut out, &mut report);
                }
                continue;
            }
            if others.is_empty() {
                continue;
            }
            for group in g.shape_partition(&others).expect("rules share a type") {
                let child_types = g.child_types(group[0]).to_vec();
                let options: Vec<Vec<usize>> = child_types
                    .iter()
                    .map(|t| {
                        self.by_type
                            .get(t)
                            .map(|v| v.iter().copied().filter(|i| self.entries[*i].level < d).collect())
                            .unwrap_or_default()
                    })
                    .collect();
                if options.iter().any(Vec::is_empty) {
                    continue;
                }
                let mut pick = vec![0; options.len()];
                loop {
                    let chosen: Vec<usize> = pick.iter().zip(&options).map(|(k, o)| o[*k]).collect();
                    let fresh = chosen.iter().any(|i| self.entries[*i].level == d - 1);
                    let size = 1 + chosen.iter().map(|i| self.entries[*i].size).sum::<usize>();
                    if fresh && self.bounds.admits(size, d) {
                        let kids: Vec<&ProgramTree> = chosen.iter().map(|i| &self.entries[*i].tree).collect();
                        let tree = ProgramTree::compose(Arc::clone(&g), &group, &kids).expect("types line up");
                        self.add_tree(tree, d, &mut out, &mut report);
                    }
                    // Odometer over the child options.
                    let mut i = 0;
                    while i < pick.len() {
                        pick[i] += 1;
                        if pick[i] < options[i].len() {
                            break;
                        }
                        pick[i] = 0;
                        i += 1;
                    }
                    if i == pick.len() {
                        break;
                    }
                }
            }
        }
        self.reports.push(report);
        out
    }
}

impl Iterator for BottomUp {
    type Item = Program;

    fn next(&mut self) -> Option<Program> {
        loop {
            if let Some(p) = self.pending.next() {
                return Some(p);
            }
            if self.level >= self.max_level {
                return None;
            }
            self.pending = self.build_level().into_iter();
        }
    }
}

/// All valid programs under `config`, in the strategy's order.
pub fn enumerate(
    grammar: Arc<Grammar>,
    constraints: Arc<[Constraint]>,
    config: &SearchConfig,
) -> Box<dyn Iterator<Item = Program> + Send> {
    match config.strategy {
        Strategy::TopDownBfs => Box::new(TopDown::new(grammar, constraints, config.mode, config.bounds, false)),
        Strategy::TopDownDfs => Box::new(TopDown::new(grammar, constraints, config.mode, config.bounds, true)),
        Strategy::BottomUp => Box::new(BottomUp::new(grammar, constraints, config.mode, config.bounds)),
    }
}

/// Result of [`count`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Counts {
    /// Programs of exactly each size (index = size).
    pub by_size: Vec<u64>,
    pub stats: Stats,
}

impl Counts {
    pub fn total(&self) -> u64 {
        self.by_size.iter().sum()
    }

    /// Programs with at most `size` nodes.
    pub fn cumulative(&self, size: usize) -> u64 {
        self.by_size.iter().take(size + 1).sum()
    }
}

/// Counts valid programs without materializing them where possible.
pub fn count(grammar: Arc<Grammar>, constraints: Arc<[Constraint]>, config: &SearchConfig) -> Counts {
    match config.strategy {
        Strategy::TopDownBfs | Strategy::TopDownDfs => {
            let dfs = config.strategy == Strategy::TopDownDfs;
            let (by_size, stats) =
                TopDown::new(grammar, constraints, config.mode, config.bounds, dfs).count_by_size(config.threads);
            Counts { by_size, stats }
        }
        Strategy::BottomUp => {
            let mut bu = BottomUp::new(grammar, constraints, config.mode, config.bounds);
            let mut by_size = Vec::new();
            for p in bu.by_ref() {
                let s = p.size();
                if by_size.len() <= s {
                    by_size.resize(s + 1, 0);
                }
                by_size[s] += 1;
            }
            Counts {
                by_size,
                stats: bu.stats(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::parse_constraints;

    fn arith() -> Arc<Grammar> {
        Arc::new(
            Grammar::parse(
                "Int -> +(Int, Int)\nInt -> *(Int, Int)\nInt -> -(Int, Int)\n\
                 Int -> 0 | 1 | 2 | 3 | 4 | 5 | 6 | 7 | 8 | 9\nInt -> x",
            )
            .unwrap(),
        )
    }

    #[test]
    fn unconstrained_arithmetic_counts() {
        let g = arith();
        let c = count(g, empty(), &SearchConfig::new(Mode::None, Strategy::TopDownBfs, Bounds::size(3)));
        assert_eq!(c.cumulative(1), 11);
        assert_eq!(c.total(), 11 + 3 * 121);
    }

    #[test]
    fn bfs_emits_non_decreasing_sizes() {
        let g = arith();
        let sizes: Vec<usize> = TopDown::new(g, empty(), Mode::None, Bounds::size(5), false)
            .map(|p| p.size())
            .collect();
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn strategies_agree_on_small_space() {
        let g = arith();
        let cs: Arc<[Constraint]> = parse_constraints(&g, "(forbid (rule + :a :a))\n(ordered (rule * :a :b) (a b))")
            .unwrap()
            .into();
        let run = |strategy, mode| {
            let cfg = SearchConfig::new(mode, strategy, Bounds::size(3));
            let mut v: Vec<String> = enumerate(g.clone(), cs.clone(), &cfg)
                .map(|p| p.display(&g).to_string())
                .collect();
            v.sort();
            v
        };
        let reference = run(Strategy::TopDownBfs, Mode::Check);
        assert_eq!(reference.len(), 11 + 121 * 3 - 11 - 55);
        for s in Strategy::ALL {
            for m in [Mode::Check, Mode::Propagate, Mode::UniformOnly] {
                assert_eq!(run(s, m), reference, "{s} {m}");
            }
        }
    }

    #[test]
    fn bottom_up_level_one_groups_terminals() {
        let g = Arc::new(
            Grammar::parse("S -> t1 | t2 | t3 | t4\nS -> u1(S) | u2(S)\nS -> b1(S, S) | b2(S, S)").unwrap(),
        );
        let mut bu = BottomUp::new(g, empty(), Mode::None, Bounds::depth(1));
        assert_eq!(bu.by_ref().count(), 4);
        assert_eq!(bu.bank().len(), 1);
        assert_eq!(bu.reports()[0].programs, 4);
    }

    #[test]
    fn parallel_count_matches_sequential() {
        let g = arith();
        let mut cfg = SearchConfig::new(Mode::None, Strategy::TopDownBfs, Bounds::size(5));
        let seq = count(g.clone(), empty(), &cfg);
        cfg.threads = 3;
        assert_eq!(count(g, empty(), &cfg).by_size, seq.by_size);
    }

    #[test]
    fn mode_and_strategy_names_round_trip() {
        for m in Mode::ALL {
            assert_eq!(m.name().parse::<Mode>().unwrap(), m);
        }
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("fast".parse::<Mode>().is_err());
    }
}
