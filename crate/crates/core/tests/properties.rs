//! Soundness and invariance properties of matching, propagation and search.

mod common;

use std::collections::BTreeSet;
use std::sync::{Arc, OnceLock};

use common::{constraints, matches_at_root, satisfies_all, template_of, Generator};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use synthspace::matcher::{matches_complete, pattern_match};
use synthspace::{
    count, load_domain, Bindings, Bounds, Constraint, Grammar, MatchResult, Mode, NodeId, Program, ProgramTree,
    SearchConfig, Solver, Strategy, TopDown, UniformSolver,
};

fn completions(t: &ProgramTree, n: NodeId) -> Vec<Program> {
    let mut out = Vec::new();
    for rule in t.domain(n).sorted() {
        let mut acc: Vec<Vec<Program>> = vec![vec![]];
        for c in t.children(n) {
            let subs = completions(t, *c);
            acc = acc
                .into_iter()
                .flat_map(|prefix| {
                    subs.iter().map(move |s| {
                        let mut v = prefix.clone();
                        v.push(s.clone());
                        v
                    })
                })
                .collect();
        }
        out.extend(acc.into_iter().map(|kids| Program::node(rule, kids)));
    }
    out
}

// Renders `p` with some nodes widened to several rules of the same shape.
fn widen(g: &Grammar, p: &Program, rng: &mut ChaCha8Rng) -> String {
    let mut labels = vec![g.label(p.rule).to_string()];
    if rng.gen_bool(0.5) {
        let mut peers: Vec<_> = g
            .rules()
            .iter()
            .map(|r| r.index)
            .filter(|r| *r != p.rule && g.shape(*r) == g.shape(p.rule))
            .collect();
        peers.shuffle(rng);
        let extra = rng.gen_range(0..=2usize.min(peers.len()));
        labels.extend(peers[..extra].iter().map(|r| g.label(*r).to_string()));
    }
    let mut s = if labels.len() == 1 {
        labels.remove(0)
    } else {
        format!("{{{}}}", labels.join(","))
    };
    if !p.children.is_empty() {
        let kids: Vec<String> = p.children.iter().map(|c| widen(g, c, rng)).collect();
        s.push('(');
        s.push_str(&kids.join(","));
        s.push(')');
    }
    s
}

#[test]
fn complete_matching_agrees_with_pattern_match_on_arithmetic() {
    let pack = load_domain("arithmetic").unwrap();
    let g = &pack.grammar;
    let oracle = constraints("arithmetic");
    let programs = Generator::new(g).up_to(5);
    assert_eq!(programs.len(), 24332);
    for p in &programs {
        let tree = ProgramTree::from_program(Arc::clone(g), p);
        for (c, o) in pack.constraints.iter().zip(&oracle) {
            let t = c.template().unwrap();
            let complete = matches_complete(p, t);
            assert_eq!(complete, matches_at_root(g, p, template_of(o).unwrap()));
            match pattern_match(&tree, tree.root(), t, Bindings::new()) {
                MatchResult::Success(_) => assert!(complete, "{}", p.to_canonical(g)),
                MatchResult::HardFail => assert!(!complete, "{}", p.to_canonical(g)),
                other => panic!("undecided on a complete tree: {other:?}"),
            }
        }
    }
}

fn arithmetic_up_to_5() -> &'static [Program] {
    static CELL: OnceLock<Vec<Program>> = OnceLock::new();
    CELL.get_or_init(|| Generator::new(&load_domain("arithmetic").unwrap().grammar).up_to(5))
}

fn valid_cached(domain_pick: usize) -> &'static [Program] {
    static CELL: [OnceLock<Vec<Program>>; 2] = [OnceLock::new(), OnceLock::new()];
    let (domain, size) = [("arithmetic", 5), ("lists", 7)][domain_pick];
    CELL[domain_pick].get_or_init(|| valid_programs(domain, size))
}

fn valid_programs(domain: &str, size: usize) -> Vec<Program> {
    let pack = load_domain(domain).unwrap();
    let cs = constraints(domain);
    Generator::new(&pack.grammar)
        .up_to(size)
        .into_iter()
        .filter(|p| satisfies_all(&pack.grammar, p, &cs))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn match_outcomes_hold_for_every_completion(idx in 0usize..24332, seed: u64) {
        let pack = load_domain("arithmetic").unwrap();
        let g = &pack.grammar;
        let programs = arithmetic_up_to_5();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = ProgramTree::parse(Arc::clone(g), &widen(g, &programs[idx], &mut rng)).unwrap();
        let all = completions(&tree, tree.root());
        for c in &pack.constraints {
            let t = c.template().unwrap();
            match pattern_match(&tree, tree.root(), t, Bindings::new()) {
                MatchResult::Success(_) => prop_assert!(all.iter().all(|p| matches_complete(p, t))),
                MatchResult::HardFail => prop_assert!(!all.iter().any(|p| matches_complete(p, t))),
                MatchResult::SuccessWhenHoleAssignedTo { hole, rule, .. } => {
                    let path = tree.path_of(hole);
                    for p in &all {
                        let mut node = p;
                        for i in &path.0 {
                            node = &node.children[i - 1];
                        }
                        if node.rule == rule {
                            prop_assert!(matches_complete(p, t));
                        }
                    }
                }
                MatchResult::SoftFail => {}
            }
        }
    }

    #[test]
    fn propagation_keeps_every_valid_completion(domain_pick in 0usize..2, idx: prop::sample::Index, seed: u64) {
        let domain = ["arithmetic", "lists"][domain_pick];
        let pack = load_domain(domain).unwrap();
        let g = &pack.grammar;
        let valid = valid_cached(domain_pick);
        let p = &valid[idx.index(valid.len())];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = ProgramTree::parse(Arc::clone(g), &widen(g, p, &mut rng)).unwrap();
        let oracle = constraints(domain);
        let expected: BTreeSet<String> = completions(&tree, tree.root())
            .into_iter()
            .filter(|q| satisfies_all(g, q, &oracle))
            .map(|q| q.to_canonical(g))
            .collect();
        let s = Solver::from_tree(tree, pack.constraints_arc());
        prop_assert!(s.is_feasible());
        let kept: BTreeSet<String> = completions(s.tree(), s.tree().root())
            .into_iter()
            .map(|q| q.to_canonical(g))
            .collect();
        prop_assert!(expected.is_subset(&kept));
        let solved: BTreeSet<String> = UniformSolver::new(s).unwrap().map(|q| q.to_canonical(g)).collect();
        prop_assert_eq!(solved, expected);
    }
}

#[test]
fn uniform_solver_is_exact_on_every_uniform_tree() {
    for (domain, size) in [("arithmetic", 5), ("robots", 6), ("symbolic", 6), ("lists", 6)] {
        let pack = load_domain(domain).unwrap();
        let g = &pack.grammar;
        let oracle = constraints(domain);
        let mut td = TopDown::new(Arc::clone(g), Arc::from(Vec::new()), Mode::None, Bounds::size(size), false);
        let mut trees = 0;
        while let Some(u) = td.next_uniform() {
            trees += 1;
            let tree = u.tree().clone();
            let mut expected: Vec<String> = completions(&tree, tree.root())
                .into_iter()
                .filter(|q| satisfies_all(g, q, &oracle))
                .map(|q| q.to_canonical(g))
                .collect();
            let mut got: Vec<String> = UniformSolver::new(Solver::from_tree(tree, pack.constraints_arc()))
                .unwrap()
                .map(|q| q.to_canonical(g))
                .collect();
            expected.sort();
            got.sort();
            let distinct: BTreeSet<&String> = got.iter().collect();
            assert_eq!(distinct.len(), got.len(), "{domain}: duplicates");
            assert_eq!(got, expected, "{domain}");
        }
        assert!(trees > 0);
    }
}

fn count_row(domain: &str, size: usize, constraints: Vec<Constraint>) -> Vec<u64> {
    let pack = load_domain(domain).unwrap();
    let cfg = SearchConfig::new(Mode::Propagate, Strategy::TopDownBfs, Bounds::size(size));
    let c = count(Arc::clone(&pack.grammar), constraints.into(), &cfg);
    (1..=size).map(|s| c.cumulative(s)).collect()
}

#[test]
fn constraint_order_does_not_change_counts() {
    for (domain, size) in [("arithmetic", 5), ("robots", 7), ("symbolic", 6), ("lists", 8)] {
        let pack = load_domain(domain).unwrap();
        let reference = count_row(domain, size, pack.constraints.clone());
        for seed in 0..10 {
            let mut cs = pack.constraints.clone();
            cs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            assert_eq!(count_row(domain, size, cs), reference, "{domain} seed {seed}");
        }
    }
}

#[test]
fn bfs_sizes_never_decrease() {
    for domain in ["arithmetic", "lists"] {
        let pack = load_domain(domain).unwrap();
        let sizes: Vec<usize> = TopDown::new(pack.grammar.clone(), pack.constraints_arc(), Mode::Propagate, Bounds::size(7), false)
            .map(|p| p.size())
            .collect();
        assert!(sizes.windows(2).all(|w| w[0] <= w[1]), "{domain}");
    }
}

#[test]
fn depth_bound_is_respected() {
    let pack = load_domain("lists").unwrap();
    let bounds = Bounds { max_size: Some(9), max_depth: Some(3) };
    for strategy in Strategy::ALL {
        let cfg = SearchConfig::new(Mode::Propagate, strategy, bounds);
        let got: BTreeSet<String> = synthspace::enumerate(pack.grammar.clone(), pack.constraints_arc(), &cfg)
            .map(|p| {
                assert!(p.depth() <= 3 && p.size() <= 9);
                p.to_canonical(&pack.grammar)
            })
            .collect();
        let expected: BTreeSet<String> = valid_programs("lists", 9)
            .into_iter()
            .filter(|p| p.depth() <= 3)
            .map(|p| p.to_canonical(&pack.grammar))
            .collect();
        assert_eq!(got, expected, "{strategy}");
    }
}
