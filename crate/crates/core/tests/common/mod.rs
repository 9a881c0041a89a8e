//! Generate-and-test oracle written independently of the library's matcher
//! and constraint checker. Only the grammar is shared.

#![allow(dead_code)]

use std::collections::HashMap;

use synthspace::{Grammar, Program, RuleId, TypeId};

#[derive(Debug, Clone)]
pub enum T {
    Rule(&'static str, Vec<T>),
    Dom(Vec<&'static str>, Vec<T>),
    Var(&'static str),
}

#[derive(Debug, Clone)]
pub enum C {
    Forbid(T),
    Contains(T),
    Unique(T),
    Ordered(T, Vec<&'static str>),
    Fseq(Vec<&'static str>, Vec<&'static str>),
}

pub fn r(l: &'static str, k: Vec<T>) -> T {
    T::Rule(l, k)
}

pub fn leaf(l: &'static str) -> T {
    T::Rule(l, vec![])
}

pub fn var(n: &'static str) -> T {
    T::Var(n)
}

/// Appendix constraint sets, transcribed by hand.
pub fn constraints(domain: &str) -> Vec<C> {
    use C::*;
    match domain {
        "arithmetic" => vec![
            Forbid(r("*", vec![var("a"), leaf("0")])),
            Forbid(r("-", vec![var("a"), var("a")])),
            Forbid(r("-", vec![var("a"), leaf("0")])),
            Forbid(r("+", vec![var("a"), leaf("0")])),
            Forbid(r("*", vec![var("a"), leaf("1")])),
            Forbid(r("-", vec![r("*", vec![var("a"), leaf("2")]), var("a")])),
            Forbid(r("+", vec![var("a"), var("a")])),
            Forbid(r("-", vec![r("*", vec![var("a"), leaf("3")]), var("a")])),
            Forbid(r("+", vec![leaf("0"), var("a")])),
            Forbid(r("*", vec![leaf("0"), var("a")])),
            Forbid(r("*", vec![leaf("1"), var("a")])),
            Ordered(r("+", vec![var("a"), var("b")]), vec!["a", "b"]),
            Ordered(r("*", vec![var("a"), var("b")]), vec!["a", "b"]),
        ],
        "robots" => {
            let ig = vec!["drop", "grab"];
            let mut v = vec![
                Unique(r("drop", vec![var("s")])),
                Unique(r("grab", vec![var("s")])),
            ];
            for (a, b) in [
                ("moveLeft", "moveRight"),
                ("moveRight", "moveLeft"),
                ("moveUp", "moveDown"),
                ("moveDown", "moveUp"),
                ("moveDown", "moveRight"),
                ("moveDown", "moveLeft"),
                ("moveUp", "moveRight"),
                ("moveUp", "moveLeft"),
            ] {
                v.push(Fseq(vec![a, b], ig.clone()));
            }
            v
        }
        "lists" => {
            let unary = vec!["reverse!", "sort!", "maximum", "minimum", "sum", "prod"];
            vec![
                Forbid(r("reverse!", vec![r("reverse!", vec![var("a")])])),
                Forbid(r("sort!", vec![r("reverse!", vec![var("a")])])),
                Forbid(r("sort!", vec![r("sort!", vec![var("a")])])),
                Forbid(r("sort!", vec![r("append!", vec![var("a"), r("reverse!", vec![var("b")])])])),
                Forbid(r("sort!", vec![r("append!", vec![var("a"), r("sort!", vec![var("b")])])])),
                Forbid(r("sort!", vec![r("push!", vec![r("sort!", vec![var("a")]), var("v")])])),
                Forbid(T::Dom(unary.clone(), vec![leaf("[]")])),
                Forbid(T::Dom(unary, vec![r("push!", vec![leaf("[]"), var("v")])])),
                Fseq(vec!["reverse!", "[]"], vec!["sort!", "append!"]),
                Fseq(vec!["append!", "[]"], vec!["reverse!", "sort!"]),
            ]
        }
        "symbolic" => {
            let t = || T::Dom(vec!["t1", "t2", "t3", "t4"], vec![]);
            vec![Forbid(T::Dom(vec!["b1", "b2", "b3"], vec![t(), t()]))]
        }
        _ => panic!("unknown domain {domain}"),
    }
}

fn matches<'p>(g: &Grammar, p: &'p Program, t: &T, b: &mut HashMap<&'static str, &'p Program>) -> bool {
    let kids = match t {
        T::Var(n) => {
            return match b.get(n) {
                Some(q) => *q == p,
                None => {
                    b.insert(n, p);
                    true
                }
            }
        }
        T::Rule(l, k) => {
            if g.label(p.rule) != *l {
                return false;
            }
            k
        }
        T::Dom(ls, k) => {
            if !ls.contains(&g.label(p.rule)) {
                return false;
            }
            k
        }
    };
    kids.len() == p.children.len() && p.children.iter().zip(kids).all(|(c, tc)| matches(g, c, tc, b))
}

fn all_subtrees(p: &Program) -> Vec<&Program> {
    let mut out = vec![p];
    let mut i = 0;
    while i < out.len() {
        out.extend(out[i].children.iter());
        i += 1;
    }
    out
}

fn lex_le(a: &Program, b: &Program) -> bool {
    fn cmp(a: &Program, b: &Program) -> std::cmp::Ordering {
        a.rule.index().cmp(&b.rule.index()).then_with(|| {
            for (x, y) in a.children.iter().zip(&b.children) {
                let o = cmp(x, y);
                if o.is_ne() {
                    return o;
                }
            }
            std::cmp::Ordering::Equal
        })
    }
    cmp(a, b).is_le()
}

fn label_paths<'g>(g: &'g Grammar, p: &Program, prefix: &mut Vec<&'g str>, out: &mut Vec<Vec<&'g str>>) {
    prefix.push(g.label(p.rule));
    if p.children.is_empty() {
        out.push(prefix.clone());
    }
    for c in &p.children {
        label_paths(g, c, prefix, out);
    }
    prefix.pop();
}

// Elements in ancestor order along one root-leaf path, with no ignored rule
// strictly between consecutive elements.
fn has_sequence(path: &[&str], seq: &[&str], ignore: &[&str]) -> bool {
    fn go(path: &[&str], from: usize, seq: &[&str], ignore: &[&str]) -> bool {
        if seq.is_empty() {
            return true;
        }
        for i in from..path.len() {
            if path[i] == seq[0] && go(path, i + 1, &seq[1..], ignore) {
                return true;
            }
            // Between two elements an ignored rule breaks the chain.
            if ignore.contains(&path[i]) {
                return false;
            }
        }
        false
    }
    (0..path.len()).any(|i| path[i] == seq[0] && go(path, i + 1, &seq[1..], ignore))
}

pub fn satisfies(g: &Grammar, p: &Program, c: &C) -> bool {
    let subs = all_subtrees(p);
    match c {
        C::Forbid(t) => !subs.iter().any(|s| matches(g, s, t, &mut HashMap::new())),
        C::Contains(t) => subs.iter().any(|s| matches(g, s, t, &mut HashMap::new())),
        C::Unique(t) => subs.iter().filter(|s| matches(g, s, t, &mut HashMap::new())).count() <= 1,
        C::Ordered(t, order) => subs.iter().all(|s| {
            let mut b = HashMap::new();
            !matches(g, s, t, &mut b) || order.windows(2).all(|w| lex_le(b[w[0]], b[w[1]]))
        }),
        C::Fseq(seq, ignore) => {
            let mut paths = Vec::new();
            label_paths(g, p, &mut Vec::new(), &mut paths);
            !paths.iter().any(|path| has_sequence(path, seq, ignore))
        }
    }
}

pub fn satisfies_all(g: &Grammar, p: &Program, cs: &[C]) -> bool {
    cs.iter().all(|c| satisfies(g, p, c))
}

/// Every program of type `ty` with exactly `size` nodes.
pub struct Generator<'g> {
    g: &'g Grammar,
    memo: HashMap<(TypeId, usize), Vec<Program>>,
}

impl<'g> Generator<'g> {
    pub fn new(g: &'g Grammar) -> Self {
        Generator { g, memo: HashMap::new() }
    }

    pub fn exact(&mut self, ty: TypeId, size: usize) -> Vec<Program> {
        if let Some(v) = self.memo.get(&(ty, size)) {
            return v.clone();
        }
        let mut out = Vec::new();
        let rules: Vec<RuleId> = self.g.rules_of_type(ty).to_vec();
        for rule in rules {
            let kids = self.g.child_types(rule).to_vec();
            if kids.is_empty() {
                if size == 1 {
                    out.push(Program::leaf(rule));
                }
                continue;
            }
            if size < 1 + kids.len() {
                continue;
            }
            for split in compositions(size - 1, kids.len()) {
                let options: Vec<Vec<Program>> = kids.iter().zip(&split).map(|(t, s)| self.exact(*t, *s)).collect();
                for combo in product(&options) {
                    out.push(Program::node(rule, combo));
                }
            }
        }
        self.memo.insert((ty, size), out.clone());
        out
    }

    pub fn up_to(&mut self, size: usize) -> Vec<Program> {
        let start = self.g.start_type();
        (1..=size).flat_map(|s| self.exact(start, s)).collect()
    }
}

fn compositions(n: usize, k: usize) -> Vec<Vec<usize>> {
    if k == 1 {
        return if n >= 1 { vec![vec![n]] } else { vec![] };
    }
    let mut out = Vec::new();
    for first in 1..n {
        for mut rest in compositions(n - first, k - 1) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn product(options: &[Vec<Program>]) -> Vec<Vec<Program>> {
    let mut acc: Vec<Vec<Program>> = vec![vec![]];
    for opts in options {
        let mut next = Vec::with_capacity(acc.len() * opts.len());
        for prefix in &acc {
            for o in opts {
                let mut v = prefix.clone();
                v.push(o.clone());
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

pub fn template_of(c: &C) -> Option<&T> {
    match c {
        C::Forbid(t) | C::Contains(t) | C::Unique(t) | C::Ordered(t, _) => Some(t),
        C::Fseq(..) => None,
    }
}

/// Whether `t` matches at the root of `p`.
pub fn matches_at_root(g: &Grammar, p: &Program, t: &T) -> bool {
    matches(g, p, t, &mut HashMap::new())
}
