//! Builtin benchmark domains and the table harness.

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use thiserror::Error;

use crate::constraints::{parse_constraints, Constraint};
use crate::grammar::Grammar;
use crate::search::{count, Bounds, Mode, SearchConfig, Strategy};

pub const BUILTINS: [&str; 4] = ["arithmetic", "robots", "symbolic", "lists"];

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown builtin domain `{0}` (expected one of arithmetic, robots, symbolic, lists)")]
pub struct UnknownDomain(pub String);

/// Published cumulative program counts for one size bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExpectedRow {
    pub size: usize,
    pub unconstrained: Option<u64>,
    pub constrained: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct DomainPack {
    pub name: &'static str,
    pub grammar_source: &'static str,
    pub constraint_source: &'static str,
    pub grammar: Arc<Grammar>,
    pub constraints: Vec<Constraint>,
    pub expected: Vec<ExpectedRow>,
    /// False when the published constrained column used constraints that
    /// are not part of the pack.
    pub constrained_comparable: bool,
}

impl DomainPack {
    pub fn constraints_arc(&self) -> Arc<[Constraint]> {
        self.constraints.clone().into()
    }

    pub fn expected_at(&self, size: usize) -> Option<ExpectedRow> {
        self.expected.iter().copied().find(|r| r.size == size)
    }
}

fn sources(name: &str) -> Option<(&'static str, &'static str, &'static str, &'static str)> {
    Some(match name {
        "arithmetic" => (
            "arithmetic",
            include_str!("../data/arithmetic.grammar"),
            include_str!("../data/arithmetic.constraints"),
            include_str!("../data/arithmetic.expected.csv"),
        ),
        "robots" => (
            "robots",
            include_str!("../data/robots.grammar"),
            include_str!("../data/robots.constraints"),
            include_str!("../data/robots.expected.csv"),
        ),
        "symbolic" => (
            "symbolic",
            include_str!("../data/symbolic.grammar"),
            include_str!("../data/symbolic.constraints"),
            include_str!("../data/symbolic.expected.csv"),
        ),
        "lists" => (
            "lists",
            include_str!("../data/lists.grammar"),
            include_str!("../data/lists.constraints"),
            include_str!("../data/lists.expected.csv"),
        ),
        _ => return None,
    })
}

fn parse_expected(csv: &str) -> Vec<ExpectedRow> {
    let cell = |s: &str| (!s.is_empty()).then(|| s.parse().expect("numeric cell"));
    csv.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let f: Vec<&str> = l.split(',').map(str::trim).collect();
            ExpectedRow {
                size: f[0].parse().expect("numeric size"),
                unconstrained: cell(f[1]),
                constrained: cell(f[2]),
            }
        })
        .collect()
}

pub fn load_domain(name: &str) -> Result<DomainPack, UnknownDomain> {
    let (name, grammar_source, constraint_source, expected) =
        sources(name).ok_or_else(|| UnknownDomain(name.to_string()))?;
    let grammar = Grammar::parse(grammar_source).expect("builtin grammar parses");
    let constraints = parse_constraints(&grammar, constraint_source).expect("builtin constraints parse");
    Ok(DomainPack {
        name,
        grammar_source,
        constraint_source,
        grammar: Arc::new(grammar),
        constraints,
        expected: parse_expected(expected),
        // The symbolic column was produced with a larger, unlisted set.
        constrained_comparable: name != "symbolic",
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TableRow {
    pub size: usize,
    pub count: u64,
    pub millis: u128,
}

/// Cumulative counts for every size bound up to `max_size`, each bound run
/// and timed separately.
pub fn run_table(pack: &DomainPack, max_size: usize, mode: Mode, threads: usize) -> Vec<TableRow> {
    let constraints = pack.constraints_arc();
    (1..=max_size)
        .map(|size| {
            let mut cfg = SearchConfig::new(mode, Strategy::TopDownBfs, Bounds::size(size));
            cfg.threads = threads;
            let start = Instant::now();
            let c = count(Arc::clone(&pack.grammar), Arc::clone(&constraints), &cfg);
            TableRow {
                size,
                count: c.total(),
                millis: start.elapsed().as_millis(),
            }
        })
        .collect()
}

pub const TABLE_HEADER: &str = "domain,size,mode,count,millis";

pub fn table_csv(domain: &str, mode: Mode, rows: &[TableRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(out, "{domain},{},{mode},{},{}", r.size, r.count, r.millis);
    }
    out
}

/// Worker threads requested through `BART_THREADS` (0 when unset).
pub fn threads_from_env() -> usize {
    std::env::var("BART_THREADS")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(0)
}
