//! Constraint-propagating enumeration of programs from typed grammars.

pub mod constraints;
pub mod domain;
pub mod domains;
pub mod grammar;
pub mod matcher;
pub mod program;
pub mod search;
pub mod sexpr;
pub mod solver;
pub mod tree;
pub mod uniform;

pub use constraints::{check_all, parse_constraints, Constraint, ConstraintKind, GroundError};
pub use domain::SparseDomain;
pub use grammar::{Grammar, GrammarError, RuleId, TypeId};
pub use matcher::{Bindings, DeductionResult, MatchResult, TemplateTree};
pub use program::{Program, ProgramParseError};
pub use tree::{Checkpoint, NodeId, NodeKind, Path, ProgramTree, TreeError};
pub use sexpr::ParseError;
pub use solver::{LocalConstraint, Solver, SolverError, StateToken, Stats};
pub use uniform::UniformSolver;
pub use search::{count, enumerate, enumerate_checked, BankEntry, Bounds, BottomUp, Counts, LevelReport, Mode, SearchConfig, Strategy, TopDown};
pub use domains::{load_domain, run_table, DomainPack, ExpectedRow, TableRow, UnknownDomain, BUILTINS};
