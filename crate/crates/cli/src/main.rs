use std::collections::BTreeSet;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use synthspace::domains::{threads_from_env, TABLE_HEADER};
use synthspace::{
    count, enumerate, load_domain, parse_constraints, Bounds, Constraint, Grammar, Mode, Program, SearchConfig,
    Strategy,
};

#[derive(Parser)]
#[command(name = "synthspace", version, about = "Enumerate the programs of a grammar under syntactic constraints")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print every valid program.
    Enumerate(RunArgs),
    /// Print cumulative program counts per size bound.
    Count(RunArgs),
    /// Check that a constrained mode yields exactly the programs of
    /// enumerate-and-check.
    Compare(RunArgs),
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Builtin domain: arithmetic, robots, symbolic or lists.
    #[arg(long, conflicts_with = "grammar")]
    builtin: Option<String>,
    /// Grammar file.
    #[arg(long)]
    grammar: Option<PathBuf>,
    /// Constraint file; replaces a builtin's constraints.
    #[arg(long)]
    constraints: Option<PathBuf>,
    #[arg(long)]
    max_size: Option<usize>,
    #[arg(long)]
    max_depth: Option<usize>,
    #[arg(long, value_enum, default_value = "propagate")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "top-down-bfs")]
    search: SearchArg,
    /// Defaults to `lines` for enumerate and `csv` for count.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Output file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Shuffle the constraint list with this seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Constraints for the reference side of `compare` (defaults to the
    /// ones under test).
    #[arg(long, hide = true)]
    reference_constraints: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    None,
    Check,
    Propagate,
    UniformOnly,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::None => Mode::None,
            ModeArg::Check => Mode::Check,
            ModeArg::Propagate => Mode::Propagate,
            ModeArg::UniformOnly => Mode::UniformOnly,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SearchArg {
    TopDownBfs,
    TopDownDfs,
    BottomUp,
}

impl From<SearchArg> for Strategy {
    fn from(s: SearchArg) -> Strategy {
        match s {
            SearchArg::TopDownBfs => Strategy::TopDownBfs,
            SearchArg::TopDownDfs => Strategy::TopDownDfs,
            SearchArg::BottomUp => Strategy::BottomUp,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Lines,
    Jsonl,
    Csv,
}

enum Failure {
    Parse(String),
    Config(String),
    Mismatch,
    Io(io::Error),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

struct Loaded {
    name: String,
    grammar: Arc<Grammar>,
    constraints: Arc<[Constraint]>,
    reference: Arc<[Constraint]>,
    config: SearchConfig,
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("cannot read {}: {e}", path.display())))
}

fn load_constraints(g: &Grammar, path: &Path) -> Result<Vec<Constraint>, Failure> {
    parse_constraints(g, &read(path)?).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))
}

fn load(args: &RunArgs) -> Result<Loaded, Failure> {
    let (name, grammar, mut constraints) = match (&args.builtin, &args.grammar) {
        (Some(b), None) => {
            let pack = load_domain(b).map_err(|e| Failure::Config(e.to_string()))?;
            (pack.name.to_string(), pack.grammar, pack.constraints)
        }
        (None, Some(path)) => {
            let g = Grammar::parse(&read(path)?).map_err(|e| Failure::Parse(format!("{}: {e}", path.display())))?;
            let name = path.file_stem().map_or("grammar".into(), |s| s.to_string_lossy().into_owned());
            (name, Arc::new(g), Vec::new())
        }
        _ => return Err(Failure::Config("give exactly one of --builtin or --grammar".into())),
    };
    if let Some(path) = &args.constraints {
        constraints = load_constraints(&grammar, path)?;
    }
    let reference = match &args.reference_constraints {
        Some(path) => load_constraints(&grammar, path)?,
        None => constraints.clone(),
    };
    if let Some(seed) = args.seed {
        constraints.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    let bounds = Bounds {
        max_size: args.max_size,
        max_depth: args.max_depth,
    };
    if !bounds.is_bounded() {
        return Err(Failure::Config("give --max-size and/or --max-depth".into()));
    }
    let start = grammar.start_type();
    let min_size = grammar.min_size(start).unwrap_or(usize::MAX);
    let min_depth = grammar.min_depth(start).unwrap_or(usize::MAX);
    if bounds.max_size.is_some_and(|m| m < min_size) || bounds.max_depth.is_some_and(|m| m < min_depth) {
        return Err(Failure::Config(format!(
            "bound below the smallest program (size {min_size}, depth {min_depth})"
        )));
    }
    let mut config = SearchConfig::new(args.mode.into(), args.search.into(), bounds);
    config.threads = threads_from_env();
    Ok(Loaded {
        name,
        grammar,
        constraints: constraints.into(),
        reference: reference.into(),
        config,
    })
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

#[derive(Serialize)]
struct ProgramRecord<'a> {
    program: &'a str,
    size: usize,
    depth: usize,
}

#[derive(Serialize)]
struct CountRecord<'a> {
    domain: &'a str,
    size: usize,
    mode: &'a str,
    count: u64,
    millis: u128,
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn cmd_enumerate(args: &RunArgs) -> Result<(), Failure> {
    let l = load(args)?;
    let format = args.format.unwrap_or(Format::Lines);
    let mut out = output(&args.out)?;
    if format == Format::Csv {
        writeln!(out, "program,size,depth")?;
    }
    for p in enumerate(Arc::clone(&l.grammar), l.constraints, &l.config) {
        let text = p.to_canonical(&l.grammar);
        match format {
            Format::Lines => writeln!(out, "{text}")?,
            Format::Jsonl => {
                let rec = ProgramRecord {
                    program: &text,
                    size: p.size(),
                    depth: p.depth(),
                };
                writeln!(out, "{}", serde_json::to_string(&rec).expect("plain record"))?;
            }
            Format::Csv => writeln!(out, "{},{},{}", csv_field(&text), p.size(), p.depth())?,
        }
    }
    out.flush()?;
    Ok(())
}

fn cmd_count(args: &RunArgs) -> Result<(), Failure> {
    let l = load(args)?;
    let format = args.format.unwrap_or(Format::Csv);
    let mode = l.config.mode.name();
    // One run per size bound, so each row carries its own wall time.
    let rows: Vec<(usize, u64, u128)> = match l.config.bounds.max_size {
        Some(max) => (1..=max)
            .map(|size| {
                let mut cfg = l.config;
                cfg.bounds.max_size = Some(size);
                let start = Instant::now();
                let c = count(Arc::clone(&l.grammar), Arc::clone(&l.constraints), &cfg);
                (size, c.total(), start.elapsed().as_millis())
            })
            .collect(),
        None => {
            let start = Instant::now();
            let c = count(Arc::clone(&l.grammar), Arc::clone(&l.constraints), &l.config);
            let millis = start.elapsed().as_millis();
            (1..c.by_size.len()).map(|s| (s, c.cumulative(s), millis)).collect()
        }
    };
    let mut out = output(&args.out)?;
    if format == Format::Csv {
        writeln!(out, "{TABLE_HEADER}")?;
    }
    for (size, n, millis) in rows {
        match format {
            Format::Csv => writeln!(out, "{},{size},{mode},{n},{millis}", csv_field(&l.name))?,
            Format::Lines => writeln!(out, "{size} {n}")?,
            Format::Jsonl => {
                let rec = CountRecord {
                    domain: &l.name,
                    size,
                    mode,
                    count: n,
                    millis,
                };
                writeln!(out, "{}", serde_json::to_string(&rec).expect("plain record"))?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

fn program_set(l: &Loaded, constraints: &Arc<[Constraint]>, config: &SearchConfig) -> BTreeSet<String> {
    enumerate(Arc::clone(&l.grammar), Arc::clone(constraints), config)
        .map(|p: Program| p.to_canonical(&l.grammar))
        .collect()
}

fn cmd_compare(args: &RunArgs) -> Result<(), Failure> {
    let l = load(args)?;
    let tested = program_set(&l, &l.constraints, &l.config);
    let mut reference_cfg = l.config;
    reference_cfg.mode = Mode::Check;
    reference_cfg.strategy = Strategy::TopDownBfs;
    let reference = program_set(&l, &l.reference, &reference_cfg);
    let mut out = output(&args.out)?;
    let mode = l.config.mode.name();
    writeln!(out, "{mode}: {} programs", tested.len())?;
    writeln!(out, "check: {} programs", reference.len())?;
    let extra: Vec<&String> = tested.difference(&reference).collect();
    let missing: Vec<&String> = reference.difference(&tested).collect();
    for (label, diff) in [(format!("only in {mode}"), &extra), ("only in check".to_string(), &missing)] {
        if !diff.is_empty() {
            writeln!(out, "{label}: {}", diff.len())?;
            for p in diff.iter().take(20) {
                writeln!(out, "  {p}")?;
            }
        }
    }
    let same = extra.is_empty() && missing.is_empty();
    writeln!(out, "{}", if same { "identical" } else { "MISMATCH" })?;
    out.flush()?;
    if same {
        Ok(())
    } else {
        Err(Failure::Mismatch)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Count(a) => cmd_count(a),
        Command::Compare(a) => cmd_compare(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Mismatch) => ExitCode::from(1),
        Err(Failure::Io(e)) if e.kind() == io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Parse(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
