mod commands;
mod validate;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "dissoc", version, about = "Desk-scale checks for dissociated permutation groups")]
struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for the checkers; falls back to FORGE_JOBS.
    #[arg(long, global = true, env = "FORGE_JOBS")]
    jobs: Option<usize>,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustive HP/JEP/AP/SAP/FAP/σ-SAP checks of a class at bounded size.
    CheckClass(CheckClassArgs),
    /// Canonical amalgam of two metric spaces or diversities.
    Amalgamate(AmalgamateArgs),
    /// Incremental construction of a finite segment of the limit.
    BuildLimit(BuildLimitArgs),
    /// Tree of tuple types, with an oligomorphy verdict across truncations.
    TypeTree(TypeTreeArgs),
    /// Compare ⟨G_A, G_B⟩ with G_{A∩B}.
    GroupLattice(GroupLatticeArgs),
    /// Search an element fixing a set and pushing another set into a target.
    Neumann(NeumannArgs),
    /// Exact defect ‖p_A p_B − p_{A∩B}‖ on tuple representations.
    DissociationDefect(DefectArgs),
    /// Character of ℓ²(G/G_A) against the tuple action.
    Induce(InduceArgs),
    /// Conditional independence tests on sampled exchangeable processes.
    ExchangeTest(ExchangeArgs),
    /// Independently re-check a report or a metric/diversity file.
    Validate(ValidateArgs),
}

#[derive(Args, Clone)]
pub struct ClassArgs {
    #[arg(long, value_enum)]
    pub class: ClassName,
    #[arg(long)]
    pub p: Option<u8>,
    #[arg(long)]
    pub r: Option<u8>,
    #[arg(long)]
    pub colors: Option<u8>,
    /// Truncation: largest distance or diversity value.
    #[arg(long)]
    pub max_dist: Option<u8>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum ClassName {
    Graphs,
    ColoredGraphs,
    TriangleFree,
    IntegralMetric,
    NoOddPerimeter,
    NoUnitSimplex,
    IntegralDiversity,
}

#[derive(Args)]
pub struct CheckClassArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long, default_value_t = 3)]
    pub max_size: usize,
    #[arg(long, value_delimiter = ',', default_value = "hp,jep,ap,sap")]
    pub props: Vec<String>,
    /// Base size for sigma-sap.
    #[arg(long, default_value_t = 2)]
    pub base_size: usize,
    /// New points per side for sigma-sap.
    #[arg(long, default_value_t = 1)]
    pub diff_size: usize,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum AmalgamKind {
    Metric,
    Diversity,
}

#[derive(Args)]
pub struct AmalgamateArgs {
    #[arg(long, value_enum)]
    pub kind: AmalgamKind,
    #[arg(long)]
    pub left: PathBuf,
    #[arg(long)]
    pub right: PathBuf,
    /// `{"left": [...], "right": [...]}`; omit for a disjoint metric amalgam.
    #[arg(long)]
    pub base: Option<PathBuf>,
    /// Odd-perimeter bound for the disjoint metric amalgam.
    #[arg(long)]
    pub p: Option<u64>,
}

#[derive(Args)]
pub struct BuildLimitArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long)]
    pub steps: usize,
    /// Also probe ultrahomogeneity on maps of at most this many points.
    #[arg(long)]
    pub probe: Option<usize>,
}

#[derive(Args)]
pub struct TypeTreeArgs {
    #[command(flatten)]
    pub class: ClassArgs,
    #[arg(long)]
    pub depth: usize,
    /// Further truncations to compare against for the oligomorphy verdict.
    #[arg(long, value_delimiter = ',')]
    pub compare: Vec<u8>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum GroupName {
    Sym,
    Cyclic,
    Dihedral,
}

#[derive(Args, Clone)]
pub struct GroupArgs {
    #[arg(long, value_enum, default_value = "sym")]
    pub group: GroupName,
    #[arg(long)]
    pub n: usize,
    /// JSON list of image arrays; replaces `--group`.
    #[arg(long)]
    pub generators: Option<PathBuf>,
}

#[derive(Args)]
pub struct GroupLatticeArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[arg(long, value_delimiter = ',')]
    pub a: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub b: Vec<usize>,
    /// Check every pair A, B with |A ∪ B| at most this instead.
    #[arg(long)]
    pub all_up_to: Option<usize>,
}

#[derive(Args)]
pub struct NeumannArgs {
    #[command(flatten)]
    pub group: GroupArgs,
    #[arg(long, value_delimiter = ',')]
    pub fix: Vec<usize>,
    #[arg(long = "move", value_delimiter = ',')]
    pub moving: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub target: Vec<usize>,
}

#[derive(Args)]
pub struct DefectArgs {
    /// Degree or inclusive range `lo..hi`.
    #[arg(long, value_parser = parse_range)]
    pub n: (usize, usize),
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, value_delimiter = ',')]
    pub a: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub b: Vec<usize>,
}

#[derive(Args)]
pub struct InduceArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, value_delimiter = ',')]
    pub a: Vec<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum GeneratorName {
    IidUniform,
    IidBiased,
    ConstantCoupling,
    TwoCoinMixture,
}

#[derive(Args)]
pub struct ExchangeArgs {
    #[arg(long, value_enum)]
    pub generator: GeneratorName,
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 2)]
    pub alphabet: usize,
    #[arg(long, default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = 0.2)]
    pub p1: f64,
    #[arg(long, default_value_t = 0.8)]
    pub p2: f64,
    #[arg(long, default_value_t = 0.5)]
    pub weight: f64,
    #[arg(long, value_delimiter = ',')]
    pub a: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub b: Vec<usize>,
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    #[arg(long, default_value_t = 200)]
    pub permutations: usize,
    /// Run the whole battery with |A ∪ B| at most this instead of one test.
    #[arg(long)]
    pub battery: Option<usize>,
    /// Also probe the tail of `--a` up to this depth.
    #[arg(long)]
    pub tail_depth: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
pub enum InputKind {
    Report,
    Metric,
    Diversity,
}

#[derive(Args)]
pub struct ValidateArgs {
    #[arg(long, value_enum, default_value = "report")]
    pub kind: InputKind,
    #[arg(long)]
    pub input: PathBuf,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let num = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("`{t}`: {e}"));
    match s.split_once("..") {
        Some((lo, hi)) => {
            let (lo, hi) = (num(lo)?, num(hi.trim_start_matches('='))?);
            if lo > hi {
                return Err(format!("empty range {s}"));
            }
            Ok((lo, hi))
        }
        None => num(s).map(|n| (n, n)),
    }
}

/// A finished command: the report and whether every check held.
pub struct Outcome {
    pub report: Value,
    pub passed: bool,
}

impl Outcome {
    pub fn new(report: Value, passed: bool) -> Self {
        Self { report, passed }
    }
}

/// Usage or input problems; exit code 2. `detail` lands in the report.
#[derive(Debug)]
pub struct UsageError {
    pub message: String,
    pub detail: Option<Value>,
}

impl UsageError {
    pub fn new(message: impl fmt::Display) -> Self {
        Self {
            message: message.to_string(),
            detail: None,
        }
    }

    pub fn with_detail(message: impl fmt::Display, detail: Value) -> Self {
        Self {
            message: message.to_string(),
            detail: Some(detail),
        }
    }
}

pub type CmdResult = Result<Outcome, UsageError>;

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::CheckClass(_) => "check-class",
        Command::Amalgamate(_) => "amalgamate",
        Command::BuildLimit(_) => "build-limit",
        Command::TypeTree(_) => "type-tree",
        Command::GroupLattice(_) => "group-lattice",
        Command::Neumann(_) => "neumann",
        Command::DissociationDefect(_) => "dissociation-defect",
        Command::Induce(_) => "induce",
        Command::ExchangeTest(_) => "exchange-test",
        Command::Validate(_) => "validate",
    }
}

fn dispatch(cli: &Cli) -> CmdResult {
    match &cli.command {
        Command::CheckClass(a) => commands::check_class(a),
        Command::Amalgamate(a) => commands::amalgamate(a),
        Command::BuildLimit(a) => commands::build_limit(a, cli.seed),
        Command::TypeTree(a) => commands::type_tree(a),
        Command::GroupLattice(a) => commands::group_lattice(a),
        Command::Neumann(a) => commands::neumann(a),
        Command::DissociationDefect(a) => commands::dissociation_defect(a),
        Command::Induce(a) => commands::induce(a),
        Command::ExchangeTest(a) => commands::exchange_test(a, cli.seed),
        Command::Validate(a) => validate::run(a),
    }
}

/// Puts the envelope fields first.
fn envelope(command: &str, seed: u64, body: Value) -> Value {
    let mut out = serde_json::Map::new();
    out.insert("schema_version".into(), json!(SCHEMA_VERSION));
    out.insert("command".into(), json!(command));
    out.insert("seed".into(), json!(seed));
    match body {
        Value::Object(fields) => out.extend(fields),
        other => {
            out.insert("result".into(), other);
        }
    }
    Value::Object(out)
}

fn emit(cli: &Cli, report: &Value) -> Result<(), String> {
    let mut text = serde_json::to_string_pretty(report).map_err(|e| e.to_string())?;
    text.push('\n');
    match &cli.out {
        Some(path) => std::fs::write(path, text).map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be positive");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("warning: thread pool already set up: {e}");
        }
    }
    let name = command_name(&cli.command);
    let (report, code) = match dispatch(&cli) {
        Ok(o) => {
            let mut body = o.report;
            if let Value::Object(m) = &mut body {
                m.insert("passed".into(), json!(o.passed));
            }
            (envelope(name, cli.seed, body), if o.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            let mut body = json!({ "error": e.message });
            if let Some(d) = e.detail {
                body["detail"] = d;
            }
            (envelope(name, cli.seed, body), 2)
        }
    };
    if let Err(e) = emit(&cli, &report) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    ExitCode::from(code)
}
