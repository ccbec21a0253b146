//! The `foldpath` command line: one subcommand per library operation plus a
//! seeded experiment runner that persists JSON reports and witnesses.

use std::ffi::OsString;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use foldpath_core::agraph::GraphError;
use foldpath_core::complexes::ComplexError;
use foldpath_core::folding::FoldError;
use foldpath_core::hyperbolicity::HyperbolicityError;
use foldpath_core::words::{Rank, WordError};
use serde::Serialize;
use serde_json::Value;

pub mod commands;
pub mod experiments;

pub use experiments::{Experiment, RunReport};

#[derive(Debug, Parser)]
#[command(
    name = "foldpath",
    version,
    about = "Folding paths, free bases and hyperbolicity checks"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Rank N of the free group.
    #[arg(long, global = true, default_value_t = 3)]
    pub rank: usize,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Directory for JSON and DOT artifacts.
    #[arg(long, global = true, env = "FOLDPATH_OUT", default_value = "out")]
    pub out: PathBuf,
    /// Print the result as JSON instead of a summary.
    #[arg(long, global = true)]
    pub json: bool,
    /// Re-check every produced certificate, including a round trip through
    /// the written artifact.
    #[arg(long, global = true)]
    pub verify: bool,
    /// Leave wall-clock timings out of reports.
    #[arg(long, global = true)]
    pub no_timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fold the wedge of a list of words by maximal folds.
    Fold {
        #[arg(long)]
        basis: String,
    },
    /// The bases read off along the folding path of a basis.
    PathBases {
        #[arg(long)]
        basis: String,
    },
    /// Equivalence and adjacency of two free bases.
    #[command(alias = "fb-adjacent")]
    Fb {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    /// Build or re-check a distance witness in the free factor complex.
    Witness(WitnessArgs),
    /// The free factor of a one-edge splitting given by a marking edge.
    Tau {
        /// Marking graph JSON.
        #[arg(long, conflicts_with = "basis")]
        marking: Option<PathBuf>,
        /// Use the rose marking whose petals carry these words.
        #[arg(long)]
        basis: Option<String>,
        #[arg(long)]
        edge: usize,
    },
    /// Four-point and slim-triangle δ of a finite graph.
    Delta {
        #[command(flatten)]
        graph: GraphArgs,
        #[arg(long, value_enum, default_value_t = DeltaMethod::Both)]
        method: DeltaMethod,
    },
    /// Join every pair of vertices inside each subset.
    ConeOff {
        #[command(flatten)]
        graph: GraphArgs,
        /// JSON array of vertex lists.
        #[arg(long, conflicts_with = "all")]
        subsets: Option<PathBuf>,
        /// Cone off the whole vertex set.
        #[arg(long)]
        all: bool,
    },
    /// Measure the constants of a thin triangles structure.
    ThinCheck {
        #[command(flatten)]
        graph: GraphArgs,
        /// Path family JSON; defaults to the lowest-id geodesics.
        #[arg(long)]
        paths: Option<PathBuf>,
        /// Center map JSON; defaults to median centers.
        #[arg(long)]
        phi: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        b1: u32,
        /// Condition (2) is sampled above this many tuples.
        #[arg(long, default_value_t = foldpath_core::hyperbolicity::DEFAULT_TUPLE_LIMIT)]
        tuple_limit: u64,
    },
    /// Run a seeded experiment and write `<name>.json` and its witnesses.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Args)]
pub struct WitnessArgs {
    #[arg(long, value_enum, required_unless_present = "check")]
    pub kind: Option<WitnessKindArg>,
    /// First basis (h-lipschitz).
    #[arg(long)]
    pub a: Option<String>,
    /// Second basis (h-lipschitz).
    #[arg(long)]
    pub b: Option<String>,
    /// Ambient basis of the factor (hq, density).
    #[arg(long)]
    pub ambient: Option<String>,
    /// Positions of the factor's generators, counted from 1, e.g. "1,3".
    #[arg(long)]
    pub subset: Option<String>,
    /// Re-validate a stored witness file instead of building one.
    #[arg(long, conflicts_with = "kind")]
    pub check: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WitnessKindArg {
    HLipschitz,
    Hq,
    Density,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DeltaMethod {
    FourPoint,
    Slim,
    Both,
}

#[derive(Debug, Clone, Args)]
pub struct GraphArgs {
    /// Graph JSON `{vertices, edges}`.
    #[arg(long = "in", conflicts_with = "graph")]
    pub input: Option<PathBuf>,
    /// Built-in family: path:N, cycle:N, complete:N, grid:RxC or tree:N
    /// (random, from --seed).
    #[arg(long)]
    pub graph: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub name: Experiment,
    /// Number of samples; each experiment has its own default.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Index of the first sample.
    #[arg(long, default_value_t = 0)]
    pub start: u64,
    /// Nielsen moves per random basis.
    #[arg(long, default_value_t = 12)]
    pub moves: usize,
}

/// Exit status classes: 1 for domain errors, 2 for malformed input.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CliError {
    Domain(String),
    Input(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Domain(_) => 1,
            CliError::Input(_) => 2,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Domain(_) => "domain",
            CliError::Input(_) => "input",
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Domain(m) | CliError::Input(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.message())
    }
}

impl std::error::Error for CliError {}

impl From<WordError> for CliError {
    fn from(e: WordError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        match e {
            GraphError::Json(_) | GraphError::Invalid(_) => CliError::Input(e.to_string()),
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<FoldError> for CliError {
    fn from(e: FoldError) -> Self {
        match e {
            FoldError::Word(w) => w.into(),
            FoldError::Graph(g) => g.into(),
            FoldError::EmptyWord { .. } | FoldError::WrongCount { .. } => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<ComplexError> for CliError {
    fn from(e: ComplexError) -> Self {
        match e {
            ComplexError::Word(w) => w.into(),
            ComplexError::Fold(f) => f.into(),
            ComplexError::Graph(g) => g.into(),
            ComplexError::InvalidSubset { .. } | ComplexError::UnknownEdge(_) => {
                CliError::Input(e.to_string())
            }
            _ => CliError::Domain(e.to_string()),
        }
    }
}

impl From<HyperbolicityError> for CliError {
    fn from(e: HyperbolicityError) -> Self {
        match e {
            HyperbolicityError::Disconnected => CliError::Domain(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// What a successful command prints.
pub struct Outcome {
    pub summary: String,
    pub json: Value,
}

impl Outcome {
    pub fn new(summary: impl Into<String>, json: impl Serialize) -> Outcome {
        Outcome {
            summary: summary.into(),
            json: to_value(&json),
        }
    }
}

pub(crate) fn to_value(v: &impl Serialize) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

/// Artifact directory, created on first write.
pub struct OutDir {
    root: PathBuf,
}

impl OutDir {
    pub fn new(root: &Path) -> OutDir {
        OutDir {
            root: root.to_path_buf(),
        }
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> CliResult<PathBuf> {
        fs::create_dir_all(&self.root)
            .map_err(|e| CliError::Domain(format!("cannot create {}: {e}", self.root.display())))?;
        let path = self.path(name);
        fs::write(&path, contents)
            .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))?;
        Ok(path)
    }

    pub fn write_json(&self, name: &str, value: &impl Serialize) -> CliResult<PathBuf> {
        let mut text = serde_json::to_string_pretty(value).expect("report types serialize");
        text.push('\n');
        self.write(name, &text)
    }
}

pub(crate) fn read_input(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

pub(crate) fn parse_json<T: serde::de::DeserializeOwned>(text: &str, what: &str) -> CliResult<T> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("malformed {what}: {e}")))
}

impl Global {
    pub fn rank(&self) -> CliResult<Rank> {
        Ok(Rank::new(self.rank)?)
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Output goes to stdout, errors to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(out) => {
            if cli.global.json {
                println!(
                    "{}",
                    serde_json::to_string_pretty(&out.json).expect("json value")
                );
            } else {
                println!("{}", out.summary);
            }
            0
        }
        Err(e) => {
            if cli.global.json {
                let v =
                    serde_json::json!({ "error": { "kind": e.kind(), "message": e.message() } });
                eprintln!("{v}");
            } else {
                eprintln!("error ({}): {}", e.kind(), e.message());
            }
            e.code()
        }
    }
}

pub fn execute(cli: &Cli) -> CliResult<Outcome> {
    let g = &cli.global;
    match &cli.command {
        Command::Fold { basis } => commands::fold(g, basis),
        Command::PathBases { basis } => commands::path_bases(g, basis),
        Command::Fb { a, b } => commands::fb(g, a, b),
        Command::Witness(args) => commands::witness(g, args),
        Command::Tau {
            marking,
            basis,
            edge,
        } => commands::tau(g, marking.as_deref(), basis.as_deref(), *edge),
        Command::Delta { graph, method } => commands::delta(g, graph, *method),
        Command::ConeOff {
            graph,
            subsets,
            all,
        } => commands::cone_off(g, graph, subsets.as_deref(), *all),
        Command::ThinCheck {
            graph,
            paths,
            phi,
            b1,
            tuple_limit,
        } => commands::thin_check(
            g,
            graph,
            paths.as_deref(),
            phi.as_deref(),
            *b1,
            *tuple_limit,
        ),
        Command::Experiment(args) => experiments::run_experiment(g, args),
    }
}
