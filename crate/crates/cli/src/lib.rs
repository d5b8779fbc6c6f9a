//! Command-line front end of `spiking-extinction`.
//!
//! [`run`] takes the full argument vector and returns the process exit code:
//! 0 on success, 1 on usage errors, 2 on numerical failures, 3 when an
//! experiment or the validation suite reports a failed check.

mod commands;
pub mod config;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use spiking_extinction::Error;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    /// The run finished and at least one check failed.
    Failed(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Failed(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Failed(m) => write!(f, "FAIL: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Usage(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "spikext", version, about = "Extinction times of a binary spiking-neuron network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Monte Carlo extinction times, one CSV row per replica.
    Simulate(Common),
    /// Exact quantities from the Markov chain.
    Oracle {
        #[arg(value_enum)]
        quantity: Quantity,
        #[command(flatten)]
        common: Common,
    },
    /// Run a named experiment (lattice_concentration, complete_exponentiality,
    /// survival_bound, ek, gamma_scan).
    Experiment {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Check the coupling and oracle identities.
    Validate(Common),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    Mean,
    Survival,
    Beta,
    Invariant,
    Gap,
}

impl Quantity {
    fn as_str(self) -> &'static str {
        match self {
            Quantity::Mean => "mean",
            Quantity::Survival => "survival",
            Quantity::Beta => "beta",
            Quantity::Invariant => "invariant",
            Quantity::Gap => "gap",
        }
    }
}

/// All values are kept as text until merged with the config file.
#[derive(Args, Debug, Default)]
struct Common {
    /// Flat key=value file; flags override it.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// lattice, complete or custom:<path>
    #[arg(long)]
    graph: Option<String>,
    /// Lattice half-width, complete-graph size, or a comma list for experiments.
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    replicas: Option<String>,
    /// Integer seed, or `random` for entropy.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    #[arg(long, value_name = "PATH")]
    out: Option<String>,
    #[arg(long)]
    workers: Option<String>,
    /// Truncation tolerance of the survival oracle.
    #[arg(long)]
    tolerance: Option<String>,
    #[arg(long)]
    gammas: Option<String>,
    #[arg(long)]
    ks: Option<String>,
    #[arg(long)]
    times: Option<String>,
    #[arg(long)]
    cv_threshold: Option<String>,
    /// `full` or a comma list of active neuron labels.
    #[arg(long)]
    init: Option<String>,
    /// Event trace of replica 0, as CSV.
    #[arg(long, value_name = "PATH")]
    trace: Option<String>,
    #[arg(long)]
    points: Option<String>,
    #[arg(long)]
    t_max: Option<String>,
}

impl Common {
    fn settings(self) -> Result<config::Settings, CliError> {
        let mut s = match &self.config {
            Some(p) => config::load_config(p)?,
            None => config::Settings::default(),
        };
        let flags = [
            ("graph", self.graph),
            ("n", self.n),
            ("gamma", self.gamma),
            ("replicas", self.replicas),
            ("seed", self.seed),
            ("horizon", self.horizon),
            ("out", self.out),
            ("workers", self.workers),
            ("tolerance", self.tolerance),
            ("gammas", self.gammas),
            ("ks", self.ks),
            ("times", self.times),
            ("cv_threshold", self.cv_threshold),
            ("init", self.init),
            ("trace", self.trace),
            ("points", self.points),
            ("t_max", self.t_max),
        ];
        s.overlay_flags(flags.into_iter().filter_map(|(k, v)| v.map(|v| (k, v))));
        Ok(s)
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate(c) => commands::simulate(c.settings()?, out),
        Command::Oracle { quantity, common } => commands::oracle(quantity, common.settings()?, out),
        Command::Experiment { name, common } => commands::experiment(&name, common.settings()?, out, err),
        Command::Validate(c) => commands::validate(c.settings()?, out),
    }
}

/// Parses `args` (program name first) and runs the subcommand on the
/// process's standard streams.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

/// Same as [`run`], writing tables to `out` and diagnostics to `err`.
pub fn run_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    match dispatch(cli, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "{e}");
            e.code()
        }
    }
}
