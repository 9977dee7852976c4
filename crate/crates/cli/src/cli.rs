//! Argument parsing and dispatch.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::commands;
use crate::config::{Domain, RunConfig, Settings, CONFIG_ENV};
use crate::error::{CliResult, ExitStatus};
use crate::suites::Suite;

#[derive(Debug, Parser)]
#[command(name = "szego", version, about = "Truncated Szego kernels and metrics for monogenic functions")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// TOML config file; flags take precedence over its entries.
    #[arg(long, global = true, env = CONFIG_ENV)]
    pub config: Option<PathBuf>,
    /// Number of Clifford generators (1..=3).
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Maximal degree N of the monogenic polynomial basis.
    #[arg(long, global = true)]
    pub degree: Option<u32>,
    /// Quadrature order on the boundary sphere (at least 2N+2).
    #[arg(long, global = true)]
    pub quad_order: Option<usize>,
    /// Step of the central differences used by Dirac-operator checks.
    #[arg(long, global = true)]
    pub fd_step: Option<f64>,
    /// Step of the central differences of log lambda.
    #[arg(long, global = true)]
    pub curvature_step: Option<f64>,
    /// Pass threshold for self-tests.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed of the sampling RNG.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Kernel cache directory (default .szego-cache).
    #[arg(long, global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Domain: ball or helper (Mobius image of the ball).
    #[arg(long, global = true)]
    pub domain: Option<Domain>,
    /// Distance of the helper map pole from the origin (> 1).
    #[arg(long, global = true)]
    pub helper_pole_distance: Option<f64>,
    /// Lattice step of the distance engine.
    #[arg(long, global = true)]
    pub grid_step: Option<f64>,
    /// Number of sampled points where a command samples its own.
    #[arg(long, global = true)]
    pub points: Option<usize>,
    /// Orthonormalization mode: real or clifford.
    #[arg(long, global = true)]
    pub mode: Option<String>,
}

impl GlobalArgs {
    fn settings(&self) -> Settings {
        Settings {
            m: self.m,
            degree: self.degree,
            quad_order: self.quad_order,
            fd_step: self.fd_step,
            curvature_step: self.curvature_step,
            tol: self.tol,
            seed: self.seed,
            cache_dir: self.cache_dir.clone(),
            out: self.out.clone(),
            domain: self.domain,
            helper_pole_distance: self.helper_pole_distance,
            grid_step: self.grid_step,
            points: self.points,
            mode: self.mode.clone(),
        }
    }

    pub fn resolve(&self) -> CliResult<RunConfig> {
        let base = match &self.config {
            Some(path) => Settings::from_file(path)?,
            None => Settings::default(),
        };
        RunConfig::resolve(base.overlay(self.settings()))
    }
}

/// One point; aliased so clap treats it as a single value.
pub type Coords = Vec<f64>;

fn parse_point(s: &str) -> Result<Coords, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"))).collect()
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build (or load) the kernel for the configured domain and run a reproducing self-test.
    Kernel,
    /// CSV of lambda, curvature, diagonal positivity and the Caratheodory bound at points.
    Metric {
        /// Point as comma-separated coordinates z0,...,zm; repeatable.
        #[arg(long = "point", id = "point", allow_hyphen_values = true, value_parser = parse_point)]
        points: Vec<Coords>,
    },
    /// Distance upper bound between two points with its witness path.
    Distance {
        #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
        from: Coords,
        #[arg(long, allow_hyphen_values = true, value_parser = parse_point)]
        to: Coords,
        /// CSV file receiving the witness polyline.
        #[arg(long)]
        path_out: Option<PathBuf>,
    },
    /// CSV of Caratheodory lower bounds at points, or a boundary blow-up scan.
    Caratheodory {
        #[arg(long = "point", id = "point", allow_hyphen_values = true, value_parser = parse_point)]
        points: Vec<Coords>,
        /// Scan the K2 bound along e_1 towards the boundary instead.
        #[arg(long)]
        blowup: bool,
    },
    /// Run a verification suite and emit its JSON report.
    Verify {
        #[arg(default_value = "all")]
        suite: Suite,
        /// Write a markdown traceability table of the checks to this file.
        #[arg(long)]
        traceability: Option<PathBuf>,
        /// Omit wall-clock timings so reports compare bit for bit.
        #[arg(long)]
        no_timing: bool,
    },
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitStatus::Usage.code() } else { ExitStatus::Pass.code() };
        }
    };
    match dispatch(&cli) {
        Ok(status) => status.code(),
        Err(e) => {
            eprintln!("error: {e}");
            ExitStatus::Usage.code()
        }
    }
}

fn dispatch(cli: &Cli) -> CliResult<ExitStatus> {
    let cfg = cli.global.resolve()?;
    match &cli.command {
        Command::Kernel => commands::kernel(&cfg),
        Command::Metric { points } => commands::metric(&cfg, points),
        Command::Distance { from, to, path_out } => commands::distance(&cfg, from, to, path_out.as_deref()),
        Command::Caratheodory { points, blowup } => commands::caratheodory(&cfg, points, *blowup),
        Command::Verify { suite, traceability, no_timing } => {
            commands::verify(&cfg, *suite, traceability.as_deref(), !no_timing)
        }
    }
}
