//! Command-line front end: config handling, commands and report output.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

pub mod commands;
pub mod config;
pub mod report;

use config::{parse_modes, Format, Mode, Overrides, Resolved, RunConfig};
use report::Report;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration or arguments.
    #[error("{0}")]
    Config(String),
    /// The validation battery found disagreements.
    #[error("{0} validation check(s) failed")]
    Validation(usize),
    #[error(transparent)]
    Numeric(#[from] symnet_core::Error),
    #[error("cannot write output: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "symnet", version, about = "Clustering and separation statistics for random networks on a circle or torus")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clustering coefficient by each requested mode.
    Clustering(Common),
    /// Chain counts P(k, b) over a grid of angles.
    Separation(Common),
    /// Clustering ratio and normalized antipodal curves over a half-width grid.
    SweepPhi(Common),
    /// Series, quadrature, lattice and Monte Carlo consistency checks.
    McValidate(Common),
    /// Kernel summary and leading Fourier coefficients.
    KernelInfo(Common),
}

#[derive(Debug, Clone)]
pub struct ModeList(pub Vec<Mode>);

#[derive(Debug, Args)]
pub struct Common {
    /// JSON run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file (a directory for sweep-phi); stdout when absent.
    #[arg(long)]
    pub out: Option<String>,
    #[arg(long, value_parser = |s: &str| s.parse::<Format>())]
    pub format: Option<Format>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated: closed, leading, full, quadrature, lattice, mc, or all.
    #[arg(long, value_parser = |s: &str| parse_modes(s).map(ModeList))]
    pub modes: Option<ModeList>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Window probability (uniform window kernel).
    #[arg(long)]
    pub p: Option<f64>,
    /// Window half-width in radians (uniform window kernel).
    #[arg(long)]
    pub phi: Option<f64>,
    #[arg(long)]
    pub radius: Option<f64>,
    /// Lattice node count for the lattice and Monte Carlo modes.
    #[arg(long)]
    pub n: Option<usize>,
}

impl Common {
    fn resolve(&self, default_modes: &[Mode]) -> Result<Resolved, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Overrides {
            p: self.p,
            phi: self.phi,
            radius: self.radius,
            n: self.n,
            trials: self.trials,
            seed: self.seed,
            modes: self.modes.clone().map(|m| m.0),
            format: self.format,
            out: self.out.clone(),
        }
        .apply(&mut cfg)?;
        Resolved::new(&cfg, default_modes)
    }
}

fn extension(f: Format) -> &'static str {
    match f {
        Format::Csv => "csv",
        Format::Json => "json",
    }
}

fn write_to(path: &Path, body: &str) -> Result<(), CliError> {
    std::fs::write(path, body).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Writes the report; `split` puts each table in its own file under `out`.
pub fn emit(report: &Report, cfg: &Resolved, split: bool) -> Result<(), CliError> {
    match (&cfg.out, split) {
        (Some(dir), true) => {
            let dir = Path::new(dir);
            std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
            for (name, body) in report.render_each(cfg.format) {
                write_to(&dir.join(format!("{name}.{}", extension(cfg.format))), &body)?;
            }
            Ok(())
        }
        (Some(file), false) => write_to(Path::new(file), &report.render(cfg.format)),
        (None, _) => std::io::stdout()
            .write_all(report.render(cfg.format).as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

const ANALYTIC: [Mode; 4] = [Mode::Closed, Mode::Leading, Mode::Full, Mode::Quadrature];

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    let (common, defaults): (&Common, &[Mode]) = match &cli.command {
        Command::Clustering(c) => (c, &ANALYTIC),
        Command::Separation(c) => (c, &[Mode::Closed, Mode::Leading, Mode::Quadrature]),
        Command::SweepPhi(c) | Command::McValidate(c) | Command::KernelInfo(c) => (c, &[Mode::Closed]),
    };
    if let Some(t) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let cfg = common.resolve(defaults)?;
    match &cli.command {
        Command::Clustering(_) => emit(&commands::clustering(&cfg)?, &cfg, false),
        Command::Separation(_) => emit(&commands::separation(&cfg)?, &cfg, false),
        Command::SweepPhi(_) => emit(&commands::sweep_phi(&cfg)?, &cfg, true),
        Command::KernelInfo(_) => emit(&commands::kernel_info(&cfg)?, &cfg, false),
        Command::McValidate(_) => {
            let (report, failures) = commands::mc_validate(&cfg)?;
            emit(&report, &cfg, false)?;
            if failures > 0 {
                Err(CliError::Validation(failures))
            } else {
                Ok(())
            }
        }
    }
}

/// Parses arguments, runs, and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
