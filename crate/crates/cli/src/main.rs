mod commands;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{
    CoherenceSettings, FlipKind, FlipSettings, IsometrySettings, MatrixSettings, PlanSettings,
    ReconstructSettings,
};
use incoherence::isometry::Envelope;
use incoherence::recovery::{ReconstructionBasis, SamplingPattern};

#[derive(Debug)]
pub enum CliError {
    /// Unreadable or invalid configuration, bad flags or output paths.
    Config(String),
    /// Non-convergence or a failed verification.
    Numerical(String),
}

impl CliError {
    fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Config(format!("{}: {e}", path.display()))
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<incoherence::Error> for CliError {
    fn from(e: incoherence::Error) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numerical(e.to_string())
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "incoherence",
    version,
    about = "Coherence profiles, isometry checks and multilevel recovery experiments"
)]
struct Cli {
    /// JSON settings for the subcommand; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads; defaults to the available cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Line and block coherence profiles with decay fits.
    Coherence(CoherenceArgs),
    /// Leading section of the change-of-basis matrix as CSV.
    Matrix(MatrixArgs),
    /// Build and verify the isometry with prescribed coherence envelopes.
    Isometry(IsometryArgs),
    /// Recover the test function from multilevel Fourier samples.
    Reconstruct(ReconstructArgs),
    /// Compare recovery of Haar coefficients before and after reordering them.
    Fliptest(FlipArgs),
    /// Local coherences and multilevel sampling budgets.
    Plan,
}

#[derive(Debug, Args)]
struct CoherenceArgs {
    #[arg(long)]
    n_max: Option<usize>,
}

#[derive(Debug, Args)]
struct MatrixArgs {
    #[arg(long = "M")]
    rows: Option<usize>,
    #[arg(long = "N")]
    cols: Option<usize>,
}

#[derive(Debug, Args)]
struct IsometryArgs {
    /// Row envelope preset.
    #[arg(long)]
    f: Option<String>,
    /// Column envelope preset.
    #[arg(long)]
    g: Option<String>,
    #[arg(long)]
    horizon: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BasisArg {
    Wavelet,
    Legendre,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PatternArg {
    #[value(name = "A", alias = "a")]
    A,
    #[value(name = "B", alias = "b")]
    B,
    Full,
}

#[derive(Debug, Args)]
struct ReconstructArgs {
    #[arg(long, value_enum)]
    basis: Option<BasisArg>,
    #[arg(long, value_enum)]
    pattern: Option<PatternArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Full,
    Within,
}

#[derive(Debug, Args)]
struct FlipArgs {
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
}

fn dispatch(cli: &Cli) -> Result<(), CliError> {
    let config = cli.config.as_deref();
    let out = cli.out.as_path();
    let seed = cli.seed;
    match &cli.command {
        Command::Coherence(a) => {
            let mut cfg: CoherenceSettings = commands::load(config)?;
            if let Some(n) = a.n_max {
                cfg.n_max = n;
            }
            commands::coherence_cmd(&cfg, out, seed)
        }
        Command::Matrix(a) => {
            let mut cfg: MatrixSettings = commands::load(config)?;
            cfg.rows = a.rows.unwrap_or(cfg.rows);
            cfg.cols = a.cols.unwrap_or(cfg.cols);
            commands::matrix_cmd(&cfg, out, seed)
        }
        Command::Isometry(a) => {
            let mut cfg: IsometrySettings = commands::load(config)?;
            if let Some(f) = &a.f {
                cfg.f = Envelope::preset(f)?;
            }
            if let Some(g) = &a.g {
                cfg.g = Envelope::preset(g)?;
            }
            cfg.horizon = a.horizon.unwrap_or(cfg.horizon);
            commands::isometry_cmd(&cfg, out, seed)
        }
        Command::Reconstruct(a) => {
            let mut cfg: ReconstructSettings = commands::load(config)?;
            match (a.basis, cfg.basis) {
                (Some(BasisArg::Wavelet), ReconstructionBasis::Legendre) => {
                    cfg.basis = ReconstructionBasis::default_wavelet()
                }
                (Some(BasisArg::Legendre), _) => cfg.basis = ReconstructionBasis::Legendre,
                _ => {}
            }
            if let Some(p) = a.pattern {
                cfg.pattern = match p {
                    PatternArg::A => SamplingPattern::A,
                    PatternArg::B => SamplingPattern::B,
                    PatternArg::Full => SamplingPattern::Full,
                };
            }
            commands::reconstruct_cmd(&cfg, out, seed)
        }
        Command::Fliptest(a) => {
            let mut cfg: FlipSettings = commands::load(config)?;
            if let Some(m) = a.mode {
                cfg.mode = match m {
                    ModeArg::Full => FlipKind::Full,
                    ModeArg::Within => FlipKind::Within,
                };
            }
            commands::fliptest_cmd(&cfg, out, seed)
        }
        Command::Plan => {
            let cfg: PlanSettings = commands::load(config)?;
            commands::plan_cmd(&cfg, out, seed)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("configuration error: --threads must be positive");
            return ExitCode::from(2);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .expect("the global pool is configured once");
    }
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
