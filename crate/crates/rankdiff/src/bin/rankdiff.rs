use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand as ClapSubcommand, ValueEnum};

use rankdiff::harness::commands::{self, RootArgs, RunOutcome, SimSystem};
use rankdiff::harness::{CoalescenceConfig, ExperimentConfig, FSpec, OutputFormat, Subcommand};
use rankdiff::model::{validate_params, InitialState};
use rankdiff::planar::SystemKind;
use rankdiff::timereversal::ReversalMode;

/// Two particles with rank-based drifts and volatilities.
#[derive(Parser, Debug)]
#[command(name = "rankdiff", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Time steps per path.
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Paths, draws or pairs.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Laggard drift.
    #[arg(long, global = true)]
    g: Option<f64>,
    /// Leader drift is -h.
    #[arg(long, global = true)]
    h: Option<f64>,
    /// Leader volatility.
    #[arg(long, global = true)]
    rho: Option<f64>,
    /// Laggard volatility; rho^2 + sigma^2 = 1.
    #[arg(long, global = true)]
    sigma: Option<f64>,
    /// Initial position of particle 1.
    #[arg(long, global = true, allow_hyphen_values = true)]
    x1: Option<f64>,
    /// Initial position of particle 2.
    #[arg(long, global = true, allow_hyphen_values = true)]
    x2: Option<f64>,
    /// Time horizon T.
    #[arg(long = "horizon", visible_alias = "T", global = true)]
    horizon: Option<f64>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum System {
    B,
    W,
    V,
    Skew,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Mode {
    Transient,
    Steady,
}

#[derive(ClapSubcommand, Debug)]
enum Command {
    /// One path of the planar system with ranks, local time and V.
    Simulate {
        #[arg(long, value_enum, default_value = "b")]
        system: System,
        /// Use a custom square root instead (needs --eps --delta --phi --vartheta).
        #[command(flatten)]
        root: RootFlags,
    },
    /// Exact draws of (X1(T), X2(T)).
    Sample,
    /// Joint density on a grid, with an SVG heatmap.
    Density {
        #[arg(long, default_value_t = 101)]
        grid: usize,
    },
    /// Strength of one square root, or all 64 diagonal / anti-diagonal roots.
    Classify {
        #[command(flatten)]
        root: RootFlags,
    },
    /// Backward drift profile and reversed-path checks.
    Reverse {
        #[arg(long, value_enum, default_value = "steady")]
        mode: Mode,
        /// Sets g = h = lambda / 2.
        #[arg(long)]
        lambda: Option<f64>,
        /// Forward starting point of Y (default x1 - x2).
        #[arg(long, allow_hyphen_values = true)]
        y0: Option<f64>,
    },
    /// The validation battery; exit code 1 if any check fails.
    Validate,
    /// Coalescence experiment for dZ = f(Z) dM + dA + dN (illustrative).
    Tanaka {
        /// sign | const:<c> | JSON descriptor
        #[arg(long, default_value = "sign")]
        f: String,
        #[arg(long, default_value_t = 0.5)]
        m_scale: f64,
        #[arg(long, default_value_t = 1.0)]
        n_scale: f64,
        #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
        drift: f64,
        /// Comma-separated time steps.
        #[arg(long, value_delimiter = ',')]
        dts: Option<Vec<f64>>,
    },
}

#[derive(Args, Debug)]
struct RootFlags {
    #[arg(long, allow_hyphen_values = true)]
    eps: Option<i8>,
    #[arg(long, allow_hyphen_values = true)]
    delta: Option<i8>,
    #[arg(long, allow_hyphen_values = true)]
    phi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    vartheta: Option<f64>,
}

impl RootFlags {
    fn parse(&self) -> Result<Option<RootArgs>, rankdiff::Error> {
        match (self.eps, self.delta, self.phi, self.vartheta) {
            (None, None, None, None) => Ok(None),
            (Some(eps), Some(delta), Some(phi), Some(vartheta)) => Ok(Some(RootArgs { eps, delta, phi, vartheta })),
            _ => Err(rankdiff::Error::InvalidArgument(
                "a custom root needs all of --eps --delta --phi --vartheta".into(),
            )),
        }
    }
}

fn subcommand(c: &Command) -> Subcommand {
    match c {
        Command::Simulate { .. } => Subcommand::Simulate,
        Command::Sample => Subcommand::Sample,
        Command::Density { .. } => Subcommand::Density,
        Command::Classify { .. } => Subcommand::Classify,
        Command::Reverse { .. } => Subcommand::Reverse,
        Command::Validate => Subcommand::Validate,
        Command::Tanaka { .. } => Subcommand::Tanaka,
    }
}

fn build_config(cli: &Cli) -> anyhow::Result<ExperimentConfig> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.subcommand = subcommand(&cli.command);
    let mut g = c.g.unwrap_or(cfg.params.g());
    let mut h = c.h.unwrap_or(cfg.params.h());
    if let Command::Reverse { lambda: Some(l), .. } = cli.command {
        g = l / 2.0;
        h = l / 2.0;
    }
    cfg.params = validate_params(
        g,
        h,
        c.rho.unwrap_or(cfg.params.rho()),
        c.sigma.unwrap_or(cfg.params.sigma()),
    )?;
    cfg.initial = InitialState::new(c.x1.unwrap_or(cfg.initial.x1), c.x2.unwrap_or(cfg.initial.x2));
    if let Some(v) = c.horizon {
        cfg.horizon = v;
    }
    if let Some(v) = c.steps {
        cfg.steps = v;
    }
    if let Some(v) = c.paths {
        cfg.paths = v;
    }
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = &c.out_dir {
        cfg.out_dir = v.clone();
    }
    if let Some(v) = c.format {
        cfg.format = match v {
            Format::Csv => OutputFormat::Csv,
            Format::Json => OutputFormat::Json,
        };
    }
    if !(cfg.horizon > 0.0 && cfg.horizon.is_finite()) || cfg.steps == 0 || cfg.paths == 0 {
        return Err(rankdiff::Error::InvalidArgument("horizon, steps and paths must be positive".into()).into());
    }
    Ok(cfg)
}

fn parse_f(s: &str) -> Result<FSpec, rankdiff::Error> {
    if s == "sign" {
        return Ok(FSpec::Sign);
    }
    if let Some(v) = s.strip_prefix("const:") {
        let value = v
            .parse()
            .map_err(|_| rankdiff::Error::InvalidArgument(format!("bad constant in --f {s}")))?;
        return Ok(FSpec::Constant { value });
    }
    serde_json::from_str(s).map_err(|e| rankdiff::Error::InvalidArgument(format!("--f: {e}")))
}

fn run(cli: &Cli) -> anyhow::Result<RunOutcome> {
    let cfg = build_config(cli)?;
    std::fs::create_dir_all(&cfg.out_dir).with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    let out = match &cli.command {
        Command::Simulate { system, root } => {
            let sys = match (root.parse()?, system) {
                (Some(r), _) => SimSystem::Euler(SystemKind::CustomRoot(rankdiff::classifier::build_config(
                    &cfg.params,
                    r.eps,
                    r.delta,
                    r.phi,
                    r.vartheta,
                )?)),
                (None, System::B) => SimSystem::Euler(SystemKind::B),
                (None, System::W) => SimSystem::Euler(SystemKind::W),
                (None, System::V) => SimSystem::Euler(SystemKind::V),
                (None, System::Skew) => SimSystem::Skew,
            };
            commands::simulate(&cfg, &sys)?
        }
        Command::Sample => commands::sample(&cfg)?,
        Command::Density { grid } => commands::density(&cfg, *grid)?,
        Command::Classify { root } => commands::classify(&cfg, root.parse()?)?,
        Command::Reverse { mode, y0, .. } => {
            let mode = match mode {
                Mode::Transient => ReversalMode::Transient,
                Mode::Steady => ReversalMode::SteadyState,
            };
            commands::reverse(&cfg, mode, y0.unwrap_or(cfg.initial.y()))?
        }
        Command::Validate => {
            let (out, reports) = commands::validate(&cfg)?;
            for r in reports.iter().filter(|r| !r.pass) {
                eprintln!("FAIL {}: statistic {} vs tolerance {}", r.name, r.statistic, r.tolerance);
            }
            out
        }
        Command::Tanaka { f, m_scale, n_scale, drift, dts } => {
            let mut base = CoalescenceConfig { m_scale: *m_scale, n_scale: *n_scale, drift: *drift, ..Default::default() };
            if let Some(d) = dts {
                base.dts = d.clone();
            }
            commands::tanaka(&cfg, &parse_f(f)?, &base)?
        }
    };
    Ok(out)
}

fn exit_code(e: &anyhow::Error) -> u8 {
    match e.downcast_ref::<rankdiff::Error>() {
        Some(rankdiff::Error::InvalidArgument(_) | rankdiff::Error::Validation(_) | rankdiff::Error::Json(_)) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cli.common.workers {
        if w == 0 {
            eprintln!("error: --workers must be at least 1");
            return ExitCode::from(2);
        }
        pool = pool.num_threads(w);
    }
    let pool = match pool.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    match pool.install(|| run(&cli)) {
        Ok(out) => {
            for f in &out.files {
                println!("{}", f.display());
            }
            if out.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
