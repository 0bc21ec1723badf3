use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use trajsel_core::{run_stage, ProtocolConfig, Stage};

#[derive(Parser)]
#[command(name = "trajsel", version, about = "Warm-started per-run algorithm selection pipeline")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Start from the small desk-scale preset instead of the full protocol.
    #[arg(long, global = true)]
    desk: bool,
    #[command(flatten)]
    keys: Keys,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Run the first phase and all warm-started continuations.
    Collect,
    /// Trajectory features, fixed-budget performance and convergence tables.
    Features,
    /// Grid search and leave-one-instance-out evaluation of every model.
    Train,
    /// Per-run selection, losses and baselines.
    Select,
    /// Figures and markdown tables.
    Report,
    /// Every stage in order.
    All,
}

/// One flag per configuration key; each overrides the file.
#[derive(Args)]
struct Keys {
    #[arg(long = "dimension", global = true)]
    dimension: Option<String>,
    /// e.g. 1-24 or 1,2,3,8
    #[arg(long = "functions", global = true)]
    functions: Option<String>,
    #[arg(long = "instances", global = true)]
    instances: Option<String>,
    #[arg(long = "repetitions", global = true)]
    repetitions: Option<String>,
    #[arg(long = "portfolio", global = true)]
    portfolio: Option<String>,
    #[arg(long = "a1_multiplier", global = true)]
    a1_multiplier: Option<String>,
    #[arg(long = "feature_budget", global = true)]
    feature_budget: Option<String>,
    #[arg(long = "a2_budgets", global = true)]
    a2_budgets: Option<String>,
    #[arg(long = "seed", global = true)]
    seed: Option<String>,
    /// Worker threads, 0 for all cores.
    #[arg(long = "jobs", global = true)]
    jobs: Option<String>,
    #[arg(long = "out", global = true)]
    out: Option<String>,
    /// Algorithms left out of the reduced-portfolio evaluation, e.g. BFGS.
    #[arg(long = "exclude", global = true)]
    exclude: Option<String>,
    #[arg(long = "n_estimators", global = true)]
    n_estimators: Option<String>,
    #[arg(long = "max_features", global = true)]
    max_features: Option<String>,
    #[arg(long = "max_depth", global = true)]
    max_depth: Option<String>,
    #[arg(long = "min_samples_split", global = true)]
    min_samples_split: Option<String>,
    #[arg(long = "criterion", global = true)]
    criterion: Option<String>,
}

impl Keys {
    fn pairs(&self) -> Vec<(&'static str, &Option<String>)> {
        vec![
            ("dimension", &self.dimension),
            ("functions", &self.functions),
            ("instances", &self.instances),
            ("repetitions", &self.repetitions),
            ("portfolio", &self.portfolio),
            ("a1_multiplier", &self.a1_multiplier),
            ("feature_budget", &self.feature_budget),
            ("a2_budgets", &self.a2_budgets),
            ("seed", &self.seed),
            ("jobs", &self.jobs),
            ("out", &self.out),
            ("exclude", &self.exclude),
            ("n_estimators", &self.n_estimators),
            ("max_features", &self.max_features),
            ("max_depth", &self.max_depth),
            ("min_samples_split", &self.min_samples_split),
            ("criterion", &self.criterion),
        ]
    }
}

fn config(cli: &Cli) -> trajsel_core::Result<ProtocolConfig> {
    let mut cfg = match (&cli.config, cli.desk) {
        (Some(path), _) => ProtocolConfig::load(path)?,
        (None, true) => ProtocolConfig::desk(),
        (None, false) => ProtocolConfig::default(),
    };
    for (k, v) in cli.keys.pairs() {
        if let Some(v) = v {
            cfg.set(k, v)?;
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let stages: Vec<Stage> = match cli.command {
        Command::Collect => vec![Stage::Collect],
        Command::Features => vec![Stage::Features],
        Command::Train => vec![Stage::Train],
        Command::Select => vec![Stage::Select],
        Command::Report => vec![Stage::Report],
        Command::All => Stage::ALL.to_vec(),
    };
    if let Err(e) = std::fs::create_dir_all(&cfg.out)
        .and_then(|_| std::fs::write(cfg.out.join("config.txt"), cfg.to_text()))
    {
        eprintln!("error: {}: {e}", cfg.out.display());
        return ExitCode::FAILURE;
    }
    for stage in stages {
        let t = Instant::now();
        if let Err(e) = run_stage(&cfg, stage) {
            eprintln!("error in {stage}: {e}");
            return ExitCode::FAILURE;
        }
        eprintln!("{stage}: done in {:.1}s", t.elapsed().as_secs_f64());
    }
    ExitCode::SUCCESS
}
