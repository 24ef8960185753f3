use std::path::PathBuf;
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use leadtime::planning::Granularity;
use leadtime_cli::{parse_families, run_pipeline, CliError, RunConfig, Stage};

/// Predict purchase-order availability dates and plan shipments.
#[derive(Parser, Debug)]
#[command(name = "leadtime", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML or JSON run configuration; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Order CSV. Synthetic orders are generated when omitted.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Training share of labeled rows.
    #[arg(long, global = true)]
    ratio: Option<f64>,
    /// Cross-validation folds.
    #[arg(long, global = true)]
    folds: Option<usize>,
    /// Comma-separated subset of ols,lasso,ridge,elastic_net,rf,gbm,nn.
    #[arg(long, global = true)]
    families: Option<String>,
    /// Hyperparameter grid file (TOML or JSON).
    #[arg(long, global = true)]
    grid: Option<PathBuf>,
    /// Random-search draws per family.
    #[arg(long, global = true)]
    candidates: Option<usize>,
    /// Worker threads.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Logging detail (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Args, Debug)]
struct PlanArgs {
    /// Planning date (YYYY-MM-DD); defaults to the latest creation date.
    #[arg(long)]
    as_of: Option<NaiveDate>,
    /// Number of periods in the load profile.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_parser = parse_granularity)]
    granularity: Option<Granularity>,
    /// Lane map file (TOML or JSON).
    #[arg(long)]
    lanes: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic order set with ground truth.
    Synth {
        /// Number of orders.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Split and one-hot encode the orders.
    Encode,
    /// Cross-validated random grid search per family.
    Tune,
    /// Fit the tuned models and write the comparison report.
    Train,
    /// Also write plot data, SVGs and feature importance.
    Evaluate,
    /// Also predict availability for every order.
    Predict,
    /// Also choose planning dates and build lane load profiles.
    Plan(PlanArgs),
    /// Run everything and write a markdown summary.
    Report(PlanArgs),
}

fn parse_granularity(s: &str) -> Result<Granularity, String> {
    match s {
        "month" => Ok(Granularity::Month),
        "week" => Ok(Granularity::Week),
        _ => Err(format!("expected month or week, got '{s}'")),
    }
}

fn build_config(cli: &Cli) -> Result<(RunConfig, Stage), CliError> {
    let c = &cli.common;
    let mut cfg = match &c.config {
        Some(p) => RunConfig::from_file(p)?,
        None => RunConfig::default(),
    };
    macro_rules! set {
        ($($field:ident),*) => {$(if let Some(v) = &c.$field { cfg.$field = v.clone().into(); })*};
    }
    set!(input, seed, grid);
    if let Some(v) = &c.out {
        cfg.out = v.clone();
    }
    if let Some(v) = c.ratio {
        cfg.ratio = v;
    }
    if let Some(v) = c.folds {
        cfg.folds = v;
    }
    if let Some(v) = &c.families {
        cfg.families = parse_families(v).map_err(CliError::Usage)?;
    }
    if let Some(v) = c.candidates {
        cfg.candidates = v;
    }
    if let Some(v) = c.workers {
        cfg.workers = v;
    }
    let mut apply_plan = |p: &PlanArgs| {
        if p.as_of.is_some() {
            cfg.plan.as_of = p.as_of;
        }
        if let Some(h) = p.horizon {
            cfg.plan.horizon = h;
        }
        if let Some(g) = p.granularity {
            cfg.plan.granularity = g;
        }
        if p.lanes.is_some() {
            cfg.plan.lanes = p.lanes.clone();
        }
    };
    let stage = match &cli.command {
        Command::Synth { n } => {
            if let Some(n) = n {
                cfg.generator.n_orders = *n;
            }
            Stage::Synth
        }
        Command::Encode => Stage::Encode,
        Command::Tune => Stage::Tune,
        Command::Train => Stage::Train,
        Command::Evaluate => Stage::Evaluate,
        Command::Predict => Stage::Predict,
        Command::Plan(p) => {
            apply_plan(p);
            Stage::Plan
        }
        Command::Report(p) => {
            apply_plan(p);
            Stage::Report
        }
    };
    Ok((cfg, stage))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = build_config(&cli).and_then(|(cfg, stage)| run_pipeline(&cfg, stage).map(|r| (cfg, r)));
    match result {
        Ok((cfg, r)) => {
            if let Some(report) = &r.report {
                println!("ranking (test RMSE): {}", report.ranking.join(" < "));
            }
            for (f, e) in &r.failed {
                eprintln!("warning: {f} failed: {e}");
            }
            println!(
                "{} artifacts written to {}",
                r.manifest.artifacts.len() + 1,
                cfg.out.display()
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
