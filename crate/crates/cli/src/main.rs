use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use tsso_core::experiment::{Experiment, ExperimentConfig, ExperimentError, SolveStrategy, SweepAxis};

/// Two-stage DTR placement and scheduling against cascading-failure risk.
#[derive(Debug, Parser)]
#[command(name = "tsso-dtr", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Overrides the configured output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Sample the cascading-failure database.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Solve for a plan and its guarantee.
    Solve {
        #[command(flatten)]
        common: Common,
        /// SCG, one-stage, flexible or a baseline (RL, FR, LPF, LHF, GS, MA, LS, RG, GPG, GCG).
        #[arg(long, default_value = "SCG")]
        strategy: String,
    },
    /// Compare every configured strategy and the one-stage model.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Sweep alpha, the partition size, the load ratio or the guarantee surface.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// alpha, partition, load or guarantee-surface.
        #[arg(long)]
        axis: String,
    },
    /// Residual DTR service life of solved plans.
    ServiceLife {
        #[command(flatten)]
        common: Common,
        /// Plan files; defaults to the SCG and one-stage plans in the output directory.
        #[arg(long = "plan")]
        plans: Vec<PathBuf>,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Generate { common }
            | Command::Solve { common, .. }
            | Command::Compare { common }
            | Command::Sweep { common, .. }
            | Command::ServiceLife { common, .. } => common,
        }
    }
}

fn experiment(common: &Common) -> Result<Experiment> {
    if let Some(n) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the worker pool")?;
    }
    let mut config = ExperimentConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(out) = &common.out {
        config.output_dir = out.clone();
    }
    Ok(Experiment::new(config)?)
}

fn run(cli: Cli) -> Result<()> {
    let exp = experiment(cli.command.common())?;
    match &cli.command {
        Command::Generate { .. } => {
            let rows = exp.cmd_generate()?;
            println!("state  chains  mean_Y_MW  exceed  depth");
            for r in &rows {
                println!(
                    "{:>5}  {:>6}  {:>9.1}  {:>6.3}  {:>5.2}",
                    r.state, r.chains, r.mean_load_loss_mw, r.exceed_fraction, r.mean_depth
                );
            }
            println!("database written to {}", exp.database_path().display());
        }
        Command::Solve { strategy, .. } => {
            let strategy: SolveStrategy = strategy.parse()?;
            let out = exp.cmd_solve(strategy)?;
            let r = &out.record;
            println!("{}: F = {:.3}, RiskW = {:.3}, BPI = {:.3}", r.strategy, r.value, r.risk, r.bpi);
            println!("placement: {:?}", r.placement);
            for (i, t) in r.schedules.iter().enumerate() {
                println!("  state {}: {:?}", i + 1, t);
            }
            if let Some(g) = &r.guarantee {
                println!(
                    "kappa_f1 = {:.3}, pure = {:.3}, error = {:.3}, guarantee = {:.3}",
                    g.kappa_f1, g.pure, g.error, g.certified
                );
            }
            println!("plan written to {}", out.plan_path.display());
        }
        Command::Compare { .. } => {
            let (rows, stages) = exp.cmd_compare()?;
            println!("{:<10} {:>10} {:>10}", "strategy", "F", "BPI");
            for r in &rows {
                println!("{:<10} {:>10.3} {:>10.3}", r.strategy, r.f, r.bpi);
            }
            if let Some(mean) = stages.last() {
                println!("one-stage mean F = {:.3}, two-stage mean F = {:.3}", mean.one_stage_f, mean.two_stage_f);
            }
        }
        Command::Sweep { axis, .. } => {
            let axis: SweepAxis = axis.parse()?;
            let path = exp.cmd_sweep(axis)?;
            println!("{} sweep written to {}", axis.name(), path.display());
        }
        Command::ServiceLife { plans, .. } => {
            let rows = exp.cmd_service_life(plans)?;
            for r in &rows {
                println!("{:<10} line {:>3}  {:>4} y  residual {:.2}", r.plan, r.line, r.years, r.residual);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TSSO_DTR_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return ExitCode::from(if usage { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<ExperimentError>().map_or(1, ExperimentError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
