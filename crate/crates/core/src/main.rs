use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use segservo::harness::{self, ExperimentKind, HarnessError, RunReport, Scenario, ScenarioConfig, OUT_DIR_ENV};

/// Segmentation-driven visual servoing experiments in a simulated world.
///
/// Exit status: 0 success, 2 configuration error, 3 the experiment ran but
/// failed or did not converge, 1 anything else.
#[derive(Debug, Parser)]
#[command(name = "segservo", version)]
struct Cli {
    /// Scenario file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Replaces the scenario seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory. Defaults to $SEGSERVO_OUT, then the scenario's `out`, then ./out.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Pseudoinverse jacobian file to start from or servo with.
    #[arg(long, global = true)]
    jacobian: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn the jacobian online from step responses.
    Learn,
    /// Frozen-jacobian step responses for each placement.
    ServoStep,
    /// Estimate object depth during an optical-axis approach.
    ApproachDepth {
        /// Replay an observation log instead of simulating.
        #[arg(long)]
        replay: Option<PathBuf>,
    },
    /// Centre, estimate depth and grasp.
    Grasp,
    /// Run every trial of a trial suite.
    Trials,
    /// Re-render a logged trajectory and compare its features.
    Replay {
        #[arg(long)]
        trajectory: PathBuf,
    },
}

fn scenario(cli: &Cli, kind: Option<ExperimentKind>, replay: Option<&Path>) -> Result<Scenario, HarnessError> {
    let mut scenario = match (&cli.config, replay) {
        (Some(path), _) => Scenario::load(path)?,
        (None, Some(_)) => {
            let config = ScenarioConfig::parse("kind = \"approach_depth\"\nseed = 0\n")?;
            Scenario::from_config(config, ".")?
        }
        (None, None) => return Err(HarnessError::Config("--config is required".into())),
    };
    if let Some(kind) = kind {
        if scenario.config.kind != kind {
            return Err(HarnessError::Config(format!(
                "scenario kind is `{}`, not `{}`",
                scenario.config.kind.name(),
                kind.name()
            )));
        }
    }
    if let Some(path) = replay {
        // command-line paths are relative to the working directory
        scenario.config.replay = Some(std::path::absolute(path).map_err(|e| HarnessError::Config(e.to_string()))?);
    }
    if let Some(seed) = cli.seed {
        scenario = scenario.with_seed(seed);
    }
    if let Some(path) = &cli.jacobian {
        scenario.load_jacobian(path)?;
    }
    Ok(scenario)
}

fn out_dir(cli: &Cli, scenario: &Scenario) -> PathBuf {
    if let Some(out) = &cli.out {
        return out.clone();
    }
    if let Some(env) = std::env::var_os(OUT_DIR_ENV).filter(|v| !v.is_empty()) {
        return env.into();
    }
    match &scenario.config.out {
        Some(out) => scenario.base_dir.join(out),
        None => PathBuf::from("out"),
    }
}

fn execute(cli: &Cli) -> Result<RunReport, HarnessError> {
    let (kind, replay) = match &cli.command {
        Command::Learn => (ExperimentKind::Learn, None),
        Command::ServoStep => (ExperimentKind::ServoStep, None),
        Command::ApproachDepth { replay } => (ExperimentKind::ApproachDepth, replay.as_deref()),
        Command::Grasp => (ExperimentKind::Grasp, None),
        Command::Trials => (ExperimentKind::TrialSuite, None),
        Command::Replay { trajectory } => {
            let scenario = scenario(cli, None, None)?;
            let text = std::fs::read_to_string(trajectory)
                .map_err(|e| HarnessError::Io(format!("{}: {e}", trajectory.display())))?;
            return Ok(harness::replay(&scenario, &text)?.report());
        }
    };
    let scenario = scenario(cli, Some(kind), replay)?;
    let report = harness::run(kind, &scenario)?;
    report.write_to(&out_dir(cli, &scenario))?;
    Ok(report)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(report) => {
            print!("{}", report.summary);
            ExitCode::from(if report.success { 0 } else { 3 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
