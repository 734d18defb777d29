mod commands;
mod tables;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use freqsec::model::Mode;

/// Frequency-secured energy and ancillary-service market clearing.
#[derive(Debug, Parser)]
#[command(name = "freqsec", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clear a scenario and write the result CSVs.
    Clear(ClearArgs),
    /// Write the post-fault frequency trajectory of one operating point.
    Simulate(SimulateArgs),
    /// Re-run a bundled case-study table and compare cell by cell.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    Ed,
    Uc,
}

#[derive(Debug, Args)]
struct ScenarioArgs {
    #[arg(long, value_name = "PATH")]
    scenario: Option<PathBuf>,
    /// Override the scenario demand (MW).
    #[arg(long, value_name = "MW")]
    demand: Option<f64>,
    /// Override the available renewable output (MW).
    #[arg(long, value_name = "MW")]
    res: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Pay the full marginal value for a reduced largest loss.
    #[arg(long)]
    uncapped_loss_payment: bool,
}

#[derive(Debug, Args)]
struct ClearArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Print solver warnings and the branch-and-bound log to stderr.
    #[arg(long)]
    verbose: bool,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// System inertia H (MW·s). Required with --fr.
    #[arg(long, value_name = "MWS")]
    inertia: Option<f64>,
    /// Lost infeed P_L (MW). Required with --fr.
    #[arg(long, value_name = "MW")]
    loss: Option<f64>,
    /// One FR service as AMOUNT@DELIVERY or AMOUNT@DELIVERY+DELAY (MW, s).
    /// Without it the scenario is cleared and its dispatch simulated.
    #[arg(long, value_name = "SPEC")]
    fr: Vec<String>,
    /// Sampling step (s).
    #[arg(long, value_name = "S", default_value_t = 0.01)]
    step: f64,
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    verbose: bool,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    /// Table number.
    table: u32,
    #[arg(long)]
    verbose: bool,
}

/// Process exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Usage = 1,
    Infeasible = 2,
    Mismatch = 3,
}

/// Inputs and output location shared by the commands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: Option<PathBuf>,
    pub demand: Option<f64>,
    pub res: Option<f64>,
    pub mode: Option<Mode>,
    pub out: PathBuf,
    pub verbose: bool,
    pub uncapped_loss_payment: bool,
    pub step: f64,
}

impl RunConfig {
    fn new(s: ScenarioArgs, out: PathBuf, verbose: bool, step: f64) -> Self {
        RunConfig {
            scenario: s.scenario,
            demand: s.demand,
            res: s.res,
            mode: s.mode.map(|m| match m {
                ModeArg::Ed => Mode::EconomicDispatch,
                ModeArg::Uc => Mode::UnitCommitment,
            }),
            out,
            verbose,
            uncapped_loss_payment: s.uncapped_loss_payment,
            step,
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Usage as u8 } else { Exit::Ok as u8 });
        }
    };
    let code = match cli.command {
        Command::Clear(a) => commands::clear(&RunConfig::new(a.scenario, a.out, a.verbose, 0.01)),
        Command::Simulate(a) => {
            let cfg = RunConfig::new(a.scenario, a.out, a.verbose, a.step);
            commands::simulate(&cfg, a.inertia, a.loss, &a.fr)
        }
        Command::Reproduce(a) => tables::reproduce(a.table, a.verbose),
    };
    ExitCode::from(code as u8)
}
