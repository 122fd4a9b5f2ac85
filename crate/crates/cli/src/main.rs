use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rrtx_cli::{run_capacity_sweep, run_power_sweep, run_verify, CliError, ExperimentConfig, SweepResult};

/// RRTx orthogonalization experiments.
#[derive(Parser)]
#[command(name = "rrtx", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum RRTx power for optimized and random DoF over the η grid.
    PowerSweep(Common),
    /// Per-UE capacities of the proposed scheme and the ZF/MRC baselines.
    CapacitySweep(Common),
    /// Run the invariant suite on random instances.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Also inject a corrupted Θ, which the orthogonality check must reject.
        #[arg(long)]
        self_test: bool,
    },
}

#[derive(Args)]
struct Common {
    /// JSON configuration file; defaults are used when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides `master_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; overrides `output`. Standard output when neither is set.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides `trials`.
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.master_seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        if let Some(out) = &self.out {
            cfg.output = Some(out.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_result(result: &SweepResult, cfg: &ExperimentConfig) -> Result<(), CliError> {
    match &cfg.output {
        Some(path) => {
            let file =
                File::create(path).map_err(|e| CliError::Config(format!("cannot create {}: {e}", path.display())))?;
            result.write_csv(BufWriter::new(file))
        }
        None => result.write_csv(io::stdout().lock()),
    }
}

fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::PowerSweep(common) => {
            let cfg = common.load()?;
            write_result(&run_power_sweep(&cfg)?, &cfg)?;
            Ok(0)
        }
        Command::CapacitySweep(common) => {
            let cfg = common.load()?;
            write_result(&run_capacity_sweep(&cfg)?, &cfg)?;
            Ok(0)
        }
        Command::Verify { common, self_test } => {
            let cfg = common.load()?;
            let report = run_verify(&cfg, self_test)?;
            let text = report.to_string();
            match &cfg.output {
                Some(path) => std::fs::write(path, &text)?,
                None if !common.quiet => io::stdout().lock().write_all(text.as_bytes())?,
                None => {}
            }
            for failure in report.failures() {
                eprintln!("verification failed: {}", failure.name);
            }
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
