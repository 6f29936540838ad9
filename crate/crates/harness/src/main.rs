use std::path::PathBuf;
use std::process::ExitCode;

use arraygnss::pipeline::Mode;
use arraygnss_harness::emit::{emit, VERSION};
use arraygnss_harness::stats::{CdfTable, ModeSummary};
use arraygnss_harness::{run_scenario, HarnessError, ScenarioConfig};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "arraygnss", version = VERSION, about = "Monte-Carlo runs of the baseline and schieber GNSS receivers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write trials.csv, cdf_<mode>.csv and summary.json.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override the configured trial count.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the configured master seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Worker threads (default: available cores).
        #[arg(long)]
        workers: Option<usize>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Baseline,
    Schieber,
    Both,
}

impl ModeArg {
    fn modes(self) -> Vec<Mode> {
        match self {
            ModeArg::Baseline => vec![Mode::Baseline],
            ModeArg::Schieber => vec![Mode::Schieber],
            ModeArg::Both => Mode::ALL.to_vec(),
        }
    }
}

fn run(command: Command) -> Result<(), HarnessError> {
    let Command::Run { config, out, trials, seed, mode, workers } = command;
    let mut cfg = ScenarioConfig::load(&config)?;
    if let Some(t) = trials {
        cfg.trials = t;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(m) = mode {
        cfg.modes = m.modes();
    }
    cfg.validate()?;
    let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let start = std::time::Instant::now();
    let progress = |done: usize, total: usize| eprintln!("trial {done}/{total}");
    let results = run_scenario(&cfg, workers, Some(&progress))?;
    emit(&results, &out)?;
    for &m in &cfg.modes {
        let s = ModeSummary::from_cdf(&CdfTable::new(results.errors(m)));
        let median = s.median_error_m.map_or("inf".to_owned(), |v| format!("{v:.1} m"));
        println!("{m}: success {}/{} ({:.0}%), median {median}", s.successes, s.trials, 100.0 * s.success_rate);
    }
    eprintln!("done in {:.1} s, results in {}", start.elapsed().as_secs_f64(), out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
