use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use duelsim_core::harness::{
    default_hyperparams, maxinp_defaults, read_records, run_experiment, summarize, write_curves, write_records,
    ExperimentConfig, HyperMode,
};
use duelsim_core::policies::CouplingSchedule;
use duelsim_core::Error;

#[derive(Parser)]
#[command(name = "duelsim", version, about = "Contextual dueling bandit simulations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a config file and write per-round records.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config's output path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Average a records file into mean/std curves and print the totals table.
    Summarize {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the default hyperparameter schedule.
    Hyperparams {
        #[arg(long, default_value = "practical")]
        mode: String,
        #[arg(long)]
        d: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 0.1)]
        mu: f64,
        #[arg(long, default_value_t = 0.5)]
        rho: f64,
    },
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::Parameter(_) => Failure::Config(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(m)) => {
            eprintln!("config error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), Failure> {
    match command {
        Command::Run { config, seed, out } => {
            let mut cfg = ExperimentConfig::from_file(&config).map_err(|e| match e {
                Error::Io { .. } => Failure::Config(e.to_string()),
                other => other.into(),
            })?;
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let out = out
                .or_else(|| cfg.output.clone())
                .ok_or_else(|| Failure::Config("no output path: set 'output' in the config or pass --out".into()))?;
            let outcome = run_experiment(&cfg)?;
            write_records(&outcome.records, &out).map_err(|e| Failure::Runtime(e.to_string()))?;
            if !outcome.records.is_empty() {
                let summary = summarize(&outcome.records).map_err(|e| Failure::Runtime(e.to_string()))?;
                print!("{}", summary.totals_table());
            }
            if !outcome.failures.is_empty() {
                for f in &outcome.failures {
                    eprintln!("run {} / {}: {}", f.run, f.policy, f.message);
                }
                return Err(Failure::Runtime(format!("{} cell(s) failed", outcome.failures.len())));
            }
            Ok(())
        }
        Command::Summarize { input, out } => {
            let records = read_records(&input).map_err(|e| Failure::Runtime(e.to_string()))?;
            let summary = summarize(&records).map_err(|e| Failure::Runtime(e.to_string()))?;
            write_curves(&summary, &out).map_err(|e| Failure::Runtime(e.to_string()))?;
            print!("{}", summary.totals_table());
            Ok(())
        }
        Command::Hyperparams { mode, d, n, horizon, mu, rho } => {
            let mode: HyperMode = mode.parse()?;
            let hp = default_hyperparams(mode, horizon, d, n, mu, rho)?;
            let mp = maxinp_defaults(n, d, horizon);
            let mut o = std::io::stdout().lock();
            let _ = writeln!(o, "mode      {mode}");
            let _ = writeln!(o, "d         {d}");
            let _ = writeln!(o, "n         {n}");
            let _ = writeln!(o, "horizon   {horizon}");
            let _ = writeln!(o, "tau       {}", hp.tau);
            let _ = writeln!(o, "c1        {}", hp.c1);
            let _ = writeln!(o, "c2        {}", hp.c2);
            let _ = writeln!(o, "c_thresh  {}", hp.c_thresh);
            if hp.relaxed_threshold {
                let _ = writeln!(o, "note      c_thresh = c2 relaxes the strict c_thresh < c2 ordering");
            }
            let formula = match hp.coupling {
                CouplingSchedule::Practical { .. } => "min(1, d / sqrt(t - tau) * ln(d T))",
                CouplingSchedule::Theory { .. } => "min(1, sqrt(2d) / (2 sqrt(t - tau)) * (3 c1 + c2) * sqrt(ln(2T/d)))",
                CouplingSchedule::Constant(_) => "constant",
            };
            let _ = writeln!(o, "p_t       {formula}  (1 for t <= tau)");
            for t in [hp.tau + 1, hp.tau + 100, (hp.tau + horizon) / 2, horizon] {
                if t > hp.tau && t <= horizon {
                    let _ = writeln!(o, "p_{t:<8}{}", hp.coupling.probability(t));
                }
            }
            let _ = writeln!(o, "maxinp    t0 = {}, eta = {}", mp.t0, mp.eta);
            Ok(())
        }
    }
}
