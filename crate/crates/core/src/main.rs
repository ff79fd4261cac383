use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use starris::experiment::{self, Config, Scheme, Sweep};
use starris::metrics::VarianceTerm;

#[derive(Parser)]
#[command(
    name = "starris",
    about = "STAR-RIS assisted radar coexistence simulator"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured sweep and write CSV results.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Run only these schemes; repeat the flag for several.
        #[arg(long = "scheme")]
        schemes: Vec<String>,
        /// Replace the sweep, e.g. `n=16,32,64`.
        #[arg(long)]
        sweep: Option<String>,
        /// Monte-Carlo runs (used by `validate`; stored in the written config).
        #[arg(long)]
        runs: Option<usize>,
    },
    /// Monte-Carlo and gradient checks on a reduced copy of the scenario.
    Validate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        runs: Option<usize>,
        /// Use the subtracted variance term in the closed form; the UE checks should fail.
        #[arg(long)]
        mutate_variance: bool,
    },
    /// Print the default configuration.
    Preset,
}

fn load(path: &std::path::Path, seed: Option<u64>, runs: Option<usize>) -> starris::Result<Config> {
    let mut cfg = Config::load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(r) = runs {
        cfg.mc.runs = r;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> starris::Result<bool> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| starris::Error::Config(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Run {
            config,
            out,
            seed,
            schemes,
            sweep,
            runs,
        } => {
            let mut cfg = load(&config, seed, runs)?;
            if !schemes.is_empty() {
                cfg.schemes.run = schemes
                    .iter()
                    .map(|s| s.parse::<Scheme>())
                    .collect::<starris::Result<_>>()?;
            }
            if let Some(s) = sweep {
                cfg.sweep = s.parse::<Sweep>()?;
            }
            let results = experiment::run_sweep(&cfg)?;
            for point in &results {
                for r in &point.runs {
                    match &r.outcome {
                        experiment::Outcome::Solved(s) => eprintln!(
                            "{} = {}: {} sum SE {:.4} ({:.1} s)",
                            cfg.sweep.variable.label(),
                            point.value,
                            r.scheme,
                            s.sum_se,
                            r.wall_seconds
                        ),
                        experiment::Outcome::Skipped(why) => eprintln!(
                            "{} = {}: {} skipped: {why}",
                            cfg.sweep.variable.label(),
                            point.value,
                            r.scheme
                        ),
                    }
                }
            }
            experiment::write_outputs(&cfg, &results, &out)?;
            Ok(true)
        }
        Command::Validate {
            config,
            seed,
            runs,
            mutate_variance,
        } => {
            let cfg = load(&config, seed, runs)?;
            let variance = if mutate_variance {
                VarianceTerm::Subtracted
            } else {
                VarianceTerm::FourthMoment
            };
            let checks = experiment::validate(&cfg, variance)?;
            let mut ok = true;
            for c in &checks {
                println!(
                    "{} {}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    c.name,
                    c.detail
                );
                ok &= c.passed;
            }
            Ok(ok)
        }
        Command::Preset => {
            let cfg = Config::parse("[sweep]\nvariable = \"n\"\nvalues = [64]\n")?;
            print!("{}", cfg.to_toml()?);
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
