use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use plrank::bounds::bound_report;
use plrank::breaking::{break_dataset, Scheme};
use plrank::estimator::{solve_mle, solve_pairwise_mle, MleOptions, SolverMethod};
use plrank::graph::graph_stats;
use plrank::harness::{
    emit_csv, emit_plot, load_rankings, load_theta, run_experiment, save_pairs, save_theta, summarize, Estimator,
    ExperimentConfig,
};
use plrank::rng::{seeded, SeedStream};
use plrank::{Error, Result};

#[derive(Parser)]
#[command(name = "plrank", version, about = "Plackett-Luce inference from partial rankings")]
struct Cli {
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Ib,
    Fb,
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Mm,
    Pgd,
}

#[derive(Subcommand)]
enum Command {
    /// Run the normalized-MSE experiment described by a JSON config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Fit a preference vector to a ranking file.
    Estimate {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        b: f64,
        #[arg(long, value_enum, default_value = "ml")]
        method: Estimator,
        #[arg(long)]
        out: PathBuf,
        /// Solver for `--method ml`.
        #[arg(long, value_enum, default_value = "mm")]
        solver: SolverArg,
        /// Item count (default: largest index + 1).
        #[arg(long)]
        n: Option<usize>,
    },
    /// Break rankings into weighted pairwise comparisons.
    Break {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        scheme: SchemeArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Lower bounds and upper-bound diagnostics for a ranking file.
    Bounds {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        b: f64,
        /// Theta file at which to evaluate the Fisher information.
        #[arg(long)]
        theta: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
    },
    /// Comparison-graph statistics as JSON.
    GraphStats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        n: Option<usize>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.quiet {
        "error"
    } else {
        "warn"
    }))
    .init();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Simulate { config } => simulate(config, cli.seed, cli.quiet),
        Command::Estimate { input, b, method, out, solver, n } => {
            let data = load_rankings(input, *n)?;
            let opts = MleOptions::default().with_method(match solver {
                SolverArg::Mm => SolverMethod::MmThenProject,
                SolverArg::Pgd => SolverMethod::ProjectedGradient,
            });
            let result = match method {
                Estimator::Ml => solve_mle(&data, *b, &opts)?,
                Estimator::Ib | Estimator::Fb => {
                    let scheme = if *method == Estimator::Ib { Scheme::Ib } else { Scheme::Fb };
                    let broken = break_dataset(&data, scheme, &mut seeded(seed));
                    solve_pairwise_mle(&broken.pairs, data.n(), *b, &opts)?
                }
            };
            save_theta(&result.theta_hat, out)?;
            if !cli.quiet {
                eprintln!(
                    "n={} m={} log-likelihood={:.6} iterations={} converged={} grad_norm={:.3e}",
                    data.n(),
                    data.m(),
                    result.final_log_likelihood,
                    result.iterations,
                    result.converged,
                    result.grad_norm
                );
            }
            if !result.converged {
                return Err(Error::Numerical(format!("solver did not converge in {} iterations", result.iterations)));
            }
            Ok(())
        }
        Command::Break { input, scheme, out, n } => {
            let data = load_rankings(input, *n)?;
            let scheme = match scheme {
                SchemeArg::Ib => Scheme::Ib,
                SchemeArg::Fb => Scheme::Fb,
            };
            let broken = break_dataset(&data, scheme, &mut seeded(seed));
            save_pairs(&broken.pairs, out)?;
            if !cli.quiet {
                eprintln!("{} rankings -> {} pairs", data.m(), broken.pairs.len());
            }
            Ok(())
        }
        Command::Bounds { input, b, theta, n } => {
            let data = load_rankings(input, *n)?;
            let theta = theta.as_deref().map(load_theta).transpose()?;
            let report = bound_report(&data, *b, theta.as_deref(), SeedStream::new(seed))?;
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
        Command::GraphStats { input, n } => {
            let data = load_rankings(input, *n)?;
            println!("{}", serde_json::to_string_pretty(&graph_stats(&data))?);
            Ok(())
        }
    }
}

fn simulate(path: &Path, seed: Option<u64>, quiet: bool) -> Result<()> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let rows = run_experiment(&config)?;
    emit_csv(&rows, &config.output_path)?;
    emit_plot(&rows, &config.plot_path())?;
    if !quiet {
        println!(
            "{:>6} {:>6} {:>6} {:>4} {:>10} {:>9} {:>9} {:>5}",
            "b", "d", "k", "est", "mean_mse", "std_err", "cr_limit", "miss"
        );
        for s in summarize(&rows) {
            println!(
                "{:>6} {:>6} {:>6} {:>4} {:>10.4} {:>9.4} {:>9.4} {:>5}",
                s.b,
                s.d,
                s.k,
                s.estimator.as_str(),
                s.mean,
                s.std_err,
                s.cr_limit,
                s.missing
            );
        }
        eprintln!("wrote {} and {}", config.output_path.display(), config.plot_path().display());
    }
    Ok(())
}
