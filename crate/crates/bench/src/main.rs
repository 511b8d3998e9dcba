use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use proxsampler_bench::experiment::{run_experiment, run_reference};
use proxsampler_bench::rgo_test::{parse_gspec, rgo_test};
use proxsampler_bench::scaling::scaling_study;
use proxsampler_bench::{load_config, BenchError, BenchResult, Experiment};

#[derive(Parser)]
#[command(name = "bench", about = "Composite proximal sampler experiments")]
struct Cli {
    /// Base seed; runs use seed, seed+1, seed+2.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Maximum concurrent runs.
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every configured method with three seeds.
    Run { config: String },
    /// Gradient evaluations to a sliced-W2 threshold across dimensions.
    Scaling { config: String },
    /// Long Prox-MALA run giving the posterior mean and coverage bands.
    Reference { config: String },
    /// KS test of a 1D RGO against quadrature; takes a JSON spec or a path.
    RgoTest { g_spec: String },
}

fn configured(cli: &Cli, arg: &str) -> BenchResult<Experiment> {
    let mut exp = load_config(arg)?;
    if let Some(s) = cli.seed {
        exp.seed = s;
    }
    if let Some(w) = cli.workers {
        exp.workers = w;
    }
    exp.validate()?;
    Ok(exp)
}

fn execute(cli: &Cli) -> BenchResult<()> {
    match &cli.command {
        Command::Run { config } => {
            let exp = configured(cli, config)?;
            let report = run_experiment(&exp, &cli.out_dir)?;
            println!(
                "{:<10} {:>5} {:>12} {:>6} {:>14} {:>12} {:>8}",
                "method", "seed", "h", "n_max", "evals_to_thr", "final_rmse", "bias"
            );
            for r in &report.runs {
                let thr = r.grad_evals_to_threshold.map_or("-".to_string(), |g| g.to_string());
                println!(
                    "{:<10} {:>5} {:>12.4e} {:>6} {:>14} {:>12.4e} {:>8.4}",
                    r.method.name(),
                    r.seed,
                    r.h,
                    r.inner_steps.map_or("-".to_string(), |n| n.to_string()),
                    thr,
                    r.final_rmse,
                    r.bias_fraction
                );
            }
        }
        Command::Scaling { config } => {
            let exp = configured(cli, config)?;
            let report = scaling_study(&exp, &cli.out_dir)?;
            for fit in &report.fits {
                let slope = fit.slope.map_or("undefined".to_string(), |s| format!("{s:.3}"));
                println!("{}: log-log slope {slope}", fit.method.name());
                for (d, g) in &fit.medians {
                    println!("  d = {d:>4}: {}", g.map_or("censored".to_string(), |g| format!("{g:.0}")));
                }
            }
        }
        Command::Reference { config } => {
            let exp = configured(cli, config)?;
            let (r, path) = run_reference(&exp, &cli.out_dir)?;
            println!("reference over {} steps (acceptance {:.3}) written to {}", r.steps, r.acceptance_rate, path.display());
        }
        Command::RgoTest { g_spec } => {
            let spec = parse_gspec(g_spec)?;
            let report = rgo_test(&spec)?;
            proxsampler_bench::output::write_json(&cli.out_dir.join("rgo_test.json"), &report)?;
            println!("ks statistic {:.5} (threshold {}): {}", report.ks_statistic, report.threshold, if report.pass { "pass" } else { "FAIL" });
            if !report.pass {
                return Err(BenchError::Runtime("RGO draws do not match the target density".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
