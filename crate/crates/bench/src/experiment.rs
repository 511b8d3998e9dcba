//! The `run` and `reference` subcommands.

use std::collections::BTreeMap;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use proxsampler_core::baselines::run_prox_mala;
use proxsampler_core::diagnostics::{
    bias_indicator, coverage_intervals, quantile_sorted, running_rmse, running_rmse_with_burn_in, BURN_IN,
};
use proxsampler_core::problems::{gaussian_box_target, make_logistic_data};
use proxsampler_core::{chain_rng, CompositeTarget};
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, Method, ProblemConfig, StepPlan, FINALIST_SEED_OFFSET, TUNING_SEED_OFFSET};
use crate::error::{BenchError, BenchResult};
use crate::exact::w2_to_box_law;
use crate::methods::{cost_per_iter, run_chain, ChainRun};
use crate::output::{run_parallel, write_json, Cell, Csv};

const COVERAGE_LEVEL: f64 = 0.9;
const REFERENCE_THIN: u64 = 10;

pub fn build_target(problem: &ProblemConfig) -> BenchResult<CompositeTarget> {
    Ok(match problem {
        ProblemConfig::Logistic(spec) => make_logistic_data(spec)?.target()?,
        ProblemConfig::GaussianBox { d, radius } => gaussian_box_target(*d, *radius)?,
    })
}

/// Posterior mean and marginal intervals that serve as ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub x_hat: Vec<f64>,
    pub coverage: Vec<(f64, f64)>,
    pub steps: u64,
    pub h: f64,
    pub acceptance_rate: f64,
    pub source: String,
}

/// Exact mean for the box target; a long Prox-MALA run from `x*` otherwise.
pub fn compute_reference(exp: &Experiment, target: &CompositeTarget) -> BenchResult<Reference> {
    if let ProblemConfig::GaussianBox { d, radius } = exp.problem {
        let q = crate::exact::box_quantile(0.5 + 0.5 * COVERAGE_LEVEL, radius);
        return Ok(Reference {
            x_hat: vec![0.0; d],
            coverage: vec![(-q, q); d],
            steps: 0,
            h: 0.0,
            acceptance_rate: 1.0,
            source: "exact".into(),
        });
    }
    if let Some(file) = &exp.reference.file {
        let text = std::fs::read_to_string(file).map_err(|e| BenchError::Config(format!("{file}: {e}")))?;
        let r: Reference = serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{file}: {e}")))?;
        if r.x_hat.len() != target.dim() {
            return Err(BenchError::Config(format!("{file}: reference dimension does not match the problem")));
        }
        return Ok(r);
    }
    let cfg = &exp.reference;
    let d = target.dim();
    let h = cfg.step_over_beta / target.beta();
    let burn = (BURN_IN * cfg.steps as f64).floor() as u64;
    let mut sum = vec![0.0; d];
    let mut thinned = Vec::new();
    let mut rng = chain_rng(cfg.seed);
    let (_, stats) = run_prox_mala(target, h, target.x_star().to_vec(), cfg.steps as usize, &mut rng, |k, x, _| {
        let k = k as u64;
        if k >= burn {
            sum.iter_mut().zip(x).for_each(|(s, v)| *s += v);
            if k % REFERENCE_THIN == 0 {
                thinned.push(x.to_vec());
            }
        }
        ControlFlow::Continue(())
    })?;
    let kept = (cfg.steps - burn).max(1) as f64;
    if thinned.is_empty() {
        return Err(BenchError::Config(format!("reference.steps = {} is too small", cfg.steps)));
    }
    let coverage = (0..d)
        .map(|j| {
            let mut col: Vec<f64> = thinned.iter().map(|x| x[j]).collect();
            col.sort_by(f64::total_cmp);
            let tail = 0.5 * (1.0 - COVERAGE_LEVEL);
            (quantile_sorted(&col, tail), quantile_sorted(&col, 1.0 - tail))
        })
        .collect();
    Ok(Reference {
        x_hat: sum.iter().map(|s| s / kept).collect(),
        coverage,
        steps: cfg.steps,
        h,
        acceptance_rate: stats.acceptance_rate(),
        source: "prox-mala".into(),
    })
}

/// Step size and, for the composite sampler, inner cap `N_max`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setting {
    pub h: f64,
    pub inner_steps: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuningRecord {
    pub candidates: Vec<Setting>,
    /// Mean final RMSE over the short tuning runs; `None` if any run failed.
    pub scores: Vec<Option<f64>>,
    /// Candidate index and mean final RMSE at the full budget.
    pub finalists: Vec<(usize, Option<f64>)>,
    pub chosen: Setting,
}

/// Candidate settings for one method: `2^j / β` for the step, crossed with
/// the inner-cap grid for the composite sampler.
pub fn tuning_grid(exp: &Experiment, method: Method, beta: f64) -> Vec<Setting> {
    let top = match method {
        Method::Composite => exp.tuning.max_exp.min(0),
        _ => exp.tuning.baseline_max_exp.max(exp.tuning.max_exp),
    };
    let steps: Vec<f64> = (exp.tuning.min_exp..=top).map(|j| 2f64.powi(j) / beta).collect();
    let default_n = exp.composite.n_max();
    let caps = match method {
        Method::Composite => {
            let mut caps = exp.tuning.inner_steps.clone();
            caps.push(default_n);
            caps.sort_unstable();
            caps.dedup();
            caps
        }
        _ => vec![default_n],
    };
    caps.iter()
        .flat_map(|&n| steps.iter().map(move |&h| Setting { h, inner_steps: n }))
        .collect()
}

fn final_rmse(run: &ChainRun, x_hat: &[f64]) -> BenchResult<f64> {
    let series = running_rmse(&run.iterates[1..], x_hat)?;
    Ok(*series.last().expect("nonempty"))
}

/// Mean final RMSE over `count` seeds from `first`; `None` if any run fails.
fn mean_score(
    target: &CompositeTarget,
    method: Method,
    c: Setting,
    budget: u64,
    first: u64,
    count: u64,
    x_hat: &[f64],
) -> Option<f64> {
    let mut total = 0.0;
    for seed in first..first + count {
        let score = run_chain(target, method, c.h, budget, c.inner_steps, seed)
            .ok()
            .filter(|r| r.iterates.len() > 1)
            .and_then(|r| final_rmse(&r, x_hat).ok())
            .filter(|s| s.is_finite())?;
        total += score;
    }
    Some(total / count as f64)
}

fn best(scores: impl Iterator<Item = (usize, Option<f64>)>) -> Option<usize> {
    scores
        .filter_map(|(i, s)| s.map(|s| (i, s)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

/// Sweeps the grid with short runs, then re-runs the best few at the full
/// budget on fresh seeds and keeps the smallest mean final RMSE. Short runs
/// alone are noisy enough that the sweep winner is often a lucky draw.
pub fn tune(exp: &Experiment, target: &CompositeTarget, method: Method, x_hat: &[f64]) -> BenchResult<TuningRecord> {
    let t = &exp.tuning;
    let candidates = tuning_grid(exp, method, target.beta());
    let scores: Vec<Option<f64>> = run_parallel(candidates.clone(), exp.workers, |c| {
        mean_score(target, method, c, t.budget, exp.seed + TUNING_SEED_OFFSET, t.seeds, x_hat)
    });
    let failed = || BenchError::Runtime(format!("every tuning run failed for {}", method.name()));
    let mut ranked: Vec<usize> = (0..candidates.len()).filter(|&i| scores[i].is_some()).collect();
    ranked.sort_by(|&a, &b| scores[a].unwrap().total_cmp(&scores[b].unwrap()));
    ranked.truncate(t.finalists);
    let finalists: Vec<(usize, Option<f64>)> = run_parallel(ranked, exp.workers, |i| {
        let first = exp.seed + FINALIST_SEED_OFFSET;
        (i, mean_score(target, method, candidates[i], exp.grad_budget, first, t.finalist_seeds, x_hat))
    });
    let chosen = match best(finalists.iter().copied()) {
        Some(i) => i,
        None if t.finalists == 0 => best(scores.iter().copied().enumerate()).ok_or_else(failed)?,
        None => return Err(failed()),
    };
    Ok(TuningRecord { chosen: candidates[chosen], candidates, scores, finalists })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub method: Method,
    pub seed: u64,
    pub h: f64,
    pub inner_steps: Option<usize>,
    pub iterations: usize,
    pub grad_evals: u64,
    pub final_rmse: f64,
    pub final_rmse_burned: f64,
    pub grad_evals_to_threshold: Option<u64>,
    pub acceptance_rate: f64,
    pub infeasible_fraction: f64,
    /// Final coordinates exactly at zero (l1) or on a face (box).
    pub bias_fraction: f64,
    pub coverage: Vec<(f64, f64)>,
    /// Gaussian box only: per-coordinate W2 to the exact law and variance,
    /// over the last half of the chain.
    pub coordinate_w2: Option<Vec<f64>>,
    pub coordinate_variance: Option<Vec<f64>>,
    pub trace_file: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProblemInfo {
    pub dim: usize,
    pub beta: f64,
    pub alpha: f64,
    pub kappa: f64,
    pub x_star: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub experiment: Experiment,
    pub problem: ProblemInfo,
    pub accounting: BTreeMap<Method, u64>,
    pub reference: Reference,
    pub tuning: BTreeMap<Method, TuningRecord>,
    pub settings: BTreeMap<Method, Setting>,
    pub runs: Vec<RunSummary>,
}

/// Per-method settings: fixed from the config or tuned.
pub fn choose_settings(
    exp: &Experiment,
    target: &CompositeTarget,
    x_hat: &[f64],
) -> BenchResult<(BTreeMap<Method, Setting>, BTreeMap<Method, TuningRecord>)> {
    let mut settings = BTreeMap::new();
    let mut tuning = BTreeMap::new();
    for &m in &exp.methods {
        match &exp.steps {
            StepPlan::Fixed(map) => {
                settings.insert(m, Setting { h: map[&m], inner_steps: exp.composite.n_max() });
            }
            StepPlan::Tune => {
                let rec = tune(exp, target, m, x_hat)?;
                settings.insert(m, rec.chosen);
                tuning.insert(m, rec);
            }
        }
    }
    Ok((settings, tuning))
}

fn summarize(exp: &Experiment, run: &ChainRun, x_hat: &[f64], trace_file: &str) -> BenchResult<(RunSummary, Csv)> {
    let chain = &run.iterates[1..];
    let rmse = running_rmse(chain, x_hat)?;
    let burned = running_rmse_with_burn_in(chain, x_hat, BURN_IN)?;
    let mut csv = Csv::new(&["iter", "grad_evals", "rmse", "rmse_burned"]);
    let n = chain.len();
    for k in 0..n {
        if (k + 1) % exp.record_every == 0 || k + 1 == n {
            csv.row(&[Cell::Int(k as u64 + 1), Cell::Int(run.grad_evals[k + 1]), Cell::Real(rmse[k]), Cell::Real(burned[k])]);
        }
    }
    let to_threshold = rmse.iter().position(|&r| r <= exp.rmse_threshold).map(|k| run.grad_evals[k + 1]);
    let coverage = if n >= 100 { coverage_intervals(chain, COVERAGE_LEVEL)? } else { Vec::new() };
    let (coordinate_w2, coordinate_variance) = match exp.problem {
        ProblemConfig::GaussianBox { d, radius } => {
            let tail = &chain[n / 2..];
            let m = tail.len() as f64;
            let w2 = (0..d).map(|j| w2_to_box_law(&tail.iter().map(|x| x[j]).collect::<Vec<_>>(), radius)).collect();
            let var = (0..d)
                .map(|j| {
                    let mean = tail.iter().map(|x| x[j]).sum::<f64>() / m;
                    tail.iter().map(|x| (x[j] - mean).powi(2)).sum::<f64>() / (m - 1.0)
                })
                .collect();
            (Some(w2), Some(var))
        }
        ProblemConfig::Logistic(_) => (None, None),
    };
    let summary = RunSummary {
        method: run.method,
        seed: run.seed,
        h: run.h,
        inner_steps: (run.method == Method::Composite).then_some(run.inner_steps),
        iterations: n,
        grad_evals: *run.grad_evals.last().unwrap(),
        final_rmse: rmse[n - 1],
        final_rmse_burned: burned[n - 1],
        grad_evals_to_threshold: to_threshold,
        acceptance_rate: run.acceptance_rate,
        infeasible_fraction: run.infeasible_fraction,
        bias_fraction: bias_indicator(run.last(), &exp.penalty()),
        coverage,
        coordinate_w2,
        coordinate_variance,
        trace_file: trace_file.to_string(),
    };
    Ok((summary, csv))
}

/// Seeds `s, s+1, s+2` for every configured method.
pub fn run_experiment(exp: &Experiment, out_dir: &Path) -> BenchResult<RunReport> {
    let target = build_target(&exp.problem)?;
    let reference = compute_reference(exp, &target)?;
    let (settings, tuning) = choose_settings(exp, &target, &reference.x_hat)?;

    let jobs: Vec<(Method, u64)> = exp
        .methods
        .iter()
        .flat_map(|&m| (0..3).map(move |i| (m, exp.seed + i)))
        .collect();
    let outcomes = run_parallel(jobs, exp.workers, |(m, seed)| -> BenchResult<RunSummary> {
        let s = settings[&m];
        let run = run_chain(&target, m, s.h, exp.grad_budget, s.inner_steps, seed)?;
        if run.iterates.len() < 2 {
            return Err(BenchError::Config(format!(
                "grad_budget {} is below one iteration of {}",
                exp.grad_budget,
                m.name()
            )));
        }
        let file = format!("{}_{}_seed{}.csv", exp.name, m.name(), seed);
        let (summary, csv) = summarize(exp, &run, &reference.x_hat, &file)?;
        csv.write(&out_dir.join(&file))?;
        Ok(summary)
    });
    let runs = outcomes.into_iter().collect::<BenchResult<Vec<_>>>()?;

    let mut table = Csv::new(&["method", "seed", "h", "inner_steps", "grad_evals_to_threshold", "final_rmse", "bias_fraction"]);
    for r in &runs {
        table.row(&[
            Cell::Text(r.method.name().into()),
            Cell::Int(r.seed),
            Cell::Real(r.h),
            r.inner_steps.map(|n| n as u64).into(),
            r.grad_evals_to_threshold.into(),
            Cell::Real(r.final_rmse),
            Cell::Real(r.bias_fraction),
        ]);
    }
    table.write(&out_dir.join(format!("{}_summary.csv", exp.name)))?;

    let report = RunReport {
        experiment: exp.clone(),
        problem: ProblemInfo {
            dim: target.dim(),
            beta: target.beta(),
            alpha: target.alpha(),
            kappa: target.kappa(),
            x_star: target.x_star().to_vec(),
        },
        accounting: settings.iter().map(|(&m, s)| (m, cost_per_iter(m, s.inner_steps))).collect(),
        reference,
        tuning,
        settings,
        runs,
    };
    write_json(&out_dir.join(format!("{}_summary.json", exp.name)), &report)?;
    Ok(report)
}

/// Writes `reference.json` for later runs to reuse.
pub fn run_reference(exp: &Experiment, out_dir: &Path) -> BenchResult<(Reference, PathBuf)> {
    let target = build_target(&exp.problem)?;
    let mut cfg = exp.clone();
    cfg.reference.file = None;
    let reference = compute_reference(&cfg, &target)?;
    let path = out_dir.join(format!("{}_reference.json", exp.name));
    write_json(&path, &reference)?;
    Ok((reference, path))
}
