//! Dimension scaling on the Gaussian-in-a-box target: gradient evaluations
//! until an ensemble of chains is within a sliced-W2 threshold of the target.
//!
//! The threshold at each `d` is `factor ×` the median sliced W2 between two
//! independent exact draws of the ensemble's size, so it tracks the noise
//! floor of the measurement itself.

use std::path::Path;

use proxsampler_core::baselines::{pgla_step, prox_mala_step};
use proxsampler_core::diagnostics::{random_directions, SlicedReference, DIAGNOSTIC_SEED};
use proxsampler_core::problems::gaussian_box_target;
use proxsampler_core::sampler::init_rho0;
use proxsampler_core::{CompositeTarget, ProximalChain, SamplerConfig, StepSize};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, Method, ScalingStart};
use crate::error::{BenchError, BenchResult};
use crate::exact::box_samples;
use crate::methods::cost_per_iter;
use crate::output::{run_parallel, write_json, Cell, Csv};

/// Checks at every iteration up to 32, then every `⌈k/32⌉` iterations, so
/// the crossing is located to about 3% of its iteration count.
pub fn is_checkpoint(k: usize) -> bool {
    k <= 32 || k % k.div_ceil(32) == 0
}

/// Least-squares slope of `ln y` against `ln x`; `None` below three points.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 3 {
        return None;
    }
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) }
}

/// Fixed measurement apparatus for one dimension.
pub struct Yardstick {
    pub reference: SlicedReference,
    pub self_distance: f64,
    pub threshold: f64,
}

fn diag_rng(tag: u64, d: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(DIAGNOSTIC_SEED ^ (d as u64) << 20);
    rng.set_stream(tag);
    rng
}

pub fn yardstick(exp: &Experiment, d: usize) -> BenchResult<Yardstick> {
    let s = &exp.scaling;
    let dirs = random_directions(d, s.projections, &mut diag_rng(0, d));
    let reference = SlicedReference::new(&box_samples(s.chains, d, s.radius, &mut diag_rng(1, d)), dirs.clone())?;
    let mut selfs = Vec::with_capacity(s.self_distance_reps);
    for rep in 0..s.self_distance_reps as u64 {
        let a = box_samples(s.chains, d, s.radius, &mut diag_rng(2 + 2 * rep, d));
        let b = box_samples(s.chains, d, s.radius, &mut diag_rng(3 + 2 * rep, d));
        selfs.push(SlicedReference::new(&a, dirs.clone())?.distance(&b)?);
    }
    let self_distance = median(&mut selfs);
    Ok(Yardstick { reference, self_distance, threshold: s.threshold_factor * self_distance })
}

enum Walker<'a> {
    Composite(ProximalChain<'a>),
    Baseline(Vec<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingRow {
    pub method: Method,
    pub d: usize,
    pub seed: u64,
    pub h: f64,
    pub threshold: f64,
    pub self_distance: f64,
    /// `None` when the ensemble never reached the threshold (censored).
    pub grad_evals: Option<u64>,
    pub iterations: usize,
    pub final_distance: f64,
    pub trace_file: String,
}

/// Runs one ensemble until its sliced W2 to the reference drops below the
/// threshold or the iteration cap is hit. Returns the row and its trace.
pub fn ensemble_run(
    exp: &Experiment,
    method: Method,
    d: usize,
    seed: u64,
    stick: &Yardstick,
) -> BenchResult<(ScalingRow, Csv)> {
    let s = &exp.scaling;
    let target: CompositeTarget = gaussian_box_target(d, s.radius)?;
    let n_max = exp.composite.n_max();
    let config = SamplerConfig {
        step: StepSize::Auto { constant: exp.composite.step_constant },
        outer_iters: s.max_iters,
        inner_steps: n_max,
        zeta: exp.composite.zeta,
        seed,
    };
    let h = match method {
        Method::Composite => config.validate(&target)?,
        m => *s.baseline_steps.get(&m).ok_or_else(|| {
            BenchError::Config(format!("`scaling.baseline_steps` has no entry for `{}`", m.name()))
        })?,
    };
    let mut rngs: Vec<ChaCha8Rng> = (0..s.chains as u64)
        .map(|i| {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            r.set_stream(i);
            r
        })
        .collect();
    let mut walkers = Vec::with_capacity(s.chains);
    for rng in rngs.iter_mut() {
        let x0 = match s.start {
            ScalingStart::Corner => vec![s.radius; d],
            ScalingStart::WarmStart => init_rho0(&target, h, rng)?,
        };
        walkers.push(match method {
            Method::Composite => Walker::Composite(ProximalChain::new(&target, &config, Some(x0), rng)?),
            _ => Walker::Baseline(x0),
        });
    }
    let cost = cost_per_iter(method, n_max);
    let mut csv = Csv::new(&["iter", "grad_evals", "sliced_w2"]);
    let mut states: Vec<Vec<f64>> = vec![Vec::new(); s.chains];
    let (mut crossed, mut k, mut dist) = (None, 0usize, f64::NAN);
    while k < s.max_iters {
        k += 1;
        for (w, rng) in walkers.iter_mut().zip(rngs.iter_mut()) {
            match w {
                Walker::Composite(c) => {
                    c.step(rng)?;
                }
                Walker::Baseline(x) => {
                    *x = match method {
                        Method::Pgla => pgla_step(&target, h, x, rng)?,
                        _ => prox_mala_step(&target, h, x, rng)?.x,
                    };
                }
            }
        }
        if !is_checkpoint(k) && k < s.max_iters {
            continue;
        }
        for (st, w) in states.iter_mut().zip(&walkers) {
            st.clear();
            st.extend_from_slice(match w {
                Walker::Composite(c) => c.x(),
                Walker::Baseline(x) => x,
            });
        }
        dist = stick.reference.distance(&states)?;
        csv.row(&[Cell::Int(k as u64), Cell::Int(k as u64 * cost), Cell::Real(dist)]);
        if dist <= stick.threshold {
            crossed = Some(k as u64 * cost);
            break;
        }
    }
    let trace_file = format!("scaling_{}_d{}_seed{}.csv", method.name(), d, seed);
    let row = ScalingRow {
        method,
        d,
        seed,
        h,
        threshold: stick.threshold,
        self_distance: stick.self_distance,
        grad_evals: crossed,
        iterations: k,
        final_distance: dist,
        trace_file,
    };
    Ok((row, csv))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MethodScaling {
    pub method: Method,
    /// Per-dimension median over uncensored seeds.
    pub medians: Vec<(usize, Option<f64>)>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingReport {
    pub experiment: Experiment,
    pub budget_note: String,
    pub rows: Vec<ScalingRow>,
    pub fits: Vec<MethodScaling>,
}

pub fn summarize(rows: &[ScalingRow], methods: &[Method], dims: &[usize]) -> Vec<MethodScaling> {
    methods
        .iter()
        .map(|&m| {
            let medians: Vec<(usize, Option<f64>)> = dims
                .iter()
                .map(|&d| {
                    let mut v: Vec<f64> = rows
                        .iter()
                        .filter(|r| r.method == m && r.d == d)
                        .filter_map(|r| r.grad_evals.map(|g| g as f64))
                        .collect();
                    (d, (!v.is_empty()).then(|| median(&mut v)))
                })
                .collect();
            let points: Vec<(f64, f64)> = medians.iter().filter_map(|&(d, g)| g.map(|g| (d as f64, g))).collect();
            MethodScaling { method: m, medians, slope: fit_loglog_slope(&points) }
        })
        .collect()
}

pub fn scaling_study(exp: &Experiment, out_dir: &Path) -> BenchResult<ScalingReport> {
    let dims = exp.scaling.dims.clone();
    let sticks = run_parallel(dims.clone(), exp.workers, |d| yardstick(exp, d))
        .into_iter()
        .collect::<BenchResult<Vec<_>>>()?;
    let jobs: Vec<(Method, usize, u64)> = exp
        .methods
        .iter()
        .flat_map(|&m| (0..dims.len()).flat_map(move |i| (0..3).map(move |s| (m, i, exp.seed + s))))
        .collect();
    let results = run_parallel(jobs, exp.workers, |(m, i, seed)| -> BenchResult<ScalingRow> {
        let (row, csv) = ensemble_run(exp, m, dims[i], seed, &sticks[i])?;
        csv.write(&out_dir.join(&row.trace_file))?;
        Ok(row)
    });
    let rows = results.into_iter().collect::<BenchResult<Vec<_>>>()?;

    let mut table = Csv::new(&["method", "d", "seed", "h", "threshold", "grad_evals", "censored"]);
    for r in &rows {
        table.row(&[
            Cell::Text(r.method.name().into()),
            Cell::Int(r.d as u64),
            Cell::Int(r.seed),
            Cell::Real(r.h),
            Cell::Real(r.threshold),
            r.grad_evals.into(),
            Cell::Text((r.grad_evals.is_none()).to_string()),
        ]);
    }
    table.write(&out_dir.join("scaling_summary.csv"))?;
    let n_max = exp.composite.n_max();
    let budget_note = format!(
        "iteration cap {} per chain; gradient budgets are cap x cost: composite {}, prox-mala {}, pgla {}",
        exp.scaling.max_iters,
        exp.scaling.max_iters as u64 * cost_per_iter(Method::Composite, n_max),
        exp.scaling.max_iters as u64 * 2,
        exp.scaling.max_iters,
    );
    let report = ScalingReport { experiment: exp.clone(), budget_note, fits: summarize(&rows, &exp.methods, &dims), rows };
    write_json(&out_dir.join("scaling_summary.json"), &report)?;
    Ok(report)
}
