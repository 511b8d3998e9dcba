//! Experiment configuration: one JSON document per experiment, starting from
//! a named preset and overriding any top-level section.

use std::collections::BTreeMap;
use std::path::Path;

use proxsampler_core::problems::{LogisticSpec, Penalty};
use serde::{Deserialize, Serialize};

use crate::error::{BenchError, BenchResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Composite,
    ProxMala,
    Pgla,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Composite, Method::ProxMala, Method::Pgla];

    pub fn name(self) -> &'static str {
        match self {
            Method::Composite => "composite",
            Method::ProxMala => "prox-mala",
            Method::Pgla => "pgla",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    LogisticL1,
    LogisticBox,
    GaussianBox,
}

impl Preset {
    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "logistic-l1" => Some(Preset::LogisticL1),
            "logistic-box" => Some(Preset::LogisticBox),
            "gaussian-box" => Some(Preset::GaussianBox),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Logistic(LogisticSpec),
    GaussianBox { d: usize, radius: f64 },
}

/// How step sizes are chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepPlan {
    /// Sweep the tuning grid per method and keep the best final RMSE.
    Tune,
    /// Absolute step sizes per method.
    Fixed(BTreeMap<Method, f64>),
}

/// Log-2 grid `{2^min, ..., 2^max} / β`. Baselines may use a wider upper
/// end than the composite sampler, which needs `h <= 1/β`. The composite
/// sampler also sweeps its inner cap over `inner_steps` plus the `ζ` default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TuningConfig {
    pub min_exp: i32,
    pub max_exp: i32,
    pub baseline_max_exp: i32,
    pub inner_steps: Vec<usize>,
    /// Gradient budget of each tuning run.
    pub budget: u64,
    /// Tuning runs per grid point, seeded apart from the reported runs.
    pub seeds: u64,
    /// Best grid points re-run at the full budget before choosing; 0 skips
    /// the second stage.
    pub finalists: usize,
    pub finalist_seeds: u64,
}

impl Default for TuningConfig {
    fn default() -> Self {
        Self {
            min_exp: -10,
            max_exp: 0,
            baseline_max_exp: 0,
            inner_steps: vec![1, 2, 4, 8, 16],
            budget: 50_000,
            seeds: 2,
            finalists: 4,
            finalist_seeds: 3,
        }
    }
}

/// First seeds of the two tuning stages, offset from the reported seeds `s..s+3`.
pub const TUNING_SEED_OFFSET: u64 = 1_000;
pub const FINALIST_SEED_OFFSET: u64 = 2_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompositeOptions {
    /// Inner cap `N_max`; derived from `zeta` when absent.
    pub inner_steps: Option<usize>,
    pub zeta: f64,
    /// Constant in the default step size (used by the scaling study).
    pub step_constant: f64,
}

impl Default for CompositeOptions {
    fn default() -> Self {
        Self { inner_steps: None, zeta: 0.1, step_constant: 1.0 }
    }
}

impl CompositeOptions {
    pub fn n_max(&self) -> usize {
        self.inner_steps
            .unwrap_or_else(|| proxsampler_core::sampler::default_inner_steps(self.zeta))
    }
}

/// Long Prox-MALA run that defines the posterior mean for RMSE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub steps: u64,
    pub step_over_beta: f64,
    pub seed: u64,
    /// Reuse a `reference.json` written by the `reference` subcommand.
    pub file: Option<String>,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        Self { steps: 1_000_000, step_over_beta: 0.25, seed: 20_240_601, file: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScalingConfig {
    pub dims: Vec<usize>,
    pub radius: f64,
    /// Ensemble size; also the size of the exact reference draws.
    pub chains: usize,
    /// Outer-iteration cap per chain.
    pub max_iters: usize,
    pub projections: usize,
    pub self_distance_reps: usize,
    pub threshold_factor: f64,
    /// Fixed steps for baseline methods in the study.
    pub baseline_steps: BTreeMap<Method, f64>,
    pub start: ScalingStart,
}

/// Where every chain of the ensemble starts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingStart {
    /// The box corner `(R, ..., R)`; its sliced distance to the target does
    /// not shrink with `d`, so the time to threshold measures mixing.
    Corner,
    /// Independent draws from the warm start `ρ0`, already close to the
    /// target in every coordinate.
    WarmStart,
}

impl Default for ScalingConfig {
    fn default() -> Self {
        Self {
            dims: vec![4, 8, 16, 32, 64, 128, 256, 512],
            radius: 1.0,
            chains: 1000,
            max_iters: 1_000_000,
            projections: 128,
            self_distance_reps: 5,
            threshold_factor: 1.5,
            baseline_steps: BTreeMap::new(),
            start: ScalingStart::Corner,
        }
    }
}

/// The configuration file as written; absent sections come from the preset.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub preset: Option<Preset>,
    pub name: Option<String>,
    pub problem: Option<ProblemConfig>,
    pub methods: Option<Vec<Method>>,
    pub seed: Option<u64>,
    pub grad_budget: Option<u64>,
    pub record_every: Option<usize>,
    pub steps: Option<StepPlan>,
    pub tuning: Option<TuningConfig>,
    pub composite: Option<CompositeOptions>,
    pub reference: Option<ReferenceConfig>,
    pub rmse_threshold: Option<f64>,
    pub scaling: Option<ScalingConfig>,
    pub workers: Option<usize>,
}

/// Fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub name: String,
    pub problem: ProblemConfig,
    pub methods: Vec<Method>,
    pub seed: u64,
    /// Gradient evaluations per run; iterations follow from each method's cost.
    pub grad_budget: u64,
    pub record_every: usize,
    pub steps: StepPlan,
    pub tuning: TuningConfig,
    pub composite: CompositeOptions,
    pub reference: ReferenceConfig,
    pub rmse_threshold: f64,
    pub scaling: ScalingConfig,
    pub workers: usize,
}

impl Experiment {
    pub fn preset(preset: Preset) -> Self {
        let base = |name: &str, problem| Experiment {
            name: name.to_string(),
            problem,
            methods: Method::ALL.to_vec(),
            seed: 0,
            grad_budget: 200_000,
            record_every: 100,
            steps: StepPlan::Tune,
            tuning: TuningConfig::default(),
            composite: CompositeOptions::default(),
            reference: ReferenceConfig::default(),
            rmse_threshold: 0.02,
            scaling: ScalingConfig::default(),
            workers: 1,
        };
        match preset {
            Preset::LogisticL1 => base("logistic-l1", ProblemConfig::Logistic(LogisticSpec::l1_preset(0))),
            Preset::LogisticBox => base("logistic-box", ProblemConfig::Logistic(LogisticSpec::box_preset(0))),
            Preset::GaussianBox => {
                let mut e = base("gaussian-box", ProblemConfig::GaussianBox { d: 4, radius: 1.0 });
                e.methods = vec![Method::Composite];
                e.steps = StepPlan::Fixed(BTreeMap::from([(Method::Composite, 0.5)]));
                e.grad_budget = 500_000;
                e
            }
        }
    }

    pub fn from_file(file: ConfigFile) -> BenchResult<Self> {
        let mut e = match (file.preset, &file.problem) {
            (Some(p), _) => Self::preset(p),
            (None, Some(problem)) => {
                let mut e = Self::preset(Preset::LogisticL1);
                e.name = "custom".into();
                e.problem = problem.clone();
                e
            }
            (None, None) => return Err(BenchError::Config("config needs a `preset` or a `problem`".into())),
        };
        macro_rules! take {
            ($($field:ident),*) => { $(if let Some(v) = file.$field { e.$field = v; })* };
        }
        take!(name, problem, methods, seed, grad_budget, record_every, steps, tuning, composite, reference, rmse_threshold, scaling, workers);
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> BenchResult<()> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.methods.is_empty() {
            return bad("`methods` must name at least one method".into());
        }
        if self.grad_budget == 0 || self.record_every == 0 || self.workers == 0 {
            return bad("`grad_budget`, `record_every` and `workers` must be positive".into());
        }
        if !(self.composite.zeta > 0.0 && self.composite.zeta < 1.0) {
            return bad(format!("`composite.zeta` must lie in (0, 1), got {}", self.composite.zeta));
        }
        let t = &self.tuning;
        if t.min_exp > t.max_exp || t.budget == 0 || t.seeds == 0 || (t.finalists > 0 && t.finalist_seeds == 0) || t.inner_steps.contains(&0) {
            return bad("`tuning` needs a nonempty grid, a budget, seeds >= 1 and inner steps >= 1".into());
        }
        if let StepPlan::Fixed(map) = &self.steps {
            for m in &self.methods {
                match map.get(m) {
                    Some(&h) if h > 0.0 && h.is_finite() => {}
                    Some(h) => return bad(format!("`steps.fixed.{}` must be positive, got {h}", m.name())),
                    None => return bad(format!("`steps.fixed` has no entry for `{}`", m.name())),
                }
            }
        }
        match &self.problem {
            ProblemConfig::GaussianBox { d, radius } if *d == 0 || !(*radius > 0.0) => {
                return bad("`problem` gaussian box needs d >= 1 and radius > 0".into())
            }
            ProblemConfig::Logistic(spec) if spec.x_true.len() != spec.d => {
                return bad(format!("`problem.x_true` has length {}, expected d = {}", spec.x_true.len(), spec.d))
            }
            _ => {}
        }
        let s = &self.scaling;
        if s.dims.windows(2).any(|w| w[0] > w[1]) || s.dims.contains(&0) {
            return bad("`scaling.dims` must be positive and nondecreasing".into());
        }
        if !(s.threshold_factor > 0.0) || s.chains < 2 || s.projections == 0 || s.self_distance_reps == 0 {
            return bad("`scaling` needs threshold_factor > 0, chains >= 2, projections and reps >= 1".into());
        }
        Ok(())
    }

    /// Non-smooth geometry used by the bias indicator.
    pub fn penalty(&self) -> Penalty {
        match &self.problem {
            ProblemConfig::Logistic(spec) => spec.penalty,
            ProblemConfig::GaussianBox { radius, .. } => Penalty::Box { radius: *radius },
        }
    }
}

/// Parses a config document. Errors name the offending key and position.
pub fn parse_config(text: &str) -> BenchResult<Experiment> {
    let file: ConfigFile = serde_json::from_str(text).map_err(|e| BenchError::Config(e.to_string()))?;
    Experiment::from_file(file)
}

/// Reads `arg` as a config path, falling back to a preset name.
pub fn load_config(arg: &str) -> BenchResult<Experiment> {
    let path = Path::new(arg);
    if path.exists() {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Config(format!("{arg}: {e}")))?;
        return parse_config(&text).map_err(|e| match e {
            BenchError::Config(m) => BenchError::Config(format!("{arg}: {m}")),
            other => other,
        });
    }
    match Preset::parse(arg) {
        Some(p) => Ok(Experiment::preset(p)),
        None => Err(BenchError::Config(format!("{arg}: no such config file or preset"))),
    }
}
