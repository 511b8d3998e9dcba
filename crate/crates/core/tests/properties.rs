use std::sync::OnceLock;

use nalgebra::DMatrix;
use proptest::prelude::*;
use proxsampler_core::diagnostics::{running_rmse, sliced_w2};
use proxsampler_core::imh::{lazy_accept_prob, log_ratio};
use proxsampler_core::problems::{make_logistic_data, LogisticProblem, LogisticSpec};
use proxsampler_core::rgo::{truncated_gaussian_1d, BoxIndicator, L1Penalty, LinfPenalty, QuadraticPenalty};
use proxsampler_core::{chain_rng, CompositeTarget, RgoSampler, SmoothPotential};

fn l1_problem() -> &'static (LogisticProblem, CompositeTarget) {
    static CELL: OnceLock<(LogisticProblem, CompositeTarget)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = make_logistic_data(&LogisticSpec::l1_preset(0)).unwrap();
        let t = p.target().unwrap();
        (p, t)
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn vec_strategy(d: usize, r: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-r..r, d)
}

fn oracles() -> Vec<Box<dyn RgoSampler>> {
    let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, 0.0, 0.5, 1.0, -0.3, 0.0, -0.3, 0.5]);
    vec![
        Box::new(BoxIndicator::new(vec![-1.0, 0.0, -2.0], vec![0.5, 3.0, 2.0]).unwrap()),
        Box::new(L1Penalty::new(3, 1.3).unwrap()),
        Box::new(LinfPenalty::new(3, 2.0).unwrap()),
        Box::new(QuadraticPenalty::new(a, vec![0.1, 0.0, -0.4], 0.0).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn prox_is_nonexpansive(u in vec_strategy(3, 5.0), v in vec_strategy(3, 5.0), h in 0.01f64..4.0) {
        for g in oracles() {
            let pu = g.prox(h, &u).unwrap();
            let pv = g.prox(h, &v).unwrap();
            prop_assert!(norm(&diff(&pu, &pv)) <= norm(&diff(&u, &v)) * (1.0 + 1e-9) + 1e-12, "{g:?}");
        }
    }

    #[test]
    fn prox_beats_nearby_points(v in vec_strategy(3, 5.0), dir in vec_strategy(3, 1.0), h in 0.01f64..4.0, t in 1e-4f64..0.5) {
        for g in oracles() {
            let p = g.prox(h, &v).unwrap();
            let obj = |x: &[f64]| g.value(x) + norm(&diff(x, &v)).powi(2) / (2.0 * h);
            let q: Vec<f64> = p.iter().zip(&dir).map(|(a, b)| a + t * b).collect();
            prop_assert!(obj(&p) <= obj(&q) + 1e-10, "{g:?}");
        }
    }

    #[test]
    fn rgo_draws_stay_in_domain(v in vec_strategy(3, 20.0), h in 0.001f64..10.0, seed in any::<u64>()) {
        let g = BoxIndicator::new(vec![-1.0, 0.0, -2.0], vec![0.5, 3.0, 2.0]).unwrap();
        let x = g.draw(h, &v, &mut chain_rng(seed)).unwrap();
        prop_assert!(g.value(&x).is_finite());
    }

    #[test]
    fn truncated_gaussian_respects_bounds(mean in -50.0f64..50.0, sd in 0.01f64..10.0, lo in -5.0f64..5.0, width in 1e-6f64..10.0, seed in any::<u64>()) {
        let hi = lo + width;
        if let Ok(x) = truncated_gaussian_1d(mean, sd * sd, lo, hi, &mut chain_rng(seed)) {
            prop_assert!(x >= lo && x <= hi);
        }
    }

    #[test]
    fn lazy_acceptance_satisfies_detailed_balance(
        lnx in -30.0f64..30.0, lnz in -30.0f64..30.0, lmx in -30.0f64..30.0, lmz in -30.0f64..30.0,
    ) {
        // ν(x) μ(z) α(x→z) against ν(z) μ(x) α(z→x), in logs
        let wx = lnx - lmx;
        let wz = lnz - lmz;
        let fwd = lnx + lmz + lazy_accept_prob(log_ratio(wz, wx)).ln();
        let bwd = lnz + lmx + lazy_accept_prob(log_ratio(wx, wz)).ln();
        prop_assert!((fwd - bwd).abs() <= 1e-12 * fwd.abs().max(1.0));
    }

    #[test]
    fn logistic_gradient_matches_finite_differences(x in vec_strategy(36, 1.5)) {
        let (p, _) = l1_problem();
        let f = p.potential();
        let g = f.gradient(&x);
        let eps = 1e-5;
        let mut fd = vec![0.0; x.len()];
        for j in 0..x.len() {
            let mut a = x.clone();
            let mut b = x.clone();
            a[j] += eps;
            b[j] -= eps;
            fd[j] = (f.value(&a) - f.value(&b)) / (2.0 * eps);
        }
        prop_assert!(norm(&diff(&g, &fd)) <= 1e-6 * norm(&g).max(1.0));
    }

    #[test]
    fn logistic_is_tau_strongly_convex(x in vec_strategy(36, 2.0), y in vec_strategy(36, 2.0)) {
        let (p, _) = l1_problem();
        let f = p.potential();
        let dg = diff(&f.gradient(&x), &f.gradient(&y));
        let dx = diff(&x, &y);
        let inner: f64 = dg.iter().zip(&dx).map(|(a, b)| a * b).sum();
        prop_assert!(inner >= p.tau * norm(&dx).powi(2) * (1.0 - 1e-9));
    }

    #[test]
    fn prox_gradient_step_obeys_descent_bound(offset in vec_strategy(36, 1.0), scale in 1e-3f64..2.0, hfrac in 0.05f64..1.0) {
        let (_, target) = l1_problem();
        let h = hfrac / target.beta();
        let y: Vec<f64> = target.x_star().iter().zip(&offset).map(|(a, b)| a + scale * b).collect();
        let grad = target.f().gradient(&y);
        let v: Vec<f64> = y.iter().zip(&grad).map(|(a, g)| a - h * g).collect();
        let y_plus = target.g().prox(h, &v).unwrap();
        let lhs = norm(&diff(&y, &y_plus)).powi(2);
        let gap = target.value(&y) - target.value(target.x_star());
        prop_assert!(lhs <= 2.0 * h * gap + 1e-12 * target.value(&y).abs(), "{lhs} > {}", 2.0 * h * gap);
    }

    #[test]
    fn running_rmse_ignores_coordinate_order(xs in prop::collection::vec(vec_strategy(4, 3.0), 1..30), xh in vec_strategy(4, 1.0)) {
        let perm = [2usize, 0, 3, 1];
        let permute = |x: &Vec<f64>| perm.iter().map(|&j| x[j]).collect::<Vec<f64>>();
        let a = running_rmse(&xs, &xh).unwrap();
        let b = running_rmse(&xs.iter().map(permute).collect::<Vec<_>>(), &permute(&xh)).unwrap();
        for (p, q) in a.iter().zip(&b) {
            prop_assert!((p - q).abs() <= 1e-12 * p.max(1.0));
        }
    }

    #[test]
    fn sliced_w2_is_symmetric(a in prop::collection::vec(vec_strategy(3, 3.0), 5), b in prop::collection::vec(vec_strategy(3, 3.0), 5), seed in any::<u64>()) {
        let ab = sliced_w2(&a, &b, 16, &mut chain_rng(seed)).unwrap();
        let ba = sliced_w2(&b, &a, 16, &mut chain_rng(seed)).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12 * ab.max(1.0));
    }
}

#[test]
fn logistic_hessian_is_bounded_by_beta() {
    let (p, _) = l1_problem();
    let f = p.potential();
    let d = p.d;
    let mut rng = chain_rng(8);
    for _ in 0..100 {
        let x: Vec<f64> = (0..d).map(|_| rand::Rng::random_range(&mut rng, -2.0..2.0)).collect();
        let eps = 1e-5;
        let mut hess = DMatrix::zeros(d, d);
        for j in 0..d {
            let mut a = x.clone();
            let mut b = x.clone();
            a[j] += eps;
            b[j] -= eps;
            let (ga, gb) = (f.gradient(&a), f.gradient(&b));
            for i in 0..d {
                hess[(i, j)] = (ga[i] - gb[i]) / (2.0 * eps);
            }
        }
        let sym = (&hess + hess.transpose()) * 0.5;
        let top = sym.symmetric_eigenvalues().max();
        assert!(top <= f.smoothness() * (1.0 + 1e-6), "{top} > {}", f.smoothness());
        assert!(top >= p.tau);
    }
}

#[test]
fn discrete_surrogate_chain_preserves_target() {
    // IMH kernel on 50 states: P(x, z) = μ(z) α(x→z) off the diagonal.
    let mut rng = chain_rng(9);
    let n = 50;
    let raw_nu: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.01..1.0)).collect();
    let raw_mu: Vec<f64> = (0..n).map(|_| rand::Rng::random_range(&mut rng, 0.01..1.0)).collect();
    let nu: Vec<f64> = raw_nu.iter().map(|v| v / raw_nu.iter().sum::<f64>()).collect();
    let mu: Vec<f64> = raw_mu.iter().map(|v| v / raw_mu.iter().sum::<f64>()).collect();
    let w: Vec<f64> = (0..n).map(|i| nu[i].ln() - mu[i].ln()).collect();
    let mut p = vec![vec![0.0; n]; n];
    for x in 0..n {
        let mut off = 0.0;
        for z in 0..n {
            if z != x {
                p[x][z] = mu[z] * lazy_accept_prob(log_ratio(w[z], w[x]));
                off += p[x][z];
            }
        }
        p[x][x] = 1.0 - off;
    }
    for z in 0..n {
        let mass: f64 = (0..n).map(|x| nu[x] * p[x][z]).sum();
        assert!((mass - nu[z]).abs() < 1e-10, "state {z}: {mass} vs {}", nu[z]);
    }
}

#[test]
fn composite_traces_are_seed_deterministic() {
    use proxsampler_core::{composite_sampler_run, problems::gaussian_box_target, SamplerConfig, StepSize};
    let t = gaussian_box_target(3, 1.0).unwrap();
    let cfg = SamplerConfig { step: StepSize::Fixed(0.2), outer_iters: 200, inner_steps: 4, zeta: 0.1, seed: 77 };
    let a = composite_sampler_run(&t, &cfg).unwrap();
    let b = composite_sampler_run(&t, &cfg).unwrap();
    assert_eq!(a, b);
    let c = composite_sampler_run(&t, &SamplerConfig { seed: 78, ..cfg }).unwrap();
    assert_ne!(a.iterates, c.iterates);
}
