//! Normalized CDF of a 1D unnormalized log-density by adaptive Gauss-Kronrod
//! quadrature. Infinite supports are mapped onto a bounded variable first.

use crate::error::{Error, Result};

const CELLS: usize = 2048;
const MAX_DEPTH: usize = 40;
const REL_TOL: f64 = 1e-11;

// 15-point Kronrod nodes on [-1, 1] (nonnegative half) with Kronrod and
// embedded 7-point Gauss weights.
const XK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
enum Map {
    Finite,
    Both { c: f64, s: f64 },
    Lower { a: f64, s: f64 },
    Upper { b: f64, s: f64 },
}

impl Map {
    fn x(&self, t: f64) -> f64 {
        match *self {
            Map::Finite => t,
            Map::Both { c, s } => c + s * t / (1.0 - t * t),
            Map::Lower { a, s } => a + s * t / (1.0 - t),
            Map::Upper { b, s } => b + s * t / (1.0 + t),
        }
    }

    fn jac(&self, t: f64) -> f64 {
        match *self {
            Map::Finite => 1.0,
            Map::Both { s, .. } => s * (1.0 + t * t) / ((1.0 - t * t) * (1.0 - t * t)),
            Map::Lower { s, .. } => s / ((1.0 - t) * (1.0 - t)),
            Map::Upper { s, .. } => s / ((1.0 + t) * (1.0 + t)),
        }
    }

    fn t(&self, x: f64) -> f64 {
        match *self {
            Map::Finite => x,
            Map::Both { c, s } => {
                let u = (x - c) / s;
                if u.is_infinite() {
                    return u.signum();
                }
                2.0 * u / (1.0 + (1.0 + 4.0 * u * u).sqrt())
            }
            Map::Lower { a, s } => {
                let u = (x - a) / s;
                if u.is_infinite() { 1.0 } else { u / (1.0 + u) }
            }
            Map::Upper { b, s } => {
                let u = (x - b) / s;
                if u.is_infinite() { -1.0 } else { u / (1.0 - u) }
            }
        }
    }
}

/// Tabulated CDF of `p(x) ∝ exp(log_density(x))` on `[lo, hi]`.
pub struct QuadratureCdf<'a> {
    log_density: &'a dyn Fn(f64) -> f64,
    map: Map,
    lo: f64,
    hi: f64,
    t_lo: f64,
    dt: f64,
    shift: f64,
    cumulative: Vec<f64>,
    total: f64,
}

impl<'a> QuadratureCdf<'a> {
    /// `center` and `scale` place the grid when the support is unbounded;
    /// any rough location and spread of the mass works.
    pub fn new(
        log_density: &'a dyn Fn(f64) -> f64,
        lo: f64,
        hi: f64,
        center: f64,
        scale: f64,
    ) -> Result<Self> {
        if !(lo < hi) || lo.is_nan() || hi.is_nan() {
            return Err(Error::Quadrature(format!("empty support [{lo}, {hi}]")));
        }
        let s = if scale.is_finite() && scale > 0.0 { scale } else { 1.0 };
        let (map, t_lo, t_hi) = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => (Map::Finite, lo, hi),
            (false, false) => (Map::Both { c: center, s }, -1.0, 1.0),
            (true, false) => (Map::Lower { a: lo, s }, 0.0, 1.0),
            (false, true) => (Map::Upper { b: hi, s }, -1.0, 0.0),
        };
        let dt = (t_hi - t_lo) / CELLS as f64;
        let mut shift = f64::NEG_INFINITY;
        for i in 0..CELLS {
            for frac in [0.05, 0.5, 0.95] {
                let v = log_density(map.x(t_lo + (i as f64 + frac) * dt));
                if v > shift {
                    shift = v;
                }
            }
        }
        if !shift.is_finite() {
            return Err(Error::Quadrature("density vanishes on the probe grid".into()));
        }
        let mut me = Self {
            log_density,
            map,
            lo,
            hi,
            t_lo,
            dt,
            shift,
            cumulative: Vec::new(),
            total: 0.0,
        };
        let rough: f64 = (0..CELLS).map(|i| me.kronrod(me.edge(i), me.edge(i + 1)).0).sum();
        if !(rough > 0.0) || !rough.is_finite() {
            return Err(Error::Quadrature(format!("bad normalizing mass {rough}")));
        }
        me.total = rough;
        let mut cumulative = Vec::with_capacity(CELLS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..CELLS {
            acc += me.integrate(me.edge(i), me.edge(i + 1))?;
            cumulative.push(acc);
        }
        me.total = acc;
        me.cumulative = cumulative;
        Ok(me)
    }

    fn edge(&self, i: usize) -> f64 {
        self.t_lo + i as f64 * self.dt
    }

    fn integrand(&self, t: f64) -> f64 {
        let x = self.map.x(t);
        if !x.is_finite() {
            return 0.0;
        }
        let p = ((self.log_density)(x) - self.shift).exp();
        if p == 0.0 { 0.0 } else { p * self.map.jac(t) }
    }

    fn kronrod(&self, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let r = 0.5 * (b - a);
        let mid = self.integrand(c);
        let mut k = WK[7] * mid;
        let mut g = WG[3] * mid;
        for j in 0..7 {
            let pair = self.integrand(c - r * XK[j]) + self.integrand(c + r * XK[j]);
            k += WK[j] * pair;
            if j % 2 == 1 {
                g += WG[j / 2] * pair;
            }
        }
        (k * r, ((k - g) * r).abs())
    }

    fn integrate(&self, a: f64, b: f64) -> Result<f64> {
        let tol = REL_TOL * self.total / CELLS as f64;
        self.adapt(a, b, tol, 0)
    }

    fn adapt(&self, a: f64, b: f64, tol: f64, depth: usize) -> Result<f64> {
        let (val, err) = self.kronrod(a, b);
        if err <= tol.max(1e-15 * val.abs()) {
            return Ok(val);
        }
        if depth >= MAX_DEPTH {
            return Err(Error::Quadrature(format!(
                "no convergence on [{}, {}]: error {err:e}",
                self.map.x(a),
                self.map.x(b)
            )));
        }
        let m = 0.5 * (a + b);
        Ok(self.adapt(a, m, 0.5 * tol, depth + 1)? + self.adapt(m, b, 0.5 * tol, depth + 1)?)
    }

    fn cell_of(&self, t: f64) -> usize {
        (((t - self.t_lo) / self.dt).floor().max(0.0) as usize).min(CELLS - 1)
    }

    fn mass_to(&self, t: f64) -> Result<f64> {
        let i = self.cell_of(t);
        Ok(self.cumulative[i] + self.integrate(self.edge(i), t)?)
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        if x <= self.lo {
            return Ok(0.0);
        }
        if x >= self.hi {
            return Ok(1.0);
        }
        Ok((self.mass_to(self.map.t(x))? / self.total).clamp(0.0, 1.0))
    }

    /// Quantile by cell lookup then safeguarded Newton within the cell.
    pub fn inverse_cdf(&self, p: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Quadrature(format!("probability {p} outside [0, 1]")));
        }
        let target = p * self.total;
        let i = self.cumulative.partition_point(|&c| c <= target).clamp(1, CELLS) - 1;
        let (mut a, mut b) = (self.edge(i), self.edge(i + 1));
        let mut t = 0.5 * (a + b);
        for _ in 0..100 {
            let resid = self.cumulative[i] + self.integrate(self.edge(i), t)? - target;
            if resid.abs() <= 1e-14 * self.total {
                break;
            }
            if resid > 0.0 { b = t } else { a = t }
            let newton = t - resid / self.integrand(t);
            t = if newton > a && newton < b { newton } else { 0.5 * (a + b) };
            if b - a <= 1e-15 * (1.0 + t.abs()) {
                break;
            }
        }
        Ok(self.map.x(t))
    }
}
