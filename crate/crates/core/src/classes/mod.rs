//! Weighted smoothness classes and numerical norm estimates.
//!
//! A function `f` lies in the weighted class when `g(x) = f(x) <x>^{theta/2}`
//! lies in the corresponding unweighted space, with `<x> = 1 + ||x||^2`.
//! The norm estimates here are grid evaluations: lower bounds that converge
//! to the true norms as the grid refines. They are used to certify family
//! members before covers are built, not as exact functional norms.
//!
//! Numerical estimates are provided for one-dimensional domains (all
//! built-in processes are scalar); the condition oracle in
//! [`crate::classes::oracle`] handles general `(s, p, q, d, theta, gamma)`.

pub mod bracket;
pub mod oracle;

use crate::error::{CoreError, Result};
use std::sync::Arc;

pub use bracket::{bracket_cover, entropy_scaling, BracketCover, EntropyScaling, FamilyGenerator};
pub use oracle::{clt_condition_oracle, ClauseStatus, CltCondition, MomentEvidence, OracleInput, Verdict};

/// The polynomial weight `<x> = 1 + ||x||^2`.
pub fn angle_weight(x: &[f64]) -> f64 {
    1.0 + x.iter().map(|v| v * v).sum::<f64>()
}

/// Parameters of a bounded subset of a weighted smoothness class.
#[derive(Debug, Clone, Copy)]
pub struct ClassParams {
    /// Smoothness exponent, `s > d/p`.
    pub s: f64,
    /// Integrability index in `[1, inf]` (`f64::INFINITY` allowed).
    pub p: f64,
    /// Secondary index in `[1, inf]`.
    pub q: f64,
    /// Domain dimension.
    pub d: usize,
    /// Weight exponent.
    pub theta: f64,
    /// Auxiliary tail exponent, required positive when `theta <= 0`.
    pub gamma: Option<f64>,
    /// Bound on the class (sup norm and smoothness constant).
    pub radius: f64,
}

impl ClassParams {
    pub fn new(
        s: f64,
        p: f64,
        q: f64,
        d: usize,
        theta: f64,
        gamma: Option<f64>,
        radius: f64,
    ) -> Result<Self> {
        if !(s > 0.0) {
            return Err(CoreError::InvalidArgument("s must be positive".into()));
        }
        if !(p >= 1.0) || !(q >= 1.0) {
            return Err(CoreError::InvalidArgument("p, q must be >= 1".into()));
        }
        if d == 0 {
            return Err(CoreError::InvalidArgument("d must be >= 1".into()));
        }
        if !(radius > 0.0) {
            return Err(CoreError::InvalidArgument("radius must be positive".into()));
        }
        let params = ClassParams { s, p, q, d, theta, gamma, radius };
        if !(s > params.d_over_p()) {
            return Err(CoreError::InvalidArgument(format!(
                "need s > d/p, got s = {s}, d/p = {}",
                params.d_over_p()
            )));
        }
        if theta <= 0.0 {
            match gamma {
                Some(g) if g > 0.0 => {}
                _ => {
                    return Err(CoreError::InvalidArgument(
                        "gamma > 0 is required when theta <= 0".into(),
                    ))
                }
            }
        }
        Ok(params)
    }

    pub fn d_over_p(&self) -> f64 {
        if self.p.is_infinite() {
            0.0
        } else {
            self.d as f64 / self.p
        }
    }

    /// The envelope exponent `(gamma - theta)/2`; for `theta > 0` the
    /// choice `gamma = theta` gives a constant envelope.
    pub fn envelope_exponent(&self) -> f64 {
        if self.theta > 0.0 {
            0.0
        } else {
            (self.gamma.unwrap_or(0.0) - self.theta) / 2.0
        }
    }
}

/// A function together with its declared weighted sup bound
/// `K = sup_x |f(x)| <x>^{theta/2}`.
#[derive(Clone)]
pub struct WeightedFunction {
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub weighted_sup: f64,
}

impl WeightedFunction {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static, weighted_sup: f64) -> Self {
        WeightedFunction { f: Arc::new(f), weighted_sup }
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

/// Grid-based weighted Hoelder norm estimate for `s` in (0, 2): the grid
/// maximum of `|g|` plus the difference-quotient supremum of order `s`
/// (applied to a central-difference derivative when `s > 1`). A lower
/// bound converging to the true norm under grid refinement.
pub fn holder_norm_estimate(
    f: impl Fn(f64) -> f64,
    s: f64,
    grid: &[f64],
    theta: f64,
) -> Result<f64> {
    if grid.len() < 2 {
        return Err(CoreError::InvalidArgument("grid needs at least two points".into()));
    }
    if !(s > 0.0 && s < 2.0) {
        return Err(CoreError::InvalidArgument("s must lie in (0, 2)".into()));
    }
    let g: Vec<f64> = grid
        .iter()
        .map(|&x| f(x) * angle_weight(&[x]).powf(theta / 2.0))
        .collect();
    if g.iter().any(|v| !v.is_finite()) {
        return Err(CoreError::InvalidArgument("non-finite evaluation on grid".into()));
    }
    let sup = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if s <= 1.0 {
        Ok(sup + holder_seminorm(grid, &g, s))
    } else {
        // s in (1, 2): first derivative by central differences, then the
        // fractional seminorm of order s - 1 on the derivative.
        let n = grid.len();
        let mut xs = Vec::with_capacity(n);
        let mut dg = Vec::with_capacity(n);
        for i in 0..n {
            let (lo, hi) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            xs.push(grid[i]);
            dg.push((g[hi] - g[lo]) / (grid[hi] - grid[lo]));
        }
        let dsup = dg.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        Ok(sup + dsup + holder_seminorm(&xs, &dg, s - 1.0))
    }
}

fn holder_seminorm(xs: &[f64], vals: &[f64], s: f64) -> f64 {
    let mut sem = 0.0f64;
    for i in 0..xs.len() {
        for j in i + 1..xs.len() {
            let dx = (xs[i] - xs[j]).abs();
            if dx > 0.0 {
                sem = sem.max((vals[i] - vals[j]).abs() / dx.powf(s));
            }
        }
    }
    sem
}

/// Quadrature estimate of the difference-operator seminorm
///
/// ```text
/// sum_{a <= [s]-} ||D^a f||_p + ( int |z|^{-{s}+ q - d} ||Dz^2 D^a f||_p^q dz )^{1/q}
/// ```
///
/// for `s < 2` on a uniform 1-d grid, with `|z|` bounded away from zero by
/// the grid step and the domain truncated to the grid range. Documented as
/// an estimate: Riemann sums for the `L_p` integrals, sups for `p = inf`.
pub fn besov_seminorm_estimate(
    f: impl Fn(f64) -> f64,
    s: f64,
    p: f64,
    q: f64,
    grid: &[f64],
) -> Result<f64> {
    if grid.len() < 8 {
        return Err(CoreError::InvalidArgument("grid too coarse: need at least 8 points".into()));
    }
    if !(s > 0.0 && s < 2.0) {
        return Err(CoreError::InvalidArgument("s must lie in (0, 2)".into()));
    }
    let n = grid.len();
    let h = (grid[n - 1] - grid[0]) / (n as f64 - 1.0);
    if h <= 0.0 {
        return Err(CoreError::InvalidArgument("grid must be increasing".into()));
    }
    let vals: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    // Split s = [s]- + {s}+ with {s}+ in (0, 1].
    let (base, frac) = if s <= 1.0 { (0usize, s) } else { (1usize, s - 1.0) };
    // Trapezoid weights keep the quadrature measure equal to the domain
    // length, so constants come out exactly.
    let lp = |v: &[f64]| -> f64 {
        if p.is_infinite() {
            v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
        } else {
            let m = v.len();
            let sum: f64 = v
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    let w = if i == 0 || i == m - 1 { 0.5 } else { 1.0 };
                    w * x.abs().powf(p)
                })
                .sum();
            (sum * h).powf(1.0 / p)
        }
    };
    let mut total = lp(&vals);
    let target: Vec<f64> = if base == 1 {
        let mut dv = Vec::with_capacity(n);
        for i in 0..n {
            let (lo, hi) = if i == 0 {
                (0, 1)
            } else if i == n - 1 {
                (n - 2, n - 1)
            } else {
                (i - 1, i + 1)
            };
            dv.push((vals[hi] - vals[lo]) / (grid[hi] - grid[lo]));
        }
        total += lp(&dv);
        dv
    } else {
        vals.clone()
    };
    // Second differences over z = k h, both signs folded by symmetry of
    // the grid sweep (only the valid x window changes).
    let max_k = (n - 1) / 2;
    let mut diff_term = 0.0f64;
    let mut diff_sum = 0.0f64;
    for k in 1..=max_k {
        let z = k as f64 * h;
        let m = n - 2 * k;
        if m == 0 {
            break;
        }
        let d2: Vec<f64> = (0..m)
            .map(|i| target[i + 2 * k] - 2.0 * target[i + k] + target[i])
            .collect();
        let norm = lp(&d2);
        if q.is_infinite() {
            diff_term = diff_term.max(z.powf(-frac) * norm);
        } else {
            // The two signs of z contribute equally in the 1-d integral.
            diff_sum += 2.0 * z.powf(-frac * q - 1.0) * norm.powf(q) * h;
        }
    }
    if q.is_infinite() {
        total += diff_term;
    } else {
        total += diff_sum.powf(1.0 / q);
    }
    Ok(total)
}
