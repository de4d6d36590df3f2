//! Adaptive quadrature helpers.
//!
//! Two flavors are provided: plain adaptive Simpson on a closed interval,
//! and a dyadic splitting toward a left endpoint for integrands with an
//! integrable singularity at that endpoint (quantile functions blow up at
//! zero, Pareto moment transforms blow up at the origin).

/// Adaptive Simpson on `[a, b]` with absolute tolerance `tol`.
pub fn adaptive_simpson(f: &impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 50)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
            + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
}

/// Integrate `f` over `(0, b]` where `f` may have an integrable singularity
/// at 0. The interval is split dyadically toward zero; each piece is smooth
/// enough for adaptive Simpson. Returns `None` when the dyadic pieces fail
/// to decay geometrically (divergent or pathologically slow integral).
pub fn integrate_to_zero(f: &impl Fn(f64) -> f64, b: f64, tol: f64) -> Option<f64> {
    if b <= 0.0 {
        return Some(0.0);
    }
    let mut total = 0.0;
    let mut hi = b;
    let mut prev_piece = f64::INFINITY;
    for k in 0..2200 {
        let lo = hi * 0.5;
        let piece = adaptive_simpson(f, lo, hi, tol * 0.25);
        if !piece.is_finite() {
            return None;
        }
        total += piece;
        let ratio = if prev_piece.abs() > 0.0 {
            piece.abs() / prev_piece.abs()
        } else {
            0.0
        };
        // For a power-law singularity u^{-c} with c < 1 the dyadic pieces
        // shrink geometrically with ratio 2^{c-1} < 1; bound the remaining
        // tail by the geometric series and stop once it is negligible.
        if k > 4 && ratio < 0.995 {
            let tail_bound = piece.abs() * ratio / (1.0 - ratio);
            if tail_bound < tol && piece.abs() < tol {
                return Some(total);
            }
        }
        // Pieces that refuse to decay mean the power is c >= 1: divergent.
        if k > 150 && ratio >= 0.999 {
            return None;
        }
        prev_piece = piece;
        hi = lo;
        if hi < 1e-300 {
            return Some(total);
        }
    }
    Some(total)
}

/// Expectation of `g` under a normal law by panel-wise adaptive quadrature
/// over `mean +/- 45 sd` (the Gaussian tail annihilates polynomial growth
/// well before that range ends). One panel per standard deviation keeps the
/// adaptive refinement from terminating on a spuriously flat first pass.
pub fn normal_expectation(g: &impl Fn(f64) -> f64, mean: f64, sd: f64, tol: f64) -> f64 {
    let norm = 1.0 / (sd * (2.0 * std::f64::consts::PI).sqrt());
    let integrand = |x: f64| {
        let z = (x - mean) / sd;
        g(x) * norm * (-0.5 * z * z).exp()
    };
    let panels = 90;
    let panel_tol = tol / panels as f64;
    let mut total = 0.0;
    for k in 0..panels {
        let a = mean + sd * (k as f64 - 45.0);
        let b = a + sd;
        total += adaptive_simpson(&integrand, a, b, panel_tol);
    }
    total
}
