//! Sieve design matrices and the closed-form estimators.
//!
//! Everything is built from the centered regressor `cx = x - xbar` and the
//! centered, unit-variance nonlinear basis columns (a pure
//! reparameterization: estimates of the linear coefficient and both test
//! statistics are invariant to any invertible recombination of the
//! nonlinear columns, while the conditioning of power bases improves
//! enormously). With blocks named after the partition
//!
//! ```text
//! P'MP = [ d11  d12 ]        d11   = sum cx^2
//!        [ d21  d22 ]        schur = d11 - d12 d22^{-1} d21
//! ```
//!
//! the estimators in closed form are
//!
//! ```text
//! psi1_ols      = cx'cy / d11
//! psi1_series   = (cx'cy - proj'cy) / schur     (first full-regression coord)
//! psi1_kappa_z  = (cx'cy - proj'cy) / d11       (plug-in Z-estimator)
//! ```
//!
//! where `proj` is the empirical projection of `cx` on the nonlinear
//! columns. The identity `psi1_kappa_z * d11 = psi1_series * schur` is
//! exact by construction.

use crate::error::{CoreError, Result};
use crate::linalg::{Mat, ThinQr};
use std::sync::Arc;

/// Basis families; the first element is always the identity map.
#[derive(Clone)]
pub enum BasisFamily {
    /// `p_j(z) = z^j`.
    Power,
    /// Probabilists' Hermite polynomials `He_j`.
    Hermite,
    /// Caller-supplied columns `p_2..p_kappa` (the first stays `z`).
    Custom(Vec<Arc<dyn Fn(f64) -> f64 + Send + Sync>>),
}

impl std::fmt::Debug for BasisFamily {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BasisFamily::Power => write!(f, "Power"),
            BasisFamily::Hermite => write!(f, "Hermite"),
            BasisFamily::Custom(v) => write!(f, "Custom({} columns)", v.len()),
        }
    }
}

/// A sieve basis of `kappa` terms with `p_1(z) = z`.
#[derive(Debug, Clone)]
pub struct SieveBasis {
    pub kappa: usize,
    pub family: BasisFamily,
}

impl SieveBasis {
    pub fn power(kappa: usize) -> Result<Self> {
        Self::new(kappa, BasisFamily::Power)
    }

    pub fn hermite(kappa: usize) -> Result<Self> {
        Self::new(kappa, BasisFamily::Hermite)
    }

    pub fn new(kappa: usize, family: BasisFamily) -> Result<Self> {
        if kappa == 0 {
            return Err(CoreError::InvalidArgument("kappa must be >= 1".into()));
        }
        if let BasisFamily::Custom(cols) = &family {
            if cols.len() != kappa.saturating_sub(1) {
                return Err(CoreError::InvalidArgument(
                    "custom basis must supply kappa - 1 nonlinear columns".into(),
                ));
            }
        }
        Ok(SieveBasis { kappa, family })
    }

    /// Evaluate `p_j(z)` for `j = 1..=kappa`; `p_1(z) = z` always.
    pub fn eval(&self, z: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.kappa);
        match &self.family {
            BasisFamily::Power => {
                let mut v = 1.0;
                for _ in 0..self.kappa {
                    v *= z;
                    out.push(v);
                }
            }
            BasisFamily::Hermite => {
                // He_1 = z, He_2 = z^2 - 1, He_{j+1} = z He_j - j He_{j-1}.
                let mut prev = 1.0;
                let mut cur = z;
                out.push(cur);
                for j in 1..self.kappa {
                    let next = z * cur - j as f64 * prev;
                    prev = cur;
                    cur = next;
                    out.push(cur);
                }
            }
            BasisFamily::Custom(cols) => {
                out.push(z);
                for c in cols {
                    out.push(c(z));
                }
            }
        }
        out
    }

    /// Default term count `max(3, ceil(2 n^{1/5}))`.
    pub fn default_kappa(n: usize) -> usize {
        (2.0 * (n as f64).powf(0.2)).ceil().max(3.0) as usize
    }
}

/// One observed series pair.
#[derive(Debug, Clone)]
pub struct TimeSeriesSample {
    pub y: Vec<f64>,
    pub x: Vec<f64>,
}

impl TimeSeriesSample {
    pub fn new(y: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if y.len() != x.len() {
            return Err(CoreError::Data(format!(
                "y and x lengths differ: {} vs {}",
                y.len(),
                x.len()
            )));
        }
        if y.iter().chain(x.iter()).any(|v| !v.is_finite()) {
            return Err(CoreError::Data("non-finite observation".into()));
        }
        Ok(TimeSeriesSample { y, x })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Centered design blocks, projections, and series residuals.
#[derive(Debug, Clone)]
pub struct DesignBlocks {
    pub n: usize,
    pub kappa: usize,
    /// `sum (x - xbar)^2`.
    pub d11: f64,
    /// `d12 d22^{-1} d21 = ||proj||^2`, the nonlinear share of `cx`.
    pub s_nonlinear: f64,
    /// `d11 - s_nonlinear`.
    pub schur: f64,
    /// Centered regressor.
    pub cx: Vec<f64>,
    /// Centered response.
    pub cy: Vec<f64>,
    /// Empirical projection of `cx` on the nonlinear columns.
    pub delta_hat: Vec<f64>,
    /// Series-fit residuals.
    pub residuals: Vec<f64>,
    /// Mean squared series residual.
    pub sigma2: f64,
    /// Mean squared centered response, the scale degeneracy is judged by.
    pub var_y: f64,
    /// `cx'cy`.
    pub sxy: f64,
    /// `proj'cy`.
    pub proj_y: f64,
}

impl DesignBlocks {
    /// Residual variance at floating-point noise level relative to the
    /// response scale: the fit is exact and no test can be formed.
    pub fn residuals_degenerate(&self) -> bool {
        self.sigma2 <= 1e-24 * self.var_y.max(f64::MIN_POSITIVE)
    }
}

const COND_LIMIT: f64 = 1e12;

/// Build the centered blocks. The nonlinear columns are centered, scaled
/// to unit sample variance, and orthogonally decomposed; a condition
/// number above 1e12 on their Gram matrix is reported as collinearity.
pub fn design_blocks(sample: &TimeSeriesSample, basis: &SieveBasis) -> Result<DesignBlocks> {
    let n = sample.len();
    let kappa = basis.kappa;
    if n < kappa + 2 {
        return Err(CoreError::InvalidArgument(format!(
            "need n >= kappa + 2, got n = {n}, kappa = {kappa}"
        )));
    }
    let xbar = sample.x.iter().sum::<f64>() / n as f64;
    let ybar = sample.y.iter().sum::<f64>() / n as f64;
    let cx: Vec<f64> = sample.x.iter().map(|v| v - xbar).collect();
    let cy: Vec<f64> = sample.y.iter().map(|v| v - ybar).collect();
    let d11: f64 = cx.iter().map(|v| v * v).sum();
    if d11 <= 0.0 {
        return Err(CoreError::DegenerateVariance("regressor has zero variance".into()));
    }
    let sxy: f64 = cx.iter().zip(&cy).map(|(a, b)| a * b).sum();

    let var_y: f64 = cy.iter().map(|v| v * v).sum::<f64>() / n as f64;

    if kappa == 1 {
        // No nonlinear block: the projection is zero and the series fit is
        // the simple regression.
        let psi = sxy / d11;
        let residuals: Vec<f64> = cy.iter().zip(&cx).map(|(y, x)| y - psi * x).collect();
        let sigma2 = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;
        return Ok(DesignBlocks {
            n,
            kappa,
            d11,
            s_nonlinear: 0.0,
            schur: d11,
            cx,
            cy,
            delta_hat: vec![0.0; n],
            residuals,
            sigma2,
            var_y,
            sxy,
            proj_y: 0.0,
        });
    }

    // Centered, standardized nonlinear columns.
    let m = kappa - 1;
    let mut cols = Mat::zeros(n, m);
    let mut raw = vec![vec![0.0; n]; m];
    for (t, &xv) in sample.x.iter().enumerate() {
        let basis_vals = basis.eval(xv);
        for j in 0..m {
            raw[j][t] = basis_vals[j + 1];
        }
    }
    for (j, col) in raw.iter().enumerate() {
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        if var <= 0.0 {
            return Err(CoreError::CollinearBasis { kappa, cond: f64::INFINITY });
        }
        let sd = var.sqrt();
        for t in 0..n {
            cols[(t, j)] = (col[t] - mean) / sd;
        }
    }
    let qr = ThinQr::new(&cols)?;
    let cond = qr.cond_estimate();
    if cond * cond > COND_LIMIT {
        return Err(CoreError::CollinearBasis { kappa, cond: cond * cond });
    }
    let delta_hat = qr.project(&cx);
    let s_nonlinear: f64 = cx.iter().zip(&delta_hat).map(|(a, b)| a * b).sum();
    let schur = d11 - s_nonlinear;
    if schur <= 1e-12 * d11 {
        return Err(CoreError::DegenerateVariance(
            "nonlinear columns absorb the regressor (zero partialled variation)".into(),
        ));
    }
    let proj_y: f64 = delta_hat.iter().zip(&cy).map(|(a, b)| a * b).sum();

    // Series fit residuals via the partitioned solution.
    let psi1_series = (sxy - proj_y) / schur;
    let partial: Vec<f64> = cy.iter().zip(&cx).map(|(y, x)| y - psi1_series * x).collect();
    let fitted_nl = qr.project(&partial);
    let residuals: Vec<f64> = partial.iter().zip(&fitted_nl).map(|(p, f)| p - f).collect();
    let sigma2 = residuals.iter().map(|r| r * r).sum::<f64>() / n as f64;

    Ok(DesignBlocks {
        n,
        kappa,
        d11,
        s_nonlinear,
        schur,
        cx,
        cy,
        delta_hat,
        residuals,
        sigma2,
        var_y,
        sxy,
        proj_y,
    })
}

/// Simple regression slope `sum (x - xbar) y / sum (x - xbar)^2`.
pub fn ols_psi1(sample: &TimeSeriesSample) -> Result<f64> {
    let n = sample.len();
    if n < 2 {
        return Err(CoreError::InvalidArgument("need at least two observations".into()));
    }
    let xbar = sample.x.iter().sum::<f64>() / n as f64;
    let d11: f64 = sample.x.iter().map(|v| (v - xbar) * (v - xbar)).sum();
    if d11 <= 0.0 {
        return Err(CoreError::DegenerateVariance("regressor has zero variance".into()));
    }
    let sxy: f64 = sample
        .x
        .iter()
        .zip(&sample.y)
        .map(|(&x, &y)| (x - xbar) * y)
        .sum();
    Ok(sxy / d11)
}

impl DesignBlocks {
    /// First coordinate of the full series regression.
    pub fn psi1_series(&self) -> f64 {
        (self.sxy - self.proj_y) / self.schur
    }

    /// Z-estimator pair: the first component coincides with the simple
    /// regression slope, the second divides by `d11` instead of the Schur
    /// complement.
    pub fn z_estimators(&self) -> (f64, f64) {
        (self.sxy / self.d11, (self.sxy - self.proj_y) / self.d11)
    }

    pub fn psi1_ols(&self) -> f64 {
        self.sxy / self.d11
    }
}

/// Bartlett HAC estimate of the 2x2 long-run covariance of
/// `v_t = u_t (cx_t, cx_t - delta_t)'` from the series residuals.
pub fn gamma_hat(blocks: &DesignBlocks, bandwidth: usize) -> Result<[[f64; 2]; 2]> {
    let n = blocks.n;
    if bandwidth >= n {
        return Err(CoreError::InvalidArgument(format!(
            "bandwidth {bandwidth} must be below the sample size {n}"
        )));
    }
    let v: Vec<[f64; 2]> = (0..n)
        .map(|t| {
            let u = blocks.residuals[t];
            [u * blocks.cx[t], u * (blocks.cx[t] - blocks.delta_hat[t])]
        })
        .collect();
    let lag_cov = |l: usize| -> [[f64; 2]; 2] {
        let mut m = [[0.0; 2]; 2];
        for t in l..n {
            for i in 0..2 {
                for j in 0..2 {
                    m[i][j] += v[t][i] * v[t - l][j];
                }
            }
        }
        for row in m.iter_mut() {
            for x in row.iter_mut() {
                *x /= n as f64;
            }
        }
        m
    };
    let mut g = lag_cov(0);
    for l in 1..=bandwidth {
        let w = 1.0 - l as f64 / (bandwidth as f64 + 1.0);
        let m = lag_cov(l);
        for i in 0..2 {
            for j in 0..2 {
                g[i][j] += w * (m[i][j] + m[j][i]);
            }
        }
    }
    Ok(g)
}

/// Generalized statistic `n (psi1_z - psi1_kappa_z)^2 / (e'Q^{-1} G Q^{-1} e)`
/// with `Q = (d11/n) I` and `e = (1, -1)'`, plus its one-degree chi-square
/// p-value.
pub fn h1_statistic(blocks: &DesignBlocks, gamma: &[[f64; 2]; 2]) -> Result<(f64, f64)> {
    if blocks.residuals_degenerate() {
        return Err(CoreError::DegenerateVariance(
            "residuals vanish: the fit is exact".into(),
        ));
    }
    let n = blocks.n as f64;
    let quad = gamma[0][0] - gamma[0][1] - gamma[1][0] + gamma[1][1];
    let denom = (n / blocks.d11) * (n / blocks.d11) * quad;
    if !(denom > 0.0) {
        return Err(CoreError::DegenerateVariance(format!(
            "e'Q^-1 Gamma Q^-1 e = {denom} is not positive"
        )));
    }
    let (z1, z2) = blocks.z_estimators();
    let h1 = n * (z1 - z2) * (z1 - z2) / denom;
    Ok((h1, crate::special::chi2_sf(h1, 1.0)))
}

/// Simplified statistic
/// `(psi1_z - psi1_kappa_z)^2 / (sigma2 (d12 d22^{-1} d21 / d11^2))`
/// valid under homoskedastic martingale-difference errors.
pub fn h2_statistic(blocks: &DesignBlocks) -> Result<(f64, f64)> {
    if blocks.s_nonlinear <= 1e-12 * blocks.d11.max(1.0) {
        return Err(CoreError::NoIdentifyingNonlinearity(
            "the nonlinear columns carry no sample correlation with x".into(),
        ));
    }
    if blocks.residuals_degenerate() {
        return Err(CoreError::DegenerateVariance("zero residual variance".into()));
    }
    let (z1, z2) = blocks.z_estimators();
    let denom = blocks.sigma2 * blocks.s_nonlinear / (blocks.d11 * blocks.d11);
    let h2 = (z1 - z2) * (z1 - z2) / denom;
    Ok((h2, crate::special::chi2_sf(h2, 1.0)))
}

/// Regression-based variant: compares the simple and full-regression
/// slopes with variance `sigma2 (schur^{-1} - d11^{-1})`.
pub fn h2_regression_statistic(blocks: &DesignBlocks) -> Result<(f64, f64)> {
    if blocks.residuals_degenerate() {
        return Err(CoreError::DegenerateVariance(
            "residuals vanish: the fit is exact".into(),
        ));
    }
    let var = blocks.sigma2 * (1.0 / blocks.schur - 1.0 / blocks.d11);
    if !(var > 0.0) {
        return Err(CoreError::DegenerateVariance(
            "regression-based variance is not positive".into(),
        ));
    }
    let diff = blocks.psi1_ols() - blocks.psi1_series();
    let h = diff * diff / var;
    Ok((h, crate::special::chi2_sf(h, 1.0)))
}
