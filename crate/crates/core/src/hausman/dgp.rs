//! Local-alternative data generation and noncentrality predictions.
//!
//! The generating mechanism is `y_t = psi0 + psi1 x_t + c h0(x_t)/sqrt(n)
//! + u_t` with `u` drawn independently of the regressor path, so
//! `E[u|x] = 0` holds by construction.
//!
//! Predictions are computed at the configured sieve level: population
//! blocks come from exact quadrature under the stationary marginal of the
//! regressor, and the drift that the statistics actually see is
//! `E[delta(x) h0(x)]`, the pairing of the alternative with the projection
//! `delta` of the centered regressor on the nonlinear span. When `h0` lies
//! in that span this equals `b(h) = E[(x - mu) h0(x)]`, which is the
//! complete-sieve limit; both values are reported.

use crate::error::{CoreError, Result};
use crate::law::Law;
use crate::linalg::solve_square;
use crate::linalg::Mat;
use crate::mixing::{simulate, stationary_distribution, ProcessSpec};
use crate::seeding::{rng_from_seed, substream};
use crate::special::noncentral_chi2_power;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::design::{SieveBasis, TimeSeriesSample};

/// Built-in alternative directions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum H0Shape {
    Zero,
    Tanh,
    Cube,
    /// Even direction; paired with a symmetric regressor it has
    /// `b(h) = 0` and exercises the no-local-power warning.
    Square,
}

impl H0Shape {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            H0Shape::Zero => 0.0,
            H0Shape::Tanh => x.tanh(),
            H0Shape::Cube => x * x * x,
            H0Shape::Square => x * x,
        }
    }
}

/// Error law for the disturbances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ErrorLaw {
    Normal { sd: f64 },
}

impl ErrorLaw {
    pub fn validate(&self) -> Result<()> {
        match self {
            ErrorLaw::Normal { sd } if *sd > 0.0 => Ok(()),
            ErrorLaw::Normal { sd } => {
                Err(CoreError::InvalidArgument(format!("error sd must be positive, got {sd}")))
            }
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            ErrorLaw::Normal { sd } => sd * sd,
        }
    }
}

/// The local-alternative generating mechanism.
#[derive(Debug, Clone)]
pub struct LocalAltDgp {
    pub psi0: f64,
    pub psi1: f64,
    pub h0: H0Shape,
    /// Scale multiplying `h0(x)/sqrt(n)`; zero is the exact null.
    pub c: f64,
    pub x_process: ProcessSpec,
    pub error: ErrorLaw,
}

impl LocalAltDgp {
    pub fn new(
        psi0: f64,
        psi1: f64,
        h0: H0Shape,
        c: f64,
        x_process: ProcessSpec,
        error: ErrorLaw,
    ) -> Result<Self> {
        x_process.validate()?;
        error.validate()?;
        Ok(LocalAltDgp { psi0, psi1, h0, c, x_process, error })
    }

    /// Null version of the same mechanism (`c = 0`).
    pub fn under_null(&self) -> LocalAltDgp {
        LocalAltDgp { c: 0.0, ..self.clone() }
    }

    /// Stationary marginal law of the regressor, where closed forms exist.
    pub fn x_marginal(&self) -> Result<Law> {
        match &self.x_process {
            ProcessSpec::FiniteMarkov { transition, states } => {
                let pi = stationary_distribution(transition)?;
                Law::finite(states.clone(), pi)
            }
            ProcessSpec::GaussianAr1 { a, sigma } => {
                Law::normal(0.0, sigma / (1.0 - a * a).sqrt())
            }
            ProcessSpec::NonlinearAr { .. } => Err(CoreError::Unsupported(
                "no closed-form marginal for the nonlinear autoregression".into(),
            )),
        }
    }
}

/// Draw one sample of length `n`. The regressor path and the disturbances
/// use separate substreams of `seed`, so the pair is reproducible and the
/// disturbances are independent of the path.
pub fn simulate_local_alt(dgp: &LocalAltDgp, n: usize, seed: u64) -> Result<TimeSeriesSample> {
    if n == 0 {
        return Err(CoreError::InvalidArgument("n must be >= 1".into()));
    }
    let x_path = simulate(&dgp.x_process, n, substream(seed, 0))?;
    let mut rng = rng_from_seed(substream(seed, 1));
    let scale = dgp.c / (n as f64).sqrt();
    let ErrorLaw::Normal { sd } = dgp.error;
    let y: Vec<f64> = x_path
        .values
        .iter()
        .map(|&x| {
            let z: f64 = StandardNormal.sample(&mut rng);
            dgp.psi0 + dgp.psi1 * x + scale * dgp.h0.eval(x) + sd * z
        })
        .collect();
    TimeSeriesSample::new(y, x_path.values)
}

/// Population design summary at the configured sieve level.
#[derive(Debug, Clone)]
pub struct PopulationBlocks {
    /// `Var(x)`.
    pub d11: f64,
    /// `Var(delta(x))`, the nonlinear share of the regressor.
    pub s_nonlinear: f64,
    /// `b(h) = E[(x - mu) h0(x)]`.
    pub b_full: f64,
    /// `E[delta(x) h0(x)]`, the drift seen at this sieve level.
    pub b_effective: f64,
    pub sigma2: f64,
}

/// Noncentrality parameters (mean-shift parameterization: the limiting
/// statistic is `(Z + lambda)^2`).
#[derive(Debug, Clone)]
pub struct Noncentrality {
    /// Shift of the generalized statistic.
    pub lambda1: f64,
    /// Shift of the simplified statistic.
    pub lambda2: f64,
    /// Shift of the regression-based statistic.
    pub lambda2_regression: f64,
    /// Complete-sieve limits using `b(h)` in place of the projected drift.
    pub lambda2_sieve_limit: f64,
    pub lambda2_regression_sieve_limit: f64,
    /// Set when the projected drift vanishes: the test has no local power
    /// against this direction at this sieve level.
    pub no_local_power: bool,
    pub blocks: PopulationBlocks,
}

impl Noncentrality {
    /// Predicted rejection probability `P((Z + lambda)^2 > crit)`.
    pub fn power(lambda: f64, crit: f64) -> f64 {
        noncentral_chi2_power(crit, lambda)
    }
}

/// Exact-quadrature population blocks and noncentralities for a built-in
/// generating mechanism at sieve level `basis`.
pub fn noncentrality(dgp: &LocalAltDgp, basis: &SieveBasis) -> Result<Noncentrality> {
    let law = dgp.x_marginal()?;
    let mu = law.expectation(|x| x)?;
    let d11 = law.expectation(|x| (x - mu) * (x - mu))?;
    if !(d11 > 0.0) {
        return Err(CoreError::DegenerateVariance("regressor variance is zero".into()));
    }
    let h = dgp.h0;
    let b_full = law.expectation(|x| (x - mu) * h.eval(x))?;
    let sigma2 = dgp.error.variance();

    if basis.kappa == 1 {
        return Err(CoreError::NoIdentifyingNonlinearity(
            "kappa = 1 leaves no nonlinear block".into(),
        ));
    }
    let m = basis.kappa - 1;
    // Population-standardized nonlinear columns.
    let means: Vec<f64> = (0..m)
        .map(|j| law.expectation(|x| basis.eval(x)[j + 1]))
        .collect::<Result<_>>()?;
    let sds: Vec<f64> = (0..m)
        .map(|j| {
            let mj = means[j];
            law.expectation(|x| {
                let v = basis.eval(x)[j + 1] - mj;
                v * v
            })
            .map(f64::sqrt)
        })
        .collect::<Result<_>>()?;
    if sds.iter().any(|s| !(*s > 0.0)) {
        return Err(CoreError::CollinearBasis { kappa: basis.kappa, cond: f64::INFINITY });
    }
    let tilde = |x: f64, j: usize| (basis.eval(x)[j + 1] - means[j]) / sds[j];
    let mut gram = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..=i {
            let v = law.expectation(|x| tilde(x, i) * tilde(x, j))?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let cov_x: Vec<f64> = (0..m)
        .map(|j| law.expectation(|x| (x - mu) * tilde(x, j)))
        .collect::<Result<_>>()?;
    let beta = solve_square(&gram, &cov_x)?;
    let s_nonlinear: f64 = beta.iter().zip(&cov_x).map(|(b, c)| b * c).sum();
    if !(s_nonlinear > 0.0) {
        return Err(CoreError::NoIdentifyingNonlinearity(
            "the population nonlinear block carries no correlation with x".into(),
        ));
    }
    let schur = d11 - s_nonlinear;
    if !(schur > 0.0) {
        return Err(CoreError::DegenerateVariance(
            "population partialled variance is zero".into(),
        ));
    }
    // Drift through the projection channel.
    let cov_h: Vec<f64> = (0..m)
        .map(|j| law.expectation(|x| h.eval(x) * tilde(x, j)))
        .collect::<Result<_>>()?;
    let b_effective: f64 = beta.iter().zip(&cov_h).map(|(b, c)| b * c).sum();

    let sigma = sigma2.sqrt();
    let lambda_z = dgp.c * b_effective / (sigma * s_nonlinear.sqrt());
    let shift_reg = dgp.c * (b_full / d11 - (b_full - b_effective) / schur);
    let sd_reg = sigma * (s_nonlinear / (d11 * schur)).sqrt();
    let lambda_reg = shift_reg / sd_reg;
    let lambda_limit = dgp.c * b_full / (sigma * s_nonlinear.sqrt());
    let lambda_reg_limit = lambda_limit * (schur / d11).sqrt();

    Ok(Noncentrality {
        lambda1: lambda_z,
        lambda2: lambda_z,
        lambda2_regression: lambda_reg,
        lambda2_sieve_limit: lambda_limit,
        lambda2_regression_sieve_limit: lambda_reg_limit,
        no_local_power: b_effective.abs() < 1e-10,
        blocks: PopulationBlocks { d11, s_nonlinear, b_full, b_effective, sigma2 },
    })
}
