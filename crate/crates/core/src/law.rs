//! Marginal laws used by the norm and moment machinery.

use crate::error::{CoreError, Result};
use crate::quad::{integrate_to_zero, normal_expectation};

/// Scalar weight `<x> = 1 + x^2`.
pub fn angle_scalar(x: f64) -> f64 {
    1.0 + x * x
}

/// A scalar marginal distribution.
#[derive(Debug, Clone)]
pub enum Law {
    /// Atoms with probabilities (normalized at construction).
    Finite { points: Vec<f64>, probs: Vec<f64> },
    Normal { mean: f64, sd: f64 },
    /// Pareto with density `a s^a / x^{a+1}` on `x >= s`; heavy tails make
    /// high moments diverge, which exercises the infinite-moment paths.
    Pareto { shape: f64, scale: f64 },
}

impl Law {
    pub fn finite(points: Vec<f64>, probs: Vec<f64>) -> Result<Self> {
        if points.is_empty() || points.len() != probs.len() {
            return Err(CoreError::InvalidArgument("empty or mismatched support".into()));
        }
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) {
            return Err(CoreError::InvalidArgument("negative probability".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(CoreError::InvalidArgument(format!("probabilities sum to {total}")));
        }
        let probs = probs.iter().map(|p| p / total).collect();
        Ok(Law::Finite { points, probs })
    }

    /// Empirical law of a sample (equal masses).
    pub fn from_sample(xs: &[f64]) -> Result<Self> {
        if xs.is_empty() {
            return Err(CoreError::InvalidArgument("empty sample".into()));
        }
        let w = 1.0 / xs.len() as f64;
        Law::finite(xs.to_vec(), vec![w; xs.len()])
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0) {
            return Err(CoreError::InvalidArgument("sd must be positive".into()));
        }
        Ok(Law::Normal { mean, sd })
    }

    pub fn pareto(shape: f64, scale: f64) -> Result<Self> {
        if !(shape > 0.0 && scale > 0.0) {
            return Err(CoreError::InvalidArgument("pareto parameters must be positive".into()));
        }
        Ok(Law::Pareto { shape, scale })
    }

    /// `E[g(X)]` for laws with light enough tails; quadrature for the
    /// normal case, exact sums for finite support.
    pub fn expectation(&self, g: impl Fn(f64) -> f64) -> Result<f64> {
        match self {
            Law::Finite { points, probs } => {
                Ok(points.iter().zip(probs).map(|(&x, &p)| p * g(x)).sum())
            }
            Law::Normal { mean, sd } => Ok(normal_expectation(&g, *mean, *sd, 1e-12)),
            Law::Pareto { .. } => Err(CoreError::Unsupported(
                "general expectations over Pareto laws are not provided".into(),
            )),
        }
    }

    /// `E[<X>^p]`, returning `f64::INFINITY` when the moment diverges.
    pub fn angle_moment(&self, p: f64) -> f64 {
        match self {
            Law::Finite { points, probs } => points
                .iter()
                .zip(probs)
                .map(|(&x, &pr)| pr * angle_scalar(x).powf(p))
                .sum(),
            Law::Normal { mean, sd } => {
                normal_expectation(&|x: f64| angle_scalar(x).powf(p), *mean, *sd, 1e-12)
            }
            Law::Pareto { shape, scale } => {
                if 2.0 * p >= *shape {
                    return f64::INFINITY;
                }
                // X = scale * U^{-1/shape} for U uniform on (0,1].
                let g = |u: f64| angle_scalar(scale * u.powf(-1.0 / shape)).powf(p);
                integrate_to_zero(&g, 1.0, 1e-11).unwrap_or(f64::INFINITY)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finite_law_validation() {
        assert!(Law::finite(vec![], vec![]).is_err());
        assert!(Law::finite(vec![1.0], vec![0.5]).is_err());
        assert!(Law::finite(vec![1.0, 2.0], vec![0.25, 0.75]).is_ok());
    }

    #[test]
    fn point_mass_angle_moment_is_one() {
        let law = Law::finite(vec![0.0], vec![1.0]).unwrap();
        for &p in &[0.1, 1.0, 7.3] {
            assert!((law.angle_moment(p) - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_angle_moment() {
        // E[(1+X^2)^2] = 1 + 2 E X^2 + E X^4 = 6 for standard normal.
        let law = Law::normal(0.0, 1.0).unwrap();
        assert!((law.angle_moment(2.0) - 6.0).abs() < 1e-8);
    }

    #[test]
    fn pareto_moment_divergence() {
        let law = Law::pareto(3.0, 1.0).unwrap();
        // 2p < 3 converges, 2p >= 3 diverges.
        assert!(law.angle_moment(1.0).is_finite());
        assert!(law.angle_moment(1.6).is_infinite());
        // E[X^2] for shape 3, scale 1 is 3; E[(1+X^2)] = 4.
        assert!((law.angle_moment(1.0) - 4.0).abs() < 1e-6);
    }
}
