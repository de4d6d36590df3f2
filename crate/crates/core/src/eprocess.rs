//! The centered, scaled empirical process and its Monte Carlo probes.
//!
//! `vn(f) = n^{-1/2} sum_t (f(x_t) - E f)` with the mean supplied exactly,
//! so the distributional checks isolate the limit claim from estimation
//! noise. Replication `r` of every experiment runs on the substream seed
//! `substream(master, r)`; outputs are bit-identical across thread counts.

use crate::error::{CoreError, Result};
use crate::mixing::{simulate, stationary_distribution, ProcessSpec, SamplePath};
use crate::norm::longrun_markov_cross;
use crate::seeding::{run_replications, substream};
use crate::special::{ks_pvalue, ks_statistic, normal_cdf};
use std::sync::Arc;

/// A function along the path together with its exact stationary mean.
#[derive(Clone)]
pub struct Observable {
    pub label: String,
    f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    pub mean: f64,
}

impl Observable {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        mean: f64,
    ) -> Self {
        Observable { label: label.into(), f: Arc::new(f), mean }
    }

    /// Observable given by state values on a finite chain, with the mean
    /// computed from the stationary law.
    pub fn on_markov_states(
        label: impl Into<String>,
        spec: &ProcessSpec,
        values: Vec<f64>,
    ) -> Result<Self> {
        let (transition, states) = match spec {
            ProcessSpec::FiniteMarkov { transition, states } => (transition, states),
            _ => {
                return Err(CoreError::Unsupported(
                    "state observables need a finite chain".into(),
                ))
            }
        };
        if values.len() != states.len() {
            return Err(CoreError::InvalidArgument("one value per state required".into()));
        }
        let pi = stationary_distribution(transition)?;
        let mean = pi.iter().zip(&values).map(|(&p, &v)| p * v).sum();
        let table: std::collections::HashMap<u64, f64> = states
            .iter()
            .zip(&values)
            .map(|(&s, &v)| (s.to_bits(), v))
            .collect();
        Ok(Observable::new(label, move |x: f64| table[&x.to_bits()], mean))
    }

    pub fn eval(&self, x: f64) -> f64 {
        (self.f)(x)
    }
}

/// `n^{-1/2} sum_{t=1}^n (f(x_t) - mean)`.
pub fn vn(obs: &Observable, path: &SamplePath) -> f64 {
    let n = path.values.len() as f64;
    let sum: f64 = path.values.iter().map(|&x| obs.eval(x) - obs.mean).sum();
    sum / n.sqrt()
}

/// Replication matrix of `vn` values across functions.
#[derive(Debug, Clone)]
pub struct FidiSample {
    pub labels: Vec<String>,
    /// One row per replication, one column per function.
    pub rows: Vec<Vec<f64>>,
    pub n: usize,
    pub seed: u64,
}

/// Per-coordinate and joint diagnostics against the Gaussian limit.
#[derive(Debug, Clone)]
pub struct FidiDiagnostics {
    /// Sample covariance of the replication matrix.
    pub sample_cov: Vec<Vec<f64>>,
    /// Exact long-run covariance (finite chains only).
    pub gamma: Option<Vec<Vec<f64>>>,
    /// `sample_var / gamma_ii`, skipped where `gamma_ii = 0`.
    pub variance_ratios: Vec<Option<f64>>,
    /// Kolmogorov-Smirnov statistic and p-value per coordinate against
    /// `N(0, gamma_ii)`; skipped for degenerate coordinates.
    pub ks: Vec<Option<(f64, f64)>>,
    /// Set when the exact covariance is numerically singular; the
    /// comparison then rests on elementwise deltas only.
    pub gamma_singular: bool,
}

/// Simulate `reps` paths and evaluate the process at every function.
/// The exact covariance matrix is attached for finite chains (cross terms
/// by polarization of the long-run quadratic form).
pub fn fidi_experiment(
    funcs: &[Observable],
    spec: &ProcessSpec,
    n: usize,
    reps: usize,
    seed: u64,
    threads: usize,
) -> Result<(FidiSample, FidiDiagnostics)> {
    if funcs.is_empty() {
        return Err(CoreError::InvalidArgument("need at least one function".into()));
    }
    if reps == 0 {
        return Err(CoreError::InvalidArgument("need at least one replication".into()));
    }
    spec.validate()?;
    let rows = run_replications(reps, threads, |r| {
        let path = simulate(spec, n, substream(seed, r as u64)).expect("validated spec");
        funcs.iter().map(|f| vn(f, &path)).collect::<Vec<f64>>()
    });
    let k = funcs.len();
    let means: Vec<f64> = (0..k)
        .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / reps as f64)
        .collect();
    let mut sample_cov = vec![vec![0.0; k]; k];
    for row in &rows {
        for i in 0..k {
            for j in 0..k {
                sample_cov[i][j] += (row[i] - means[i]) * (row[j] - means[j]);
            }
        }
    }
    for r in sample_cov.iter_mut() {
        for v in r.iter_mut() {
            *v /= reps as f64;
        }
    }
    let gamma = match spec {
        ProcessSpec::FiniteMarkov { transition, states } => {
            let fvals: Vec<Vec<f64>> = funcs
                .iter()
                .map(|f| states.iter().map(|&s| f.eval(s)).collect())
                .collect();
            let mut g = vec![vec![0.0; k]; k];
            for i in 0..k {
                for j in 0..=i {
                    let v = longrun_markov_cross(transition, &fvals[i], &fvals[j])?;
                    g[i][j] = v;
                    g[j][i] = v;
                }
            }
            Some(g)
        }
        _ => None,
    };
    let gamma_singular = gamma
        .as_ref()
        .map(|g| {
            let det2 = |g: &Vec<Vec<f64>>| -> f64 {
                // Determinant proxy: product of diagonal minors in small k.
                g.iter().enumerate().map(|(i, row)| row[i]).product()
            };
            det2(g).abs() < 1e-14
        })
        .unwrap_or(false);
    let variance_ratios: Vec<Option<f64>> = (0..k)
        .map(|j| {
            gamma.as_ref().and_then(|g| {
                if g[j][j] > 1e-12 {
                    Some(sample_cov[j][j] / g[j][j])
                } else {
                    None
                }
            })
        })
        .collect();
    let ks: Vec<Option<(f64, f64)>> = (0..k)
        .map(|j| {
            let var = gamma.as_ref().map(|g| g[j][j])?;
            if var <= 1e-12 {
                return None;
            }
            let sd = var.sqrt();
            let mut xs: Vec<f64> = rows.iter().map(|r| r[j]).collect();
            xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let d = ks_statistic(&xs, |x| normal_cdf(x / sd));
            Some((d, ks_pvalue(d, xs.len())))
        })
        .collect();
    let labels = funcs.iter().map(|f| f.label.clone()).collect();
    Ok((
        FidiSample { labels, rows, n, seed },
        FidiDiagnostics { sample_cov, gamma, variance_ratios, ks, gamma_singular },
    ))
}

/// Monte Carlo estimate of the exceedance probability
/// `P( max_pairs |vn(f) - vn(g)| > eps )` with its binomial standard
/// error. Pair norms are certified by the caller.
#[derive(Debug, Clone, Copy)]
pub struct ProbeResult {
    pub exceed_probability: f64,
    pub standard_error: f64,
    pub reps: usize,
}

pub fn equicontinuity_probe(
    pairs: &[(Observable, Observable)],
    spec: &ProcessSpec,
    n: usize,
    eps: f64,
    reps: usize,
    seed: u64,
    threads: usize,
) -> Result<ProbeResult> {
    if pairs.is_empty() {
        return Err(CoreError::InvalidArgument("need at least one pair".into()));
    }
    if !(eps > 0.0) {
        return Err(CoreError::InvalidArgument("eps must be positive".into()));
    }
    spec.validate()?;
    let hits = run_replications(reps, threads, |r| {
        let path = simulate(spec, n, substream(seed, r as u64)).expect("validated spec");
        let max_gap = pairs
            .iter()
            .map(|(f, g)| (vn(f, &path) - vn(g, &path)).abs())
            .fold(0.0f64, f64::max);
        u32::from(max_gap > eps)
    });
    let p = hits.iter().map(|&h| h as f64).sum::<f64>() / reps as f64;
    let se = (p * (1.0 - p) / reps as f64).sqrt();
    Ok(ProbeResult { exceed_probability: p, standard_error: se, reps })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::longrun_markov;

    fn two_state_spec() -> ProcessSpec {
        ProcessSpec::finite_markov(
            vec![vec![0.75, 0.25], vec![0.25, 0.75]],
            vec![0.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn vn_of_constant_is_zero() {
        let spec = two_state_spec();
        let path = simulate(&spec, 257, 5).unwrap();
        let c = Observable::new("const", |_| 3.25, 3.25);
        assert_eq!(vn(&c, &path), 0.0);
    }

    #[test]
    fn vn_single_observation() {
        let spec = ProcessSpec::gaussian_ar1(0.3, 1.0).unwrap();
        let path = simulate(&spec, 1, 9).unwrap();
        let f = Observable::new("id", |x| x, 0.0);
        assert!((vn(&f, &path) - path.values[0]).abs() < 1e-15);
    }

    #[test]
    fn vn_is_linear_in_f() {
        let spec = two_state_spec();
        let path = simulate(&spec, 512, 3).unwrap();
        let f = Observable::on_markov_states("f", &spec, vec![1.0, -2.0]).unwrap();
        let g = Observable::on_markov_states("g", &spec, vec![0.5, 3.0]).unwrap();
        let (a, b) = (2.0, -0.75);
        let combo = Observable::new(
            "combo",
            {
                let (f, g) = (f.clone(), g.clone());
                move |x| a * f.eval(x) + b * g.eval(x)
            },
            a * f.mean + b * g.mean,
        );
        let lhs = vn(&combo, &path);
        let rhs = a * vn(&f, &path) + b * vn(&g, &path);
        assert!((lhs - rhs).abs() < 1e-12);
    }

    #[test]
    fn iid_variance_matches_classical_clt() {
        // iid chain: Var(vn) converges to Var(f).
        let pi = [0.5, 0.5];
        let spec = ProcessSpec::finite_markov(
            vec![pi.to_vec(), pi.to_vec()],
            vec![0.0, 1.0],
        )
        .unwrap();
        let f = Observable::on_markov_states("ind", &spec, vec![0.0, 1.0]).unwrap();
        let (sample, diag) =
            fidi_experiment(&[f], &spec, 4096, 2000, 2024, 2).unwrap();
        assert_eq!(sample.rows.len(), 2000);
        let ratio = diag.variance_ratios[0].unwrap();
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
    }

    #[test]
    fn dependent_variance_matches_longrun() {
        let spec = two_state_spec();
        let f = Observable::on_markov_states("ind", &spec, vec![0.0, 1.0]).unwrap();
        let (_, diag) = fidi_experiment(&[f], &spec, 4096, 2000, 7, 2).unwrap();
        let gamma = diag.gamma.as_ref().unwrap()[0][0];
        let expect = match &spec {
            ProcessSpec::FiniteMarkov { transition, .. } => {
                longrun_markov(transition, &[0.0, 1.0]).unwrap()
            }
            _ => unreachable!(),
        };
        assert!((gamma - expect).abs() < 1e-12);
        let ratio = diag.variance_ratios[0].unwrap();
        assert!((ratio - 1.0).abs() < 0.1, "ratio {ratio}");
        // Normality along the way.
        let (_, p) = diag.ks[0].unwrap();
        assert!(p > 0.01, "KS p-value {p}");
    }

    #[test]
    fn constant_column_is_degenerate() {
        let spec = two_state_spec();
        let c = Observable::on_markov_states("const", &spec, vec![1.0, 1.0]).unwrap();
        let (sample, diag) = fidi_experiment(&[c], &spec, 128, 50, 1, 1).unwrap();
        assert!(sample.rows.iter().all(|r| r[0].abs() < 1e-12));
        assert!(diag.gamma.as_ref().unwrap()[0][0].abs() < 1e-12);
        assert!(diag.variance_ratios[0].is_none());
        assert!(diag.ks[0].is_none());
    }

    #[test]
    fn orthogonal_functions_have_small_cross_covariance() {
        // iid uniform 4-state chain with two orthogonal contrasts.
        let pi = vec![0.25; 4];
        let spec = ProcessSpec::finite_markov(
            vec![pi.clone(), pi.clone(), pi.clone(), pi.clone()],
            vec![0.0, 1.0, 2.0, 3.0],
        )
        .unwrap();
        let f = Observable::on_markov_states("a", &spec, vec![1.0, 1.0, -1.0, -1.0]).unwrap();
        let g = Observable::on_markov_states("b", &spec, vec![1.0, -1.0, 1.0, -1.0]).unwrap();
        let (_, diag) = fidi_experiment(&[f, g], &spec, 1024, 2000, 99, 2).unwrap();
        // Exact gamma cross term is zero; sample within 3 MC s.e.
        assert!(diag.gamma.as_ref().unwrap()[0][1].abs() < 1e-12);
        let se = 1.0 / (2000f64).sqrt() * 3.0;
        assert!(diag.sample_cov[0][1].abs() < 3.0 * se);
    }

    #[test]
    fn fidi_deterministic_across_threads() {
        let spec = two_state_spec();
        let f = Observable::on_markov_states("ind", &spec, vec![0.0, 1.0]).unwrap();
        let (s1, _) = fidi_experiment(std::slice::from_ref(&f), &spec, 256, 64, 5, 1).unwrap();
        let (s4, _) = fidi_experiment(&[f], &spec, 256, 64, 5, 4).unwrap();
        for (a, b) in s1.rows.iter().zip(&s4.rows) {
            assert_eq!(a[0].to_bits(), b[0].to_bits());
        }
    }

    #[test]
    fn probe_zero_for_equal_pairs_and_huge_eps() {
        let spec = two_state_spec();
        let f = Observable::on_markov_states("f", &spec, vec![0.0, 1.0]).unwrap();
        let pairs = vec![(f.clone(), f.clone())];
        let res = equicontinuity_probe(&pairs, &spec, 512, 0.1, 200, 11, 2).unwrap();
        assert_eq!(res.exceed_probability, 0.0);
        // Distinct pair, absurdly large threshold.
        let g = Observable::on_markov_states("g", &spec, vec![0.0, 1.1]).unwrap();
        let pairs = vec![(f, g)];
        let res = equicontinuity_probe(&pairs, &spec, 512, 1e6, 200, 11, 1).unwrap();
        assert_eq!(res.exceed_probability, 0.0);
    }

    #[test]
    fn probe_monotone_in_pair_gap() {
        // Halving the pair gap should not increase the exceedance beyond
        // Monte Carlo noise.
        let spec = two_state_spec();
        let f = Observable::on_markov_states("f", &spec, vec![0.0, 1.0]).unwrap();
        let g_far = Observable::on_markov_states("g1", &spec, vec![0.0, 1.4]).unwrap();
        let g_near = Observable::on_markov_states("g2", &spec, vec![0.0, 1.2]).unwrap();
        let eps = 0.25;
        let far = equicontinuity_probe(
            &[(f.clone(), g_far)], &spec, 4096, eps, 400, 21, 2,
        )
        .unwrap();
        let near = equicontinuity_probe(
            &[(f, g_near)], &spec, 4096, eps, 400, 21, 2,
        )
        .unwrap();
        let band = 2.0 * (far.standard_error + near.standard_error);
        assert!(near.exceed_probability <= far.exceed_probability + band);
    }
}
