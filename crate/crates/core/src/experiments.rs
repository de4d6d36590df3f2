//! Batch Monte Carlo experiments: size and power of the linearity test,
//! finite-dimensional CLT checks, equicontinuity probes, and entropy
//! tables. All replication loops follow the substream contract in
//! [`crate::seeding`], so results are byte-identical for a given master
//! seed regardless of thread count.

use crate::classes::{entropy_scaling, ClassParams, EntropyScaling, FamilyGenerator};
use crate::eprocess::{equicontinuity_probe, fidi_experiment, FidiSample, Observable, ProbeResult};
use crate::error::{CoreError, Result};
use crate::hausman::{
    analyze, noncentrality, simulate_local_alt, AnalyzeOptions, LocalAltDgp, Noncentrality,
};
use crate::law::Law;
use crate::mixing::{MixingSequence, ProcessSpec};
use crate::norm::{beta_norm, NormStatus, QuantileFn};
use crate::seeding::{run_replications, substream};
use crate::special::{chi2_cdf, chi2_quantile, ks_statistic};

fn check(cond: bool, field: &str, reason: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(CoreError::InvalidConfig { field: field.into(), reason: reason.into() })
    }
}

/// A Monte Carlo rate with its binomial standard error.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RatePoint {
    pub rate: f64,
    pub se: f64,
    pub reps: usize,
}

impl RatePoint {
    fn from_hits(hits: usize, reps: usize) -> Self {
        let rate = hits as f64 / reps as f64;
        RatePoint { rate, se: (rate * (1.0 - rate) / reps as f64).sqrt(), reps }
    }
}

#[derive(Debug, Clone)]
pub struct SizeConfig {
    pub dgp: LocalAltDgp,
    pub n: usize,
    pub reps: usize,
    pub kappa: usize,
    pub bandwidth: Option<usize>,
    pub hermite: bool,
    pub alpha: f64,
    pub seed: u64,
    pub threads: usize,
}

impl SizeConfig {
    fn validate(&self) -> Result<()> {
        check(self.reps >= 1, "replications", "must be >= 1")?;
        check(self.alpha > 0.0 && self.alpha < 1.0, "alpha", "must lie in (0,1)")?;
        check(self.n >= self.kappa + 2, "n", "must exceed kappa + 1")?;
        check(self.dgp.c == 0.0, "dgp.c", "size runs need the null (c = 0)")?;
        self.dgp.x_process.validate()
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct SizeResult {
    pub h1: RatePoint,
    pub h2: RatePoint,
    pub h2_regression: RatePoint,
    /// Kolmogorov-Smirnov distances of the statistic draws to the
    /// one-degree chi-square.
    pub ks_h1: f64,
    pub ks_h2: f64,
    /// Empirical 95th percentile of the generalized statistic (3.84 under
    /// a clean null).
    pub h1_q95: f64,
    pub critical_value: f64,
    pub alpha: f64,
    pub n: usize,
    pub reps_used: usize,
    pub reps_degenerate: usize,
    pub seed: u64,
    /// Wall-clock runtime; not serialized so emitted files stay
    /// byte-identical across runs and thread counts.
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Null rejection rates at level `alpha` plus distribution diagnostics.
pub fn run_size(config: &SizeConfig) -> Result<SizeResult> {
    config.validate()?;
    let started = std::time::Instant::now();
    let crit = chi2_quantile(1.0 - config.alpha, 1.0);
    let opts = AnalyzeOptions {
        kappa: Some(config.kappa),
        bandwidth: config.bandwidth,
        hermite: config.hermite,
    };
    let draws = run_replications(config.reps, config.threads, |r| {
        let sample = simulate_local_alt(&config.dgp, config.n, substream(config.seed, r as u64))
            .expect("validated dgp");
        analyze(&sample, &opts)
            .ok()
            .map(|rep| (rep.h1, rep.h2, rep.h2_regression))
    });
    let mut h1s = Vec::new();
    let mut h2s = Vec::new();
    let mut hregs = Vec::new();
    let mut degenerate = 0usize;
    for d in draws {
        match d {
            Some((Some(a), Some(b), Some(c))) => {
                h1s.push(a);
                h2s.push(b);
                hregs.push(c);
            }
            _ => degenerate += 1,
        }
    }
    let used = h1s.len();
    check(used > 0, "replications", "every replication degenerated")?;
    let rate = |xs: &[f64]| RatePoint::from_hits(xs.iter().filter(|&&v| v > crit).count(), used);
    let ks = |xs: &[f64]| {
        let mut sorted = xs.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ks_statistic(&sorted, |x| chi2_cdf(x, 1.0))
    };
    let h1_q95 = {
        let mut sorted = h1s.clone();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        sorted[((used as f64) * 0.95).floor() as usize % used]
    };
    Ok(SizeResult {
        h1: rate(&h1s),
        h2: rate(&h2s),
        h2_regression: rate(&hregs),
        ks_h1: ks(&h1s),
        ks_h2: ks(&h2s),
        h1_q95,
        critical_value: crit,
        alpha: config.alpha,
        n: config.n,
        reps_used: used,
        reps_degenerate: degenerate,
        seed: config.seed,
        runtime_s: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone)]
pub struct PowerConfig {
    /// Template mechanism; each cell overrides `c`.
    pub dgp: LocalAltDgp,
    pub c_grid: Vec<f64>,
    pub n: usize,
    pub reps: usize,
    pub kappa: usize,
    pub bandwidth: Option<usize>,
    pub hermite: bool,
    pub alpha: f64,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PowerCell {
    pub c: f64,
    /// Rejection rate of the plug-in (Z) statistic.
    pub z: RatePoint,
    /// Rejection rate of the regression-based statistic.
    pub regression: RatePoint,
    /// Rejection rate of the generalized HAC statistic.
    pub h1: RatePoint,
    pub lambda_z: f64,
    pub lambda_regression: f64,
    pub predicted_z: f64,
    pub predicted_regression: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct PowerResult {
    pub cells: Vec<PowerCell>,
    /// Set when the projected drift vanishes under the design marginal:
    /// the test has no local power against this direction.
    pub no_local_power: bool,
    pub critical_value: f64,
    pub alpha: f64,
    pub n: usize,
    pub seed: u64,
    /// Wall-clock runtime; not serialized so emitted files stay
    /// byte-identical across runs and thread counts.
    #[serde(skip)]
    pub runtime_s: f64,
}

/// Empirical power across the `c` grid with noncentrality predictions.
pub fn run_power(config: &PowerConfig) -> Result<PowerResult> {
    check(!config.c_grid.is_empty(), "c_grid", "must be nonempty")?;
    check(config.reps >= 1, "replications", "must be >= 1")?;
    check(config.alpha > 0.0 && config.alpha < 1.0, "alpha", "must lie in (0,1)")?;
    config.dgp.x_process.validate()?;
    let started = std::time::Instant::now();
    let crit = chi2_quantile(1.0 - config.alpha, 1.0);
    let basis = if config.hermite {
        crate::hausman::SieveBasis::hermite(config.kappa)?
    } else {
        crate::hausman::SieveBasis::power(config.kappa)?
    };
    let opts = AnalyzeOptions {
        kappa: Some(config.kappa),
        bandwidth: config.bandwidth,
        hermite: config.hermite,
    };
    let mut cells = Vec::with_capacity(config.c_grid.len());
    let mut warn = false;
    for (ci, &c) in config.c_grid.iter().enumerate() {
        let dgp = LocalAltDgp { c, ..config.dgp.clone() };
        let nc: Noncentrality = noncentrality(&dgp, &basis)?;
        warn |= nc.no_local_power && c != 0.0;
        // Independent substream block per cell.
        let cell_seed = substream(config.seed, 1_000_000 + ci as u64);
        let draws = run_replications(config.reps, config.threads, |r| {
            let sample =
                simulate_local_alt(&dgp, config.n, substream(cell_seed, r as u64))
                    .expect("validated dgp");
            analyze(&sample, &opts)
                .ok()
                .map(|rep| (rep.h1, rep.h2, rep.h2_regression))
        });
        let mut z_hits = 0usize;
        let mut reg_hits = 0usize;
        let mut h1_hits = 0usize;
        let mut used = 0usize;
        for d in draws.into_iter().flatten() {
            if let (Some(h1), Some(h2), Some(hr)) = d {
                used += 1;
                z_hits += usize::from(h2 > crit);
                reg_hits += usize::from(hr > crit);
                h1_hits += usize::from(h1 > crit);
            }
        }
        check(used > 0, "replications", "every replication degenerated")?;
        cells.push(PowerCell {
            c,
            z: RatePoint::from_hits(z_hits, used),
            regression: RatePoint::from_hits(reg_hits, used),
            h1: RatePoint::from_hits(h1_hits, used),
            lambda_z: nc.lambda2,
            lambda_regression: nc.lambda2_regression,
            predicted_z: Noncentrality::power(nc.lambda2, crit),
            predicted_regression: Noncentrality::power(nc.lambda2_regression, crit),
        });
    }
    Ok(PowerResult {
        cells,
        no_local_power: warn,
        critical_value: crit,
        alpha: config.alpha,
        n: config.n,
        seed: config.seed,
        runtime_s: started.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone)]
pub struct CltConfig {
    pub spec: ProcessSpec,
    /// One vector of state values per function (finite chains).
    pub functions: Vec<Vec<f64>>,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CltRow {
    pub label: String,
    pub sample_var: f64,
    pub gamma: f64,
    pub variance_ratio: Option<f64>,
    pub ks_stat: Option<f64>,
    pub ks_p: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct CltResult {
    pub rows: Vec<CltRow>,
    pub sample: FidiSample,
}

/// Finite-dimensional CLT check against the exact long-run covariance.
pub fn run_clt(config: &CltConfig) -> Result<CltResult> {
    check(!config.functions.is_empty(), "clt.functions", "must be nonempty")?;
    let funcs: Vec<Observable> = config
        .functions
        .iter()
        .enumerate()
        .map(|(i, vals)| Observable::on_markov_states(format!("f{i}"), &config.spec, vals.clone()))
        .collect::<Result<_>>()?;
    let (sample, diag) = fidi_experiment(
        &funcs,
        &config.spec,
        config.n,
        config.reps,
        config.seed,
        config.threads,
    )?;
    let gamma = diag.gamma.as_ref().expect("finite chain has exact gamma");
    let rows = funcs
        .iter()
        .enumerate()
        .map(|(j, f)| CltRow {
            label: f.label.clone(),
            sample_var: diag.sample_cov[j][j],
            gamma: gamma[j][j],
            variance_ratio: diag.variance_ratios[j],
            ks_stat: diag.ks[j].map(|k| k.0),
            ks_p: diag.ks[j].map(|k| k.1),
        })
        .collect();
    Ok(CltResult { rows, sample })
}

#[derive(Debug, Clone)]
pub struct EquicontinuityConfig {
    pub spec: ProcessSpec,
    /// Family of state-value functions to pair up.
    pub family: Vec<Vec<f64>>,
    /// Mixing-norm budget for a pair to qualify.
    pub delta: f64,
    pub eps: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub threads: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct EquicontinuityResult {
    pub exceed_probability: f64,
    pub standard_error: f64,
    pub reps: usize,
    pub pairs_used: usize,
    pub pairs_rejected: usize,
    pub delta: f64,
    pub eps: f64,
}

/// Probe `P(max |vn(f) - vn(g)| > eps)` over all family pairs whose
/// mixing-norm distance is certified at most `delta` by the exact chain
/// coefficients.
pub fn run_equicontinuity(config: &EquicontinuityConfig) -> Result<EquicontinuityResult> {
    check(config.family.len() >= 2, "equicontinuity.family", "need at least two members")?;
    check(config.delta > 0.0, "equicontinuity.delta", "must be positive")?;
    let (transition, states) = match &config.spec {
        ProcessSpec::FiniteMarkov { transition, states } => (transition, states),
        _ => {
            return Err(CoreError::Unsupported(
                "equicontinuity certification needs a finite chain".into(),
            ))
        }
    };
    let pi = crate::mixing::stationary_distribution(transition)?;
    let law = Law::finite(states.clone(), pi)?;
    // Exact coefficients truncated far below resolution.
    let seq = config.spec.mixing_sequence(200)?;
    let mut pairs = Vec::new();
    let mut rejected = 0usize;
    for i in 0..config.family.len() {
        for j in i + 1..config.family.len() {
            let diff: Vec<f64> = config.family[i]
                .iter()
                .zip(&config.family[j])
                .map(|(a, b)| a - b)
                .collect();
            let idx: std::collections::HashMap<u64, usize> =
                states.iter().enumerate().map(|(k, &s)| (s.to_bits(), k)).collect();
            let d = diff.clone();
            let q = QuantileFn::from_finite_law(&law, move |x| d[idx[&x.to_bits()]])?;
            let norm = beta_norm(&q, &seq);
            if norm.status != NormStatus::Divergent && norm.value <= config.delta {
                let f = Observable::on_markov_states(
                    format!("f{i}"),
                    &config.spec,
                    config.family[i].clone(),
                )?;
                let g = Observable::on_markov_states(
                    format!("f{j}"),
                    &config.spec,
                    config.family[j].clone(),
                )?;
                pairs.push((f, g));
            } else {
                rejected += 1;
            }
        }
    }
    check(!pairs.is_empty(), "equicontinuity.delta", "no pair satisfies the norm budget")?;
    let probe: ProbeResult = equicontinuity_probe(
        &pairs,
        &config.spec,
        config.n,
        config.eps,
        config.reps,
        config.seed,
        config.threads,
    )?;
    Ok(EquicontinuityResult {
        exceed_probability: probe.exceed_probability,
        standard_error: probe.standard_error,
        reps: probe.reps,
        pairs_used: pairs.len(),
        pairs_rejected: rejected,
        delta: config.delta,
        eps: config.eps,
    })
}

#[derive(Debug, Clone)]
pub struct EntropyConfig {
    pub params: ClassParams,
    pub domain: (f64, f64),
    pub deltas: Vec<f64>,
    pub mixing: MixingSequence,
}

/// Entropy table for a smoothness ball.
pub fn run_entropy(config: &EntropyConfig) -> Result<EntropyScaling> {
    let gen = FamilyGenerator::HolderBall { domain: config.domain };
    entropy_scaling(&gen, &config.params, &config.deltas, &config.mixing, None)
}
