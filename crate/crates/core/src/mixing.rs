//! Stationary process generators and exact mixing coefficients.
//!
//! Finite-state Markov chains are the workhorse here: their absolute
//! regularity coefficient has the closed stationary total-variation form
//!
//! ```text
//! beta_m = sum_i pi_i * (1/2) sum_j |(Pi^m)_{ij} - pi_j|
//! ```
//!
//! which serves as an exact oracle for every norm and summability check.
//! Gaussian and nonlinear autoregressions are provided as generators with
//! documented geometric envelope mixing rates; their exact coefficients
//! are analytically awkward and never needed downstream, only summability.

use crate::error::{CoreError, Result};
use crate::linalg::{solve_square, Mat};
use crate::seeding::rng_from_seed;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Nonlinear autoregression maps. The state update is
/// `x_{t+1} = map(x_t) + sigma * eps_{t+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum NonlinearMap {
    /// `x -> a * tanh(x)`, a bounded contraction for |a| < 1.
    Tanh { a: f64 },
    /// `x -> a * sin(x)`, also a contraction for |a| < 1.
    Sine { a: f64 },
}

impl NonlinearMap {
    fn apply(self, x: f64) -> f64 {
        match self {
            NonlinearMap::Tanh { a } => a * x.tanh(),
            NonlinearMap::Sine { a } => a * x.sin(),
        }
    }

    fn contraction(self) -> f64 {
        match self {
            NonlinearMap::Tanh { a } | NonlinearMap::Sine { a } => a.abs(),
        }
    }
}

/// Generative model for a strictly stationary scalar process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ProcessSpec {
    /// Irreducible aperiodic finite-state chain started from its
    /// stationary law. `states[i]` is the real value attached to state i.
    FiniteMarkov {
        transition: Vec<Vec<f64>>,
        states: Vec<f64>,
    },
    /// `x_{t+1} = a x_t + sigma eps`, started from N(0, sigma^2/(1-a^2)).
    GaussianAr1 { a: f64, sigma: f64 },
    /// Nonlinear AR started by burn-in; stationarity is approximate up to
    /// the geometric forgetting of the initial condition.
    NonlinearAr { map: NonlinearMap, sigma: f64 },
}

const ROW_SUM_TOL: f64 = 1e-12;

impl ProcessSpec {
    /// Validate invariants; every constructor path goes through this.
    pub fn validate(&self) -> Result<()> {
        match self {
            ProcessSpec::FiniteMarkov { transition, states } => {
                validate_transition(transition)?;
                if states.len() != transition.len() {
                    return Err(CoreError::InvalidMarkov(format!(
                        "state values ({}) must match matrix order ({})",
                        states.len(),
                        transition.len()
                    )));
                }
                if states.iter().any(|s| !s.is_finite()) {
                    return Err(CoreError::InvalidMarkov("non-finite state value".into()));
                }
                Ok(())
            }
            ProcessSpec::GaussianAr1 { a, sigma } => {
                if a.abs() >= 1.0 {
                    return Err(CoreError::InvalidArgument(format!("|a| must be < 1, got {a}")));
                }
                if !(*sigma > 0.0) {
                    return Err(CoreError::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
                }
                Ok(())
            }
            ProcessSpec::NonlinearAr { map, sigma } => {
                if map.contraction() >= 1.0 {
                    return Err(CoreError::InvalidArgument(
                        "nonlinear map must be a contraction (|a| < 1)".into(),
                    ));
                }
                if !(*sigma > 0.0) {
                    return Err(CoreError::InvalidArgument(format!("sigma must be > 0, got {sigma}")));
                }
                Ok(())
            }
        }
    }

    pub fn finite_markov(transition: Vec<Vec<f64>>, states: Vec<f64>) -> Result<Self> {
        let spec = ProcessSpec::FiniteMarkov { transition, states };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gaussian_ar1(a: f64, sigma: f64) -> Result<Self> {
        let spec = ProcessSpec::GaussianAr1 { a, sigma };
        spec.validate()?;
        Ok(spec)
    }

    pub fn nonlinear_ar(map: NonlinearMap, sigma: f64) -> Result<Self> {
        let spec = ProcessSpec::NonlinearAr { map, sigma };
        spec.validate()?;
        Ok(spec)
    }

    /// Envelope mixing sequence for the autoregressive generators
    /// (geometric with the contraction rate), or the exact sequence for a
    /// finite chain truncated at `m_max`.
    pub fn mixing_sequence(&self, m_max: usize) -> Result<MixingSequence> {
        match self {
            ProcessSpec::FiniteMarkov { transition, .. } => {
                // Matrix powers bottom out at a floating noise floor near
                // 1e-16; coefficients at that level terminate the sequence
                // (the remainder sits beneath every tolerance downstream).
                let mut values = beta_sequence_markov(transition, m_max, 1e-14)?;
                if *values.last().unwrap() <= 1e-14 {
                    *values.last_mut().unwrap() = 0.0;
                }
                MixingSequence::new(values, TailModel::None)
            }
            ProcessSpec::GaussianAr1 { a, .. } => {
                Ok(MixingSequence::geometric_envelope(a.abs(), m_max))
            }
            ProcessSpec::NonlinearAr { map, .. } => {
                Ok(MixingSequence::geometric_envelope(map.contraction(), m_max))
            }
        }
    }
}

fn validate_transition(p: &[Vec<f64>]) -> Result<()> {
    let k = p.len();
    if k == 0 {
        return Err(CoreError::InvalidMarkov("empty transition matrix".into()));
    }
    for row in p {
        if row.len() != k {
            return Err(CoreError::InvalidMarkov("transition matrix must be square".into()));
        }
        if row.iter().any(|&x| x < 0.0 || !x.is_finite()) {
            return Err(CoreError::InvalidMarkov("negative or non-finite entry".into()));
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > ROW_SUM_TOL {
            return Err(CoreError::InvalidMarkov(format!("row sum {s} differs from 1")));
        }
    }
    // Primitivity check (irreducible and aperiodic): some power of the
    // matrix with the Wielandt exponent bound must be strictly positive.
    let exponent = (k - 1) * (k - 1) + 1;
    let mut reach = vec![vec![false; k]; k];
    for i in 0..k {
        for j in 0..k {
            reach[i][j] = p[i][j] > 0.0;
        }
    }
    let mut power = reach.clone();
    for _ in 1..exponent {
        if power.iter().all(|row| row.iter().all(|&x| x)) {
            return Ok(());
        }
        let mut next = vec![vec![false; k]; k];
        for i in 0..k {
            for l in 0..k {
                if power[i][l] {
                    for j in 0..k {
                        if reach[l][j] {
                            next[i][j] = true;
                        }
                    }
                }
            }
        }
        power = next;
    }
    if power.iter().all(|row| row.iter().all(|&x| x)) {
        Ok(())
    } else {
        Err(CoreError::InvalidMarkov("chain is not irreducible and aperiodic".into()))
    }
}

/// Stationary distribution of a validated transition matrix, solved from
/// `pi' Pi = pi'` with the normalization row substituted in.
pub fn stationary_distribution(transition: &[Vec<f64>]) -> Result<Vec<f64>> {
    let k = transition.len();
    let mut a = Mat::zeros(k, k);
    // (Pi' - I) pi = 0 with the last equation replaced by sum(pi) = 1.
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = transition[j][i] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..k {
        a[(k - 1, j)] = 1.0;
    }
    let mut b = vec![0.0; k];
    b[k - 1] = 1.0;
    let pi = solve_square(&a, &b)?;
    if pi.iter().any(|&x| x < -1e-10) {
        return Err(CoreError::InvalidMarkov("stationary solve produced negative mass".into()));
    }
    let total: f64 = pi.iter().sum();
    Ok(pi.into_iter().map(|x| (x / total).max(0.0)).collect())
}

fn matrix_power(p: &[Vec<f64>], m: usize) -> Mat {
    let k = p.len();
    let base = Mat::from_rows(p).expect("validated matrix");
    let mut acc = Mat::identity(k);
    let mut sq = base;
    let mut e = m;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.matmul(&sq);
        }
        sq = sq.matmul(&sq);
        e >>= 1;
    }
    acc
}

/// Exact absolute-regularity coefficient of a finite chain at lag `m`,
/// with the summation convention `beta_0 = 1`.
///
/// For `m >= 1` this is the stationary total-variation identity; for a
/// Markov chain the partition supremum in the definition is attained by
/// the single-coordinate sigma-fields, so the identity is exact.
pub fn exact_beta_markov(transition: &[Vec<f64>], m: usize) -> Result<f64> {
    validate_transition(transition)?;
    if m == 0 {
        return Ok(1.0);
    }
    let pi = stationary_distribution(transition)?;
    let pm = matrix_power(transition, m);
    Ok(beta_from_power(&pi, &pm).min(1.0))
}

fn beta_from_power(pi: &[f64], pm: &Mat) -> f64 {
    let k = pi.len();
    let mut beta = 0.0;
    for i in 0..k {
        let mut tv = 0.0;
        for j in 0..k {
            tv += (pm[(i, j)] - pi[j]).abs();
        }
        beta += pi[i] * 0.5 * tv;
    }
    beta
}

/// The whole sequence `beta_0..beta_{m_max}` with one validation pass and
/// one running matrix power, stopping early once the coefficients fall
/// below `floor` (the remaining entries are omitted).
pub fn beta_sequence_markov(
    transition: &[Vec<f64>],
    m_max: usize,
    floor: f64,
) -> Result<Vec<f64>> {
    validate_transition(transition)?;
    let pi = stationary_distribution(transition)?;
    let base = Mat::from_rows(transition).expect("validated");
    let mut values = vec![1.0];
    let mut power = Mat::identity(transition.len());
    let mut prev = 1.0f64;
    for _ in 1..=m_max {
        power = power.matmul(&base);
        // Monotone by theory; clamp floating noise at the tail.
        let b = beta_from_power(&pi, &power).min(1.0).min(prev);
        values.push(b);
        prev = b;
        if b < floor {
            break;
        }
    }
    Ok(values)
}

/// Lag-0 definitional coefficients plus the lag-m triple
/// `(alpha_m, beta_m, phi_m)`, computed by enumerating events over the
/// finite sigma-fields generated by single coordinates.
///
/// Unlike [`exact_beta_markov`], the `m = 0` entry uses the definitional
/// value `1 - sum_i pi_i^2` so the ordering `2 alpha <= beta <= phi <= 1`
/// holds exactly at every lag.
pub fn mixing_triplet_markov(transition: &[Vec<f64>], m: usize) -> Result<(f64, f64, f64)> {
    validate_transition(transition)?;
    let k = transition.len();
    if k > 20 {
        return Err(CoreError::Unsupported(
            "event enumeration limited to 20 states".into(),
        ));
    }
    let pi = stationary_distribution(transition)?;
    let pm = matrix_power(transition, m);
    // Joint law P(x_0 = i, x_m = j).
    let mut joint = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            joint[(i, j)] = pi[i] * pm[(i, j)];
        }
    }
    // beta: total variation between the joint law and the product law over
    // the finest partition (singletons attain the partition supremum).
    let mut beta = 0.0;
    for i in 0..k {
        for j in 0..k {
            beta += (joint[(i, j)] - pi[i] * pi[j]).abs();
        }
    }
    beta *= 0.5;

    // alpha: sup over event pairs A x D. For fixed D the optimal A keeps
    // the positive-signed states, so only the D subsets are enumerated.
    let subsets = 1usize << k;
    let mut alpha: f64 = 0.0;
    for d in 1..subsets - 1 {
        let mut pos = 0.0;
        for i in 0..k {
            let mut cond = 0.0;
            let mut pd = 0.0;
            for j in 0..k {
                if d & (1 << j) != 0 {
                    cond += pm[(i, j)];
                    pd += pi[j];
                }
            }
            let signed = pi[i] * (cond - pd);
            if signed > 0.0 {
                pos += signed;
            }
        }
        alpha = alpha.max(pos);
    }

    // phi: sup over conditioning events A of the total variation between
    // the conditional law of x_m given x_0 in A and the stationary law.
    let mut phi: f64 = 0.0;
    for a in 1..subsets - 1 {
        let mut pa = 0.0;
        let mut cond = vec![0.0; k];
        for i in 0..k {
            if a & (1 << i) != 0 {
                pa += pi[i];
                for j in 0..k {
                    cond[j] += pi[i] * pm[(i, j)];
                }
            }
        }
        if pa <= 0.0 {
            continue;
        }
        let tv: f64 = (0..k).map(|j| (cond[j] / pa - pi[j]).abs()).sum::<f64>() * 0.5;
        phi = phi.max(tv);
    }
    Ok((alpha.min(1.0), beta.min(1.0), phi.min(1.0)))
}

/// Tail behavior of a mixing sequence beyond its stored head.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum TailModel {
    /// Nothing is known past the stored values.
    None,
    /// `beta_{M+j} = beta_M * rate^j` for the last stored index M.
    Geometric { rate: f64 },
}

/// A nonincreasing sequence of absolute-regularity coefficients
/// `beta_0..beta_M` with an optional geometric tail model. Construction
/// goes through [`MixingSequence::new`] so the invariants always hold.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MixingSequence {
    values: Vec<f64>,
    tail: TailModel,
}

impl MixingSequence {
    pub fn new(values: Vec<f64>, tail: TailModel) -> Result<Self> {
        if values.is_empty() {
            return Err(CoreError::InvalidArgument("mixing sequence needs values".into()));
        }
        if values[0] > 1.0 + 1e-15 {
            return Err(CoreError::InvalidArgument("beta_0 must be <= 1".into()));
        }
        if values.iter().any(|&b| b < 0.0 || !b.is_finite()) {
            return Err(CoreError::InvalidArgument("coefficients must lie in [0,1]".into()));
        }
        if values.windows(2).any(|w| w[1] > w[0] + 1e-15) {
            return Err(CoreError::InvalidArgument("coefficients must be nonincreasing".into()));
        }
        if let TailModel::Geometric { rate } = tail {
            if !(rate > 0.0 && rate < 1.0) {
                return Err(CoreError::InvalidArgument(format!(
                    "geometric tail rate must lie in (0,1), got {rate}"
                )));
            }
        }
        Ok(MixingSequence { values, tail })
    }

    /// `beta_m = rate^m` for `m <= m_max` with a matching geometric tail.
    pub fn geometric_envelope(rate: f64, m_max: usize) -> Self {
        if rate <= 0.0 {
            // Independence: beta_m = 0 past lag zero.
            return MixingSequence { values: vec![1.0, 0.0], tail: TailModel::None };
        }
        let values = (0..=m_max.max(1)).map(|m| rate.powi(m as i32)).collect();
        MixingSequence { values, tail: TailModel::Geometric { rate } }
    }

    /// Sequence `(1, 0, 0, ...)`, the independent case.
    pub fn iid() -> Self {
        MixingSequence { values: vec![1.0, 0.0], tail: TailModel::None }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn tail(&self) -> TailModel {
        self.tail
    }

    /// `beta_m`, following the tail model beyond the stored head.
    pub fn beta(&self, m: usize) -> f64 {
        if m < self.values.len() {
            return self.values[m];
        }
        match self.tail {
            TailModel::None => 0.0,
            TailModel::Geometric { rate } => {
                let last = *self.values.last().unwrap();
                let extra = (m - (self.values.len() - 1)) as f64;
                last * rate.powf(extra)
            }
        }
    }

    /// Whether sums over the full sequence are certified finite: true with
    /// a geometric tail or when the stored head already reaches zero.
    pub fn certified_summable(&self) -> bool {
        matches!(self.tail, TailModel::Geometric { .. }) || *self.values.last().unwrap() == 0.0
    }
}

/// Convergence certainty for sums over a mixing sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SumStatus {
    /// The reported value is the full sum (geometric tail integrated in
    /// closed form, or the head terminates in zeros).
    CertifiedFinite,
    /// Only the stored head was summed; the value is a lower bound.
    Truncated,
}

/// Output of [`summability_report`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SummabilityReport {
    pub r: f64,
    /// `sum_m beta_m` including the closed-form geometric tail.
    pub sum_beta: f64,
    /// `sum_m m^{1/(r-1)} beta_m`.
    pub sum_weighted: f64,
    pub beta_status: SumStatus,
    pub weighted_status: SumStatus,
}

impl SummabilityReport {
    pub fn beta_certified(&self) -> bool {
        self.beta_status == SumStatus::CertifiedFinite
    }
    pub fn weighted_certified(&self) -> bool {
        self.weighted_status == SumStatus::CertifiedFinite
    }
}

/// Plain and lag-weighted summability of a mixing sequence.
///
/// The weighted sum uses exponent `1/(r-1)`; with a geometric tail it is
/// accumulated to machine precision (the geometric factor dominates any
/// polynomial weight), the plain sum has an exact closed form.
pub fn summability_report(seq: &MixingSequence, r: f64) -> Result<SummabilityReport> {
    if !(r > 1.0) {
        return Err(CoreError::InvalidArgument(format!("r must exceed 1, got {r}")));
    }
    let exponent = 1.0 / (r - 1.0);
    let weight = |m: usize| -> f64 {
        if m == 0 {
            0.0
        } else {
            (m as f64).powf(exponent)
        }
    };
    let mut sum_beta: f64 = self_sum(seq.values());
    let mut sum_weighted: f64 = seq
        .values()
        .iter()
        .enumerate()
        .map(|(m, &b)| weight(m) * b)
        .sum();
    let status = if seq.certified_summable() {
        SumStatus::CertifiedFinite
    } else {
        SumStatus::Truncated
    };
    if let TailModel::Geometric { rate } = seq.tail() {
        let last_idx = seq.values().len() - 1;
        let last = seq.values()[last_idx];
        // Closed form for the plain tail.
        sum_beta += last * rate / (1.0 - rate);
        // Weighted tail accumulated until the terms stop mattering.
        let mut m = last_idx + 1;
        let mut tail_term = last * rate;
        loop {
            let term = weight(m) * tail_term;
            sum_weighted += term;
            tail_term *= rate;
            m += 1;
            if term < 1e-16 * sum_weighted.max(1e-300) && (m as f64) > exponent / -rate.ln() + 1.0 {
                break;
            }
            if m > 10_000_000 {
                break;
            }
        }
    }
    Ok(SummabilityReport {
        r,
        sum_beta,
        sum_weighted,
        beta_status: status,
        weighted_status: status,
    })
}

fn self_sum(values: &[f64]) -> f64 {
    values.iter().sum()
}

/// A realized stationary trajectory.
#[derive(Debug, Clone)]
pub struct SamplePath {
    pub values: Vec<f64>,
    /// State indices for finite-chain paths.
    pub states: Option<Vec<usize>>,
    pub seed: u64,
    pub spec: ProcessSpec,
}

/// Draw a stationary path of length `n`. The initial state is drawn from
/// the exact stationary law for finite chains and the Gaussian AR(1); the
/// nonlinear AR forgets its start through a fixed burn-in. Identical
/// `(spec, n, seed)` reproduce the path bit-exactly.
pub fn simulate(spec: &ProcessSpec, n: usize, seed: u64) -> Result<SamplePath> {
    spec.validate()?;
    if n == 0 {
        return Err(CoreError::InvalidArgument("path length must be >= 1".into()));
    }
    let mut rng = rng_from_seed(seed);
    match spec {
        ProcessSpec::FiniteMarkov { transition, states } => {
            let pi = stationary_distribution(transition)?;
            let k = transition.len();
            let draw = |rng: &mut rand_chacha::ChaCha8Rng, probs: &[f64]| -> usize {
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                for (j, &p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        return j;
                    }
                }
                probs.len() - 1
            };
            let mut idx = vec![0usize; n];
            idx[0] = draw(&mut rng, &pi);
            for t in 1..n {
                idx[t] = draw(&mut rng, &transition[idx[t - 1]]);
            }
            let values = idx.iter().map(|&i| states[i]).collect();
            let _ = k;
            Ok(SamplePath { values, states: Some(idx), seed, spec: spec.clone() })
        }
        ProcessSpec::GaussianAr1 { a, sigma } => {
            let stat_sd = sigma / (1.0 - a * a).sqrt();
            let mut values = vec![0.0; n];
            let z0: f64 = StandardNormal.sample(&mut rng);
            values[0] = stat_sd * z0;
            for t in 1..n {
                let z: f64 = StandardNormal.sample(&mut rng);
                values[t] = a * values[t - 1] + sigma * z;
            }
            Ok(SamplePath { values, states: None, seed, spec: spec.clone() })
        }
        ProcessSpec::NonlinearAr { map, sigma } => {
            const BURN_IN: usize = 1024;
            let mut x = 0.0;
            for _ in 0..BURN_IN {
                let z: f64 = StandardNormal.sample(&mut rng);
                x = map.apply(x) + sigma * z;
            }
            let mut values = vec![0.0; n];
            values[0] = x;
            for t in 1..n {
                let z: f64 = StandardNormal.sample(&mut rng);
                values[t] = map.apply(values[t - 1]) + sigma * z;
            }
            Ok(SamplePath { values, states: None, seed, spec: spec.clone() })
        }
    }
}

/// Closed-form two-state coefficient `2 pi_0 pi_1 |lambda|^m` with
/// `lambda = 1 - p - q`; the oracle used to check the general routine.
pub fn two_state_beta(p: f64, q: f64, m: usize) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let pi0 = q / (p + q);
    let pi1 = p / (p + q);
    let lambda = 1.0 - p - q;
    2.0 * pi0 * pi1 * lambda.abs().powi(m as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::substream;
    use proptest::prelude::*;

    fn two_state(p: f64, q: f64) -> Vec<Vec<f64>> {
        vec![vec![1.0 - p, p], vec![q, 1.0 - q]]
    }

    #[test]
    fn rejects_bad_matrices() {
        // Not row-stochastic.
        assert!(ProcessSpec::finite_markov(vec![vec![0.5, 0.4], vec![0.5, 0.5]], vec![0.0, 1.0])
            .is_err());
        // Reducible.
        assert!(ProcessSpec::finite_markov(
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![0.0, 1.0]
        )
        .is_err());
        // Periodic.
        assert!(ProcessSpec::finite_markov(
            vec![vec![0.0, 1.0], vec![1.0, 0.0]],
            vec![0.0, 1.0]
        )
        .is_err());
        // AR(1) with unit root.
        assert!(ProcessSpec::gaussian_ar1(1.0, 1.0).is_err());
        assert!(ProcessSpec::gaussian_ar1(0.5, 0.0).is_err());
    }

    #[test]
    fn simulate_rejects_empty_path() {
        let spec = ProcessSpec::gaussian_ar1(0.5, 1.0).unwrap();
        assert!(simulate(&spec, 0, 1).is_err());
    }

    #[test]
    fn simulate_is_deterministic() {
        let spec = ProcessSpec::finite_markov(two_state(0.3, 0.2), vec![-1.0, 1.0]).unwrap();
        let a = simulate(&spec, 500, 42).unwrap();
        let b = simulate(&spec, 500, 42).unwrap();
        assert_eq!(a.values, b.values);
        let c = simulate(&spec, 500, 43).unwrap();
        assert_ne!(a.values, c.values);
    }

    #[test]
    fn iid_chain_transition_frequencies() {
        // Rows equal to pi make the chain iid; empirical frequencies of
        // each state converge to pi.
        let pi = [0.2, 0.5, 0.3];
        let rows = vec![pi.to_vec(), pi.to_vec(), pi.to_vec()];
        let spec = ProcessSpec::finite_markov(rows, vec![0.0, 1.0, 2.0]).unwrap();
        let n = 100_000;
        let path = simulate(&spec, n, 7).unwrap();
        let idx = path.states.unwrap();
        for (j, &pj) in pi.iter().enumerate() {
            let freq = idx.iter().filter(|&&i| i == j).count() as f64 / n as f64;
            let se = (pj * (1.0 - pj) / n as f64).sqrt();
            assert!((freq - pj).abs() < 4.0 * se, "state {j}: {freq} vs {pj}");
        }
    }

    fn lag1_autocorr(xs: &[f64]) -> f64 {
        let n = xs.len();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let cov: f64 = (1..n)
            .map(|t| (xs[t] - mean) * (xs[t - 1] - mean))
            .sum::<f64>()
            / n as f64;
        cov / var
    }

    #[test]
    fn ar1_autocorrelation_matches_coefficient() {
        let n = 100_000;
        let se = 3.0 / (n as f64).sqrt();
        // a = 0: independence.
        let path = simulate(&ProcessSpec::gaussian_ar1(0.0, 1.0).unwrap(), n, 11).unwrap();
        assert!(lag1_autocorr(&path.values).abs() < se);
        // a = 0.5: analytic AR(1) lag-1 autocorrelation equals a.
        let path = simulate(&ProcessSpec::gaussian_ar1(0.5, 1.0).unwrap(), n, 12).unwrap();
        assert!((lag1_autocorr(&path.values) - 0.5).abs() < se);
    }

    #[test]
    fn iid_chain_has_zero_beta() {
        let pi = [0.25, 0.75];
        let rows = vec![pi.to_vec(), pi.to_vec()];
        for m in 1..5 {
            let b = exact_beta_markov(&rows, m).unwrap();
            assert!(b.abs() < 1e-14);
        }
        let (a, b, f) = mixing_triplet_markov(&rows, 2).unwrap();
        assert!(a < 1e-14 && b < 1e-14 && f < 1e-14);
    }

    #[test]
    fn two_state_closed_form_examples() {
        // p = q = 0.25: beta_1 = 0.25, beta_3 = 0.0625.
        let rows = two_state(0.25, 0.25);
        assert!((exact_beta_markov(&rows, 1).unwrap() - 0.25).abs() < 1e-14);
        assert!((exact_beta_markov(&rows, 3).unwrap() - 0.0625).abs() < 1e-14);
        assert!((two_state_beta(0.25, 0.25, 3) - 0.0625).abs() < 1e-15);
        assert_eq!(exact_beta_markov(&rows, 0).unwrap(), 1.0);
    }

    #[test]
    fn triplet_ordering_two_state() {
        let rows = two_state(0.25, 0.25);
        let (a, b, f) = mixing_triplet_markov(&rows, 1).unwrap();
        assert!(2.0 * a <= b + 1e-14);
        assert!((b - 0.25).abs() < 1e-14);
        assert!(b <= f + 1e-14);
        assert!(f <= 1.0);
    }

    #[test]
    fn triplet_lag_zero_bounded() {
        let rows = two_state(0.3, 0.6);
        let (a, b, f) = mixing_triplet_markov(&rows, 0).unwrap();
        assert!(a <= 1.0 && b <= 1.0 && f <= 1.0);
        assert!(2.0 * a <= b + 1e-14 && b <= f + 1e-14);
        // Definitional lag-zero beta is 1 - sum pi^2.
        let pi = stationary_distribution(&rows).unwrap();
        let expect = 1.0 - pi.iter().map(|x| x * x).sum::<f64>();
        assert!((b - expect).abs() < 1e-12);
    }

    #[test]
    fn summability_examples() {
        // beta = (1, 0, 0, ...): sum 1, weighted 0.
        let seq = MixingSequence::iid();
        let rep = summability_report(&seq, 2.0).unwrap();
        assert!((rep.sum_beta - 1.0).abs() < 1e-15);
        assert!(rep.sum_weighted.abs() < 1e-15);
        assert!(rep.beta_certified());

        // Geometric 0.5: sum = 2 exactly.
        let seq = MixingSequence::geometric_envelope(0.5, 8);
        let rep = summability_report(&seq, 3.0).unwrap();
        assert!((rep.sum_beta - 2.0).abs() < 1e-12, "{}", rep.sum_beta);
        assert!(rep.beta_certified() && rep.weighted_certified());

        // Truncated head, r = 2: weighted sum 0*1 + 1*0.5 + 2*0.25 = 1.
        let seq = MixingSequence::new(vec![1.0, 0.5, 0.25], TailModel::None).unwrap();
        let rep = summability_report(&seq, 2.0).unwrap();
        assert!((rep.sum_weighted - 1.0).abs() < 1e-15);
        assert_eq!(rep.weighted_status, SumStatus::Truncated);

        assert!(summability_report(&seq, 1.0).is_err());
    }

    #[test]
    fn geometric_weighted_tail_matches_brute_force() {
        let seq = MixingSequence::geometric_envelope(0.8, 4);
        let r = 1.5; // exponent 2
        let rep = summability_report(&seq, r).unwrap();
        let brute: f64 = (0..4000).map(|m| (m as f64).powi(2) * seq.beta(m)).sum();
        assert!((rep.sum_weighted - brute).abs() < 1e-9 * brute);
    }

    #[test]
    fn nonlinear_ar_simulates_and_reports_envelope() {
        let spec =
            ProcessSpec::nonlinear_ar(NonlinearMap::Tanh { a: 0.6 }, 0.5).unwrap();
        let a = simulate(&spec, 2000, 13).unwrap();
        let b = simulate(&spec, 2000, 13).unwrap();
        assert_eq!(a.values, b.values);
        // The contraction keeps the path in a stationary band: the
        // marginal sd is below sigma / (1 - |a|).
        let mean = a.values.iter().sum::<f64>() / 2000.0;
        let sd = (a.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 2000.0).sqrt();
        assert!(mean.abs() < 0.2, "{mean}");
        assert!(sd < 0.5 / (1.0 - 0.6), "{sd}");
        // Envelope mixing sequence is geometric at the contraction rate.
        let seq = spec.mixing_sequence(5).unwrap();
        assert!((seq.beta(1) - 0.6).abs() < 1e-15);
        assert!((seq.beta(10) - 0.6f64.powi(10)).abs() < 1e-15);
        assert!(seq.certified_summable());
        // Expansive maps are rejected.
        assert!(ProcessSpec::nonlinear_ar(NonlinearMap::Sine { a: 1.0 }, 0.5).is_err());
    }

    #[test]
    fn substream_paths_differ_across_replications() {
        let spec = ProcessSpec::gaussian_ar1(0.5, 1.0).unwrap();
        let p0 = simulate(&spec, 10, substream(5, 0)).unwrap();
        let p1 = simulate(&spec, 10, substream(5, 1)).unwrap();
        assert_ne!(p0.values, p1.values);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Random 2-5 state chains: beta is nonincreasing in the lag and the
        /// triplet ordering holds at every lag.
        #[test]
        fn beta_nonincreasing_and_ordered(
            k in 2usize..=5,
            raw in prop::collection::vec(0.05f64..1.0, 25),
            m in 1usize..=10,
        ) {
            let mut rows = Vec::with_capacity(k);
            for i in 0..k {
                let slice = &raw[i * k..(i + 1) * k];
                let s: f64 = slice.iter().sum();
                rows.push(slice.iter().map(|x| x / s).collect::<Vec<_>>());
            }
            // Fix the final row so sums are exactly 1 within tolerance.
            let mut prev = exact_beta_markov(&rows, 0).unwrap();
            for lag in 1..=50usize {
                let b = exact_beta_markov(&rows, lag).unwrap();
                prop_assert!(b <= prev + 1e-12);
                prev = b;
            }
            let (a, b, f) = mixing_triplet_markov(&rows, m).unwrap();
            prop_assert!(2.0 * a <= b + 1e-12);
            prop_assert!(b <= f + 1e-12);
            prop_assert!(f <= 1.0 + 1e-12);
        }

        /// Two-state closed form equals the definition-based evaluation.
        #[test]
        fn two_state_closed_form_matches_definition(
            p in 0.02f64..0.98,
            q in 0.02f64..0.98,
            m in 0usize..=50,
        ) {
            let rows = vec![vec![1.0 - p, p], vec![q, 1.0 - q]];
            let direct = exact_beta_markov(&rows, m).unwrap();
            let closed = two_state_beta(p, q, m);
            prop_assert!((direct - closed).abs() < 1e-12);
        }
    }
}
