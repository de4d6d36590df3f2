//! The dependence-adjusted norm and its supporting objects.
//!
//! For a nonincreasing quantile function `Q` of `|f(x)|` and mixing
//! coefficients `beta_m`, the norm is
//!
//! ```text
//! ||f|| = sqrt( integral_0^1 beta^{-1}(u) Q(u)^2 du )
//!       = sqrt( sum_m integral_0^{beta_m} Q(u)^2 du )
//! ```
//!
//! where `beta^{-1}(u)` counts the coefficients exceeding `u`. The layer
//! sum on the right is how the norm is evaluated here: it is exact for
//! step quantiles and needs no discontinuity handling. The module also
//! provides the dual supremum representation over coupled integer-valued
//! variables (a cross-check on finite chains), weighted moment norms, a
//! summability-plus-moment sufficiency test, and long-run variances
//! (exact for finite chains, Bartlett estimates on sample paths).

use crate::error::{CoreError, Result};
use crate::law::Law;
use crate::linalg::{solve_square, Mat};
use crate::mixing::{stationary_distribution, summability_report, MixingSequence, ProcessSpec};
use crate::quad::integrate_to_zero;
use std::sync::Arc;

/// Nonincreasing quantile function of `|f(X)|`.
#[derive(Clone)]
pub enum QuantileFn {
    Step(StepQuantile),
    /// Closure `u -> Q(u)` on (0,1), nonincreasing and nonnegative.
    Analytic(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

/// Step quantile: `Q(u) = values[j]` for `u` in `[cum[j-1], cum[j])`,
/// with `values` strictly decreasing and `cum` the running tail masses.
#[derive(Debug, Clone)]
pub struct StepQuantile {
    values: Vec<f64>,
    cum: Vec<f64>,
}

impl StepQuantile {
    fn from_atoms(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(CoreError::InvalidArgument("empty support".into()));
        }
        atoms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let mut values = Vec::new();
        let mut cum = Vec::new();
        let mut acc = 0.0;
        for (v, p) in atoms {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            if let Some(last) = values.last() {
                if (v - last as &f64).abs() < 1e-15 {
                    *cum.last_mut().unwrap() = acc;
                    continue;
                }
            }
            values.push(v);
            cum.push(acc);
        }
        Ok(StepQuantile { values, cum })
    }

    pub fn eval(&self, u: f64) -> f64 {
        for (v, c) in self.values.iter().zip(&self.cum) {
            if u < *c {
                return *v;
            }
        }
        0.0
    }

    /// Exact `integral_0^b Q(u)^2 du`.
    fn integral_sq(&self, b: f64) -> f64 {
        let mut total = 0.0;
        let mut lo = 0.0;
        for (v, c) in self.values.iter().zip(&self.cum) {
            if lo >= b {
                break;
            }
            let hi = c.min(b);
            total += v * v * (hi - lo);
            lo = *c;
        }
        total
    }

    fn max_value(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }
}

impl QuantileFn {
    /// Quantile of `|f(X)|` under a finite-support law: exact.
    pub fn from_finite_law(law: &Law, f: impl Fn(f64) -> f64) -> Result<Self> {
        match law {
            Law::Finite { points, probs } => {
                let atoms = points
                    .iter()
                    .zip(probs)
                    .map(|(&x, &p)| (f(x).abs(), p))
                    .collect();
                Ok(QuantileFn::Step(StepQuantile::from_atoms(atoms)?))
            }
            _ => Err(CoreError::Unsupported(
                "from_finite_law needs a finite-support law".into(),
            )),
        }
    }

    /// Empirical quantile of `|f|` over a sample.
    pub fn from_sample(xs: &[f64], f: impl Fn(f64) -> f64) -> Result<Self> {
        let law = Law::from_sample(xs)?;
        QuantileFn::from_finite_law(&law, f)
    }

    /// Directly supplied analytic quantile `u -> Q(u)`.
    pub fn analytic(q: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        QuantileFn::Analytic(Arc::new(q))
    }

    /// Quantile built by inverting an analytic tail `t -> P(|f(X)| > t)`:
    /// `Q(u) = inf { t : tail(t) <= u }`, found by doubling and bisection.
    pub fn from_tail(tail: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        let invert = move |u: f64| -> f64 {
            if tail(0.0) <= u {
                return 0.0;
            }
            let mut hi = 1.0;
            let mut guard = 0;
            while tail(hi) > u {
                hi *= 2.0;
                guard += 1;
                if guard > 1020 {
                    return f64::INFINITY;
                }
            }
            let mut lo = if hi > 1.0 { hi / 2.0 } else { 0.0 };
            for _ in 0..90 {
                let mid = 0.5 * (lo + hi);
                if tail(mid) > u {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        QuantileFn::Analytic(Arc::new(invert))
    }

    /// Constant function `|c|`.
    pub fn constant(c: f64) -> Self {
        QuantileFn::Step(StepQuantile { values: vec![c.abs()], cum: vec![1.0] })
    }

    pub fn eval(&self, u: f64) -> f64 {
        match self {
            QuantileFn::Step(s) => s.eval(u),
            QuantileFn::Analytic(q) => q(u),
        }
    }

    /// `integral_0^b Q^2 du`; `None` signals divergence. Step quantiles
    /// integrate exactly, analytic ones adaptively to ~1e-10 absolute.
    pub fn integral_sq(&self, b: f64) -> Option<f64> {
        if b <= 0.0 {
            return Some(0.0);
        }
        match self {
            QuantileFn::Step(s) => Some(s.integral_sq(b)),
            QuantileFn::Analytic(q) => {
                let q = q.clone();
                integrate_to_zero(&move |u: f64| q(u) * q(u), b, 1e-10)
            }
        }
    }
}

/// The nonincreasing integer step function `u -> #{m : beta_m > u}`.
///
/// Stored breakpoints cover the explicit head of the sequence; a geometric
/// tail is counted in closed form inside [`StepFn::eval`].
#[derive(Debug, Clone)]
pub struct StepFn {
    seq: MixingSequence,
}

impl StepFn {
    pub fn eval(&self, u: f64) -> u64 {
        if u < 0.0 {
            return u64::MAX;
        }
        let values = self.seq.values();
        let mut count = values.iter().filter(|&&b| b > u).count() as u64;
        if let crate::mixing::TailModel::Geometric { rate } = self.seq.tail() {
            let last = *values.last().unwrap();
            if u > 0.0 && last * rate > u {
                // beta_M rate^j > u  <=>  j < ln(u / beta_M) / ln(rate)
                let bound = (u / last).ln() / rate.ln();
                let extra = bound.ceil() - 1.0;
                if extra > 0.0 {
                    count += extra as u64;
                }
            } else if u == 0.0 && last > 0.0 {
                return u64::MAX;
            }
        }
        count
    }

    /// Breakpoints `(u, level)` of the stored head: the level on
    /// `[beta_{m+1}, beta_m)` is `m + 1`.
    pub fn breakpoints(&self) -> Vec<(f64, u64)> {
        let values = self.seq.values();
        let mut out = Vec::new();
        for (m, &b) in values.iter().enumerate() {
            if b > 0.0 {
                out.push((b, m as u64 + 1));
            }
        }
        out
    }
}

/// The inverse mixing-rate function `beta^{-1}`.
pub fn beta_inverse(seq: &MixingSequence) -> StepFn {
    StepFn { seq: seq.clone() }
}

/// Convergence status of a norm evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormStatus {
    /// Full sum: geometric tail folded in, or the sequence hits zero.
    Exact,
    /// No tail model and the stored head ends above zero: lower bound.
    TruncatedLowerBound,
    /// A layer integral diverges; the value is reported as infinity.
    Divergent,
}

#[derive(Debug, Clone, Copy)]
pub struct NormResult {
    pub value: f64,
    pub status: NormStatus,
}

impl NormResult {
    pub fn is_finite(&self) -> bool {
        self.status != NormStatus::Divergent && self.value.is_finite()
    }
}

/// The mixing norm through the layer-sum identity
/// `sum_m integral_0^{beta_m} Q(u)^2 du`.
pub fn beta_norm(q: &QuantileFn, seq: &MixingSequence) -> NormResult {
    let mut total = 0.0;
    // Stored head.
    for &b in seq.values() {
        match q.integral_sq(b) {
            Some(v) => total += v,
            None => return NormResult { value: f64::INFINITY, status: NormStatus::Divergent },
        }
    }
    let mut status = if seq.certified_summable() {
        NormStatus::Exact
    } else {
        NormStatus::TruncatedLowerBound
    };
    if let crate::mixing::TailModel::Geometric { rate } = seq.tail() {
        let last = *seq.values().last().unwrap();
        match q {
            QuantileFn::Step(s) => {
                // Bounded quantile: remaining layers are below
                // max^2 * beta_m, so the geometric remainder is summed
                // until it falls under resolution and bounded in closed
                // form at the cutoff.
                let cap = s.max_value() * s.max_value();
                let mut b = last * rate;
                let mut guard = 0usize;
                while cap * b / (1.0 - rate) > 1e-16 * total.max(1e-300) && guard < 4_000_000 {
                    total += s.integral_sq(b);
                    b *= rate;
                    guard += 1;
                }
            }
            QuantileFn::Analytic(_) => {
                let mut b = last * rate;
                let mut prev = f64::INFINITY;
                let mut guard = 0usize;
                loop {
                    let term = match q.integral_sq(b) {
                        Some(v) => v,
                        None => {
                            return NormResult {
                                value: f64::INFINITY,
                                status: NormStatus::Divergent,
                            }
                        }
                    };
                    total += term;
                    let ratio = if prev > 0.0 { term / prev } else { 0.0 };
                    if term <= 0.0
                        || (ratio < 0.999 && term * ratio / (1.0 - ratio) < 1e-13 * total)
                    {
                        break;
                    }
                    guard += 1;
                    if guard > 200_000 {
                        status = NormStatus::TruncatedLowerBound;
                        break;
                    }
                    prev = term;
                    b *= rate;
                }
            }
        }
    }
    if !total.is_finite() {
        return NormResult { value: f64::INFINITY, status: NormStatus::Divergent };
    }
    NormResult { value: total.sqrt(), status }
}

/// Plain `L_2(P)` norm, the single-layer `beta = (1, 0, ...)` case.
pub fn l2_norm(q: &QuantileFn) -> NormResult {
    beta_norm(q, &MixingSequence::iid())
}

#[derive(Debug, Clone, Copy)]
pub struct SupCheckReport {
    pub norm: f64,
    pub sup_value: f64,
}

/// Dual check of the norm on a finite chain: the supremum representation
/// `sup_b sqrt(E[b f(X)^2])` over integer-valued `b` with tail masses
/// `P(b > m) = beta_m`, attained by the comonotone coupling of `b` with
/// `f(X)^2` (Hardy-Littlewood). Evaluated by pairing the sorted atoms.
pub fn beta_norm_sup_check(
    spec: &ProcessSpec,
    f: &[f64],
    seq: &MixingSequence,
) -> Result<SupCheckReport> {
    let (transition, states) = match spec {
        ProcessSpec::FiniteMarkov { transition, states } => (transition, states),
        _ => {
            return Err(CoreError::Unsupported(
                "sup representation check needs a finite-state chain".into(),
            ))
        }
    };
    if f.len() != states.len() {
        return Err(CoreError::InvalidArgument("f must assign a value per state".into()));
    }
    let pi = stationary_distribution(transition)?;
    let law = Law::finite(states.clone(), pi.clone())?;
    let idx: std::collections::HashMap<u64, usize> =
        states.iter().enumerate().map(|(i, &s)| (s.to_bits(), i)).collect();
    let fv = f.to_vec();
    let q = QuantileFn::from_finite_law(&law, move |x| fv[idx[&x.to_bits()]])?;
    let norm = beta_norm(&q, seq);

    // Atoms of b: P(b = m) = beta_{m-1} - beta_m, descending in m.
    let mut b_atoms: Vec<(f64, f64)> = Vec::new();
    let mut m = 0usize;
    loop {
        let b_m = seq.beta(m);
        let b_next = seq.beta(m + 1);
        let mass = b_m - b_next;
        if mass > 0.0 {
            b_atoms.push(((m + 1) as f64, mass));
        }
        m += 1;
        if b_next < 1e-16 || m > 5_000_000 {
            break;
        }
    }
    // Account for beta_0 < 1: P(b = 0) takes the leftover mass.
    let assigned: f64 = b_atoms.iter().map(|a| a.1).sum();
    if assigned < 1.0 - 1e-12 {
        b_atoms.push((0.0, 1.0 - assigned));
    }
    b_atoms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let mut fsq_atoms: Vec<(f64, f64)> = pi
        .iter()
        .zip(f)
        .map(|(&p, &v)| (v * v, p))
        .collect();
    fsq_atoms.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    // Comonotone pairing: consume mass from the top of both lists.
    let mut e = 0.0;
    let (mut i, mut j) = (0usize, 0usize);
    let mut rem_b = b_atoms.first().map(|a| a.1).unwrap_or(0.0);
    let mut rem_f = fsq_atoms.first().map(|a| a.1).unwrap_or(0.0);
    while i < b_atoms.len() && j < fsq_atoms.len() {
        let take = rem_b.min(rem_f);
        e += take * b_atoms[i].0 * fsq_atoms[j].0;
        rem_b -= take;
        rem_f -= take;
        if rem_b <= 1e-15 {
            i += 1;
            if i < b_atoms.len() {
                rem_b = b_atoms[i].1;
            }
        }
        if rem_f <= 1e-15 {
            j += 1;
            if j < fsq_atoms.len() {
                rem_f = fsq_atoms[j].1;
            }
        }
    }
    Ok(SupCheckReport { norm: norm.value, sup_value: e.max(0.0).sqrt() })
}

#[derive(Debug, Clone, Copy)]
pub struct MomentNorm {
    pub value: f64,
    pub finite: bool,
}

/// Weighted moment norm `(E[<X>^{r (gamma - theta)}])^{1/(2r)}` for the
/// weight exponent `(gamma - theta)/2`.
pub fn weighted_moment_norm(law: &Law, exponent: f64, r: f64) -> Result<MomentNorm> {
    if !(r > 1.0) {
        return Err(CoreError::InvalidArgument(format!("r must exceed 1, got {r}")));
    }
    let moment = law.angle_moment(2.0 * r * exponent);
    if !moment.is_finite() {
        return Ok(MomentNorm { value: f64::INFINITY, finite: false });
    }
    Ok(MomentNorm { value: moment.powf(1.0 / (2.0 * r)), finite: true })
}

#[derive(Debug, Clone)]
pub struct SufficiencyReport {
    pub sufficient: bool,
    pub weighted_sum: f64,
    pub weighted_certified: bool,
    pub moment_finite: bool,
}

/// Moment-route sufficiency for a finite mixing norm: a certified finite
/// lag-weighted sum `sum_m m^{1/(r-1)} beta_m` together with a finite
/// `L_{2r}(P)` moment bound. Truncated sequences are never certified.
pub fn mixing_norm_sufficiency(
    seq: &MixingSequence,
    r: f64,
    moment: f64,
) -> Result<SufficiencyReport> {
    let report = summability_report(seq, r)?;
    let moment_finite = moment.is_finite();
    Ok(SufficiencyReport {
        sufficient: report.weighted_certified() && moment_finite,
        weighted_sum: report.sum_weighted,
        weighted_certified: report.weighted_certified(),
        moment_finite,
    })
}

/// Exact long-run variance `sum_t Cov(f(x_0), f(x_t))` of a function on a
/// finite chain, through the fundamental-matrix solve.
pub fn longrun_markov(transition: &[Vec<f64>], f: &[f64]) -> Result<f64> {
    let pi = stationary_distribution(transition)?;
    let k = transition.len();
    if f.len() != k {
        return Err(CoreError::InvalidArgument("f must assign a value per state".into()));
    }
    let mean: f64 = pi.iter().zip(f).map(|(&p, &v)| p * v).sum();
    let g: Vec<f64> = f.iter().map(|&v| v - mean).collect();
    let var: f64 = pi.iter().zip(&g).map(|(&p, &v)| p * v * v).sum();
    // Solve (I - Pi + 1 pi') y = g; then sum_{t>=1} Cov_t = pi' diag(g) (y - g).
    let mut a = Mat::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = (if i == j { 1.0 } else { 0.0 }) - transition[i][j] + pi[j];
        }
    }
    let y = solve_square(&a, &g)?;
    let cross: f64 = (0..k).map(|i| pi[i] * g[i] * (y[i] - g[i])).sum();
    Ok(var + 2.0 * cross)
}

/// Bilinear long-run covariance by polarization of the quadratic form.
pub fn longrun_markov_cross(transition: &[Vec<f64>], f: &[f64], g: &[f64]) -> Result<f64> {
    let sum: Vec<f64> = f.iter().zip(g).map(|(a, b)| a + b).collect();
    let diff: Vec<f64> = f.iter().zip(g).map(|(a, b)| a - b).collect();
    Ok((longrun_markov(transition, &sum)? - longrun_markov(transition, &diff)?) / 4.0)
}

/// Truncated brute-force long-run variance used as an oracle in tests:
/// `Var + 2 sum_{t=1}^{t_max} Cov_t` with covariances from matrix powers.
pub fn longrun_markov_brute(transition: &[Vec<f64>], f: &[f64], t_max: usize) -> Result<f64> {
    let pi = stationary_distribution(transition)?;
    let k = transition.len();
    let mean: f64 = pi.iter().zip(f).map(|(&p, &v)| p * v).sum();
    let g: Vec<f64> = f.iter().map(|&v| v - mean).collect();
    let var: f64 = pi.iter().zip(&g).map(|(&p, &v)| p * v * v).sum();
    let base = Mat::from_rows(transition).expect("validated");
    let mut pw = Mat::identity(k);
    let mut acc = 0.0;
    for _ in 1..=t_max {
        pw = pw.matmul(&base);
        let mut cov = 0.0;
        for i in 0..k {
            let mut pg = 0.0;
            for j in 0..k {
                pg += pw[(i, j)] * g[j];
            }
            cov += pi[i] * g[i] * pg;
        }
        acc += cov;
    }
    Ok(var + 2.0 * acc)
}

/// Absolute-autocovariance sum `sum_t |Cov(f(x_0), f(x_t))|`, truncated
/// once the covariances fall below floating resolution.
pub fn abs_cov_sum_markov(transition: &[Vec<f64>], f: &[f64]) -> Result<f64> {
    let pi = stationary_distribution(transition)?;
    let k = transition.len();
    let mean: f64 = pi.iter().zip(f).map(|(&p, &v)| p * v).sum();
    let g: Vec<f64> = f.iter().map(|&v| v - mean).collect();
    let var: f64 = pi.iter().zip(&g).map(|(&p, &v)| p * v * v).sum();
    let base = Mat::from_rows(transition).expect("validated");
    let mut pw = Mat::identity(k);
    let mut acc = 0.0;
    for _ in 1..=100_000 {
        pw = pw.matmul(&base);
        let mut cov = 0.0;
        for i in 0..k {
            let mut pg = 0.0;
            for j in 0..k {
                pg += pw[(i, j)] * g[j];
            }
            cov += pi[i] * g[i] * pg;
        }
        acc += cov.abs();
        if cov.abs() < 1e-18 * var.max(1e-300) {
            break;
        }
    }
    Ok(var + 2.0 * acc)
}

/// Bartlett rule-of-thumb bandwidth `floor(4 (n/100)^{2/9})`.
pub fn default_bandwidth(n: usize) -> usize {
    (4.0 * (n as f64 / 100.0).powf(2.0 / 9.0)).floor() as usize
}

/// Bartlett-kernel HAC estimate of the long-run variance of a series.
/// Nonnegative by the positive semidefiniteness of the kernel.
pub fn bartlett_hac(xs: &[f64], bandwidth: usize) -> Result<f64> {
    let n = xs.len();
    if n == 0 {
        return Err(CoreError::InvalidArgument("empty series".into()));
    }
    if bandwidth >= n {
        return Err(CoreError::InvalidArgument(format!(
            "bandwidth {bandwidth} must be below the sample size {n}"
        )));
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    let gamma = |l: usize| -> f64 {
        (l..n).map(|t| (xs[t] - mean) * (xs[t - l] - mean)).sum::<f64>() / n as f64
    };
    let mut total = gamma(0);
    for l in 1..=bandwidth {
        let w = 1.0 - l as f64 / (bandwidth as f64 + 1.0);
        total += 2.0 * w * gamma(l);
    }
    Ok(total.max(0.0))
}

/// Analytic long-run variance of the identity map under a Gaussian AR(1):
/// `sigma^2 / (1-a)^2`, equivalently `Var(x) (1+a)/(1-a)`.
pub fn longrun_ar1_identity(a: f64, sigma: f64) -> f64 {
    sigma * sigma / ((1.0 - a) * (1.0 - a))
}
