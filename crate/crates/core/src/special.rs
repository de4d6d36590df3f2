//! Special functions used by the distributional checks: log-gamma,
//! regularized incomplete gamma, error function, normal and chi-square
//! distribution functions, the noncentral chi-square CDF via its Poisson
//! mixture, and the Kolmogorov asymptotic survival function.

/// Natural log of the gamma function (Lanczos approximation, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Regularized lower incomplete gamma P(a, x) = gamma(a, x) / Gamma(a).
///
/// Series expansion for x < a + 1, continued fraction otherwise.
pub fn reg_lower_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if a <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cont_fraction(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let max_iter = 500;
    let eps = 1e-16;
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut term = sum;
    for _ in 0..max_iter {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * eps {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cont_fraction(a: f64, x: f64) -> f64 {
    let max_iter = 500;
    let eps = 1e-16;
    let tiny = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / tiny;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=max_iter {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < tiny {
            d = tiny;
        }
        c = b + an / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < eps {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Error function via the regularized incomplete gamma.
pub fn erf(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else if x > 0.0 {
        reg_lower_gamma(0.5, x * x)
    } else {
        -reg_lower_gamma(0.5, x * x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Standard normal quantile (Acklam's rational approximation plus one
/// Newton polish against `normal_cdf`).
pub fn normal_quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "normal_quantile needs p in (0,1)");
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.02425;
    let x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // One Newton step sharpens to ~1e-15.
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    if pdf > 0.0 {
        x - (normal_cdf(x) - p) / pdf
    } else {
        x
    }
}

/// Chi-square CDF with `k` degrees of freedom.
pub fn chi2_cdf(x: f64, k: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        reg_lower_gamma(0.5 * k, 0.5 * x)
    }
}

/// Chi-square survival function.
pub fn chi2_sf(x: f64, k: f64) -> f64 {
    1.0 - chi2_cdf(x, k)
}

/// Chi-square quantile by bisection with a Wilson-Hilferty start.
pub fn chi2_quantile(p: f64, k: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0);
    let z = normal_quantile(p);
    let wh = k * (1.0 - 2.0 / (9.0 * k) + z * (2.0 / (9.0 * k)).sqrt()).powi(3);
    let mut lo = 0.0;
    let mut hi = wh.max(1.0);
    while chi2_cdf(hi, k) < p {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chi2_cdf(mid, k) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 * hi.max(1.0) {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// CDF of the noncentral chi-square with one degree of freedom,
/// parameterized by the mean shift `lambda` of the underlying normal:
/// the variable is `(Z + lambda)^2`, with classical noncentrality
/// parameter `lambda^2`.
///
/// Computed through the Poisson mixture
/// `sum_j pois(j; lambda^2/2) * chi2_cdf(x, 1 + 2j)`, expanding around the
/// modal Poisson index and truncating at relative weight 1e-12.
pub fn noncentral_chi2_cdf_shift(x: f64, lambda: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let ncp = lambda * lambda;
    if ncp == 0.0 {
        return chi2_cdf(x, 1.0);
    }
    let half = 0.5 * ncp;
    let log_half = half.ln();
    let center = half.floor() as i64;
    let log_weight = |j: i64| -> f64 { -half + (j as f64) * log_half - ln_gamma(j as f64 + 1.0) };
    let term = |j: i64| -> f64 { log_weight(j).exp() * chi2_cdf(x, 1.0 + 2.0 * j as f64) };
    let mut total = term(center);
    let tol = 1e-12;
    // Expand downward and upward until both tails fall below tolerance.
    let mut j = center - 1;
    while j >= 0 {
        let t = term(j);
        total += t;
        if log_weight(j).exp() < tol * total.max(tol) {
            break;
        }
        j -= 1;
    }
    let mut j = center + 1;
    loop {
        let t = term(j);
        total += t;
        if log_weight(j).exp() < tol * total.max(tol) || j > center + 100_000 {
            break;
        }
        j += 1;
    }
    total.clamp(0.0, 1.0)
}

/// Power of a one-degree-of-freedom chi-square test with critical value
/// `crit` under mean shift `lambda`: `P((Z + lambda)^2 > crit)`.
pub fn noncentral_chi2_power(crit: f64, lambda: f64) -> f64 {
    let s = crit.sqrt();
    normal_cdf(-s - lambda) + 1.0 - normal_cdf(s - lambda)
}

/// Kolmogorov asymptotic survival function
/// `Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2)`.
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    let mut sum = 0.0;
    let mut sign = 1.0;
    for k in 1..200 {
        let term = (-2.0 * (k as f64) * (k as f64) * lambda * lambda).exp();
        sum += sign * term;
        if term < 1e-16 {
            break;
        }
        sign = -sign;
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

/// Two-sided Kolmogorov-Smirnov statistic of a sorted sample against a CDF.
pub fn ks_statistic(sorted: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x);
        let hi = (i as f64 + 1.0) / n - f;
        let lo = f - i as f64 / n;
        d = d.max(hi).max(lo);
    }
    d
}

/// Asymptotic KS p-value for a sample of size `n` with statistic `d`.
pub fn ks_pvalue(d: f64, n: usize) -> f64 {
    let n = n as f64;
    kolmogorov_sf((n.sqrt() + 0.12 + 0.11 / n.sqrt()) * d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!((ln_gamma(0.5) - std::f64::consts::PI.sqrt().ln()).abs() < 1e-13);
        assert!((ln_gamma(1.0)).abs() < 1e-13);
        assert!((ln_gamma(5.0) - 24.0f64.ln()).abs() < 1e-12);
        assert!((ln_gamma(10.5) - 13.940_625_219_403_763).abs() < 1e-10);
    }

    #[test]
    fn normal_cdf_known_values() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((normal_cdf(1.96) - 0.975_002_104_851_779_5).abs() < 1e-12);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile_roundtrip() {
        for &p in &[1e-8, 0.01, 0.3, 0.5, 0.9, 0.975, 1.0 - 1e-8] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() < 1e-12, "p = {p}");
        }
    }

    #[test]
    fn chi2_one_df_quantile() {
        // 95th percentile of chi-square with 1 df.
        let q = chi2_quantile(0.95, 1.0);
        assert!((q - 3.841_458_820_694_124).abs() < 1e-9);
        assert!((chi2_cdf(3.841_458_820_694_124, 1.0) - 0.95).abs() < 1e-12);
        // p-value at the critical value.
        assert!((chi2_sf(3.841_458_820_694_124, 1.0) - 0.05).abs() < 1e-12);
    }

    #[test]
    fn chi2_cdf_matches_erf_identity_for_one_df() {
        // chi2_1 CDF(x) = erf(sqrt(x/2))
        for &x in &[0.1, 0.5, 1.0, 2.0, 5.0, 10.0] {
            let lhs = chi2_cdf(x, 1.0);
            let rhs = erf((x / 2.0).sqrt());
            assert!((lhs - rhs).abs() < 1e-13);
        }
    }

    #[test]
    fn noncentral_cdf_matches_normal_identity() {
        // For one df, P((Z+lambda)^2 <= x) = Phi(sqrt(x)-lambda) - Phi(-sqrt(x)-lambda).
        for &lambda in &[0.0, 0.5, 1.0, 2.5, 4.0] {
            for &x in &[0.05, 0.5, 1.0, 3.0, 3.841, 10.0, 25.0] {
                let series = noncentral_chi2_cdf_shift(x, lambda);
                let s = x.sqrt();
                let exact = normal_cdf(s - lambda) - normal_cdf(-s - lambda);
                assert!(
                    (series - exact).abs() < 1e-10,
                    "lambda={lambda} x={x}: {series} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn noncentral_power_consistency() {
        let crit = chi2_quantile(0.95, 1.0);
        // Zero shift gives exactly the size.
        assert!((noncentral_chi2_power(crit, 0.0) - 0.05).abs() < 1e-10);
        // Power agrees with 1 - CDF.
        for &lambda in &[0.5, 1.5, 3.0] {
            let p = noncentral_chi2_power(crit, lambda);
            let q = 1.0 - noncentral_chi2_cdf_shift(crit, lambda);
            assert!((p - q).abs() < 1e-10);
        }
        // Monotone in the shift.
        let mut prev = 0.0;
        for i in 0..40 {
            let p = noncentral_chi2_power(crit, 0.1 * i as f64);
            assert!(p >= prev - 1e-12);
            prev = p;
        }
    }

    #[test]
    fn kolmogorov_sf_known_value() {
        // Q(1.36) is close to 0.05 (classical critical value table).
        assert!((kolmogorov_sf(1.36) - 0.049).abs() < 2e-3);
        assert!(kolmogorov_sf(0.0) == 1.0);
        assert!(kolmogorov_sf(3.0) < 1e-7);
    }

    #[test]
    fn ks_statistic_uniform_sample() {
        let sorted: Vec<f64> = (1..=100).map(|i| i as f64 / 101.0).collect();
        let d = ks_statistic(&sorted, |x| x.clamp(0.0, 1.0));
        assert!(d < 0.02);
    }
}
