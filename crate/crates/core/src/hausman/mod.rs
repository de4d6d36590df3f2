//! Hausman-type linearity test for the conditional mean.
//!
//! Two estimators of the linear coefficient are compared: the simple
//! regression slope (efficient under a linear conditional mean) and the
//! plug-in Z-estimator that subtracts a sieve fit of the nonlinear part
//! (consistent under nonlinear alternatives). Their scaled squared
//! difference is asymptotically chi-square with one degree of freedom
//! under the null, noncentral under local alternatives.

pub mod design;
pub mod dgp;

pub use design::{
    design_blocks, gamma_hat, h1_statistic, h2_regression_statistic, h2_statistic, ols_psi1,
    BasisFamily, DesignBlocks, SieveBasis, TimeSeriesSample,
};
pub use dgp::{
    noncentrality, simulate_local_alt, ErrorLaw, H0Shape, LocalAltDgp, Noncentrality,
    PopulationBlocks,
};

use crate::error::{CoreError, Result};
use crate::norm::default_bandwidth;
use serde::Serialize;

/// Full per-sample analysis output. Statistics that cannot be formed on a
/// given sample (zero residual variance, no identifying nonlinearity) are
/// reported as `None` with the reason in `degenerate`, never as NaN.
#[derive(Debug, Clone, Serialize)]
pub struct HausmanReport {
    pub psi1_ols: f64,
    pub psi1_series: f64,
    pub psi1_z: f64,
    pub psi1_kappa_z: f64,
    pub h1: Option<f64>,
    pub h2: Option<f64>,
    pub p1: Option<f64>,
    pub p2: Option<f64>,
    pub h2_regression: Option<f64>,
    pub p2_regression: Option<f64>,
    pub kappa: usize,
    pub sigma2: f64,
    pub bandwidth: usize,
    pub gamma_hat: [[f64; 2]; 2],
    pub d11: f64,
    pub s_nonlinear: f64,
    pub schur: f64,
    pub n: usize,
    pub degenerate: Option<String>,
}

impl HausmanReport {
    /// Flat JSON object with the stable field names.
    pub fn to_flat_json(&self) -> serde_json::Value {
        serde_json::json!({
            "psi1_ols": self.psi1_ols,
            "psi1_series": self.psi1_series,
            "psi1_z": self.psi1_z,
            "psi1_kappa_z": self.psi1_kappa_z,
            "H1": self.h1,
            "H2": self.h2,
            "p1": self.p1,
            "p2": self.p2,
            "kappa": self.kappa,
            "sigma2": self.sigma2,
            "bandwidth": self.bandwidth,
        })
    }
}

/// Options for [`analyze`].
#[derive(Debug, Clone, Copy, Default)]
pub struct AnalyzeOptions {
    /// Sieve term count; defaults to `max(3, ceil(2 n^{1/5}))`.
    pub kappa: Option<usize>,
    /// HAC bandwidth; defaults to `floor(4 (n/100)^{2/9})`.
    pub bandwidth: Option<usize>,
    /// Basis family; defaults to powers.
    pub hermite: bool,
}

/// Run the full analysis on one sample.
pub fn analyze(sample: &TimeSeriesSample, opts: &AnalyzeOptions) -> Result<HausmanReport> {
    let n = sample.len();
    let kappa = opts.kappa.unwrap_or_else(|| SieveBasis::default_kappa(n));
    let basis = if opts.hermite {
        SieveBasis::hermite(kappa)?
    } else {
        SieveBasis::power(kappa)?
    };
    let bandwidth = opts.bandwidth.unwrap_or_else(|| default_bandwidth(n));
    let blocks = design_blocks(sample, &basis)?;
    let gamma = gamma_hat(&blocks, bandwidth)?;
    let (z1, z2) = blocks.z_estimators();

    let mut degenerate: Option<String> = None;
    let mut note = |e: &CoreError| {
        let msg = e.to_string();
        match &mut degenerate {
            Some(prev) if !prev.contains(&msg) => {
                prev.push_str("; ");
                prev.push_str(&msg);
            }
            Some(_) => {}
            None => degenerate = Some(msg),
        }
    };
    let (h1, p1) = match h1_statistic(&blocks, &gamma) {
        Ok((h, p)) => (Some(h), Some(p)),
        Err(e) => {
            note(&e);
            (None, None)
        }
    };
    let (h2, p2) = match h2_statistic(&blocks) {
        Ok((h, p)) => (Some(h), Some(p)),
        Err(e) => {
            note(&e);
            (None, None)
        }
    };
    let (h2r, p2r) = match h2_regression_statistic(&blocks) {
        Ok((h, p)) => (Some(h), Some(p)),
        Err(e) => {
            note(&e);
            (None, None)
        }
    };
    Ok(HausmanReport {
        psi1_ols: blocks.psi1_ols(),
        psi1_series: blocks.psi1_series(),
        psi1_z: z1,
        psi1_kappa_z: z2,
        h1,
        h2,
        p1,
        p2,
        h2_regression: h2r,
        p2_regression: p2r,
        kappa,
        sigma2: blocks.sigma2,
        bandwidth,
        gamma_hat: gamma,
        d11: blocks.d11,
        s_nonlinear: blocks.s_nonlinear,
        schur: blocks.schur,
        n,
        degenerate,
    })
}

/// Parse a `y,x` CSV (header required, UTF-8, decimal point). Errors name
/// the offending line.
pub fn parse_yx_csv(text: &str) -> Result<TimeSeriesSample> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CoreError::Data("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').map(|c| c.trim()).collect();
    let y_idx = cols.iter().position(|&c| c == "y");
    let x_idx = cols.iter().position(|&c| c == "x");
    let (y_idx, x_idx) = match (y_idx, x_idx) {
        (Some(a), Some(b)) => (a, b),
        _ => {
            return Err(CoreError::Data(format!(
                "header must name columns y and x, got `{header}`"
            )))
        }
    };
    let mut y = Vec::new();
    let mut x = Vec::new();
    for (lineno, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(|c| c.trim()).collect();
        if fields.len() <= y_idx.max(x_idx) {
            return Err(CoreError::Data(format!(
                "line {}: expected at least {} fields, got {}",
                lineno + 1,
                y_idx.max(x_idx) + 1,
                fields.len()
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|_| {
                CoreError::Data(format!("line {}: cannot parse {what} value `{s}`", lineno + 1))
            })
        };
        y.push(parse(fields[y_idx], "y")?);
        x.push(parse(fields[x_idx], "x")?);
    }
    TimeSeriesSample::new(y, x)
}

/// Render a sample back to the `y,x` schema.
pub fn to_yx_csv(sample: &TimeSeriesSample) -> String {
    let mut out = String::from("y,x\n");
    for (y, x) in sample.y.iter().zip(&sample.x) {
        out.push_str(&format!("{y},{x}\n"));
    }
    out
}
