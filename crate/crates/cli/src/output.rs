//! Result emission: CSV for tables, JSON for single reports. File names
//! embed the experiment kind and the master seed unless an explicit path
//! is given. Formatting is deterministic, so identical configurations
//! yield byte-identical files.

use betamix::eprocess::FidiSample;
use betamix::experiments::{CltResult, PowerResult};
use std::io::Write;
use std::path::{Path, PathBuf};

pub fn default_path(kind: &str, seed: u64, ext: &str) -> PathBuf {
    PathBuf::from(format!("{kind}_{seed}.{ext}"))
}

pub fn write_text(path: &Path, text: &str) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())
}

pub fn power_csv(res: &PowerResult) -> String {
    let mut out = String::from(
        "c,reps,z_rate,z_se,h1_rate,h1_se,regression_rate,regression_se,\
         lambda_z,lambda_regression,predicted_z,predicted_regression\n",
    );
    for cell in &res.cells {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            cell.c,
            cell.z.reps,
            cell.z.rate,
            cell.z.se,
            cell.h1.rate,
            cell.h1.se,
            cell.regression.rate,
            cell.regression.se,
            cell.lambda_z,
            cell.lambda_regression,
            cell.predicted_z,
            cell.predicted_regression,
        ));
    }
    out
}

pub fn clt_csv(res: &CltResult) -> String {
    let mut out = String::from("label,sample_var,gamma,variance_ratio,ks_stat,ks_p\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for row in &res.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            row.label,
            row.sample_var,
            row.gamma,
            opt(row.variance_ratio),
            opt(row.ks_stat),
            opt(row.ks_p),
        ));
    }
    out
}

pub fn fidi_csv(sample: &FidiSample) -> String {
    let mut out = String::from("rep");
    for label in &sample.labels {
        out.push(',');
        out.push_str(label);
    }
    out.push('\n');
    for (r, row) in sample.rows.iter().enumerate() {
        out.push_str(&r.to_string());
        for v in row {
            out.push(',');
            out.push_str(&v.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn entropy_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("delta,count,log_count\n");
    for &(delta, log_count) in points {
        out.push_str(&format!("{},{},{}\n", delta, log_count.exp(), log_count));
    }
    out
}

pub fn path_csv(values: &[f64]) -> String {
    let mut out = String::from("t,x\n");
    for (t, v) in values.iter().enumerate() {
        out.push_str(&format!("{},{}\n", t + 1, v));
    }
    out
}
