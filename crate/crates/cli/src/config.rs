//! Experiment configuration: a versioned TOML file with one table per
//! concern. Unknown fields are rejected so typos surface as schema errors
//! naming the field.

use betamix::classes::ClassParams;
use betamix::error::CoreError;
use betamix::experiments::{
    CltConfig, EntropyConfig, EquicontinuityConfig, PowerConfig, SizeConfig,
};
use betamix::hausman::{ErrorLaw, H0Shape, LocalAltDgp};
use betamix::mixing::{MixingSequence, ProcessSpec, TailModel};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub schema_version: u32,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_threads")]
    pub threads: usize,
    pub n: Option<usize>,
    pub replications: Option<usize>,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    pub kappa: Option<usize>,
    pub bandwidth: Option<usize>,
    #[serde(default)]
    pub basis: BasisName,
    pub process: Option<ProcessSpec>,
    pub dgp: Option<DgpSection>,
    pub clt: Option<CltSection>,
    pub equicontinuity: Option<EquicontinuitySection>,
    pub entropy: Option<EntropySection>,
    pub mixing: Option<MixingSection>,
    pub norm: Option<NormSection>,
}

fn default_seed() -> u64 {
    0
}
fn default_threads() -> usize {
    1
}
fn default_alpha() -> f64 {
    0.05
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BasisName {
    #[default]
    Power,
    Hermite,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DgpSection {
    #[serde(default)]
    pub psi0: f64,
    #[serde(default)]
    pub psi1: f64,
    #[serde(default = "default_h0")]
    pub h0: H0Shape,
    #[serde(default)]
    pub c: f64,
    pub c_grid: Option<Vec<f64>>,
    #[serde(default = "default_error_sd")]
    pub error_sd: f64,
}

fn default_h0() -> H0Shape {
    H0Shape::Tanh
}
fn default_error_sd() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltSection {
    pub functions: Vec<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquicontinuitySection {
    pub family: Vec<Vec<f64>>,
    pub delta: f64,
    pub eps: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntropySection {
    pub s: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "default_domain")]
    pub domain: (f64, f64),
    pub deltas: Vec<f64>,
    pub theta: Option<f64>,
}

fn default_radius() -> f64 {
    1.0
}
fn default_domain() -> (f64, f64) {
    (0.0, 1.0)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MixingSection {
    pub values: Vec<f64>,
    pub tail: Option<TailSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum TailSection {
    None,
    Geometric { rate: f64 },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSection {
    /// Constant function `c`.
    pub constant: Option<f64>,
    /// Function given by state values on the finite chain in `[process]`.
    pub state_values: Option<Vec<f64>>,
}

fn missing(field: &str) -> CoreError {
    CoreError::InvalidConfig { field: field.into(), reason: "required for this command".into() }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self, CoreError> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| CoreError::InvalidConfig {
            field: "config".into(),
            reason: e.to_string(),
        })?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CoreError::InvalidConfig {
                field: "schema_version".into(),
                reason: format!("expected {SCHEMA_VERSION}, got {}", cfg.schema_version),
            });
        }
        if let Some(p) = &cfg.process {
            p.validate()?;
        }
        Ok(cfg)
    }

    pub fn process(&self) -> Result<&ProcessSpec, CoreError> {
        self.process.as_ref().ok_or_else(|| missing("process"))
    }

    pub fn dgp(&self, force_null: bool) -> Result<LocalAltDgp, CoreError> {
        let section = self.dgp.as_ref().ok_or_else(|| missing("dgp"))?;
        let process = self.process()?.clone();
        let c = if force_null { 0.0 } else { section.c };
        LocalAltDgp::new(
            section.psi0,
            section.psi1,
            section.h0,
            c,
            process,
            ErrorLaw::Normal { sd: section.error_sd },
        )
    }

    pub fn mixing_sequence(&self) -> Result<MixingSequence, CoreError> {
        match &self.mixing {
            Some(section) => {
                let tail = match &section.tail {
                    None | Some(TailSection::None) => TailModel::None,
                    Some(TailSection::Geometric { rate }) => TailModel::Geometric { rate: *rate },
                };
                MixingSequence::new(section.values.clone(), tail)
            }
            None => match &self.process {
                Some(spec @ ProcessSpec::FiniteMarkov { .. }) => spec.mixing_sequence(400),
                _ => Err(missing("mixing")),
            },
        }
    }

    pub fn n(&self) -> Result<usize, CoreError> {
        self.n.ok_or_else(|| missing("n"))
    }

    pub fn replications(&self) -> Result<usize, CoreError> {
        self.replications.ok_or_else(|| missing("replications"))
    }

    pub fn kappa(&self) -> usize {
        self.kappa
            .unwrap_or_else(|| betamix::hausman::SieveBasis::default_kappa(self.n.unwrap_or(100)))
    }

    pub fn size_config(&self, seed: u64, threads: usize) -> Result<SizeConfig, CoreError> {
        Ok(SizeConfig {
            dgp: self.dgp(true)?,
            n: self.n()?,
            reps: self.replications()?,
            kappa: self.kappa(),
            bandwidth: self.bandwidth,
            hermite: self.basis == BasisName::Hermite,
            alpha: self.alpha,
            seed,
            threads,
        })
    }

    pub fn power_config(&self, seed: u64, threads: usize) -> Result<PowerConfig, CoreError> {
        let section = self.dgp.as_ref().ok_or_else(|| missing("dgp"))?;
        let c_grid = section
            .c_grid
            .clone()
            .ok_or_else(|| missing("dgp.c_grid"))?;
        Ok(PowerConfig {
            dgp: self.dgp(false)?,
            c_grid,
            n: self.n()?,
            reps: self.replications()?,
            kappa: self.kappa(),
            bandwidth: self.bandwidth,
            hermite: self.basis == BasisName::Hermite,
            alpha: self.alpha,
            seed,
            threads,
        })
    }

    pub fn clt_config(&self, seed: u64, threads: usize) -> Result<CltConfig, CoreError> {
        let section = self.clt.as_ref().ok_or_else(|| missing("clt"))?;
        Ok(CltConfig {
            spec: self.process()?.clone(),
            functions: section.functions.clone(),
            n: self.n()?,
            reps: self.replications()?,
            seed,
            threads,
        })
    }

    pub fn equicontinuity_config(
        &self,
        seed: u64,
        threads: usize,
    ) -> Result<EquicontinuityConfig, CoreError> {
        let section = self
            .equicontinuity
            .as_ref()
            .ok_or_else(|| missing("equicontinuity"))?;
        Ok(EquicontinuityConfig {
            spec: self.process()?.clone(),
            family: section.family.clone(),
            delta: section.delta,
            eps: section.eps,
            n: self.n()?,
            reps: self.replications()?,
            seed,
            threads,
        })
    }

    pub fn entropy_config(&self) -> Result<EntropyConfig, CoreError> {
        let section = self.entropy.as_ref().ok_or_else(|| missing("entropy"))?;
        let theta = section.theta.unwrap_or(section.s + 1.0);
        let params = ClassParams::new(
            section.s,
            f64::INFINITY,
            f64::INFINITY,
            1,
            theta,
            None,
            section.radius,
        )?;
        Ok(EntropyConfig {
            params,
            domain: section.domain,
            deltas: section.deltas.clone(),
            mixing: self
                .mixing_sequence()
                .unwrap_or_else(|_| MixingSequence::iid()),
        })
    }
}
