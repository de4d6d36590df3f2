//! Pure predicate oracle deciding which functional-CLT route applies to a
//! class/mixing/moment configuration.
//!
//! Each clause encodes one sufficient condition for the empirical process
//! indexed by a bounded subset of the weighted class to converge weakly:
//!
//! * positive weight exponents need only a summable mixing sequence plus
//!   exponent inequalities,
//! * nonpositive weight exponents trade moments of the weighted envelope
//!   (in the mixing norm or in `L_{2r}(P)`) against lag-weighted
//!   summability `sum m^{1/(r-1)} beta_m < inf`,
//! * bounded supports relax everything to `s/d > 1/2`.
//!
//! The auxiliary exponent `gamma` is existentially quantified: evidence at
//! a budget `gamma_ev` certifies every `gamma` in `(0, gamma_ev]` (the
//! weight `<x>^{(gamma-theta)/2} >= 1` is monotone in `gamma`), so each
//! clause asks whether an admissible `gamma` exists below the budget.
//! This makes every clause monotone in the evidence: enlarging the budget
//! or certifying more summability never removes a satisfied verdict.

use super::ClassParams;
use crate::mixing::SummabilityReport;

/// The sufficient conditions the oracle can certify.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CltCondition {
    /// theta > 0, theta > s - d/p, s/d > 1/2, summable mixing.
    PositiveWeightRapid,
    /// theta > 0, theta < s - d/p, theta/d + 1/p > 1/2, summable mixing.
    PositiveWeightSlow,
    /// theta <= 0, envelope finite in the mixing norm, gamma > s - d/p,
    /// s/d > 1/2, summable mixing.
    NonpositiveWeightRapid,
    /// theta <= 0, envelope finite in the mixing norm, gamma < s - d/p,
    /// gamma/d + 1/p > 1/2, summable mixing.
    NonpositiveWeightSlow,
    /// Bounded support with `<x> <= M`, s/d > 1/2, summable mixing.
    BoundedDomain,
    /// theta <= 0, lag-weighted summability for some r > 1, raw moment
    /// E||X||^{2r(gamma-theta)} finite, r(gamma-theta) > 1,
    /// gamma > s - d/p and s/d > 1/2.
    SummableLagMomentRapid,
    /// As above with gamma < s - d/p and gamma/d + 1/p > 1/2.
    SummableLagMomentSlow,
    /// Lag-weighted summability plus the envelope in L_{2r}(P),
    /// gamma > s - d/p and s/d > 1/2 (any theta).
    PlainMomentRapid,
    /// As above with gamma < s - d/p and gamma/d + 1/p > 1/2.
    PlainMomentSlow,
}

pub const ALL_CONDITIONS: [CltCondition; 9] = [
    CltCondition::PositiveWeightRapid,
    CltCondition::PositiveWeightSlow,
    CltCondition::NonpositiveWeightRapid,
    CltCondition::NonpositiveWeightSlow,
    CltCondition::BoundedDomain,
    CltCondition::SummableLagMomentRapid,
    CltCondition::SummableLagMomentSlow,
    CltCondition::PlainMomentRapid,
    CltCondition::PlainMomentSlow,
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClauseStatus {
    Satisfied,
    Fails(String),
    /// A needed input is missing; nothing is asserted.
    Undetermined(String),
    /// Exactly on the excluded branch boundary `gamma = s - d/p` or
    /// `theta = s - d/p`; no rate is asserted there.
    Boundary,
}

impl ClauseStatus {
    pub fn is_satisfied(&self) -> bool {
        matches!(self, ClauseStatus::Satisfied)
    }
}

/// Finiteness evidence gathered at an exponent budget `gamma`.
#[derive(Debug, Clone, Copy)]
pub struct MomentEvidence {
    /// The budget: evidence certifies every exponent in (0, gamma].
    pub gamma: f64,
    /// `||<X>^{(gamma-theta)/2}||` finite in the mixing norm?
    pub envelope_mixing_finite: Option<bool>,
    /// `||<X>^{(gamma-theta)/2}||_{2r,P}` finite (r from the report)?
    pub envelope_l2r_finite: Option<bool>,
    /// `E ||X||^{2 r (gamma - theta)}` finite?
    pub raw_moment_finite: Option<bool>,
}

#[derive(Debug, Clone, Copy)]
pub struct OracleInput<'a> {
    pub params: &'a ClassParams,
    pub mixing: Option<&'a SummabilityReport>,
    pub moments: Option<&'a MomentEvidence>,
    /// `Some(M)` when the support is bounded with `<x> <= M`.
    pub bounded_domain: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub clauses: Vec<(CltCondition, ClauseStatus)>,
}

impl Verdict {
    pub fn status(&self, cond: CltCondition) -> &ClauseStatus {
        &self.clauses.iter().find(|(c, _)| *c == cond).unwrap().1
    }

    pub fn satisfied(&self) -> Vec<CltCondition> {
        self.clauses
            .iter()
            .filter(|(_, s)| s.is_satisfied())
            .map(|(c, _)| *c)
            .collect()
    }

    pub fn any_satisfied(&self) -> bool {
        self.clauses.iter().any(|(_, s)| s.is_satisfied())
    }
}

const BOUNDARY_TOL: f64 = 1e-12;

/// Evaluate every clause against the inputs. Missing inputs yield
/// `Undetermined` for the clauses that need them; nothing is simulated.
pub fn clt_condition_oracle(input: &OracleInput) -> Verdict {
    let clauses = ALL_CONDITIONS
        .iter()
        .map(|&c| (c, evaluate(c, input)))
        .collect();
    Verdict { clauses }
}

fn evaluate(cond: CltCondition, input: &OracleInput) -> ClauseStatus {
    use ClauseStatus::*;
    use CltCondition::*;
    let p = input.params;
    let split = p.s - p.d_over_p();
    let s_over_d = p.s / p.d as f64;
    let inv_p = if p.p.is_infinite() { 0.0 } else { 1.0 / p.p };
    let d = p.d as f64;

    let plain_sum = || -> Result<(), ClauseStatus> {
        match input.mixing {
            None => Err(Undetermined("no summability report supplied".into())),
            Some(rep) if rep.beta_certified() => Ok(()),
            Some(_) => Err(Fails("mixing sum not certified finite".into())),
        }
    };
    let weighted_sum = || -> Result<f64, ClauseStatus> {
        match input.mixing {
            None => Err(Undetermined("no summability report supplied".into())),
            Some(rep) if rep.weighted_certified() => Ok(rep.r),
            Some(_) => Err(Fails("lag-weighted mixing sum not certified finite".into())),
        }
    };
    let evidence = || -> Result<&MomentEvidence, ClauseStatus> {
        input
            .moments
            .ok_or_else(|| Undetermined("no moment evidence supplied".into()))
    };
    let flag = |v: Option<bool>, what: &str| -> Result<(), ClauseStatus> {
        match v {
            Some(true) => Ok(()),
            Some(false) => Err(Fails(format!("{what} is infinite"))),
            None => Err(Undetermined(format!("{what} not evaluated"))),
        }
    };
    // Existence of gamma in (lower, min(budget, split)) for the slow
    // branches, or gamma in (split, budget] for the rapid ones.
    let rapid_gamma = |budget: f64, lower: f64| -> ClauseStatus {
        if (budget - split).abs() < BOUNDARY_TOL {
            Boundary
        } else if budget > split.max(lower) {
            Satisfied
        } else {
            Fails(format!("no admissible gamma above s - d/p = {split:.6} within budget {budget}"))
        }
    };
    let slow_gamma = |budget: f64, lower: f64| -> ClauseStatus {
        let upper = budget.min(split);
        let lower = lower.max(0.0);
        if upper > lower + BOUNDARY_TOL {
            Satisfied
        } else {
            Fails(format!(
                "no admissible gamma in ({lower:.6}, {upper:.6}) below s - d/p"
            ))
        }
    };

    match cond {
        PositiveWeightRapid => {
            if let Err(s) = plain_sum() {
                return s;
            }
            if !(p.theta > 0.0) {
                return Fails("needs theta > 0".into());
            }
            if (p.theta - split).abs() < BOUNDARY_TOL {
                return Boundary;
            }
            if !(p.theta > split) {
                return Fails(format!("needs theta > s - d/p = {split:.6}"));
            }
            if !(s_over_d > 0.5) {
                return Fails(format!("needs s/d > 1/2, got {s_over_d:.6}"));
            }
            Satisfied
        }
        PositiveWeightSlow => {
            if let Err(s) = plain_sum() {
                return s;
            }
            if !(p.theta > 0.0) {
                return Fails("needs theta > 0".into());
            }
            if (p.theta - split).abs() < BOUNDARY_TOL {
                return Boundary;
            }
            if !(p.theta < split) {
                return Fails(format!("needs theta < s - d/p = {split:.6}"));
            }
            if !(p.theta / d + inv_p > 0.5) {
                return Fails("needs theta/d + 1/p > 1/2".into());
            }
            Satisfied
        }
        NonpositiveWeightRapid | NonpositiveWeightSlow => {
            if let Err(s) = plain_sum() {
                return s;
            }
            if !(p.theta <= 0.0) {
                return Fails("needs theta <= 0".into());
            }
            let ev = match evidence() {
                Ok(e) => e,
                Err(s) => return s,
            };
            if let Err(s) = flag(ev.envelope_mixing_finite, "envelope mixing norm") {
                return s;
            }
            if cond == NonpositiveWeightRapid {
                if !(s_over_d > 0.5) {
                    return Fails(format!("needs s/d > 1/2, got {s_over_d:.6}"));
                }
                rapid_gamma(ev.gamma, 0.0)
            } else {
                // gamma/d + 1/p > 1/2 constrains gamma from below.
                slow_gamma(ev.gamma, d * (0.5 - inv_p))
            }
        }
        BoundedDomain => {
            if input.bounded_domain.is_none() {
                return Undetermined("support not declared bounded".into());
            }
            if let Err(s) = plain_sum() {
                return s;
            }
            if !(s_over_d > 0.5) {
                return Fails(format!("needs s/d > 1/2, got {s_over_d:.6}"));
            }
            if !p.s.is_finite() {
                return Fails("needs finite smoothness".into());
            }
            Satisfied
        }
        SummableLagMomentRapid | SummableLagMomentSlow => {
            if !(p.theta <= 0.0) {
                return Fails("needs theta <= 0".into());
            }
            let r = match weighted_sum() {
                Ok(r) => r,
                Err(s) => return s,
            };
            let ev = match evidence() {
                Ok(e) => e,
                Err(s) => return s,
            };
            if let Err(s) = flag(ev.raw_moment_finite, "raw moment E||X||^{2r(gamma-theta)}") {
                return s;
            }
            // r (gamma - theta) > 1 bounds gamma below.
            let lower = p.theta + 1.0 / r;
            if cond == SummableLagMomentRapid {
                if !(s_over_d > 0.5) {
                    return Fails(format!("needs s/d > 1/2, got {s_over_d:.6}"));
                }
                rapid_gamma(ev.gamma, lower)
            } else {
                slow_gamma(ev.gamma, lower.max(d * (0.5 - inv_p)))
            }
        }
        PlainMomentRapid | PlainMomentSlow => {
            if let Err(s) = weighted_sum() {
                return s;
            }
            let ev = match evidence() {
                Ok(e) => e,
                Err(s) => return s,
            };
            if let Err(s) = flag(ev.envelope_l2r_finite, "envelope L_{2r}(P) norm") {
                return s;
            }
            if cond == PlainMomentRapid {
                if !(s_over_d > 0.5) {
                    return Fails(format!("needs s/d > 1/2, got {s_over_d:.6}"));
                }
                rapid_gamma(ev.gamma, 0.0)
            } else {
                slow_gamma(ev.gamma, d * (0.5 - inv_p))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixing::{summability_report, MixingSequence, TailModel};

    fn geo_report(r: f64) -> SummabilityReport {
        summability_report(&MixingSequence::geometric_envelope(0.5, 10), r).unwrap()
    }

    fn truncated_report(r: f64) -> SummabilityReport {
        let seq = MixingSequence::new(vec![1.0, 0.4, 0.2], TailModel::None).unwrap();
        summability_report(&seq, r).unwrap()
    }

    fn params(s: f64, p: f64, theta: f64, gamma: Option<f64>) -> ClassParams {
        ClassParams::new(s, p, f64::INFINITY, 1, theta, gamma, 1.0).unwrap()
    }

    #[test]
    fn positive_weight_rapid_example() {
        // d=1, p=inf, s=0.8, theta=1: theta > s - d/p and s/d > 1/2.
        let p = params(0.8, f64::INFINITY, 1.0, None);
        let rep = geo_report(2.0);
        let v = clt_condition_oracle(&OracleInput {
            params: &p,
            mixing: Some(&rep),
            moments: None,
            bounded_domain: None,
        });
        assert!(v.status(CltCondition::PositiveWeightRapid).is_satisfied());
        // Moment-free clauses stay undetermined without evidence.
        assert!(matches!(
            v.status(CltCondition::NonpositiveWeightRapid),
            ClauseStatus::Fails(_)
        ));
    }

    #[test]
    fn low_smoothness_fails_everywhere() {
        // s/d = 0.4 < 1/2 and theta > s: no clause applies.
        let p = params(0.4, f64::INFINITY, 1.0, None);
        let rep = geo_report(2.0);
        let ev = MomentEvidence {
            gamma: 2.0,
            envelope_mixing_finite: Some(true),
            envelope_l2r_finite: Some(true),
            raw_moment_finite: Some(true),
        };
        let v = clt_condition_oracle(&OracleInput {
            params: &p,
            mixing: Some(&rep),
            moments: Some(&ev),
            bounded_domain: None,
        });
        assert!(!v.any_satisfied());
    }

    #[test]
    fn two_dim_case_example() {
        // d=2, p=2, s=1.5, theta=0.75: s - d/p = 0.5 < theta, s/d = 0.75.
        let p = ClassParams::new(1.5, 2.0, 2.0, 2, 0.75, None, 1.0).unwrap();
        let rep = geo_report(2.0);
        let v = clt_condition_oracle(&OracleInput {
            params: &p,
            mixing: Some(&rep),
            moments: None,
            bounded_domain: None,
        });
        assert!(v.status(CltCondition::PositiveWeightRapid).is_satisfied());
    }

    #[test]
    fn boundary_reported() {
        let p = params(0.8, f64::INFINITY, 0.8, None);
        let rep = geo_report(2.0);
        let v = clt_condition_oracle(&OracleInput {
            params: &p,
            mixing: Some(&rep),
            moments: None,
            bounded_domain: None,
        });
        assert_eq!(*v.status(CltCondition::PositiveWeightRapid), ClauseStatus::Boundary);
        assert_eq!(*v.status(CltCondition::PositiveWeightSlow), ClauseStatus::Boundary);
    }

    #[test]
    fn uncertified_sum_blocks_positive_clauses() {
        let p = params(0.8, f64::INFINITY, 1.0, None);
        let rep = truncated_report(2.0);
        let v = clt_condition_oracle(&OracleInput {
            params: &p,
            mixing: Some(&rep),
            moments: None,
            bounded_domain: None,
        });
        assert!(matches!(
            v.status(CltCondition::PositiveWeightRapid),
            ClauseStatus::Fails(_)
        ));
    }

    #[test]
    fn monotone_in_budget_and_flags() {
        // Satisfied clauses stay satisfied when the gamma budget grows or
        // more finiteness flags turn true.
        let p = params(0.8, f64::INFINITY, -0.5, Some(1.0));
        let rep = geo_report(2.0);
        let base_ev = MomentEvidence {
            gamma: 1.0,
            envelope_mixing_finite: Some(true),
            envelope_l2r_finite: None,
            raw_moment_finite: None,
        };
        let base = clt_condition_oracle(&OracleInput {
            params: &p,
            mixing: Some(&rep),
            moments: Some(&base_ev),
            bounded_domain: None,
        });
        let richer_ev = MomentEvidence {
            gamma: 2.0,
            envelope_mixing_finite: Some(true),
            envelope_l2r_finite: Some(true),
            raw_moment_finite: Some(true),
        };
        let richer = clt_condition_oracle(&OracleInput {
            params: &p,
            mixing: Some(&rep),
            moments: Some(&richer_ev),
            bounded_domain: None,
        });
        for cond in ALL_CONDITIONS {
            if base.status(cond).is_satisfied() {
                assert!(
                    richer.status(cond).is_satisfied(),
                    "{cond:?} lost its verdict"
                );
            }
        }
        assert!(base.status(CltCondition::NonpositiveWeightRapid).is_satisfied());
    }
}
