//! Exact fairness checks and manipulation-gain search.

mod ep_exact;
mod grid;

use std::fmt;

use num_bigint::BigInt;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::profile::{validate_allocation, wasted_measure, Allocation, AllocationViolation, Profile};
use crate::rational::{format_rational, serde_rational, serde_rational_vec, zero, Rational};
use crate::valuation::Valuation;

pub use ep_exact::ep_cutpoint_best_response;
pub use grid::{best_response_gain, candidate_misreports, SearchConfig};

/// Exact property gaps of one allocation against the reported profile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub mechanism: String,
    pub allocation: Allocation,
    #[serde(with = "serde_rational_vec")]
    pub values: Vec<Rational>,
    /// `max_i (1/n - V_i(A_i))`, floored at zero.
    #[serde(with = "serde_rational")]
    pub proportionality_deficit: Rational,
    /// `max_{i,j} (V_i(A_j) - V_i(A_i))`, floored at zero.
    #[serde(with = "serde_rational")]
    pub envy: Rational,
    /// Desired cake that is discarded or held by someone with zero density.
    #[serde(with = "serde_rational")]
    pub wasted_measure: Rational,
    pub contiguous: bool,
    pub violations: Vec<AllocationViolation>,
}

impl PropertyReport {
    pub fn for_allocation(mechanism: &str, allocation: Allocation, profile: &Profile) -> Result<Self> {
        let violations = validate_allocation(&allocation, profile)?;
        let n = Rational::from_integer(BigInt::from(profile.n()));
        let fair_share = Rational::from_integer(1.into()) / n;
        let values = allocation.values(profile);
        let mut deficit = zero();
        let mut envy = zero();
        for (i, v) in profile.valuations().iter().enumerate() {
            let short = &fair_share - &values[i];
            if short > deficit {
                deficit = short;
            }
            for (j, piece) in allocation.pieces.iter().enumerate() {
                if i == j {
                    continue;
                }
                let e = v.value(piece) - &values[i];
                if e > envy {
                    envy = e;
                }
            }
        }
        Ok(PropertyReport {
            mechanism: mechanism.to_string(),
            wasted_measure: wasted_measure(&allocation, profile),
            contiguous: allocation.is_contiguous(),
            allocation,
            values,
            proportionality_deficit: deficit,
            envy,
            violations,
        })
    }

    pub fn is_proportional(&self) -> bool {
        self.proportionality_deficit.is_zero()
    }

    pub fn is_envy_free(&self) -> bool {
        self.envy.is_zero()
    }

    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for PropertyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mechanism: {}", self.mechanism)?;
        for (i, (piece, value)) in self.allocation.pieces.iter().zip(&self.values).enumerate() {
            writeln!(f, "agent {}: {} (value {})", i + 1, piece, format_rational(value))?;
        }
        writeln!(f, "discarded: {}", self.allocation.discarded)?;
        writeln!(f, "proportionality deficit: {}", format_rational(&self.proportionality_deficit))?;
        writeln!(f, "envy: {}", format_rational(&self.envy))?;
        writeln!(f, "wasted measure: {}", format_rational(&self.wasted_measure))?;
        write!(f, "contiguous: {}", self.contiguous)?;
        for v in &self.violations {
            write!(f, "\nviolation: {v}")?;
        }
        Ok(())
    }
}

/// Runs `mechanism` once on `profile` and measures every property gap.
pub fn check_properties(mechanism: &dyn Mechanism, profile: &Profile) -> Result<PropertyReport> {
    let allocation = mechanism.allocate(profile)?;
    PropertyReport::for_allocation(&mechanism.name(), allocation, profile)
}

/// A single agent's misreport together with the true values it produces.
/// Self-checking: [`GainCertificate::verify`] re-runs the mechanism.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GainCertificate {
    pub mechanism: String,
    pub agent: usize,
    pub profile: Profile,
    pub misreport: Valuation,
    #[serde(with = "serde_rational")]
    pub truthful_value: Rational,
    #[serde(with = "serde_rational")]
    pub deviated_value: Rational,
    #[serde(with = "serde_rational")]
    pub gain: Rational,
}

impl GainCertificate {
    /// Measures what `agent` (scored by its true valuation in `profile`)
    /// gets from reporting `misreport` instead.
    pub fn evaluate(
        mechanism: &dyn Mechanism,
        profile: &Profile,
        agent: usize,
        misreport: Valuation,
    ) -> Result<Self> {
        profile.check_agent(agent)?;
        let truthful_value = true_value(mechanism, profile, agent)?;
        Self::with_baseline(mechanism, profile, agent, misreport, truthful_value)
    }

    pub(crate) fn with_baseline(
        mechanism: &dyn Mechanism,
        profile: &Profile,
        agent: usize,
        misreport: Valuation,
        truthful_value: Rational,
    ) -> Result<Self> {
        let deviated_value = deviated_value(mechanism, profile, agent, &misreport)?;
        Ok(GainCertificate {
            mechanism: mechanism.name(),
            agent,
            profile: profile.clone(),
            gain: &deviated_value - &truthful_value,
            misreport,
            truthful_value,
            deviated_value,
        })
    }

    pub fn deviated_profile(&self) -> Profile {
        self.profile.with_agent(self.agent, self.misreport.clone())
    }

    /// Re-runs `mechanism` on both profiles and checks every recorded value.
    pub fn verify(&self, mechanism: &dyn Mechanism) -> Result<()> {
        if mechanism.name() != self.mechanism {
            return Err(Error::VerificationFailed(format!(
                "certificate is for {}, not {}",
                self.mechanism,
                mechanism.name()
            )));
        }
        let fresh = GainCertificate::evaluate(mechanism, &self.profile, self.agent, self.misreport.clone())?;
        let checks = [
            ("truthful value", &self.truthful_value, &fresh.truthful_value),
            ("deviated value", &self.deviated_value, &fresh.deviated_value),
            ("gain", &self.gain, &fresh.gain),
        ];
        for (what, recorded, actual) in checks {
            if recorded != actual {
                return Err(Error::VerificationFailed(format!(
                    "{what}: recorded {}, re-run gives {}",
                    format_rational(recorded),
                    format_rational(actual)
                )));
            }
        }
        Ok(())
    }
}

impl fmt::Display for GainCertificate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "mechanism: {}", self.mechanism)?;
        writeln!(f, "agent: {}", self.agent + 1)?;
        writeln!(f, "misreport: {}", self.misreport)?;
        writeln!(f, "truthful value: {}", format_rational(&self.truthful_value))?;
        writeln!(f, "deviated value: {}", format_rational(&self.deviated_value))?;
        write!(f, "gain: {}", format_rational(&self.gain))
    }
}

/// `V_agent(M_agent(profile))` with the agent's own valuation.
pub fn true_value(mechanism: &dyn Mechanism, profile: &Profile, agent: usize) -> Result<Rational> {
    let a = mechanism.allocate(profile)?;
    Ok(profile.agent(agent).value(a.piece(agent)))
}

fn deviated_value(
    mechanism: &dyn Mechanism,
    profile: &Profile,
    agent: usize,
    misreport: &Valuation,
) -> Result<Rational> {
    let a = mechanism.allocate(&profile.with_agent(agent, misreport.clone()))?;
    Ok(profile.agent(agent).value(a.piece(agent)))
}

fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Largest manipulation gain plain Even-Paz can allow with `n` agents.
pub fn even_paz_gain_bound(n: usize) -> Rational {
    match n {
        0 | 1 => zero(),
        2 | 4 => ratio(1, 2),
        3 | 5 => ratio(2, 3),
        _ => ratio(n as i64 - 2, n as i64),
    }
}

/// Largest manipulation gain modified Even-Paz can allow with `n` agents.
pub fn modified_even_paz_gain_bound(n: usize) -> Rational {
    if n < 2 {
        return zero();
    }
    let n = n as i64;
    let base = Rational::from_integer(1.into()) - ratio(3, 2 * n);
    if n % 2 == 0 {
        base
    } else {
        base + ratio(1, 2 * n * n)
    }
}
