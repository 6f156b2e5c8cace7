//! Adversarial profile chains that force a concrete mechanism into a
//! verifiable property violation.
//!
//! Each chain runs the mechanism on a fixed starting profile, reads off its
//! allocation, and builds the next profiles from it. Every step that exposes a
//! violation is recorded as a [`Finding`]; the first one becomes the witness.

mod contiguous;
mod fixtures;
mod nonwasteful;
mod two_agent;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mechanisms::Mechanism;
use crate::profile::{AllocationViolation, Profile};
use crate::properties::{check_properties, GainCertificate, PropertyReport};
use crate::rational::{format_rational, serde_rational, serde_rational_map, zero, Rational};
use crate::valuation::Valuation;

pub use contiguous::contiguous_chain;
pub use fixtures::{discussion_chain, discussion_example, ep_worstcase_fixture, DiscussionExample, WorstCaseFixture};
pub use nonwasteful::{nonwasteful_chain, nonwasteful_delta_bound};
pub use two_agent::{two_agent_chain, TwoAgentDeltas};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChainName {
    /// Non-wasteful mechanisms: `(u, u, y, ...)`, then an indicator report,
    /// then a report splitting weight across both agents' pieces.
    #[serde(alias = "thm1")]
    Nonwasteful,
    /// Two hungry agents and contiguous pieces.
    #[serde(alias = "prop1")]
    TwoAgent,
    /// Three or more agents and contiguous pieces.
    #[serde(alias = "thm2")]
    Contiguous,
    /// Zero-piece exchange on top of modified Even-Paz.
    Discussion,
}

impl ChainName {
    pub const ALL: [ChainName; 4] = [
        ChainName::Nonwasteful,
        ChainName::TwoAgent,
        ChainName::Contiguous,
        ChainName::Discussion,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChainName::Nonwasteful => "nonwasteful",
            ChainName::TwoAgent => "two-agent",
            ChainName::Contiguous => "contiguous",
            ChainName::Discussion => "discussion",
        }
    }

    /// Accepts the kebab-case names and the short aliases `thm1`, `prop1`
    /// and `thm2`.
    pub fn parse(name: &str) -> Option<ChainName> {
        match name {
            "nonwasteful" | "thm1" => Some(ChainName::Nonwasteful),
            "two-agent" | "prop1" => Some(ChainName::TwoAgent),
            "contiguous" | "thm2" => Some(ChainName::Contiguous),
            "discussion" => Some(ChainName::Discussion),
            _ => None,
        }
    }
}

impl fmt::Display for ChainName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainParameters {
    pub n: usize,
    /// Tolerated manipulation gain.
    #[serde(with = "serde_rational")]
    pub eps1: Rational,
    /// Tolerated proportionality shortfall.
    #[serde(with = "serde_rational")]
    pub eps2: Rational,
    /// Replacements for the default (midpoint) choices, keyed `delta`,
    /// `delta1`, ..., `delta5`.
    #[serde(default, with = "serde_rational_map")]
    pub delta_overrides: BTreeMap<String, Rational>,
}

impl ChainParameters {
    pub fn new(n: usize, eps1: Rational, eps2: Rational) -> Self {
        ChainParameters {
            n,
            eps1,
            eps2,
            delta_overrides: BTreeMap::new(),
        }
    }

    pub fn with_delta(mut self, key: &str, value: Rational) -> Self {
        self.delta_overrides.insert(key.to_string(), value);
        self
    }

    pub(crate) fn delta(&self, key: &str) -> Option<&Rational> {
        self.delta_overrides.get(key)
    }

    pub(crate) fn check_keys(&self, allowed: &[&str]) -> Result<()> {
        match self.delta_overrides.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(Error::InfeasibleParameters(format!(
                "unknown override {k:?}; this chain accepts {}",
                allowed.join(", ")
            ))),
            None => Ok(()),
        }
    }
}

/// The property a finding shows to be broken.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "property", rename_all = "kebab-case")]
pub enum Violated {
    /// Some agent gains more than `epsilon` by misreporting.
    Strategyproofness {
        #[serde(with = "serde_rational")]
        epsilon: Rational,
    },
    /// Some agent falls more than `epsilon` short of `1/n`.
    Proportionality {
        #[serde(with = "serde_rational")]
        epsilon: Rational,
    },
    NonWastefulness,
    Contiguity,
    FreeDisposal,
}

impl fmt::Display for Violated {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violated::Strategyproofness { epsilon } => {
                write!(f, "{}-strategyproofness", format_rational(epsilon))
            }
            Violated::Proportionality { epsilon } => {
                write!(f, "{}-proportionality", format_rational(epsilon))
            }
            Violated::NonWastefulness => f.write_str("non-wastefulness"),
            Violated::Contiguity => f.write_str("contiguity"),
            Violated::FreeDisposal => f.write_str("free disposal"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Certificate {
    Gain(GainCertificate),
    Property { profile: Profile, report: PropertyReport },
}

/// One violated property at one step of a chain.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub step: String,
    pub violated: Violated,
    pub certificate: Certificate,
}

impl Finding {
    /// Re-runs the mechanism and checks both the recorded numbers and that
    /// they really break the stated property.
    pub fn verify(&self, mechanism: &dyn Mechanism) -> Result<()> {
        let fail = |msg: String| Err(Error::VerificationFailed(format!("{}: {msg}", self.step)));
        match &self.certificate {
            Certificate::Gain(cert) => {
                cert.verify(mechanism)?;
                let Violated::Strategyproofness { epsilon } = &self.violated else {
                    return fail(format!("a gain certificate cannot show {}", self.violated));
                };
                if cert.gain <= *epsilon {
                    return fail(format!(
                        "gain {} does not exceed {}",
                        format_rational(&cert.gain),
                        format_rational(epsilon)
                    ));
                }
            }
            Certificate::Property { profile, report } => {
                if report.mechanism != mechanism.name() {
                    return fail(format!("report is for {}, not {}", report.mechanism, mechanism.name()));
                }
                let fresh = check_properties(mechanism, profile)?;
                if fresh != *report {
                    return fail("re-running the mechanism gives a different report".into());
                }
                if !breaks(&self.violated, report) {
                    return fail(format!("the report does not show a {} violation", self.violated));
                }
            }
        }
        Ok(())
    }
}

fn breaks(violated: &Violated, report: &PropertyReport) -> bool {
    match violated {
        Violated::Strategyproofness { .. } => false,
        Violated::Proportionality { epsilon } => report.proportionality_deficit > *epsilon,
        Violated::NonWastefulness => report.wasted_measure.is_positive(),
        Violated::Contiguity => !report.contiguous,
        Violated::FreeDisposal => report
            .violations
            .iter()
            .any(|v| matches!(v, AllocationViolation::FreeDisposal { .. })),
    }
}

/// A self-checking record of a chain run that exposed a violation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ViolationWitness {
    pub chain: ChainName,
    pub mechanism: String,
    /// Inputs and the derived constants of the construction.
    #[serde(with = "serde_rational_map")]
    pub parameters: BTreeMap<String, Rational>,
    /// The chain's profiles in the order they were built.
    pub profiles: Vec<Profile>,
    pub violated: Violated,
    pub certificate: Certificate,
    /// Every violation the chain exposed, the witnessed one first.
    pub findings: Vec<Finding>,
}

impl ViolationWitness {
    pub fn verify(&self, mechanism: &dyn Mechanism) -> Result<()> {
        if mechanism.name() != self.mechanism {
            return Err(Error::VerificationFailed(format!(
                "witness is for {}, not {}",
                self.mechanism,
                mechanism.name()
            )));
        }
        match self.findings.first() {
            Some(first) if first.violated == self.violated && first.certificate == self.certificate => {}
            _ => {
                return Err(Error::VerificationFailed(
                    "the witnessed violation is not the first finding".into(),
                ))
            }
        }
        self.findings.iter().try_for_each(|f| f.verify(mechanism))
    }
}

impl fmt::Display for ViolationWitness {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "chain: {}", self.chain)?;
        writeln!(f, "mechanism: {}", self.mechanism)?;
        for (k, v) in &self.parameters {
            writeln!(f, "{k} = {}", format_rational(v))?;
        }
        write!(f, "violated: {}", self.violated)?;
        for finding in &self.findings {
            write!(f, "\n[{}] {}", finding.step, finding.violated)?;
            match &finding.certificate {
                Certificate::Gain(c) => write!(
                    f,
                    ": agent {} gains {} ({} -> {})",
                    c.agent + 1,
                    format_rational(&c.gain),
                    format_rational(&c.truthful_value),
                    format_rational(&c.deviated_value)
                )?,
                Certificate::Property { report, .. } => write!(
                    f,
                    ": deficit {}, wasted {}, contiguous {}",
                    format_rational(&report.proportionality_deficit),
                    format_rational(&report.wasted_measure),
                    report.contiguous
                )?,
            }
        }
        Ok(())
    }
}

/// Which allocation properties a chain step inspects.
#[derive(Debug, Clone)]
pub(crate) struct Checks {
    pub waste: bool,
    pub contiguity: bool,
    pub eps2: Rational,
}

/// Collects findings while a chain runs.
pub(crate) struct Recorder<'a> {
    mechanism: &'a dyn Mechanism,
    pub findings: Vec<Finding>,
    pub profiles: Vec<Profile>,
    pub parameters: BTreeMap<String, Rational>,
}

impl<'a> Recorder<'a> {
    pub fn new(mechanism: &'a dyn Mechanism, params: &ChainParameters) -> Self {
        let mut parameters = BTreeMap::new();
        parameters.insert("n".into(), Rational::from_integer(BigInt::from(params.n)));
        parameters.insert("eps1".into(), params.eps1.clone());
        parameters.insert("eps2".into(), params.eps2.clone());
        Recorder {
            mechanism,
            findings: Vec::new(),
            profiles: Vec::new(),
            parameters,
        }
    }

    pub fn param(&mut self, key: &str, value: &Rational) {
        self.parameters.insert(key.into(), value.clone());
    }

    /// Runs the mechanism on `profile`, records any property it breaks and
    /// returns the report.
    pub fn inspect(&mut self, step: &str, profile: &Profile, checks: &Checks) -> Result<PropertyReport> {
        self.profiles.push(profile.clone());
        let report = check_properties(self.mechanism, profile)?;
        if let Some(v) = report
            .violations
            .iter()
            .find(|v| !matches!(v, AllocationViolation::FreeDisposal { .. }))
        {
            return Err(Error::Mechanism {
                mechanism: self.mechanism.name(),
                reason: format!("invalid allocation at {step}: {v}"),
            });
        }
        let mut kinds = vec![Violated::FreeDisposal];
        if checks.waste {
            kinds.push(Violated::NonWastefulness);
        }
        if checks.contiguity {
            kinds.push(Violated::Contiguity);
        }
        kinds.push(Violated::Proportionality {
            epsilon: checks.eps2.clone(),
        });
        for violated in kinds {
            if breaks(&violated, &report) {
                self.findings.push(Finding {
                    step: step.into(),
                    violated,
                    certificate: Certificate::Property {
                        profile: profile.clone(),
                        report: report.clone(),
                    },
                });
            }
        }
        Ok(report)
    }

    /// Records a deviation of `agent` from `profile` to `misreport` if it
    /// gains more than `eps1`.
    pub fn deviation(
        &mut self,
        step: &str,
        profile: &Profile,
        agent: usize,
        misreport: Valuation,
        eps1: &Rational,
    ) -> Result<GainCertificate> {
        let cert = GainCertificate::evaluate(self.mechanism, profile, agent, misreport)?;
        if cert.gain > *eps1 {
            self.findings.push(Finding {
                step: step.into(),
                violated: Violated::Strategyproofness { epsilon: eps1.clone() },
                certificate: Certificate::Gain(cert.clone()),
            });
        }
        Ok(cert)
    }

    pub fn has_findings(&self) -> bool {
        !self.findings.is_empty()
    }

    pub fn finish(self, chain: ChainName) -> Result<ViolationWitness> {
        let Some(first) = self.findings.first().cloned() else {
            return Err(Error::NoViolation(format!(
                "{chain} chain found no violation for {}",
                self.mechanism.name()
            )));
        };
        Ok(ViolationWitness {
            chain,
            mechanism: self.mechanism.name(),
            parameters: self.parameters,
            profiles: self.profiles,
            violated: first.violated,
            certificate: first.certificate,
            findings: self.findings,
        })
    }
}

pub(crate) fn check_epsilon(name: &str, eps: &Rational, below: &Rational) -> Result<()> {
    if eps.is_negative() || eps >= below {
        return Err(Error::InfeasibleParameters(format!(
            "{name} = {} must lie in [0, {})",
            format_rational(eps),
            format_rational(below)
        )));
    }
    Ok(())
}

/// `value` if it lies strictly inside `(lo, hi)`, else an error naming `key`.
pub(crate) fn within(key: &str, value: &Rational, lo: &Rational, hi: &Rational) -> Result<Rational> {
    if value > lo && value < hi {
        Ok(value.clone())
    } else {
        Err(Error::InfeasibleParameters(format!(
            "{key} = {} must lie strictly between {} and {}",
            format_rational(value),
            format_rational(lo),
            format_rational(hi)
        )))
    }
}

/// The override for `key` (checked against `(lo, hi)`) or the midpoint.
pub(crate) fn pick(params: &ChainParameters, key: &str, lo: &Rational, hi: &Rational) -> Result<Rational> {
    if lo >= hi {
        return Err(Error::InfeasibleParameters(format!(
            "no room for {key}: its interval ({}, {}) is empty",
            format_rational(lo),
            format_rational(hi)
        )));
    }
    match params.delta(key) {
        Some(v) => within(key, v, lo, hi),
        None => Ok((lo + hi) / Rational::from_integer(2.into())),
    }
}

pub(crate) fn reciprocal(n: usize) -> Rational {
    Rational::new(1.into(), BigInt::from(n))
}

pub(crate) fn uniform_on_prefix(len: &Rational) -> Result<Valuation> {
    if *len == crate::rational::one() {
        return Ok(Valuation::uniform());
    }
    Valuation::from_masses(std::slice::from_ref(len), &[crate::rational::one(), zero()])
}
