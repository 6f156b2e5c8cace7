//! Run reports and their JSON and text renderings.

use std::fmt::Write as _;

use cake_core::properties::{GainCertificate, PropertyReport};
use cake_core::rational::{format_rational, serde_rational, serde_rational_vec};
use cake_core::rw::LearnedValuation;
use cake_core::scenarios::ViolationWitness;
use cake_core::{Allocation, Profile, Rational};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::exit;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inputs {
    pub command: String,
    pub arguments: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<Profile>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Output {
    Allocation {
        mechanism: String,
        allocation: Allocation,
        #[serde(with = "serde_rational_vec")]
        values: Vec<Rational>,
    },
    PropertyReport(PropertyReport),
    GainCertificate {
        engine: String,
        certificate: GainCertificate,
    },
    ViolationWitness(ViolationWitness),
    /// A chain ran to completion without exposing a violation.
    NoWitness {
        chain: String,
        reason: String,
    },
    LearnedValuation {
        learned: LearnedValuation,
        /// Largest `|W(X) - V(X)|` over all pieces against the hidden valuation.
        #[serde(with = "serde_rational")]
        max_piece_error: Rational,
    },
    Verification {
        subject: String,
        mechanism: String,
        verified: bool,
        /// Certificates re-run.
        checked: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reason: Option<String>,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub inputs: Inputs,
    pub output: Output,
    /// All arithmetic is exact; kept for consumers that mix in float tools.
    pub exact: bool,
}

impl RunReport {
    pub fn exit_code(&self) -> u8 {
        match &self.output {
            Output::ViolationWitness(_) => exit::VIOLATION,
            Output::Verification { verified: false, .. } => exit::VERIFY_FAILED,
            _ => exit::OK,
        }
    }

    /// Pretty JSON with keys sorted at every level.
    pub fn to_json(&self) -> String {
        let value = serde_json::to_value(self).expect("reports serialize");
        let mut text = serde_json::to_string_pretty(&value).expect("values serialize");
        text.push('\n');
        text
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "command: {}", self.inputs.command);
        match &self.output {
            Output::Allocation {
                mechanism,
                allocation,
                values,
            } => {
                let _ = writeln!(s, "mechanism: {mechanism}");
                for (i, (piece, v)) in allocation.pieces.iter().zip(values).enumerate() {
                    let _ = writeln!(s, "agent {}: {} (value {})", i + 1, piece, format_rational(v));
                }
                let _ = writeln!(s, "discarded: {}", allocation.discarded);
            }
            Output::PropertyReport(r) => {
                let _ = writeln!(s, "{r}");
            }
            Output::GainCertificate { engine, certificate } => {
                let _ = writeln!(s, "engine: {engine}");
                let _ = writeln!(s, "{certificate}");
            }
            Output::ViolationWitness(w) => {
                let _ = writeln!(s, "{w}");
            }
            Output::NoWitness { chain, reason } => {
                let _ = writeln!(s, "chain: {chain}");
                let _ = writeln!(s, "no witness: {reason}");
            }
            Output::LearnedValuation {
                learned,
                max_piece_error,
            } => {
                let _ = writeln!(s, "learned: {}", learned.w);
                let _ = writeln!(s, "queries: {}", learned.queries_used);
                let _ = writeln!(s, "epsilon: {}", format_rational(&learned.epsilon));
                let _ = writeln!(s, "max piece error: {}", format_rational(max_piece_error));
            }
            Output::Verification {
                subject,
                mechanism,
                verified,
                checked,
                reason,
            } => {
                let _ = writeln!(s, "subject: {subject}");
                let _ = writeln!(s, "mechanism: {mechanism}");
                let _ = writeln!(s, "certificates re-run: {checked}");
                let _ = writeln!(s, "verified: {verified}");
                if let Some(r) = reason {
                    let _ = writeln!(s, "reason: {r}");
                }
            }
        }
        s
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => self.to_json(),
            Format::Text => self.to_text(),
        }
    }
}
