//! Executes requests against the core library.

use std::path::Path;

use cake_core::mechanisms::mechanism_by_name;
use cake_core::properties::{
    best_response_gain, check_properties, ep_cutpoint_best_response, GainCertificate, SearchConfig,
};
use cake_core::rw::{approximate_valuation, max_piece_error, RWOracle};
use cake_core::scenarios::{
    contiguous_chain, discussion_chain, nonwasteful_chain, two_agent_chain, ChainName, ViolationWitness,
};
use cake_core::{Error, Profile};
use serde_json::Value;

use crate::error::CliError;
use crate::report::{Inputs, Output, RunReport};
use crate::request::{Engine, Request};
use crate::scenario::ScenarioFile;

pub fn execute(request: &Request, profile: Option<&Profile>, seed: Option<u64>) -> Result<RunReport, CliError> {
    let need_profile = || {
        profile.ok_or_else(|| {
            CliError::input(format!(
                "profile: the {} command needs a profile (--profile or the scenario's profile field)",
                request.command()
            ))
        })
    };
    let output = match request {
        Request::Allocate { mechanism } => {
            let p = need_profile()?;
            let m = mechanism_by_name(mechanism)?;
            let allocation = m.allocate(p)?;
            Output::Allocation {
                mechanism: m.name(),
                values: allocation.values(p),
                allocation,
            }
        }
        Request::Check { mechanism } => {
            let m = mechanism_by_name(mechanism)?;
            Output::PropertyReport(check_properties(m.as_ref(), need_profile()?)?)
        }
        Request::Gain {
            mechanism,
            agent,
            engine,
            search,
        } => {
            let p = need_profile()?;
            let m = mechanism_by_name(mechanism)?;
            let cfg = SearchConfig {
                seed: seed.unwrap_or(search.seed),
                ..search.clone()
            };
            let certificate = match engine {
                Engine::Grid => best_response_gain(m.as_ref(), p, *agent, &cfg)?,
                Engine::EpExact => ep_cutpoint_best_response(m.as_ref(), p, *agent, &cfg)?,
            };
            Output::GainCertificate {
                engine: engine.as_str().into(),
                certificate,
            }
        }
        Request::Learn { agent, k, epsilon } => {
            let p = need_profile()?;
            p.check_agent(*agent)?;
            let hidden = p.agent(*agent).clone();
            let mut oracle = RWOracle::new(hidden.clone());
            let learned = approximate_valuation(&mut oracle, *k, epsilon)?;
            Output::LearnedValuation {
                max_piece_error: max_piece_error(&hidden, &learned.w),
                learned,
            }
        }
        Request::Chain {
            name,
            mechanism,
            params,
        } => {
            let m = mechanism_by_name(mechanism)?;
            let run = match name {
                ChainName::Nonwasteful => nonwasteful_chain(m.as_ref(), params),
                ChainName::TwoAgent => two_agent_chain(m.as_ref(), params),
                ChainName::Contiguous => contiguous_chain(m.as_ref(), params),
                ChainName::Discussion => discussion_chain(m.as_ref(), params),
            };
            match run {
                Ok(w) => Output::ViolationWitness(w),
                Err(Error::NoViolation(reason) | Error::Inconclusive(reason)) => Output::NoWitness {
                    chain: name.as_str().into(),
                    reason,
                },
                Err(e) => return Err(e.into()),
            }
        }
        Request::Verify { witness } => verify_file(witness)?,
    };
    Ok(RunReport {
        inputs: Inputs {
            command: request.command().into(),
            arguments: request.arguments(),
            profile: profile.cloned(),
            seed,
        },
        output,
        exact: true,
    })
}

enum Subject {
    Certificate(Box<GainCertificate>),
    Witness(Box<ViolationWitness>),
}

/// Accepts a bare certificate or witness, or a run report carrying one.
fn read_subject(path: &Path) -> Result<Subject, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    let bad = |e: serde_json::Error| CliError::input(format!("witness {}: {e}", path.display()));
    let mut value: Value = serde_json::from_str(&text).map_err(bad)?;
    if let Some(output) = value.get("output") {
        value = output.clone();
        if let Some(cert) = value.get("certificate").filter(|_| value.get("engine").is_some()) {
            value = cert.clone();
        }
    }
    if value.get("chain").is_some() {
        if let Some(obj) = value.as_object_mut() {
            obj.remove("kind");
        }
        Ok(Subject::Witness(serde_json::from_value(value).map_err(bad)?))
    } else if value.get("misreport").is_some() {
        Ok(Subject::Certificate(serde_json::from_value(value).map_err(bad)?))
    } else {
        Err(CliError::input(format!(
            "witness {}: expected a gain certificate or a violation witness",
            path.display()
        )))
    }
}

fn verify_file(path: &Path) -> Result<Output, CliError> {
    let (subject, mechanism, checked, result) = match read_subject(path)? {
        Subject::Certificate(c) => {
            let m = mechanism_by_name(&c.mechanism)?;
            ("gain-certificate", c.mechanism.clone(), 1, c.verify(m.as_ref()))
        }
        Subject::Witness(w) => {
            let m = mechanism_by_name(&w.mechanism)?;
            ("violation-witness", w.mechanism.clone(), w.findings.len(), w.verify(m.as_ref()))
        }
    };
    let reason = match result {
        Ok(()) => None,
        Err(Error::VerificationFailed(r)) => Some(r),
        Err(e) => return Err(e.into()),
    };
    Ok(Output::Verification {
        subject: subject.into(),
        mechanism,
        verified: reason.is_none(),
        checked,
        reason,
    })
}

/// Loads a scenario file and runs it. `seed` overrides the file's seed.
pub fn run_scenario(path: &Path, seed: Option<u64>) -> Result<RunReport, CliError> {
    let file = ScenarioFile::load(path)?;
    let base = path.parent();
    let request = file.request(base)?;
    let profile = file.resolve_profile(base)?;
    execute(&request, profile.as_ref(), seed.or(file.seed))
}
