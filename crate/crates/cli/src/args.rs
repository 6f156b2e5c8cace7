//! Command-line grammar.

use std::collections::BTreeMap;
use std::path::PathBuf;

use cake_core::properties::SearchConfig;
use cake_core::rational::parse_rational;
use cake_core::scenarios::{ChainName, ChainParameters};
use cake_core::Rational;
use clap::{Args, Parser, Subcommand};

use crate::error::CliError;
use crate::report::Format;
use crate::request::{default_chain_mechanism, Engine, Request};

#[derive(Debug, Parser)]
#[command(name = "cakecut", version, about = "Exact cake cutting: allocate, check, search for manipulations, run counterexample chains")]
pub struct Cli {
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Seed for randomized search.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Profile JSON file: {"agents": [{"breakpoints": [...], "densities": [...]}, ...]}.
    #[arg(long, global = true)]
    pub profile: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a mechanism and print the allocation with exact values.
    Allocate {
        #[arg(long)]
        mechanism: String,
    },
    /// Run a mechanism and measure proportionality, envy, waste and contiguity.
    Check {
        #[arg(long)]
        mechanism: String,
    },
    /// Search for the most profitable misreport of one agent.
    Gain(GainArgs),
    /// Learn one agent's valuation through cut queries.
    Learn {
        /// Agent index, starting at 0.
        #[arg(long)]
        agent: usize,
        /// Assumed maximum number of breakpoints.
        #[arg(long)]
        k: usize,
        #[arg(long, value_parser = rational)]
        epsilon: Rational,
    },
    /// Run a counterexample chain against a mechanism.
    Chain(ChainArgs),
    /// Re-run the mechanism behind a certificate or witness file.
    Verify { witness: PathBuf },
    /// Run a scenario file.
    Run { scenario: PathBuf },
}

#[derive(Debug, Args)]
pub struct GainArgs {
    #[arg(long)]
    pub mechanism: String,
    /// Agent index, starting at 0.
    #[arg(long)]
    pub agent: usize,
    #[arg(long, value_enum, default_value_t = Engine::Grid)]
    pub engine: Engine,
    #[arg(long, default_value_t = SearchConfig::default().rounds)]
    pub rounds: u32,
    #[arg(long, default_value_t = SearchConfig::default().mass_resolution)]
    pub mass_resolution: u32,
    #[arg(long, default_value_t = SearchConfig::default().pair_resolution)]
    pub pair_resolution: u32,
    #[arg(long, default_value_t = SearchConfig::default().max_misreports)]
    pub max_misreports: usize,
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// nonwasteful (alias thm1), two-agent (prop1), contiguous (thm2) or discussion.
    #[arg(long, value_parser = chain_name, required_unless_present = "verify")]
    pub name: Option<ChainName>,
    #[arg(long)]
    pub mechanism: Option<String>,
    /// Number of agents; defaults to 2 for two-agent and discussion.
    #[arg(long)]
    pub n: Option<usize>,
    /// Tolerated manipulation gain.
    #[arg(long, value_parser = rational)]
    pub eps1: Option<Rational>,
    /// Tolerated proportionality shortfall.
    #[arg(long, value_parser = rational)]
    pub eps2: Option<Rational>,
    /// Override a construction constant, e.g. `--delta delta3=1/40`.
    #[arg(long, value_parser = delta)]
    pub delta: Vec<(String, Rational)>,
    /// Verify a witness file instead of running a chain.
    #[arg(long, conflicts_with_all = ["name", "mechanism", "n", "eps1", "eps2", "delta"])]
    pub verify: Option<PathBuf>,
}

fn rational(s: &str) -> Result<Rational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

fn chain_name(s: &str) -> Result<ChainName, String> {
    ChainName::parse(s).ok_or_else(|| {
        format!("unknown chain {s:?}; expected nonwasteful (thm1), two-agent (prop1), contiguous (thm2) or discussion")
    })
}

fn delta(s: &str) -> Result<(String, Rational), String> {
    let (k, v) = s.split_once('=').ok_or("expected key=value")?;
    Ok((k.trim().to_string(), rational(v)?))
}

/// What the command line asks for: a request, or a scenario file to load.
pub enum Invocation {
    Request(Request),
    Scenario(PathBuf),
}

impl Command {
    pub fn invocation(self) -> Result<Invocation, CliError> {
        Ok(Invocation::Request(match self {
            Command::Allocate { mechanism } => Request::Allocate { mechanism },
            Command::Check { mechanism } => Request::Check { mechanism },
            Command::Gain(g) => Request::Gain {
                mechanism: g.mechanism,
                agent: g.agent,
                engine: g.engine,
                search: SearchConfig {
                    rounds: g.rounds,
                    mass_resolution: g.mass_resolution,
                    pair_resolution: g.pair_resolution,
                    max_misreports: g.max_misreports,
                    ..SearchConfig::default()
                },
            },
            Command::Learn { agent, k, epsilon } => Request::Learn { agent, k, epsilon },
            Command::Chain(c) => {
                if let Some(witness) = c.verify {
                    return Ok(Invocation::Request(Request::Verify { witness }));
                }
                let name = c.name.expect("clap requires --name without --verify");
                let n = match (c.n, name) {
                    (Some(n), _) => n,
                    (None, ChainName::TwoAgent | ChainName::Discussion) => 2,
                    (None, _) => return Err(CliError::input("--n: required for this chain")),
                };
                let mut params = ChainParameters::new(n, c.eps1.unwrap_or_default(), c.eps2.unwrap_or_default());
                params.delta_overrides = c.delta.into_iter().collect::<BTreeMap<_, _>>();
                Request::Chain {
                    name,
                    mechanism: c
                        .mechanism
                        .unwrap_or_else(|| default_chain_mechanism(name).to_string()),
                    params,
                }
            }
            Command::Verify { witness } => Request::Verify { witness },
            Command::Run { scenario } => return Ok(Invocation::Scenario(scenario)),
        }))
    }
}
