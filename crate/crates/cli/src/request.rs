//! Typed commands and their canonical argument maps.

use std::path::PathBuf;

use cake_core::properties::SearchConfig;
use cake_core::rational::{format_rational, parse_rational};
use cake_core::scenarios::{ChainName, ChainParameters};
use cake_core::Rational;
use serde_json::{Map, Value};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Engine {
    /// Random subsample of structured misreports; any mechanism.
    Grid,
    /// Cut-point dynamic program; Even-Paz and modified Even-Paz only.
    EpExact,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Grid => "grid",
            Engine::EpExact => "ep-exact",
        }
    }

    fn parse(s: &str) -> Option<Engine> {
        match s {
            "grid" => Some(Engine::Grid),
            "ep-exact" => Some(Engine::EpExact),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Request {
    Allocate {
        mechanism: String,
    },
    Check {
        mechanism: String,
    },
    Gain {
        mechanism: String,
        agent: usize,
        engine: Engine,
        search: SearchConfig,
    },
    Learn {
        agent: usize,
        k: usize,
        epsilon: Rational,
    },
    Chain {
        name: ChainName,
        mechanism: String,
        params: ChainParameters,
    },
    Verify {
        witness: PathBuf,
    },
}

pub const COMMANDS: [&str; 6] = ["allocate", "check", "gain", "learn", "chain", "verify"];

/// Mechanism a chain runs against when none is named.
pub fn default_chain_mechanism(name: ChainName) -> &'static str {
    match name {
        ChainName::Nonwasteful => "equal-split",
        ChainName::Discussion => "modified-ep-exchange",
        ChainName::TwoAgent | ChainName::Contiguous => "even-paz",
    }
}

impl Request {
    pub fn command(&self) -> &'static str {
        match self {
            Request::Allocate { .. } => "allocate",
            Request::Check { .. } => "check",
            Request::Gain { .. } => "gain",
            Request::Learn { .. } => "learn",
            Request::Chain { .. } => "chain",
            Request::Verify { .. } => "verify",
        }
    }

    pub fn needs_profile(&self) -> bool {
        !matches!(self, Request::Chain { .. } | Request::Verify { .. })
    }

    /// The request as a flat map with every default filled in; parsing it
    /// back yields the same request.
    pub fn arguments(&self) -> Map<String, Value> {
        let mut m = Map::new();
        let mut put = |k: &str, v: Value| {
            m.insert(k.to_string(), v);
        };
        match self {
            Request::Allocate { mechanism } | Request::Check { mechanism } => {
                put("mechanism", mechanism.as_str().into());
            }
            Request::Gain {
                mechanism,
                agent,
                engine,
                search,
            } => {
                put("mechanism", mechanism.as_str().into());
                put("agent", (*agent).into());
                put("engine", engine.as_str().into());
                put("rounds", search.rounds.into());
                put("mass_resolution", search.mass_resolution.into());
                put("pair_resolution", search.pair_resolution.into());
                put("max_misreports", search.max_misreports.into());
            }
            Request::Learn { agent, k, epsilon } => {
                put("agent", (*agent).into());
                put("k", (*k).into());
                put("epsilon", format_rational(epsilon).into());
            }
            Request::Chain {
                name,
                mechanism,
                params,
            } => {
                put("name", name.as_str().into());
                put("mechanism", mechanism.as_str().into());
                put("n", params.n.into());
                put("eps1", format_rational(&params.eps1).into());
                put("eps2", format_rational(&params.eps2).into());
                let deltas: Map<String, Value> = params
                    .delta_overrides
                    .iter()
                    .map(|(k, v)| (k.clone(), format_rational(v).into()))
                    .collect();
                put("delta", Value::Object(deltas));
            }
            Request::Verify { witness } => {
                put("witness", witness.display().to_string().into());
            }
        }
        m
    }

    /// Builds a request from a scenario file's `command` and `arguments`.
    /// Relative witness paths are resolved against `base`.
    pub fn from_arguments(
        command: &str,
        arguments: &Map<String, Value>,
        base: Option<&std::path::Path>,
    ) -> Result<Request, CliError> {
        let a = Args::new(arguments);
        let request = match command {
            "allocate" => Request::Allocate {
                mechanism: a.string("mechanism")?,
            },
            "check" => Request::Check {
                mechanism: a.string("mechanism")?,
            },
            "gain" => {
                let defaults = SearchConfig::default();
                let engine = match a.opt_string("engine")? {
                    None => Engine::Grid,
                    Some(s) => Engine::parse(&s).ok_or_else(|| {
                        CliError::input(format!("arguments.engine: expected grid or ep-exact, got {s:?}"))
                    })?,
                };
                Request::Gain {
                    mechanism: a.string("mechanism")?,
                    agent: a.count("agent")?,
                    engine,
                    search: SearchConfig {
                        rounds: a.opt_count("rounds")?.unwrap_or(defaults.rounds as usize) as u32,
                        mass_resolution: a
                            .opt_count("mass_resolution")?
                            .unwrap_or(defaults.mass_resolution as usize) as u32,
                        pair_resolution: a
                            .opt_count("pair_resolution")?
                            .unwrap_or(defaults.pair_resolution as usize) as u32,
                        max_misreports: a.opt_count("max_misreports")?.unwrap_or(defaults.max_misreports),
                        seed: defaults.seed,
                    },
                }
            }
            "learn" => Request::Learn {
                agent: a.count("agent")?,
                k: a.count("k")?,
                epsilon: a.rational("epsilon")?,
            },
            "chain" => {
                let text = a.string("name")?;
                let name = ChainName::parse(&text).ok_or_else(|| {
                    CliError::input(format!(
                        "arguments.name: unknown chain {text:?}; expected nonwasteful (thm1), two-agent (prop1), contiguous (thm2) or discussion"
                    ))
                })?;
                let default_n = match name {
                    ChainName::TwoAgent | ChainName::Discussion => Some(2),
                    _ => None,
                };
                let n = match (a.opt_count("n")?, default_n) {
                    (Some(n), _) | (None, Some(n)) => n,
                    (None, None) => return Err(CliError::input("arguments.n: missing")),
                };
                let mut params = ChainParameters::new(
                    n,
                    a.opt_rational("eps1")?.unwrap_or_default(),
                    a.opt_rational("eps2")?.unwrap_or_default(),
                );
                if let Some(deltas) = a.opt_object("delta")? {
                    for (k, v) in deltas {
                        let field = format!("arguments.delta.{k}");
                        params.delta_overrides.insert(k.clone(), rational_value(&field, v)?);
                    }
                }
                Request::Chain {
                    name,
                    mechanism: a
                        .opt_string("mechanism")?
                        .unwrap_or_else(|| default_chain_mechanism(name).to_string()),
                    params,
                }
            }
            "verify" => {
                let path = PathBuf::from(a.string("witness")?);
                let witness = match base {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path,
                };
                Request::Verify { witness }
            }
            other => {
                return Err(CliError::input(format!(
                    "command: unknown command {other:?}; expected one of {}",
                    COMMANDS.join(", ")
                )))
            }
        };
        a.finish()?;
        Ok(request)
    }
}

fn rational_value(field: &str, v: &Value) -> Result<Rational, CliError> {
    let text = match v {
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_i64() || n.is_u64() => n.to_string(),
        _ => return Err(CliError::input(format!("{field}: expected a rational string like \"1/3\""))),
    };
    parse_rational(&text).map_err(|e| CliError::input(format!("{field}: {e}")))
}

/// Reads typed fields from an argument map and rejects the ones nobody read.
struct Args<'a> {
    map: &'a Map<String, Value>,
    seen: std::cell::RefCell<Vec<&'static str>>,
}

impl<'a> Args<'a> {
    fn new(map: &'a Map<String, Value>) -> Self {
        Args {
            map,
            seen: std::cell::RefCell::new(Vec::new()),
        }
    }

    fn get(&self, key: &'static str) -> Option<&'a Value> {
        self.seen.borrow_mut().push(key);
        self.map.get(key)
    }

    fn missing(key: &str) -> CliError {
        CliError::input(format!("arguments.{key}: missing"))
    }

    fn opt_string(&self, key: &'static str) -> Result<Option<String>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(_) => Err(CliError::input(format!("arguments.{key}: expected a string"))),
        }
    }

    fn string(&self, key: &'static str) -> Result<String, CliError> {
        self.opt_string(key)?.ok_or_else(|| Self::missing(key))
    }

    fn opt_count(&self, key: &'static str) -> Result<Option<usize>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v
                .as_u64()
                .and_then(|n| usize::try_from(n).ok())
                .map(Some)
                .ok_or_else(|| CliError::input(format!("arguments.{key}: expected a non-negative integer"))),
        }
    }

    fn count(&self, key: &'static str) -> Result<usize, CliError> {
        self.opt_count(key)?.ok_or_else(|| Self::missing(key))
    }

    fn opt_rational(&self, key: &'static str) -> Result<Option<Rational>, CliError> {
        self.get(key)
            .map(|v| rational_value(&format!("arguments.{key}"), v))
            .transpose()
    }

    fn rational(&self, key: &'static str) -> Result<Rational, CliError> {
        self.opt_rational(key)?.ok_or_else(|| Self::missing(key))
    }

    fn opt_object(&self, key: &'static str) -> Result<Option<&'a Map<String, Value>>, CliError> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Object(m)) => Ok(Some(m)),
            Some(_) => Err(CliError::input(format!("arguments.{key}: expected an object"))),
        }
    }

    fn finish(self) -> Result<(), CliError> {
        let seen = self.seen.into_inner();
        match self.map.keys().find(|k| !seen.contains(&k.as_str())) {
            Some(k) => Err(CliError::input(format!("arguments.{k}: unknown argument"))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use cake_core::rational::rat;

    fn map(v: Value) -> Map<String, Value> {
        v.as_object().unwrap().clone()
    }

    #[test]
    fn arguments_round_trip() {
        let requests = [
            Request::Allocate {
                mechanism: "even-paz".into(),
            },
            Request::Gain {
                mechanism: "modified-ep".into(),
                agent: 1,
                engine: Engine::EpExact,
                search: SearchConfig::default(),
            },
            Request::Learn {
                agent: 0,
                k: 3,
                epsilon: rat(1, 5),
            },
            Request::Chain {
                name: ChainName::TwoAgent,
                mechanism: "even-paz".into(),
                params: ChainParameters::new(2, rat(2, 5), rat(0, 1)).with_delta("delta3", rat(1, 40)),
            },
        ];
        for r in requests {
            let back = Request::from_arguments(r.command(), &r.arguments(), None).unwrap();
            assert_eq!(back, r);
        }
    }

    #[test]
    fn chain_aliases_and_defaults() {
        let r = Request::from_arguments("chain", &map(serde_json::json!({"name": "thm1", "n": 3})), None).unwrap();
        let Request::Chain { name, mechanism, params } = r else { panic!() };
        assert_eq!(name, ChainName::Nonwasteful);
        assert_eq!(mechanism, "equal-split");
        assert_eq!(params.n, 3);
        let r = Request::from_arguments("chain", &map(serde_json::json!({"name": "discussion"})), None).unwrap();
        assert!(matches!(r, Request::Chain { params: ChainParameters { n: 2, .. }, .. }));
    }

    #[test]
    fn diagnostics_name_the_field() {
        let err = Request::from_arguments(
            "chain",
            &map(serde_json::json!({"name": "prop1", "eps1": "1/0"})),
            None,
        )
        .unwrap_err();
        assert!(err.message.contains("arguments.eps1"), "{}", err.message);
        let err = Request::from_arguments("allocate", &map(serde_json::json!({"mechanism": "even-paz", "x": 1})), None)
            .unwrap_err();
        assert!(err.message.contains("arguments.x"));
        let err = Request::from_arguments("dance", &Map::new(), None).unwrap_err();
        assert!(err.message.contains("command"));
    }
}
