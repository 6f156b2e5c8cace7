//! Scenario files: one command with its arguments and profile, as JSON.

use std::path::{Path, PathBuf};

use cake_core::Profile;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::CliError;
use crate::request::Request;

pub const SCENARIO_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProfileSource {
    /// Path to a profile JSON file, relative to the scenario file.
    File {
        file: PathBuf,
    },
    Inline(Profile),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub version: u32,
    pub command: String,
    #[serde(default)]
    pub arguments: Map<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl ScenarioFile {
    pub fn parse(text: &str) -> Result<ScenarioFile, CliError> {
        let file: ScenarioFile =
            serde_json::from_str(text).map_err(|e| CliError::input(format!("scenario: {e}")))?;
        if file.version != SCENARIO_VERSION {
            return Err(CliError::input(format!(
                "version: unsupported scenario version {}, expected {SCENARIO_VERSION}",
                file.version
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<ScenarioFile, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| CliError::input(format!("{}: {}", path.display(), e.message)))
    }

    pub fn request(&self, base: Option<&Path>) -> Result<Request, CliError> {
        Request::from_arguments(&self.command, &self.arguments, base)
    }

    pub fn resolve_profile(&self, base: Option<&Path>) -> Result<Option<Profile>, CliError> {
        match &self.profile {
            None => Ok(None),
            Some(ProfileSource::Inline(p)) => Ok(Some(p.clone())),
            Some(ProfileSource::File { file }) => {
                let path = match base {
                    Some(dir) if file.is_relative() => dir.join(file),
                    _ => file.clone(),
                };
                load_profile(&path).map(Some)
            }
        }
    }
}

pub fn load_profile(path: &Path) -> Result<Profile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::input(format!("profile {}: {e}", path.display())))
}
