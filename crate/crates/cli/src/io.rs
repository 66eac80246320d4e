//! Reading instance, profile, allocation and grid files.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use pacing_core::metagame::StrategyGrid;
use pacing_core::{AgentType, Instance, Message};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

/// A file that could not be read or did not match its schema.
#[derive(Debug)]
pub struct InputError {
    pub path: PathBuf,
    pub detail: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path.display(), self.detail)
    }
}

impl std::error::Error for InputError {}

/// On-disk form of an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub agents: Vec<AgentType>,
    pub ctr: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl InstanceFile {
    pub fn into_instance(self) -> Result<(Instance, Option<u64>), String> {
        let seed = self.seed;
        Instance::new(self.agents, self.ctr).map(|i| (i, seed)).map_err(|e| e.to_string())
    }

    pub fn from_instance(instance: &Instance, seed: Option<u64>) -> Self {
        Self { agents: instance.agents.clone(), ctr: instance.ctr.clone(), seed }
    }
}

/// A profile file holds either a bare list of messages or `{"messages": [...]}`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ProfileFile {
    Bare(Vec<Message>),
    Wrapped {
        messages: Vec<Message>,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum AllocationFile {
    Bare(Vec<Vec<f64>>),
    Wrapped {
        allocation: Vec<Vec<f64>>,
    },
}

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path).map_err(|e| InputError { path: path.to_path_buf(), detail: e.to_string() })
}

/// Parse JSON, reporting the offending field path and position on failure.
pub fn parse<T: DeserializeOwned>(path: &Path, text: &str) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let detail = if field.is_empty() || field == "." { inner.to_string() } else { format!("field `{field}`: {inner}") };
        InputError { path: path.to_path_buf(), detail }
    })
}

pub fn load_instance(path: &Path) -> Result<(Instance, Option<u64>), InputError> {
    let file: InstanceFile = parse(path, &read(path)?)?;
    file.into_instance().map_err(|detail| InputError { path: path.to_path_buf(), detail })
}

pub fn load_profile(path: &Path) -> Result<Vec<Message>, InputError> {
    let text = read(path)?;
    // Untagged enums hide the failing field, so retry each form for the message.
    match serde_json::from_str::<ProfileFile>(&text) {
        Ok(ProfileFile::Bare(m)) | Ok(ProfileFile::Wrapped { messages: m }) => Ok(m),
        Err(_) if text.trim_start().starts_with('[') => parse::<Vec<Message>>(path, &text),
        Err(_) => {
            #[derive(Deserialize)]
            #[serde(deny_unknown_fields)]
            struct Wrapped {
                #[allow(dead_code)]
                messages: Vec<Message>,
            }
            parse::<Wrapped>(path, &text).map(|w| w.messages)
        }
    }
}

pub fn load_allocation(path: &Path) -> Result<Vec<Vec<f64>>, InputError> {
    let text = read(path)?;
    match serde_json::from_str::<AllocationFile>(&text) {
        Ok(AllocationFile::Bare(a)) | Ok(AllocationFile::Wrapped { allocation: a }) => Ok(a),
        Err(_) => parse::<Vec<Vec<f64>>>(path, &text),
    }
}

pub fn load_grid(path: &Path) -> Result<StrategyGrid, InputError> {
    parse(path, &read(path)?)
}

/// Truthful reports for linear agents: `(v, w)`.
pub fn truthful_profile(instance: &Instance) -> Result<Vec<Message>, String> {
    instance
        .agents
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let v = a
                .linear_value()
                .ok_or_else(|| format!("agent {i} has a non-linear valuation; pass --profile"))?;
            Message::new(pacing_core::ExtNonNeg::Finite(v), a.budget).map_err(|e| format!("agent {i}: {e}"))
        })
        .collect()
}
