//! Agents by name, for the command line, the arena and the bindings.

use std::sync::Arc;

use thiserror::Error;

use crate::agents::{baseline, Agent, BASELINE_NAMES};
use crate::belief::{BeliefConfig, RawNetAgent, ScrofaAgent};
use crate::nn::Network;

/// Every name [`make_agent`] accepts.
pub const AGENT_NAMES: [&str; 6] = ["random", "if", "greed", "scrofa", "scrofa-us", "net"];

#[derive(Debug, Error, PartialEq)]
pub enum RegistryError {
    #[error("unknown agent {0:?}; expected one of {AGENT_NAMES:?}")]
    Unknown(String),
    #[error("agent {0:?} needs a model")]
    NeedsModel(String),
}

/// Build an agent. Net-backed names (`scrofa`, `scrofa-us`, `net`) need
/// `model`. `scrofa` samples stratified with IEC weights; `scrofa-us` draws
/// uniformly and averages without weights.
pub fn make_agent(name: &str, model: Option<&Arc<Network<f32>>>) -> Result<Arc<dyn Agent>, RegistryError> {
    if BASELINE_NAMES.contains(&name) {
        return Ok(Arc::from(baseline(name).unwrap()));
    }
    let config = match name {
        "scrofa" => Some(BeliefConfig::default()),
        "scrofa-us" => Some(BeliefConfig::uniform()),
        "net" => None,
        _ => return Err(RegistryError::Unknown(name.to_string())),
    };
    let net = model.ok_or_else(|| RegistryError::NeedsModel(name.to_string()))?.clone();
    Ok(match config {
        Some(c) => Arc::new(ScrofaAgent::new(name, net, c).expect("default configs are valid")),
        None => Arc::new(RawNetAgent { evaluator: net }),
    })
}

pub fn needs_model(name: &str) -> bool {
    !BASELINE_NAMES.contains(&name)
}
