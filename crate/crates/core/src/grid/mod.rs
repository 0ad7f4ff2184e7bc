//! Network data, system states and DC power flow with island handling.

mod flow;
mod network;

pub use flow::{FlowSolution, IslandSummary};
pub use network::{Bus, Line, Network};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("network parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid network: {0}")]
    Invalid(String),
    #[error("{what} multipliers: expected {expected} entries, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("unknown line id {0}")]
    UnknownLine(u32),
    #[error("state durations sum to {0}, expected 1")]
    Durations(f64),
}

/// One operating condition of the planning horizon: per-bus load and
/// generation multipliers plus the fraction of time the system spends in it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemState {
    pub index: usize,
    pub load_multipliers: Vec<f64>,
    pub gen_multipliers: Vec<f64>,
    pub duration: f64,
}

impl SystemState {
    pub fn uniform(index: usize, buses: usize, load: f64, gen: f64, duration: f64) -> Self {
        Self {
            index,
            load_multipliers: vec![load; buses],
            gen_multipliers: vec![gen; buses],
            duration,
        }
    }
}

/// Checks that the duration weights of `states` sum to one within 1e-12.
pub fn check_durations(states: &[SystemState]) -> Result<(), GridError> {
    let total: f64 = states.iter().map(|s| s.duration).sum();
    if (total - 1.0).abs() > 1e-12 || states.iter().any(|s| !(s.duration >= 0.0)) {
        return Err(GridError::Durations(total));
    }
    Ok(())
}
