//! Monte Carlo cascading-failure chains and the on-disk chain database.

mod store;

pub use store::{read_database, write_database, DATABASE_VERSION};

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{GridError, Network, SystemState};
use crate::risk::{line_sigmas, RiskError, RiskParams};
use crate::subset::{Subset, MAX_ELEMENTS};

pub const DEFAULT_D_MAX: usize = 20;

#[derive(Debug, Error)]
pub enum CascadeError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error("invalid database request: {0}")]
    Invalid(String),
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("database format: {0}")]
    Format(String),
    #[error("database version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
}

/// How the first outage of each chain is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum InitiationMode {
    /// One line drawn with probability proportional to its failure probability.
    #[default]
    Sampled,
    /// Chain `k` starts with line position `k mod |lines|`.
    NMinusOne,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BuildOptions {
    pub seed: u64,
    pub d_max: usize,
    pub initiation: InitiationMode,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self { seed: 42, d_max: DEFAULT_D_MAX, initiation: InitiationMode::Sampled }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRecord {
    /// Line positions failing in this generation, ascending.
    pub new_failures: Vec<u32>,
    /// All line positions out after this generation.
    pub cumulative: Subset,
    /// Flows (MW) per line position after this generation's outages.
    pub flows_mw: Vec<f64>,
}

impl GenerationRecord {
    /// Record with an empty cumulative set; [`FailureChain::from_records`] fills it in.
    pub fn new(new_failures: Vec<u32>, flows_mw: Vec<f64>) -> Self {
        Self { new_failures, cumulative: Subset::empty(), flows_mw }
    }
}

/// One sampled cascade. `records[0]` holds the initiating outage, each later
/// record one synchronous generation of flow-driven failures. A chain ends
/// with a generation that fails nothing, unless it hit the depth cap.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureChain {
    pub id: u32,
    pub state: usize,
    pub records: Vec<GenerationRecord>,
    /// Shed load (MW) after the last generation.
    pub load_loss_mw: f64,
    first_failure: Vec<u32>,
}

const NEVER: u32 = u32::MAX;

impl FailureChain {
    /// Assembles a chain, deriving cumulative sets and first-failure indices.
    pub fn from_records(id: u32, state: usize, mut records: Vec<GenerationRecord>, load_loss_mw: f64) -> Self {
        let lines = records.first().map_or(0, |r| r.flows_mw.len());
        let mut first_failure = vec![NEVER; lines];
        let mut cum = Subset::empty();
        for (i, r) in records.iter_mut().enumerate() {
            for &e in &r.new_failures {
                cum.insert(e as usize);
                if first_failure[e as usize] == NEVER {
                    first_failure[e as usize] = i as u32;
                }
            }
            r.cumulative = cum;
        }
        Self { id, state, records, load_loss_mw, first_failure }
    }

    /// Number of flow-driven generations `d`.
    pub fn depth(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    /// Generation in which line position `e` first failed.
    pub fn first_failure(&self, e: usize) -> Option<usize> {
        match self.first_failure[e] {
            NEVER => None,
            i => Some(i as usize),
        }
    }

    pub fn failed(&self) -> Subset {
        self.records.last().map(|r| r.cumulative).unwrap_or_default()
    }

    pub fn line_count(&self) -> usize {
        self.first_failure.len()
    }
}

/// Sub-databases of chains, one per system state, all sampled without DTR.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainDatabase {
    pub network_fingerprint: String,
    pub params_fingerprint: String,
    pub seed: u64,
    pub d_max: usize,
    pub initiation: InitiationMode,
    pub line_count: usize,
    states: Vec<Vec<FailureChain>>,
}

impl ChainDatabase {
    pub fn new(
        network_fingerprint: String,
        params_fingerprint: String,
        options: &BuildOptions,
        line_count: usize,
        states: Vec<Vec<FailureChain>>,
    ) -> Result<Self, CascadeError> {
        for (l, chains) in states.iter().enumerate() {
            if chains.is_empty() {
                return Err(CascadeError::Invalid(format!("state {l} has no chains")));
            }
            if let Some(c) = chains.iter().find(|c| c.state != l) {
                return Err(CascadeError::Invalid(format!("chain {} filed under state {l} belongs to state {}", c.id, c.state)));
            }
        }
        Ok(Self {
            network_fingerprint,
            params_fingerprint,
            seed: options.seed,
            d_max: options.d_max,
            initiation: options.initiation,
            line_count,
            states,
        })
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, l: usize) -> &[FailureChain] {
        &self.states[l]
    }

    pub fn states(&self) -> &[Vec<FailureChain>] {
        &self.states
    }

    pub fn chain_count(&self) -> usize {
        self.states.iter().map(Vec::len).sum()
    }

    /// Keeps the first `m` states and the first `per_state` chains of each.
    pub fn truncated(&self, m: usize, per_state: usize) -> Self {
        let mut out = self.clone();
        out.states.truncate(m);
        for s in &mut out.states {
            s.truncate(per_state);
        }
        out
    }

    /// Warning text when `network` is not the one the chains were sampled on.
    pub fn fingerprint_warning(&self, network: &Network) -> Option<String> {
        let fp = network.fingerprint();
        (fp != self.network_fingerprint).then(|| {
            format!(
                "database was generated for network {} but is being used with {}",
                &self.network_fingerprint[..12.min(self.network_fingerprint.len())],
                &fp[..12]
            )
        })
    }

    /// Number of chains in which each line position fails, over all states.
    pub fn failure_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.line_count];
        for c in self.states.iter().flatten() {
            for e in c.failed().iter() {
                counts[e] += 1;
            }
        }
        counts
    }
}

/// Samples one chain on `network` (already scaled to its state). Failure
/// probabilities always use the static thresholds.
pub fn simulate_chain(
    network: &Network,
    params: &RiskParams,
    rng: &mut impl Rng,
    initiating: Option<usize>,
    d_max: usize,
) -> Result<(Vec<GenerationRecord>, f64), CascadeError> {
    let sigmas = line_sigmas(network)?;
    let n = sigmas.len();
    let mut outaged = vec![false; n];
    let base = network.dc_flow_masked(&outaged);

    let first = match initiating {
        Some(e) => e,
        None => {
            let phis: Vec<f64> = (0..n).map(|e| params.phi(base.flows_mw[e], sigmas[e], 1.0)).collect();
            WeightedIndex::new(&phis)
                .map_err(|e| CascadeError::Invalid(format!("initiating weights: {e}")))?
                .sample(rng)
        }
    };
    outaged[first] = true;
    let mut flow = network.dc_flow_masked(&outaged);
    let mut records = vec![GenerationRecord::new(vec![first as u32], flow.flows_mw.clone())];

    while records.len() <= d_max {
        let mut new = Vec::new();
        for e in 0..n {
            if !outaged[e] {
                let phi = params.phi(flow.flows_mw[e], sigmas[e], 1.0);
                if rng.random::<f64>() < phi {
                    new.push(e as u32);
                }
            }
        }
        if new.is_empty() {
            records.push(GenerationRecord::new(new, flow.flows_mw.clone()));
            break;
        }
        for &e in &new {
            outaged[e as usize] = true;
        }
        flow = network.dc_flow_masked(&outaged);
        records.push(GenerationRecord::new(new, flow.flows_mw.clone()));
    }
    Ok((records, flow.shed_mw))
}

/// RNG stream of chain `k` in state `l`; independent of scheduling.
pub fn chain_rng(seed: u64, state: usize, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((state as u64) << 32) | chain as u64);
    rng
}

pub fn build_database(
    network: &Network,
    states: &[SystemState],
    chains_per_state: usize,
    params: &RiskParams,
    options: &BuildOptions,
) -> Result<ChainDatabase, CascadeError> {
    if chains_per_state == 0 {
        return Err(CascadeError::Invalid("chains_per_state must be at least 1".into()));
    }
    if states.is_empty() {
        return Err(CascadeError::Invalid("at least one system state is required".into()));
    }
    if network.lines().len() > MAX_ELEMENTS {
        return Err(CascadeError::Invalid(format!("more than {MAX_ELEMENTS} lines")));
    }
    if chains_per_state > u32::MAX as usize {
        return Err(CascadeError::Invalid("too many chains per state".into()));
    }
    let sampling = params.with_alpha(1.0);
    let n = network.lines().len();
    let mut all = Vec::with_capacity(states.len());
    for (l, state) in states.iter().enumerate() {
        let scaled = network.apply_state(state)?;
        let chains = (0..chains_per_state)
            .into_par_iter()
            .map(|k| {
                let mut rng = chain_rng(options.seed, l, k);
                let init = match options.initiation {
                    InitiationMode::Sampled => None,
                    InitiationMode::NMinusOne => Some(k % n),
                };
                let (records, y) = simulate_chain(&scaled, &sampling, &mut rng, init, options.d_max)?;
                Ok(FailureChain::from_records(k as u32, l, records, y))
            })
            .collect::<Result<Vec<_>, CascadeError>>()?;
        all.push(chains);
    }
    ChainDatabase::new(network.fingerprint(), params.sampling_fingerprint(), options, n, all)
}
