//! Line failure probabilities, chain probabilities, DTR reweighting and the
//! per-state risk-mitigation objective.

mod table;

pub use table::StateRiskTable;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::cascade::FailureChain;
use crate::grid::{Line, Network};
use crate::subset::Subset;

/// Largest admissible `pr_max`; keeps every survival factor strictly positive.
pub const PR_MAX_CAP: f64 = 1.0 - 1e-9;

#[derive(Debug, Error)]
pub enum RiskError {
    #[error("invalid risk parameters: {0}")]
    InvalidParams(String),
    #[error("line {0} has P_min + P_max = 0")]
    DegenerateLine(u32),
    #[error("zero H factor for line position {line} in chain {chain} of state {state}")]
    ZeroWeight { state: usize, chain: u32, line: usize },
    #[error("empty sub-database")]
    EmptyDatabase,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum BpiSign {
    #[default]
    Plus,
    Minus,
}

impl BpiSign {
    pub fn factor(self) -> f64 {
        match self {
            BpiSign::Plus => 1.0,
            BpiSign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskParams {
    pub pr_min: f64,
    pub pr_max: f64,
    /// Sigmoid sharpness.
    pub mu: f64,
    /// DTR improvement factor on the transfer threshold.
    pub alpha: f64,
    /// Load-loss threshold (MW) above which a chain counts towards risk.
    pub y_ext: f64,
    pub eta: f64,
    pub bpi_sign: BpiSign,
}

impl Default for RiskParams {
    fn default() -> Self {
        Self {
            pr_min: 0.01,
            pr_max: 0.9,
            mu: 10.0,
            alpha: 1.05,
            y_ext: 1000.0,
            eta: 0.5,
            bpi_sign: BpiSign::Plus,
        }
    }
}

impl RiskParams {
    /// Validates the invariants, capping `pr_max` at [`PR_MAX_CAP`].
    pub fn validated(mut self) -> Result<Self, RiskError> {
        let bad = |m: String| Err(RiskError::InvalidParams(m));
        if !(self.pr_min >= 0.0 && self.pr_min < self.pr_max && self.pr_max <= 1.0) {
            return bad(format!("need 0 <= pr_min < pr_max <= 1, got {} and {}", self.pr_min, self.pr_max));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return bad(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.alpha >= 1.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be >= 1, got {}", self.alpha));
        }
        if !(self.eta > 0.0 && self.eta <= 1.0) {
            return bad(format!("eta must lie in (0, 1], got {}", self.eta));
        }
        if !(self.y_ext >= 0.0 && self.y_ext.is_finite()) {
            return bad(format!("y_ext must be finite and >= 0, got {}", self.y_ext));
        }
        if self.pr_max > PR_MAX_CAP {
            log::warn!("pr_max {} capped at {PR_MAX_CAP}", self.pr_max);
            self.pr_max = PR_MAX_CAP;
        }
        Ok(self)
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        Self { alpha, ..self }
    }

    /// Hash of the fields that shape sampled chains.
    pub fn sampling_fingerprint(&self) -> String {
        let canonical = serde_json::json!({
            "pr_min": self.pr_min,
            "pr_max": self.pr_max,
            "mu": self.mu,
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }

    /// Sigmoid failure probability for `|flow|` against threshold sum
    /// `sigma = P_min + P_max` scaled by `alpha`.
    #[inline]
    pub(crate) fn phi(&self, flow_mw: f64, sigma: f64, alpha: f64) -> f64 {
        let mid = alpha * sigma;
        let z = -self.mu * (2.0 * flow_mw.abs() - mid) / mid;
        self.pr_min + (self.pr_max - self.pr_min) / (1.0 + z.exp())
    }
}

/// Failure probability of `line` carrying `flow_mw`. With `with_dtr` the
/// threshold is scaled by `params.alpha`.
pub fn failure_probability(flow_mw: f64, line: &Line, params: &RiskParams, with_dtr: bool) -> Result<f64, RiskError> {
    let sigma = line.p_min_mw + line.p_max_mw;
    if sigma == 0.0 {
        return Err(RiskError::DegenerateLine(line.id));
    }
    let alpha = if with_dtr { params.alpha } else { 1.0 };
    Ok(params.phi(flow_mw, sigma, alpha))
}

/// Per-line threshold sums `P_min + P_max`.
pub(crate) fn line_sigmas(network: &Network) -> Result<Vec<f64>, RiskError> {
    network
        .lines()
        .iter()
        .map(|l| {
            let s = l.p_min_mw + l.p_max_mw;
            if s == 0.0 {
                Err(RiskError::DegenerateLine(l.id))
            } else {
                Ok(s)
            }
        })
        .collect()
}

/// `ln H` for line position `e`: the log-probability of the line's own
/// history along the chain (failing exactly at its recorded generation, or
/// surviving every step). The initiating outage is exogenous and gets 0.
pub(crate) fn ln_h(chain: &FailureChain, e: usize, sigma: f64, params: &RiskParams, alpha: f64) -> f64 {
    let d = chain.depth();
    let de = chain.first_failure(e);
    if de == Some(0) {
        return 0.0;
    }
    let last = de.unwrap_or(d);
    let mut acc = 0.0;
    for i in 1..=last {
        let phi = params.phi(chain.records[i - 1].flows_mw[e], sigma, alpha);
        acc += if Some(i) == de { phi.ln() } else { (-phi).ln_1p() };
    }
    acc
}

/// Factor `H` of line position `e` along `chain`: the probability of its outcome in every generation.
pub fn h_factor(chain: &FailureChain, e: usize, network: &Network, params: &RiskParams, with_dtr: bool) -> Result<f64, RiskError> {
    let line = &network.lines()[e];
    let sigma = line.p_min_mw + line.p_max_mw;
    if sigma == 0.0 {
        return Err(RiskError::DegenerateLine(line.id));
    }
    let alpha = if with_dtr { params.alpha } else { 1.0 };
    Ok(ln_h(chain, e, sigma, params, alpha).exp())
}

/// Probability of the endogenous part of `chain` when the lines in `dtr`
/// (positions) operate under DTR. Computed generation by generation,
/// independently of [`h_factor`].
pub fn chain_probability(chain: &FailureChain, dtr: &Subset, network: &Network, params: &RiskParams) -> Result<f64, RiskError> {
    let sigmas = line_sigmas(network)?;
    let mut p = 1.0;
    for i in 1..=chain.depth() {
        let exposure = &chain.records[i - 1];
        let new = &chain.records[i].new_failures;
        for (e, &sigma) in sigmas.iter().enumerate() {
            if exposure.cumulative.contains(e) {
                continue;
            }
            let alpha = if dtr.contains(e) { params.alpha } else { 1.0 };
            let phi = params.phi(exposure.flows_mw[e], sigma, alpha);
            p *= if new.contains(&(e as u32)) { phi } else { 1.0 - phi };
        }
    }
    Ok(p)
}

/// Likelihood ratio `fp_A / fp_B` of `chain` between DTR sets `a` and `b`.
pub fn sampling_weight(chain: &FailureChain, a: &Subset, b: &Subset, network: &Network, params: &RiskParams) -> Result<f64, RiskError> {
    let sigmas = line_sigmas(network)?;
    let mut w = 1.0;
    for (e, dtr_num) in a.difference(b).iter().map(|e| (e, true)).chain(b.difference(a).iter().map(|e| (e, false))) {
        let h_dtr = ln_h(chain, e, sigmas[e], params, params.alpha).exp();
        let h_raw = ln_h(chain, e, sigmas[e], params, 1.0).exp();
        let (num, den) = if dtr_num { (h_dtr, h_raw) } else { (h_raw, h_dtr) };
        if den == 0.0 {
            return Err(RiskError::ZeroWeight { state: chain.state, chain: chain.id, line: e });
        }
        w *= num / den;
    }
    Ok(w)
}

/// Per-chain and aggregate quantities of one state's sub-function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskBreakdown {
    /// `W_{B-∅}` per chain.
    pub weights: Vec<f64>,
    /// `W · Y · δ(Y > Y_ext) / |M|` per chain.
    pub contributions: Vec<f64>,
    pub base_risk: f64,
    pub risk: f64,
    pub bpi: f64,
    pub value: f64,
}

fn contributions(chains: &[FailureChain], dtr: &Subset, network: &Network, params: &RiskParams) -> Result<(Vec<f64>, Vec<f64>), RiskError> {
    if chains.is_empty() {
        return Err(RiskError::EmptyDatabase);
    }
    let m = chains.len() as f64;
    let empty = Subset::empty();
    let mut weights = Vec::with_capacity(chains.len());
    let mut contrib = Vec::with_capacity(chains.len());
    for c in chains {
        let w = sampling_weight(c, dtr, &empty, network, params)?;
        let y = if c.load_loss_mw > params.y_ext { c.load_loss_mw } else { 0.0 };
        weights.push(w);
        contrib.push(w * y / m);
    }
    Ok((weights, contrib))
}

/// Weighted state risk `RiskW_B`.
pub fn state_risk(chains: &[FailureChain], dtr: &Subset, network: &Network, params: &RiskParams) -> Result<f64, RiskError> {
    Ok(contributions(chains, dtr, network, params)?.1.iter().sum())
}

/// Braess paradox indicator: summed per-chain risk increases from `prev` to `next`.
pub fn braess_indicator(chains: &[FailureChain], prev: &Subset, next: &Subset, network: &Network, params: &RiskParams) -> Result<f64, RiskError> {
    let (_, a) = contributions(chains, prev, network, params)?;
    let (_, b) = contributions(chains, next, network, params)?;
    Ok(a.iter().zip(&b).map(|(ra, rb)| (rb - ra).max(0.0)).sum())
}

/// Sub-function value of DTR set `dtr` with BPI measured from `reference`.
pub fn subfunction_value(
    chains: &[FailureChain],
    dtr: &Subset,
    reference: &Subset,
    network: &Network,
    params: &RiskParams,
) -> Result<RiskBreakdown, RiskError> {
    let (_, base) = contributions(chains, &Subset::empty(), network, params)?;
    let (_, refc) = contributions(chains, reference, network, params)?;
    let (weights, contrib) = contributions(chains, dtr, network, params)?;
    let base_risk: f64 = base.iter().sum();
    let risk: f64 = contrib.iter().sum();
    let bpi: f64 = refc.iter().zip(&contrib).map(|(ra, rb)| (rb - ra).max(0.0)).sum();
    Ok(RiskBreakdown {
        value: base_risk - risk + params.bpi_sign.factor() * params.eta * bpi,
        weights,
        contributions: contrib,
        base_risk,
        risk,
        bpi,
    })
}
