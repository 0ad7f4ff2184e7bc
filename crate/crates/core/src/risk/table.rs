use crate::cascade::FailureChain;
use crate::grid::Network;
use crate::submodular::SetFunction;
use crate::subset::Subset;

use super::{ln_h, line_sigmas, RiskError, RiskParams};

/// Precomputed per-chain log weight ratios for one state, so that the
/// sub-function of any DTR set is a weighted sum over the chains that exceed
/// the load-loss threshold.
///
/// Chains with `Y <= Y_ext` contribute nothing to any term and are dropped.
#[derive(Debug, Clone)]
pub struct StateRiskTable {
    lines: usize,
    chains_total: usize,
    /// `Y_k`, one per retained chain.
    loss: Vec<f64>,
    /// Row-major `ln H'(e) - ln H(e)` per retained chain and line position.
    log_ratio: Vec<f64>,
    signed_eta: f64,
    reference: Subset,
    reference_weights: Vec<f64>,
}

impl StateRiskTable {
    pub fn build(chains: &[FailureChain], network: &Network, params: &RiskParams) -> Result<Self, RiskError> {
        if chains.is_empty() {
            return Err(RiskError::EmptyDatabase);
        }
        let sigmas = line_sigmas(network)?;
        let n = sigmas.len();
        let mut loss = Vec::new();
        let mut log_ratio = Vec::new();
        for c in chains.iter().filter(|c| c.load_loss_mw > params.y_ext) {
            loss.push(c.load_loss_mw);
            for (e, &sigma) in sigmas.iter().enumerate() {
                let raw = ln_h(c, e, sigma, params, 1.0);
                let dtr = ln_h(c, e, sigma, params, params.alpha);
                if !raw.is_finite() || !dtr.is_finite() {
                    return Err(RiskError::ZeroWeight { state: c.state, chain: c.id, line: e });
                }
                log_ratio.push(dtr - raw);
            }
        }
        let reference_weights = vec![1.0; loss.len()];
        Ok(Self {
            lines: n,
            chains_total: chains.len(),
            loss,
            log_ratio,
            signed_eta: params.bpi_sign.factor() * params.eta,
            reference: Subset::empty(),
            reference_weights,
        })
    }

    /// Copy whose BPI term is measured from `reference` instead of the empty set.
    pub fn with_reference(&self, reference: Subset) -> Self {
        let mut out = self.clone();
        out.reference_weights = (0..self.loss.len()).map(|k| self.weight(k, &reference)).collect();
        out.reference = reference;
        out
    }

    pub fn reference(&self) -> &Subset {
        &self.reference
    }

    pub fn line_count(&self) -> usize {
        self.lines
    }

    /// Number of chains above the threshold.
    pub fn critical_chains(&self) -> usize {
        self.loss.len()
    }

    #[inline]
    fn weight(&self, k: usize, dtr: &Subset) -> f64 {
        let row = &self.log_ratio[k * self.lines..(k + 1) * self.lines];
        dtr.iter().map(|e| row[e]).sum::<f64>().exp()
    }

    /// `RiskW` with no DTR.
    pub fn base_risk(&self) -> f64 {
        // Summed term by term exactly as in `terms`, so that unit weights
        // reproduce it bit for bit.
        let m = self.chains_total as f64;
        self.loss.iter().map(|y| y / m).sum()
    }

    pub fn risk(&self, dtr: &Subset) -> f64 {
        self.terms(dtr).0
    }

    pub fn bpi(&self, dtr: &Subset) -> f64 {
        self.terms(dtr).1
    }

    /// `(RiskW_B, BPI)` in one pass.
    fn terms(&self, dtr: &Subset) -> (f64, f64) {
        let m = self.chains_total as f64;
        let mut risk = 0.0;
        let mut bpi = 0.0;
        for k in 0..self.loss.len() {
            let w = self.weight(k, dtr);
            let y = self.loss[k] / m;
            risk += w * y;
            bpi += ((w - self.reference_weights[k]) * y).max(0.0);
        }
        (risk, bpi)
    }
}

impl SetFunction for StateRiskTable {
    fn value(&self, set: &Subset) -> f64 {
        if set.is_empty() && self.reference.is_empty() {
            return 0.0;
        }
        let (risk, bpi) = self.terms(set);
        self.base_risk() - risk + self.signed_eta * bpi
    }
}
