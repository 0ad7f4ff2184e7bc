//! Small random set functions with known structure, used as test fixtures
//! and as brute-force-sized benchmark instances.

use std::sync::Arc;

use rand::Rng;

use super::{SetFunction, TssoProblem};
use crate::subset::Subset;

/// `y(T) = Π_{e∈T} r_e` with `r_e ∈ (0, 1]`: a multiplicative, decreasing
/// function of the kind that arises from independent survival factors.
#[derive(Debug, Clone)]
pub struct MarkovDecreasing {
    pub factors: Vec<f64>,
}

impl MarkovDecreasing {
    pub fn random(rng: &mut impl Rng, n: usize) -> Self {
        Self { factors: (0..n).map(|_| rng.random_range(0.05..0.99)).collect() }
    }
}

impl SetFunction for MarkovDecreasing {
    fn value(&self, set: &Subset) -> f64 {
        set.iter().map(|e| self.factors[e]).product()
    }
}

/// Risk-style mitigation function
/// `f(T) = Σ_k Y_k (1 - Π_{e∈T} w_{k,e})` with `w ∈ (0, 1]`,
/// monotone submodular with `f(∅) = 0`.
#[derive(Debug, Clone)]
pub struct CoverageRisk {
    pub losses: Vec<f64>,
    /// Row-major `w_{k,e}`.
    pub factors: Vec<f64>,
    pub n: usize,
}

impl CoverageRisk {
    pub fn random(rng: &mut impl Rng, n: usize, chains: usize) -> Self {
        let losses = (0..chains).map(|_| rng.random_range(1.0..10.0)).collect();
        let factors = (0..chains * n)
            .map(|_| if rng.random_bool(0.5) { 1.0 } else { rng.random_range(0.2..0.95) })
            .collect();
        Self { losses, factors, n }
    }
}

impl SetFunction for CoverageRisk {
    fn value(&self, set: &Subset) -> f64 {
        self.losses
            .iter()
            .enumerate()
            .map(|(k, y)| {
                let row = &self.factors[k * self.n..(k + 1) * self.n];
                y * (1.0 - set.iter().map(|e| row[e]).product::<f64>())
            })
            .sum()
    }
}

/// Random two-stage instance with `m` coverage-risk sub-functions over `n`
/// elements. The first partition block holds the lower half of positions.
pub fn random_instance(rng: &mut impl Rng, n: usize, m: usize, k: usize, max_kc2: usize) -> TssoProblem {
    let functions: Vec<Arc<dyn SetFunction>> = (0..m)
        .map(|_| Arc::new(CoverageRisk::random(rng, n, 2 * n)) as Arc<dyn SetFunction>)
        .collect();
    let k_c2 = (0..m).map(|_| rng.random_range(1..=max_kc2.min(k))).collect();
    let first: Subset = (0..n.div_ceil(2)).collect();
    TssoProblem::new((1..=n as u32).collect(), functions, k, k_c2, 1.0, first).expect("valid synthetic instance")
}
