//! Comparison strategies for the two-stage placement problem. Each returns a
//! [`DtrPlan`] under the same constraints as the separate-curvature greedy.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cascade::ChainDatabase;
use crate::grid::Network;
use crate::risk::{failure_probability, RiskError, RiskParams};
use crate::scg::{solve_greedy, DtrPlan, GainRule};
use crate::submodular::{
    evaluate_placement, modular_decomposition, Decomposition, SetFunction, SubmodularError, TssoProblem,
    TwoStageObjective,
};
use crate::subset::Subset;

pub const DEFAULT_LS_PASSES: usize = 50;
pub const DEFAULT_ONE_STAGE_K: usize = 5;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error(transparent)]
    Submodular(#[from] SubmodularError),
    #[error(transparent)]
    Risk(#[from] RiskError),
    #[error("strategy input mismatch: {0}")]
    Mismatch(String),
    #[error("unknown strategy `{0}`")]
    UnknownStrategy(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    /// Random lines.
    RL,
    /// Most frequently failing lines in the database.
    FR,
    /// Largest base-case flows.
    LPF,
    /// Highest post-contingency failure probability under N-1.
    LHF,
    /// Greedy on the exact two-stage objective.
    GS,
    /// Greedy on a modular surrogate built from singletons.
    MA,
    /// Single-swap local search.
    LS,
    /// Replacement greedy on plain marginals.
    RG,
    GPG,
    GCG,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 10] = [
        StrategyKind::RL,
        StrategyKind::FR,
        StrategyKind::LPF,
        StrategyKind::LHF,
        StrategyKind::GS,
        StrategyKind::MA,
        StrategyKind::LS,
        StrategyKind::RG,
        StrategyKind::GPG,
        StrategyKind::GCG,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::RL => "RL",
            StrategyKind::FR => "FR",
            StrategyKind::LPF => "LPF",
            StrategyKind::LHF => "LHF",
            StrategyKind::GS => "GS",
            StrategyKind::MA => "MA",
            StrategyKind::LS => "LS",
            StrategyKind::RG => "RG",
            StrategyKind::GPG => "GPG",
            StrategyKind::GCG => "GCG",
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = BaselineError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| BaselineError::UnknownStrategy(s.to_string()))
    }
}

/// Everything a strategy may look at. Ground position `e` of the problem is
/// line position `e` of the network.
#[derive(Clone, Copy)]
pub struct StrategyInputs<'a> {
    pub problem: &'a TssoProblem,
    pub database: &'a ChainDatabase,
    /// Unscaled network, used for the base-case and N-1 flows.
    pub network: &'a Network,
    pub params: &'a RiskParams,
    /// Used only by RL and the LS starting point.
    pub seed: u64,
    pub ls_passes: usize,
}

pub fn run_strategy(kind: StrategyKind, inputs: &StrategyInputs) -> Result<DtrPlan, BaselineError> {
    let problem = inputs.problem;
    let n = problem.n;
    if inputs.network.lines().len() != n || inputs.database.line_count != n {
        return Err(BaselineError::Mismatch(format!(
            "problem has {n} elements, network {} lines, database {} lines",
            inputs.network.lines().len(),
            inputs.database.line_count
        )));
    }
    if inputs.database.state_count() != problem.m() {
        return Err(BaselineError::Mismatch(format!(
            "problem has {} states, database {}",
            problem.m(),
            inputs.database.state_count()
        )));
    }
    let plan = match kind {
        StrategyKind::RL => {
            let mut rng = ChaCha8Rng::seed_from_u64(inputs.seed);
            let placement: Subset = sample(&mut rng, n, problem.k).into_iter().collect();
            index_plan(kind, problem, placement)?
        }
        StrategyKind::FR => {
            let counts: Vec<f64> = inputs.database.failure_counts().into_iter().map(|c| c as f64).collect();
            index_plan(kind, problem, top_k(&counts, problem.k))?
        }
        StrategyKind::LPF => {
            let scores = base_flow_scores(inputs.network);
            index_plan(kind, problem, top_k(&scores, problem.k))?
        }
        StrategyKind::LHF => {
            let scores = hidden_failure_scores(inputs.network, inputs.params)?;
            index_plan(kind, problem, top_k(&scores, problem.k))?
        }
        StrategyKind::GS => greedy_on_objective(problem),
        StrategyKind::MA => modular_approximation(problem),
        StrategyKind::LS => local_search(problem, inputs.seed, inputs.ls_passes)?,
        StrategyKind::RG => {
            let zero = Decomposition { weights: vec![vec![0.0; n]; problem.m()] };
            solve_greedy(problem, &zero, GainRule::Plain, kind.name())
        }
        StrategyKind::GPG | StrategyKind::GCG => {
            let global = problem.with_first_block(problem.ground());
            let dec = modular_decomposition(&global);
            let rule = if kind == StrategyKind::GPG { GainRule::Gpg } else { GainRule::Gcg };
            solve_greedy(&global, &dec, rule, kind.name())
        }
    };
    Ok(plan)
}

/// Positions of the `k` largest scores; ties go to the smaller position.
pub fn top_k(scores: &[f64], k: usize) -> Subset {
    ranking(scores).into_iter().take(k).collect()
}

/// Positions ordered by decreasing score, ties by position.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order
}

/// `|flow|` of every line in the intact network.
pub fn base_flow_scores(network: &Network) -> Vec<f64> {
    let n = network.lines().len();
    network.dc_flow_masked(&vec![false; n]).flows_mw.iter().map(|f| f.abs()).collect()
}

/// For every line, the largest failure probability it reaches over all
/// single-line outages of the intact network.
pub fn hidden_failure_scores(network: &Network, params: &RiskParams) -> Result<Vec<f64>, RiskError> {
    let lines = network.lines();
    let n = lines.len();
    let cases: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|out| {
            let mut mask = vec![false; n];
            mask[out] = true;
            network.dc_flow_masked(&mask).flows_mw
        })
        .collect();
    let mut scores = vec![0.0f64; n];
    for (out, flows) in cases.iter().enumerate() {
        for (e, line) in lines.iter().enumerate() {
            if e != out {
                scores[e] = scores[e].max(failure_probability(flows[e], line, params, false)?);
            }
        }
    }
    Ok(scores)
}

fn index_plan(kind: StrategyKind, problem: &TssoProblem, placement: Subset) -> Result<DtrPlan, BaselineError> {
    let sol = evaluate_placement(problem, &placement)?;
    Ok(DtrPlan::from_sets(kind.name(), problem, placement, sol.schedules))
}

/// Greedy per-state selection restricted to `placement`.
fn greedy_schedule(f: &dyn SetFunction, placement: &Subset, limit: usize) -> Subset {
    let mut t = Subset::empty();
    let mut current = f.value(&t);
    while t.len() < limit {
        let mut best: Option<(usize, f64)> = None;
        for x in placement.difference(&t).iter() {
            let v = f.value(&t.with(x));
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((x, v));
            }
        }
        match best {
            Some((x, v)) if v > current => {
                t.insert(x);
                current = v;
            }
            _ => break,
        }
    }
    t
}

fn greedy_on_objective(problem: &TssoProblem) -> DtrPlan {
    let objective = TwoStageObjective::new(problem);
    let mut placement = Subset::empty();
    let mut current = 0.0;
    let mut stopped_early = false;
    while placement.len() < problem.k {
        let candidates = problem.ground().difference(&placement).to_vec();
        let values: Vec<f64> = candidates.par_iter().map(|&x| objective.value(&placement.with(x))).collect();
        let mut best = 0;
        for (idx, &v) in values.iter().enumerate() {
            if v > values[best] {
                best = idx;
            }
        }
        if values[best] <= current {
            stopped_early = true;
            break;
        }
        placement.insert(candidates[best]);
        current = values[best];
    }
    let schedules = problem
        .functions
        .iter()
        .zip(&problem.k_c2)
        .map(|(f, &kc)| greedy_schedule(f.as_ref(), &placement, kc))
        .collect();
    let mut plan = DtrPlan::from_sets(StrategyKind::GS.name(), problem, placement, schedules);
    plan.stopped_early = stopped_early;
    plan
}

/// Best modular value of `placement` for one state: the `limit` largest
/// positive weights.
fn modular_best(weights: &[f64], placement: &Subset, limit: usize) -> (Subset, f64) {
    let mut members: Vec<usize> = placement.iter().filter(|&x| weights[x] > 0.0).collect();
    members.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]).then(a.cmp(&b)));
    members.truncate(limit);
    let value = members.iter().map(|&x| weights[x]).sum();
    (members.into_iter().collect(), value)
}

fn modular_approximation(problem: &TssoProblem) -> DtrPlan {
    let weights: Vec<Vec<f64>> = problem
        .functions
        .par_iter()
        .map(|f| (0..problem.n).map(|x| f.value(&Subset::singleton(x))).collect())
        .collect();
    let surrogate = |s: &Subset| -> f64 {
        weights.iter().zip(&problem.k_c2).map(|(w, &kc)| modular_best(w, s, kc).1).sum()
    };
    let mut placement = Subset::empty();
    let mut current = 0.0;
    let mut stopped_early = false;
    while placement.len() < problem.k {
        let mut best: Option<(usize, f64)> = None;
        for x in problem.ground().difference(&placement).iter() {
            let v = surrogate(&placement.with(x));
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((x, v));
            }
        }
        match best {
            Some((x, v)) if v > current => {
                placement.insert(x);
                current = v;
            }
            _ => {
                stopped_early = true;
                break;
            }
        }
    }
    let schedules = weights.iter().zip(&problem.k_c2).map(|(w, &kc)| modular_best(w, &placement, kc).0).collect();
    let mut plan = DtrPlan::from_sets(StrategyKind::MA.name(), problem, placement, schedules);
    plan.stopped_early = stopped_early;
    plan
}

/// Outcome of [`local_search`] besides the plan itself.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LocalSearchStats {
    pub passes: usize,
    /// The last pass found no improving swap.
    pub converged: bool,
}

fn local_search(problem: &TssoProblem, seed: u64, passes: usize) -> Result<DtrPlan, BaselineError> {
    let (plan, stats) = local_search_with_stats(problem, seed, passes)?;
    if !stats.converged {
        log::warn!("LS stopped after its pass budget of {passes} without reaching a local optimum");
    }
    Ok(plan)
}

/// Starts from the best single line plus `k - 1` random lines and applies
/// first-improvement single swaps on the exact objective.
pub fn local_search_with_stats(problem: &TssoProblem, seed: u64, passes: usize) -> Result<(DtrPlan, LocalSearchStats), BaselineError> {
    let objective = TwoStageObjective::new(problem);
    let ground = problem.ground();
    let singles: Vec<f64> = ground.to_vec().par_iter().map(|&x| objective.value(&Subset::singleton(x))).collect();
    let first = ranking(&singles)[0];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rest: Vec<usize> = ground.without(first).to_vec();
    let mut placement = Subset::singleton(first);
    for idx in sample(&mut rng, rest.len(), (problem.k - 1).min(rest.len())) {
        placement.insert(rest[idx]);
    }
    let mut current = objective.value(&placement);

    let mut stats = LocalSearchStats { passes: 0, converged: false };
    while stats.passes < passes {
        stats.passes += 1;
        let mut improved = false;
        for y in placement.to_vec() {
            if !placement.contains(y) {
                continue;
            }
            let outside = ground.difference(&placement).to_vec();
            let base = placement.without(y);
            let values: Vec<f64> = outside.par_iter().map(|&x| objective.value(&base.with(x))).collect();
            if let Some(idx) = values.iter().position(|&v| v > current) {
                placement = base.with(outside[idx]);
                current = values[idx];
                improved = true;
            }
        }
        if !improved {
            stats.converged = true;
            break;
        }
    }
    let sol = evaluate_placement(problem, &placement)?;
    let mut plan = DtrPlan::from_sets(StrategyKind::LS.name(), problem, placement, sol.schedules);
    plan.stopped_early = !stats.converged;
    Ok((plan, stats))
}

/// One-stage model: a single set of at most `k` lines operated in every
/// state, chosen greedily on the mean sub-function value. The schedules
/// equal the placement and ignore the per-state limits.
pub fn solve_one_stage(problem: &TssoProblem, k: usize) -> DtrPlan {
    let mean = |s: &Subset| problem.functions.iter().map(|f| f.value(s)).sum::<f64>() / problem.m() as f64;
    let mut placement = Subset::empty();
    let mut current = 0.0;
    let mut stopped_early = false;
    while placement.len() < k.min(problem.n) {
        let candidates = problem.ground().difference(&placement).to_vec();
        let values: Vec<f64> = candidates.par_iter().map(|&x| mean(&placement.with(x))).collect();
        let mut best = 0;
        for (idx, &v) in values.iter().enumerate() {
            if v > values[best] {
                best = idx;
            }
        }
        if values[best] <= current {
            stopped_early = true;
            break;
        }
        placement.insert(candidates[best]);
        current = values[best];
    }
    let mut plan = DtrPlan::from_sets("one-stage", problem, placement, vec![placement; problem.m()]);
    plan.stopped_early = stopped_early;
    plan
}
