//! Separate-curvature greedy for the two-stage problem: discounted add and
//! swap gains, the surrogate potential, the k-round solve loop and the
//! approximation guarantee it certifies.

mod guarantee;

pub use guarantee::{
    certified_guarantee, gcg_guarantee, guarantee_report, guarantee_table, ls_guarantee, pure_guarantee, rg_guarantee,
    GuaranteeMode, GuaranteeReport, GuaranteeRow,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::submodular::{Decomposition, TssoProblem};
use crate::subset::Subset;

/// `(1 - p/k)^(k-j)`.
pub fn discount(p: f64, k: usize, j: usize) -> f64 {
    (1.0 - p / k as f64).powi((k - j.min(k)) as i32)
}

/// Per-round weights on the curvature part `g` and the modular part `c` of
/// a gain. SCG discounts only `g`; the baseline greedy variants use other
/// schedules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GainRule {
    /// `((1 - p/k)^(k-j), 1)`.
    Scg,
    /// `(1, 1)`: plain marginals of `f`.
    Plain,
    /// `((1 - 2/k)^(k-j), 1)`.
    Gpg,
    /// `((1 - (p+1)/k)^(k-j), (1 - p/k)^(k-j))`, clamped at zero.
    Gcg,
}

impl GainRule {
    pub fn factors(self, p: f64, k: usize, j: usize) -> (f64, f64) {
        let e = (k - j.min(k)) as i32;
        let kf = k as f64;
        match self {
            GainRule::Scg => (discount(p, k, j), 1.0),
            GainRule::Plain => (1.0, 1.0),
            GainRule::Gpg => ((1.0 - 2.0 / kf).max(0.0).powi(e), 1.0),
            GainRule::Gcg => ((1.0 - (p + 1.0) / kf).max(0.0).powi(e), (1.0 - p / kf).max(0.0).powi(e)),
        }
    }
}

fn add_gain_with(rule: GainRule, x: usize, t: &Subset, j: usize, i: usize, problem: &TssoProblem, dec: &Decomposition) -> f64 {
    let (dg, dc) = rule.factors(problem.p, problem.k, j);
    let dg_term = if dg == 0.0 { 0.0 } else { dg * (dec.g(problem, i, &t.with(x)) - dec.g(problem, i, t)) };
    dg_term + dc * dec.c1(i, x)
}

fn swap_gain_with(rule: GainRule, x: usize, y: usize, t: &Subset, j: usize, i: usize, problem: &TssoProblem, dec: &Decomposition) -> f64 {
    let (dg, dc) = rule.factors(problem.p, problem.k, j);
    let next = t.without(y).with(x);
    let dg_term = if dg == 0.0 { 0.0 } else { dg * (dec.g(problem, i, &next) - dec.g(problem, i, t)) };
    dg_term + dc * (dec.c1(i, x) - dec.c1(i, y))
}

/// Discounted gain of adding `x` to state `i`'s set `t` in round `j`.
pub fn discounted_add_gain(x: usize, t: &Subset, j: usize, i: usize, problem: &TssoProblem, dec: &Decomposition) -> f64 {
    let d = discount(problem.p, problem.k, j);
    d * (dec.g(problem, i, &t.with(x)) - dec.g(problem, i, t)) + dec.c1(i, x)
}

/// Discounted gain of replacing `y ∈ t` by `x ∉ t` in state `i`, round `j`.
pub fn swap_gain(x: usize, y: usize, t: &Subset, j: usize, i: usize, problem: &TssoProblem, dec: &Decomposition) -> f64 {
    let d = discount(problem.p, problem.k, j);
    let next = t.without(y).with(x);
    d * (dec.g(problem, i, &next) - dec.g(problem, i, t)) + dec.c1(i, x) - dec.c1(i, y)
}

/// What the gain rule does with candidate `x` in one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum StateMove {
    Add,
    Replace { removed: usize },
}

/// The dispatcher: the add gain while `t ∪ x` is feasible, otherwise the best
/// swap clamped at zero. Ties between swaps go to the smallest `y`.
pub fn dispatch_gain(x: usize, t: &Subset, j: usize, i: usize, problem: &TssoProblem, dec: &Decomposition) -> (f64, StateMove) {
    dispatch_with(GainRule::Scg, x, t, j, i, problem, dec)
}

fn dispatch_with(rule: GainRule, x: usize, t: &Subset, j: usize, i: usize, problem: &TssoProblem, dec: &Decomposition) -> (f64, StateMove) {
    if t.len() < problem.k_c2[i] {
        return (add_gain_with(rule, x, t, j, i, problem, dec), StateMove::Add);
    }
    let mut best: Option<(f64, usize)> = None;
    for y in t.iter() {
        let g = swap_gain_with(rule, x, y, t, j, i, problem, dec);
        if best.is_none_or(|(b, _)| g > b) {
            best = Some((g, y));
        }
    }
    match best {
        Some((g, y)) => (g.max(0.0), StateMove::Replace { removed: y }),
        None => (0.0, StateMove::Add),
    }
}

/// `Φ_j = Σ_i [(1 - p/k)^(k-j) g_i(T_i) + c_i(T_i)]`.
pub fn surrogate_phi(schedules: &[Subset], j: usize, problem: &TssoProblem, dec: &Decomposition) -> f64 {
    let d = discount(problem.p, problem.k, j);
    schedules
        .iter()
        .enumerate()
        .map(|(i, t)| d * dec.g(problem, i, t) + dec.c(i, t))
        .sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    /// Round index, starting at 1.
    pub round: usize,
    /// Element chosen this round (ground position).
    pub chosen: usize,
    pub gain_sum: f64,
    /// Per state: the move applied, or `None` when that state is unchanged.
    pub moves: Vec<Option<StateMove>>,
    /// Realized per-state gains (zero for unchanged states).
    pub gains: Vec<f64>,
    pub phi: f64,
    /// Schedules after this round.
    pub schedules: Vec<Subset>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DtrPlan {
    pub strategy: String,
    pub placement: Subset,
    pub schedules: Vec<Subset>,
    pub trace: Vec<TraceStep>,
    /// `F = (1/m) Σ_i f_i(T_i)`.
    pub value: f64,
    /// The loop ran out of positive gains before round `k`.
    pub stopped_early: bool,
}

impl DtrPlan {
    /// Plan with the given sets, valued on `problem`.
    pub fn from_sets(strategy: &str, problem: &TssoProblem, placement: Subset, schedules: Vec<Subset>) -> Self {
        let value = problem.mean_value(&schedules);
        Self { strategy: strategy.to_string(), placement, schedules, trace: Vec::new(), value, stopped_early: false }
    }

    pub fn is_feasible(&self, problem: &TssoProblem) -> bool {
        self.placement.len() <= problem.k
            && self.placement.is_subset(&problem.ground())
            && self.schedules.len() == problem.m()
            && self
                .schedules
                .iter()
                .zip(&problem.k_c2)
                .all(|(t, &kc)| t.is_subset(&self.placement) && t.len() <= kc)
    }

    /// Schedules before round `j` (1-based): `T^{j-1}`.
    pub fn schedules_before(&self, j: usize, m: usize) -> Vec<Subset> {
        if j <= 1 {
            vec![Subset::empty(); m]
        } else {
            self.trace[j - 2].schedules.clone()
        }
    }

    /// Both sides of the per-round potential recurrence
    /// `Φ_j - Φ_{j-1} = Σ_i [∇_i + (p/k)(1 - p/k)^(k-j) g_i(T_i^{j-1})]`.
    pub fn potential_identity(&self, problem: &TssoProblem, dec: &Decomposition) -> Vec<(f64, f64)> {
        let m = problem.m();
        let pk = problem.p / problem.k as f64;
        self.trace
            .iter()
            .map(|step| {
                let j = step.round;
                let before = self.schedules_before(j, m);
                let lhs = surrogate_phi(&step.schedules, j, problem, dec) - surrogate_phi(&before, j - 1, problem, dec);
                let d = discount(problem.p, problem.k, j);
                let rhs: f64 = (0..m)
                    .map(|i| step.gains[i] + pk * d * dec.g(problem, i, &before[i]))
                    .sum();
                (lhs, rhs)
            })
            .collect()
    }
}

/// Runs the separate-curvature greedy for up to `k` rounds.
pub fn solve_scg(problem: &TssoProblem, dec: &Decomposition) -> DtrPlan {
    solve_greedy(problem, dec, GainRule::Scg, "SCG")
}

/// The replacement greedy loop shared by SCG and its baseline variants.
pub fn solve_greedy(problem: &TssoProblem, dec: &Decomposition, rule: GainRule, name: &str) -> DtrPlan {
    let m = problem.m();
    let mut placement = Subset::empty();
    let mut schedules = vec![Subset::empty(); m];
    let mut trace = Vec::new();
    let mut stopped_early = false;

    for j in 1..=problem.k {
        let candidates: Vec<usize> = problem.ground().difference(&placement).to_vec();
        let scored: Vec<(f64, Vec<(f64, StateMove)>)> = candidates
            .par_iter()
            .map(|&x| {
                let per: Vec<_> = (0..m).map(|i| dispatch_with(rule, x, &schedules[i], j, i, problem, dec)).collect();
                (per.iter().map(|(g, _)| g).sum(), per)
            })
            .collect();
        let mut best: Option<usize> = None;
        for (idx, (sum, _)) in scored.iter().enumerate() {
            if best.is_none_or(|b| *sum > scored[b].0) {
                best = Some(idx);
            }
        }
        let Some(b) = best.filter(|&b| scored[b].0 > 0.0) else {
            stopped_early = true;
            break;
        };
        let x = candidates[b];
        let (gain_sum, per) = &scored[b];
        placement.insert(x);
        let mut moves = vec![None; m];
        let mut gains = vec![0.0; m];
        for (i, &(g, mv)) in per.iter().enumerate() {
            if g > 0.0 {
                if let StateMove::Replace { removed } = mv {
                    schedules[i].remove(removed);
                }
                schedules[i].insert(x);
                moves[i] = Some(mv);
                gains[i] = g;
            }
        }
        let (dg, dc) = rule.factors(problem.p, problem.k, j);
        let phi: f64 = schedules.iter().enumerate().map(|(i, t)| dg * dec.g(problem, i, t) + dc * dec.c(i, t)).sum();
        trace.push(TraceStep { round: j, chosen: x, gain_sum: *gain_sum, moves, gains, phi, schedules: schedules.clone() });
    }

    let value = problem.mean_value(&schedules);
    DtrPlan { strategy: name.into(), placement, schedules, trace, value, stopped_early }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submodular::synthetic::{random_instance, CoverageRisk};
    use crate::submodular::{brute_force_tsso, modular_decomposition, FnSet, SetFunction, DEFAULT_TSSO_BUDGET};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::sync::Arc;

    fn modular_problem(w: Vec<f64>, k: usize, kc: usize, p: f64) -> TssoProblem {
        let n = w.len();
        let f: Arc<dyn SetFunction> = Arc::new(FnSet(move |s: &Subset| s.iter().map(|x| w[x]).sum::<f64>()));
        TssoProblem::new((1..=n as u32).collect(), vec![f], k, vec![kc], p, Subset::full(n)).unwrap()
    }

    #[test]
    fn discount_boundaries() {
        assert_eq!(discount(1.0, 4, 4), 1.0);
        assert_eq!(discount(4.0, 4, 2), 0.0);
        assert_eq!(discount(4.0, 4, 4), 1.0);
        assert!((discount(1.0, 4, 2) - 0.5625).abs() < 1e-15);
    }

    #[test]
    fn gains_on_modular_function() {
        let p = modular_problem(vec![1.0, 5.0, 3.0, 2.0], 3, 2, 1.0);
        let d = modular_decomposition(&p);
        let t: Subset = [0].into_iter().collect();
        for j in 1..=3 {
            assert!((discounted_add_gain(2, &t, j, 0, &p, &d) - 3.0).abs() < 1e-12);
        }
        assert!(swap_gain(0, 0, &t, 1, 0, &p, &d).abs() < 1e-12);
        assert_eq!(dispatch_gain(2, &t, 1, 0, &p, &d), (discounted_add_gain(2, &t, 1, 0, &p, &d), StateMove::Add));
        let full: Subset = [1, 2].into_iter().collect();
        let (g, _) = dispatch_gain(0, &full, 1, 0, &p, &d);
        assert_eq!(g, 0.0);
        let (g, mv) = dispatch_gain(1, &[0, 2].into_iter().collect(), 1, 0, &p, &d);
        assert!((g - 4.0).abs() < 1e-12);
        assert_eq!(mv, StateMove::Replace { removed: 0 });
        assert_eq!(surrogate_phi(&[Subset::empty()], 0, &p, &d), 0.0);
    }

    #[test]
    fn modular_greedy_is_exact() {
        let p = modular_problem(vec![1.0, 5.0, 3.0, 2.0, 4.0], 3, 3, 1.0);
        let d = modular_decomposition(&p);
        let plan = solve_scg(&p, &d);
        assert_eq!(plan.placement.to_vec(), vec![1, 2, 4]);
        assert!((plan.value - 12.0).abs() < 1e-12);
        assert!(plan.is_feasible(&p));
        let last = plan.trace.last().unwrap();
        assert!((last.phi - p.mean_value(&plan.schedules)).abs() < 1e-12);
    }

    #[test]
    fn zero_problem_returns_empty_plan() {
        let f: Arc<dyn SetFunction> = Arc::new(FnSet(|_: &Subset| 0.0));
        let p = TssoProblem::new(vec![1, 2, 3], vec![f], 2, vec![1], 1.0, Subset::full(3)).unwrap();
        let plan = solve_scg(&p, &modular_decomposition(&p));
        assert!(plan.placement.is_empty() && plan.stopped_early);
        assert_eq!(plan.value, 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn potential_identity_and_feasibility(seed in any::<u64>(), n in 3usize..9, m in 1usize..4, k in 1usize..5, p_int in 1usize..3) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let k = k.min(n);
            let mut problem = random_instance(&mut rng, n, m, k, 3);
            problem.p = (p_int as f64).min(k as f64);
            let dec = modular_decomposition(&problem);
            let plan = solve_scg(&problem, &dec);
            prop_assert!(plan.is_feasible(&problem));
            for step in &plan.trace {
                for (t, &kc) in step.schedules.iter().zip(&problem.k_c2) {
                    prop_assert!(t.len() <= kc);
                }
            }
            for (lhs, rhs) in plan.potential_identity(&problem, &dec) {
                prop_assert!((lhs - rhs).abs() < 1e-9, "{lhs} vs {rhs}");
            }
            if let Some(last) = plan.trace.last() {
                if last.round == problem.k {
                    let total: f64 = (0..m).map(|i| problem.functions[i].value(&plan.schedules[i])).sum();
                    prop_assert!((last.phi - total).abs() < 1e-9);
                }
            }

            // Certified bound against the exact optimum.
            let best = brute_force_tsso(&problem, DEFAULT_TSSO_BUDGET).unwrap();
            let a = (1.0 - (-problem.p).exp()) / problem.p;
            let mut xi: f64 = 0.0;
            for j in 1..=plan.trace.len() {
                let before = plan.schedules_before(j, m);
                for i in 0..m {
                    let den = dec.c(i, &best.schedules[i]);
                    let num = dec.c(i, &before[i]);
                    if den > 0.0 { xi = xi.max(num / den); }
                }
            }
            if plan.trace.len() == problem.k {
                let lhs: f64 = (0..m).map(|i| problem.functions[i].value(&plan.schedules[i])).sum();
                let rhs: f64 = (0..m).map(|i| {
                    let c = dec.c(i, &best.schedules[i]);
                    let g = dec.g(&problem, i, &best.schedules[i]);
                    a * g + (1.0 - xi) * c
                }).sum();
                prop_assert!(lhs >= rhs - 1e-9, "{lhs} < {rhs}");
            }
        }
    }

    #[test]
    fn coverage_instance_reaches_optimum_fraction() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let f: Arc<dyn SetFunction> = Arc::new(CoverageRisk::random(&mut rng, 8, 10));
        let p = TssoProblem::new((1..=8).collect(), vec![f], 3, vec![2], 1.0, (0..4).collect()).unwrap();
        let plan = solve_scg(&p, &modular_decomposition(&p));
        let best = brute_force_tsso(&p, DEFAULT_TSSO_BUDGET).unwrap();
        assert!(plan.value <= best.value + 1e-12);
        assert!(plan.value >= (1.0 - (-1.0f64).exp()) * best.value);
    }
}
