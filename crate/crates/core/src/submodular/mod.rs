//! Set-function machinery shared by the solvers: problem definition,
//! curvature, the separate modular decomposition, brute-force oracles and an
//! exhaustive submodularity checker.

mod check;
pub mod synthetic;

pub use check::{check_submodularity, CheckMode, Violation};

use std::sync::Arc;

use dashmap::DashMap;
use rayon::prelude::*;
use thiserror::Error;

use crate::subset::{Subset, MAX_ELEMENTS};

#[derive(Debug, Error, PartialEq)]
pub enum SubmodularError {
    #[error("invalid problem: {0}")]
    InvalidProblem(String),
    #[error("curvature undefined: every singleton value is zero")]
    UndefinedCurvature,
    #[error("partition block {0} is empty")]
    EmptyBlock(&'static str),
    #[error("{what} of size {size} exceeds the enumeration guard {limit}")]
    Guard { what: &'static str, size: u128, limit: u128 },
    #[error("zero denominator in general sampling weight")]
    ZeroDenominator,
}

/// An evaluation oracle over subsets of ground positions.
pub trait SetFunction: Send + Sync {
    fn value(&self, set: &Subset) -> f64;
}

impl<T: SetFunction + ?Sized> SetFunction for Arc<T> {
    fn value(&self, set: &Subset) -> f64 {
        (**self).value(set)
    }
}

impl<T: SetFunction + ?Sized> SetFunction for &T {
    fn value(&self, set: &Subset) -> f64 {
        (**self).value(set)
    }
}

/// Wraps a closure as a set function.
pub struct FnSet<F>(pub F);

impl<F: Fn(&Subset) -> f64 + Send + Sync> SetFunction for FnSet<F> {
    fn value(&self, set: &Subset) -> f64 {
        (self.0)(set)
    }
}

/// Caches every value the inner oracle returns.
pub struct Memoized<F> {
    inner: F,
    cache: DashMap<Subset, f64>,
}

impl<F: SetFunction> Memoized<F> {
    pub fn new(inner: F) -> Self {
        Self { inner, cache: DashMap::new() }
    }

    pub fn cached(&self) -> usize {
        self.cache.len()
    }
}

impl<F: SetFunction> SetFunction for Memoized<F> {
    fn value(&self, set: &Subset) -> f64 {
        if let Some(v) = self.cache.get(set) {
            return *v;
        }
        let v = self.inner.value(set);
        self.cache.insert(*set, v);
        v
    }
}

/// `f(x | base) = f(base ∪ x) - f(base)`.
pub fn marginal(f: &dyn SetFunction, x: usize, base: &Subset) -> f64 {
    f.value(&base.with(x)) - f.value(base)
}

/// Two-stage problem: choose `S` with `|S| <= k` from the ground set, then for
/// every state `i` a subset `T_i ⊆ S` with `|T_i| <= k_c2[i]`.
#[derive(Clone)]
pub struct TssoProblem {
    /// Ground elements are positions `0..n`.
    pub n: usize,
    /// External id of each position (line ids), used only for reporting.
    pub labels: Vec<u32>,
    pub functions: Vec<Arc<dyn SetFunction>>,
    pub k: usize,
    pub k_c2: Vec<usize>,
    /// Number of second-stage constraints, used in discounts and guarantees.
    pub p: f64,
    pub first_block: Subset,
}

impl TssoProblem {
    pub fn new(
        labels: Vec<u32>,
        functions: Vec<Arc<dyn SetFunction>>,
        k: usize,
        k_c2: Vec<usize>,
        p: f64,
        first_block: Subset,
    ) -> Result<Self, SubmodularError> {
        let n = labels.len();
        let bad = |m: String| Err(SubmodularError::InvalidProblem(m));
        if n == 0 || n > MAX_ELEMENTS {
            return bad(format!("ground set size {n} must lie in 1..={MAX_ELEMENTS}"));
        }
        if functions.is_empty() {
            return bad("at least one sub-function is required".into());
        }
        if k_c2.len() != functions.len() {
            return bad(format!("{} second-stage limits for {} sub-functions", k_c2.len(), functions.len()));
        }
        if k == 0 || k > n {
            return bad(format!("k = {k} must lie in 1..={n}"));
        }
        if let Some((i, &kc)) = k_c2.iter().enumerate().find(|(_, &kc)| kc == 0 || kc > k) {
            return bad(format!("k_c2[{i}] = {kc} must lie in 1..={k}"));
        }
        if !(p >= 1.0 && p <= k as f64) {
            return bad(format!("p = {p} must lie in [1, k]"));
        }
        if !first_block.is_subset(&Subset::full(n)) {
            return bad("first partition block leaves the ground set".into());
        }
        Ok(Self { n, labels, functions, k, k_c2, p, first_block })
    }

    pub fn m(&self) -> usize {
        self.functions.len()
    }

    pub fn ground(&self) -> Subset {
        Subset::full(self.n)
    }

    pub fn second_block(&self) -> Subset {
        self.ground().difference(&self.first_block)
    }

    /// Same problem with a different partition.
    pub fn with_first_block(&self, first_block: Subset) -> Self {
        Self { first_block, ..self.clone() }
    }

    /// Same problem with every sub-function memoized.
    pub fn memoized(&self) -> Self {
        let functions = self
            .functions
            .iter()
            .map(|f| Arc::new(Memoized::new(f.clone())) as Arc<dyn SetFunction>)
            .collect();
        Self { functions, ..self.clone() }
    }

    pub fn labels_of(&self, set: &Subset) -> Vec<u32> {
        set.iter().map(|e| self.labels[e]).collect()
    }

    /// `F(S) = (1/m) Σ_i f_i(T_i)` for explicit schedules.
    pub fn mean_value(&self, schedules: &[Subset]) -> f64 {
        self.functions.iter().zip(schedules).map(|(f, t)| f.value(t)).sum::<f64>() / self.m() as f64
    }
}

/// Total curvature of `f` over `ground`. Elements with non-positive singleton
/// gain are skipped with a warning.
pub fn curvature(f: &dyn SetFunction, ground: &Subset) -> Result<f64, SubmodularError> {
    let empty = f.value(&Subset::empty());
    let full = f.value(ground);
    let mut min_ratio = f64::INFINITY;
    for j in ground.iter() {
        let single = f.value(&Subset::singleton(j)) - empty;
        if !(single > 0.0) {
            log::warn!("curvature: element {j} has singleton gain {single}, skipped");
            continue;
        }
        let last = full - f.value(&ground.without(j));
        min_ratio = min_ratio.min(last / single);
    }
    if min_ratio.is_infinite() {
        return Err(SubmodularError::UndefinedCurvature);
    }
    Ok(1.0 - min_ratio)
}

/// Separate curvatures of one sub-function over the two partition blocks.
/// An empty second block contributes curvature 0.
pub fn separate_curvatures(f: &dyn SetFunction, problem: &TssoProblem) -> Result<(f64, f64), SubmodularError> {
    if problem.first_block.is_empty() {
        return Err(SubmodularError::EmptyBlock("S_L1"));
    }
    let k1 = curvature(f, &problem.first_block)?;
    let second = problem.second_block();
    let k2 = if second.is_empty() {
        0.0
    } else {
        match curvature(f, &second) {
            Ok(k) => k,
            Err(SubmodularError::UndefinedCurvature) => 0.0,
            Err(e) => return Err(e),
        }
    };
    Ok((k1, k2))
}

/// Aggregate separate curvatures: the largest value over all sub-functions
/// that admit one, clamped to `[0, 1]`.
pub fn problem_curvatures(problem: &TssoProblem) -> Result<(f64, f64), SubmodularError> {
    let per: Vec<_> = problem
        .functions
        .par_iter()
        .map(|f| separate_curvatures(f.as_ref(), problem))
        .collect();
    let mut k1 = f64::NEG_INFINITY;
    let mut k2 = 0.0f64;
    for r in per {
        match r {
            Ok((a, b)) => {
                k1 = k1.max(a);
                k2 = k2.max(b);
            }
            Err(SubmodularError::UndefinedCurvature) => {}
            Err(e) => return Err(e),
        }
    }
    if k1.is_infinite() {
        return Err(SubmodularError::UndefinedCurvature);
    }
    let clamp = |k: f64, name: &str| {
        if !(0.0..=1.0).contains(&k) {
            log::warn!("{name} = {k} outside [0, 1], clamped");
        }
        k.clamp(0.0, 1.0)
    };
    Ok((clamp(k1, "kappa_f1"), clamp(k2, "kappa_f2")))
}

/// Modular weights `c_i(x) = f_i(x | block(x) \ x)` per sub-function.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    /// `weights[i][x]`.
    pub weights: Vec<Vec<f64>>,
}

impl Decomposition {
    pub fn c(&self, i: usize, set: &Subset) -> f64 {
        set.iter().map(|x| self.weights[i][x]).sum()
    }

    pub fn c1(&self, i: usize, x: usize) -> f64 {
        self.weights[i][x]
    }

    /// `g_i(T) = f_i(T) - c_i(T)`.
    pub fn g(&self, problem: &TssoProblem, i: usize, set: &Subset) -> f64 {
        problem.functions[i].value(set) - self.c(i, set)
    }
}

pub fn modular_decomposition(problem: &TssoProblem) -> Decomposition {
    let first = problem.first_block;
    let second = problem.second_block();
    let weights = problem
        .functions
        .par_iter()
        .map(|f| {
            let f1 = f.value(&first);
            let f2 = f.value(&second);
            (0..problem.n)
                .map(|x| {
                    if first.contains(x) {
                        f1 - f.value(&first.without(x))
                    } else {
                        f2 - f.value(&second.without(x))
                    }
                })
                .collect()
        })
        .collect();
    Decomposition { weights }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of subsets of an `n`-set with at most `k` elements.
pub fn subsets_up_to_count(n: usize, k: usize) -> u128 {
    (0..=k.min(n)).map(|j| binomial(n, j)).sum()
}

pub const INNER_GUARD: usize = 20;
pub const DEFAULT_TSSO_BUDGET: u128 = 50_000_000;

/// Best `T ⊆ feasible` with `|T| <= k`; ties go to the lexicographically
/// smallest set.
pub fn brute_force_inner(f: &dyn SetFunction, feasible: &Subset, k: usize) -> Result<(Subset, f64), SubmodularError> {
    if feasible.len() > INNER_GUARD {
        return Err(SubmodularError::Guard {
            what: "feasible set",
            size: feasible.len() as u128,
            limit: INNER_GUARD as u128,
        });
    }
    let mut best = (Subset::empty(), f.value(&Subset::empty()));
    for t in feasible.subsets_up_to(k).into_iter().skip(1) {
        let v = f.value(&t);
        if v > best.1 {
            best = (t, v);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageSolution {
    pub placement: Subset,
    pub value: f64,
    pub schedules: Vec<Subset>,
}

/// Evaluates `F(S)` exactly by solving every inner problem by enumeration.
pub fn evaluate_placement(problem: &TssoProblem, placement: &Subset) -> Result<TwoStageSolution, SubmodularError> {
    let mut schedules = Vec::with_capacity(problem.m());
    let mut total = 0.0;
    for (f, &kc) in problem.functions.iter().zip(&problem.k_c2) {
        let (t, v) = brute_force_inner(f.as_ref(), placement, kc)?;
        schedules.push(t);
        total += v;
    }
    Ok(TwoStageSolution { placement: *placement, value: total / problem.m() as f64, schedules })
}

/// Exact optimum of the two-stage problem by full enumeration of placements
/// of size `min(k, n)` (the objective is monotone in the placement).
pub fn brute_force_tsso(problem: &TssoProblem, budget: u128) -> Result<TwoStageSolution, SubmodularError> {
    let k = problem.k.min(problem.n);
    let outer = binomial(problem.n, k);
    let inner: u128 = problem.k_c2.iter().map(|&kc| subsets_up_to_count(k, kc)).sum();
    let cost = outer.saturating_mul(inner);
    if cost > budget {
        return Err(SubmodularError::Guard { what: "two-stage enumeration", size: cost, limit: budget });
    }
    let problem = problem.memoized();
    let candidates = problem.ground().subsets_of_len(k);
    let solutions = candidates
        .par_iter()
        .map(|s| evaluate_placement(&problem, s))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best: Option<TwoStageSolution> = None;
    for s in solutions {
        if best.as_ref().is_none_or(|b| s.value > b.value) {
            best = Some(s);
        }
    }
    Ok(best.expect("at least one candidate placement"))
}

/// `f(G(S_B)) / f(G(S_A))` where `G` is the constrained inner optimizer.
pub fn general_sampling_weight(f: &dyn SetFunction, a: &Subset, b: &Subset, k: usize) -> Result<f64, SubmodularError> {
    let (_, va) = brute_force_inner(f, a, k)?;
    let (_, vb) = brute_force_inner(f, b, k)?;
    if va == 0.0 {
        return Err(SubmodularError::ZeroDenominator);
    }
    Ok(vb / va)
}

/// `F(S) = (1/m) Σ_i max_{T ⊆ S, |T| <= k_c2[i]} f_i(T)` as a set function.
pub struct TwoStageObjective {
    problem: TssoProblem,
}

impl TwoStageObjective {
    pub fn new(problem: &TssoProblem) -> Self {
        Self { problem: problem.clone() }
    }
}

impl SetFunction for TwoStageObjective {
    fn value(&self, set: &Subset) -> f64 {
        evaluate_placement(&self.problem, set)
            .expect("placement within enumeration guard")
            .value
    }
}

#[cfg(test)]
mod tests {
    use super::synthetic::{CoverageRisk, MarkovDecreasing};
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn modular(w: Vec<f64>) -> Arc<dyn SetFunction> {
        Arc::new(FnSet(move |s: &Subset| s.iter().map(|x| w[x]).sum::<f64>()))
    }

    fn problem(functions: Vec<Arc<dyn SetFunction>>, n: usize, k: usize, kc: usize, first: Subset) -> TssoProblem {
        let m = functions.len();
        TssoProblem::new((1..=n as u32).collect(), functions, k, vec![kc; m], 1.0, first).unwrap()
    }

    #[test]
    fn curvature_extremes() {
        let f = modular(vec![1.0, 2.0, 3.0]);
        assert!(curvature(f.as_ref(), &Subset::full(3)).unwrap().abs() < 1e-12);
        let g = FnSet(|s: &Subset| s.len().min(1) as f64);
        assert_eq!(curvature(&g, &Subset::full(2)).unwrap(), 1.0);
        let z = FnSet(|_: &Subset| 0.0);
        assert_eq!(curvature(&z, &Subset::full(2)), Err(SubmodularError::UndefinedCurvature));

        let p = problem(vec![f.clone()], 3, 2, 1, Subset::full(3));
        let (k1, k2) = separate_curvatures(f.as_ref(), &p).unwrap();
        assert!(k1.abs() < 1e-12 && k2 == 0.0);
        let p = problem(vec![f.clone()], 3, 2, 1, [0].into_iter().collect());
        assert_eq!(separate_curvatures(f.as_ref(), &p).unwrap(), (0.0, 0.0));
        let p = p.with_first_block(Subset::empty());
        assert_eq!(separate_curvatures(f.as_ref(), &p), Err(SubmodularError::EmptyBlock("S_L1")));
    }

    #[test]
    fn problem_validation() {
        let f = modular(vec![1.0, 2.0]);
        assert!(TssoProblem::new(vec![1, 2], vec![f.clone()], 3, vec![1], 1.0, Subset::full(2)).is_err());
        assert!(TssoProblem::new(vec![1, 2], vec![f.clone()], 2, vec![3], 1.0, Subset::full(2)).is_err());
        assert!(TssoProblem::new(vec![1, 2], vec![f.clone()], 2, vec![1, 1], 1.0, Subset::full(2)).is_err());
        assert!(TssoProblem::new(vec![1, 2], vec![f.clone()], 2, vec![1], 3.0, Subset::full(2)).is_err());
        assert!(TssoProblem::new(vec![1, 2], vec![f], 2, vec![1], 2.0, Subset::full(2)).is_ok());
    }

    #[test]
    fn modular_decomposition_of_modular_function() {
        let f = modular(vec![1.0, 4.0, 2.0, 3.0]);
        let p = problem(vec![f], 4, 2, 2, [0, 1].into_iter().collect());
        let d = modular_decomposition(&p);
        assert_eq!(d.weights[0], vec![1.0, 4.0, 2.0, 3.0]);
        for t in Subset::full(4).subsets_up_to(4) {
            assert!(d.g(&p, 0, &t).abs() < 1e-12);
        }
    }

    #[test]
    fn inner_oracle_basics() {
        let f = modular(vec![1.0, 4.0, 2.0, 3.0]);
        let (t, v) = brute_force_inner(f.as_ref(), &Subset::full(4), 2).unwrap();
        assert_eq!(t.to_vec(), vec![1, 3]);
        assert_eq!(v, 7.0);
        let (t, _) = brute_force_inner(f.as_ref(), &Subset::full(4), 4).unwrap();
        assert_eq!(t, Subset::full(4));
        // Ties: lexicographically smallest wins.
        let flat = modular(vec![1.0; 4]);
        let (t, _) = brute_force_inner(flat.as_ref(), &Subset::full(4), 2).unwrap();
        assert_eq!(t.to_vec(), vec![0, 1]);
        assert!(matches!(brute_force_inner(flat.as_ref(), &Subset::full(21), 2), Err(SubmodularError::Guard { .. })));
    }

    #[test]
    fn tsso_enumeration_degenerate_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let fs: Vec<Arc<dyn SetFunction>> = (0..3).map(|_| Arc::new(CoverageRisk::random(&mut rng, 6, 5)) as _).collect();
        let p = problem(fs.clone(), 6, 6, 2, Subset::full(6));
        let best = brute_force_tsso(&p, DEFAULT_TSSO_BUDGET).unwrap();
        let direct: f64 = fs.iter().map(|f| brute_force_inner(f.as_ref(), &Subset::full(6), 2).unwrap().1).sum::<f64>() / 3.0;
        assert!((best.value - direct).abs() < 1e-12);

        let single = problem(vec![fs[0].clone()], 6, 3, 2, Subset::full(6));
        let best = brute_force_tsso(&single, DEFAULT_TSSO_BUDGET).unwrap();
        for s in Subset::full(6).subsets_of_len(3) {
            let v = brute_force_inner(fs[0].as_ref(), &s, 2).unwrap().1;
            assert!(v <= best.value + 1e-12);
        }
        assert!(brute_force_tsso(&single, 10).is_err());
    }

    #[test]
    fn general_sampling_weight_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = CoverageRisk::random(&mut rng, 6, 4);
        let a: Subset = [0, 2].into_iter().collect();
        let b: Subset = [0, 2, 4].into_iter().collect();
        assert_eq!(general_sampling_weight(&f, &a, &a, 2).unwrap(), 1.0);
        let w = general_sampling_weight(&f, &a, &b, 2).unwrap();
        assert!(w >= 1.0);
        let fa = brute_force_inner(&f, &a, 2).unwrap().1;
        let fb = brute_force_inner(&f, &b, 2).unwrap().1;
        assert!((w * fa - fb).abs() < 1e-12);
        assert_eq!(general_sampling_weight(&f, &Subset::empty(), &b, 2), Err(SubmodularError::ZeroDenominator));
    }

    /// Which of the allowed transitions takes `G(S)` to `G(S ∪ v)`.
    #[derive(Debug, PartialEq)]
    enum Transition {
        Absorb,
        Add,
        Exchange,
    }

    fn classify(before: &Subset, after: &Subset, v: usize) -> Option<Transition> {
        if after == before {
            Some(Transition::Absorb)
        } else if *after == before.with(v) {
            Some(Transition::Add)
        } else if after.contains(v) && after.len() == before.len() && before.difference(after).len() == 1 {
            Some(Transition::Exchange)
        } else {
            None
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn markov_family_lemmas(seed in any::<u64>(), n in 3usize..7, k in 1usize..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let y = MarkovDecreasing::random(&mut rng, n);
            let cons = 1.0;
            let obj = FnSet(|s: &Subset| cons - y.value(s));
            let ground = Subset::full(n);
            let g = |s: &Subset| brute_force_inner(&obj, s, k).unwrap().0;
            for b in ground.subsets_up_to(n) {
                let gb = g(&b);
                for a in b.subsets_up_to(n) {
                    let ga = g(&a);
                    for v in ground.difference(&b).iter() {
                        let gav = g(&a.with(v));
                        let gbv = g(&b.with(v));
                        let yv = |s: &Subset| y.value(s);
                        prop_assert!(yv(&ga) >= yv(&gav) - 1e-12);
                        prop_assert!(yv(&gb) >= yv(&gbv) - 1e-12);
                        prop_assert!(yv(&ga) >= yv(&gb) - 1e-12);
                        prop_assert!(yv(&gav) >= yv(&gbv) - 1e-12);
                        let ta = classify(&ga, &gav, v);
                        let tb = classify(&gb, &gbv, v);
                        prop_assert!(ta.is_some() && tb.is_some());
                        if ta == Some(Transition::Absorb) {
                            prop_assert_eq!(tb, Some(Transition::Absorb));
                        }
                    }
                }
            }
        }

        #[test]
        fn curvature_inequalities_on_coverage_risk(seed in any::<u64>(), n in 2usize..8, split in 1usize..7) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = CoverageRisk::random(&mut rng, n, 6);
            let ground = Subset::full(n);
            let kappa = curvature(&f, &ground).unwrap();
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&kappa));
            for t in ground.subsets_up_to(n) {
                let lhs: f64 = t.iter().map(|x| f.value(&ground) - f.value(&ground.without(x))).sum();
                prop_assert!(lhs >= (1.0 - kappa) * f.value(&t) - 1e-9);
            }

            let first: Subset = (0..split.min(n)).collect();
            let fa: Arc<dyn SetFunction> = Arc::new(f);
            let p = problem(vec![fa.clone()], n, n, n, first);
            let kappas = separate_curvatures(fa.as_ref(), &p);
            prop_assume!(kappas.is_ok());
            let (k1, k2) = kappas.unwrap();
            let d = modular_decomposition(&p);
            let second = p.second_block();
            for t in ground.subsets_up_to(n).into_iter().skip(1) {
                let ft = fa.value(&t);
                if ft <= 0.0 {
                    continue;
                }
                let oc2 = (k1 - k2) * fa.value(&t.intersection(&second)) / ft;
                prop_assert!(d.c(0, &t) >= (1.0 - k1 + oc2) * ft - 1e-9);
            }
            // Within one block g is monotone. Across blocks it need not be: a
            // marginal conditioned on elements of the other block can fall
            // below that block's leave-one-out weight.
            for block in [first, second] {
                for t in block.subsets_up_to(n) {
                    for x in block.difference(&t).iter() {
                        prop_assert!(d.g(&p, 0, &t.with(x)) >= d.g(&p, 0, &t) - 1e-9);
                    }
                }
            }
        }

        #[test]
        fn brute_force_matches_independent_enumerator(seed in any::<u64>(), n in 1usize..9, k in 1usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = CoverageRisk::random(&mut rng, n, 4);
            let feasible: Subset = (0..n).filter(|_| rng.random_bool(0.7)).collect();
            let (t, v) = brute_force_inner(&f, &feasible, k).unwrap();
            // Bitmask enumeration, keeping the lexicographically smallest of the best.
            let elems = feasible.to_vec();
            let mut best: Option<(Subset, f64)> = None;
            for mask in 0u32..(1 << elems.len()) {
                if mask.count_ones() as usize > k { continue; }
                let s: Subset = elems.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &e)| e).collect();
                let val = f.value(&s);
                let better = match &best {
                    None => true,
                    Some((bs, bv)) => val > *bv || (val == *bv && s.lex_cmp(bs).is_lt()),
                };
                if better { best = Some((s, val)); }
            }
            let (bs, bv) = best.unwrap();
            prop_assert_eq!(v, bv);
            prop_assert_eq!(t, bs);
        }
    }
}
