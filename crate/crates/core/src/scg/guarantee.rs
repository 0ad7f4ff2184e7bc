use serde::{Deserialize, Serialize};

use super::DtrPlan;
use crate::submodular::{
    brute_force_tsso, evaluate_placement, problem_curvatures, Decomposition, SubmodularError, TssoProblem,
};

/// `1 - κ e^{-p}/p + κ/p - κ`.
pub fn pure_guarantee(kappa_f1: f64, p: f64) -> f64 {
    1.0 - kappa_f1 * (-p).exp() / p + kappa_f1 / p - kappa_f1
}

/// Combined error term `(κ1 - 1) ξ + (1 - 1/p + e^{-p}/p - ξ) O(c2)`.
pub fn error_term(kappa_f1: f64, p: f64, xi: f64, oc2: f64) -> f64 {
    (kappa_f1 - 1.0) * xi + (1.0 - 1.0 / p + (-p).exp() / p - xi) * oc2
}

/// Pure guarantee plus error, never above the pure value. When the
/// coefficient `1 - (1 - e^{-p})/p - ξ` of the modular optimum is negative
/// the bound is additionally capped at `1 - ξ`.
pub fn certified_guarantee(kappa_f1: f64, p: f64, xi: f64, error: f64) -> f64 {
    let pure = pure_guarantee(kappa_f1, p);
    let mut g = (pure + error).min(pure);
    if 1.0 - (1.0 - (-p).exp()) / p - xi < 0.0 {
        g = g.min(1.0 - xi);
    }
    g
}

/// 1 / (p + 1).
pub fn ls_guarantee(p: f64) -> f64 {
    1.0 / (p + 1.0)
}

/// `(1 - e^{-(p+1)}) / (p + 1)`, shared by the replacement-greedy variants.
pub fn rg_guarantee(p: f64) -> f64 {
    (1.0 - (-(p + 1.0)).exp()) / (p + 1.0)
}

pub fn gcg_guarantee(kappa: f64, p: f64) -> f64 {
    (1.0 - kappa) / p * (1.0 - (-p).exp()) + kappa / (p + 1.0) * (1.0 - (-(p + 1.0)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuaranteeMode {
    /// Per-state optima from full two-stage enumeration.
    Exact,
    /// Per-state optima approximated by exact inner optima over the returned placement.
    Estimated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeReport {
    pub mode: GuaranteeMode,
    pub value: f64,
    pub kappa_f1: f64,
    pub kappa_f2: f64,
    pub p: f64,
    pub xi: f64,
    pub oc2: f64,
    pub error: f64,
    pub pure: f64,
    pub certified: f64,
    /// Reference optimum `F(S*)` (exact mode) or its in-placement proxy.
    pub reference_value: f64,
    pub placement_size: usize,
    pub stopped_early: bool,
}

impl GuaranteeReport {
    pub fn from_terms(kappa_f1: f64, kappa_f2: f64, p: f64, xi: f64, oc2: f64) -> Self {
        let error = error_term(kappa_f1, p, xi, oc2);
        Self {
            mode: GuaranteeMode::Estimated,
            value: f64::NAN,
            kappa_f1,
            kappa_f2,
            p,
            xi,
            oc2,
            error,
            pure: pure_guarantee(kappa_f1, p),
            certified: certified_guarantee(kappa_f1, p, xi, error),
            reference_value: f64::NAN,
            placement_size: 0,
            stopped_early: false,
        }
    }
}

pub fn guarantee_report(
    plan: &DtrPlan,
    problem: &TssoProblem,
    dec: &Decomposition,
    mode: GuaranteeMode,
    budget: u128,
) -> Result<GuaranteeReport, SubmodularError> {
    let (kappa_f1, kappa_f2) = problem_curvatures(problem)?;
    let reference = match mode {
        GuaranteeMode::Exact => brute_force_tsso(problem, budget)?,
        GuaranteeMode::Estimated => evaluate_placement(problem, &plan.placement)?,
    };
    let m = problem.m();

    let mut xi: f64 = 0.0;
    for j in 1..=plan.trace.len() {
        let before = plan.schedules_before(j, m);
        for i in 0..m {
            let num = dec.c(i, &before[i]);
            let den = dec.c(i, &reference.schedules[i]);
            if den > 0.0 {
                xi = xi.max(num / den);
            } else if num != 0.0 {
                log::warn!("xi: state {i} has non-positive modular optimum {den}, ratio skipped");
            }
        }
    }

    let second = problem.second_block();
    let (mut num, mut den) = (0.0, 0.0);
    for (i, t) in reference.schedules.iter().enumerate() {
        num += problem.functions[i].value(&t.intersection(&second));
        den += problem.functions[i].value(t);
    }
    let oc2 = if den > 0.0 { (kappa_f1 - kappa_f2) * num / den } else { 0.0 };

    let mut report = GuaranteeReport::from_terms(kappa_f1, kappa_f2, problem.p, xi, oc2);
    report.mode = mode;
    report.value = plan.value;
    report.reference_value = reference.value;
    report.placement_size = plan.placement.len();
    report.stopped_early = plan.stopped_early;
    if plan.stopped_early {
        log::info!("placement holds {} of {} lines: no positive gain remained", plan.placement.len(), problem.k);
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuaranteeRow {
    pub kappa: f64,
    pub p: f64,
    pub scg: f64,
    pub ls: f64,
    pub rg: f64,
    pub gpg: f64,
    pub gcg: f64,
}

/// Error-free guarantee of each strategy over a `κ × p` grid.
pub fn guarantee_table(kappas: &[f64], ps: &[f64]) -> Vec<GuaranteeRow> {
    let mut rows = Vec::with_capacity(kappas.len() * ps.len());
    for &kappa in kappas {
        for &p in ps {
            rows.push(GuaranteeRow {
                kappa,
                p,
                scg: pure_guarantee(kappa, p),
                ls: ls_guarantee(p),
                rg: rg_guarantee(p),
                gpg: rg_guarantee(p),
                gcg: gcg_guarantee(kappa, p),
            });
        }
    }
    rows
}
