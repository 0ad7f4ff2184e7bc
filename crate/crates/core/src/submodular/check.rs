use super::{SetFunction, SubmodularError};
use crate::subset::Subset;

pub const CHECK_GUARD: usize = 12;
pub const CHECK_TOLERANCE: f64 = 1e-9;

/// How the diminishing-returns inequality is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheckMode {
    /// `f(A∪v) + f(B) >= f(B∪v) + f(A)`.
    Raw,
    /// `f(v | A) >= f(v | B)` from precomputed marginals.
    Marginal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub a: Subset,
    pub b: Subset,
    pub v: usize,
    pub gain_a: f64,
    pub gain_b: f64,
}

/// Every `(A ⊆ B ⊆ ground, v ∉ B)` with `f(v | A) < f(v | B) - 1e-9`.
pub fn check_submodularity(f: &dyn SetFunction, ground: &Subset, mode: CheckMode) -> Result<Vec<Violation>, SubmodularError> {
    let elems = ground.to_vec();
    let n = elems.len();
    if n > CHECK_GUARD {
        return Err(SubmodularError::Guard { what: "ground set", size: n as u128, limit: CHECK_GUARD as u128 });
    }
    let to_set = |mask: usize| -> Subset { (0..n).filter(|b| mask >> b & 1 == 1).map(|b| elems[b]).collect() };
    let values: Vec<f64> = (0..1usize << n).map(|mask| f.value(&to_set(mask))).collect();
    let gains: Vec<f64> = match mode {
        CheckMode::Marginal => (0..(1usize << n) * n)
            .map(|idx| {
                let (mask, v) = (idx / n, idx % n);
                values[mask | 1 << v] - values[mask]
            })
            .collect(),
        CheckMode::Raw => Vec::new(),
    };

    let mut out = Vec::new();
    for b in 0..1usize << n {
        // Walk all submasks of b, including b and 0.
        let mut a = b;
        loop {
            for v in (0..n).filter(|v| b >> v & 1 == 0) {
                let violated = match mode {
                    CheckMode::Raw => values[a | 1 << v] + values[b] < values[b | 1 << v] + values[a] - CHECK_TOLERANCE,
                    CheckMode::Marginal => gains[a * n + v] < gains[b * n + v] - CHECK_TOLERANCE,
                };
                if violated {
                    out.push(Violation {
                        a: to_set(a),
                        b: to_set(b),
                        v: elems[v],
                        gain_a: values[a | 1 << v] - values[a],
                        gain_b: values[b | 1 << v] - values[b],
                    });
                }
            }
            if a == 0 {
                break;
            }
            a = (a - 1) & b;
        }
    }
    Ok(out)
}
