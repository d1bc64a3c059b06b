//! Combined crisp indicator, combined fuzzy indicator and fuzzy boundary
//! indicator of a partition produced by 1-D k-means.
//!
//! For a partition `X = A_1 ∪ … ∪ A_n` the combined crisp indicator is
//! `CCI = Σ j·1[A_j]`, i.e. the 1-based cluster label of every sample. The
//! combined fuzzy indicator is a monotone real-valued function of the sample
//! value that rounds back to the CCI, and the boundary indicator is
//! `FIB = 2·|CFI − CCI|`.
//!
//! The CFI used here is linear between adjacent centroids: it equals `j` at
//! centroid `c_j` and `j ± 0.5` at the decision midpoints
//! `(c_j + c_{j±1}) / 2`, and is clamped to `1` / `n` beyond the outermost
//! centroids. FIB is therefore `0` at full membership and `1` exactly on
//! the k-means decision boundaries.

use serde::Serialize;
use thiserror::Error;

use crate::quantizer::{Quantization, Signal};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IndicatorError {
    #[error("centroids are not strictly increasing at index {0}")]
    DegenerateCentroids(usize),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("expected {expected} symbols, got {actual}")]
    SymbolCount { expected: usize, actual: usize },
    #[error("symbols {0} and {1} are not distinct")]
    DuplicateSymbol(usize, usize),
}

/// The interdependent (CCI, CFI, FIB) triplet over one signal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CombinedIndicators {
    /// Number of sets in the partition.
    pub n: usize,
    pub cci: Vec<usize>,
    pub cfi: Vec<f64>,
    pub fib: Vec<f64>,
}

impl CombinedIndicators {
    pub fn from_quantization(signal: &Signal, q: &Quantization) -> Result<Self, IndicatorError> {
        let cci = crisp_indicator(q);
        let cfi = fuzzy_indicator(signal, q)?;
        let fib = boundary_indicator(&cci, &cfi)?;
        Ok(CombinedIndicators {
            n: q.k,
            cci,
            cfi,
            fib,
        })
    }

    pub fn len(&self) -> usize {
        self.cci.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cci.is_empty()
    }
}

/// The combined crisp indicator: the label vector itself.
pub fn crisp_indicator(q: &Quantization) -> Vec<usize> {
    q.labels.clone()
}

/// Re-encodes the crisp indicator through a sequence of distinct symbols,
/// label `j` becoming `symbols[j - 1]`.
pub fn encode_symbols<S: Clone + PartialEq>(
    q: &Quantization,
    symbols: &[S],
) -> Result<Vec<S>, IndicatorError> {
    if symbols.len() != q.k {
        return Err(IndicatorError::SymbolCount {
            expected: q.k,
            actual: symbols.len(),
        });
    }
    for i in 0..symbols.len() {
        for j in (i + 1)..symbols.len() {
            if symbols[i] == symbols[j] {
                return Err(IndicatorError::DuplicateSymbol(i, j));
            }
        }
    }
    Ok(q.labels.iter().map(|&l| symbols[l - 1].clone()).collect())
}

/// Fuzzy membership of value `v` given its crisp label (1-based) and the
/// ascending centroids.
fn cfi_value(v: f64, label: usize, centroids: &[f64]) -> f64 {
    let n = centroids.len();
    let j = label - 1;
    let c = centroids[j];
    let crisp = label as f64;
    if v >= c {
        if j + 1 == n {
            return crisp;
        }
        let mid = (c + centroids[j + 1]) / 2.0;
        crisp + 0.5 * ((v - c) / (mid - c)).min(1.0)
    } else {
        if j == 0 {
            return crisp;
        }
        let mid = (centroids[j - 1] + c) / 2.0;
        crisp - 0.5 * ((c - v) / (c - mid)).min(1.0)
    }
}

/// The combined fuzzy indicator of every sample.
pub fn fuzzy_indicator(signal: &Signal, q: &Quantization) -> Result<Vec<f64>, IndicatorError> {
    if let Some(i) = q.centroids.windows(2).position(|w| w[0] >= w[1]) {
        return Err(IndicatorError::DegenerateCentroids(i + 1));
    }
    if signal.len() != q.labels.len() {
        return Err(IndicatorError::LengthMismatch {
            left: signal.len(),
            right: q.labels.len(),
        });
    }
    Ok(signal
        .values()
        .iter()
        .zip(&q.labels)
        .map(|(&v, &l)| cfi_value(v, l, &q.centroids))
        .collect())
}

/// `FIB = 2·|CFI − CCI|`, elementwise.
pub fn boundary_indicator(cci: &[usize], cfi: &[f64]) -> Result<Vec<f64>, IndicatorError> {
    if cci.len() != cfi.len() {
        return Err(IndicatorError::LengthMismatch {
            left: cci.len(),
            right: cfi.len(),
        });
    }
    Ok(cci
        .iter()
        .zip(cfi)
        .map(|(&c, &f)| 2.0 * (f - c as f64).abs())
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TripletRule {
    /// Lengths of cci / cfi / fib (and the signal, when given) agree.
    Length,
    /// `cci` lies in `1..=n`.
    CrispRange,
    /// `|cfi − cci| ≤ 0.5`, so the CFI rounds back to the CCI.
    RoundBack,
    /// `fib = 2·|cfi − cci|` exactly.
    BoundaryIdentity,
    /// `fib ∈ [0, 1]`.
    FibRange,
    /// CFI non-decreasing in the sample value.
    Monotone,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    pub rule: TripletRule,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TripletReport {
    pub ok: bool,
    /// First violating index per broken rule.
    pub violations: Vec<Violation>,
}

impl TripletReport {
    pub fn violation(&self, rule: TripletRule) -> Option<usize> {
        self.violations
            .iter()
            .find(|v| v.rule == rule)
            .map(|v| v.index)
    }
}

/// Checks every triplet invariant. Monotonicity is only checked when the
/// underlying sample values are supplied.
pub fn verify_triplet(ind: &CombinedIndicators, values: Option<&[f64]>) -> TripletReport {
    let mut violations = Vec::new();
    let mut first = |rule, index| {
        if !violations.iter().any(|v: &Violation| v.rule == rule) {
            violations.push(Violation { rule, index });
        }
    };

    let len = ind.cci.len();
    if ind.cfi.len() != len || ind.fib.len() != len || values.is_some_and(|v| v.len() != len) {
        first(
            TripletRule::Length,
            len.min(ind.cfi.len()).min(ind.fib.len()),
        );
        return TripletReport {
            ok: false,
            violations,
        };
    }

    for i in 0..len {
        let (c, f, b) = (ind.cci[i], ind.cfi[i], ind.fib[i]);
        if c == 0 || c > ind.n {
            first(TripletRule::CrispRange, i);
        }
        let residual = (f - c as f64).abs();
        // negated so NaN is a violation
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(residual <= 0.5) {
            first(TripletRule::RoundBack, i);
        }
        if b != 2.0 * residual {
            first(TripletRule::BoundaryIdentity, i);
        }
        if !(0.0..=1.0).contains(&b) {
            first(TripletRule::FibRange, i);
        }
    }

    if let Some(values) = values {
        let mut order: Vec<usize> = (0..len).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        for w in order.windows(2) {
            let (a, b) = (w[0], w[1]);
            let broken = if values[a] == values[b] {
                ind.cfi[a] != ind.cfi[b]
            } else {
                ind.cfi[a] > ind.cfi[b]
            };
            if broken {
                first(TripletRule::Monotone, b);
                break;
            }
        }
    }

    TripletReport {
        ok: violations.is_empty(),
        violations,
    }
}
