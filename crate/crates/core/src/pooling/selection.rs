use serde::Serialize;

use super::anchor::AnchorSet;

/// How a pooling amount was chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Method {
    Loo,
    KFold { folds: usize, seed: u64 },
    Js,
    Ap,
    Oracle,
}

/// Criterion value at one `(alpha, anchor candidate)` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub alpha: f64,
    pub candidate: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoolingSelection {
    pub alpha: f64,
    /// Index of the chosen anchor among the candidates searched.
    pub candidate: usize,
    pub anchors: AnchorSet,
    pub trace: Vec<TracePoint>,
    pub method: Method,
}

impl PoolingSelection {
    /// Criterion value at the selection, if a trace was recorded.
    pub fn value(&self) -> Option<f64> {
        self.trace.iter().find(|t| t.alpha == self.alpha && t.candidate == self.candidate).map(|t| t.value)
    }
}

/// Relative tolerance below which two criterion values count as tied.
pub const CRITERION_RTOL: f64 = 1e-12;

/// Position of the minimum of `trace`, which must be ordered by alpha and
/// then candidate, so the earliest tied entry wins.
pub(crate) fn argmin_trace(trace: &[TracePoint]) -> usize {
    let mut best = 0;
    for (j, t) in trace.iter().enumerate().skip(1) {
        let b = trace[best].value;
        if t.value < b - CRITERION_RTOL * b.abs() {
            best = j;
        }
    }
    best
}

/// Builds the trace over `grid x candidates` (alpha-major) from per-candidate
/// curves and picks the minimizer.
pub(crate) fn select_from_curves(
    grid: &[f64],
    curves: &[Vec<f64>],
    candidates: Vec<AnchorSet>,
    method: Method,
) -> PoolingSelection {
    let mut trace = Vec::with_capacity(grid.len() * curves.len());
    for (j, &alpha) in grid.iter().enumerate() {
        for (c, curve) in curves.iter().enumerate() {
            trace.push(TracePoint { alpha, candidate: c, value: curve[j] });
        }
    }
    let best = trace[argmin_trace(&trace)];
    let anchors = candidates.into_iter().nth(best.candidate).expect("candidate exists");
    PoolingSelection { alpha: best.alpha, candidate: best.candidate, anchors, trace, method }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tp(alpha: f64, candidate: usize, value: f64) -> TracePoint {
        TracePoint { alpha, candidate, value }
    }

    #[test]
    fn ties_go_to_smaller_alpha_then_lower_candidate() {
        let trace = [tp(0.0, 0, 2.0), tp(0.0, 1, 1.0), tp(1.0, 0, 1.0), tp(1.0, 1, 0.5), tp(2.0, 0, 0.5)];
        assert_eq!(argmin_trace(&trace), 3);
        let trace = [tp(0.0, 0, 1.0), tp(1.0, 0, 1.0)];
        assert_eq!(argmin_trace(&trace), 0);
    }
}
