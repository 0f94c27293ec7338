//! Trace repair schemes for Reed-Muller codes.
//!
//! A scheme for an erased point `P*` uses the recovery polynomials
//! `r_i(x) = Tr(z_i(x_j − p_j))/(x_j − p_j)`, one per basis element `z_i`.
//! They have degree `q^(t−1) − 1`, so whenever the dual degree allows it their
//! evaluation vectors are dual codewords and `Σ_P r_i(P) f(P) = 0`. Taking
//! traces isolates `Tr(z_i f(P*))`, and off the hyperplane `x_j = p_j` each
//! term factors as `Tr(z_i(s_j − p_j))·Tr(f(P)/(s_j − p_j))`, a single
//! subsymbol download. Several erasures are handled by scaling all but one
//! scheme with independent elements of `ker Tr`.

mod execute;
mod plan;
mod recovery;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::FieldError;
use crate::rmcode::{CodeError, RMCode};

pub use execute::{
    answer, execute, CodewordResponder, QueryKindTag, QueryRecord, QueryResponder, RecoveredRecord,
    RepairTranscript, Response, TranscriptJson,
};
pub use plan::{
    find_axis, kernel_adapted_basis, plan, plan_multi, plan_single, CoordinateDiagnostic,
    NodeRequest, QueryKind, RepairPlan, TraceQuery,
};
pub use recovery::RecoveryPoly;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RepairError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error("degree {d} exceeds the repairable bound {max}")]
    DegreeGate { d: usize, max: i64 },
    #[error("need at least {min} erasures, got {got}")]
    ErasureCount { min: usize, got: usize },
    #[error("point {0} is erased twice")]
    DuplicateErasure(usize),
    #[error("axis {axis} out of range for {m} variables")]
    AxisOutOfRange { axis: usize, m: usize },
    #[error("{l} erasures exceed t = {t}: ker Tr has too few independent elements")]
    TooManyErasures { l: usize, t: u32 },
    #[error("no coordinate has all pairwise differences in F_q^*: {}", describe(.diagnostics))]
    NoValidCoordinate {
        diagnostics: Vec<CoordinateDiagnostic>,
    },
    #[error("basis must list a ker Tr basis followed by an element of nonzero trace")]
    BasisNotKernelAdapted,
    #[error("no choice of scaling elements decouples {l} erasures")]
    SingularCoupling { l: usize },
    #[error("recovery polynomial needs nonzero z and scale")]
    ZeroRecoveryParameter,
    #[error("node {node} is unavailable")]
    NodeUnavailable { node: usize },
    #[error("node {node} answered with the wrong response kind")]
    InconsistentResponse { node: usize },
    #[error("transcript entry for node {node} is malformed")]
    MalformedTranscript { node: usize },
}

fn describe(diagnostics: &[CoordinateDiagnostic]) -> String {
    diagnostics
        .iter()
        .map(|d| {
            format!(
                "axis {}: points {} and {} differ by {}",
                d.axis + 1,
                d.first,
                d.second,
                d.difference
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// `m(q^t − 1) − q^(t−1)`, the largest degree the schemes can repair.
pub fn gate_bound(code: &RMCode) -> i64 {
    let f = code.tower();
    code.m() as i64 * (f.order() as i64 - 1) - (f.q() as i64).pow(f.t() - 1)
}

/// True iff `d ≤ m(q^t − 1) − q^(t−1)`, i.e. the dual degree covers the
/// recovery polynomials' degree `q^(t−1) − 1`.
pub fn degree_gate(code: &RMCode) -> bool {
    code.d() as i64 <= gate_bound(code)
}

/// Closed-form bandwidths for `ℓ` simultaneous erasures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BandwidthBounds {
    /// What the deduplicated scheme downloads: `ℓ[n − t + (t − ℓ)Q]`.
    pub measured_formula: i64,
    /// The stated bound `ℓ[n − ℓ + (t − 1)(Q − ℓ)]`.
    pub paper_bound: i64,
}

/// `Q = q^((m−1)t)` is the size of each hyperplane `Γ`. The two values differ
/// by `ℓ(ℓ−1)(Q − t)` and coincide for `ℓ = 1`.
pub fn bandwidth_bounds(code: &RMCode, l: usize) -> BandwidthBounds {
    let f = code.tower();
    let t = f.t() as i64;
    let n = code.n() as i64;
    let hyperplane = n / f.order() as i64;
    let l = l as i64;
    BandwidthBounds {
        measured_formula: l * (n - t + (t - l) * hyperplane),
        paper_bound: l * (n - l + (t - 1) * (hyperplane - l)),
    }
}
