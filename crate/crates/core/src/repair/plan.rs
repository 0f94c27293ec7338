use serde::{Deserialize, Serialize};

use crate::galois::{FieldTower, Symbol};
use crate::linalg;
use crate::rmcode::{CodeParams, RMCode};

use super::recovery::RecoveryPoly;
use super::{degree_gate, gate_bound, RepairError};

/// One download request to a surviving node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TraceQuery {
    pub node: usize,
    pub kind: QueryKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QueryKind {
    /// The whole stored symbol, `t` subsymbols.
    Full,
    /// `Tr(multiplier · f(node))`, one subsymbol.
    Trace { multiplier: Symbol },
}

impl TraceQuery {
    pub fn full(node: usize) -> Self {
        Self {
            node,
            kind: QueryKind::Full,
        }
    }

    pub fn trace(node: usize, multiplier: Symbol) -> Self {
        Self {
            node,
            kind: QueryKind::Trace { multiplier },
        }
    }

    /// Download cost in subsymbols.
    pub fn cost(&self, t: u32) -> u64 {
        match self.kind {
            QueryKind::Full => t as u64,
            QueryKind::Trace { .. } => 1,
        }
    }
}

/// What a surviving node is asked for once all schemes are merged.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NodeRequest {
    /// The node lies in some `Γ^k`; its symbol serves every scheme.
    Full { node: usize },
    /// One trace query per scheme, in scheme order.
    Trace {
        node: usize,
        multipliers: Vec<Symbol>,
    },
}

impl NodeRequest {
    pub fn node(&self) -> usize {
        match *self {
            NodeRequest::Full { node } | NodeRequest::Trace { node, .. } => node,
        }
    }

    pub fn queries(&self) -> Vec<TraceQuery> {
        match self {
            NodeRequest::Full { node } => vec![TraceQuery::full(*node)],
            NodeRequest::Trace { node, multipliers } => multipliers
                .iter()
                .map(|&m| TraceQuery::trace(*node, m))
                .collect(),
        }
    }
}

/// Why a coordinate fails the pairwise `F_q^*` difference condition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoordinateDiagnostic {
    /// Zero-based coordinate.
    pub axis: usize,
    /// First offending pair of erased point indices.
    pub first: usize,
    pub second: usize,
    /// Index of `s^first_axis − s^second_axis`.
    pub difference: u32,
}

/// Queries and reconstruction data for repairing `ℓ` erasures at once.
///
/// Scheme `k` targets erased point `k` with recovery polynomials anchored at
/// its axis coordinate and scaled by `scales[k]`; `scales[0] = 1`, later
/// scales are independent elements of `ker Tr`.
#[derive(Debug, Clone)]
pub struct RepairPlan {
    params: CodeParams,
    erased: Vec<usize>,
    axis: usize,
    basis: Vec<Symbol>,
    dual: Vec<Symbol>,
    scales: Vec<Symbol>,
    anchors: Vec<Symbol>,
    gammas: Vec<Vec<usize>>,
    requests: Vec<NodeRequest>,
    coupling: Vec<Vec<Symbol>>,
}

impl RepairPlan {
    pub fn params(&self) -> CodeParams {
        self.params
    }

    pub fn erased(&self) -> &[usize] {
        &self.erased
    }

    pub fn erasure_count(&self) -> usize {
        self.erased.len()
    }

    /// Zero-based coordinate index `j`.
    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn basis(&self) -> &[Symbol] {
        &self.basis
    }

    pub fn dual_basis(&self) -> &[Symbol] {
        &self.dual
    }

    /// Per-scheme multipliers, starting with the unscaled `1`.
    pub fn scales(&self) -> &[Symbol] {
        &self.scales
    }

    /// The `τ` elements, i.e. the scales after the first.
    pub fn tau(&self) -> &[Symbol] {
        &self.scales[1..]
    }

    pub fn anchors(&self) -> &[Symbol] {
        &self.anchors
    }

    /// `Γ^k` without the erased points, per scheme.
    pub fn gamma_sets(&self) -> &[Vec<usize>] {
        &self.gammas
    }

    pub fn requests(&self) -> &[NodeRequest] {
        &self.requests
    }

    pub fn queries(&self) -> Vec<TraceQuery> {
        self.requests
            .iter()
            .flat_map(NodeRequest::queries)
            .collect()
    }

    /// Matrix of the coupled `z_t` equations among the scaled schemes.
    pub(crate) fn coupling(&self) -> &[Vec<Symbol>] {
        &self.coupling
    }

    pub fn bandwidth_subsymbols(&self) -> u64 {
        let t = self.params.t;
        self.queries().iter().map(|q| q.cost(t)).sum()
    }

    /// Bandwidth if every scheme downloaded its own queries with no sharing
    /// between schemes.
    pub fn undeduped_bandwidth(&self) -> u64 {
        let t = self.params.t as u64;
        let surviving = self.requests.len() as u64;
        self.gammas
            .iter()
            .map(|g| t * g.len() as u64 + (surviving - g.len() as u64))
            .sum()
    }

    /// The `ℓ·t` recovery polynomials, scheme-major.
    pub fn recovery_polys(&self, f: &FieldTower) -> Vec<RecoveryPoly> {
        self.anchors
            .iter()
            .zip(&self.scales)
            .flat_map(|(&anchor, &scale)| {
                self.basis.iter().map(move |&z| {
                    RecoveryPoly::new(f, z, anchor, self.axis, scale)
                        .expect("plan holds nonzero basis and scales")
                })
            })
            .collect()
    }
}

/// Plans the repair of one erased point along coordinate `axis`.
///
/// `Γ` is the hyperplane through the erased point with the same `axis`
/// coordinate. Its other members send their full symbol; every node outside
/// `Γ` sends `Tr(f(s)/(s_axis − p_axis))`.
pub fn plan_single(
    code: &RMCode,
    erased: usize,
    axis: usize,
    basis: &[Symbol],
) -> Result<RepairPlan, RepairError> {
    check_gate(code)?;
    code.check_point(erased)?;
    if axis >= code.m() {
        return Err(RepairError::AxisOutOfRange { axis, m: code.m() });
    }
    let f = code.tower();
    let dual = f.dual_basis(basis)?;
    build(
        code,
        vec![erased],
        axis,
        basis.to_vec(),
        dual,
        vec![Symbol::ONE],
        Vec::new(),
    )
}

/// Plans the simultaneous repair of `2 ≤ ℓ ≤ t` erased points.
///
/// Picks the smallest coordinate where every pairwise difference of the
/// erased points lies in `F_q^*`. Without an explicit `basis`, the scheme
/// basis is `ker Tr`'s basis completed by the first power-basis element of
/// nonzero trace; an explicit basis must have that shape.
pub fn plan_multi(
    code: &RMCode,
    erased: &[usize],
    basis: Option<&[Symbol]>,
) -> Result<RepairPlan, RepairError> {
    check_gate(code)?;
    let f = code.tower();
    let l = erased.len();
    if l < 2 {
        return Err(RepairError::ErasureCount { min: 2, got: l });
    }
    check_distinct(code, erased)?;
    if l > f.t() as usize {
        return Err(RepairError::TooManyErasures { l, t: f.t() });
    }
    let axis = find_axis(code, erased)?;

    let kernel = f.kernel_trace_basis()?;
    let basis = match basis {
        Some(b) => {
            check_kernel_adapted(f, b)?;
            b.to_vec()
        }
        None => kernel_adapted_basis(f, &kernel),
    };
    let dual = f.dual_basis(&basis)?;

    let (scales, coupling) = select_scales(f, &kernel, &basis, &dual, l)?;
    build(code, erased.to_vec(), axis, basis, dual, scales, coupling)
}

/// Dispatches on the number of erasures; single erasures use `axis` 0 and the
/// tower's basis.
pub fn plan(code: &RMCode, erased: &[usize]) -> Result<RepairPlan, RepairError> {
    match erased.len() {
        0 => Err(RepairError::ErasureCount { min: 1, got: 0 }),
        1 => plan_single(code, erased[0], 0, code.tower().basis()),
        _ => plan_multi(code, erased, None),
    }
}

fn check_gate(code: &RMCode) -> Result<(), RepairError> {
    if degree_gate(code) {
        Ok(())
    } else {
        Err(RepairError::DegreeGate {
            d: code.d(),
            max: gate_bound(code),
        })
    }
}

fn check_distinct(code: &RMCode, erased: &[usize]) -> Result<(), RepairError> {
    for (i, &e) in erased.iter().enumerate() {
        code.check_point(e)?;
        if erased[..i].contains(&e) {
            return Err(RepairError::DuplicateErasure(e));
        }
    }
    Ok(())
}

/// Smallest coordinate where all erased points differ pairwise by an element
/// of `F_q^*`.
pub fn find_axis(code: &RMCode, erased: &[usize]) -> Result<usize, RepairError> {
    let f = code.tower();
    let mut diagnostics = Vec::new();
    for axis in 0..code.m() {
        let offending = erased.iter().enumerate().find_map(|(i, &a)| {
            erased[i + 1..].iter().find_map(|&b| {
                let diff = f.sub(code.point(a)[axis], code.point(b)[axis]);
                (diff.is_zero() || !f.is_in_base(diff)).then_some((a, b, diff))
            })
        });
        match offending {
            None => return Ok(axis),
            Some((first, second, diff)) => diagnostics.push(CoordinateDiagnostic {
                axis,
                first,
                second,
                difference: diff.index(),
            }),
        }
    }
    Err(RepairError::NoValidCoordinate { diagnostics })
}

/// `{kernel…, z_t}` with `z_t` the first power-basis element of nonzero trace.
pub fn kernel_adapted_basis(f: &FieldTower, kernel: &[Symbol]) -> Vec<Symbol> {
    let completion = (0..f.t())
        .map(|k| {
            f.symbol((f.q() as u64).pow(k))
                .expect("power basis element")
        })
        .find(|&v| !f.trace(v).is_zero())
        .expect("the trace is not identically zero");
    let mut basis = kernel.to_vec();
    basis.push(completion);
    basis
}

fn check_kernel_adapted(f: &FieldTower, basis: &[Symbol]) -> Result<(), RepairError> {
    let t = f.t() as usize;
    let shaped = basis.len() == t
        && basis[..t - 1].iter().all(|&z| f.trace(z).is_zero())
        && !f.trace(basis[t - 1]).is_zero();
    if shaped {
        Ok(())
    } else {
        Err(RepairError::BasisNotKernelAdapted)
    }
}

/// Chooses `τ_1, …, τ_(ℓ−1)`: the leading kernel basis elements when their
/// coupled `z_t` system is invertible, otherwise the first independent tuple
/// of kernel elements (by index) for which it is.
fn select_scales(
    f: &FieldTower,
    kernel: &[Symbol],
    basis: &[Symbol],
    dual: &[Symbol],
    l: usize,
) -> Result<(Vec<Symbol>, Vec<Vec<Symbol>>), RepairError> {
    let with_one = |taus: &[Symbol]| {
        let mut scales = vec![Symbol::ONE];
        scales.extend_from_slice(taus);
        scales
    };
    let leading = with_one(&kernel[..l - 1]);
    if let Some(coupling) = coupling_matrix(f, basis, dual, &leading) {
        return Ok((leading, coupling));
    }

    let members: Vec<Symbol> = f
        .elements()
        .filter(|&x| !x.is_zero() && f.trace(x).is_zero())
        .collect();
    let mut chosen = Vec::with_capacity(l - 1);
    search_taus(f, basis, dual, &members, 0, &mut chosen, l - 1)
        .map(|coupling| (with_one(&chosen), coupling))
        .ok_or(RepairError::SingularCoupling { l })
}

fn search_taus(
    f: &FieldTower,
    basis: &[Symbol],
    dual: &[Symbol],
    members: &[Symbol],
    start: usize,
    chosen: &mut Vec<Symbol>,
    want: usize,
) -> Option<Vec<Vec<Symbol>>> {
    if chosen.len() == want {
        let mut scales = vec![Symbol::ONE];
        scales.extend_from_slice(chosen);
        return coupling_matrix(f, basis, dual, &scales);
    }
    for i in start..members.len() {
        chosen.push(members[i]);
        if independent_over_base(f, chosen) {
            if let Some(c) = search_taus(f, basis, dual, members, i + 1, chosen, want) {
                return Some(c);
            }
        }
        chosen.pop();
    }
    None
}

fn independent_over_base(f: &FieldTower, xs: &[Symbol]) -> bool {
    let rows: Vec<Vec<Symbol>> = xs
        .iter()
        .map(|&x| f.coords(x).into_iter().map(|c| f.embed_base(c)).collect())
        .collect();
    linalg::rank(f, rows) == xs.len()
}

/// Coefficients of the `z_t` equations of the scaled schemes in the unknowns
/// `Tr(z_t σ_l f(s^l))`: `1` on the diagonal, `Tr(z_t)·Tr(σ_k σ_l⁻¹ z′_t)`
/// off it. Returns `None` when singular.
fn coupling_matrix(
    f: &FieldTower,
    basis: &[Symbol],
    dual: &[Symbol],
    scales: &[Symbol],
) -> Option<Vec<Vec<Symbol>>> {
    let t = basis.len();
    let tr_zt = f.embed_base(f.trace(basis[t - 1]));
    let zt_dual = dual[t - 1];
    let scaled = &scales[1..];
    let matrix: Vec<Vec<Symbol>> = scaled
        .iter()
        .enumerate()
        .map(|(k, &sk)| {
            scaled
                .iter()
                .enumerate()
                .map(|(l, &sl)| {
                    if k == l {
                        Symbol::ONE
                    } else {
                        let ratio = f.div(sk, sl).expect("nonzero scale");
                        f.mul(tr_zt, f.embed_base(f.trace(f.mul(ratio, zt_dual))))
                    }
                })
                .collect()
        })
        .collect();
    (linalg::rank(f, matrix.clone()) == scaled.len()).then_some(matrix)
}

fn build(
    code: &RMCode,
    erased: Vec<usize>,
    axis: usize,
    basis: Vec<Symbol>,
    dual: Vec<Symbol>,
    scales: Vec<Symbol>,
    coupling: Vec<Vec<Symbol>>,
) -> Result<RepairPlan, RepairError> {
    let f = code.tower();
    let anchors: Vec<Symbol> = erased.iter().map(|&e| code.point(e)[axis]).collect();
    let mut gammas = vec![Vec::new(); erased.len()];
    let mut requests = Vec::with_capacity(code.n() - erased.len());
    for node in (0..code.n()).filter(|i| !erased.contains(i)) {
        let x = code.point(node)[axis];
        if let Some(k) = anchors.iter().position(|&a| a == x) {
            gammas[k].push(node);
            requests.push(NodeRequest::Full { node });
        } else {
            let multipliers = anchors
                .iter()
                .zip(&scales)
                .map(|(&a, &s)| f.div(s, f.sub(x, a)))
                .collect::<Result<Vec<_>, _>>()?;
            requests.push(NodeRequest::Trace { node, multipliers });
        }
    }
    Ok(RepairPlan {
        params: code.params(),
        erased,
        axis,
        basis,
        dual,
        scales,
        anchors,
        gammas,
        requests,
        coupling,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rmcode::CodeParams;

    fn code(p: u32, t: u32, m: usize, d: usize) -> RMCode {
        CodeParams { p, a: 1, t, m, d }.build().unwrap()
    }

    #[test]
    fn single_plan_counts() {
        let c = code(2, 2, 2, 4);
        for erased in 0..c.n() {
            let plan = plan_single(&c, erased, 0, c.tower().basis()).unwrap();
            let full = plan
                .requests()
                .iter()
                .filter(|r| matches!(r, NodeRequest::Full { .. }))
                .count();
            assert_eq!(full, 3);
            assert_eq!(plan.queries().len(), 15);
            assert_eq!(plan.bandwidth_subsymbols(), 18);
            assert_eq!(plan.undeduped_bandwidth(), 18);
        }
        let rs = code(2, 3, 1, 3);
        let plan = plan_single(&rs, 5, 0, rs.tower().basis()).unwrap();
        assert!(plan.gamma_sets()[0].is_empty());
        assert_eq!(plan.bandwidth_subsymbols(), 7);
    }

    #[test]
    fn single_plan_multipliers() {
        let c = code(2, 2, 2, 4);
        let f = c.tower();
        let erased = 6;
        let plan = plan_single(&c, erased, 0, f.basis()).unwrap();
        let anchor = c.point(erased)[0];
        for req in plan.requests() {
            let x = c.point(req.node())[0];
            match req {
                NodeRequest::Full { .. } => assert_eq!(x, anchor),
                NodeRequest::Trace { multipliers, .. } => {
                    assert_eq!(multipliers.len(), 1);
                    assert_eq!(f.mul(multipliers[0], f.sub(x, anchor)), Symbol::ONE);
                }
            }
        }
    }

    #[test]
    fn gate_refusal() {
        let c = code(2, 2, 2, 5);
        assert!(matches!(
            plan_single(&c, 0, 0, c.tower().basis()),
            Err(RepairError::DegreeGate { d: 5, max: 4 })
        ));
        assert!(matches!(
            plan_multi(&c, &[0, 4], None),
            Err(RepairError::DegreeGate { .. })
        ));
    }

    #[test]
    fn axis_and_erasure_validation() {
        let c = code(2, 2, 2, 4);
        let b = c.tower().basis().to_vec();
        assert!(matches!(
            plan_single(&c, 0, 2, &b),
            Err(RepairError::AxisOutOfRange { .. })
        ));
        assert!(matches!(
            plan_single(&c, 16, 0, &b),
            Err(RepairError::Code(_))
        ));
        assert!(matches!(
            plan_multi(&c, &[3], None),
            Err(RepairError::ErasureCount { .. })
        ));
        assert!(matches!(
            plan_multi(&c, &[4, 4], None),
            Err(RepairError::DuplicateErasure(4))
        ));
        assert!(matches!(
            plan_multi(&c, &[0, 4, 1], None),
            Err(RepairError::TooManyErasures { l: 3, t: 2 })
        ));
        assert!(matches!(
            plan(&c, &[]),
            Err(RepairError::ErasureCount { .. })
        ));
    }

    #[test]
    fn condition_examples() {
        let c = code(2, 2, 2, 4);
        // (0,0) and (1,0): first coordinates differ by 1 ∈ F_2^*
        let plan = plan_multi(&c, &[0, 4], None).unwrap();
        assert_eq!(plan.axis(), 0);
        // (0,0) and (v,0): v ∉ F_2 and equal second coordinates
        let err = plan_multi(&c, &[0, 8], None).unwrap_err();
        let RepairError::NoValidCoordinate { diagnostics } = err else {
            panic!("expected a coordinate diagnostic, got {err:?}");
        };
        assert_eq!(diagnostics.len(), 2);
        assert_eq!((diagnostics[0].axis, diagnostics[0].difference), (0, 2));
        assert_eq!((diagnostics[1].axis, diagnostics[1].difference), (1, 0));
        // (0,0) and (0,1) only work on the second coordinate
        assert_eq!(plan_multi(&c, &[0, 1], None).unwrap().axis(), 1);
    }

    #[test]
    fn three_erasures_over_f27() {
        let c = code(3, 3, 1, 10);
        let plan = plan_multi(&c, &[0, 1, 2], None).unwrap();
        assert_eq!(plan.axis(), 0);
        assert_eq!(plan.tau().len(), 2);
        let f = c.tower();
        for &tau in plan.tau() {
            assert!(f.trace(tau).is_zero());
        }
        assert_eq!(plan.bandwidth_subsymbols(), 72);
    }

    #[test]
    fn characteristic_two_cannot_hold_three_erasures() {
        // differences of three distinct F_2 elements cannot all be nonzero
        let c = code(2, 3, 1, 3);
        assert!(matches!(
            plan_multi(&c, &[0, 1, 2], None),
            Err(RepairError::NoValidCoordinate { .. })
        ));
    }

    #[test]
    fn explicit_basis_must_be_kernel_adapted() {
        let c = code(2, 2, 2, 4);
        let f = c.tower();
        let v = f.generator();
        assert!(matches!(
            plan_multi(&c, &[0, 4], Some(&[v, Symbol::ONE])),
            Err(RepairError::BasisNotKernelAdapted)
        ));
        let plan = plan_multi(&c, &[0, 4], Some(&[Symbol::ONE, f.add(v, Symbol::ONE)])).unwrap();
        assert_eq!(plan.basis()[1], f.symbol(3).unwrap());
    }

    #[test]
    fn two_erasure_dedup() {
        let c = code(2, 2, 2, 4);
        let plan = plan_multi(&c, &[0, 4], None).unwrap();
        assert_eq!(plan.gamma_sets()[0].len(), 3);
        assert_eq!(plan.gamma_sets()[1].len(), 3);
        let trace_nodes = plan
            .requests()
            .iter()
            .filter(|r| matches!(r, NodeRequest::Trace { .. }))
            .count();
        assert_eq!(trace_nodes, 8);
        assert_eq!(plan.bandwidth_subsymbols(), 28);
        assert_eq!(plan.undeduped_bandwidth(), 34);
    }
}
