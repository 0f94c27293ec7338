use serde::{Deserialize, Serialize};

use crate::galois::{FieldTower, SubSymbol, Symbol};
use crate::linalg;
use crate::rmcode::{CodeParams, Codeword, RMCode};

use super::plan::{NodeRequest, QueryKind, RepairPlan, TraceQuery};
use super::recovery::RecoveryPoly;
use super::{bandwidth_bounds, RepairError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Response {
    Full(Symbol),
    Trace(SubSymbol),
}

impl Response {
    pub fn index(&self) -> u32 {
        match *self {
            Response::Full(s) => s.index(),
            Response::Trace(c) => c.index(),
        }
    }
}

/// Anything that can answer download queries, e.g. live storage nodes.
///
/// Answers must be a pure function of the query.
pub trait QueryResponder {
    fn respond(&self, query: &TraceQuery) -> Result<Response, RepairError>;
}

/// What an honest node holding `stored` returns.
pub fn answer(f: &FieldTower, query: &TraceQuery, stored: Symbol) -> Response {
    match query.kind {
        QueryKind::Full => Response::Full(stored),
        QueryKind::Trace { multiplier } => Response::Trace(f.trace(f.mul(multiplier, stored))),
    }
}

/// Answers from a codeword; erased positions are unreachable.
pub struct CodewordResponder<'a> {
    tower: &'a FieldTower,
    word: &'a Codeword,
}

impl<'a> CodewordResponder<'a> {
    pub fn new(tower: &'a FieldTower, word: &'a Codeword) -> Self {
        Self { tower, word }
    }
}

impl QueryResponder for CodewordResponder<'_> {
    fn respond(&self, query: &TraceQuery) -> Result<Response, RepairError> {
        let stored = self
            .word
            .get(query.node)
            .ok_or(RepairError::NodeUnavailable { node: query.node })?;
        Ok(answer(self.tower, query, stored))
    }
}

/// A completed repair: the plan, every exchanged message, and the result.
#[derive(Debug, Clone)]
pub struct RepairTranscript {
    pub plan: RepairPlan,
    pub responses: Vec<(TraceQuery, Response)>,
    pub recovered: Vec<(usize, Symbol)>,
    pub bandwidth_subsymbols: u64,
    pub paper_bound: i64,
    pub undeduped_subsymbols: u64,
}

impl RepairTranscript {
    /// The downloaded volume exceeds the closed-form bound stated for the
    /// `ℓ`-erasure scheme (happens when `q^((m−1)t) < t`).
    pub fn exceeds_paper_bound(&self) -> bool {
        self.bandwidth_subsymbols as i64 > self.paper_bound
    }

    pub fn to_json(&self) -> TranscriptJson {
        TranscriptJson {
            params: self.plan.params(),
            erased: self.plan.erased().to_vec(),
            axis: self.plan.axis() + 1,
            tau: self.plan.scales().iter().map(|s| s.index()).collect(),
            queries: self
                .responses
                .iter()
                .map(|(q, r)| QueryRecord {
                    node: q.node,
                    kind: match q.kind {
                        QueryKind::Full => QueryKindTag::Full,
                        QueryKind::Trace { .. } => QueryKindTag::Trace,
                    },
                    multiplier: match q.kind {
                        QueryKind::Full => None,
                        QueryKind::Trace { multiplier } => Some(multiplier.index()),
                    },
                    response: r.index(),
                })
                .collect(),
            bandwidth_subsymbols: self.bandwidth_subsymbols,
            paper_bound: self.paper_bound,
            exceeds_paper_bound: self.exceeds_paper_bound(),
            recovered: self
                .recovered
                .iter()
                .map(|&(node, s)| RecoveredRecord {
                    node,
                    symbol: s.index(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKindTag {
    Full,
    Trace,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub node: usize,
    pub kind: QueryKindTag,
    pub multiplier: Option<u32>,
    pub response: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecoveredRecord {
    pub node: usize,
    pub symbol: u32,
}

/// Wire form of a [`RepairTranscript`]. `axis` is one-based; `tau` lists all
/// `ℓ` scheme multipliers, the first being the unscaled `1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptJson {
    pub params: CodeParams,
    pub erased: Vec<usize>,
    pub axis: usize,
    pub tau: Vec<u32>,
    pub queries: Vec<QueryRecord>,
    pub bandwidth_subsymbols: u64,
    pub paper_bound: i64,
    pub exceeds_paper_bound: bool,
    pub recovered: Vec<RecoveredRecord>,
}

impl TranscriptJson {
    /// Rebuilds the recorded queries and responses against `code`.
    pub fn exchanges(&self, code: &RMCode) -> Result<Vec<(TraceQuery, Response)>, RepairError> {
        let f = code.tower();
        self.queries
            .iter()
            .map(|rec| {
                code.check_point(rec.node)?;
                let (query, response) = match (rec.kind, rec.multiplier) {
                    (QueryKindTag::Full, _) => (
                        TraceQuery::full(rec.node),
                        Response::Full(f.symbol(rec.response as u64)?),
                    ),
                    (QueryKindTag::Trace, Some(m)) => (
                        TraceQuery::trace(rec.node, f.symbol(m as u64)?),
                        Response::Trace(f.subsymbol(rec.response as u64)?),
                    ),
                    (QueryKindTag::Trace, None) => {
                        return Err(RepairError::MalformedTranscript { node: rec.node })
                    }
                };
                Ok((query, response))
            })
            .collect()
    }
}

/// Runs `plan` against `responder` and reconstructs every erased symbol.
///
/// Each scheme `k` contributes `t` trace equations
/// `Tr(σ_k z_i f(s^k)) + Σ_{l≠k} Tr(z_i)·Tr(σ_k f(s^l)) = R_{k,i}`, where
/// `R_{k,i} = −Σ Tr(r_{k,i}(s) f(s))` over the surviving nodes. With a single
/// erasure the `t` traces give the symbol directly through the dual basis.
/// With several, the basis is `{ker Tr basis, z_t}` so the cross terms only
/// touch the `z_t` equations, and the erasures are solved in order:
///
/// 1. the unscaled scheme yields `Tr(z_i f(s^1))` for `i < t`;
/// 2. each `τ ∈ ker Tr` is a combination of those `z_i`, giving `Tr(τ f(s^1))`;
/// 3. the scaled schemes' `z_t` equations, now free of `f(s^1)`, are solved
///    together for the remaining trace of each `τ f(s^k)`;
/// 4. the unscaled `z_t` equation closes with the recovered `Tr(f(s^k))`.
pub fn execute(
    code: &RMCode,
    plan: &RepairPlan,
    responder: &impl QueryResponder,
) -> Result<RepairTranscript, RepairError> {
    if plan.params() != code.params() {
        return Err(RepairError::Code(
            crate::rmcode::CodeError::ParamsMismatch {
                expected: code.params(),
                found: plan.params(),
            },
        ));
    }
    let f = code.tower();
    let t = f.t() as usize;
    let l = plan.erasure_count();
    let polys = plan.recovery_polys(f);
    let mut responses = Vec::new();
    // rhs[k][i] accumulates Σ Tr(r_{k,i}(s) f(s)); negated below
    let mut rhs = vec![vec![SubSymbol::ZERO; t]; l];

    for request in plan.requests() {
        let node = request.node();
        let point = code.point(node);
        match request {
            NodeRequest::Full { .. } => {
                let query = TraceQuery::full(node);
                let value = match responder.respond(&query)? {
                    Response::Full(v) => v,
                    Response::Trace(_) => return Err(RepairError::InconsistentResponse { node }),
                };
                responses.push((query, Response::Full(value)));
                for (k, row) in rhs.iter_mut().enumerate() {
                    for (i, acc) in row.iter_mut().enumerate() {
                        let r: &RecoveryPoly = &polys[k * t + i];
                        let term = f.trace(f.mul(r.eval(f, point), value));
                        *acc = f.base_add(*acc, term);
                    }
                }
            }
            NodeRequest::Trace { multipliers, .. } => {
                let x = point[plan.axis()];
                for (k, &multiplier) in multipliers.iter().enumerate() {
                    let query = TraceQuery::trace(node, multiplier);
                    let y = match responder.respond(&query)? {
                        Response::Trace(y) => y,
                        Response::Full(_) => {
                            return Err(RepairError::InconsistentResponse { node })
                        }
                    };
                    responses.push((query, Response::Trace(y)));
                    let shifted = f.sub(x, plan.anchors()[k]);
                    for (i, acc) in rhs[k].iter_mut().enumerate() {
                        // Tr(r(s) f(s)) = Tr(z_i(s_j − a)) · Tr(σ f(s)/(s_j − a))
                        let coeff = f.trace(f.mul(plan.basis()[i], shifted));
                        *acc = f.base_add(*acc, f.base_mul(coeff, y));
                    }
                }
            }
        }
    }
    for row in rhs.iter_mut() {
        for x in row.iter_mut() {
            *x = f.base_neg(*x);
        }
    }

    let values = if l == 1 {
        vec![f.combine(&rhs[0], plan.dual_basis())]
    } else {
        reconstruct_coupled(f, plan, &rhs)?
    };

    let bandwidth_subsymbols = responses.iter().map(|(q, _)| q.cost(f.t())).sum();
    let bounds = bandwidth_bounds(code, l);
    Ok(RepairTranscript {
        recovered: plan.erased().iter().copied().zip(values).collect(),
        responses,
        bandwidth_subsymbols,
        paper_bound: bounds.paper_bound,
        undeduped_subsymbols: plan.undeduped_bandwidth(),
        plan: plan.clone(),
    })
}

fn reconstruct_coupled(
    f: &FieldTower,
    plan: &RepairPlan,
    rhs: &[Vec<SubSymbol>],
) -> Result<Vec<Symbol>, RepairError> {
    let t = f.t() as usize;
    let l = rhs.len();
    let basis = plan.basis();
    let dual = plan.dual_basis();
    let scales = plan.scales();
    let tr_zt = f.trace(basis[t - 1]);
    let zt_dual = dual[t - 1];
    let tr = |x: Symbol| f.trace(x);

    // Step 1
    let first_known = &rhs[0][..t - 1];
    // Step 2: τ = Σ_{i<t} Tr(τ z′_i) z_i, since Tr(τ z′_t) = z′_t·Tr(τ) = 0
    let tau_on_first: Vec<SubSymbol> = scales
        .iter()
        .map(|&tau| {
            let alphas: Vec<SubSymbol> =
                dual[..t - 1].iter().map(|&zd| tr(f.mul(tau, zd))).collect();
            alphas
                .iter()
                .zip(first_known)
                .fold(SubSymbol::ZERO, |acc, (&a, &y)| {
                    f.base_add(acc, f.base_mul(a, y))
                })
        })
        .collect();

    // Step 3: g_k = σ_k f(s^k) = h_k + u_k z′_t with h_k known
    let partial: Vec<Symbol> = rhs
        .iter()
        .map(|row| f.combine(&row[..t - 1], &dual[..t - 1]))
        .collect();
    let ratio = |k: usize, j: usize| f.div(scales[k], scales[j]).map_err(RepairError::from);
    let mut system_rhs = Vec::with_capacity(l - 1);
    for k in 1..l {
        let mut known = tau_on_first[k];
        for j in (1..l).filter(|&j| j != k) {
            known = f.base_add(known, tr(f.mul(ratio(k, j)?, partial[j])));
        }
        system_rhs.push(f.embed_base(f.base_sub(rhs[k][t - 1], f.base_mul(tr_zt, known))));
    }
    let solution = linalg::solve_affine(f, &plan.coupling().to_vec(), &system_rhs)
        .filter(|s| s.nullspace.is_empty())
        .ok_or(RepairError::SingularCoupling { l })?;

    let mut values = vec![Symbol::ZERO; l];
    for k in 1..l {
        let g = f.add(partial[k], f.mul(solution.particular[k - 1], zt_dual));
        values[k] = f.div(g, scales[k])?;
    }

    // Step 4
    let others = values[1..]
        .iter()
        .fold(SubSymbol::ZERO, |acc, &v| f.base_add(acc, tr(v)));
    let last = f.base_sub(rhs[0][t - 1], f.base_mul(tr_zt, others));
    values[0] = f.add(partial[0], f.mul(f.embed_base(last), zt_dual));
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::repair::{plan_multi, plan_single};
    use crate::rmcode::CodeParams;

    fn message(code: &RMCode, seed: u64) -> Vec<Symbol> {
        let order = code.tower().order() as u64;
        let mut x = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (0..code.k())
            .map(|_| {
                x = x
                    .wrapping_mul(6364136223846793005)
                    .wrapping_add(1442695040888963407);
                code.tower().symbol((x >> 33) % order).unwrap()
            })
            .collect()
    }

    #[test]
    fn single_erasure_round_trip() {
        let code = CodeParams {
            p: 2,
            a: 1,
            t: 2,
            m: 2,
            d: 4,
        }
        .build()
        .unwrap();
        let word = code.encode(&message(&code, 7)).unwrap();
        for erased in 0..code.n() {
            let plan = plan_single(&code, erased, 0, code.tower().basis()).unwrap();
            let damaged = word.clone().with_erasures(&[erased]);
            let tr = execute(
                &code,
                &plan,
                &CodewordResponder::new(code.tower(), &damaged),
            )
            .unwrap();
            assert_eq!(tr.recovered, vec![(erased, word.get(erased).unwrap())]);
            assert_eq!(tr.bandwidth_subsymbols, 18);
        }
    }

    #[test]
    fn constant_codeword() {
        let code = CodeParams {
            p: 3,
            a: 1,
            t: 2,
            m: 1,
            d: 2,
        }
        .build()
        .unwrap();
        let c = code.tower().symbol(7).unwrap();
        let mut msg = vec![Symbol::ZERO; code.k()];
        msg[0] = c;
        let word = code.encode(&msg).unwrap().with_erasures(&[4]);
        let plan = plan_single(&code, 4, 0, code.tower().basis()).unwrap();
        let tr = execute(&code, &plan, &CodewordResponder::new(code.tower(), &word)).unwrap();
        assert_eq!(tr.recovered, vec![(4, c)]);
    }

    #[test]
    fn three_erasures_f27() {
        let code = CodeParams {
            p: 3,
            a: 1,
            t: 3,
            m: 1,
            d: 10,
        }
        .build()
        .unwrap();
        let plan = plan_multi(&code, &[0, 1, 2], None).unwrap();
        for seed in 0..5 {
            let word = code.encode(&message(&code, seed)).unwrap();
            let damaged = word.clone().with_erasures(&[0, 1, 2]);
            let tr = execute(
                &code,
                &plan,
                &CodewordResponder::new(code.tower(), &damaged),
            )
            .unwrap();
            for (node, value) in &tr.recovered {
                assert_eq!(word.get(*node), Some(*value));
            }
            assert_eq!(tr.bandwidth_subsymbols, 72);
            assert!(tr.exceeds_paper_bound());
        }
    }

    #[test]
    fn erased_node_is_unreachable() {
        let code = CodeParams {
            p: 2,
            a: 1,
            t: 2,
            m: 2,
            d: 4,
        }
        .build()
        .unwrap();
        let word = code
            .encode(&message(&code, 1))
            .unwrap()
            .with_erasures(&[0, 5]);
        let plan = plan_single(&code, 0, 0, code.tower().basis()).unwrap();
        assert_eq!(
            execute(&code, &plan, &CodewordResponder::new(code.tower(), &word)).unwrap_err(),
            RepairError::NodeUnavailable { node: 5 }
        );
    }
}
