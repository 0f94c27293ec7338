//! Self-checks run by `rmrepair verify`: field identities, code duality,
//! repair exactness against the oracle, and fault detection.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dss::{Cluster, FailureEvent};
use crate::galois::{FieldTower, SubSymbol, Symbol};
use crate::repair::{self, RepairError};
use crate::rmcode::{CodeError, CodeParams, Codeword, RMCode};

/// Largest field whose pairwise identities are checked exhaustively.
pub const EXHAUSTIVE_FIELD_ORDER: u32 = 1 << 10;
/// Largest code length `verify` accepts.
pub const MAX_VERIFY_LEN: usize = 1 << 12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub params: CodeParams,
    pub seed: u64,
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    fn push(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(CheckResult {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }
}

/// `ℓ` points whose first coordinates are the distinct base-field elements
/// `0, 1, …, ℓ − 1` and whose other coordinates are zero. Their pairwise
/// differences lie in `F_q^*`, so they satisfy the multi-erasure condition.
pub fn spread_erasures(code: &RMCode, l: usize) -> Option<Vec<usize>> {
    let q = code.tower().q() as usize;
    if l == 0 || l > q {
        return None;
    }
    let stride = code.n() / code.tower().order() as usize;
    Some((0..l).map(|c| c * stride).collect())
}

pub fn run(params: CodeParams, seed: u64) -> Result<VerifyReport, CodeError> {
    let code = Arc::new(params.build()?);
    let mut report = VerifyReport {
        params,
        seed,
        checks: Vec::new(),
    };
    if code.n() > MAX_VERIFY_LEN {
        report.push(
            "desk scale",
            false,
            format!("n = {} exceeds {}", code.n(), MAX_VERIFY_LEN),
        );
        return Ok(report);
    }
    field_checks(code.tower(), &mut report);
    code_checks(&code, &mut report)?;
    repair_checks(&code, seed, &mut report);
    Ok(report)
}

fn field_checks(f: &FieldTower, report: &mut VerifyReport) {
    let exhaustive = f.order() <= EXHAUSTIVE_FIELD_ORDER;
    let sample: Vec<Symbol> = if exhaustive {
        f.elements().collect()
    } else {
        f.elements()
            .step_by((f.order() / EXHAUSTIVE_FIELD_ORDER) as usize + 1)
            .collect()
    };
    let mut additive = true;
    for &x in &sample {
        for &y in &sample {
            additive &= f.trace(f.add(x, y)) == f.base_add(f.trace(x), f.trace(y));
        }
    }
    let mut linear = true;
    for c in f.base_elements() {
        for &x in &sample {
            linear &= f.trace(f.mul(f.embed_base(c), x)) == f.base_mul(c, f.trace(x));
        }
    }
    report.push(
        "field: trace additive and F_q-linear",
        additive && linear,
        format!("{} elements checked", sample.len()),
    );

    let kernel_size = f
        .elements()
        .filter(|&x| f.trace(x) == SubSymbol::ZERO)
        .count() as u64;
    let expected = (f.q() as u64).pow(f.t() - 1);
    report.push(
        "field: |ker Tr| = q^(t-1)",
        kernel_size == expected,
        format!("{kernel_size} (expected {expected})"),
    );

    match f.dual_basis(f.basis()) {
        Ok(dual) => {
            let basis = f.basis();
            let pairing = (0..basis.len()).all(|i| {
                (0..dual.len()).all(|j| {
                    let want = if i == j {
                        SubSymbol::ONE
                    } else {
                        SubSymbol::ZERO
                    };
                    f.trace(f.mul(basis[i], dual[j])) == want
                })
            });
            report.push(
                "field: dual basis pairing",
                pairing,
                format!("t = {}", f.t()),
            );
            let round_trip = f.elements().all(|x| f.expand_in_dual(x, basis, &dual) == x);
            report.push("field: dual expansion round trip", round_trip, "");
        }
        Err(e) => report.push("field: dual basis pairing", false, e.to_string()),
    }
}

fn code_checks(code: &RMCode, report: &mut VerifyReport) -> Result<(), CodeError> {
    let dual_degree = code.dual_degree();
    if dual_degree < 0 {
        report.push(
            "code: dual code",
            true,
            "dual degree negative; dual is trivial",
        );
        return Ok(());
    }
    let dual = RMCode::new(code.tower_arc(), code.m(), dual_degree as usize)?;
    let mut members = true;
    for row in dual.generator() {
        members &= code.is_dual_member(row)?;
    }
    report.push(
        "code: dual-degree monomials are dual codewords",
        members,
        format!("{} rows of degree <= {}", dual.k(), dual_degree),
    );
    Ok(())
}

fn repair_checks(code: &Arc<RMCode>, seed: u64, report: &mut VerifyReport) {
    if !repair::degree_gate(code) {
        let refused = matches!(
            repair::plan(code, &[0]),
            Err(RepairError::DegreeGate { .. })
        );
        report.push(
            "repair: degree gate refuses",
            refused,
            format!("d = {} > {}", code.d(), repair::gate_bound(code)),
        );
        return;
    }
    let sealed = Cluster::from_seed(code.clone(), seed);
    let original: Vec<Symbol> = sealed.snapshot().symbols().expect("fresh cluster");

    let mut exact = true;
    let mut dual_ok = true;
    let mut replay_ok = true;
    let mut untouched = true;
    let mut detail = String::new();
    let mut erasure_sets: Vec<Vec<usize>> = (0..code.n()).map(|i| vec![i]).collect();
    erasure_sets.extend((2..=code.tower().t() as usize).filter_map(|l| spread_erasures(code, l)));
    for erased in &erasure_sets {
        let mut cluster = sealed.clone();
        cluster
            .fail(&FailureEvent::new(erased.clone()))
            .expect("in range");
        let transcript = match cluster.repair_failed() {
            Ok(tr) => tr,
            Err(e) => {
                exact = false;
                detail = format!("erasures {erased:?}: {e}");
                break;
            }
        };
        let oracle =
            code.oracle_erasure_decode(&Codeword::complete(original.clone()).with_erasures(erased));
        for &(node, value) in &transcript.recovered {
            exact &= value == original[node];
            exact &= oracle.as_ref().is_ok_and(|w| w.get(node) == Some(value));
        }
        let now = cluster.snapshot();
        untouched &= (0..code.n()).all(|j| now.get(j) == Some(original[j]));
        for poly in transcript.plan.recovery_polys(code.tower()) {
            dual_ok &= code
                .is_dual_member(&poly.evaluation_vector(code))
                .unwrap_or(false);
        }
        replay_ok &= cluster
            .replay(&transcript.to_json())
            .is_ok_and(|m| m.is_empty());
    }
    report.push(
        "repair: recovered symbols match original and oracle",
        exact,
        if detail.is_empty() {
            format!("{} erasure sets", erasure_sets.len())
        } else {
            detail
        },
    );
    report.push(
        "repair: recovery polynomials are dual codewords",
        dual_ok,
        "",
    );
    report.push("dss: repair writes only erased nodes", untouched, "");
    report.push("dss: transcript replay reproduces responses", replay_ok, "");

    report.push_fault_injection(code, &sealed, &original);
}

impl VerifyReport {
    fn push_fault_injection(&mut self, code: &RMCode, sealed: &Cluster, original: &[Symbol]) {
        let name = "dss: corrupted survivor detected";
        if code.k() == code.n() {
            self.push(name, true, "k = n leaves no redundancy to detect with");
            return;
        }
        let f = code.tower();
        let mut cluster = sealed.clone();
        let victim = code.n() - 1;
        cluster
            .corrupt(victim, f.add(original[victim], Symbol::ONE))
            .expect("in range");
        cluster.fail(&FailureEvent::new([0])).expect("in range");
        let repaired = cluster.repair_failed();
        let word_rejected = matches!(
            code.oracle_erasure_decode(&cluster.snapshot()),
            Err(CodeError::Inconsistent)
        );
        let wrong_symbol = repaired.map_or(true, |tr| tr.recovered[0].1 != original[0]);
        self.push(
            name,
            word_rejected,
            format!(
                "node {victim} corrupted; oracle {}; repaired node 0 {}",
                if word_rejected {
                    "rejects state"
                } else {
                    "accepts state"
                },
                if wrong_symbol { "wrong" } else { "unaffected" }
            ),
        );
    }
}
