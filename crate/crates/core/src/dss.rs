//! In-process storage cluster: one node per codeword position, failure
//! injection, and a coordinator that repairs failed nodes from live state.

use std::cell::Cell;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::galois::Symbol;
use crate::linalg;
use crate::repair::{
    self, QueryResponder, RepairError, RepairTranscript, Response, TraceQuery, TranscriptJson,
};
use crate::rmcode::{CodeError, CodeParams, Codeword, CodewordJson, RMCode};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DssError {
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Repair(#[from] RepairError),
    #[error("no failed nodes to repair")]
    NothingToRepair,
    #[error("survivors span rank {rank} < k = {k}; a full-symbol decode is impossible")]
    Undecodable { rank: usize, k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeState {
    Alive(Symbol),
    Failed,
}

/// Nodes that fail together.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FailureEvent {
    pub nodes: Vec<usize>,
}

impl FailureEvent {
    pub fn new(nodes: impl Into<Vec<usize>>) -> Self {
        Self {
            nodes: nodes.into(),
        }
    }
}

/// Uniform message for `code` drawn from a seeded ChaCha stream.
pub fn random_message(code: &RMCode, rng: &mut impl Rng) -> Vec<Symbol> {
    let order = code.tower().order() as u64;
    (0..code.k())
        .map(|_| {
            code.tower()
                .symbol(rng.gen_range(0..order))
                .expect("below order")
        })
        .collect()
}

pub fn seeded_message(code: &RMCode, seed: u64) -> Vec<Symbol> {
    random_message(code, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// A single codeword spread over `n` nodes.
#[derive(Debug, Clone)]
pub struct Cluster {
    code: Arc<RMCode>,
    nodes: Vec<NodeState>,
    history: Vec<RepairTranscript>,
    seed: u64,
}

impl Cluster {
    pub fn init(code: Arc<RMCode>, message: &[Symbol], seed: u64) -> Result<Self, DssError> {
        let word = code.encode(message)?;
        let nodes = word
            .symbols()
            .expect("fresh codeword")
            .into_iter()
            .map(NodeState::Alive)
            .collect();
        Ok(Self {
            code,
            nodes,
            history: Vec::new(),
            seed,
        })
    }

    /// Cluster restored from saved state; `None` entries start out failed.
    pub fn from_codeword(code: Arc<RMCode>, word: &Codeword, seed: u64) -> Result<Self, DssError> {
        if word.len() != code.n() {
            return Err(CodeError::LengthMismatch {
                expected: code.n(),
                got: word.len(),
            }
            .into());
        }
        let nodes = word
            .values()
            .iter()
            .map(|v| v.map_or(NodeState::Failed, NodeState::Alive))
            .collect();
        Ok(Self {
            code,
            nodes,
            history: Vec::new(),
            seed,
        })
    }

    /// Cluster holding the encoding of [`seeded_message`].
    pub fn from_seed(code: Arc<RMCode>, seed: u64) -> Self {
        let message = seeded_message(&code, seed);
        Self::init(code, &message, seed).expect("message has length k")
    }

    pub fn code(&self) -> &RMCode {
        &self.code
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn history(&self) -> &[RepairTranscript] {
        &self.history
    }

    pub fn failed(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i] == NodeState::Failed)
            .collect()
    }

    /// Coordinator-visible state; failed nodes read as erasures.
    pub fn snapshot(&self) -> Codeword {
        Codeword::new(
            self.nodes
                .iter()
                .map(|s| match *s {
                    NodeState::Alive(v) => Some(v),
                    NodeState::Failed => None,
                })
                .collect(),
        )
    }

    /// Marks nodes failed and drops their symbols. Idempotent.
    pub fn fail(&mut self, event: &FailureEvent) -> Result<(), DssError> {
        for &node in &event.nodes {
            self.code.check_point(node)?;
        }
        for &node in &event.nodes {
            self.nodes[node] = NodeState::Failed;
        }
        Ok(())
    }

    /// Overwrites a live node's symbol, for fault injection.
    pub fn corrupt(&mut self, node: usize, value: Symbol) -> Result<(), DssError> {
        self.code.check_point(node)?;
        self.nodes[node] = NodeState::Alive(value);
        Ok(())
    }

    /// Plans and runs a repair of every failed node, writes the recovered
    /// symbols back and records the transcript. Leaves the cluster untouched
    /// on error.
    pub fn repair_failed(&mut self) -> Result<RepairTranscript, DssError> {
        let failed = self.failed();
        if failed.is_empty() {
            return Err(DssError::NothingToRepair);
        }
        let plan = repair::plan(&self.code, &failed)?;
        let responder = self.responder();
        let transcript = repair::execute(&self.code, &plan, &responder)?;
        debug_assert_eq!(responder.failed_reads(), 0);
        for &(node, value) in &transcript.recovered {
            self.nodes[node] = NodeState::Alive(value);
        }
        self.history.push(transcript.clone());
        Ok(transcript)
    }

    /// Live-node query answering; failed nodes refuse and are counted.
    pub fn responder(&self) -> ClusterResponder<'_> {
        ClusterResponder {
            cluster: self,
            failed_reads: Cell::new(0),
            reads: Cell::new(0),
        }
    }

    /// Subsymbols a full-symbol decode would read: `t` per column of a
    /// greedily chosen set of `k` independent surviving generator columns.
    pub fn naive_bandwidth(&self, failed: &[usize]) -> Result<u64, DssError> {
        if failed.is_empty() {
            return Ok(0);
        }
        for &node in failed {
            self.code.check_point(node)?;
        }
        let f = self.code.tower();
        let k = self.code.k();
        let generator = self.code.generator();
        let mut chosen: Vec<Vec<Symbol>> = Vec::with_capacity(k);
        for j in (0..self.code.n()).filter(|j| !failed.contains(j)) {
            if chosen.len() == k {
                break;
            }
            chosen.push(generator.iter().map(|row| row[j]).collect());
            if linalg::rank(f, chosen.clone()) < chosen.len() {
                chosen.pop();
            }
        }
        if chosen.len() < k {
            return Err(DssError::Undecodable {
                rank: chosen.len(),
                k,
            });
        }
        Ok(f.t() as u64 * k as u64)
    }

    /// Re-asks every recorded query; returns the positions whose answer
    /// differs from the recorded one.
    pub fn replay(&self, transcript: &TranscriptJson) -> Result<Vec<usize>, DssError> {
        let exchanges = transcript.exchanges(&self.code)?;
        let responder = self.responder();
        let mut mismatches = Vec::new();
        for (i, (query, recorded)) in exchanges.iter().enumerate() {
            if responder.respond(query)? != *recorded {
                mismatches.push(i);
            }
        }
        Ok(mismatches)
    }

    pub fn to_json(&self) -> CodewordJson {
        self.code.codeword_to_json(&self.snapshot())
    }
}

pub struct ClusterResponder<'a> {
    cluster: &'a Cluster,
    failed_reads: Cell<usize>,
    reads: Cell<usize>,
}

impl ClusterResponder<'_> {
    /// Attempts to read a failed node.
    pub fn failed_reads(&self) -> usize {
        self.failed_reads.get()
    }

    pub fn reads(&self) -> usize {
        self.reads.get()
    }
}

impl QueryResponder for ClusterResponder<'_> {
    fn respond(&self, query: &TraceQuery) -> Result<Response, RepairError> {
        self.reads.set(self.reads.get() + 1);
        match self.cluster.nodes.get(query.node) {
            Some(&NodeState::Alive(v)) => Ok(repair::answer(self.cluster.code.tower(), query, v)),
            _ => {
                self.failed_reads.set(self.failed_reads.get() + 1);
                Err(RepairError::NodeUnavailable { node: query.node })
            }
        }
    }
}

/// Scripted run: `failures` are applied one event at a time, each followed
/// by a repair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub params: CodeParams,
    pub seed: u64,
    pub failures: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepOutcome {
    pub failed: Vec<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transcript: Option<TranscriptJson>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub naive: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub params: CodeParams,
    pub seed: u64,
    pub steps: Vec<StepOutcome>,
    pub final_state: CodewordJson,
}

impl ScenarioReport {
    pub fn all_repaired(&self) -> bool {
        self.steps.iter().all(|s| s.error.is_none())
    }
}

/// Runs a scenario on a seeded cluster. Stops at the first failed repair,
/// whose diagnostic ends the step list.
pub fn run_scenario(scenario: &Scenario) -> Result<ScenarioReport, DssError> {
    let code = Arc::new(scenario.params.build()?);
    let mut cluster = Cluster::from_seed(code, scenario.seed);
    let mut steps = Vec::new();
    for nodes in &scenario.failures {
        cluster.fail(&FailureEvent::new(nodes.clone()))?;
        let failed = cluster.failed();
        let naive = cluster.naive_bandwidth(&failed).ok();
        match cluster.repair_failed() {
            Ok(transcript) => steps.push(StepOutcome {
                failed,
                transcript: Some(transcript.to_json()),
                naive,
                error: None,
            }),
            Err(err) => {
                steps.push(StepOutcome {
                    failed,
                    transcript: None,
                    naive,
                    error: Some(err.to_string()),
                });
                break;
            }
        }
    }
    Ok(ScenarioReport {
        params: scenario.params,
        seed: scenario.seed,
        steps,
        final_state: cluster.to_json(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cluster(p: u32, t: u32, m: usize, d: usize, seed: u64) -> Cluster {
        let code = Arc::new(CodeParams { p, a: 1, t, m, d }.build().unwrap());
        Cluster::from_seed(code, seed)
    }

    #[test]
    fn zero_message_cluster() {
        let code = Arc::new(
            CodeParams {
                p: 2,
                a: 1,
                t: 2,
                m: 2,
                d: 4,
            }
            .build()
            .unwrap(),
        );
        let c = Cluster::init(code.clone(), &vec![Symbol::ZERO; code.k()], 0).unwrap();
        assert!(c
            .nodes()
            .iter()
            .all(|&s| s == NodeState::Alive(Symbol::ZERO)));
        assert!(Cluster::init(code, &[Symbol::ONE], 0).is_err());
    }

    #[test]
    fn seeded_clusters_are_reproducible() {
        let a = cluster(2, 2, 2, 4, 11);
        let b = cluster(2, 2, 2, 4, 11);
        assert_eq!(a.nodes(), b.nodes());
        assert_eq!(a.nodes().len(), 16);
        assert!(a.history().is_empty());
        assert_ne!(a.nodes(), cluster(2, 2, 2, 4, 12).nodes());
    }

    #[test]
    fn failure_injection() {
        let mut c = cluster(2, 2, 2, 4, 3);
        let before = c.nodes().to_vec();
        c.fail(&FailureEvent::default()).unwrap();
        assert_eq!(c.nodes(), before.as_slice());
        c.fail(&FailureEvent::new([0])).unwrap();
        let once = c.nodes().to_vec();
        c.fail(&FailureEvent::new([0])).unwrap();
        assert_eq!(c.nodes(), once.as_slice());
        c.fail(&FailureEvent::new((0..16).collect::<Vec<_>>()))
            .unwrap();
        assert_eq!(c.failed().len(), 16);
        let r = c.responder();
        assert!(r.respond(&TraceQuery::full(3)).is_err());
        assert_eq!(r.failed_reads(), 1);
        assert!(c.fail(&FailureEvent::new([16])).is_err());
    }

    #[test]
    fn single_and_double_repair() {
        let mut c = cluster(2, 2, 2, 4, 5);
        let sealed = c.nodes().to_vec();
        c.fail(&FailureEvent::new([9])).unwrap();
        let tr = c.repair_failed().unwrap();
        assert_eq!(tr.bandwidth_subsymbols, 18);
        assert_eq!(c.nodes(), sealed.as_slice());

        c.fail(&FailureEvent::new([0, 4])).unwrap();
        let tr = c.repair_failed().unwrap();
        assert_eq!(tr.bandwidth_subsymbols, 28);
        assert_eq!(c.nodes(), sealed.as_slice());
        assert_eq!(c.history().len(), 2);
    }

    #[test]
    fn refused_repair_leaves_cluster_unchanged() {
        let mut c = cluster(2, 2, 2, 4, 5);
        c.fail(&FailureEvent::new([0, 8])).unwrap();
        let before = c.nodes().to_vec();
        let err = c.repair_failed().unwrap_err();
        assert!(matches!(
            err,
            DssError::Repair(RepairError::NoValidCoordinate { .. })
        ));
        assert_eq!(c.nodes(), before.as_slice());
        assert!(c.history().is_empty());
        assert_eq!(
            cluster(2, 2, 2, 4, 0).repair_failed().unwrap_err(),
            DssError::NothingToRepair
        );
    }

    #[test]
    fn naive_baselines() {
        let rs = cluster(2, 3, 1, 3, 0);
        assert_eq!(rs.naive_bandwidth(&[2]).unwrap(), 12);
        assert_eq!(rs.naive_bandwidth(&[]).unwrap(), 0);
        let rm = cluster(2, 2, 2, 4, 0);
        assert_eq!(rm.code().k(), 13);
        assert_eq!(rm.naive_bandwidth(&[0]).unwrap(), 26);
        let all: Vec<usize> = (0..8).collect();
        assert!(matches!(
            rs.naive_bandwidth(&all),
            Err(DssError::Undecodable { .. })
        ));
    }

    #[test]
    fn replay_matches_after_repair() {
        let mut c = cluster(3, 3, 1, 10, 9);
        c.fail(&FailureEvent::new([0, 1, 2])).unwrap();
        let tr = c.repair_failed().unwrap().to_json();
        assert!(c.replay(&tr).unwrap().is_empty());
        let mut tampered = tr.clone();
        tampered.queries[0].response = (tampered.queries[0].response + 1) % 3;
        assert_eq!(c.replay(&tampered).unwrap(), vec![0]);
    }

    #[test]
    fn scenario_stops_at_first_refusal() {
        let scenario = Scenario {
            params: CodeParams {
                p: 2,
                a: 1,
                t: 2,
                m: 2,
                d: 4,
            },
            seed: 1,
            failures: vec![vec![3], vec![0, 4], vec![0, 8], vec![1]],
        };
        let report = run_scenario(&scenario).unwrap();
        assert_eq!(report.steps.len(), 3);
        assert!(!report.all_repaired());
        assert!(report.steps[2].error.as_deref().unwrap().contains("F_q^*"));
        assert_eq!(
            report
                .final_state
                .values
                .iter()
                .filter(|v| v.is_none())
                .count(),
            2
        );
    }
}
