//! Exact worst-case edge loads over all valid demand sets.
//!
//! For a fixed edge, the adversary maximizes the total demand routed through
//! it subject to the per-terminal bounds: a fractional b-matching on the
//! "demand graph" whose vertices are the terminals and whose edges are the
//! pairs routed through the probed edge. The fractional optimum is
//! half-integral, and equals half the integral maximum of a b-matching in the
//! bipartite double cover, which we compute with a deterministic
//! augmenting-path max-flow. Results therefore have denominator 1 or 2.

use crate::model::{DemandSet, Instance, NodeId, VpnSolution};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeasibilityError {
    #[error("demand graph references node {0} outside its terminal list")]
    UnknownVertex(NodeId),
}

/// Per-edge adversary: terminals with budgets, plus the set of terminal pairs
/// whose chosen path crosses the probed network edge.
#[derive(Debug, Clone)]
pub struct DemandGraph {
    terminals: Vec<NodeId>,
    budgets: Vec<u64>,
    demand_edges: Vec<(usize, usize)>,
}

impl DemandGraph {
    /// `terminals` and `budgets` are parallel; `pairs` are node-id pairs.
    pub fn new(
        terminals: Vec<NodeId>,
        budgets: Vec<u64>,
        pairs: &[(NodeId, NodeId)],
    ) -> Result<DemandGraph, FeasibilityError> {
        assert_eq!(terminals.len(), budgets.len());
        assert!(budgets.iter().all(|&b| b > 0), "budgets must be positive");
        let index = |v: NodeId| {
            terminals
                .iter()
                .position(|&t| t == v)
                .ok_or(FeasibilityError::UnknownVertex(v))
        };
        let mut demand_edges = Vec::with_capacity(pairs.len());
        for &(a, b) in pairs {
            let i = index(a)?;
            let j = index(b)?;
            assert!(i != j, "demand edge with equal endpoints");
            demand_edges.push((i.min(j), i.max(j)));
        }
        demand_edges.sort_unstable();
        demand_edges.dedup();
        Ok(DemandGraph {
            terminals,
            budgets,
            demand_edges,
        })
    }

    /// Demand graph of one network edge under a given solution's paths.
    pub fn for_edge(instance: &Instance, solution: &VpnSolution, edge: usize) -> DemandGraph {
        let terminals = instance.terminals().to_vec();
        let budgets = terminals
            .iter()
            .map(|&t| instance.bound(t).unwrap())
            .collect();
        let pairs: Vec<(NodeId, NodeId)> = solution
            .paths()
            .iter()
            .filter(|(_, path)| path.contains_edge(edge))
            .map(|(&pair, _)| pair)
            .collect();
        DemandGraph::new(terminals, budgets, &pairs).unwrap()
    }

    pub fn terminals(&self) -> &[NodeId] {
        &self.terminals
    }

    pub fn budgets(&self) -> &[u64] {
        &self.budgets
    }

    pub fn demand_edges(&self) -> &[(usize, usize)] {
        &self.demand_edges
    }
}

/// Deterministic BFS augmenting-path max-flow on a tiny integer network.
struct MaxFlow {
    // edge i has reverse edge i^1
    to: Vec<usize>,
    cap: Vec<u64>,
    adj: Vec<Vec<usize>>,
}

impl MaxFlow {
    fn new(n: usize) -> MaxFlow {
        MaxFlow {
            to: Vec::new(),
            cap: Vec::new(),
            adj: vec![Vec::new(); n],
        }
    }

    fn add_edge(&mut self, from: usize, to: usize, cap: u64) -> usize {
        let id = self.to.len();
        self.to.push(to);
        self.cap.push(cap);
        self.adj[from].push(id);
        self.to.push(from);
        self.cap.push(0);
        self.adj[to].push(id + 1);
        id
    }

    fn run(&mut self, source: usize, sink: usize) -> u64 {
        let mut total = 0;
        loop {
            let mut pred: Vec<Option<usize>> = vec![None; self.adj.len()];
            let mut queue = std::collections::VecDeque::new();
            queue.push_back(source);
            while let Some(v) = queue.pop_front() {
                if v == sink {
                    break;
                }
                for &e in &self.adj[v] {
                    let w = self.to[e];
                    if self.cap[e] > 0 && pred[w].is_none() && w != source {
                        pred[w] = Some(e);
                        queue.push_back(w);
                    }
                }
            }
            if pred[sink].is_none() {
                return total;
            }
            let mut bottleneck = u64::MAX;
            let mut v = sink;
            while v != source {
                let e = pred[v].unwrap();
                bottleneck = bottleneck.min(self.cap[e]);
                v = self.to[e ^ 1];
            }
            let mut v = sink;
            while v != source {
                let e = pred[v].unwrap();
                self.cap[e] -= bottleneck;
                self.cap[e ^ 1] += bottleneck;
                v = self.to[e ^ 1];
            }
            total += bottleneck;
        }
    }

    fn flow_on(&self, edge_id: usize, original_cap: u64) -> u64 {
        original_cap - self.cap[edge_id]
    }
}

/// Shared double-cover computation: total flow plus per-demand-edge flows on
/// the two mirror arcs.
fn double_cover(dg: &DemandGraph) -> (u64, Vec<(u64, u64)>) {
    let k = dg.terminals.len();
    if dg.demand_edges.is_empty() {
        return (0, Vec::new());
    }
    let source = 0;
    let left = |i: usize| 1 + i;
    let right = |i: usize| 1 + k + i;
    let sink = 1 + 2 * k;
    let inf: u64 = dg.budgets.iter().sum();

    let mut flow = MaxFlow::new(2 + 2 * k);
    for (i, &b) in dg.budgets.iter().enumerate() {
        flow.add_edge(source, left(i), b);
    }
    let mut arc_ids = Vec::with_capacity(dg.demand_edges.len());
    for &(i, j) in &dg.demand_edges {
        let a = flow.add_edge(left(i), right(j), inf);
        let b = flow.add_edge(left(j), right(i), inf);
        arc_ids.push((a, b));
    }
    for (i, &b) in dg.budgets.iter().enumerate() {
        flow.add_edge(right(i), sink, b);
    }
    let total = flow.run(source, sink);
    let flows = arc_ids
        .into_iter()
        .map(|(a, b)| (flow.flow_on(a, inf), flow.flow_on(b, inf)))
        .collect();
    (total, flows)
}

/// Maximum total demand through the probed edge over all valid demand sets.
/// Exact; the result has denominator 1 or 2.
pub fn worst_case_load(dg: &DemandGraph) -> Rational {
    let (total, _) = double_cover(dg);
    Rational::from_u64(total) * Rational::ratio(1, 2)
}

/// A valid demand set achieving `worst_case_load`, recovered by averaging the
/// two mirror arcs of each demand edge. Half-integral.
pub fn extract_witness(dg: &DemandGraph) -> DemandSet {
    let (_, flows) = double_cover(dg);
    let mut witness = DemandSet::new();
    for (&(i, j), &(f_ij, f_ji)) in dg.demand_edges.iter().zip(flows.iter()) {
        let value = Rational::from_u64(f_ij + f_ji) * Rational::ratio(1, 2);
        if !value.is_zero() {
            witness.set(dg.terminals[i], dg.terminals[j], value);
        }
    }
    witness
}

/// One capacity violation: the edge, its exact worst-case load and installed
/// capacity, and a demand-set witness achieving the load.
#[derive(Debug, Clone)]
pub struct EdgeViolation {
    pub edge: usize,
    pub load: Rational,
    pub capacity: Rational,
    pub witness: DemandSet,
}

#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<EdgeViolation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawFeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<RawEdgeViolation>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawEdgeViolation {
    pub edge: [String; 2],
    pub load: String,
    pub capacity: String,
    pub witness: BTreeMap<String, String>,
}

impl FeasibilityReport {
    pub fn to_raw(&self, instance: &Instance) -> RawFeasibilityReport {
        let net = instance.network();
        RawFeasibilityReport {
            feasible: self.feasible,
            violations: self
                .violations
                .iter()
                .map(|v| {
                    let (a, b) = net.endpoints(v.edge);
                    RawEdgeViolation {
                        edge: [net.label(a).to_string(), net.label(b).to_string()],
                        load: v.load.to_string(),
                        capacity: v.capacity.to_string(),
                        witness: v.witness.to_raw(instance),
                    }
                })
                .collect(),
        }
    }
}

/// Check a solution against the worst case on every edge. Violations carry
/// exact slack witnesses.
pub fn check_feasible(instance: &Instance, solution: &VpnSolution) -> FeasibilityReport {
    let net = instance.network();
    let mut violations = Vec::new();
    for edge in 0..net.edge_count() {
        let dg = DemandGraph::for_edge(instance, solution, edge);
        let load = worst_case_load(&dg);
        let capacity = solution.capacity(edge).clone();
        if load > capacity {
            violations.push(EdgeViolation {
                edge,
                load,
                capacity,
                witness: extract_witness(&dg),
            });
        }
    }
    FeasibilityReport {
        feasible: violations.is_empty(),
        violations,
    }
}
