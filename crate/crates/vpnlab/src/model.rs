//! Core domain model: networks with exact edge costs, problem instances,
//! demand sets, paths, and their JSON forms.
//!
//! Node ids are dense integers `0..n-1` assigned by position in the input
//! node list; original labels live in a side map. Unordered pairs are always
//! keyed with the smaller id first. All types are immutable after
//! construction.

use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

pub type NodeId = usize;

/// Undirected edge with canonical endpoint order `u < v`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub cost: Rational,
}

/// Undirected simple graph with nonnegative rational edge costs.
///
/// Edges are stored sorted by `(u, v)`; edge indices refer to that order,
/// which makes every iteration in the crate deterministic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Network {
    labels: Vec<String>,
    edges: Vec<Edge>,
    adj: Vec<Vec<(NodeId, usize)>>,
}

impl Network {
    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn label(&self, v: NodeId) -> &str {
        &self.labels[v]
    }

    pub fn node_by_label(&self, label: &str) -> Option<NodeId> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn endpoints(&self, e: usize) -> (NodeId, NodeId) {
        (self.edges[e].u, self.edges[e].v)
    }

    pub fn other_endpoint(&self, e: usize, v: NodeId) -> NodeId {
        let edge = &self.edges[e];
        if edge.u == v {
            edge.v
        } else {
            debug_assert_eq!(edge.v, v);
            edge.u
        }
    }

    pub fn cost(&self, e: usize) -> &Rational {
        &self.edges[e].cost
    }

    /// Neighbors of `v` in ascending id order together with the edge index.
    pub fn neighbors(&self, v: NodeId) -> &[(NodeId, usize)] {
        &self.adj[v]
    }

    pub fn degree(&self, v: NodeId) -> usize {
        self.adj[v].len()
    }

    pub fn edge_between(&self, a: NodeId, b: NodeId) -> Option<usize> {
        self.adj[a].iter().find(|(n, _)| *n == b).map(|(_, e)| *e)
    }

    pub fn is_connected(&self) -> bool {
        if self.labels.is_empty() {
            return true;
        }
        let mut seen = vec![false; self.node_count()];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &(w, _) in &self.adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.node_count()
    }

    /// True iff the graph is a single cycle: connected with every degree 2.
    pub fn is_ring(&self) -> bool {
        self.node_count() >= 3
            && (0..self.node_count()).all(|v| self.degree(v) == 2)
            && self.is_connected()
    }

    /// Human-readable edge name for diagnostics.
    pub fn edge_name(&self, e: usize) -> String {
        format!(
            "{}--{}",
            self.labels[self.edges[e].u], self.labels[self.edges[e].v]
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Violation {
    #[error("node label {0:?} is empty or contains '|'")]
    InvalidLabel(String),
    #[error("duplicate node label {0:?}")]
    DuplicateNode(String),
    #[error("edge references unknown node {0:?}")]
    UnknownNode(String),
    #[error("self-loop at node {0:?}")]
    SelfLoop(String),
    #[error("parallel edge between {0:?} and {1:?}")]
    ParallelEdge(String, String),
    #[error("edge {u:?}--{v:?} has negative cost {cost}")]
    NegativeCost { u: String, v: String, cost: String },
    #[error("edge {u:?}--{v:?} has invalid cost {raw:?}: {reason}")]
    BadCost {
        u: String,
        v: String,
        raw: String,
        reason: String,
    },
    #[error("graph is not connected")]
    DisconnectedGraph,
    #[error("need at least 2 terminals, found {0}")]
    TooFewTerminals(usize),
    #[error("terminal {node:?} has non-positive bound {bound}")]
    NonPositiveBound { node: String, bound: i64 },
    #[error("terminal {0:?} listed more than once")]
    DuplicateTerminal(String),
    #[error("terminal references unknown node {0:?}")]
    UnknownTerminal(String),
}

/// Structured validation failure listing every violation found.
#[derive(Debug, Clone)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid instance: ")?;
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{}", v)?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

impl ValidationError {
    pub fn contains(&self, pred: impl Fn(&Violation) -> bool) -> bool {
        self.violations.iter().any(pred)
    }
}

/// Raw JSON form of an instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawInstance {
    pub nodes: Vec<String>,
    pub edges: Vec<RawEdge>,
    pub terminals: Vec<RawTerminal>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawEdge {
    pub u: String,
    pub v: String,
    pub cost: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawTerminal {
    pub node: String,
    pub bound: i64,
}

/// Pre-resolved instance data used by generators and reductions.
pub(crate) struct InstanceParts {
    pub labels: Vec<String>,
    pub edges: Vec<(NodeId, NodeId, Rational)>,
    pub terminals: Vec<(NodeId, u64)>,
}

/// A validated problem instance: network, terminal set, and integer bounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    network: Network,
    terminals: Vec<NodeId>,
    bounds: Vec<Option<u64>>,
}

impl Instance {
    pub(crate) fn from_parts(parts: InstanceParts) -> Result<Instance, ValidationError> {
        let mut violations = Vec::new();
        let n = parts.labels.len();

        for label in &parts.labels {
            if label.is_empty() || label.contains('|') {
                violations.push(Violation::InvalidLabel(label.clone()));
            }
        }
        let mut sorted_labels: Vec<&String> = parts.labels.iter().collect();
        sorted_labels.sort();
        for pair in sorted_labels.windows(2) {
            if pair[0] == pair[1] {
                violations.push(Violation::DuplicateNode(pair[0].clone()));
            }
        }

        let mut edges: Vec<Edge> = Vec::with_capacity(parts.edges.len());
        for (a, b, cost) in parts.edges {
            debug_assert!(a < n && b < n, "edge endpoint out of range");
            if a == b {
                violations.push(Violation::SelfLoop(parts.labels[a].clone()));
                continue;
            }
            let (u, v) = if a < b { (a, b) } else { (b, a) };
            if cost.is_negative() {
                violations.push(Violation::NegativeCost {
                    u: parts.labels[u].clone(),
                    v: parts.labels[v].clone(),
                    cost: cost.to_string(),
                });
            }
            edges.push(Edge { u, v, cost });
        }
        edges.sort_by_key(|x| (x.u, x.v));
        for w in edges.windows(2) {
            if (w[0].u, w[0].v) == (w[1].u, w[1].v) {
                violations.push(Violation::ParallelEdge(
                    parts.labels[w[0].u].clone(),
                    parts.labels[w[0].v].clone(),
                ));
            }
        }

        let mut terminals: Vec<(NodeId, u64)> = Vec::new();
        for (node, bound) in &parts.terminals {
            debug_assert!(*node < n, "terminal out of range");
            if terminals.iter().any(|(t, _)| t == node) {
                violations.push(Violation::DuplicateTerminal(parts.labels[*node].clone()));
                continue;
            }
            if *bound == 0 {
                violations.push(Violation::NonPositiveBound {
                    node: parts.labels[*node].clone(),
                    bound: 0,
                });
                continue;
            }
            terminals.push((*node, *bound));
        }
        if terminals.len() < 2 {
            violations.push(Violation::TooFewTerminals(terminals.len()));
        }
        terminals.sort_by_key(|(t, _)| *t);

        let mut adj: Vec<Vec<(NodeId, usize)>> = vec![Vec::new(); n];
        for (idx, e) in edges.iter().enumerate() {
            adj[e.u].push((e.v, idx));
            adj[e.v].push((e.u, idx));
        }
        for list in &mut adj {
            list.sort_by_key(|(w, _)| *w);
        }

        let network = Network {
            labels: parts.labels,
            edges,
            adj,
        };
        if !network.is_connected() {
            violations.push(Violation::DisconnectedGraph);
        }

        if !violations.is_empty() {
            return Err(ValidationError { violations });
        }

        let mut bounds = vec![None; n];
        for (t, b) in &terminals {
            bounds[*t] = Some(*b);
        }
        Ok(Instance {
            network,
            terminals: terminals.into_iter().map(|(t, _)| t).collect(),
            bounds,
        })
    }

    pub fn network(&self) -> &Network {
        &self.network
    }

    pub fn terminals(&self) -> &[NodeId] {
        &self.terminals
    }

    pub fn k(&self) -> usize {
        self.terminals.len()
    }

    pub fn bound(&self, v: NodeId) -> Option<u64> {
        self.bounds[v]
    }

    pub fn is_terminal(&self, v: NodeId) -> bool {
        self.bounds[v].is_some()
    }

    pub fn unit_bounds(&self) -> bool {
        self.terminals.iter().all(|&t| self.bounds[t] == Some(1))
    }

    pub fn total_bound(&self) -> u64 {
        self.terminals
            .iter()
            .map(|&t| self.bounds[t].unwrap())
            .sum()
    }

    /// All unordered terminal pairs, smaller id first, sorted.
    pub fn terminal_pairs(&self) -> Vec<(NodeId, NodeId)> {
        let mut pairs = Vec::new();
        for (i, &a) in self.terminals.iter().enumerate() {
            for &b in &self.terminals[i + 1..] {
                pairs.push((a, b));
            }
        }
        pairs
    }

    pub fn pair_key(&self, i: NodeId, j: NodeId) -> String {
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        format!("{}|{}", self.network.label(a), self.network.label(b))
    }

    pub fn parse_pair_key(&self, key: &str) -> Option<(NodeId, NodeId)> {
        let (a, b) = key.split_once('|')?;
        let i = self.network.node_by_label(a)?;
        let j = self.network.node_by_label(b)?;
        if i == j {
            return None;
        }
        Some(if i < j { (i, j) } else { (j, i) })
    }
}

impl TryFrom<RawInstance> for Instance {
    type Error = ValidationError;

    fn try_from(raw: RawInstance) -> Result<Instance, ValidationError> {
        let mut violations = Vec::new();
        let lookup = |label: &str| raw.nodes.iter().position(|l| l == label);

        let mut edges = Vec::new();
        for e in &raw.edges {
            let u = lookup(&e.u);
            let v = lookup(&e.v);
            if u.is_none() {
                violations.push(Violation::UnknownNode(e.u.clone()));
            }
            if v.is_none() {
                violations.push(Violation::UnknownNode(e.v.clone()));
            }
            let cost = match e.cost.parse::<Rational>() {
                Ok(c) => Some(c),
                Err(err) => {
                    violations.push(Violation::BadCost {
                        u: e.u.clone(),
                        v: e.v.clone(),
                        raw: e.cost.clone(),
                        reason: err.to_string(),
                    });
                    None
                }
            };
            if let (Some(u), Some(v), Some(cost)) = (u, v, cost) {
                edges.push((u, v, cost));
            }
        }

        let mut terminals = Vec::new();
        for t in &raw.terminals {
            match lookup(&t.node) {
                None => violations.push(Violation::UnknownTerminal(t.node.clone())),
                Some(node) => {
                    if t.bound <= 0 {
                        violations.push(Violation::NonPositiveBound {
                            node: t.node.clone(),
                            bound: t.bound,
                        });
                    } else {
                        terminals.push((node, t.bound as u64));
                    }
                }
            }
        }

        let result = Instance::from_parts(InstanceParts {
            labels: raw.nodes,
            edges,
            terminals,
        });
        match result {
            Ok(instance) if violations.is_empty() => Ok(instance),
            Ok(_) => Err(ValidationError { violations }),
            Err(mut err) => {
                violations.append(&mut err.violations);
                Err(ValidationError { violations })
            }
        }
    }
}

impl From<Instance> for RawInstance {
    fn from(instance: Instance) -> RawInstance {
        let net = &instance.network;
        RawInstance {
            nodes: net.labels.clone(),
            edges: net
                .edges
                .iter()
                .map(|e| RawEdge {
                    u: net.labels[e.u].clone(),
                    v: net.labels[e.v].clone(),
                    cost: e.cost.to_string(),
                })
                .collect(),
            terminals: instance
                .terminals
                .iter()
                .map(|&t| RawTerminal {
                    node: net.labels[t].clone(),
                    bound: instance.bounds[t].unwrap() as i64,
                })
                .collect(),
        }
    }
}

/// Validate raw instance data, reporting every violation at once.
pub fn validate_instance(raw: RawInstance) -> Result<Instance, ValidationError> {
    Instance::try_from(raw)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DemandError {
    #[error("demand references non-terminal node {0:?}")]
    UnknownTerminal(String),
    #[error("invalid demand entry {0:?}: {1}")]
    BadEntry(String, String),
}

/// Symmetric nonnegative demands on unordered terminal pairs.
///
/// Symmetry is structural: keys are canonical pairs. Zero demands are not
/// stored, so equality ignores explicit zeros.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DemandSet {
    entries: BTreeMap<(NodeId, NodeId), Rational>,
}

impl DemandSet {
    pub fn new() -> Self {
        DemandSet::default()
    }

    pub fn set(&mut self, i: NodeId, j: NodeId, value: Rational) {
        assert!(i != j, "demand on a terminal with itself");
        assert!(!value.is_negative(), "negative demand");
        let key = if i < j { (i, j) } else { (j, i) };
        if value.is_zero() {
            self.entries.remove(&key);
        } else {
            self.entries.insert(key, value);
        }
    }

    pub fn get(&self, i: NodeId, j: NodeId) -> Rational {
        let key = if i < j { (i, j) } else { (j, i) };
        self.entries
            .get(&key)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(NodeId, NodeId), &Rational)> {
        self.entries.iter()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn row_sum(&self, i: NodeId) -> Rational {
        self.entries
            .iter()
            .filter(|((a, b), _)| *a == i || *b == i)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn total(&self) -> Rational {
        self.entries.values().sum()
    }

    pub fn scaled(&self, factor: &Rational) -> DemandSet {
        let mut out = DemandSet::new();
        for (&(i, j), v) in &self.entries {
            out.set(i, j, v * factor);
        }
        out
    }

    pub fn to_raw(&self, instance: &Instance) -> BTreeMap<String, String> {
        self.entries
            .iter()
            .map(|(&(i, j), v)| (instance.pair_key(i, j), v.to_string()))
            .collect()
    }

    pub fn from_raw(
        instance: &Instance,
        raw: &BTreeMap<String, String>,
    ) -> Result<DemandSet, DemandError> {
        let mut out = DemandSet::new();
        for (key, value) in raw {
            let (i, j) = instance
                .parse_pair_key(key)
                .ok_or_else(|| DemandError::BadEntry(key.clone(), "unknown pair".into()))?;
            let v: Rational = value
                .parse()
                .map_err(|e: crate::rational::ParseRationalError| {
                    DemandError::BadEntry(key.clone(), e.to_string())
                })?;
            if v.is_negative() {
                return Err(DemandError::BadEntry(key.clone(), "negative demand".into()));
            }
            out.set(i, j, v);
        }
        Ok(out)
    }
}

/// True iff every terminal's total demand stays within its bound.
pub fn is_valid_demand_set(instance: &Instance, demands: &DemandSet) -> Result<bool, DemandError> {
    let mut sums: BTreeMap<NodeId, Rational> = BTreeMap::new();
    for (&(i, j), v) in demands.iter() {
        for node in [i, j] {
            if !instance.is_terminal(node) {
                return Err(DemandError::UnknownTerminal(
                    instance.network().label(node).to_string(),
                ));
            }
            *sums.entry(node).or_insert_with(Rational::zero) += v;
        }
    }
    for (node, sum) in sums {
        let bound = Rational::from_u64(instance.bound(node).unwrap());
        if sum > bound {
            return Ok(false);
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PathError {
    #[error("path must contain at least two nodes")]
    TooShort,
    #[error("nodes {0:?} and {1:?} are not adjacent")]
    NotAdjacent(String, String),
    #[error("path repeats node {0:?}")]
    RepeatedNode(String),
    #[error("trail repeats edge {0:?}")]
    RepeatedEdge(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Simple,
    Trail,
}

/// A walk in the network: node-simple by default, edge-simple as a trail.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Path {
    nodes: Vec<NodeId>,
    edges: Vec<usize>,
    kind: PathKind,
}

impl Path {
    pub fn simple(network: &Network, nodes: Vec<NodeId>) -> Result<Path, PathError> {
        Path::build(network, nodes, PathKind::Simple)
    }

    pub fn trail(network: &Network, nodes: Vec<NodeId>) -> Result<Path, PathError> {
        Path::build(network, nodes, PathKind::Trail)
    }

    fn build(network: &Network, nodes: Vec<NodeId>, kind: PathKind) -> Result<Path, PathError> {
        if nodes.len() < 2 {
            return Err(PathError::TooShort);
        }
        let mut edges = Vec::with_capacity(nodes.len() - 1);
        for w in nodes.windows(2) {
            let e = network.edge_between(w[0], w[1]).ok_or_else(|| {
                PathError::NotAdjacent(
                    network.label(w[0]).to_string(),
                    network.label(w[1]).to_string(),
                )
            })?;
            edges.push(e);
        }
        match kind {
            PathKind::Simple => {
                let mut seen = BTreeSet::new();
                for &v in &nodes {
                    if !seen.insert(v) {
                        return Err(PathError::RepeatedNode(network.label(v).to_string()));
                    }
                }
            }
            PathKind::Trail => {
                let mut seen = BTreeSet::new();
                for &e in &edges {
                    if !seen.insert(e) {
                        return Err(PathError::RepeatedEdge(network.edge_name(e)));
                    }
                }
            }
        }
        Ok(Path { nodes, edges, kind })
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn kind(&self) -> PathKind {
        self.kind
    }

    pub fn source(&self) -> NodeId {
        self.nodes[0]
    }

    pub fn target(&self) -> NodeId {
        *self.nodes.last().unwrap()
    }

    pub fn contains_edge(&self, e: usize) -> bool {
        self.edges.contains(&e)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolutionError {
    #[error("missing path for terminal pair {0:?}")]
    MissingPairPath(String),
    #[error("path for pair {pair:?} has endpoints {got:?}")]
    PathEndpointMismatch { pair: String, got: String },
    #[error("path listed for {0:?}, which is not a terminal pair")]
    UnknownPair(String),
    #[error("capacity for edge {0:?} is negative")]
    NegativeCapacity(String),
    #[error("bad solution data: {0}")]
    Malformed(String),
}

/// A virtual private network: one path per terminal pair plus edge capacities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VpnSolution {
    paths: BTreeMap<(NodeId, NodeId), Path>,
    capacities: Vec<Rational>,
}

impl VpnSolution {
    pub fn new(
        instance: &Instance,
        paths: BTreeMap<(NodeId, NodeId), Path>,
        capacities: Vec<Rational>,
    ) -> Result<VpnSolution, SolutionError> {
        if capacities.len() != instance.network().edge_count() {
            return Err(SolutionError::Malformed(format!(
                "expected {} capacities, got {}",
                instance.network().edge_count(),
                capacities.len()
            )));
        }
        for (e, cap) in capacities.iter().enumerate() {
            if cap.is_negative() {
                return Err(SolutionError::NegativeCapacity(
                    instance.network().edge_name(e),
                ));
            }
        }
        let expected: BTreeSet<(NodeId, NodeId)> = instance.terminal_pairs().into_iter().collect();
        for (&(i, j), path) in &paths {
            if !expected.contains(&(i, j)) {
                return Err(SolutionError::UnknownPair(instance.pair_key(i, j)));
            }
            let ends = (
                path.source().min(path.target()),
                path.source().max(path.target()),
            );
            if ends != (i, j) {
                return Err(SolutionError::PathEndpointMismatch {
                    pair: instance.pair_key(i, j),
                    got: instance.pair_key(ends.0, ends.1),
                });
            }
        }
        for &(i, j) in &expected {
            if !paths.contains_key(&(i, j)) {
                return Err(SolutionError::MissingPairPath(instance.pair_key(i, j)));
            }
        }
        Ok(VpnSolution { paths, capacities })
    }

    pub fn paths(&self) -> &BTreeMap<(NodeId, NodeId), Path> {
        &self.paths
    }

    pub fn path(&self, i: NodeId, j: NodeId) -> &Path {
        let key = if i < j { (i, j) } else { (j, i) };
        &self.paths[&key]
    }

    pub fn capacities(&self) -> &[Rational] {
        &self.capacities
    }

    pub fn capacity(&self, e: usize) -> &Rational {
        &self.capacities[e]
    }

    /// Total reservation cost, exactly.
    pub fn cost(&self, instance: &Instance) -> Rational {
        let net = instance.network();
        (0..net.edge_count())
            .map(|e| net.cost(e) * &self.capacities[e])
            .sum()
    }

    pub fn to_raw(&self, instance: &Instance) -> RawVpnSolution {
        let net = instance.network();
        RawVpnSolution {
            paths: self
                .paths
                .iter()
                .map(|(&(i, j), p)| {
                    (
                        instance.pair_key(i, j),
                        p.nodes()
                            .iter()
                            .map(|&v| net.label(v).to_string())
                            .collect(),
                    )
                })
                .collect(),
            capacities: self
                .capacities
                .iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(e, c)| {
                    let (u, v) = net.endpoints(e);
                    (instance.pair_key(u, v), c.to_string())
                })
                .collect(),
        }
    }

    pub fn from_raw(
        instance: &Instance,
        raw: &RawVpnSolution,
    ) -> Result<VpnSolution, SolutionError> {
        let net = instance.network();
        let mut paths = BTreeMap::new();
        for (key, node_labels) in &raw.paths {
            let (i, j) = instance
                .parse_pair_key(key)
                .ok_or_else(|| SolutionError::UnknownPair(key.clone()))?;
            let mut nodes = Vec::with_capacity(node_labels.len());
            for label in node_labels {
                let v = net
                    .node_by_label(label)
                    .ok_or_else(|| SolutionError::Malformed(format!("unknown node {label:?}")))?;
                nodes.push(v);
            }
            let path = Path::simple(net, nodes)
                .map_err(|e| SolutionError::Malformed(format!("path {key}: {e}")))?;
            paths.insert((i, j), path);
        }
        let mut capacities = vec![Rational::zero(); net.edge_count()];
        for (key, value) in &raw.capacities {
            let (u, v) = instance
                .parse_pair_key(key)
                .ok_or_else(|| SolutionError::Malformed(format!("unknown edge {key:?}")))?;
            let e = net
                .edge_between(u, v)
                .ok_or_else(|| SolutionError::Malformed(format!("no edge {key:?}")))?;
            capacities[e] = value
                .parse()
                .map_err(|err: crate::rational::ParseRationalError| {
                    SolutionError::Malformed(format!("capacity {key}: {err}"))
                })?;
        }
        VpnSolution::new(instance, paths, capacities)
    }
}

/// JSON form of a VPN solution, keyed by `label|label` pairs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawVpnSolution {
    pub paths: BTreeMap<String, Vec<String>>,
    pub capacities: BTreeMap<String, String>,
}

/// Edge costs scaled to a common integer denominator, for fast exact
/// comparisons inside enumeration loops. A total of `t` in scaled units
/// stands for the rational `t / (scale * extra_denominator)`.
pub(crate) struct ScaledCosts {
    pub weights: Vec<i128>,
    scale: num::BigInt,
}

impl ScaledCosts {
    /// None when the scaled weights would not leave headroom for exact i128
    /// accumulation across an enumeration loop.
    pub fn new(network: &Network) -> Option<ScaledCosts> {
        use num::{Integer, One, ToPrimitive};
        let mut scale = num::BigInt::one();
        for e in network.edges() {
            scale = scale.lcm(e.cost.denom());
        }
        let limit: i128 = 1 << 90;
        let mut weights = Vec::with_capacity(network.edge_count());
        for e in network.edges() {
            let w = (e.cost.numer() * (&scale / e.cost.denom())).to_i128()?;
            if w.abs() > limit {
                return None;
            }
            weights.push(w);
        }
        Some(ScaledCosts { weights, scale })
    }

    pub fn to_rational(&self, total: i128, extra_denominator: u64) -> Rational {
        Rational::from_big(
            num::BigInt::from(total),
            &self.scale * num::BigInt::from(extra_denominator),
        )
    }
}
