//! Pyramidal routing: route one unit from a source terminal to every other
//! terminal along simple paths, paying c(e) * min(n(e), k - n(e)) per edge,
//! where n(e) counts the chosen paths through e.
//!
//! Contains the exact cost evaluation, a budgeted brute-force solver (the
//! oracle), the constructive ring solver, and the cost-preserving conversions
//! between tree solutions of the two problems.

use crate::model::{Instance, InstanceParts, NodeId, Path, PathKind, ScaledCosts};
use crate::rational::Rational;
use crate::tree::{tree_capacities, Certification, TreeSolution};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PrError {
    #[error("bounds must all be 1; split terminals first")]
    NonUnitBounds,
    #[error("source {0:?} is not a terminal")]
    SourceNotTerminal(String),
    #[error("path for terminal {expected:?} ends at {got:?}")]
    PathEndpointMismatch { expected: String, got: String },
    #[error("path for terminal {0:?} is not simple")]
    NonSimplePath(String),
    #[error("expected one path per non-source terminal, got {got} for {expected}")]
    WrongPathCount { expected: usize, got: usize },
    #[error("duplicate path target {0:?}")]
    DuplicateTarget(String),
    #[error("network is not a ring")]
    NotARing,
    #[error("fewer than 2 terminals after contraction")]
    AllNodesNonterminal,
    #[error("enumeration budget exceeded: at least {systems} systems, budget {budget}")]
    BudgetExceeded { systems: u128, budget: u64 },
    #[error("edge costs too large for exact enumeration")]
    CostsTooLarge,
    #[error("path union contains a cycle; not a tree system")]
    NotATreeSystem,
    #[error("unknown node {0:?}")]
    UnknownNode(String),
}

/// A routing instance with a single source terminal and unit bounds.
#[derive(Debug, Clone, Copy)]
pub struct PrInstance<'a> {
    instance: &'a Instance,
    source: NodeId,
}

impl<'a> PrInstance<'a> {
    pub fn new(instance: &'a Instance, source: NodeId) -> Result<PrInstance<'a>, PrError> {
        if !instance.unit_bounds() {
            return Err(PrError::NonUnitBounds);
        }
        if !instance.is_terminal(source) {
            return Err(PrError::SourceNotTerminal(
                instance.network().label(source).to_string(),
            ));
        }
        Ok(PrInstance { instance, source })
    }

    pub fn instance(&self) -> &'a Instance {
        self.instance
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn k(&self) -> usize {
        self.instance.k()
    }

    /// Non-source terminals in ascending order.
    pub fn targets(&self) -> Vec<NodeId> {
        self.instance
            .terminals()
            .iter()
            .copied()
            .filter(|&t| t != self.source)
            .collect()
    }
}

/// One simple path from the source to every other terminal, with the derived
/// per-edge counts n(e) and costs y(e) = min(n(e), k - n(e)).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrPathSystem {
    source: NodeId,
    paths: Vec<Path>,
    n: Vec<u32>,
    y: Vec<u32>,
    cost: Rational,
}

impl PrPathSystem {
    /// Paths may arrive in any order; they are keyed by target terminal.
    pub fn new(pr: &PrInstance, paths: Vec<Path>) -> Result<PrPathSystem, PrError> {
        let instance = pr.instance();
        let net = instance.network();
        let targets = pr.targets();
        if paths.len() != targets.len() {
            return Err(PrError::WrongPathCount {
                expected: targets.len(),
                got: paths.len(),
            });
        }
        let mut by_target: BTreeMap<NodeId, Path> = BTreeMap::new();
        for path in paths {
            if path.source() != pr.source() {
                return Err(PrError::PathEndpointMismatch {
                    expected: net.label(pr.source()).to_string(),
                    got: net.label(path.source()).to_string(),
                });
            }
            let t = path.target();
            if !targets.contains(&t) {
                return Err(PrError::PathEndpointMismatch {
                    expected: "a non-source terminal".to_string(),
                    got: net.label(t).to_string(),
                });
            }
            if by_target.insert(t, path).is_some() {
                return Err(PrError::DuplicateTarget(net.label(t).to_string()));
            }
        }
        let paths: Vec<Path> = by_target.into_values().collect();
        let k = pr.k() as u32;
        let mut n = vec![0u32; net.edge_count()];
        for path in &paths {
            for &e in path.edges() {
                n[e] += 1;
            }
        }
        let y: Vec<u32> = n.iter().map(|&c| c.min(k - c)).collect();
        let cost = y
            .iter()
            .enumerate()
            .map(|(e, &ye)| net.cost(e) * &Rational::from_u64(ye as u64))
            .sum();
        Ok(PrPathSystem {
            source: pr.source(),
            paths,
            n,
            y,
            cost,
        })
    }

    pub fn source(&self) -> NodeId {
        self.source
    }

    pub fn paths(&self) -> &[Path] {
        &self.paths
    }

    pub fn path_to(&self, target: NodeId) -> Option<&Path> {
        self.paths.iter().find(|p| p.target() == target)
    }

    pub fn n(&self) -> &[u32] {
        &self.n
    }

    pub fn y(&self) -> &[u32] {
        &self.y
    }

    pub fn cost(&self) -> &Rational {
        &self.cost
    }

    pub fn to_raw(&self, instance: &Instance) -> RawPrPathSystem {
        let net = instance.network();
        RawPrPathSystem {
            source: net.label(self.source).to_string(),
            paths: self
                .paths
                .iter()
                .map(|p| {
                    (
                        net.label(p.target()).to_string(),
                        p.nodes()
                            .iter()
                            .map(|&v| net.label(v).to_string())
                            .collect(),
                    )
                })
                .collect(),
            cost: self.cost.to_string(),
        }
    }

    pub fn from_raw(instance: &Instance, raw: &RawPrPathSystem) -> Result<PrPathSystem, PrError> {
        let net = instance.network();
        let source = net
            .node_by_label(&raw.source)
            .ok_or_else(|| PrError::UnknownNode(raw.source.clone()))?;
        let pr = PrInstance::new(instance, source)?;
        let mut paths = Vec::new();
        for (target, labels) in &raw.paths {
            let mut nodes = Vec::with_capacity(labels.len());
            for l in labels {
                nodes.push(
                    net.node_by_label(l)
                        .ok_or_else(|| PrError::UnknownNode(l.clone()))?,
                );
            }
            let path =
                Path::simple(net, nodes).map_err(|_| PrError::NonSimplePath(target.clone()))?;
            paths.push(path);
        }
        PrPathSystem::new(&pr, paths)
    }
}

/// JSON form: `{"source": label, "paths": {target: [nodes...]}, "cost": "p/q"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawPrPathSystem {
    pub source: String,
    pub paths: BTreeMap<String, Vec<String>>,
    pub cost: String,
}

/// Exact objective value of a path system.
pub fn pr_cost(pr: &PrInstance, system: &PrPathSystem) -> Rational {
    debug_assert_eq!(system.source, pr.source());
    system.cost.clone()
}

/// All simple paths (or trails) from `from` to `to`, in lexicographic order
/// of their node sequences. `cap` bounds the list size; `None` past it.
fn enumerate_routes(
    net: &crate::model::Network,
    from: NodeId,
    to: NodeId,
    kind: PathKind,
    cap: usize,
) -> Option<Vec<Vec<NodeId>>> {
    let mut routes = Vec::new();
    let mut current = vec![from];
    let mut node_used = vec![false; net.node_count()];
    let mut edge_used = vec![false; net.edge_count()];
    node_used[from] = true;

    #[allow(clippy::too_many_arguments)]
    fn dfs(
        net: &crate::model::Network,
        to: NodeId,
        kind: PathKind,
        cap: usize,
        current: &mut Vec<NodeId>,
        node_used: &mut Vec<bool>,
        edge_used: &mut Vec<bool>,
        routes: &mut Vec<Vec<NodeId>>,
    ) -> bool {
        let v = *current.last().unwrap();
        if v == to && current.len() >= 2 {
            if routes.len() >= cap {
                return false;
            }
            routes.push(current.clone());
            if kind == PathKind::Simple {
                return true;
            }
            // Trails may continue through the target and end there later.
        }
        for &(w, e) in net.neighbors(v) {
            let blocked = match kind {
                PathKind::Simple => node_used[w],
                PathKind::Trail => edge_used[e],
            };
            if blocked {
                continue;
            }
            node_used[w] = true;
            edge_used[e] = true;
            current.push(w);
            let ok = dfs(net, to, kind, cap, current, node_used, edge_used, routes);
            current.pop();
            node_used[w] = false;
            edge_used[e] = false;
            if !ok {
                return false;
            }
        }
        true
    }

    if dfs(
        net,
        to,
        kind,
        cap,
        &mut current,
        &mut node_used,
        &mut edge_used,
        &mut routes,
    ) {
        Some(routes)
    } else {
        None
    }
}

/// Globally optimal path system by exhaustive enumeration over the Cartesian
/// product of per-terminal routes. Ties break on the lexicographically
/// smallest tuple of node sequences, taken in target order.
pub fn pr_bruteforce(
    pr: &PrInstance,
    allow_trails: bool,
    budget: u64,
) -> Result<PrPathSystem, PrError> {
    let instance = pr.instance();
    let net = instance.network();
    let kind = if allow_trails {
        PathKind::Trail
    } else {
        PathKind::Simple
    };
    let targets = pr.targets();
    let mut options: Vec<Vec<Vec<NodeId>>> = Vec::with_capacity(targets.len());
    let mut systems: u128 = 1;
    for &t in &targets {
        let routes = enumerate_routes(net, pr.source(), t, kind, budget as usize + 1).ok_or(
            PrError::BudgetExceeded {
                systems: budget as u128 + 1,
                budget,
            },
        )?;
        debug_assert!(!routes.is_empty(), "connected graph has a route");
        systems = systems.saturating_mul(routes.len() as u128);
        options.push(routes);
        if systems > budget as u128 {
            return Err(PrError::BudgetExceeded { systems, budget });
        }
    }

    // Edge lists per option, for incremental n(e) maintenance.
    let option_edges: Vec<Vec<Vec<usize>>> = options
        .iter()
        .map(|routes| {
            routes
                .iter()
                .map(|nodes| {
                    nodes
                        .windows(2)
                        .map(|w| net.edge_between(w[0], w[1]).unwrap())
                        .collect()
                })
                .collect()
        })
        .collect();

    let scaled = ScaledCosts::new(net).ok_or(PrError::CostsTooLarge)?;
    let k = instance.k() as i128;
    let m = net.edge_count();
    let mut n = vec![0i128; m];
    let mut choice = vec![0usize; targets.len()];
    for edges in option_edges.iter().map(|o| &o[0]) {
        for &e in edges {
            n[e] += 1;
        }
    }

    let mut best_cost: Option<i128> = None;
    let mut best_choice: Vec<usize> = Vec::new();
    loop {
        let cost: i128 = (0..m).map(|e| scaled.weights[e] * n[e].min(k - n[e])).sum();
        if best_cost.map(|b| cost < b).unwrap_or(true) {
            best_cost = Some(cost);
            best_choice = choice.clone();
        }
        // Advance the odometer, last position fastest: systems are visited in
        // lexicographic order, so the first minimum is the canonical one.
        let mut pos = targets.len();
        loop {
            if pos == 0 {
                let paths = best_choice
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        let nodes = options[i][c].clone();
                        match kind {
                            PathKind::Simple => Path::simple(net, nodes).unwrap(),
                            PathKind::Trail => Path::trail(net, nodes).unwrap(),
                        }
                    })
                    .collect();
                let system = PrPathSystem::new(pr, paths)?;
                debug_assert_eq!(
                    system.cost,
                    scaled.to_rational(best_cost.unwrap(), 1),
                    "scaled cost disagrees with exact evaluation"
                );
                return Ok(system);
            }
            pos -= 1;
            for &e in &option_edges[pos][choice[pos]] {
                n[e] -= 1;
            }
            if choice[pos] + 1 < options[pos].len() {
                choice[pos] += 1;
                for &e in &option_edges[pos][choice[pos]] {
                    n[e] += 1;
                }
                break;
            }
            choice[pos] = 0;
            for &e in &option_edges[pos][choice[pos]] {
                n[e] += 1;
            }
        }
    }
}

/// Result of contracting the non-terminal nodes of a ring.
pub enum Contraction {
    /// Three or more terminals: an all-terminal ring plus the expansion map.
    Ring(RingContraction),
    /// Exactly two terminals: the ring contracts to two parallel arcs, which
    /// the simple-graph network type cannot hold; callers special-case it.
    TwoArcs(TwoArcContraction),
}

pub struct RingContraction {
    contracted: Instance,
    node_to_original: Vec<NodeId>,
    /// Per contracted edge: the original node sequence, oriented from the
    /// smaller contracted endpoint to the larger.
    arc_nodes: Vec<Vec<NodeId>>,
}

impl RingContraction {
    pub fn contracted(&self) -> &Instance {
        &self.contracted
    }

    pub fn original_node(&self, contracted: NodeId) -> NodeId {
        self.node_to_original[contracted]
    }

    pub fn contracted_node(&self, original: NodeId) -> Option<NodeId> {
        self.node_to_original.iter().position(|&v| v == original)
    }

    pub fn arc(&self, contracted_edge: usize) -> &[NodeId] {
        &self.arc_nodes[contracted_edge]
    }

    /// Expand a path on the contracted ring back to original nodes.
    pub fn expand_path(&self, contracted_nodes: &[NodeId]) -> Vec<NodeId> {
        let net = self.contracted.network();
        let mut out: Vec<NodeId> = vec![self.node_to_original[contracted_nodes[0]]];
        for w in contracted_nodes.windows(2) {
            let e = net.edge_between(w[0], w[1]).unwrap();
            let arc = &self.arc_nodes[e];
            let (a, _) = net.endpoints(e);
            if w[0] == a {
                out.extend(&arc[1..]);
            } else {
                out.extend(arc.iter().rev().skip(1));
            }
        }
        out
    }
}

pub struct TwoArcContraction {
    /// The two terminals, smaller id first.
    pub endpoints: (NodeId, NodeId),
    /// Both arcs oriented from the smaller terminal to the larger, each with
    /// its total cost; sorted by (cost, node sequence).
    pub arcs: [(Vec<NodeId>, Rational); 2],
}

/// Replace every degree-2 non-terminal with a merged edge whose cost is the
/// sum of the two removed edges. The result is an all-terminal ring.
pub fn contract_nonterminals_on_ring(instance: &Instance) -> Result<Contraction, PrError> {
    let net = instance.network();
    if !net.is_ring() {
        return Err(PrError::NotARing);
    }
    if instance.k() < 2 {
        return Err(PrError::AllNodesNonterminal);
    }

    // Walk the ring once, starting at the smallest terminal, towards its
    // smaller neighbor.
    let start = instance.terminals()[0];
    let mut order = vec![start];
    let mut prev = start;
    let mut cur = net.neighbors(start)[0].0;
    while cur != start {
        order.push(cur);
        let nbrs = net.neighbors(cur);
        let next = if nbrs[0].0 == prev {
            nbrs[1].0
        } else {
            nbrs[0].0
        };
        prev = cur;
        cur = next;
    }

    // Cut the walk at terminals; each segment becomes one contracted arc.
    let term_positions: Vec<usize> = order
        .iter()
        .enumerate()
        .filter(|(_, &v)| instance.is_terminal(v))
        .map(|(i, _)| i)
        .collect();
    let k = term_positions.len();
    let mut arcs: Vec<(NodeId, NodeId, Vec<NodeId>, Rational)> = Vec::with_capacity(k);
    for (idx, &pos) in term_positions.iter().enumerate() {
        let next_pos = term_positions[(idx + 1) % k];
        let mut seq = vec![order[pos]];
        let mut i = pos;
        loop {
            i = (i + 1) % order.len();
            seq.push(order[i]);
            if i == next_pos {
                break;
            }
        }
        let mut cost = Rational::zero();
        for w in seq.windows(2) {
            cost += net.cost(net.edge_between(w[0], w[1]).unwrap());
        }
        arcs.push((seq[0], *seq.last().unwrap(), seq, cost));
    }

    if k == 2 {
        let (t0, t1) = (arcs[0].0.min(arcs[0].1), arcs[0].0.max(arcs[0].1));
        let orient = |mut seq: Vec<NodeId>| {
            if seq[0] != t0 {
                seq.reverse();
            }
            seq
        };
        let mut pair = [
            (orient(arcs[0].2.clone()), arcs[0].3.clone()),
            (orient(arcs[1].2.clone()), arcs[1].3.clone()),
        ];
        pair.sort_by(|a, b| (&a.1, &a.0).cmp(&(&b.1, &b.0)));
        return Ok(Contraction::TwoArcs(TwoArcContraction {
            endpoints: (t0, t1),
            arcs: pair,
        }));
    }

    // Contracted node ids follow ascending original terminal id, so labels
    // and determinism carry over.
    let mut terminals: Vec<NodeId> = instance.terminals().to_vec();
    terminals.sort_unstable();
    let labels: Vec<String> = terminals
        .iter()
        .map(|&t| net.label(t).to_string())
        .collect();
    let index_of = |v: NodeId| terminals.iter().position(|&t| t == v).unwrap();
    let parts_edges: Vec<(usize, usize, Rational)> = arcs
        .iter()
        .map(|(a, b, _, cost)| (index_of(*a), index_of(*b), cost.clone()))
        .collect();
    let contracted = Instance::from_parts(InstanceParts {
        labels,
        edges: parts_edges,
        terminals: (0..k).map(|i| (i, 1)).collect(),
    })
    .expect("contracted ring is a valid instance");

    let cnet = contracted.network();
    let mut arc_nodes = vec![Vec::new(); cnet.edge_count()];
    for (a, b, seq, _) in arcs {
        let (ia, ib) = (index_of(a), index_of(b));
        let e = cnet.edge_between(ia, ib).unwrap();
        let (u, _) = cnet.endpoints(e);
        let mut seq = seq;
        if ia != u {
            seq.reverse();
        }
        arc_nodes[e] = seq;
    }

    Ok(Contraction::Ring(RingContraction {
        contracted,
        node_to_original: terminals,
        arc_nodes,
    }))
}

/// Paths from `source` to all terminals inside a tree given as an edge list.
fn paths_in_tree(
    instance: &Instance,
    edges: &[usize],
    source: NodeId,
) -> Vec<(NodeId, Vec<NodeId>)> {
    let net = instance.network();
    let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
    for &e in edges {
        let (u, v) = net.endpoints(e);
        adj.entry(u).or_default().push(v);
        adj.entry(v).or_default().push(u);
    }
    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    parent.insert(source, source);
    let mut stack = vec![source];
    while let Some(v) = stack.pop() {
        for &w in adj.get(&v).into_iter().flatten() {
            if let std::collections::btree_map::Entry::Vacant(slot) = parent.entry(w) {
                slot.insert(v);
                stack.push(w);
            }
        }
    }
    instance
        .terminals()
        .iter()
        .copied()
        .filter(|&t| t != source)
        .map(|t| {
            let mut nodes = vec![t];
            let mut v = t;
            while v != source {
                v = parent[&v];
                nodes.push(v);
            }
            nodes.reverse();
            (t, nodes)
        })
        .collect()
}

/// Optimal pyramidal routing on a ring: contract non-terminals, evaluate the
/// k tree systems obtained by deleting each contracted edge, and expand the
/// cheapest back to the original ring. Globally optimal over all systems.
pub fn ring_pr_optimal(pr: &PrInstance) -> Result<PrPathSystem, PrError> {
    let instance = pr.instance();
    match contract_nonterminals_on_ring(instance)? {
        Contraction::TwoArcs(two) => {
            let (mut nodes, _) = two.arcs[0].clone();
            if nodes[0] != pr.source() {
                nodes.reverse();
            }
            let path = Path::simple(instance.network(), nodes).unwrap();
            PrPathSystem::new(pr, vec![path])
        }
        Contraction::Ring(contraction) => {
            let contracted = contraction.contracted();
            let source_c = contraction
                .contracted_node(pr.source())
                .expect("source is a terminal");
            let cnet = contracted.network();
            let all_edges: Vec<usize> = (0..cnet.edge_count()).collect();
            let mut best: Option<(Rational, usize)> = None;
            for delete in 0..cnet.edge_count() {
                let surviving: Vec<usize> =
                    all_edges.iter().copied().filter(|&e| e != delete).collect();
                let paths = paths_in_tree(contracted, &surviving, source_c);
                let k = contracted.k() as u64;
                let mut n = vec![0u64; cnet.edge_count()];
                for (_, nodes) in &paths {
                    for w in nodes.windows(2) {
                        n[cnet.edge_between(w[0], w[1]).unwrap()] += 1;
                    }
                }
                let cost: Rational = (0..cnet.edge_count())
                    .map(|e| cnet.cost(e) * &Rational::from_u64(n[e].min(k - n[e])))
                    .sum();
                if best.as_ref().map(|(b, _)| cost < *b).unwrap_or(true) {
                    best = Some((cost, delete));
                }
            }
            let (best_cost, delete) = best.unwrap();
            let surviving: Vec<usize> =
                all_edges.iter().copied().filter(|&e| e != delete).collect();
            let paths = paths_in_tree(contracted, &surviving, source_c)
                .into_iter()
                .map(|(_, nodes)| {
                    let expanded = contraction.expand_path(&nodes);
                    Path::simple(instance.network(), expanded).unwrap()
                })
                .collect();
            let system = PrPathSystem::new(pr, paths)?;
            debug_assert_eq!(
                system.cost, best_cost,
                "expansion must preserve the contracted cost"
            );
            Ok(system)
        }
    }
}

/// The path system a tree solution induces for a given source terminal.
/// Cost-preserving: the result costs exactly the tree's reservation cost.
pub fn tree_to_pr(
    instance: &Instance,
    tree: &TreeSolution,
    source: NodeId,
) -> Result<PrPathSystem, PrError> {
    let pr = PrInstance::new(instance, source)?;
    let paths = paths_in_tree(instance, tree.edges(), source)
        .into_iter()
        .map(|(_, nodes)| Path::simple(instance.network(), nodes).unwrap())
        .collect();
    let system = PrPathSystem::new(&pr, paths)?;
    debug_assert_eq!(
        &system.cost,
        tree.cost(),
        "tree and routing costs must agree"
    );
    Ok(system)
}

/// The tree solution induced by a path system whose union of edges is a tree.
pub fn pr_tree_to_tree(pr: &PrInstance, system: &PrPathSystem) -> Result<TreeSolution, PrError> {
    let mut edges: Vec<usize> = system
        .paths()
        .iter()
        .flat_map(|p| p.edges().iter().copied())
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let tree = tree_capacities(pr.instance(), &edges).map_err(|_| PrError::NotATreeSystem)?;
    debug_assert_eq!(
        tree.cost(),
        &system.cost,
        "tree and routing costs must agree"
    );
    Ok(tree.with_certification(Certification::Heuristic))
}

/// Structural checks for path systems on all-terminal rings: adjacent edges
/// differ by exactly one path except at the source, where the two incident
/// counts add up to k-1; y-values step by exactly one across incident pairs
/// when k is even and by at most one when k is odd (the two middle counts
/// (k-1)/2 and (k+1)/2 share the same y, so equal adjacent y-values occur at
/// the peak); and y is pointwise above the pyramid profile |k/2 - l|.
pub fn ring_increment_violations(pr: &PrInstance, system: &PrPathSystem) -> Vec<String> {
    let instance = pr.instance();
    let net = instance.network();
    assert!(net.is_ring() && instance.k() == net.node_count());
    let k = instance.k() as i64;
    let mut violations = Vec::new();

    for v in 0..net.node_count() {
        let nbrs = net.neighbors(v);
        let (e, f) = (nbrs[0].1, nbrs[1].1);
        let (ne, nf) = (system.n()[e] as i64, system.n()[f] as i64);
        let (ye, yf) = (system.y()[e] as i64, system.y()[f] as i64);
        if v == pr.source() {
            if ne + nf != k - 1 {
                violations.push(format!(
                    "source {} has n({}) + n({}) = {} != k-1",
                    net.label(v),
                    net.edge_name(e),
                    net.edge_name(f),
                    ne + nf
                ));
            }
        } else if (ne - nf).abs() != 1 {
            violations.push(format!(
                "node {} has |n({}) - n({})| = {}",
                net.label(v),
                net.edge_name(e),
                net.edge_name(f),
                (ne - nf).abs()
            ));
        }
        let y_diff = (ye - yf).abs();
        let y_ok = if k % 2 == 0 {
            y_diff == 1
        } else {
            y_diff <= 1 && (y_diff == 1 || (ye == (k - 1) / 2 && yf == (k - 1) / 2))
        };
        if !y_ok {
            violations.push(format!(
                "node {} has |y({}) - y({})| = {} (y = {}, {})",
                net.label(v),
                net.edge_name(e),
                net.edge_name(f),
                y_diff,
                ye,
                yf
            ));
        }
    }

    // Ring order of edges, for the pyramid profile.
    let mut ring_edges = Vec::with_capacity(net.node_count());
    let mut prev = 0;
    let mut cur = net.neighbors(0)[0].0;
    ring_edges.push(net.edge_between(0, cur).unwrap());
    while cur != 0 {
        let nbrs = net.neighbors(cur);
        let next = if nbrs[0].0 == prev {
            nbrs[1].0
        } else {
            nbrs[0].0
        };
        ring_edges.push(net.edge_between(cur, next).unwrap());
        prev = cur;
        cur = next;
    }

    let len = ring_edges.len();
    if k % 2 == 0 {
        // Start at an edge with n = k/2; one must exist.
        match ring_edges
            .iter()
            .position(|&e| system.n()[e] as i64 == k / 2)
        {
            None => violations.push("no edge carries exactly k/2 paths".to_string()),
            Some(start) => {
                for l in 0..len {
                    let e = ring_edges[(start + l) % len];
                    let bound = (k / 2 - l as i64).abs();
                    if (system.y()[e] as i64) < bound {
                        violations.push(format!(
                            "y({}) = {} below profile {}",
                            net.edge_name(e),
                            system.y()[e],
                            bound
                        ));
                    }
                }
            }
        }
    } else {
        // Start at an adjacent pair with y = y = (k-1)/2; indices are offset
        // by a half, so work in doubled units: 2*y >= |k - (2l+1)|.
        let mut start = None;
        for i in 0..len {
            let e = ring_edges[i];
            let f = ring_edges[(i + 1) % len];
            if system.y()[e] as i64 == (k - 1) / 2 && system.y()[f] as i64 == (k - 1) / 2 {
                start = Some((i + 1) % len);
                break;
            }
        }
        match start {
            None => violations.push("no adjacent pair carries y = (k-1)/2 twice".to_string()),
            Some(start) => {
                for l in 0..len {
                    let e = ring_edges[(start + l) % len];
                    let bound = (k - (2 * l as i64 + 1)).abs();
                    if 2 * (system.y()[e] as i64) < bound {
                        violations.push(format!(
                            "y({}) = {} below half-index profile {}/2",
                            net.edge_name(e),
                            system.y()[e],
                            bound
                        ));
                    }
                }
            }
        }
    }

    violations
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::tests::{instance, three_five_tree};
    use crate::tree::{exhaustive_tree_search, tree_cost};
    use rand::Rng;
    use rand::SeedableRng;

    fn ring(costs: &[&str], bounds: &[i64]) -> Instance {
        let n = costs.len();
        let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
        let label_refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
        let mut edges = Vec::new();
        let stored: Vec<(String, String, String)> = (0..n)
            .map(|i| {
                (
                    labels[i].clone(),
                    labels[(i + 1) % n].clone(),
                    costs[i].to_string(),
                )
            })
            .collect();
        for (u, v, c) in &stored {
            edges.push((u.as_str(), v.as_str(), c.as_str()));
        }
        let terms: Vec<(&str, i64)> = label_refs
            .iter()
            .enumerate()
            .filter(|(i, _)| bounds[*i] > 0)
            .map(|(i, l)| (*l, bounds[i]))
            .collect();
        instance(&label_refs, &edges, &terms)
    }

    fn unit_ring(n: usize) -> Instance {
        let costs: Vec<&str> = vec!["1"; n];
        let bounds: Vec<i64> = vec![1; n];
        ring(&costs, &bounds)
    }

    #[test]
    fn triangle_direct_paths_cost_two() {
        let inst = unit_ring(3);
        let pr = PrInstance::new(&inst, 0).unwrap();
        let net = inst.network();
        let paths = vec![
            Path::simple(net, vec![0, 1]).unwrap(),
            Path::simple(net, vec![0, 2]).unwrap(),
        ];
        let sys = PrPathSystem::new(&pr, paths).unwrap();
        assert_eq!(pr_cost(&pr, &sys), Rational::from_int(2));
        // y is 1 on the two used edges, 0 on the far edge.
        let far = net.edge_between(1, 2).unwrap();
        assert_eq!(sys.y()[far], 0);
    }

    #[test]
    fn two_terminal_cost_is_path_length() {
        let inst = instance(
            &["a", "b", "c"],
            &[("a", "b", "2"), ("b", "c", "3"), ("a", "c", "10")],
            &[("a", 1), ("c", 1)],
        );
        let pr = PrInstance::new(&inst, 0).unwrap();
        let path = Path::simple(inst.network(), vec![0, 1, 2]).unwrap();
        let sys = PrPathSystem::new(&pr, vec![path]).unwrap();
        assert_eq!(pr_cost(&pr, &sys), Rational::from_int(5));
        for &e in sys.paths()[0].edges() {
            assert_eq!(sys.y()[e], 1);
        }
    }

    #[test]
    fn c4_all_paths_through_one_edge() {
        let inst = unit_ring(4);
        let pr = PrInstance::new(&inst, 0).unwrap();
        let net = inst.network();
        let paths = vec![
            Path::simple(net, vec![0, 1]).unwrap(),
            Path::simple(net, vec![0, 1, 2]).unwrap(),
            Path::simple(net, vec![0, 1, 2, 3]).unwrap(),
        ];
        let sys = PrPathSystem::new(&pr, paths).unwrap();
        let e = |a, b| net.edge_between(a, b).unwrap();
        assert_eq!(sys.n()[e(0, 1)], 3);
        assert_eq!(sys.n()[e(1, 2)], 2);
        assert_eq!(sys.n()[e(2, 3)], 1);
        assert_eq!(sys.n()[e(0, 3)], 0);
        assert_eq!(sys.y()[e(0, 1)], 1);
        assert_eq!(sys.y()[e(1, 2)], 2);
        assert_eq!(pr_cost(&pr, &sys), Rational::from_int(4));
    }

    #[test]
    fn bruteforce_small_rings() {
        let c4 = unit_ring(4);
        let pr = PrInstance::new(&c4, 0).unwrap();
        let best = pr_bruteforce(&pr, false, 1000).unwrap();
        assert_eq!(best.cost(), &Rational::from_int(4));

        let c3 = unit_ring(3);
        let pr = PrInstance::new(&c3, 0).unwrap();
        let best = pr_bruteforce(&pr, false, 1000).unwrap();
        assert_eq!(best.cost(), &Rational::from_int(2));
    }

    #[test]
    fn bruteforce_budget_guard() {
        let inst = unit_ring(8);
        let pr = PrInstance::new(&inst, 0).unwrap();
        assert!(matches!(
            pr_bruteforce(&pr, false, 3),
            Err(PrError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn contraction_sums_arc_costs() {
        // C6 with terminals at alternating nodes and unit costs contracts to
        // a triangle with all costs 2.
        let inst = ring(&["1", "1", "1", "1", "1", "1"], &[1, 0, 1, 0, 1, 0]);
        match contract_nonterminals_on_ring(&inst).unwrap() {
            Contraction::Ring(c) => {
                let inner = c.contracted();
                assert_eq!(inner.network().node_count(), 3);
                assert!(inner.network().is_ring());
                for e in 0..3 {
                    assert_eq!(inner.network().cost(e), &Rational::from_int(2));
                }
            }
            Contraction::TwoArcs(_) => panic!("expected a contracted ring"),
        }
    }

    #[test]
    fn contraction_identity_when_all_terminals() {
        let inst = unit_ring(5);
        match contract_nonterminals_on_ring(&inst).unwrap() {
            Contraction::Ring(c) => {
                assert_eq!(c.contracted(), &inst);
                for e in 0..5 {
                    assert_eq!(c.arc(e).len(), 2);
                }
            }
            Contraction::TwoArcs(_) => panic!("expected a ring"),
        }
    }

    #[test]
    fn contraction_to_two_terminals_yields_arcs() {
        let inst = ring(&["1", "2", "3", "4"], &[1, 0, 1, 0]);
        match contract_nonterminals_on_ring(&inst).unwrap() {
            Contraction::TwoArcs(two) => {
                assert_eq!(two.endpoints, (0, 2));
                assert_eq!(two.arcs[0].1, Rational::from_int(3));
                assert_eq!(two.arcs[1].1, Rational::from_int(7));
            }
            Contraction::Ring(_) => panic!("expected two arcs"),
        }
    }

    #[test]
    fn ring_solver_c4() {
        let inst = unit_ring(4);
        let pr = PrInstance::new(&inst, 0).unwrap();
        let sys = ring_pr_optimal(&pr).unwrap();
        assert_eq!(sys.cost(), &Rational::from_int(4));
        // The survivors carry the pyramid profile {1, 2, 1}.
        let mut ys: Vec<u32> = sys.y().iter().copied().filter(|&y| y > 0).collect();
        ys.sort_unstable();
        assert_eq!(ys, vec![1, 1, 2]);
    }

    #[test]
    fn ring_solver_c3() {
        let inst = unit_ring(3);
        let pr = PrInstance::new(&inst, 0).unwrap();
        let sys = ring_pr_optimal(&pr).unwrap();
        assert_eq!(sys.cost(), &Rational::from_int(2));
        let ys: Vec<u32> = sys.y().iter().copied().filter(|&y| y > 0).collect();
        assert_eq!(ys, vec![1, 1]);
    }

    #[test]
    fn ring_solver_avoids_expensive_edge() {
        let inst = ring(&["5", "1", "1", "1", "1"], &[1, 1, 1, 1, 1]);
        let pr = PrInstance::new(&inst, 0).unwrap();
        let sys = ring_pr_optimal(&pr).unwrap();
        let brute = pr_bruteforce(&pr, false, 1000).unwrap();
        assert_eq!(sys.cost(), brute.cost());
        assert_eq!(sys.cost(), &Rational::from_int(6));
        // The cost-5 edge is unused.
        assert_eq!(sys.n()[inst.network().edge_between(0, 1).unwrap()], 0);
    }

    #[test]
    fn ring_solver_matches_bruteforce_on_random_rational_costs() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let sizes: Vec<(usize, usize)> =
            (3..=7).map(|k| (k, 10)).chain([(10, 3), (12, 2)]).collect();
        for (k, seeds) in sizes {
            for _ in 0..seeds {
                let costs: Vec<String> = (0..k)
                    .map(|_| format!("{}/{}", rng.gen_range(1..40), rng.gen_range(1..7)))
                    .collect();
                let cost_refs: Vec<&str> = costs.iter().map(|s| s.as_str()).collect();
                let bounds = vec![1i64; k];
                let inst = ring(&cost_refs, &bounds);
                for source in 0..k {
                    let pr = PrInstance::new(&inst, source).unwrap();
                    let fast = ring_pr_optimal(&pr).unwrap();
                    let brute = pr_bruteforce(&pr, false, 100_000).unwrap();
                    assert_eq!(fast.cost(), brute.cost());
                }
            }
        }
    }

    #[test]
    fn ring_solver_handles_nonterminals_and_two_terminals() {
        let inst = ring(&["1", "2", "3", "4"], &[1, 0, 1, 0]);
        let pr = PrInstance::new(&inst, 0).unwrap();
        let sys = ring_pr_optimal(&pr).unwrap();
        // Arc 0-1-2 costs 3, arc 0-3-2 costs 7.
        assert_eq!(sys.cost(), &Rational::from_int(3));
        assert_eq!(sys.paths()[0].nodes(), &[0, 1, 2]);
    }

    #[test]
    fn tree_and_routing_costs_coincide() {
        let (inst, _) = three_five_tree();
        let all: Vec<usize> = (0..inst.network().edge_count()).collect();
        let tree = tree_capacities(&inst, &all).unwrap();
        for &source in inst.terminals() {
            let sys = tree_to_pr(&inst, &tree, source).unwrap();
            assert_eq!(sys.cost(), tree.cost());
        }
    }

    #[test]
    fn y_values_independent_of_source_on_trees() {
        let (inst, _) = three_five_tree();
        let all: Vec<usize> = (0..inst.network().edge_count()).collect();
        let tree = tree_capacities(&inst, &all).unwrap();
        let reference = tree_to_pr(&inst, &tree, inst.terminals()[0]).unwrap();
        for &source in &inst.terminals()[1..] {
            let sys = tree_to_pr(&inst, &tree, source).unwrap();
            assert_eq!(sys.y(), reference.y());
        }
    }

    #[test]
    fn path_of_three_from_middle() {
        let inst = instance(
            &["a", "b", "c"],
            &[("a", "b", "1"), ("b", "c", "1")],
            &[("a", 1), ("b", 1), ("c", 1)],
        );
        let tree = tree_capacities(&inst, &[0, 1]).unwrap();
        let sys = tree_to_pr(&inst, &tree, 1).unwrap();
        assert_eq!(sys.y(), &[1, 1]);
        assert_eq!(sys.cost(), &Rational::from_int(2));
    }

    #[test]
    fn round_trip_between_tree_and_system() {
        let inst = unit_ring(4);
        let tree = exhaustive_tree_search(&inst, 100).unwrap();
        let pr = PrInstance::new(&inst, 0).unwrap();
        let sys = tree_to_pr(&inst, &tree, 0).unwrap();
        let back = pr_tree_to_tree(&pr, &sys).unwrap();
        assert_eq!(back.edges(), tree.edges());
        assert_eq!(tree_cost(&inst, &back), tree.cost().clone());
    }

    #[test]
    fn cyclic_system_is_not_a_tree_system() {
        let inst = unit_ring(4);
        let pr = PrInstance::new(&inst, 0).unwrap();
        let net = inst.network();
        let paths = vec![
            Path::simple(net, vec![0, 1]).unwrap(),
            Path::simple(net, vec![0, 3, 2]).unwrap(),
            Path::simple(net, vec![0, 1, 2, 3]).unwrap(),
        ];
        let sys = PrPathSystem::new(&pr, paths).unwrap();
        assert!(matches!(
            pr_tree_to_tree(&pr, &sys),
            Err(PrError::NotATreeSystem)
        ));
    }

    #[test]
    fn increment_properties_on_random_systems() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for k in 3..=8usize {
            let inst = unit_ring(k);
            let net = inst.network();
            for _ in 0..50 {
                let source = rng.gen_range(0..k);
                let pr = PrInstance::new(&inst, source).unwrap();
                let paths: Vec<Path> = (0..k)
                    .filter(|&t| t != source)
                    .map(|t| {
                        // Clockwise or counter-clockwise around the ring.
                        let nodes: Vec<NodeId> = if rng.gen_bool(0.5) {
                            let mut v = source;
                            let mut seq = vec![v];
                            while v != t {
                                v = (v + 1) % k;
                                seq.push(v);
                            }
                            seq
                        } else {
                            let mut v = source;
                            let mut seq = vec![v];
                            while v != t {
                                v = (v + k - 1) % k;
                                seq.push(v);
                            }
                            seq
                        };
                        Path::simple(net, nodes).unwrap()
                    })
                    .collect();
                let sys = PrPathSystem::new(&pr, paths).unwrap();
                let violations = ring_increment_violations(&pr, &sys);
                assert!(violations.is_empty(), "{violations:?}");
            }
        }
    }

    #[test]
    fn trails_allowed_only_in_brute_force_mode() {
        // On a ring, paths and trails coincide, so the optima agree.
        let inst = unit_ring(5);
        let pr = PrInstance::new(&inst, 0).unwrap();
        let simple = pr_bruteforce(&pr, false, 100_000).unwrap();
        let trails = pr_bruteforce(&pr, true, 100_000).unwrap();
        assert_eq!(simple.cost(), trails.cost());
    }

    #[test]
    fn system_json_round_trip() {
        let inst = unit_ring(4);
        let pr = PrInstance::new(&inst, 0).unwrap();
        let sys = ring_pr_optimal(&pr).unwrap();
        let raw = sys.to_raw(&inst);
        let back = PrPathSystem::from_raw(&inst, &raw).unwrap();
        assert_eq!(sys, back);
    }
}
