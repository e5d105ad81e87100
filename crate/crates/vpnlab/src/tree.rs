//! Tree solutions: capacity assignment, exact costing, and searches.
//!
//! Removing a tree edge splits the spanned terminals in two; the optimal
//! capacity on that edge is the smaller side's total bound. The heuristic
//! search tries the shortest-path tree of every root; the exhaustive search
//! enumerates spanning trees and prunes them to Steiner trees, and serves as
//! the oracle for the heuristic.

use crate::model::{Instance, NodeId, Path, VpnSolution};
use crate::rational::Rational;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TreeError {
    #[error("edge set is not a tree: {0}")]
    NotATree(String),
    #[error("terminal {0:?} is not spanned by the tree")]
    TerminalNotSpanned(String),
    #[error("enumeration budget exceeded: {candidates} candidate subsets, budget {budget}")]
    BudgetExceeded { candidates: u128, budget: u64 },
}

/// Whether a solution's optimality has been certified by exact search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Certification {
    Exhaustive,
    Heuristic,
}

/// A tree spanning all terminals with its optimal integer capacities.
/// Non-terminal leaves are always pruned, so the support is minimal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreeSolution {
    edges: Vec<usize>,
    capacities: Vec<u64>,
    cost: Rational,
    certified: Certification,
}

impl TreeSolution {
    pub fn edges(&self) -> &[usize] {
        &self.edges
    }

    pub fn capacity_of(&self, edge: usize) -> u64 {
        match self.edges.binary_search(&edge) {
            Ok(pos) => self.capacities[pos],
            Err(_) => 0,
        }
    }

    pub fn capacities(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.edges
            .iter()
            .copied()
            .zip(self.capacities.iter().copied())
    }

    pub fn cost(&self) -> &Rational {
        &self.cost
    }

    pub fn certified(&self) -> Certification {
        self.certified
    }

    pub fn with_certification(mut self, certified: Certification) -> TreeSolution {
        self.certified = certified;
        self
    }

    /// The full VPN solution induced by the tree: unique tree paths between
    /// all terminal pairs, tree capacities elsewhere zero.
    pub fn to_vpn_solution(&self, instance: &Instance) -> VpnSolution {
        let net = instance.network();
        let mut adj: BTreeMap<NodeId, Vec<NodeId>> = BTreeMap::new();
        for &e in &self.edges {
            let (u, v) = net.endpoints(e);
            adj.entry(u).or_default().push(v);
            adj.entry(v).or_default().push(u);
        }
        let mut paths = BTreeMap::new();
        for (a, b) in instance.terminal_pairs() {
            let nodes = tree_path(&adj, a, b);
            paths.insert((a, b), Path::simple(net, nodes).unwrap());
        }
        let mut capacities = vec![Rational::zero(); net.edge_count()];
        for (e, cap) in self.capacities() {
            capacities[e] = Rational::from_u64(cap);
        }
        VpnSolution::new(instance, paths, capacities).unwrap()
    }

    pub fn to_raw(&self, instance: &Instance) -> RawTreeSolution {
        let net = instance.network();
        RawTreeSolution {
            tree_edges: self
                .edges
                .iter()
                .map(|&e| {
                    let (u, v) = net.endpoints(e);
                    [net.label(u).to_string(), net.label(v).to_string()]
                })
                .collect(),
            capacities: self
                .capacities()
                .map(|(e, cap)| {
                    let (u, v) = net.endpoints(e);
                    (instance.pair_key(u, v), cap.to_string())
                })
                .collect(),
            cost: self.cost.to_string(),
            certified: self.certified,
        }
    }

    pub fn from_raw(instance: &Instance, raw: &RawTreeSolution) -> Result<TreeSolution, TreeError> {
        let net = instance.network();
        let mut edges = Vec::new();
        for [u, v] in &raw.tree_edges {
            let a = net
                .node_by_label(u)
                .ok_or_else(|| TreeError::NotATree(format!("unknown node {u:?}")))?;
            let b = net
                .node_by_label(v)
                .ok_or_else(|| TreeError::NotATree(format!("unknown node {v:?}")))?;
            let e = net
                .edge_between(a, b)
                .ok_or_else(|| TreeError::NotATree(format!("no edge {u:?}--{v:?}")))?;
            edges.push(e);
        }
        let sol = tree_capacities(instance, &edges)?;
        Ok(sol.with_certification(raw.certified))
    }
}

/// JSON form of a tree solution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawTreeSolution {
    pub tree_edges: Vec<[String; 2]>,
    pub capacities: BTreeMap<String, String>,
    pub cost: String,
    pub certified: Certification,
}

fn tree_path(adj: &BTreeMap<NodeId, Vec<NodeId>>, from: NodeId, to: NodeId) -> Vec<NodeId> {
    // DFS with parent tracking; the tree path is unique.
    let mut stack = vec![(from, from)];
    let mut parent: BTreeMap<NodeId, NodeId> = BTreeMap::new();
    parent.insert(from, from);
    while let Some((v, p)) = stack.pop() {
        if v == to {
            break;
        }
        for &w in adj.get(&v).into_iter().flatten() {
            if w != p && !parent.contains_key(&w) {
                parent.insert(w, v);
                stack.push((w, v));
            }
        }
    }
    let mut nodes = vec![to];
    let mut v = to;
    while v != from {
        v = parent[&v];
        nodes.push(v);
    }
    nodes.reverse();
    nodes
}

/// Compute optimal capacities for a candidate tree: prune non-terminal
/// leaves, then set each edge to the smaller side's total bound.
pub fn tree_capacities(
    instance: &Instance,
    tree_edges: &[usize],
) -> Result<TreeSolution, TreeError> {
    let net = instance.network();
    let mut edges: Vec<usize> = tree_edges.to_vec();
    edges.sort_unstable();
    edges.dedup();
    if edges.len() != tree_edges.len() {
        return Err(TreeError::NotATree("duplicate edge".into()));
    }
    if edges.is_empty() {
        return Err(TreeError::NotATree("empty edge set".into()));
    }

    let mut nodes = BTreeSet::new();
    for &e in &edges {
        let (u, v) = net.endpoints(e);
        nodes.insert(u);
        nodes.insert(v);
    }
    if nodes.len() != edges.len() + 1 {
        return Err(TreeError::NotATree(format!(
            "{} nodes with {} edges",
            nodes.len(),
            edges.len()
        )));
    }
    // Connectivity over the edge subset.
    let mut adj: BTreeMap<NodeId, Vec<(NodeId, usize)>> = BTreeMap::new();
    for &e in &edges {
        let (u, v) = net.endpoints(e);
        adj.entry(u).or_default().push((v, e));
        adj.entry(v).or_default().push((u, e));
    }
    let start = *nodes.iter().next().unwrap();
    let mut seen = BTreeSet::new();
    seen.insert(start);
    let mut stack = vec![start];
    while let Some(v) = stack.pop() {
        for &(w, _) in adj.get(&v).into_iter().flatten() {
            if seen.insert(w) {
                stack.push(w);
            }
        }
    }
    if seen.len() != nodes.len() {
        return Err(TreeError::NotATree("edge set is disconnected".into()));
    }
    for &t in instance.terminals() {
        if !nodes.contains(&t) {
            return Err(TreeError::TerminalNotSpanned(net.label(t).to_string()));
        }
    }

    // Iteratively prune non-terminal leaves; their pendant edges carry no
    // traffic.
    loop {
        let leaf = adj
            .iter()
            .find(|(v, nbrs)| nbrs.len() == 1 && !instance.is_terminal(**v))
            .map(|(v, nbrs)| (*v, nbrs[0]));
        match leaf {
            None => break,
            Some((v, (w, e))) => {
                adj.remove(&v);
                let list = adj.get_mut(&w).unwrap();
                list.retain(|&(x, _)| x != v);
                edges.retain(|&x| x != e);
            }
        }
    }

    // Subtree bound sums from an arbitrary terminal root give the split for
    // every edge.
    let root = instance.terminals()[0];
    let total = instance.total_bound();
    let mut order = Vec::new();
    let mut parent_edge: BTreeMap<NodeId, usize> = BTreeMap::new();
    let mut stack = vec![(root, root)];
    let mut visited = BTreeSet::new();
    visited.insert(root);
    while let Some((v, p)) = stack.pop() {
        order.push(v);
        for &(w, e) in adj.get(&v).into_iter().flatten() {
            if w != p && visited.insert(w) {
                parent_edge.insert(w, e);
                stack.push((w, v));
            }
        }
    }
    let mut subtree: BTreeMap<NodeId, u64> = order
        .iter()
        .map(|&v| (v, instance.bound(v).unwrap_or(0)))
        .collect();
    for &v in order.iter().rev() {
        if let Some(&e) = parent_edge.get(&v) {
            let p = net.other_endpoint(e, v);
            let s = subtree[&v];
            *subtree.get_mut(&p).unwrap() += s;
        }
    }

    let mut caps: BTreeMap<usize, u64> = BTreeMap::new();
    for (&v, &e) in &parent_edge {
        let below = subtree[&v];
        caps.insert(e, below.min(total - below));
    }

    edges.sort_unstable();
    let capacities: Vec<u64> = edges.iter().map(|e| caps[e]).collect();
    let cost = edges
        .iter()
        .zip(&capacities)
        .map(|(&e, &cap)| net.cost(e) * &Rational::from_u64(cap))
        .sum();
    Ok(TreeSolution {
        edges,
        capacities,
        cost,
        certified: Certification::Heuristic,
    })
}

/// Exact reservation cost of a tree solution.
pub fn tree_cost(instance: &Instance, solution: &TreeSolution) -> Rational {
    let net = instance.network();
    solution
        .capacities()
        .map(|(e, cap)| net.cost(e) * &Rational::from_u64(cap))
        .sum()
}

/// Deterministic Dijkstra: returns the predecessor of every reachable node.
/// Nodes settle in (distance, id) order; the predecessor is the smallest-id
/// settled neighbor achieving the distance, so ties break reproducibly.
fn shortest_path_predecessors(instance: &Instance, root: NodeId) -> Vec<Option<NodeId>> {
    let net = instance.network();
    let n = net.node_count();
    let mut dist: Vec<Option<Rational>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut pred: Vec<Option<NodeId>> = vec![None; n];
    let mut heap: BinaryHeap<std::cmp::Reverse<(Rational, NodeId)>> = BinaryHeap::new();
    dist[root] = Some(Rational::zero());
    heap.push(std::cmp::Reverse((Rational::zero(), root)));
    while let Some(std::cmp::Reverse((d, v))) = heap.pop() {
        if settled[v] {
            continue;
        }
        settled[v] = true;
        if v != root {
            pred[v] = net
                .neighbors(v)
                .iter()
                .filter(|&&(w, e)| {
                    settled[w]
                        && dist[w]
                            .as_ref()
                            .map(|dw| dw + net.cost(e) == d)
                            .unwrap_or(false)
                })
                .map(|&(w, _)| w)
                .next();
            debug_assert!(pred[v].is_some(), "settled node without settled achiever");
        }
        for &(w, e) in net.neighbors(v) {
            if settled[w] {
                continue;
            }
            let nd = &d + net.cost(e);
            if dist[w].as_ref().map(|cur| nd < *cur).unwrap_or(true) {
                dist[w] = Some(nd.clone());
                heap.push(std::cmp::Reverse((nd, w)));
            }
        }
    }
    pred
}

fn better(candidate: &TreeSolution, best: &TreeSolution) -> bool {
    candidate.cost < best.cost || (candidate.cost == best.cost && candidate.edges < best.edges)
}

/// Minimum-cost tree among the shortest-path trees of every root. Flagged
/// heuristic: the result is only certified after an exhaustive cross-check.
pub fn optimal_tree_search(instance: &Instance) -> TreeSolution {
    let net = instance.network();
    let mut best: Option<TreeSolution> = None;
    for root in 0..net.node_count() {
        let pred = shortest_path_predecessors(instance, root);
        let mut edges = BTreeSet::new();
        for &t in instance.terminals() {
            let mut v = t;
            while v != root {
                let p = pred[v].expect("connected graph");
                edges.insert(net.edge_between(v, p).unwrap());
                v = p;
            }
        }
        if edges.is_empty() {
            continue;
        }
        let edge_vec: Vec<usize> = edges.into_iter().collect();
        let candidate = tree_capacities(instance, &edge_vec).expect("pred paths form a tree");
        if best.as_ref().map(|b| better(&candidate, b)).unwrap_or(true) {
            best = Some(candidate);
        }
    }
    best.expect("instance has at least two terminals")
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let mut result: u128 = 1;
    for i in 0..k.min(n - k) {
        result = result.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    result
}

/// True minimum-cost tree solution by enumerating all spanning trees of the
/// network and pruning each to its terminal-spanning core.
pub fn exhaustive_tree_search(instance: &Instance, budget: u64) -> Result<TreeSolution, TreeError> {
    let net = instance.network();
    let n = net.node_count();
    let m = net.edge_count();
    let take = n - 1;
    let candidates = binomial(m, take);
    if candidates > budget as u128 {
        return Err(TreeError::BudgetExceeded { candidates, budget });
    }

    let mut best: Option<TreeSolution> = None;
    let mut combo: Vec<usize> = (0..take).collect();
    loop {
        if is_spanning_tree(net, &combo, n) {
            let candidate = tree_capacities(instance, &combo).expect("spanning tree");
            if best.as_ref().map(|b| better(&candidate, b)).unwrap_or(true) {
                best = Some(candidate);
            }
        }
        // Next lexicographic combination of `take` edges out of `m`.
        let mut i = take;
        loop {
            if i == 0 {
                return best.ok_or_else(|| TreeError::NotATree("no spanning tree".into()));
            }
            i -= 1;
            if combo[i] != i + m - take {
                break;
            }
        }
        combo[i] += 1;
        for j in i + 1..take {
            combo[j] = combo[j - 1] + 1;
        }
    }
}

fn is_spanning_tree(net: &crate::model::Network, edges: &[usize], n: usize) -> bool {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut v: usize) -> usize {
        while parent[v] != v {
            parent[v] = parent[parent[v]];
            v = parent[v];
        }
        v
    }
    let mut merges = 0;
    for &e in edges {
        let (u, v) = net.endpoints(e);
        let (ru, rv) = (find(&mut parent, u), find(&mut parent, v));
        if ru == rv {
            return false;
        }
        parent[ru] = rv;
        merges += 1;
    }
    merges == n - 1
}
