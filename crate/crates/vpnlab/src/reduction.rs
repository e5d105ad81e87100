//! Reduction from general integer bounds to unit bounds, and the lift of
//! tree solutions back to the original instance.
//!
//! A terminal with bound b >= 2 is replaced by b unit-bound sub-terminals,
//! either as pendant nodes joined by zero-cost edges (star variant) or strung
//! along a subdivided incident edge (subdivision variant, which preserves
//! rings). Tree solutions lift back at identical cost once the sub-terminal
//! chain sits connected next to its owner; `normalize_reduced_tree` rewires
//! arbitrary reduced trees into that shape without increasing cost.

use crate::model::{Instance, InstanceParts, NodeId, RawInstance};
use crate::rational::Rational;
use crate::tree::{tree_capacities, TreeSolution};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReductionVariant {
    Star,
    Subdivision,
}

/// Which incident edge to subdivide. The canonical endpoint pair decides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeChoice {
    #[default]
    LexSmallest,
    LexLargest,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeProvenance {
    /// Carried over unchanged from the original instance.
    Original(usize),
    /// Zero-cost edge inside or into a sub-terminal chain or pendant star.
    ChainZero { terminal: NodeId },
    /// The cost-carrying remainder of a subdivided original edge.
    Tail { edge: usize },
    /// Zero-cost pendant edge of the star variant.
    Pendant { terminal: NodeId },
}

#[derive(Debug, Clone, Error)]
pub enum ReductionError {
    #[error("terminal {0:?} has bound >= 2 but no incident edge")]
    IsolatedTerminal(String),
    #[error("chain of terminal {terminal:?} unusable in the tree: {reason}")]
    ChainBroken { terminal: String, reason: String },
    #[error("bad reduction data: {0}")]
    Malformed(String),
}

/// The reduced instance together with everything needed to replay lifts.
#[derive(Debug, Clone)]
pub struct Reduction {
    variant: ReductionVariant,
    original: Instance,
    reduced: Instance,
    /// Original terminal -> its sub-terminals in chain order.
    sub_terminals: BTreeMap<NodeId, Vec<NodeId>>,
    /// Per reduced edge index.
    provenance: Vec<EdgeProvenance>,
}

impl Reduction {
    pub fn variant(&self) -> ReductionVariant {
        self.variant
    }

    pub fn original(&self) -> &Instance {
        &self.original
    }

    pub fn reduced(&self) -> &Instance {
        &self.reduced
    }

    pub fn sub_terminals(&self) -> &BTreeMap<NodeId, Vec<NodeId>> {
        &self.sub_terminals
    }

    pub fn provenance(&self, reduced_edge: usize) -> &EdgeProvenance {
        &self.provenance[reduced_edge]
    }

    pub fn is_identity(&self) -> bool {
        self.sub_terminals.is_empty()
    }
}

struct WorkEdge {
    a: usize,
    b: usize,
    cost: Rational,
    prov: EdgeProvenance,
}

fn unique_label(labels: &[String], base: String) -> String {
    let mut candidate = base;
    while labels.iter().any(|l| l == &candidate) {
        candidate.push('+');
    }
    candidate
}

fn finish(
    variant: ReductionVariant,
    original: &Instance,
    labels: Vec<String>,
    work_edges: Vec<WorkEdge>,
    terminals: Vec<(usize, u64)>,
    sub_terminals: BTreeMap<NodeId, Vec<NodeId>>,
) -> Reduction {
    let reduced = Instance::from_parts(InstanceParts {
        labels,
        edges: work_edges
            .iter()
            .map(|e| (e.a, e.b, e.cost.clone()))
            .collect(),
        terminals,
    })
    .expect("reduction of a valid instance stays valid");
    let rnet = reduced.network();
    let mut provenance = vec![EdgeProvenance::Original(usize::MAX); rnet.edge_count()];
    for e in &work_edges {
        let idx = rnet.edge_between(e.a, e.b).expect("work edge survives");
        provenance[idx] = e.prov.clone();
    }
    Reduction {
        variant,
        original: original.clone(),
        reduced,
        sub_terminals,
        provenance,
    }
}

/// Replace each terminal of bound b >= 2 by b pendant unit-bound terminals
/// joined to it with zero-cost edges.
pub fn split_terminals_star(instance: &Instance) -> Reduction {
    let net = instance.network();
    let mut labels: Vec<String> = (0..net.node_count())
        .map(|v| net.label(v).to_string())
        .collect();
    let mut work_edges: Vec<WorkEdge> = net
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| WorkEdge {
            a: e.u,
            b: e.v,
            cost: e.cost.clone(),
            prov: EdgeProvenance::Original(i),
        })
        .collect();
    let mut terminals: Vec<(usize, u64)> = Vec::new();
    let mut sub_terminals = BTreeMap::new();

    for &t in instance.terminals() {
        let b = instance.bound(t).unwrap();
        if b == 1 {
            terminals.push((t, 1));
            continue;
        }
        let mut pendants = Vec::with_capacity(b as usize);
        for l in 1..=b {
            let label = unique_label(&labels, format!("{}#{}", net.label(t), l));
            labels.push(label);
            let p = labels.len() - 1;
            pendants.push(p);
            terminals.push((p, 1));
            work_edges.push(WorkEdge {
                a: t,
                b: p,
                cost: Rational::zero(),
                prov: EdgeProvenance::ChainZero { terminal: t },
            });
        }
        sub_terminals.insert(t, pendants);
    }

    finish(
        ReductionVariant::Star,
        instance,
        labels,
        work_edges,
        terminals,
        sub_terminals,
    )
}

/// Subdivide one incident edge of each terminal with bound b >= 2 into b+1
/// parts: the first b new edges are free, the last carries the original
/// cost. Preserves rings.
pub fn split_terminals_subdivide(
    instance: &Instance,
    policy: EdgeChoice,
) -> Result<Reduction, ReductionError> {
    let net = instance.network();
    let mut labels: Vec<String> = (0..net.node_count())
        .map(|v| net.label(v).to_string())
        .collect();
    let mut work_edges: Vec<WorkEdge> = net
        .edges()
        .iter()
        .enumerate()
        .map(|(i, e)| WorkEdge {
            a: e.u,
            b: e.v,
            cost: e.cost.clone(),
            prov: EdgeProvenance::Original(i),
        })
        .collect();
    let mut terminals: Vec<(usize, u64)> = Vec::new();
    let mut sub_terminals = BTreeMap::new();

    for &t in instance.terminals() {
        let b = instance.bound(t).unwrap();
        if b == 1 {
            terminals.push((t, 1));
            continue;
        }
        let mut incident: Vec<(usize, (usize, usize))> = work_edges
            .iter()
            .enumerate()
            .filter(|(_, e)| e.a == t || e.b == t)
            .map(|(i, e)| (i, (e.a.min(e.b), e.a.max(e.b))))
            .collect();
        if incident.is_empty() {
            return Err(ReductionError::IsolatedTerminal(net.label(t).to_string()));
        }
        incident.sort_by_key(|(_, pair)| *pair);
        let (edge_idx, _) = match policy {
            EdgeChoice::LexSmallest => incident[0],
            EdgeChoice::LexLargest => *incident.last().unwrap(),
        };
        let chosen = work_edges.remove(edge_idx);
        let other = if chosen.a == t { chosen.b } else { chosen.a };
        let tail_edge = match chosen.prov {
            EdgeProvenance::Original(e) | EdgeProvenance::Tail { edge: e } => e,
            _ => unreachable!("zero-cost chain edges never touch an unsplit terminal"),
        };

        let mut chain = Vec::with_capacity(b as usize);
        for l in 1..=b {
            let label = unique_label(&labels, format!("{}#{}", net.label(t), l));
            labels.push(label);
            let c = labels.len() - 1;
            chain.push(c);
            terminals.push((c, 1));
        }
        work_edges.push(WorkEdge {
            a: t,
            b: chain[0],
            cost: Rational::zero(),
            prov: EdgeProvenance::ChainZero { terminal: t },
        });
        for pair in chain.windows(2) {
            work_edges.push(WorkEdge {
                a: pair[0],
                b: pair[1],
                cost: Rational::zero(),
                prov: EdgeProvenance::ChainZero { terminal: t },
            });
        }
        work_edges.push(WorkEdge {
            a: *chain.last().unwrap(),
            b: other,
            cost: chosen.cost,
            prov: EdgeProvenance::Tail { edge: tail_edge },
        });
        sub_terminals.insert(t, chain);
    }

    Ok(finish(
        ReductionVariant::Subdivision,
        instance,
        labels,
        work_edges,
        terminals,
        sub_terminals,
    ))
}

/// How a sub-terminal block sits inside a tree's edge set.
struct BlockState {
    /// All chain-internal edges are present.
    complete: bool,
    /// The zero edge from the owner terminal into the chain is present.
    attached_to_owner: bool,
    /// The owner node has some tree edge.
    owner_in_tree: bool,
}

fn block_state(
    red: &Reduction,
    edge_set: &BTreeSet<usize>,
    t: NodeId,
    chain: &[NodeId],
) -> BlockState {
    let rnet = red.reduced.network();
    let complete = chain
        .windows(2)
        .all(|pair| edge_set.contains(&rnet.edge_between(pair[0], pair[1]).unwrap()));
    let attach = rnet.edge_between(t, chain[0]).unwrap();
    let attached_to_owner = edge_set.contains(&attach);
    let owner_in_tree = edge_set.iter().any(|&e| {
        let (u, v) = rnet.endpoints(e);
        u == t || v == t
    });
    BlockState {
        complete,
        attached_to_owner,
        owner_in_tree,
    }
}

/// A block is liftable when the chain is complete and either hangs off its
/// owner terminal or stands in for it (the owner node absent from the tree).
fn block_liftable(state: &BlockState) -> bool {
    state.complete && (state.attached_to_owner || !state.owner_in_tree)
}

/// Outer neighbor of the last chain node (beyond the chain itself).
fn chain_far_end(red: &Reduction, chain: &[NodeId]) -> NodeId {
    let rnet = red.reduced.network();
    let last = *chain.last().unwrap();
    let inner = if chain.len() >= 2 {
        chain[chain.len() - 2]
    } else {
        usize::MAX
    };
    rnet.neighbors(last)
        .iter()
        .map(|&(x, _)| x)
        .find(|&x| x != inner)
        .expect("tail target exists")
}

/// Rewire a reduced tree so every sub-terminal chain is complete and
/// liftable, never increasing the cost. Already-liftable trees pass through
/// unchanged.
pub fn normalize_reduced_tree(red: &Reduction, tree: &TreeSolution) -> TreeSolution {
    if red.variant == ReductionVariant::Star || red.is_identity() {
        // Pendant sub-terminals are forced into every spanning tree.
        return tree.clone();
    }
    let rnet = red.reduced.network();
    let mut current = tree.clone();
    let max_passes = red.sub_terminals.len() + 2;
    for _ in 0..max_passes {
        let mut changed = false;
        for (&t, chain) in &red.sub_terminals {
            let edge_set: BTreeSet<usize> = current.edges().iter().copied().collect();
            let state = block_state(red, &edge_set, t, chain);
            if block_liftable(&state) {
                continue;
            }

            // Strip every edge touching the chain, then re-attach the block.
            let chain_nodes: BTreeSet<NodeId> = chain.iter().copied().collect();
            let base: BTreeSet<usize> = edge_set
                .iter()
                .copied()
                .filter(|&e| {
                    let (u, v) = rnet.endpoints(e);
                    !chain_nodes.contains(&u) && !chain_nodes.contains(&v)
                })
                .collect();
            let sub_edges: Vec<usize> = chain
                .windows(2)
                .map(|pair| rnet.edge_between(pair[0], pair[1]).unwrap())
                .collect();
            let attach_owner = rnet.edge_between(t, chain[0]).unwrap();
            let far = chain_far_end(red, chain);
            let attach_far = rnet.edge_between(*chain.last().unwrap(), far).unwrap();

            let mut candidates: Vec<Vec<usize>> = Vec::new();
            // Block pendant at the owner.
            let mut cand = base.clone();
            cand.extend(&sub_edges);
            cand.insert(attach_owner);
            candidates.push(cand.iter().copied().collect());
            // Block pendant at the far end (liftable only if the owner node
            // prunes away; checked below).
            let mut cand = base.clone();
            cand.extend(&sub_edges);
            cand.insert(attach_far);
            candidates.push(cand.iter().copied().collect());
            // Chain on the owner-to-far path, evicting one base edge of the
            // old connection. Skip zero-cost chain edges of other blocks.
            if let Some(path_edges) = path_in_edge_set(rnet, &base, t, far) {
                for f in path_edges {
                    if matches!(
                        red.provenance[f],
                        EdgeProvenance::ChainZero { .. } | EdgeProvenance::Pendant { .. }
                    ) {
                        continue;
                    }
                    let mut cand = base.clone();
                    cand.remove(&f);
                    cand.extend(&sub_edges);
                    cand.insert(attach_owner);
                    cand.insert(attach_far);
                    candidates.push(cand.iter().copied().collect());
                }
            }

            let mut best: Option<TreeSolution> = None;
            for cand in candidates {
                let Ok(sol) = tree_capacities(red.reduced(), &cand) else {
                    continue;
                };
                let set: BTreeSet<usize> = sol.edges().iter().copied().collect();
                if !block_liftable(&block_state(red, &set, t, chain)) {
                    continue;
                }
                let is_better = best
                    .as_ref()
                    .map(|b| {
                        sol.cost() < b.cost() || (sol.cost() == b.cost() && sol.edges() < b.edges())
                    })
                    .unwrap_or(true);
                if is_better {
                    best = Some(sol);
                }
            }
            let repaired = best.expect("owner-pendant candidate is always a liftable tree");
            assert!(
                repaired.cost() <= current.cost(),
                "chain repair increased cost: {} -> {}",
                current.cost(),
                repaired.cost()
            );
            current = repaired.with_certification(tree.certified());
            changed = true;
        }
        if !changed {
            return current;
        }
    }
    panic!("chain normalization failed to stabilize");
}

fn path_in_edge_set(
    rnet: &crate::model::Network,
    edges: &BTreeSet<usize>,
    from: NodeId,
    to: NodeId,
) -> Option<Vec<usize>> {
    let mut adj: BTreeMap<NodeId, Vec<(NodeId, usize)>> = BTreeMap::new();
    for &e in edges {
        let (u, v) = rnet.endpoints(e);
        adj.entry(u).or_default().push((v, e));
        adj.entry(v).or_default().push((u, e));
    }
    let mut pred: BTreeMap<NodeId, (NodeId, usize)> = BTreeMap::new();
    let mut queue = VecDeque::new();
    queue.push_back(from);
    let mut seen = BTreeSet::new();
    seen.insert(from);
    while let Some(v) = queue.pop_front() {
        if v == to {
            let mut path = Vec::new();
            let mut cur = to;
            while cur != from {
                let (p, e) = pred[&cur];
                path.push(e);
                cur = p;
            }
            path.reverse();
            return Some(path);
        }
        for &(w, e) in adj.get(&v).into_iter().flatten() {
            if seen.insert(w) {
                pred.insert(w, (v, e));
                queue.push_back(w);
            }
        }
    }
    None
}

/// Map a liftable reduced tree back to the original instance at identical
/// cost: zero-cost auxiliary edges vanish, tails rejoin their original edge.
pub fn lift_tree_solution(
    red: &Reduction,
    tree: &TreeSolution,
) -> Result<TreeSolution, ReductionError> {
    let rnet = red.reduced.network();
    let onet = red.original.network();
    let edge_set: BTreeSet<usize> = tree.edges().iter().copied().collect();

    if red.variant == ReductionVariant::Subdivision {
        for (&t, chain) in &red.sub_terminals {
            let state = block_state(red, &edge_set, t, chain);
            if !state.complete {
                return Err(ReductionError::ChainBroken {
                    terminal: onet.label(t).to_string(),
                    reason: "a chain edge between sub-terminals is missing".to_string(),
                });
            }
            if !block_liftable(&state) {
                return Err(ReductionError::ChainBroken {
                    terminal: onet.label(t).to_string(),
                    reason: "the chain is detached from its terminal while the terminal node \
                             remains in the tree"
                        .to_string(),
                });
            }
        }
    }

    let mut mapped: Vec<usize> = Vec::new();
    for &e in tree.edges() {
        match red.provenance[e] {
            EdgeProvenance::Original(o) | EdgeProvenance::Tail { edge: o } => mapped.push(o),
            EdgeProvenance::ChainZero { .. } | EdgeProvenance::Pendant { .. } => {}
        }
    }
    mapped.sort_unstable();
    mapped.dedup();

    let lifted = tree_capacities(red.original(), &mapped).map_err(|e| {
        ReductionError::Malformed(format!("lifted edge set is not a tree solution: {e}"))
    })?;
    assert_eq!(
        lifted.cost(),
        tree.cost(),
        "lift must preserve the reservation cost"
    );
    let _ = rnet;
    Ok(lifted.with_certification(tree.certified()))
}

/// JSON bundle: both instances plus the replayable maps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawReduction {
    pub variant: ReductionVariant,
    pub original: RawInstance,
    pub reduced: RawInstance,
    pub sub_terminals: BTreeMap<String, Vec<String>>,
    pub edge_provenance: BTreeMap<String, RawProvenance>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RawProvenance {
    Original { edge: [String; 2] },
    ChainZero { terminal: String },
    Tail { edge: [String; 2] },
    Pendant { terminal: String },
}

impl Reduction {
    pub fn to_raw(&self) -> RawReduction {
        let onet = self.original.network();
        let rnet = self.reduced.network();
        let orig_pair = |e: usize| {
            let (u, v) = onet.endpoints(e);
            [onet.label(u).to_string(), onet.label(v).to_string()]
        };
        RawReduction {
            variant: self.variant,
            original: RawInstance::from(self.original.clone()),
            reduced: RawInstance::from(self.reduced.clone()),
            sub_terminals: self
                .sub_terminals
                .iter()
                .map(|(&t, subs)| {
                    (
                        onet.label(t).to_string(),
                        subs.iter().map(|&s| rnet.label(s).to_string()).collect(),
                    )
                })
                .collect(),
            edge_provenance: self
                .provenance
                .iter()
                .enumerate()
                .map(|(e, prov)| {
                    let (u, v) = rnet.endpoints(e);
                    let key = format!("{}|{}", rnet.label(u), rnet.label(v));
                    let raw = match prov {
                        EdgeProvenance::Original(o) => RawProvenance::Original {
                            edge: orig_pair(*o),
                        },
                        EdgeProvenance::ChainZero { terminal } => RawProvenance::ChainZero {
                            terminal: onet.label(*terminal).to_string(),
                        },
                        EdgeProvenance::Tail { edge } => RawProvenance::Tail {
                            edge: orig_pair(*edge),
                        },
                        EdgeProvenance::Pendant { terminal } => RawProvenance::Pendant {
                            terminal: onet.label(*terminal).to_string(),
                        },
                    };
                    (key, raw)
                })
                .collect(),
        }
    }

    pub fn from_raw(raw: &RawReduction) -> Result<Reduction, ReductionError> {
        let original = Instance::try_from(raw.original.clone())
            .map_err(|e| ReductionError::Malformed(e.to_string()))?;
        let reduced = Instance::try_from(raw.reduced.clone())
            .map_err(|e| ReductionError::Malformed(e.to_string()))?;
        let onet = original.network();
        let rnet = reduced.network();
        let onode = |l: &str| {
            onet.node_by_label(l)
                .ok_or_else(|| ReductionError::Malformed(format!("unknown original node {l:?}")))
        };
        let rnode = |l: &str| {
            rnet.node_by_label(l)
                .ok_or_else(|| ReductionError::Malformed(format!("unknown reduced node {l:?}")))
        };
        let oedge = |pair: &[String; 2]| -> Result<usize, ReductionError> {
            let u = onode(&pair[0])?;
            let v = onode(&pair[1])?;
            onet.edge_between(u, v)
                .ok_or_else(|| ReductionError::Malformed(format!("unknown original edge {pair:?}")))
        };

        let mut sub_terminals = BTreeMap::new();
        for (t, subs) in &raw.sub_terminals {
            let t = onode(t)?;
            let mut chain = Vec::with_capacity(subs.len());
            for s in subs {
                chain.push(rnode(s)?);
            }
            sub_terminals.insert(t, chain);
        }

        let mut provenance = vec![None; rnet.edge_count()];
        for (key, prov) in &raw.edge_provenance {
            let (a, b) = key
                .split_once('|')
                .ok_or_else(|| ReductionError::Malformed(format!("bad edge key {key:?}")))?;
            let e = rnet.edge_between(rnode(a)?, rnode(b)?).ok_or_else(|| {
                ReductionError::Malformed(format!("unknown reduced edge {key:?}"))
            })?;
            provenance[e] = Some(match prov {
                RawProvenance::Original { edge } => EdgeProvenance::Original(oedge(edge)?),
                RawProvenance::ChainZero { terminal } => EdgeProvenance::ChainZero {
                    terminal: onode(terminal)?,
                },
                RawProvenance::Tail { edge } => EdgeProvenance::Tail { edge: oedge(edge)? },
                RawProvenance::Pendant { terminal } => EdgeProvenance::Pendant {
                    terminal: onode(terminal)?,
                },
            });
        }
        let provenance: Vec<EdgeProvenance> = provenance
            .into_iter()
            .enumerate()
            .map(|(e, p)| {
                p.ok_or_else(|| {
                    ReductionError::Malformed(format!(
                        "edge {} lacks provenance",
                        rnet.edge_name(e)
                    ))
                })
            })
            .collect::<Result<_, _>>()?;

        Ok(Reduction {
            variant: raw.variant,
            original,
            reduced,
            sub_terminals,
            provenance,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tree::exhaustive_tree_search;
    use crate::tree::tests::instance;
    use rand::Rng;
    use rand::SeedableRng;

    #[test]
    fn star_split_of_bound_four_terminal() {
        // A terminal with bound 4 and three incident edges gets 4 pendant
        // zero-cost terminals.
        let inst = instance(
            &["i", "x", "y", "z"],
            &[
                ("i", "x", "1"),
                ("i", "y", "1"),
                ("i", "z", "1"),
                ("x", "y", "1"),
            ],
            &[("i", 4), ("x", 1), ("y", 1), ("z", 1)],
        );
        let red = split_terminals_star(&inst);
        let r = red.reduced();
        assert_eq!(r.network().node_count(), 8);
        assert_eq!(r.k(), 7);
        assert!(r.unit_bounds());
        assert_eq!(red.sub_terminals()[&0].len(), 4);
        assert_eq!(r.total_bound(), inst.total_bound());
        for &p in &red.sub_terminals()[&0] {
            assert_eq!(r.network().degree(p), 1);
        }
    }

    #[test]
    fn star_split_is_identity_on_unit_bounds() {
        let inst = instance(&["a", "b"], &[("a", "b", "1")], &[("a", 1), ("b", 1)]);
        let red = split_terminals_star(&inst);
        assert!(red.is_identity());
        assert_eq!(red.reduced(), &inst);
    }

    #[test]
    fn star_split_triangle() {
        let inst = instance(
            &["1", "2", "3"],
            &[("1", "2", "1"), ("2", "3", "1"), ("1", "3", "1")],
            &[("1", 2), ("2", 1), ("3", 1)],
        );
        let red = split_terminals_star(&inst);
        assert_eq!(red.reduced().network().node_count(), 5);
        assert!(red.reduced().unit_bounds());
        assert_eq!(red.sub_terminals()[&0].len(), 2);
    }

    #[test]
    fn subdivide_ring_keeps_ring() {
        // C3 with bound 2 at node "1": splitting along edge {1,2} gives a C5
        // with costs (0, 0, a, b, c).
        let inst = instance(
            &["1", "2", "3"],
            &[("1", "2", "7"), ("2", "3", "11"), ("1", "3", "13")],
            &[("1", 2), ("2", 1), ("3", 1)],
        );
        let red = split_terminals_subdivide(&inst, EdgeChoice::LexSmallest).unwrap();
        let r = red.reduced();
        assert!(r.network().is_ring());
        assert_eq!(r.network().node_count(), 5);
        assert!(r.unit_bounds());
        assert_eq!(r.total_bound(), inst.total_bound());
        let mut costs: Vec<String> = r
            .network()
            .edges()
            .iter()
            .map(|e| e.cost.to_string())
            .collect();
        costs.sort();
        assert_eq!(costs, vec!["0", "0", "11", "13", "7"]);
    }

    #[test]
    fn subdivide_identity_on_unit_bounds() {
        let inst = instance(
            &["a", "b", "c"],
            &[("a", "b", "1"), ("b", "c", "1")],
            &[("a", 1), ("c", 1)],
        );
        let red = split_terminals_subdivide(&inst, EdgeChoice::LexSmallest).unwrap();
        assert!(red.is_identity());
        assert_eq!(red.reduced(), &inst);
    }

    #[test]
    fn subdivide_bound_four_makes_five_parts() {
        let inst = instance(&["i", "w"], &[("i", "w", "9")], &[("i", 4), ("w", 1)]);
        let red = split_terminals_subdivide(&inst, EdgeChoice::LexSmallest).unwrap();
        let r = red.reduced();
        assert_eq!(r.network().edge_count(), 5);
        let zero_count = r
            .network()
            .edges()
            .iter()
            .filter(|e| e.cost.is_zero())
            .count();
        assert_eq!(zero_count, 4);
        let total: Rational = r.network().edges().iter().map(|e| e.cost.clone()).sum();
        assert_eq!(total, Rational::from_int(9));
    }

    fn lifted_cost_matches(inst: &Instance, red: &Reduction, budget: u64) {
        let orig_opt = exhaustive_tree_search(inst, budget).unwrap();
        let reduced_opt = exhaustive_tree_search(red.reduced(), budget).unwrap();
        assert_eq!(
            reduced_opt.cost(),
            orig_opt.cost(),
            "reduction preserves the optimum"
        );
        let normalized = normalize_reduced_tree(red, &reduced_opt);
        assert!(normalized.cost() <= reduced_opt.cost());
        let lifted = lift_tree_solution(red, &normalized).unwrap();
        assert_eq!(lifted.cost(), normalized.cost());
        assert_eq!(lifted.cost(), orig_opt.cost());
    }

    #[test]
    fn lift_ring_optimum_back_to_c3() {
        let inst = instance(
            &["1", "2", "3"],
            &[("1", "2", "1"), ("2", "3", "2"), ("1", "3", "3")],
            &[("1", 2), ("2", 1), ("3", 1)],
        );
        let red = split_terminals_subdivide(&inst, EdgeChoice::LexSmallest).unwrap();
        lifted_cost_matches(&inst, &red, 100_000);
    }

    #[test]
    fn lift_star_variant_drops_pendants() {
        let inst = instance(
            &["1", "2", "3"],
            &[("1", "2", "1"), ("2", "3", "2"), ("1", "3", "3")],
            &[("1", 2), ("2", 1), ("3", 1)],
        );
        let red = split_terminals_star(&inst);
        lifted_cost_matches(&inst, &red, 100_000);
    }

    #[test]
    fn lift_identity_reduction() {
        let inst = instance(
            &["a", "b", "c"],
            &[("a", "b", "1"), ("b", "c", "1"), ("a", "c", "1")],
            &[("a", 1), ("b", 1), ("c", 1)],
        );
        let red = split_terminals_subdivide(&inst, EdgeChoice::LexSmallest).unwrap();
        let opt = exhaustive_tree_search(red.reduced(), 1000).unwrap();
        let lifted = lift_tree_solution(&red, &normalize_reduced_tree(&red, &opt)).unwrap();
        assert_eq!(lifted.cost(), opt.cost());
        assert_eq!(lifted.edges(), opt.edges());
    }

    #[test]
    fn broken_chain_is_repaired_by_normalize() {
        // C4 with bound 2 at node "0"; subdividing edge {0,1} gives a C6.
        // Deleting a chain edge from the C6 splits the block in two; the
        // normalizer must rewire it at no extra cost.
        let inst = instance(
            &["0", "1", "2", "3"],
            &[
                ("0", "1", "3"),
                ("1", "2", "1"),
                ("2", "3", "4"),
                ("0", "3", "2"),
            ],
            &[("0", 2), ("1", 1), ("2", 1), ("3", 1)],
        );
        let red = split_terminals_subdivide(&inst, EdgeChoice::LexSmallest).unwrap();
        let r = red.reduced();
        assert!(r.network().is_ring());
        let chain = &red.sub_terminals()[&0];
        let gap = r.network().edge_between(chain[0], chain[1]).unwrap();
        let tree_edges: Vec<usize> = (0..r.network().edge_count())
            .filter(|&e| e != gap)
            .collect();
        let broken = tree_capacities(r, &tree_edges).unwrap();
        assert!(matches!(
            lift_tree_solution(&red, &broken),
            Err(ReductionError::ChainBroken { .. })
        ));
        let normalized = normalize_reduced_tree(&red, &broken);
        assert!(normalized.cost() <= broken.cost());
        let lifted = lift_tree_solution(&red, &normalized).unwrap();
        assert_eq!(lifted.cost(), normalized.cost());
    }

    #[test]
    fn detached_complete_chain_is_rewired() {
        // K4 with bound 2 at node "0"; edge {0,1} gets subdivided into
        // 0 - 0#1 - 0#2 - 1. A tree can contain the whole sub-chain as a
        // pendant at node "1" while node "0" sits elsewhere; dropping the
        // zero edges there would close the cycle 0-1-2-0, so the lift must
        // refuse and the normalizer must re-attach the block.
        let inst = instance(
            &["0", "1", "2", "3"],
            &[
                ("0", "1", "3"),
                ("0", "2", "1"),
                ("0", "3", "1"),
                ("1", "2", "1"),
                ("1", "3", "1"),
                ("2", "3", "1"),
            ],
            &[("0", 2), ("1", 1), ("2", 1), ("3", 1)],
        );
        let red = split_terminals_subdivide(&inst, EdgeChoice::LexSmallest).unwrap();
        let r = red.reduced();
        let rnet = r.network();
        let chain = &red.sub_terminals()[&0];
        assert_eq!(chain.len(), 2);
        let id = |l: &str| rnet.node_by_label(l).unwrap();
        let e = |a: &str, b: &str| rnet.edge_between(id(a), id(b)).unwrap();
        let unsafe_edges = vec![
            e("0#1", "0#2"),
            e("0#2", "1"),
            e("1", "2"),
            e("0", "2"),
            e("0", "3"),
        ];
        let tree = tree_capacities(r, &unsafe_edges).unwrap();
        assert!(matches!(
            lift_tree_solution(&red, &tree),
            Err(ReductionError::ChainBroken { .. })
        ));
        let normalized = normalize_reduced_tree(&red, &tree);
        assert!(normalized.cost() <= tree.cost());
        let lifted = lift_tree_solution(&red, &normalized).unwrap();
        assert_eq!(lifted.cost(), normalized.cost());
    }

    #[test]
    fn normalize_keeps_good_trees_unchanged() {
        let inst = instance(
            &["1", "2", "3"],
            &[("1", "2", "1"), ("2", "3", "2"), ("1", "3", "3")],
            &[("1", 2), ("2", 1), ("3", 1)],
        );
        let red = split_terminals_subdivide(&inst, EdgeChoice::LexSmallest).unwrap();
        let opt = exhaustive_tree_search(red.reduced(), 1000).unwrap();
        let normalized = normalize_reduced_tree(&red, &opt);
        if lift_tree_solution(&red, &opt).is_ok() {
            assert_eq!(normalized.edges(), opt.edges());
        }
    }

    #[test]
    fn random_reduced_ring_trees_normalize_and_lift() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..40 {
            let n = rng.gen_range(3..6usize);
            let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
            let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
            let costs: Vec<String> = (0..n).map(|_| rng.gen_range(1..20).to_string()).collect();
            let stored: Vec<(String, String, String)> = (0..n)
                .map(|i| {
                    (
                        labels[i].clone(),
                        labels[(i + 1) % n].clone(),
                        costs[i].clone(),
                    )
                })
                .collect();
            let edges: Vec<(&str, &str, &str)> = stored
                .iter()
                .map(|(u, v, c)| (u.as_str(), v.as_str(), c.as_str()))
                .collect();
            let bounds: Vec<(&str, i64)> =
                refs.iter().map(|l| (*l, rng.gen_range(1..4i64))).collect();
            let inst = instance(&refs, &edges, &bounds);
            let red = split_terminals_subdivide(&inst, EdgeChoice::LexSmallest).unwrap();
            let r = red.reduced();
            assert!(r.network().is_ring());
            // Every tree of the reduced ring is the ring minus one edge.
            for skip in 0..r.network().edge_count() {
                let tree_edges: Vec<usize> = (0..r.network().edge_count())
                    .filter(|&e| e != skip)
                    .collect();
                let tree = tree_capacities(r, &tree_edges).unwrap();
                let normalized = normalize_reduced_tree(&red, &tree);
                assert!(normalized.cost() <= tree.cost());
                let lifted = lift_tree_solution(&red, &normalized).unwrap();
                assert_eq!(lifted.cost(), normalized.cost());
            }
        }
    }

    #[test]
    fn every_reduced_tree_normalizes_and_lifts() {
        // Exhaustive over all spanning trees of a few reduced general
        // graphs: the normalize/lift contract must hold for every tree, not
        // just the ones our searches produce.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        for case in 0..5 {
            let n = 4;
            let mut edge_list: Vec<(usize, usize)> = vec![(0, 1), (1, 2), (2, 3), (0, 3)];
            if case % 2 == 0 {
                edge_list.push((0, 2));
            }
            let labels: Vec<String> = (0..n).map(|i| i.to_string()).collect();
            let refs: Vec<&str> = labels.iter().map(|s| s.as_str()).collect();
            let costs: Vec<String> = edge_list
                .iter()
                .map(|_| rng.gen_range(1..20).to_string())
                .collect();
            let edges: Vec<(&str, &str, &str)> = edge_list
                .iter()
                .zip(&costs)
                .map(|(&(u, v), c)| (refs[u], refs[v], c.as_str()))
                .collect();
            let bounds: Vec<(&str, i64)> = refs
                .iter()
                .enumerate()
                .map(|(i, l)| (*l, if i == 0 { 3 } else { rng.gen_range(1..3) }))
                .collect();
            let inst = instance(&refs, &edges, &bounds);
            let red = split_terminals_subdivide(&inst, EdgeChoice::LexSmallest).unwrap();
            let r = red.reduced();
            let m = r.network().edge_count();
            let want = r.network().node_count() - 1;

            let mut trees = 0;
            for mask in 0..(1u32 << m) {
                if (mask.count_ones() as usize) != want {
                    continue;
                }
                let subset: Vec<usize> = (0..m).filter(|&e| mask & (1 << e) != 0).collect();
                let Ok(tree) = tree_capacities(r, &subset) else {
                    continue;
                };
                let normalized = normalize_reduced_tree(&red, &tree);
                assert!(normalized.cost() <= tree.cost());
                let lifted = lift_tree_solution(&red, &normalized).unwrap();
                assert_eq!(lifted.cost(), normalized.cost());
                trees += 1;
            }
            assert!(trees > 0);
        }
    }

    #[test]
    fn reduction_raw_round_trip() {
        let inst = instance(
            &["1", "2", "3"],
            &[("1", "2", "1"), ("2", "3", "2"), ("1", "3", "3")],
            &[("1", 2), ("2", 1), ("3", 1)],
        );
        let red = split_terminals_subdivide(&inst, EdgeChoice::LexSmallest).unwrap();
        let raw = red.to_raw();
        let json = serde_json::to_string(&raw).unwrap();
        let parsed: RawReduction = serde_json::from_str(&json).unwrap();
        let back = Reduction::from_raw(&parsed).unwrap();
        assert_eq!(back.reduced(), red.reduced());
        assert_eq!(back.original(), red.original());
        assert_eq!(back.sub_terminals(), red.sub_terminals());
    }
}
