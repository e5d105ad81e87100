//! Lower-bound certificates for feasible solutions.
//!
//! For a feasible solution with unit bounds, each edge e admits a valid
//! demand set supported on the pairs routed through e that forces load
//! (1/k) * sum_i y(e, P_i) through it, where P_i is the solution's own star
//! of paths rooted at terminal i. Summed over edges, this shows the cheapest
//! per-terminal routing cost is a lower bound on the reservation cost; the
//! bundle of per-edge witnesses makes the bound independently checkable.

use crate::feasibility;
use crate::lab;
use crate::model::{is_valid_demand_set, DemandSet, Instance, NodeId, VpnSolution};
use crate::pyramidal::{pr_bruteforce, PrInstance};
use crate::rational::Rational;
use crate::tree::{exhaustive_tree_search, TreeError};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum CertificateError {
    #[error("bounds must all be 1; split terminals first")]
    NonUnitBounds,
    #[error("solution is infeasible on {0} edges; certificates require feasible input")]
    InfeasibleInput(usize),
    #[error("edge index {0} out of range")]
    UnknownEdge(usize),
    #[error("enumeration budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("invalid input: {0}")]
    Invalid(String),
}

/// Per-terminal path counts through one edge: n[i] = |{j : e in P_ij}|.
fn edge_counts(instance: &Instance, solution: &VpnSolution, edge: usize) -> BTreeMap<NodeId, u32> {
    let mut counts: BTreeMap<NodeId, u32> = instance.terminals().iter().map(|&t| (t, 0)).collect();
    for (&(i, j), path) in solution.paths() {
        if path.contains_edge(edge) {
            *counts.get_mut(&i).unwrap() += 1;
            *counts.get_mut(&j).unwrap() += 1;
        }
    }
    counts
}

fn y_of(n: u32, k: u32) -> u32 {
    n.min(k - n)
}

/// The demand set d_ij = (1/k) (y_i/n_i + y_j/n_j) on pairs routed through
/// the probed edge, zero elsewhere. Valid by construction: each row sums to
/// at most 1.
pub fn demand_witness(
    instance: &Instance,
    solution: &VpnSolution,
    probe_edge: usize,
) -> Result<DemandSet, CertificateError> {
    if !instance.unit_bounds() {
        return Err(CertificateError::NonUnitBounds);
    }
    if probe_edge >= instance.network().edge_count() {
        return Err(CertificateError::UnknownEdge(probe_edge));
    }
    let k = instance.k() as u32;
    let counts = edge_counts(instance, solution, probe_edge);
    let ratio = |t: NodeId| {
        let n = counts[&t];
        // A pair routed through the edge puts the edge on both endpoint
        // stars, so n >= 1 whenever this is evaluated.
        assert!(n >= 1, "pair through edge implies positive count");
        Rational::from_u64(y_of(n, k) as u64) / Rational::from_u64(n as u64)
    };
    let mut witness = DemandSet::new();
    let per_k = Rational::ratio(1, k as i64);
    for (&(i, j), path) in solution.paths() {
        if path.contains_edge(probe_edge) {
            witness.set(i, j, &per_k * &(ratio(i) + ratio(j)));
        }
    }
    Ok(witness)
}

/// Row-sum validity of a witness. Always true for witnesses built by
/// `demand_witness`; a false return signals an implementation bug.
pub fn verify_claim1(instance: &Instance, witness: &DemandSet) -> bool {
    is_valid_demand_set(instance, witness).unwrap_or(false)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Claim2Report {
    /// Installed capacity u(e).
    pub lhs: Rational,
    /// (1/k) * sum_i y(e, P_i).
    pub rhs: Rational,
    pub holds: bool,
}

/// Compare the installed capacity of an edge against the averaged y-load the
/// witnesses force through it. Holds on every feasible solution.
pub fn verify_claim2(
    instance: &Instance,
    solution: &VpnSolution,
    probe_edge: usize,
) -> Result<Claim2Report, CertificateError> {
    if !instance.unit_bounds() {
        return Err(CertificateError::NonUnitBounds);
    }
    if probe_edge >= instance.network().edge_count() {
        return Err(CertificateError::UnknownEdge(probe_edge));
    }
    let report = feasibility::check_feasible(instance, solution);
    if !report.feasible {
        return Err(CertificateError::InfeasibleInput(report.violations.len()));
    }
    let k = instance.k() as u32;
    let counts = edge_counts(instance, solution, probe_edge);
    let total: u64 = counts.values().map(|&n| y_of(n, k) as u64).sum();
    let rhs = Rational::from_u64(total) / Rational::from_u64(k as u64);
    let lhs = solution.capacity(probe_edge).clone();
    let holds = lhs >= rhs;
    Ok(Claim2Report { lhs, rhs, holds })
}

/// A certified lower bound on the cost of a feasible solution, with the
/// per-edge demand witnesses that establish it.
#[derive(Debug, Clone)]
pub struct LowerBoundCertificate {
    pub solution_cost: Rational,
    pub per_terminal_pr_costs: BTreeMap<NodeId, Rational>,
    pub witness_demands: BTreeMap<usize, DemandSet>,
    pub bound: Rational,
    pub argmin_terminal: NodeId,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawLowerBoundCertificate {
    pub solution_cost: String,
    pub bound: String,
    pub argmin_terminal: String,
    pub per_terminal_pr_costs: BTreeMap<String, String>,
    pub witness_demands: BTreeMap<String, BTreeMap<String, String>>,
}

impl LowerBoundCertificate {
    pub fn to_raw(&self, instance: &Instance) -> RawLowerBoundCertificate {
        let net = instance.network();
        RawLowerBoundCertificate {
            solution_cost: self.solution_cost.to_string(),
            bound: self.bound.to_string(),
            argmin_terminal: net.label(self.argmin_terminal).to_string(),
            per_terminal_pr_costs: self
                .per_terminal_pr_costs
                .iter()
                .map(|(&t, c)| (net.label(t).to_string(), c.to_string()))
                .collect(),
            witness_demands: self
                .witness_demands
                .iter()
                .map(|(&e, w)| {
                    let (u, v) = net.endpoints(e);
                    (instance.pair_key(u, v), w.to_raw(instance))
                })
                .collect(),
        }
    }
}

/// Witness-backed lower bound: routing costs of the solution's own path
/// stars, minimized over terminals. Requires a feasible unit-bound solution.
pub fn pr_lower_bound(
    instance: &Instance,
    solution: &VpnSolution,
) -> Result<LowerBoundCertificate, CertificateError> {
    if !instance.unit_bounds() {
        return Err(CertificateError::NonUnitBounds);
    }
    let report = feasibility::check_feasible(instance, solution);
    if !report.feasible {
        return Err(CertificateError::InfeasibleInput(report.violations.len()));
    }
    let net = instance.network();
    let k = instance.k() as u32;

    let mut per_terminal: BTreeMap<NodeId, Rational> = instance
        .terminals()
        .iter()
        .map(|&t| (t, Rational::zero()))
        .collect();
    for edge in 0..net.edge_count() {
        let counts = edge_counts(instance, solution, edge);
        for (&t, &n) in &counts {
            let y = y_of(n, k);
            if y > 0 {
                *per_terminal.get_mut(&t).unwrap() +=
                    &(net.cost(edge) * &Rational::from_u64(y as u64));
            }
        }
    }

    let (argmin_terminal, bound) = per_terminal
        .iter()
        .min_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)))
        .map(|(&t, c)| (t, c.clone()))
        .unwrap();
    let solution_cost = solution.cost(instance);

    // Averaging dominates the minimum, and feasibility forces the average
    // under the solution cost; both are theorems, so violations are bugs.
    let total: Rational = per_terminal.values().sum();
    let average = total / Rational::from_u64(k as u64);
    assert!(average >= bound, "average below minimum");
    assert!(
        bound <= solution_cost,
        "lower bound {} exceeds solution cost {}",
        bound,
        solution_cost
    );

    let mut witness_demands = BTreeMap::new();
    for edge in 0..net.edge_count() {
        witness_demands.insert(edge, demand_witness(instance, solution, edge)?);
    }

    Ok(LowerBoundCertificate {
        solution_cost,
        per_terminal_pr_costs: per_terminal,
        witness_demands,
        bound,
        argmin_terminal,
    })
}

/// Exhaustively computed relations between the three optima on one instance.
#[derive(Debug, Clone)]
pub struct ChainReport {
    pub svpnd_cost: Rational,
    pub tree_cost: Rational,
    pub min_pr_cost: Rational,
    pub per_source_pr: BTreeMap<NodeId, Rational>,
    /// Whether the cheapest reservation is attained by a tree solution.
    pub svpnd_tree_attained: bool,
    /// Whether the routing optimum is attained by a tree for every source.
    pub per_source_tree_attained: BTreeMap<NodeId, bool>,
    pub pr_tree_attained_all: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawChainReport {
    pub svpnd_cost: String,
    pub tree_cost: String,
    pub min_pr_cost: String,
    pub per_source_pr: BTreeMap<String, String>,
    pub svpnd_tree_attained: bool,
    pub per_source_tree_attained: BTreeMap<String, bool>,
    pub pr_tree_attained_all: bool,
}

impl ChainReport {
    pub fn to_raw(&self, instance: &Instance) -> RawChainReport {
        let net = instance.network();
        RawChainReport {
            svpnd_cost: self.svpnd_cost.to_string(),
            tree_cost: self.tree_cost.to_string(),
            min_pr_cost: self.min_pr_cost.to_string(),
            per_source_pr: self
                .per_source_pr
                .iter()
                .map(|(&t, c)| (net.label(t).to_string(), c.to_string()))
                .collect(),
            svpnd_tree_attained: self.svpnd_tree_attained,
            per_source_tree_attained: self
                .per_source_tree_attained
                .iter()
                .map(|(&t, &b)| (net.label(t).to_string(), b))
                .collect(),
            pr_tree_attained_all: self.pr_tree_attained_all,
        }
    }
}

/// Brute-force the reservation optimum, the per-source routing optima, and
/// the tree optimum, and assert the proven chain
/// min-PR <= sVPND <= tree between them.
pub fn verify_equivalence_chain(
    instance: &Instance,
    budget: u64,
) -> Result<ChainReport, CertificateError> {
    if !instance.unit_bounds() {
        return Err(CertificateError::NonUnitBounds);
    }
    let tree = exhaustive_tree_search(instance, budget).map_err(|e| match e {
        TreeError::BudgetExceeded { .. } => CertificateError::BudgetExceeded(e.to_string()),
        other => CertificateError::Invalid(other.to_string()),
    })?;
    let tree_cost = tree.cost().clone();

    let svpnd = lab::bruteforce_svpnd(instance, budget).map_err(|e| match e {
        lab::LabError::BudgetExceeded { .. } => CertificateError::BudgetExceeded(e.to_string()),
        other => CertificateError::Invalid(other.to_string()),
    })?;
    let svpnd_cost = svpnd.cost(instance);

    let mut per_source_pr = BTreeMap::new();
    let mut per_source_tree_attained = BTreeMap::new();
    for &source in instance.terminals() {
        let pr = PrInstance::new(instance, source)
            .map_err(|e| CertificateError::Invalid(e.to_string()))?;
        let best = pr_bruteforce(&pr, false, budget).map_err(|e| match e {
            crate::pyramidal::PrError::BudgetExceeded { .. } => {
                CertificateError::BudgetExceeded(e.to_string())
            }
            other => CertificateError::Invalid(other.to_string()),
        })?;
        let cost = best.cost().clone();
        // A tree induces a candidate system, so the optimum never exceeds the
        // tree cost; equality means a tree attains it.
        assert!(
            cost <= tree_cost,
            "routing optimum above tree cost: {} > {}",
            cost,
            tree_cost
        );
        per_source_tree_attained.insert(source, cost == tree_cost);
        per_source_pr.insert(source, cost);
    }
    let min_pr_cost = per_source_pr.values().min().unwrap().clone();

    assert!(
        min_pr_cost <= svpnd_cost,
        "routing lower bound above reservation optimum"
    );
    assert!(
        svpnd_cost <= tree_cost,
        "reservation optimum above tree optimum"
    );

    let pr_tree_attained_all = per_source_tree_attained.values().all(|&b| b);
    Ok(ChainReport {
        svpnd_tree_attained: svpnd_cost == tree_cost,
        svpnd_cost,
        tree_cost,
        min_pr_cost,
        per_source_pr,
        per_source_tree_attained,
        pr_tree_attained_all,
    })
}
