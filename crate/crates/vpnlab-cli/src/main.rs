//! Command-line surface for the solvers and checkers.
//!
//! stdout carries machine-readable JSON (or DOT) only; diagnostics go to
//! stderr. Exit codes: 0 success, 1 domain violation found (infeasibility,
//! oracle mismatch, conjecture violation), 2 usage or validation error,
//! 3 enumeration budget exceeded.

use clap::{Parser, Subcommand, ValueEnum};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use vpnlab::certificates;
use vpnlab::dot::export_dot;
use vpnlab::feasibility;
use vpnlab::lab::{self, ExperimentConfig, Family};
use vpnlab::model::{RawInstance, RawVpnSolution, VpnSolution};
use vpnlab::pyramidal::{self, PrError, PrInstance, PrPathSystem, RawPrPathSystem};
use vpnlab::reduction::{self, EdgeChoice, RawReduction, Reduction};
use vpnlab::tree::{self, Certification, RawTreeSolution, TreeError, TreeSolution};
use vpnlab::Instance;

const DEFAULT_BUDGET: u64 = 2_000_000;

#[derive(Parser)]
#[command(
    name = "vpnlab",
    version,
    about = "Exact hose-model VPN design and pyramidal routing tools"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Dot,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Variant {
    Star,
    Subdivide,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Ring,
    Complete,
    RandomConnected,
}

#[derive(Subcommand)]
enum Command {
    /// Minimum-cost tree solution (shortest-path-tree search per root).
    SolveTree {
        #[arg(long)]
        instance: PathBuf,
        /// Cross-check against the exhaustive search and certify the result.
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
    },
    /// Provably optimal tree solution on a ring network.
    SolveRing {
        #[arg(long)]
        instance: PathBuf,
        /// Emit the optimal routing path system for this source terminal
        /// instead of the tree solution (unit bounds required).
        #[arg(long)]
        source: Option<String>,
        #[arg(long, value_enum, default_value = "json")]
        format: OutputFormat,
    },
    /// Evaluate the exact cost of a routing path system.
    PrCost {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Globally optimal routing by exhaustive enumeration.
    PrBrute {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        source: String,
        /// Allow trails (edge-simple walks) instead of simple paths.
        #[arg(long)]
        allow_trails: bool,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Split terminals with bound >= 2 into unit-bound sub-terminals.
    Reduce {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "subdivide")]
        variant: Variant,
    },
    /// Normalize a reduced tree solution and lift it to the original
    /// instance at identical cost.
    Lift {
        #[arg(long)]
        reduction: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Check a solution against exact worst-case loads on every edge.
    CheckFeasible {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Demand-witness lower bound certificate for a feasible solution.
    LowerBound {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: PathBuf,
    },
    /// Brute-force the reservation, routing, and tree optima and report
    /// their relations.
    VerifyChain {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
    },
    /// Batch conjecture checks over generated instances (JSON lines plus a
    /// trailing summary).
    Experiment {
        /// JSON config file; inline flags override nothing when present.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "ring")]
        family: FamilyArg,
        #[arg(long, default_value_t = 3)]
        size_min: usize,
        #[arg(long, default_value_t = 6)]
        size_max: usize,
        #[arg(long, default_value_t = 1)]
        cost_min: i64,
        #[arg(long, default_value_t = 100)]
        cost_max: i64,
        #[arg(long, default_value_t = 1)]
        bound_min: u64,
        #[arg(long, default_value_t = 1)]
        bound_max: u64,
        #[arg(long, default_value_t = 10)]
        seeds: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        budget: u64,
        #[arg(long, default_value_t = 3)]
        claim_samples: u64,
    },
    /// Deterministic DOT export; tree edges bold with capacity labels.
    ExportDot {
        #[arg(long)]
        instance: PathBuf,
        #[arg(long)]
        solution: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Domain(String),
    Budget(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
            Failure::Budget(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Domain(m) | Failure::Budget(m) => m,
        }
    }
}

fn usage(msg: impl ToString) -> Failure {
    Failure::Usage(msg.to_string())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read {}: {}", path.display(), e)))?;
    serde_json::from_str(&text)
        .map_err(|e| usage(format!("cannot parse {}: {}", path.display(), e)))
}

fn load_instance(path: &Path) -> Result<Instance, Failure> {
    let raw: RawInstance = read_json(path)?;
    Instance::try_from(raw).map_err(usage)
}

fn tree_error(e: TreeError) -> Failure {
    match e {
        TreeError::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
        other => usage(other),
    }
}

fn pr_error(e: PrError) -> Failure {
    match e {
        PrError::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
        other => usage(other),
    }
}

fn emit<T: serde::Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string(value).expect("serializable payload")
    );
}

/// Reduce to unit bounds with the ring-preserving variant; identity when the
/// bounds already are units.
fn reduce_for_solving(instance: &Instance) -> Result<Reduction, Failure> {
    reduction::split_terminals_subdivide(instance, EdgeChoice::LexSmallest).map_err(usage)
}

fn cmd_solve_tree(
    instance_path: &Path,
    oracle: bool,
    budget: u64,
    format: OutputFormat,
) -> Result<ExitCode, Failure> {
    let instance = load_instance(instance_path)?;
    let heuristic = tree::optimal_tree_search(&instance);
    if !oracle {
        return Ok(print_tree(&instance, &heuristic, format));
    }
    let exact = tree::exhaustive_tree_search(&instance, budget).map_err(tree_error)?;
    if exact.cost() == heuristic.cost() {
        let certified = heuristic.with_certification(Certification::Exhaustive);
        Ok(print_tree(&instance, &certified, format))
    } else {
        eprintln!(
            "heuristic search missed the optimum: {} vs exhaustive {}",
            heuristic.cost(),
            exact.cost()
        );
        print_tree(&instance, &exact, format);
        Ok(ExitCode::from(1))
    }
}

fn print_tree(instance: &Instance, tree: &TreeSolution, format: OutputFormat) -> ExitCode {
    match format {
        OutputFormat::Json => emit(&tree.to_raw(instance)),
        OutputFormat::Dot => print!("{}", export_dot(instance, Some(tree))),
    }
    ExitCode::SUCCESS
}

fn cmd_solve_ring(
    instance_path: &Path,
    source: Option<&str>,
    format: OutputFormat,
) -> Result<ExitCode, Failure> {
    let instance = load_instance(instance_path)?;
    if !instance.network().is_ring() {
        return Err(usage("network is not a ring"));
    }

    if let Some(label) = source {
        let node = instance
            .network()
            .node_by_label(label)
            .ok_or_else(|| usage(format!("unknown node {label:?}")))?;
        let pr = PrInstance::new(&instance, node).map_err(pr_error)?;
        let system = pyramidal::ring_pr_optimal(&pr).map_err(pr_error)?;
        match format {
            OutputFormat::Json => emit(&system.to_raw(&instance)),
            OutputFormat::Dot => {
                let tree = pyramidal::pr_tree_to_tree(&pr, &system).map_err(pr_error)?;
                print!("{}", export_dot(&instance, Some(&tree)));
            }
        }
        return Ok(ExitCode::SUCCESS);
    }

    let red = reduce_for_solving(&instance)?;
    let work = red.reduced().clone();
    let source_node = work.terminals()[0];
    let pr = PrInstance::new(&work, source_node).map_err(pr_error)?;
    let system = pyramidal::ring_pr_optimal(&pr).map_err(pr_error)?;
    let reduced_tree = pyramidal::pr_tree_to_tree(&pr, &system).map_err(pr_error)?;
    let normalized = reduction::normalize_reduced_tree(&red, &reduced_tree);
    let lifted = reduction::lift_tree_solution(&red, &normalized).map_err(usage)?;
    // Optimal by the ring construction; splitting preserves the optimum.
    let certified = lifted.with_certification(Certification::Exhaustive);
    Ok(print_tree(&instance, &certified, format))
}

fn cmd_pr_cost(instance_path: &Path, solution_path: &Path) -> Result<ExitCode, Failure> {
    let instance = load_instance(instance_path)?;
    let raw: RawPrPathSystem = read_json(solution_path)?;
    let system = PrPathSystem::from_raw(&instance, &raw).map_err(pr_error)?;
    emit(&system.to_raw(&instance));
    Ok(ExitCode::SUCCESS)
}

fn cmd_pr_brute(
    instance_path: &Path,
    source: &str,
    allow_trails: bool,
    budget: u64,
) -> Result<ExitCode, Failure> {
    let instance = load_instance(instance_path)?;
    let node = instance
        .network()
        .node_by_label(source)
        .ok_or_else(|| usage(format!("unknown node {source:?}")))?;
    let pr = PrInstance::new(&instance, node).map_err(pr_error)?;
    let system = pyramidal::pr_bruteforce(&pr, allow_trails, budget).map_err(pr_error)?;
    emit(&system.to_raw(&instance));
    Ok(ExitCode::SUCCESS)
}

fn cmd_reduce(instance_path: &Path, variant: Variant) -> Result<ExitCode, Failure> {
    let instance = load_instance(instance_path)?;
    let red = match variant {
        Variant::Star => reduction::split_terminals_star(&instance),
        Variant::Subdivide => {
            reduction::split_terminals_subdivide(&instance, EdgeChoice::LexSmallest)
                .map_err(usage)?
        }
    };
    emit(&red.to_raw());
    Ok(ExitCode::SUCCESS)
}

fn cmd_lift(reduction_path: &Path, solution_path: &Path) -> Result<ExitCode, Failure> {
    let raw_red: RawReduction = read_json(reduction_path)?;
    let red = Reduction::from_raw(&raw_red).map_err(usage)?;
    let raw_tree: RawTreeSolution = read_json(solution_path)?;
    let tree = TreeSolution::from_raw(red.reduced(), &raw_tree).map_err(tree_error)?;
    let normalized = reduction::normalize_reduced_tree(&red, &tree);
    let lifted = reduction::lift_tree_solution(&red, &normalized).map_err(usage)?;
    emit(&lifted.to_raw(red.original()));
    Ok(ExitCode::SUCCESS)
}

fn cmd_check_feasible(instance_path: &Path, solution_path: &Path) -> Result<ExitCode, Failure> {
    let instance = load_instance(instance_path)?;
    let raw: RawVpnSolution = read_json(solution_path)?;
    let solution = VpnSolution::from_raw(&instance, &raw).map_err(usage)?;
    let report = feasibility::check_feasible(&instance, &solution);
    emit(&report.to_raw(&instance));
    if report.feasible {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!(
            "{} edge(s) violate the worst-case load",
            report.violations.len()
        );
        Ok(ExitCode::from(1))
    }
}

fn cmd_lower_bound(instance_path: &Path, solution_path: &Path) -> Result<ExitCode, Failure> {
    let instance = load_instance(instance_path)?;
    let raw: RawVpnSolution = read_json(solution_path)?;
    let solution = VpnSolution::from_raw(&instance, &raw).map_err(usage)?;
    let cert = certificates::pr_lower_bound(&instance, &solution).map_err(|e| match e {
        certificates::CertificateError::InfeasibleInput(_) => Failure::Domain(e.to_string()),
        certificates::CertificateError::NonUnitBounds => usage(e),
        other => usage(other),
    })?;
    emit(&cert.to_raw(&instance));
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify_chain(instance_path: &Path, budget: u64) -> Result<ExitCode, Failure> {
    let instance = load_instance(instance_path)?;
    let red = reduce_for_solving(&instance)?;
    if !red.is_identity() {
        eprintln!("bounds split into units before the chain check");
    }
    let work = red.reduced();
    let report = certificates::verify_equivalence_chain(work, budget).map_err(|e| match e {
        certificates::CertificateError::BudgetExceeded(inner) => Failure::Budget(inner.to_string()),
        other => Failure::Usage(other.to_string()),
    })?;
    emit(&report.to_raw(work));
    if report.svpnd_tree_attained && report.pr_tree_attained_all {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("an optimum is not attained by a tree; see the report payload");
        Ok(ExitCode::from(1))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    config_path: Option<&Path>,
    family: FamilyArg,
    size_min: usize,
    size_max: usize,
    cost_min: i64,
    cost_max: i64,
    bound_min: u64,
    bound_max: u64,
    seeds: u64,
    seed: u64,
    budget: u64,
    claim_samples: u64,
) -> Result<ExitCode, Failure> {
    let config = match config_path {
        Some(path) => read_json::<ExperimentConfig>(path)?,
        None => ExperimentConfig {
            family: match family {
                FamilyArg::Ring => Family::Ring,
                FamilyArg::Complete => Family::Complete,
                FamilyArg::RandomConnected => Family::RandomConnected,
            },
            size_min,
            size_max,
            cost_min,
            cost_max,
            bound_min,
            bound_max,
            seeds,
            base_seed: seed,
            system_budget: budget,
            tree_budget: budget,
            claim_samples,
        },
    };
    let summary = lab::run_experiment(&config, emit).map_err(|e| match e {
        lab::LabError::ProvenViolated(_) => Failure::Domain(e.to_string()),
        lab::LabError::BudgetExceeded { .. } => Failure::Budget(e.to_string()),
        other => usage(other),
    })?;
    emit(&summary);
    let violations = summary.reservation_counterexamples + summary.routing_counterexamples;
    if violations > 0 {
        eprintln!("{} conjecture counterexample(s) recorded", violations);
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn cmd_export_dot(instance_path: &Path, solution_path: Option<&Path>) -> Result<ExitCode, Failure> {
    let instance = load_instance(instance_path)?;
    let tree = match solution_path {
        Some(path) => {
            let raw: RawTreeSolution = read_json(path)?;
            Some(TreeSolution::from_raw(&instance, &raw).map_err(tree_error)?)
        }
        None => None,
    };
    print!("{}", export_dot(&instance, tree.as_ref()));
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    match cli.command {
        Command::SolveTree {
            instance,
            oracle,
            budget,
            format,
        } => cmd_solve_tree(&instance, oracle, budget, format),
        Command::SolveRing {
            instance,
            source,
            format,
        } => cmd_solve_ring(&instance, source.as_deref(), format),
        Command::PrCost { instance, solution } => cmd_pr_cost(&instance, &solution),
        Command::PrBrute {
            instance,
            source,
            allow_trails,
            budget,
        } => cmd_pr_brute(&instance, &source, allow_trails, budget),
        Command::Reduce { instance, variant } => cmd_reduce(&instance, variant),
        Command::Lift {
            reduction,
            solution,
        } => cmd_lift(&reduction, &solution),
        Command::CheckFeasible { instance, solution } => cmd_check_feasible(&instance, &solution),
        Command::LowerBound { instance, solution } => cmd_lower_bound(&instance, &solution),
        Command::VerifyChain { instance, budget } => cmd_verify_chain(&instance, budget),
        Command::Experiment {
            config,
            family,
            size_min,
            size_max,
            cost_min,
            cost_max,
            bound_min,
            bound_max,
            seeds,
            seed,
            budget,
            claim_samples,
        } => cmd_experiment(
            config.as_deref(),
            family,
            size_min,
            size_max,
            cost_min,
            cost_max,
            bound_min,
            bound_max,
            seeds,
            seed,
            budget,
            claim_samples,
        ),
        Command::ExportDot { instance, solution } => cmd_export_dot(&instance, solution.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(failure) => {
            eprintln!("error: {}", failure.message());
            ExitCode::from(failure.code())
        }
    }
}
