#![forbid(unsafe_code)]

//! Exact solvers and a verification harness for hose-model virtual private
//! network design and pyramidal routing on small networks.
//!
//! Everything certificate-bearing runs over exact rationals. The crate
//! provides tree-solution construction and costing, the unit-bound terminal
//! splitting reduction, the constructive optimal routing solver on rings,
//! demand-witness lower bounds, and budgeted brute-force oracles that
//! cross-check each construction.

pub mod certificates;
pub mod dot;
pub mod feasibility;
pub mod lab;
pub mod model;
pub mod pyramidal;
pub mod rational;
pub mod reduction;
pub mod tree;

pub use model::{DemandSet, Instance, Network, NodeId, Path, VpnSolution};
pub use rational::Rational;
