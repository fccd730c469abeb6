//! Energy-minimizing resource allocation for cooling-aware wireless-powered
//! multiuser edge computing.
//!
//! The access point powers its users wirelessly, each user splits its task
//! between local execution and offloading, and the edge server's cooling
//! energy is part of the objective. The solver alternates a dual
//! decomposition of the fixed-split problem with an update of the split.

#![no_std]
// Negated float comparisons are deliberate: they send NaN down the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod algorithm;
pub mod dual;
pub mod error;
pub mod lambertw;
pub mod load;
pub mod model;
pub mod oracle;
pub mod subproblems;

pub use algorithm::{run_baseline, run_joint, JointOptions, Scheme, Solution};
pub use dual::{solve_dual, DualOptions, DualSolution, DualTrace, LambdaRule};
pub use error::{Error, Infeasibility, Result};
pub use lambertw::{lambert_w0, W0Result};
pub use oracle::{grid_search, kkt_residuals, GridSpec, KktReport};
pub use model::{
    total_ap_energy, Allocation, CoolingParams, EnergyReport, SystemConfig, UserAllocation, UserParams,
};
pub use subproblems::DualVars;
