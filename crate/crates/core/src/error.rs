use alloc::boxed::Box;
use core::fmt;

use crate::dual::DualSolution;

/// Which bound made an instance (or a fixed load split) infeasible.
#[derive(Debug, Clone, PartialEq)]
pub enum Infeasibility {
    /// The latency-tight local frequency exceeds the chip limit.
    LocalFrequency { user: usize, required: f64, limit: f64 },
    /// Harvesting enough energy needs more AP transmit power than available.
    PowerBudget { required: f64, limit: f64 },
    /// The offloaded cycles cannot fit into the server capacity.
    ServerCapacity { required: f64, limit: f64 },
    /// No load split in the admissible box yields a feasible inner problem.
    NoFeasibleLoad,
    /// The oracle grid contains no feasible point.
    NoGridPoint,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    InvalidParameter { name: &'static str, value: f64 },
    DimensionMismatch { expected: usize, found: usize },
    InfeasibleLocalLoad { user: Option<usize>, required: f64, limit: f64 },
    DegenerateOffload { user: Option<usize> },
    Domain { x: f64 },
    LatencyExhausted { user: Option<usize> },
    NonConvergence { solver: &'static str, iterations: usize },
    /// Projected subgradient ascent hit its iteration cap; carries the best iterate.
    DualNonConvergence(Box<DualSolution>),
    Infeasible(Infeasibility),
}

impl Error {
    /// Attach a user index to a per-user error raised without one.
    pub(crate) fn for_user(self, index: usize) -> Self {
        match self {
            Error::InfeasibleLocalLoad { user: None, required, limit } => {
                Error::InfeasibleLocalLoad { user: Some(index), required, limit }
            }
            Error::DegenerateOffload { user: None } => Error::DegenerateOffload { user: Some(index) },
            Error::LatencyExhausted { user: None } => Error::LatencyExhausted { user: Some(index) },
            other => other,
        }
    }
}

struct UserTag(Option<usize>);

impl fmt::Display for UserTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            Some(i) => write!(f, " (user {i})"),
            None => Ok(()),
        }
    }
}

impl fmt::Display for Infeasibility {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Infeasibility::LocalFrequency { user, required, limit } => write!(
                f,
                "user {user} needs local frequency {required:e} Hz above limit {limit:e} Hz"
            ),
            Infeasibility::PowerBudget { required, limit } => {
                write!(f, "required WPT power {required:e} W exceeds budget {limit:e} W")
            }
            Infeasibility::ServerCapacity { required, limit } => {
                write!(f, "required server frequency {required:e} Hz exceeds capacity {limit:e} Hz")
            }
            Infeasibility::NoFeasibleLoad => f.write_str("no admissible load split is feasible"),
            Infeasibility::NoGridPoint => f.write_str("no feasible grid point"),
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidParameter { name, value } => write!(f, "invalid parameter {name} = {value}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected} users, found {found}")
            }
            Error::InfeasibleLocalLoad { user, required, limit } => write!(
                f,
                "local load infeasible{}: needs {required:e} Hz, limit {limit:e} Hz",
                UserTag(*user)
            ),
            Error::DegenerateOffload { user } => {
                write!(f, "offloading with zero offload time{}", UserTag(*user))
            }
            Error::Domain { x } => write!(f, "argument {x} outside the principal-branch domain"),
            Error::LatencyExhausted { user } => {
                write!(f, "offload time leaves no edge execution time{}", UserTag(*user))
            }
            Error::NonConvergence { solver, iterations } => {
                write!(f, "{solver} did not converge in {iterations} iterations")
            }
            Error::DualNonConvergence(best) => write!(
                f,
                "dual ascent did not converge in {} iterations (gap {:e})",
                best.trace.iterations(),
                best.trace.final_gap
            ),
            Error::Infeasible(why) => write!(f, "infeasible: {why}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
