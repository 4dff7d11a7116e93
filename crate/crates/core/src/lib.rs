//! Energy-optimal short-packet downlink for two users with different latency
//! deadlines: finite-blocklength rate kernel, a concave rate surrogate, NOMA,
//! hybrid NOMA/TDMA and TDMA solvers, and a Monte-Carlo harness.

pub mod approx;
pub mod cli;
pub mod config;
pub mod error;
pub mod fbc;
pub mod hybrid;
pub mod noma;
pub mod output;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};
pub use fbc::FbcParams;
pub use hybrid::{HybridAllocation, HybridParams, TdmaAllocation};
pub use noma::NomaAllocation;
pub use scenario::{Energy, InfeasibleReason, ScenarioParams, SolveResult, User, UserSpec};
