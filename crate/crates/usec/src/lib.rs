//! Uncoded-storage elastic computing: optimal min-max load assignment over
//! machines that replicate row blocks of a data matrix, task materialization
//! with straggler redundancy, and a deterministic simulator for elastic time
//! steps driving matrix-vector workloads such as power iteration.
//!
//! Loads and the optimal step time are exact rationals end to end; floats
//! appear only in reports and in the simulated numeric workload.

pub mod assignment;
pub mod error;
mod flow;
pub mod model;
pub mod optimizer;
pub mod placement;
pub mod runtime;
pub mod scenario;

pub use error::{Error, Result};
