//! Library side of the experiment harness: experiment specification,
//! Monte Carlo sweeps, and the cross-module selftest. The `rsorth` binary is
//! a thin argument-parsing layer over these.

pub mod selftest;
pub mod spec;
pub mod sweep;

pub use selftest::{run_selftest, SelftestReport};
pub use spec::{ExperimentSpec, Overrides, SpecFile};
pub use sweep::{run_sweep, SweepSummary};
