//! Evidence-constrained importance sampling of co-evolution trajectories.

mod proposal;
mod estimate;

pub use estimate::{
    estimate_expectation, estimate_with_error, effective_sample_size, BatchDiagnostics, WeightedEstimate,
};
pub use proposal::{propose_batch, propose_trajectory, ProposalConfig, WeightedTrajectory};
