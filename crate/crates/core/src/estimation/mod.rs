//! Parameter learning from snapshots, evidence, complete trajectories and
//! event streams.

pub mod data;
pub mod hidden;
pub mod mcem;
pub mod mom;
pub mod objective;
pub mod optimize;

pub use data::{EvidenceSequence, FitResult, IterationRecord, Phase, Snapshots, TrainingData};
pub use hidden::{
    estimate_observation_params, heldout_loglik, hidden_mcem_fit, initial_observation_params, HiddenEMConfig, HiddenFit,
};
pub use mcem::{initial_params, mcem_fit, EMConfig};
pub use mom::{mom_fit, mom_statistics, MoMConfig};
pub use objective::{expected_complete_loglik_and_grad, CompleteDataStats, DecisionRecord};
pub use optimize::{maximize, CgOptions, CgResult};
