//! Continuous-time Markov process primitives.

pub mod evidence;
pub mod expm;
pub mod intensity;
pub mod sampling;
pub mod stats;
pub mod trajectory;

pub use evidence::{validate_trajectory_against_evidence, Evidence, EvidenceItem};
pub use expm::{exact_transition_kernel, expm_metzler};
pub use intensity::IntensityMatrix;
pub use sampling::{
    sample_exponential, sample_truncated_exponential, exponential_from_uniform,
    truncated_exponential_from_uniform,
};
pub use stats::{collect_sufficient_stats, log_likelihood, LocalStats, LogLikelihood, SufficientStats};
pub use trajectory::{Segment, StateSpace, Trajectory, TrajectoryBuilder, Transition, VariableId};
