//! The network–attribute co-evolution model.

pub mod cache;
pub mod choice;
pub mod cim;
pub mod deps;
pub mod effects;
pub mod joint;
pub mod likelihood;
pub mod params;
pub mod simulate;
pub mod spec;
pub mod state;

pub use cache::ChoiceCache;
pub use choice::{attribute_choice_probs, network_choice_probs, softmax, AttributeMove};
pub use cim::{attribute_cim, global_intensity, link_cim, variable_cim};
pub use deps::dependency_set;
pub use effects::{attribute_features, effect_value, feasible_moves, network_features};
pub use joint::{build_joint_generator, JointSpace, DEFAULT_STATE_CAP};
pub use likelihood::{factored_log_likelihood, trajectory_log_likelihood};
pub use params::{Model, ModelParams, Rates};
pub use simulate::{forward_sample, forward_sample_traced, SimulationTrace};
pub use spec::{AttributeDecl, EffectKind, EffectSpec, ModelSpec, Target};
pub use state::{NetworkState, StateRecord};
