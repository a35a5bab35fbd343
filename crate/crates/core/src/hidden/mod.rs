//! Hidden network dynamics observed only through directed events.

mod events;
mod mh;

pub use events::{
    event_log_likelihood, initial_consistent_trajectory, observation_stats, pair_index, simulate_events,
    simulate_events_given, Event, EventStream, ObservationParams,
};
pub use mh::{mh_log_ratio, mh_run, mh_step, posterior_link_marginals, MHConfig, MHRun, MHState};
