//! Seeded discrete-event simulation of the protocol engines.
//!
//! [`run`] drives one scenario to quiescence under a schedule policy and an
//! adversary, recording a totally ordered [`Trace`]. [`explore`] enumerates
//! every delivery order of a small scenario instead.

pub mod adversary;
pub mod error;
pub mod explore;
pub mod run;
pub mod scenario;
pub mod trace;

pub use error::SimError;
pub use explore::{
    decisions_of, explore, explore_from, DecisionPoint, DecisionSet, Exploration, ExploreConfig, Outcome,
};
pub use run::{follow_up, initial_inputs, run, Envelope};
pub use scenario::{
    default_max_delay, load_scenario, parse_scenario, Pattern, Scenario, SchedulePolicy, ScriptRule, Strategy, Trigger,
};
pub use trace::{first_difference, scenario_of, Event, Invocation, Trace};
