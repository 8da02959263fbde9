//! Macro-action generator-critic learning and macro-action belief-tree
//! planning for POMDPs.
//!
//! The crate is organized around the planning/learning loop:
//!
//! * [`pomdp`] — model contract, determinized scenarios, particle filtering.
//! * [`macro_actions`] — parameter vectors Φ ↔ open-loop macro-action sets.
//! * [`planner`] — anytime macro-action belief-tree search (the L=1 special
//!   case is plain primitive-action search).
//! * [`envs`] — the Light-Dark and Puck-Push tasks plus discrete toys.
//! * [`neural`] — fixed-architecture critic/generator networks with
//!   hand-written reverse-mode gradients.
//! * [`learner`] — replay buffer, critic/generator/temperature updates, and
//!   the acting-learning loop.
//! * [`harness`] — run configuration, metrics, and the command entry points
//!   behind the CLI.

pub mod envs;
pub mod harness;
pub mod learner;
pub mod macro_actions;
pub mod neural;
pub mod planner;
pub mod pomdp;
pub mod rng;
