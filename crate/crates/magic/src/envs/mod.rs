//! Ground-truth simulators and matching POMDP models for the evaluation
//! tasks. The model step function and the simulator are the same code path;
//! there is no sim-to-model gap in this artifact.

pub mod light_dark;
pub mod puck_push;
pub mod toy;

pub use light_dark::{LightDark, LightDarkParams, LightDarkState};
pub use puck_push::{PuckPush, PuckPushParams, PuckPushState};
pub use toy::ToyPomdp;

use crate::macro_actions::{MacroAction, MacroError, MacroSetParams, ParameterizationSpec};
use crate::planner::{ActionDecoder, RolloutPolicy};
use crate::pomdp::{Context, ParticleBelief, PomdpModel};

pub type TaskState<T> = <<T as PlanningTask>::M as PomdpModel>::State;
pub type TaskAction<T> = <<T as PlanningTask>::M as PomdpModel>::Action;

/// Everything the acting/learning loop needs from a task beyond the raw
/// POMDP model: macro-set construction for each method, the default rollout
/// policy, featurization for the networks, and episode bookkeeping rules.
pub trait PlanningTask: Send + Sync {
    type M: PomdpModel + ActionDecoder;

    fn model(&self) -> &Self::M;
    fn context(&self) -> &Context;
    fn parameterization(&self) -> &ParameterizationSpec;
    fn rollout_policy(&self) -> &dyn RolloutPolicy<Self::M>;
    fn step_limit(&self) -> usize;

    /// Decode generator output into the planning macro set.
    fn macros_from_phi(&self, phi: &MacroSetParams) -> Result<Vec<MacroAction>, MacroError>;
    /// Fixed baseline macro set.
    fn handcrafted_macros(&self) -> Vec<MacroAction>;
    /// Primitive action set as length-1 macros (plain primitive-action search).
    fn primitive_macros(&self) -> Vec<MacroAction>;

    /// Action executed unconditionally at a macro boundary (e.g. STOP once
    /// the belief mean is inside the goal), bypassing the planner.
    fn boundary_action(&self, belief: &ParticleBelief<TaskState<Self>>) -> Option<TaskAction<Self>>;
    /// Action force-executed when the step limit is reached mid-episode.
    fn forced_final_action(&self) -> Option<TaskAction<Self>>;
    /// Reward recorded when the limit passes without a forced action.
    fn exhaustion_penalty(&self) -> f64;

    fn state_dim(&self) -> usize;
    fn state_features(&self, state: &TaskState<Self>, out: &mut Vec<f64>);
    /// Distance between the belief mean and the true state, in the task's
    /// tracking metric.
    fn tracking_error(&self, belief: &ParticleBelief<TaskState<Self>>, truth: &TaskState<Self>) -> f64;
}
