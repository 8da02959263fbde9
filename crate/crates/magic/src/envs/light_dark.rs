//! Light-Dark: a mobile robot in a 2-D world must stop precisely at a goal
//! in the dark; its position is observable only inside a vertical light
//! strip, so the optimal policy localizes in the light before goal-seeking.
//!
//! The geometry is not dictated by the task description, so every constant
//! lives in [`LightDarkParams`] and is surfaced in run configs.

use super::{PlanningTask, TaskAction, TaskState};
use crate::macro_actions::{
    decode_macro_set, handcrafted_set, MacroAction, MacroError, MacroSetParams, ParameterizationSpec,
};
use crate::planner::{ActionDecoder, RolloutPolicy};
use crate::pomdp::{Context, ParticleBelief, PomdpModel, StepOutcome};
use crate::rng::{derive_seed, CounterStream, DrawStream};

#[derive(Debug, Clone)]
pub struct LightDarkParams {
    pub step_length: f64,
    pub goal_radius: f64,
    pub light_width: f64,
    /// Std of the Gaussian noise added to every move.
    pub motion_noise_std: f64,
    /// Std of the initial belief cloud (and of the true-state draw).
    pub init_belief_std: f64,
    /// Filter-likelihood kernel width for in-light readings; support is
    /// truncated at 3σ.
    pub obs_kernel_std: f64,
    pub max_steps: usize,
    /// Required horizontal separation between the initial robot mean and the
    /// light strip center.
    pub light_separation: f64,
    pub particle_count: usize,
    pub discount: f64,
    /// Macro count / length for the learned Bezier parameterization.
    pub macro_count: usize,
    pub macro_len: usize,
    pub handcrafted_len: usize,
}

impl Default for LightDarkParams {
    fn default() -> Self {
        Self {
            step_length: 0.05,
            goal_radius: 0.04,
            light_width: 0.1,
            motion_noise_std: 0.01,
            init_belief_std: 0.05,
            obs_kernel_std: 0.02,
            max_steps: 60,
            light_separation: 0.3,
            particle_count: 100,
            discount: 0.98,
            macro_count: 8,
            macro_len: 8,
            handcrafted_len: 6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightDarkState {
    pub pos: [f64; 2],
    pub stopped: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LightDarkAction {
    pub dir: [f64; 2],
    pub stop: bool,
}

impl LightDarkAction {
    pub fn stop() -> Self {
        Self { dir: [0.0, 0.0], stop: true }
    }
}

/// Exact position reading inside the light strip, nothing outside it.
pub type LightDarkObs = Option<[f64; 2]>;

#[derive(Debug, Clone)]
pub struct LightDark {
    pub params: LightDarkParams,
    pub goal: [f64; 2],
    pub light_center_x: f64,
    pub init_mean: [f64; 2],
    context: Context,
    spec: ParameterizationSpec,
}

impl LightDark {
    pub fn new(params: LightDarkParams, goal: [f64; 2], light_center_x: f64, init_mean: [f64; 2]) -> Self {
        let context = Context(vec![goal[0], goal[1], light_center_x, params.light_width]);
        let spec = ParameterizationSpec::bezier(params.macro_count, params.macro_len, params.step_length);
        Self { params, goal, light_center_x, init_mean, context, spec }
    }

    pub fn in_light(&self, x: f64) -> bool {
        (x - self.light_center_x).abs() <= self.params.light_width / 2.0
    }

    pub fn in_goal(&self, pos: [f64; 2]) -> bool {
        dist(pos, self.goal) <= self.params.goal_radius
    }

    fn stop_macro() -> MacroAction {
        MacroAction { actions: vec![vec![0.0, 0.0, 1.0]] }
    }
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl PomdpModel for LightDark {
    type State = LightDarkState;
    type Action = LightDarkAction;
    type Observation = LightDarkObs;

    fn discount(&self) -> f64 {
        self.params.discount
    }

    fn reward_bounds(&self) -> (f64, f64) {
        (-100.0, 100.0)
    }

    fn max_step_reward(&self) -> f64 {
        -0.1
    }

    fn max_terminal_reward(&self) -> f64 {
        100.0
    }

    fn step(
        &self,
        state: &LightDarkState,
        action: &LightDarkAction,
        draws: &mut dyn DrawStream,
    ) -> StepOutcome<LightDarkState, LightDarkObs> {
        if action.stop {
            let reward = if self.in_goal(state.pos) { 100.0 } else { -100.0 };
            return StepOutcome {
                next_state: LightDarkState { pos: state.pos, stopped: true },
                observation: None,
                reward,
                terminal: true,
            };
        }
        let noise = [draws.normal(), draws.normal()];
        let pos = [
            state.pos[0] + self.params.step_length * action.dir[0] + self.params.motion_noise_std * noise[0],
            state.pos[1] + self.params.step_length * action.dir[1] + self.params.motion_noise_std * noise[1],
        ];
        let observation = if self.in_light(pos[0]) { Some(pos) } else { None };
        StepOutcome {
            next_state: LightDarkState { pos, stopped: false },
            observation,
            reward: -0.1,
            terminal: false,
        }
    }

    fn observation_likelihood(
        &self,
        _action: &LightDarkAction,
        next_state: &LightDarkState,
        observation: &LightDarkObs,
    ) -> f64 {
        let lit = self.in_light(next_state.pos[0]);
        match observation {
            None => {
                if lit {
                    0.0
                } else {
                    1.0
                }
            }
            Some(z) => {
                if !lit {
                    return 0.0;
                }
                let sigma = self.params.obs_kernel_std;
                let d = dist(*z, next_state.pos);
                if d > 3.0 * sigma {
                    0.0
                } else {
                    (-0.5 * (d / sigma).powi(2)).exp()
                }
            }
        }
    }

    fn quantize_observation(&self, observation: &LightDarkObs, resolution: f64, out: &mut Vec<i64>) {
        match observation {
            None => out.push(-1),
            Some(z) => {
                out.push(1);
                out.push((z[0] / resolution).floor() as i64);
                out.push((z[1] / resolution).floor() as i64);
            }
        }
    }

    fn sample_initial_state(&self, draws: &mut dyn DrawStream) -> LightDarkState {
        LightDarkState {
            pos: [
                self.init_mean[0] + self.params.init_belief_std * draws.normal(),
                self.init_mean[1] + self.params.init_belief_std * draws.normal(),
            ],
            stopped: false,
        }
    }
}

impl ActionDecoder for LightDark {
    fn decode_action(&self, action: &[f64]) -> LightDarkAction {
        LightDarkAction {
            dir: [action[0], action[1]],
            stop: action.get(2).is_some_and(|&s| s > 0.5),
        }
    }
}

/// Node-coherent default policy: STOP once the aggregate position is inside
/// the goal, otherwise take the macro whose endpoint lands closest to it.
pub struct LightDarkRollout;

fn macro_is_stop(m: &MacroAction) -> bool {
    m.actions.len() == 1 && m.actions[0].get(2).is_some_and(|&s| s > 0.5)
}

fn macro_displacement(m: &MacroAction, step: f64) -> [f64; 2] {
    let mut d = [0.0, 0.0];
    for a in &m.actions {
        if a.get(2).is_some_and(|&s| s > 0.5) {
            break;
        }
        d = [d[0] + step * a[0], d[1] + step * a[1]];
    }
    d
}

impl RolloutPolicy<LightDark> for LightDarkRollout {
    fn choose(&self, model: &LightDark, states: &[LightDarkState], macros: &[MacroAction], _depth: usize) -> usize {
        let n = states.len() as f64;
        let mean = states.iter().fold([0.0, 0.0], |m, s| [m[0] + s.pos[0] / n, m[1] + s.pos[1] / n]);
        if model.in_goal(mean) {
            if let Some(i) = macros.iter().position(macro_is_stop) {
                return i;
            }
        }
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, m) in macros.iter().enumerate() {
            if macro_is_stop(m) {
                continue;
            }
            let disp = macro_displacement(m, model.params.step_length);
            let d = dist([mean[0] + disp[0], mean[1] + disp[1]], model.goal);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

impl PlanningTask for LightDark {
    type M = LightDark;

    fn model(&self) -> &LightDark {
        self
    }

    fn context(&self) -> &Context {
        &self.context
    }

    fn parameterization(&self) -> &ParameterizationSpec {
        &self.spec
    }

    fn rollout_policy(&self) -> &dyn RolloutPolicy<LightDark> {
        &LightDarkRollout
    }

    fn step_limit(&self) -> usize {
        self.params.max_steps
    }

    fn macros_from_phi(&self, phi: &MacroSetParams) -> Result<Vec<MacroAction>, MacroError> {
        let mut macros = decode_macro_set(phi, &self.spec)?;
        macros.push(Self::stop_macro());
        Ok(macros)
    }

    fn handcrafted_macros(&self) -> Vec<MacroAction> {
        let mut macros = handcrafted_set("light-dark").expect("known task");
        for m in &mut macros {
            m.actions.truncate(self.params.handcrafted_len);
        }
        macros.push(Self::stop_macro());
        macros
    }

    fn primitive_macros(&self) -> Vec<MacroAction> {
        let mut macros: Vec<MacroAction> = (0..8)
            .map(|i| {
                let heading = std::f64::consts::TAU * i as f64 / 8.0;
                MacroAction { actions: vec![vec![heading.cos(), heading.sin()]] }
            })
            .collect();
        macros.push(Self::stop_macro());
        macros
    }

    fn boundary_action(&self, belief: &ParticleBelief<TaskState<Self>>) -> Option<TaskAction<Self>> {
        let mean = belief.fold_weighted([0.0, 0.0], |m, s, w| [m[0] + w * s.pos[0], m[1] + w * s.pos[1]]);
        if self.in_goal(mean) {
            Some(LightDarkAction::stop())
        } else {
            None
        }
    }

    fn forced_final_action(&self) -> Option<TaskAction<Self>> {
        Some(LightDarkAction::stop())
    }

    fn exhaustion_penalty(&self) -> f64 {
        -100.0
    }

    fn state_dim(&self) -> usize {
        2
    }

    fn state_features(&self, state: &LightDarkState, out: &mut Vec<f64>) {
        out.push(state.pos[0]);
        out.push(state.pos[1]);
    }

    fn tracking_error(&self, belief: &ParticleBelief<TaskState<Self>>, truth: &TaskState<Self>) -> f64 {
        let mean = belief.fold_weighted([0.0, 0.0], |m, s, w| [m[0] + w * s.pos[0], m[1] + w * s.pos[1]]);
        dist(mean, truth.pos)
    }
}

const INIT_TAG: u64 = 0x4C44_494E; // "LDIN"

/// Randomized episode initialization: goal and light drawn per episode, with
/// the light constrained far from the initial robot distribution.
pub fn init_light_dark(
    params: &LightDarkParams,
    seed: u64,
) -> (LightDark, LightDarkState, ParticleBelief<LightDarkState>) {
    let mut draws = CounterStream::new(derive_seed(seed, INIT_TAG), 0, 0);
    let goal = [0.1 + 0.4 * draws.uniform(), 0.1 + 0.8 * draws.uniform()];
    let light_center_x = 0.6 + 0.35 * draws.uniform();
    let init_mean = [0.05 + 0.25 * draws.uniform(), 0.05 + 0.25 * draws.uniform()];
    let model = LightDark::new(params.clone(), goal, light_center_x, init_mean);
    let truth = model.sample_initial_state(&mut draws);
    let particles = (0..params.particle_count)
        .map(|_| (model.sample_initial_state(&mut draws), 1.0))
        .collect();
    let belief = ParticleBelief::from_weighted(particles).expect("non-empty cloud");
    (model, truth, belief)
}
