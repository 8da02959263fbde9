//! Puck-Push: a disc robot pushes a disc puck to a goal region past two
//! visually occluding strips. The puck passively slides along the robot's
//! circumference while pushed; the contact angle evolves as θ' = θ·e^{μd}.

use super::{PlanningTask, TaskAction, TaskState};
use crate::macro_actions::{
    decode_macro_set, handcrafted_set, MacroAction, MacroError, MacroSetParams, ParameterizationSpec,
};
use crate::planner::{ActionDecoder, RolloutPolicy};
use crate::pomdp::{Context, ParticleBelief, PomdpModel, StepOutcome};
use crate::rng::{derive_seed, CounterStream, DrawStream};

#[derive(Debug, Clone)]
pub struct PuckPushParams {
    pub workspace: [f64; 2],
    pub robot_radius: f64,
    pub puck_radius: f64,
    pub step_length: f64,
    /// Sliding rate coefficient μ.
    pub mu: f64,
    pub motion_noise_std: f64,
    pub puck_noise_std: f64,
    pub obs_noise_std: f64,
    pub omit_prob: f64,
    /// Center x of the two occluding strips.
    pub occlusion_centers: [f64; 2],
    pub occlusion_width: f64,
    pub goal_radius: f64,
    pub robot_start: [f64; 2],
    pub puck_start: [f64; 2],
    pub max_steps: usize,
    pub particle_count: usize,
    pub discount: f64,
    pub macro_count: usize,
    pub macro_len: usize,
    pub handcrafted_len: usize,
}

impl Default for PuckPushParams {
    fn default() -> Self {
        Self {
            workspace: [1.0, 0.6],
            robot_radius: 0.04,
            puck_radius: 0.03,
            step_length: 0.02,
            mu: 2.0,
            motion_noise_std: 0.002,
            puck_noise_std: 0.002,
            obs_noise_std: 0.005,
            omit_prob: 0.1,
            occlusion_centers: [0.35, 0.55],
            occlusion_width: 0.08,
            goal_radius: 0.05,
            robot_start: [0.15, 0.3],
            puck_start: [0.23, 0.3],
            max_steps: 100,
            particle_count: 100,
            discount: 0.98,
            macro_count: 8,
            macro_len: 5,
            handcrafted_len: 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PuckPushState {
    pub robot: [f64; 2],
    pub puck: [f64; 2],
    /// Contact angle in the robot's motion frame; meaningful only while
    /// `in_contact`.
    pub theta: f64,
    pub in_contact: bool,
}

/// Camera observation: occasionally omitted entirely; the puck component is
/// null while the puck crosses an occluding strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PuckPushObs {
    Omitted,
    Seen { robot: [f64; 2], puck: Option<[f64; 2]> },
}

#[derive(Debug, Clone)]
pub struct PuckPush {
    pub params: PuckPushParams,
    pub goal: [f64; 2],
    context: Context,
    spec: ParameterizationSpec,
}

/// Sliding model: contact angle after pushing distance `d` at slide rate μ.
pub fn slide_angle(theta: f64, mu: f64, d: f64) -> f64 {
    theta * (mu * d).exp()
}

fn dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

impl PuckPush {
    pub fn new(params: PuckPushParams, goal: [f64; 2]) -> Self {
        let context = Context(vec![goal[0], goal[1], params.goal_radius]);
        let spec = ParameterizationSpec::bezier(params.macro_count, params.macro_len, params.step_length);
        Self { params, goal, context, spec }
    }

    pub fn occluded(&self, x: f64) -> bool {
        self.params
            .occlusion_centers
            .iter()
            .any(|&c| (x - c).abs() <= self.params.occlusion_width / 2.0)
    }

    fn out_of_bounds(&self, pos: [f64; 2], radius: f64) -> bool {
        pos[0] < radius
            || pos[1] < radius
            || pos[0] > self.params.workspace[0] - radius
            || pos[1] > self.params.workspace[1] - radius
    }

    fn gaussian_kernel(d: f64, sigma: f64) -> f64 {
        (-0.5 * (d / sigma).powi(2)).exp()
    }
}

impl PomdpModel for PuckPush {
    type State = PuckPushState;
    type Action = [f64; 2];
    type Observation = PuckPushObs;

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
        state: &PuckPushState,
        action: &[f64; 2],
        draws: &mut dyn DrawStream,
    ) -> StepOutcome<PuckPushState, PuckPushObs> {
        let p = &self.params;
        let delta = [
            p.step_length * action[0] + p.motion_noise_std * draws.normal(),
            p.step_length * action[1] + p.motion_noise_std * draws.normal(),
        ];
        let moved = delta[0].hypot(delta[1]);
        let robot = [state.robot[0] + delta[0], state.robot[1] + delta[1]];
        let contact_dist = p.robot_radius + p.puck_radius;

        let mut puck = state.puck;
        let mut theta = 0.0;
        let mut in_contact = false;
        if dist(robot, puck) < contact_dist && moved > 1e-12 {
            let heading = [delta[0] / moved, delta[1] / moved];
            let theta0 = if state.in_contact {
                state.theta
            } else {
                let u = [puck[0] - robot[0], puck[1] - robot[1]];
                let norm = u[0].hypot(u[1]).max(1e-12);
                let ux = (u[0] * heading[0] + u[1] * heading[1]) / norm;
                let uy = (heading[0] * u[1] - heading[1] * u[0]) / norm;
                uy.atan2(ux)
            };
            theta = slide_angle(theta0, p.mu, moved);
            // Displace the puck to remain tangent at the evolved angle,
            // measured from the motion direction.
            let (sin, cos) = theta.sin_cos();
            let dir = [
                heading[0] * cos - heading[1] * sin,
                heading[0] * sin + heading[1] * cos,
            ];
            puck = [robot[0] + contact_dist * dir[0], robot[1] + contact_dist * dir[1]];
            puck[0] += p.puck_noise_std * draws.normal();
            puck[1] += p.puck_noise_std * draws.normal();
            // Past the side of the robot the puck is no longer pushed.
            in_contact = theta.abs() < std::f64::consts::FRAC_PI_2;
            if !in_contact {
                theta = 0.0;
            }
        }
        // Noise must not leave the discs overlapping.
        let gap = dist(robot, puck);
        if gap < contact_dist {
            let scale = contact_dist / gap.max(1e-12);
            puck = [
                robot[0] + (puck[0] - robot[0]) * scale,
                robot[1] + (puck[1] - robot[1]) * scale,
            ];
        }

        let next = PuckPushState { robot, puck, theta, in_contact };
        let (reward, terminal) = if dist(puck, self.goal) <= p.goal_radius {
            (100.0, true)
        } else if self.out_of_bounds(robot, p.robot_radius) || self.out_of_bounds(puck, p.puck_radius) {
            (-100.0, true)
        } else {
            (-0.1, false)
        };

        let observation = if draws.uniform() < p.omit_prob {
            PuckPushObs::Omitted
        } else {
            let robot_obs = [
                robot[0] + p.obs_noise_std * draws.normal(),
                robot[1] + p.obs_noise_std * draws.normal(),
            ];
            let puck_obs = if self.occluded(puck[0]) {
                None
            } else {
                Some([
                    puck[0] + p.obs_noise_std * draws.normal(),
                    puck[1] + p.obs_noise_std * draws.normal(),
                ])
            };
            PuckPushObs::Seen { robot: robot_obs, puck: puck_obs }
        };

        StepOutcome { next_state: next, observation, reward, terminal }
    }

    fn observation_likelihood(
        &self,
        _action: &[f64; 2],
        next_state: &PuckPushState,
        observation: &PuckPushObs,
    ) -> f64 {
        match observation {
            PuckPushObs::Omitted => 1.0,
            PuckPushObs::Seen { robot, puck } => {
                let sigma = self.params.obs_noise_std;
                let robot_like = Self::gaussian_kernel(dist(*robot, next_state.robot), sigma);
                let puck_like = match puck {
                    Some(z) => {
                        if self.occluded(next_state.puck[0]) {
                            0.0
                        } else {
                            Self::gaussian_kernel(dist(*z, next_state.puck), sigma)
                        }
                    }
                    None => {
                        if self.occluded(next_state.puck[0]) {
                            1.0
                        } else {
                            0.0
                        }
                    }
                };
                robot_like * puck_like
            }
        }
    }

    fn quantize_observation(&self, observation: &PuckPushObs, resolution: f64, out: &mut Vec<i64>) {
        match observation {
            PuckPushObs::Omitted => out.push(-2),
            PuckPushObs::Seen { robot, puck } => {
                out.push(1);
                out.push((robot[0] / resolution).floor() as i64);
                out.push((robot[1] / resolution).floor() as i64);
                match puck {
                    None => out.push(-1),
                    Some(z) => {
                        out.push(2);
                        out.push((z[0] / resolution).floor() as i64);
                        out.push((z[1] / resolution).floor() as i64);
                    }
                }
            }
        }
    }

    fn sample_initial_state(&self, draws: &mut dyn DrawStream) -> PuckPushState {
        let jitter = self.params.obs_noise_std;
        PuckPushState {
            robot: [
                self.params.robot_start[0] + jitter * draws.normal(),
                self.params.robot_start[1] + jitter * draws.normal(),
            ],
            puck: [
                self.params.puck_start[0] + jitter * draws.normal(),
                self.params.puck_start[1] + jitter * draws.normal(),
            ],
            theta: 0.0,
            in_contact: false,
        }
    }
}

impl ActionDecoder for PuckPush {
    fn decode_action(&self, action: &[f64]) -> [f64; 2] {
        [action[0], action[1]]
    }
}

/// Default policy: drive the robot at the puck (the pushing contact then
/// carries it forward).
pub struct PuckPushRollout;

impl RolloutPolicy<PuckPush> for PuckPushRollout {
    fn choose(&self, model: &PuckPush, states: &[PuckPushState], macros: &[MacroAction], _depth: usize) -> usize {
        let n = states.len() as f64;
        let robot = states.iter().fold([0.0, 0.0], |m, s| [m[0] + s.robot[0] / n, m[1] + s.robot[1] / n]);
        let puck = states.iter().fold([0.0, 0.0], |m, s| [m[0] + s.puck[0] / n, m[1] + s.puck[1] / n]);
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, m) in macros.iter().enumerate() {
            let disp = m.actions.iter().fold([0.0, 0.0], |d, a| {
                [d[0] + model.params.step_length * a[0], d[1] + model.params.step_length * a[1]]
            });
            let d = dist([robot[0] + disp[0], robot[1] + disp[1]], puck);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

impl PlanningTask for PuckPush {
    type M = PuckPush;

    fn model(&self) -> &PuckPush {
        self
    }

    fn context(&self) -> &Context {
        &self.context
    }

    fn parameterization(&self) -> &ParameterizationSpec {
        &self.spec
    }

    fn rollout_policy(&self) -> &dyn RolloutPolicy<PuckPush> {
        &PuckPushRollout
    }

    fn step_limit(&self) -> usize {
        self.params.max_steps
    }

    fn macros_from_phi(&self, phi: &MacroSetParams) -> Result<Vec<MacroAction>, MacroError> {
        decode_macro_set(phi, &self.spec)
    }

    fn handcrafted_macros(&self) -> Vec<MacroAction> {
        let mut macros = handcrafted_set("puck-push").expect("known task");
        for m in &mut macros {
            m.actions.truncate(self.params.handcrafted_len);
        }
        macros
    }

    fn primitive_macros(&self) -> Vec<MacroAction> {
        (0..8)
            .map(|i| {
                let heading = std::f64::consts::TAU * i as f64 / 8.0;
                MacroAction { actions: vec![vec![heading.cos(), heading.sin()]] }
            })
            .collect()
    }

    fn boundary_action(&self, _belief: &ParticleBelief<TaskState<Self>>) -> Option<TaskAction<Self>> {
        None
    }

    fn forced_final_action(&self) -> Option<TaskAction<Self>> {
        None
    }

    fn exhaustion_penalty(&self) -> f64 {
        -100.0
    }

    fn state_dim(&self) -> usize {
        5
    }

    fn state_features(&self, state: &PuckPushState, out: &mut Vec<f64>) {
        out.push(state.robot[0]);
        out.push(state.robot[1]);
        out.push(state.puck[0]);
        out.push(state.puck[1]);
        out.push(if state.in_contact { state.theta } else { 0.0 });
    }

    fn tracking_error(&self, belief: &ParticleBelief<TaskState<Self>>, truth: &TaskState<Self>) -> f64 {
        let mean = belief.fold_weighted([0.0, 0.0], |m, s, w| [m[0] + w * s.puck[0], m[1] + w * s.puck[1]]);
        dist(mean, truth.puck)
    }
}

const INIT_TAG: u64 = 0x5050_494E; // "PPIN"

/// Fixed start poses, randomly generated goal, tight initial belief around
/// the known start.
pub fn init_puck_push(
    params: &PuckPushParams,
    seed: u64,
) -> (PuckPush, PuckPushState, ParticleBelief<PuckPushState>) {
    let mut draws = CounterStream::new(derive_seed(seed, INIT_TAG), 0, 0);
    let goal = [0.75 + 0.2 * draws.uniform(), 0.1 + 0.4 * draws.uniform()];
    let model = PuckPush::new(params.clone(), goal);
    let truth = model.sample_initial_state(&mut draws);
    let particles = (0..params.particle_count)
        .map(|_| (model.sample_initial_state(&mut draws), 1.0))
        .collect();
    let belief = ParticleBelief::from_weighted(particles).expect("non-empty cloud");
    (model, truth, belief)
}
