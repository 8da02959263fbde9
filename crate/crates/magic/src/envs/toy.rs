//! Small random discrete POMDPs with dense transition/observation/reward
//! tables. These are enumerable, so exact filters and brute-force tree
//! evaluation are feasible — the reference points for the particle filter
//! and planner test oracles.

use crate::macro_actions::MacroAction;
use crate::planner::ActionDecoder;
use crate::pomdp::{PomdpModel, StepOutcome};
use crate::rng::{derive_seed, CounterStream, DrawStream};

#[derive(Debug, Clone)]
pub struct ToyPomdp {
    pub n_states: usize,
    pub n_actions: usize,
    pub n_obs: usize,
    /// p(s' | s, a), flattened [s][a][s'].
    pub transition: Vec<f64>,
    /// p(o | s', a), flattened [a][s'][o].
    pub observation: Vec<f64>,
    /// R(s, a), flattened [s][a].
    pub reward: Vec<f64>,
    pub init_dist: Vec<f64>,
    pub discount: f64,
}

impl ToyPomdp {
    /// Random dense model with up to the given table sizes (at least 2 states
    /// and 2 actions so the planning problem is non-trivial).
    pub fn random(seed: u64, max_states: usize, max_actions: usize, max_obs: usize) -> Self {
        let mut draws = CounterStream::new(derive_seed(seed, 0x544F_59), 0, 0);
        let n_states = 2 + (draws.uniform() * (max_states - 1) as f64) as usize % (max_states - 1);
        let n_actions = 2 + (draws.uniform() * (max_actions - 1) as f64) as usize % (max_actions - 1);
        let n_obs = 2 + (draws.uniform() * (max_obs - 1) as f64) as usize % (max_obs - 1);

        let mut rows = |rows: usize, cols: usize| -> Vec<f64> {
            let mut out = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let raw: Vec<f64> = (0..cols).map(|_| draws.uniform() + 0.05).collect();
                let total: f64 = raw.iter().sum();
                out.extend(raw.into_iter().map(|v| v / total));
            }
            out
        };
        let transition = rows(n_states * n_actions, n_states);
        let observation = rows(n_actions * n_states, n_obs);
        let reward: Vec<f64> = (0..n_states * n_actions).map(|_| draws.uniform() * 2.0 - 1.0).collect();
        let raw_init: Vec<f64> = (0..n_states).map(|_| draws.uniform() + 0.05).collect();
        let total: f64 = raw_init.iter().sum();
        let init_dist = raw_init.into_iter().map(|v| v / total).collect();

        Self { n_states, n_actions, n_obs, transition, observation, reward, init_dist, discount: 0.95 }
    }

    pub fn transition_prob(&self, s: usize, a: usize, s2: usize) -> f64 {
        self.transition[(s * self.n_actions + a) * self.n_states + s2]
    }

    pub fn observation_prob(&self, a: usize, s2: usize, o: usize) -> f64 {
        self.observation[(a * self.n_states + s2) * self.n_obs + o]
    }

    pub fn reward_at(&self, s: usize, a: usize) -> f64 {
        self.reward[s * self.n_actions + a]
    }

    /// The primitive action set as length-1 macro-actions.
    pub fn primitive_macros(&self) -> Vec<MacroAction> {
        (0..self.n_actions)
            .map(|a| MacroAction { actions: vec![vec![a as f64]] })
            .collect()
    }

    fn sample_row(row: &[f64], u: f64) -> usize {
        let mut cum = 0.0;
        for (i, p) in row.iter().enumerate() {
            cum += p;
            if u < cum {
                return i;
            }
        }
        row.len() - 1
    }
}

impl PomdpModel for ToyPomdp {
    type State = usize;
    type Action = usize;
    type Observation = usize;

    fn discount(&self) -> f64 {
        self.discount
    }

    fn reward_bounds(&self) -> (f64, f64) {
        (-1.0, 1.0)
    }

    fn max_step_reward(&self) -> f64 {
        self.reward.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn max_terminal_reward(&self) -> f64 {
        0.0
    }

    fn step(&self, state: &usize, action: &usize, draws: &mut dyn DrawStream) -> StepOutcome<usize, usize> {
        let t_row =
            &self.transition[(state * self.n_actions + action) * self.n_states..][..self.n_states];
        let next = Self::sample_row(t_row, draws.uniform());
        let o_row = &self.observation[(action * self.n_states + next) * self.n_obs..][..self.n_obs];
        let obs = Self::sample_row(o_row, draws.uniform());
        StepOutcome {
            next_state: next,
            observation: obs,
            reward: self.reward_at(*state, *action),
            terminal: false,
        }
    }

    fn observation_likelihood(&self, action: &usize, next_state: &usize, observation: &usize) -> f64 {
        self.observation_prob(*action, *next_state, *observation)
    }

    fn quantize_observation(&self, observation: &usize, _resolution: f64, out: &mut Vec<i64>) {
        out.push(*observation as i64);
    }

    fn sample_initial_state(&self, draws: &mut dyn DrawStream) -> usize {
        Self::sample_row(&self.init_dist, draws.uniform())
    }
}

impl ActionDecoder for ToyPomdp {
    fn decode_action(&self, action: &[f64]) -> usize {
        action[0].round() as usize
    }
}
