//! POMDP model contract, deterministic scenarios, and particle-filter
//! belief tracking.
//!
//! A model is a black-box simulative step function plus an observation
//! likelihood. Everything stochastic is driven through [`DrawStream`], so
//! a (state, action, stream position) triple always reproduces the same
//! outcome. That property is what lets the planner determinize the future
//! into scenarios.

use crate::rng::{derive_seed, CounterStream, DrawStream};
use thiserror::Error;

/// Episode-fixed environment parameters known to the agent
/// (goal, light position, obstacle layout, ...). Fixed dimension per task.
#[derive(Debug, Clone, PartialEq)]
pub struct Context(pub Vec<f64>);

impl Context {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Result of one simulative step.
#[derive(Debug, Clone)]
pub struct StepOutcome<S, O> {
    pub next_state: S,
    pub observation: O,
    pub reward: f64,
    pub terminal: bool,
}

/// Generic POMDP model contract shared by planner, environments, and learner.
///
/// The same step function serves both as the planner's simulative model and
/// as the ground-truth simulator; there is no sim-to-model gap in this
/// artifact.
pub trait PomdpModel {
    type State: Clone + Send + Sync;
    type Action: Clone + Send + Sync;
    type Observation: Clone + Send + Sync;

    fn discount(&self) -> f64;

    /// Declared bounds on every reward the model can emit.
    fn reward_bounds(&self) -> (f64, f64);

    /// Largest reward obtainable on a non-terminating step.
    fn max_step_reward(&self) -> f64;

    /// Largest reward obtainable on a terminating step.
    fn max_terminal_reward(&self) -> f64;

    /// Simulative step; deterministic given the stream position.
    fn step(
        &self,
        state: &Self::State,
        action: &Self::Action,
        draws: &mut dyn DrawStream,
    ) -> StepOutcome<Self::State, Self::Observation>;

    /// p(o | s', a); nonnegative and finite for all inputs.
    fn observation_likelihood(
        &self,
        action: &Self::Action,
        next_state: &Self::State,
        observation: &Self::Observation,
    ) -> f64;

    /// Quantize an observation into integer tokens at the given resolution.
    /// Null observations must map to tokens distinct from any real reading.
    fn quantize_observation(&self, observation: &Self::Observation, resolution: f64, out: &mut Vec<i64>);

    /// Draw an initial state from the episode's initial distribution.
    /// The model instance is already conditioned on its [`Context`].
    fn sample_initial_state(&self, draws: &mut dyn DrawStream) -> Self::State;
}

/// A sampled initial state plus a deterministic random-number stream that
/// fixes all future stochastic outcomes for this sample.
#[derive(Debug, Clone)]
pub struct Scenario<S> {
    pub initial_state: S,
    pub seed: u64,
    pub index: u64,
}

impl<S> Scenario<S> {
    /// Stream consumed when stepping this scenario at primitive depth `depth`.
    /// Keyed by (seed, index, depth) so the tree can consume variates out of
    /// order and replays are exact.
    pub fn stream_at_depth(&self, depth: usize) -> CounterStream {
        CounterStream::new(self.seed, self.index, depth as u64)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BeliefError {
    #[error("belief must contain at least one particle")]
    Empty,
    #[error("particle weights must be nonnegative and finite with positive total")]
    BadWeights,
    #[error("all particles have zero observation likelihood")]
    TotalWeightZero,
}

/// Weighted particle set approximating the belief.
#[derive(Debug, Clone)]
pub struct ParticleBelief<S> {
    particles: Vec<(S, f64)>,
}

impl<S: Clone> ParticleBelief<S> {
    /// Build from weighted particles, normalizing weights to sum to one.
    pub fn from_weighted(particles: Vec<(S, f64)>) -> Result<Self, BeliefError> {
        if particles.is_empty() {
            return Err(BeliefError::Empty);
        }
        let total: f64 = particles.iter().map(|(_, w)| *w).sum();
        if !(total.is_finite() && total > 0.0) || particles.iter().any(|(_, w)| *w < 0.0 || !w.is_finite()) {
            return Err(BeliefError::BadWeights);
        }
        let particles = particles.into_iter().map(|(s, w)| (s, w / total)).collect();
        Ok(Self { particles })
    }

    /// Uniform weights over the given states.
    pub fn from_states(states: Vec<S>) -> Result<Self, BeliefError> {
        let n = states.len();
        Self::from_weighted(states.into_iter().map(|s| (s, 1.0 / n as f64)).collect())
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn particles(&self) -> &[(S, f64)] {
        &self.particles
    }

    pub fn fold_weighted<T>(&self, init: T, mut f: impl FnMut(T, &S, f64) -> T) -> T {
        self.particles.iter().fold(init, |acc, (s, w)| f(acc, s, *w))
    }

    /// Effective sample size 1 / Σ wᵢ².
    pub fn effective_sample_size(&self) -> f64 {
        1.0 / self.particles.iter().map(|(_, w)| w * w).sum::<f64>()
    }

    /// Index of the particle selected by CDF inversion at u ∈ [0, 1).
    fn pick(&self, u: f64) -> usize {
        let mut cum = 0.0;
        for (i, (_, w)) in self.particles.iter().enumerate() {
            cum += w;
            if u < cum {
                return i;
            }
        }
        self.particles.len() - 1
    }

    /// Systematic (low-variance) resampling to `count` uniform-weight
    /// particles, deterministic given the offset draw.
    pub fn resample_systematic(&self, count: usize, offset: f64) -> Self {
        let mut out = Vec::with_capacity(count);
        let step = 1.0 / count as f64;
        let mut cum = 0.0;
        let mut i = 0;
        for k in 0..count {
            let target = (offset + k as f64) * step;
            while cum + self.particles[i].1 < target && i + 1 < self.particles.len() {
                cum += self.particles[i].1;
                i += 1;
            }
            out.push((self.particles[i].0.clone(), step));
        }
        Self { particles: out }
    }
}

const LANE_SCENARIO_PICK: u64 = 0x5343_454E; // "SCEN"
const LANE_RESAMPLE: u64 = 0x5253_4D50; // "RSMP"

/// Sample `count` determinized scenarios from the belief.
///
/// Initial states are drawn proportionally to particle weights; each
/// scenario's stream is seeded from `(seed, index)` so the result is
/// bit-identical across calls.
pub fn sample_scenarios<S: Clone>(
    belief: &ParticleBelief<S>,
    count: usize,
    seed: u64,
) -> Vec<Scenario<S>> {
    assert!(count >= 1, "scenario count must be positive");
    let pick_seed = derive_seed(seed, LANE_SCENARIO_PICK);
    (0..count)
        .map(|i| {
            let u = CounterStream::new(pick_seed, i as u64, 0).uniform();
            Scenario {
                initial_state: belief.particles[belief.pick(u)].0.clone(),
                seed,
                index: i as u64,
            }
        })
        .collect()
}

/// Result of a belief update, flagging whether the degenerate-update
/// fallback (motion-only, uniform weights) was taken.
#[derive(Debug, Clone)]
pub struct BeliefUpdate<S> {
    pub belief: ParticleBelief<S>,
    pub degenerate_fallback: bool,
    pub resampled: bool,
}

/// Sequential-importance-resampling update. Errors when every particle has
/// zero likelihood; see [`belief_update`] for the recovering variant.
pub fn try_belief_update<M: PomdpModel>(
    model: &M,
    belief: &ParticleBelief<M::State>,
    action: &M::Action,
    observation: &M::Observation,
    seed: u64,
) -> Result<BeliefUpdate<M::State>, BeliefError> {
    let (propagated, weighted) = propagate(model, belief, action, observation, seed);
    let total: f64 = weighted.iter().map(|(_, w)| *w).sum();
    if !(total.is_finite() && total > 0.0) {
        let _ = propagated;
        return Err(BeliefError::TotalWeightZero);
    }
    Ok(finish_update(ParticleBelief {
        particles: weighted.into_iter().map(|(s, w)| (s, w / total)).collect(),
    }, seed, false))
}

/// Belief update with the degenerate-update policy: when all particles have
/// zero likelihood, fall back to motion-only propagation with uniform
/// weights and log a warning.
pub fn belief_update<M: PomdpModel>(
    model: &M,
    belief: &ParticleBelief<M::State>,
    action: &M::Action,
    observation: &M::Observation,
    seed: u64,
) -> BeliefUpdate<M::State> {
    let (propagated, weighted) = propagate(model, belief, action, observation, seed);
    let total: f64 = weighted.iter().map(|(_, w)| *w).sum();
    if total.is_finite() && total > 0.0 {
        finish_update(ParticleBelief {
            particles: weighted.into_iter().map(|(s, w)| (s, w / total)).collect(),
        }, seed, false)
    } else {
        log::warn!("belief update degenerate: all particle likelihoods zero; keeping motion-only propagation");
        let n = propagated.len();
        let uniform = propagated.into_iter().map(|s| (s, 1.0 / n as f64)).collect();
        let mut update = finish_update(ParticleBelief { particles: uniform }, seed, true);
        update.degenerate_fallback = true;
        update
    }
}

fn propagate<M: PomdpModel>(
    model: &M,
    belief: &ParticleBelief<M::State>,
    action: &M::Action,
    observation: &M::Observation,
    seed: u64,
) -> (Vec<M::State>, Vec<(M::State, f64)>) {
    let mut propagated = Vec::with_capacity(belief.len());
    let mut weighted = Vec::with_capacity(belief.len());
    for (i, (state, w)) in belief.particles.iter().enumerate() {
        let mut stream = CounterStream::new(seed, i as u64, 0);
        let outcome = model.step(state, action, &mut stream);
        let like = model.observation_likelihood(action, &outcome.next_state, observation);
        debug_assert!(like >= 0.0 && like.is_finite(), "likelihood must be nonnegative and finite");
        propagated.push(outcome.next_state.clone());
        weighted.push((outcome.next_state, w * like));
    }
    (propagated, weighted)
}

fn finish_update<S: Clone>(belief: ParticleBelief<S>, seed: u64, degenerate: bool) -> BeliefUpdate<S> {
    let n = belief.len();
    let resample = belief.effective_sample_size() < n as f64 / 2.0;
    let belief = if resample {
        let offset = CounterStream::new(derive_seed(seed, LANE_RESAMPLE), 0, 0).uniform();
        belief.resample_systematic(n, offset)
    } else {
        belief
    };
    BeliefUpdate { belief, degenerate_fallback: degenerate, resampled: resample }
}

/// Discounted return Σₜ γᵗ rₜ.
pub fn episode_return(rewards: &[f64], gamma: f64) -> f64 {
    assert!(gamma > 0.0 && gamma <= 1.0, "discount must lie in (0, 1]");
    let mut acc = 0.0;
    let mut g = 1.0;
    for r in rewards {
        acc += g * r;
        g *= gamma;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    /// 1-D shift model: position moves by the action amount, no noise;
    /// observation is ignored (likelihood 1).
    struct Shift;

    impl PomdpModel for Shift {
        type State = f64;
        type Action = f64;
        type Observation = ();

        fn discount(&self) -> f64 {
            0.95
        }
        fn reward_bounds(&self) -> (f64, f64) {
            (-1.0, 1.0)
        }
        fn max_step_reward(&self) -> f64 {
            0.0
        }
        fn max_terminal_reward(&self) -> f64 {
            0.0
        }
        fn step(&self, state: &f64, action: &f64, _draws: &mut dyn DrawStream) -> StepOutcome<f64, ()> {
            StepOutcome { next_state: state + action, observation: (), reward: 0.0, terminal: false }
        }
        fn observation_likelihood(&self, _a: &f64, _s: &f64, _o: &()) -> f64 {
            1.0
        }
        fn quantize_observation(&self, _o: &(), _r: f64, out: &mut Vec<i64>) {
            out.push(0);
        }
        fn sample_initial_state(&self, _draws: &mut dyn DrawStream) -> f64 {
            0.0
        }
    }

    #[test]
    fn scenarios_from_degenerate_belief_share_state() {
        let belief = ParticleBelief::from_states(vec![3.5f64]).unwrap();
        let scenarios = sample_scenarios(&belief, 5, 11);
        assert_eq!(scenarios.len(), 5);
        assert!(scenarios.iter().all(|s| s.initial_state == 3.5));
    }

    #[test]
    fn scenario_sampling_matches_weights() {
        let belief = ParticleBelief::from_weighted(vec![(1.0f64, 0.5), (2.0, 0.5)]).unwrap();
        let scenarios = sample_scenarios(&belief, 10_000, 9);
        let frac = scenarios.iter().filter(|s| s.initial_state == 1.0).count() as f64 / 10_000.0;
        assert!((0.49..=0.51).contains(&frac), "fraction {frac}");
    }

    #[test]
    fn scenario_sampling_is_deterministic() {
        let belief = ParticleBelief::from_weighted(vec![(1.0f64, 0.3), (2.0, 0.7)]).unwrap();
        let a = sample_scenarios(&belief, 64, 123);
        let b = sample_scenarios(&belief, 64, 123);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.initial_state, y.initial_state);
            assert_eq!(x.seed, y.seed);
            assert_eq!(x.index, y.index);
        }
    }

    #[test]
    fn unit_likelihood_update_is_pure_propagation() {
        let model = Shift;
        let belief =
            ParticleBelief::from_states(vec![0.0f64, 1.0, 2.0, 3.0]).unwrap();
        let update = belief_update(&model, &belief, &0.5, &(), 7);
        assert!(!update.degenerate_fallback);
        assert!(!update.resampled, "uniform weights should not trigger resampling");
        let expect = [0.5, 1.5, 2.5, 3.5];
        for ((s, w), e) in update.belief.particles().iter().zip(expect) {
            assert_eq!(*s, e);
            assert!((w - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_total_weight_errors_then_falls_back() {
        struct ZeroLike;
        impl PomdpModel for ZeroLike {
            type State = f64;
            type Action = ();
            type Observation = ();
            fn discount(&self) -> f64 {
                0.9
            }
            fn reward_bounds(&self) -> (f64, f64) {
                (0.0, 0.0)
            }
            fn max_step_reward(&self) -> f64 {
                0.0
            }
            fn max_terminal_reward(&self) -> f64 {
                0.0
            }
            fn step(&self, s: &f64, _a: &(), _d: &mut dyn DrawStream) -> StepOutcome<f64, ()> {
                StepOutcome { next_state: s + 1.0, observation: (), reward: 0.0, terminal: false }
            }
            fn observation_likelihood(&self, _a: &(), _s: &f64, _o: &()) -> f64 {
                0.0
            }
            fn quantize_observation(&self, _o: &(), _r: f64, out: &mut Vec<i64>) {
                out.push(0);
            }
            fn sample_initial_state(&self, _d: &mut dyn DrawStream) -> f64 {
                0.0
            }
        }
        let model = ZeroLike;
        let belief = ParticleBelief::from_states(vec![0.0f64, 10.0]).unwrap();
        let err = try_belief_update(&model, &belief, &(), &(), 3).unwrap_err();
        assert_eq!(err, BeliefError::TotalWeightZero);

        let update = belief_update(&model, &belief, &(), &(), 3);
        assert!(update.degenerate_fallback);
        let states: Vec<f64> = update.belief.particles().iter().map(|(s, _)| *s).collect();
        assert_eq!(states, vec![1.0, 11.0]);
        assert!(update.belief.particles().iter().all(|(_, w)| (w - 0.5).abs() < 1e-12));
    }

    #[test]
    fn weights_stay_normalized_after_update_and_resample() {
        struct Noisy;
        impl PomdpModel for Noisy {
            type State = f64;
            type Action = ();
            type Observation = f64;
            fn discount(&self) -> f64 {
                0.9
            }
            fn reward_bounds(&self) -> (f64, f64) {
                (0.0, 0.0)
            }
            fn max_step_reward(&self) -> f64 {
                0.0
            }
            fn max_terminal_reward(&self) -> f64 {
                0.0
            }
            fn step(&self, s: &f64, _a: &(), d: &mut dyn DrawStream) -> StepOutcome<f64, f64> {
                let next = s + 0.1 * d.normal();
                StepOutcome { next_state: next, observation: next, reward: 0.0, terminal: false }
            }
            fn observation_likelihood(&self, _a: &(), s: &f64, o: &f64) -> f64 {
                (-0.5 * ((s - o) / 0.05).powi(2)).exp()
            }
            fn quantize_observation(&self, o: &f64, r: f64, out: &mut Vec<i64>) {
                out.push((o / r).floor() as i64);
            }
            fn sample_initial_state(&self, _d: &mut dyn DrawStream) -> f64 {
                0.0
            }
        }
        let model = Noisy;
        let mut belief = ParticleBelief::from_states((0..200).map(|i| i as f64 * 0.01).collect()).unwrap();
        for step in 0..20 {
            let update = belief_update(&model, &belief, &(), &1.0, 1000 + step);
            belief = update.belief;
            let total: f64 = belief.particles().iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-9, "total weight {total}");
        }
    }

    #[test]
    fn episode_return_examples() {
        assert!((episode_return(&[1.0, 1.0, 1.0], 0.5) - 1.75).abs() < 1e-12);
        assert_eq!(episode_return(&[], 0.9), 0.0);
        let mut rewards = vec![-0.1; 59];
        rewards.push(100.0);
        assert!((episode_return(&rewards, 1.0) - 94.1).abs() < 1e-9);
    }

    #[test]
    fn systematic_resample_preserves_mass_location() {
        let belief = ParticleBelief::from_weighted(vec![(0.0f64, 0.9), (1.0, 0.1)]).unwrap();
        let resampled = belief.resample_systematic(1000, 0.5);
        let zeros = resampled.particles().iter().filter(|(s, _)| *s == 0.0).count();
        assert_eq!(zeros, 900);
    }
}
