//! Anytime macro-action belief-tree search over determinized scenarios.
//!
//! The tree branches over all macro-actions of the given set and, under each
//! macro, over the distinct macro-observations encountered by the node's
//! scenarios. Bounds are backed up with
//!
//! ```text
//! V(b) = max_m [ R(b,m) + γ^L · Σ_o (n_o / n_b) · V(b'_o) ]
//! ```
//!
//! where `n_o / n_b` is the empirical macro-observation probability. With
//! length-1 macros equal to the primitive action set this is plain
//! primitive-action search; nothing in the module is macro-specific beyond
//! the per-macro step count.

use crate::macro_actions::MacroAction;
use crate::pomdp::{sample_scenarios, ParticleBelief, PomdpModel, Scenario};
use crate::rng::fnv1a_64;
use serde::Serialize;
use std::collections::HashMap;
use std::time::Instant;
use thiserror::Error;

/// Search budget and branching parameters.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    /// Number of determinized scenarios sampled from the root belief.
    pub scenario_count: usize,
    /// Maximum search depth in primitive steps.
    pub max_depth: usize,
    /// Wall-clock budget in seconds; `None` means unlimited.
    pub time_budget_s: Option<f64>,
    /// Node-expansion budget; `None` means unlimited.
    pub expansion_budget: Option<usize>,
    /// Observation quantization resolution δ_obs.
    pub obs_resolution: f64,
    /// Discount factor used in backups.
    pub discount: f64,
    /// Default-policy rollout horizon for leaf lower bounds (primitive
    /// steps); raised internally to the longest macro length.
    pub rollout_horizon: usize,
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), PlanError> {
        if self.scenario_count < 1 {
            return Err(PlanError::InvalidConfig("scenario count must be >= 1"));
        }
        if self.time_budget_s.is_none() && self.expansion_budget.is_none() {
            return Err(PlanError::InvalidConfig("at most one of time/expansion budget may be unlimited"));
        }
        if !(self.discount > 0.0 && self.discount < 1.0 + 1e-12) {
            return Err(PlanError::InvalidConfig("discount must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PlanError {
    #[error("macro-action set is empty")]
    EmptyMacroSet,
    #[error("invalid search configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Outcome of one planning call.
#[derive(Debug, Clone)]
pub struct SearchResult<A> {
    pub macro_index: usize,
    pub macro_actions: Vec<A>,
    /// Root lower bound — the value estimate v.
    pub value: f64,
    pub root_upper: f64,
    /// Primitive-step depth of the deepest backed-up node.
    pub depth: usize,
    pub node_count: usize,
    pub expansions: usize,
    pub wall_time_s: f64,
}

/// One node-expansion record for the optional search trace.
#[derive(Debug, Clone, Serialize)]
pub struct TraceEvent {
    pub expansion: usize,
    pub node: usize,
    pub depth: usize,
    pub node_lower: f64,
    pub node_upper: f64,
    pub root_lower: f64,
    pub root_upper: f64,
    pub nodes_total: usize,
}

/// Node-coherent default policy used for leaf lower bounds: one macro choice
/// per decision, shared by every scenario in the node, picked from the same
/// macro set the tree searches over. Keeping the rollout inside the macro
/// class is what guarantees lower ≤ upper at every node.
pub trait RolloutPolicy<M: PomdpModel> {
    fn choose(&self, model: &M, states: &[M::State], macros: &[MacroAction], depth: usize) -> usize;
}

/// Always roll out the same macro index; the right default for toy models.
pub struct ConstantMacroRollout(pub usize);

impl<M: PomdpModel> RolloutPolicy<M> for ConstantMacroRollout {
    fn choose(&self, _model: &M, _states: &[M::State], macros: &[MacroAction], _depth: usize) -> usize {
        self.0.min(macros.len() - 1)
    }
}

/// Converts a task-agnostic macro-action (vector-valued primitive actions)
/// into the model's action type.
pub trait ActionDecoder: PomdpModel {
    fn decode_action(&self, action: &[f64]) -> Self::Action;
}

const TERMINAL_TOKEN: i64 = i64::MIN + 7;

/// Per-macro continuation value: R(b,m) + γ^steps · Σ (count/n)·child value,
/// with counts the empirical macro-observation weights.
pub fn macro_backup(reward: f64, steps: usize, discount: f64, children: &[(f64, usize)], n_node: usize) -> f64 {
    let weighted: f64 = children
        .iter()
        .map(|&(value, count)| count as f64 / n_node as f64 * value)
        .sum();
    reward + discount.powi(steps as i32) * weighted
}

struct MacroEdge {
    /// R(b, m): mean over the node's scenarios of the discounted reward
    /// collected along the macro.
    reward: f64,
    /// Primitive steps actually simulated (the macro truncated to the
    /// remaining depth).
    steps: usize,
    /// (child node, scenario count), in first-seen scenario order.
    children: Vec<(usize, usize)>,
    lower: f64,
    upper: f64,
}

struct Node<S> {
    depth: usize,
    scen: Vec<usize>,
    states: Vec<S>,
    lower: f64,
    upper: f64,
    init_lower: f64,
    init_upper: f64,
    edges: Option<Vec<MacroEdge>>,
    closed: bool,
}

struct Search<'a, M: PomdpModel, R: RolloutPolicy<M>> {
    model: &'a M,
    macros: &'a [MacroAction],
    rollout: &'a R,
    cfg: &'a SearchConfig,
    scenarios: Vec<Scenario<M::State>>,
    nodes: Vec<Node<M::State>>,
    horizon: usize,
    max_backed_depth: usize,
}

impl<'a, M, R> Search<'a, M, R>
where
    M: PomdpModel + ActionDecoder,
    R: RolloutPolicy<M>,
{
    fn upper_bound_at(&self, depth: usize) -> f64 {
        let remaining = self.cfg.max_depth.saturating_sub(depth);
        if remaining == 0 {
            return 0.0;
        }
        let g = self.cfg.discount;
        let series = if (g - 1.0).abs() < 1e-12 {
            remaining as f64
        } else {
            (1.0 - g.powi(remaining as i32)) / (1.0 - g)
        };
        self.model.max_step_reward().max(0.0) * series + self.model.max_terminal_reward().max(0.0)
    }

    /// Mean discounted return of the coherent default policy simulated to
    /// min(horizon, D − depth), over the node's scenarios.
    fn rollout_value(&self, scen: &[usize], states: &[M::State], depth: usize) -> f64 {
        let budget = self.horizon.min(self.cfg.max_depth.saturating_sub(depth));
        if budget == 0 || scen.is_empty() {
            return 0.0;
        }
        let mut live: Vec<(usize, M::State)> =
            scen.iter().copied().zip(states.iter().cloned()).collect();
        let mut total = 0.0;
        let mut d = depth;
        let mut g = 1.0;
        let mut steps_left = budget;
        while steps_left > 0 && !live.is_empty() {
            let live_states: Vec<M::State> = live.iter().map(|(_, s)| s.clone()).collect();
            let m = self.rollout.choose(self.model, &live_states, self.macros, d);
            for raw in &self.macros[m].actions {
                if steps_left == 0 || live.is_empty() {
                    break;
                }
                let action = self.model.decode_action(raw);
                let mut next = Vec::with_capacity(live.len());
                for (idx, state) in live.drain(..) {
                    let mut stream = self.scenarios[idx].stream_at_depth(d);
                    let out = self.model.step(&state, &action, &mut stream);
                    total += g * out.reward;
                    if !out.terminal {
                        next.push((idx, out.next_state));
                    }
                }
                live = next;
                d += 1;
                g *= self.cfg.discount;
                steps_left -= 1;
            }
        }
        total / scen.len() as f64
    }

    fn new_leaf(&mut self, depth: usize, scen: Vec<usize>, states: Vec<M::State>, all_terminal: bool) -> usize {
        let (init_lower, init_upper) = if all_terminal {
            (0.0, 0.0)
        } else {
            (self.rollout_value(&scen, &states, depth), self.upper_bound_at(depth))
        };
        self.max_backed_depth = self.max_backed_depth.max(depth);
        let closed = all_terminal || depth >= self.cfg.max_depth;
        self.nodes.push(Node {
            depth,
            scen,
            states,
            lower: init_lower,
            upper: if closed { init_lower } else { init_upper },
            init_lower,
            init_upper,
            edges: None,
            closed,
        });
        self.nodes.len() - 1
    }

    /// Simulate every macro from the node, partition scenarios by
    /// macro-observation, and attach child leaves.
    fn expand(&mut self, node_id: usize) {
        let depth = self.nodes[node_id].depth;
        let remaining = self.cfg.max_depth - depth;
        let n_node = self.nodes[node_id].scen.len();
        let mut edges = Vec::with_capacity(self.macros.len());
        let mut key_buf: Vec<i64> = Vec::new();
        for macro_action in self.macros {
            let steps = macro_action.len().min(remaining);
            let mut total_reward = 0.0;
            // key -> (slot, scen ids, final states, all_terminal)
            let mut slots: HashMap<u64, usize> = HashMap::new();
            let mut groups: Vec<(Vec<usize>, Vec<M::State>, bool)> = Vec::new();
            for i in 0..n_node {
                let scen_idx = self.nodes[node_id].scen[i];
                let mut state = self.nodes[node_id].states[i].clone();
                let mut g = 1.0;
                let mut terminated = false;
                key_buf.clear();
                for (j, raw) in macro_action.actions.iter().take(steps).enumerate() {
                    let action = self.model.decode_action(raw);
                    let mut stream = self.scenarios[scen_idx].stream_at_depth(depth + j);
                    let out = self.model.step(&state, &action, &mut stream);
                    total_reward += g * out.reward;
                    g *= self.cfg.discount;
                    self.model
                        .quantize_observation(&out.observation, self.cfg.obs_resolution, &mut key_buf);
                    state = out.next_state;
                    if out.terminal {
                        terminated = true;
                        key_buf.push(TERMINAL_TOKEN);
                        key_buf.push(j as i64);
                        break;
                    }
                }
                let key = fnv1a_64(key_buf.iter().map(|&t| t as u64));
                let slot = *slots.entry(key).or_insert_with(|| {
                    groups.push((Vec::new(), Vec::new(), terminated));
                    groups.len() - 1
                });
                groups[slot].0.push(scen_idx);
                groups[slot].1.push(state);
            }
            let reward = total_reward / n_node as f64;
            let mut children = Vec::with_capacity(groups.len());
            let mut partitioned = 0usize;
            for (scen, states, terminal) in groups {
                let count = scen.len();
                partitioned += count;
                let child = self.new_leaf(depth + steps, scen, states, terminal);
                children.push((child, count));
            }
            assert_eq!(partitioned, n_node, "children under one macro must partition the parent's scenarios");
            let mut edge = MacroEdge { reward, steps, children, lower: 0.0, upper: 0.0 };
            self.refresh_edge(&mut edge, n_node);
            edges.push(edge);
        }
        let node = &mut self.nodes[node_id];
        node.edges = Some(edges);
        self.refresh_node(node_id);
    }

    fn refresh_edge(&self, edge: &mut MacroEdge, n_node: usize) {
        let lows: Vec<(f64, usize)> =
            edge.children.iter().map(|&(c, n)| (self.nodes[c].lower, n)).collect();
        let highs: Vec<(f64, usize)> =
            edge.children.iter().map(|&(c, n)| (self.nodes[c].upper, n)).collect();
        edge.lower = macro_backup(edge.reward, edge.steps, self.cfg.discount, &lows, n_node);
        edge.upper = macro_backup(edge.reward, edge.steps, self.cfg.discount, &highs, n_node);
    }

    /// Recompute a node's bounds from its edges; initial bounds stay in
    /// force so the root lower bound is monotone across expansions.
    fn refresh_node(&mut self, node_id: usize) {
        let n_node = self.nodes[node_id].scen.len();
        let mut edges = self.nodes[node_id].edges.take();
        if let Some(edges) = edges.as_mut() {
            for edge in edges.iter_mut() {
                self.refresh_edge(edge, n_node);
            }
            let best_lower = edges.iter().map(|e| e.lower).fold(f64::NEG_INFINITY, f64::max);
            let best_upper = edges.iter().map(|e| e.upper).fold(f64::NEG_INFINITY, f64::max);
            let node = &mut self.nodes[node_id];
            node.lower = node.init_lower.max(best_lower);
            node.upper = node.init_upper.min(best_upper);
            self.max_backed_depth = self.max_backed_depth.max(node.depth);
        }
        let node = &mut self.nodes[node_id];
        if let Some(e) = edges {
            node.edges = Some(e);
        }
        debug_assert!(
            node.lower <= node.upper + 1e-9,
            "bound sandwich violated: {} > {}",
            node.lower,
            node.upper
        );
    }

    /// Descend by upper-bound-maximizing macro, then largest
    /// scenario-weighted bound gap; smallest index breaks ties.
    fn select_leaf(&self) -> (usize, Vec<usize>) {
        let mut path = vec![0usize];
        let mut node_id = 0usize;
        while let Some(edges) = self.nodes[node_id].edges.as_ref() {
            let mut best_edge = 0;
            for (i, e) in edges.iter().enumerate() {
                if e.upper > edges[best_edge].upper + 1e-15 {
                    best_edge = i;
                }
            }
            let edge = &edges[best_edge];
            let mut best_child = edge.children[0].0;
            let mut best_gap = f64::NEG_INFINITY;
            for &(child, count) in &edge.children {
                let gap = count as f64 * (self.nodes[child].upper - self.nodes[child].lower);
                if gap > best_gap + 1e-15 {
                    best_gap = gap;
                    best_child = child;
                }
            }
            node_id = best_child;
            path.push(node_id);
        }
        (node_id, path)
    }
}

/// Plan from `belief` over the given macro-action set. Samples K scenarios,
/// grows the tree until the budget is exhausted or the root gap closes, and
/// returns the macro maximizing the root lower bound together with that
/// bound as the value estimate.
pub fn plan<M, R>(
    model: &M,
    belief: &ParticleBelief<M::State>,
    macros: &[MacroAction],
    rollout: &R,
    cfg: &SearchConfig,
    seed: u64,
    mut trace: Option<&mut Vec<TraceEvent>>,
) -> Result<SearchResult<M::Action>, PlanError>
where
    M: PomdpModel + ActionDecoder,
    R: RolloutPolicy<M>,
{
    let start = Instant::now();
    cfg.validate()?;
    if macros.is_empty() {
        return Err(PlanError::EmptyMacroSet);
    }
    let scenarios = sample_scenarios(belief, cfg.scenario_count, seed);
    let horizon = cfg
        .rollout_horizon
        .max(macros.iter().map(|m| m.len()).max().unwrap_or(1));

    let mut search = Search {
        model,
        macros,
        rollout,
        cfg,
        nodes: Vec::new(),
        horizon,
        max_backed_depth: 0,
        scenarios,
    };
    let root_states: Vec<M::State> = search.scenarios.iter().map(|s| s.initial_state.clone()).collect();
    let root_scen: Vec<usize> = (0..search.scenarios.len()).collect();
    search.new_leaf(0, root_scen, root_states, false);

    let mut expansions = 0usize;
    loop {
        if let Some(limit) = cfg.expansion_budget {
            if expansions >= limit {
                break;
            }
        }
        if let Some(budget) = cfg.time_budget_s {
            if expansions > 0 && start.elapsed().as_secs_f64() >= budget {
                break;
            }
        }
        let root = &search.nodes[0];
        if root.closed || root.upper - root.lower <= 1e-12 {
            break;
        }
        let (leaf, path) = search.select_leaf();
        if search.nodes[leaf].closed {
            // Converged region; nothing left to tighten along this path.
            break;
        }
        if search.nodes[leaf].depth >= cfg.max_depth {
            let node = &mut search.nodes[leaf];
            node.upper = node.lower;
            node.closed = true;
        } else {
            search.expand(leaf);
            expansions += 1;
        }
        for &id in path.iter().rev() {
            search.refresh_node(id);
        }
        if let Some(events) = trace.as_deref_mut() {
            events.push(TraceEvent {
                expansion: expansions,
                node: leaf,
                depth: search.nodes[leaf].depth,
                node_lower: search.nodes[leaf].lower,
                node_upper: search.nodes[leaf].upper,
                root_lower: search.nodes[0].lower,
                root_upper: search.nodes[0].upper,
                nodes_total: search.nodes.len(),
            });
        }
    }

    // Ensure the root is expanded even under a zero/immediate budget so a
    // macro choice always exists.
    if search.nodes[0].edges.is_none() {
        search.expand(0);
        expansions += 1;
        search.refresh_node(0);
    }

    let root = &search.nodes[0];
    let edges = root.edges.as_ref().expect("root expanded");
    let mut best = 0usize;
    for (i, e) in edges.iter().enumerate() {
        if e.lower > edges[best].lower + 1e-15 {
            best = i;
        }
    }
    Ok(SearchResult {
        macro_index: best,
        macro_actions: macros[best].actions.iter().map(|a| model.decode_action(a)).collect(),
        value: root.lower,
        root_upper: root.upper,
        depth: search.max_backed_depth,
        node_count: search.nodes.len(),
        expansions,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}
