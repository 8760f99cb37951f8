use nalgebra::DVector;

use super::{Mdp, Policy};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlannerConfig {
    /// Sup-norm change between sweeps at which value iteration stops.
    pub tolerance: f64,
    /// Sweeps allowed beyond the geometric-rate estimate.
    pub extra_iterations: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig { tolerance: 1e-10, extra_iterations: 200 }
    }
}

impl PlannerConfig {
    fn iteration_cap(&self, gamma: f64, reward_scale: f64) -> usize {
        let ratio = self.tolerance * (1.0 - gamma) / reward_scale;
        if reward_scale <= 0.0 || !(ratio > 0.0 && ratio.is_finite()) {
            return self.extra_iterations;
        }
        let base = if ratio >= 1.0 { 0.0 } else { (ratio.ln() / gamma.ln()).ceil() };
        base as usize + self.extra_iterations
    }
}

#[derive(Debug, Clone)]
pub struct PlanResult {
    pub policy: Policy,
    pub values: DVector<f64>,
    pub iterations: usize,
}

/// Deterministic optimal policy for state rewards `R(s)` under the default planner settings.
pub fn optimal_policy(mdp: &Mdp, state_rewards: &DVector<f64>) -> Result<Policy> {
    plan(mdp, state_rewards, &PlannerConfig::default()).map(|r| r.policy)
}

/// Value iteration on `V(s) = R(s) + gamma max_a sum_s' T(s, a, s') V(s')`.
///
/// The greedy policy breaks ties towards the lowest allowed action index.
pub fn plan(mdp: &Mdp, state_rewards: &DVector<f64>, cfg: &PlannerConfig) -> Result<PlanResult> {
    plan_from(mdp, state_rewards, cfg, None)
}

/// [`plan`] started from `initial_values` instead of `R`. A good guess (say, the
/// values for a nearby reward) saves sweeps; the stopping rule is unchanged.
pub fn plan_from(
    mdp: &Mdp,
    state_rewards: &DVector<f64>,
    cfg: &PlannerConfig,
    initial_values: Option<&DVector<f64>>,
) -> Result<PlanResult> {
    if state_rewards.len() != mdp.n_states() {
        return Err(Error::DimensionMismatch { expected: mdp.n_states(), got: state_rewards.len() });
    }
    if state_rewards.iter().any(|r| !r.is_finite()) {
        return Err(Error::InvalidMdp("non-finite reward".into()));
    }
    let gamma = mdp.gamma();
    let scale = state_rewards.amax();
    let mut values = match initial_values {
        Some(v) if v.len() != mdp.n_states() => {
            return Err(Error::DimensionMismatch { expected: mdp.n_states(), got: v.len() })
        }
        Some(v) if v.iter().all(|x| x.is_finite()) => v.clone(),
        _ => state_rewards.clone(),
    };
    // a warm start of size |V_0| behaves like rewards of size (1 - gamma) |V_0|
    let cap = cfg.iteration_cap(gamma, scale.max(2.0 * (1.0 - gamma) * values.amax()));

    let q = |values: &DVector<f64>, s: usize, a: usize| -> f64 {
        mdp.successors(s, a).iter().map(|&(t, p)| p * values[t]).sum::<f64>()
    };

    let table = SweepTable::new(mdp);
    let mut next = vec![0.0; mdp.n_states()];
    let mut iterations = 1;
    let mut residual = f64::INFINITY;
    while iterations <= cap {
        residual = table.sweep(state_rewards.as_slice(), gamma, values.as_slice(), &mut next);
        values.as_mut_slice().copy_from_slice(&next);
        iterations += 1;
        if residual <= cfg.tolerance {
            break;
        }
    }
    if residual > cfg.tolerance {
        return Err(Error::PlannerDidNotConverge { iterations: cap, residual });
    }

    // Remaining error in V is at most gamma * residual / (1 - gamma); treat
    // actions within a few multiples of that as tied.
    let tie = 4.0 * cfg.tolerance / (1.0 - gamma) + 1e-12 * values.amax();
    let actions: Vec<usize> = (0..mdp.n_states())
        .map(|s| {
            let scores: Vec<(usize, f64)> = mdp.allowed_actions(s).map(|a| (a, q(&values, s, a))).collect();
            let best = scores.iter().map(|e| e.1).fold(f64::NEG_INFINITY, f64::max);
            scores.iter().find(|e| e.1 >= best - tie).map(|e| e.0).expect("state has an allowed action")
        })
        .collect();
    let policy = Policy::deterministic(mdp, &actions)?;
    Ok(PlanResult { policy, values, iterations })
}

/// Successor lists flattened per state for the Bellman sweep.
struct SweepTable {
    /// `state_start[s]..state_start[s + 1]` indexes `action_end` for the allowed actions of `s`.
    state_start: Vec<usize>,
    /// End offset into `targets`/`probs` of each allowed `(s, a)`; starts at the previous end.
    action_end: Vec<usize>,
    targets: Vec<usize>,
    probs: Vec<f64>,
}

impl SweepTable {
    fn new(mdp: &Mdp) -> Self {
        let mut table = SweepTable { state_start: vec![0], action_end: Vec::new(), targets: Vec::new(), probs: Vec::new() };
        for s in 0..mdp.n_states() {
            for a in mdp.allowed_actions(s) {
                for &(t, p) in mdp.successors(s, a) {
                    table.targets.push(t);
                    table.probs.push(p);
                }
                table.action_end.push(table.targets.len());
            }
            table.state_start.push(table.action_end.len());
        }
        table
    }

    /// One Jacobi sweep into `next`; returns `max |next - values|`.
    fn sweep(&self, rewards: &[f64], gamma: f64, values: &[f64], next: &mut [f64]) -> f64 {
        let mut residual: f64 = 0.0;
        let mut begin = 0;
        for (s, out) in next.iter_mut().enumerate() {
            let mut best = f64::NEG_INFINITY;
            for &end in &self.action_end[self.state_start[s]..self.state_start[s + 1]] {
                let q: f64 = self.targets[begin..end].iter().zip(&self.probs[begin..end]).map(|(&t, &p)| p * values[t]).sum();
                best = best.max(q);
                begin = end;
            }
            *out = rewards[s] + gamma * best;
            residual = residual.max((*out - values[s]).abs());
        }
        residual
    }
}
