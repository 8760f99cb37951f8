//! Projection-version apprenticeship learning carried out entirely in the
//! learner's features `psi(s) = A phi(s)`.

use std::collections::HashMap;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::linalg::Worldview;
use crate::mdp::{self, feature_expectations_exact, FeatureExpectations, Mdp, MixedPolicy, PlannerConfig, Policy};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnerConfig {
    /// Stop once `||target - mu_bar|| < match_tolerance` (learner-view Euclidean norm).
    pub match_tolerance: f64,
    pub max_iterations: usize,
    pub planner: PlannerConfig,
}

impl LearnerConfig {
    /// Tolerance `1e-3 / (1 - gamma)`, scaled to the size of feature expectations.
    pub fn for_discount(gamma: f64) -> Self {
        LearnerConfig {
            match_tolerance: 1e-3 / (1.0 - gamma),
            max_iterations: 20_000,
            planner: PlannerConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.match_tolerance > 0.0) {
            return Err(Error::Config(format!("match tolerance {} must be positive", self.match_tolerance)));
        }
        if self.max_iterations == 0 {
            return Err(Error::Config("learner needs at least one iteration".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LearnerResult {
    pub mixed_policy: MixedPolicy,
    /// `||target - mu_bar^(i)||` for `i = 0, 1, ...`.
    pub view_distance_history: Vec<f64>,
    pub converged: bool,
    pub final_view_distance: f64,
    /// The recursion's point `mu_bar`, which equals `A mu(mixed_policy)`.
    pub virtual_view_mu: DVector<f64>,
    /// True feature expectations `mu(mixed_policy)` in `R^k`, exact by affinity.
    pub feature_expectations: FeatureExpectations,
}

impl LearnerResult {
    pub fn iterations(&self) -> usize {
        self.view_distance_history.len().saturating_sub(1)
    }
}

struct Component {
    actions: Vec<usize>,
    policy: Policy,
    mu: DVector<f64>,
}

struct Mixture {
    components: Vec<Component>,
    weights: Vec<f64>,
}

impl Mixture {
    fn new(component: Component) -> Self {
        Mixture { components: vec![component], weights: vec![1.0] }
    }

    /// `mu_bar <- (1 - t) mu_bar + t mu_new` on the weights.
    fn blend(&mut self, component: Component, t: f64) {
        for w in &mut self.weights {
            *w *= 1.0 - t;
        }
        match self.components.iter().position(|c| c.actions == component.actions) {
            Some(i) => self.weights[i] += t,
            None => {
                self.components.push(component);
                self.weights.push(t);
            }
        }
    }

    fn finish(self) -> Result<(MixedPolicy, FeatureExpectations)> {
        let total: f64 = self.weights.iter().sum();
        let mut mu = DVector::zeros(self.components[0].mu.len());
        let mut parts = Vec::with_capacity(self.components.len());
        for (w, c) in self.weights.into_iter().zip(self.components) {
            if w > 0.0 {
                mu.axpy(w / total, &c.mu, 1.0);
                parts.push((w / total, c.policy));
            }
        }
        Ok((MixedPolicy::new(parts)?, FeatureExpectations::new(mu)))
    }
}

/// Planner and occupancy work for one learner run. Consecutive directions are
/// close, so each plan starts from the previous values, and policies the
/// projection keeps revisiting reuse their feature expectations.
struct Oracle<'a> {
    mdp: &'a Mdp,
    a: &'a Worldview,
    planner: &'a PlannerConfig,
    values: Option<DVector<f64>>,
    seen: HashMap<Vec<usize>, DVector<f64>>,
}

impl<'a> Oracle<'a> {
    fn new(mdp: &'a Mdp, a: &'a Worldview, planner: &'a PlannerConfig) -> Self {
        Oracle { mdp, a, planner, values: None, seen: HashMap::new() }
    }

    /// Optimal deterministic policy for the learner reward `<direction, A phi(s)>`.
    fn best_response(&mut self, direction: &DVector<f64>) -> Result<Component> {
        // planning is scale-free; a unit direction keeps the tolerance meaningful
        let norm = direction.norm();
        let unit = if norm > 0.0 { direction / norm } else { direction.clone() };
        let rewards = self.mdp.state_rewards(&self.a.matrix().tr_mul(&unit))?;
        let plan = mdp::plan_from(self.mdp, &rewards, self.planner, self.values.as_ref())?;
        self.values = Some(plan.values);
        let actions = plan.policy.deterministic_actions().expect("planner policies are deterministic");
        let mu = match self.seen.get(&actions) {
            Some(mu) => mu.clone(),
            None => {
                let mu = feature_expectations_exact(self.mdp, &plan.policy)?.mu;
                self.seen.insert(actions.clone(), mu.clone());
                mu
            }
        };
        Ok(Component { actions, policy: plan.policy, mu })
    }
}

/// Matches `target_view_mu` (a point of `A mu(Pi)`) with a mixture of policies.
///
/// Starts from the policy optimal for reward direction `target`, then repeatedly
/// plans for `w = target - mu_bar` and moves `mu_bar` to the point of the segment
/// `[mu_bar, A mu(pi_new)]` closest to the target. Reaching the iteration cap is
/// not an error; the result carries `converged = false`.
pub fn project_learner(
    mdp: &Mdp,
    a: &Worldview,
    target_view_mu: &DVector<f64>,
    cfg: &LearnerConfig,
) -> Result<LearnerResult> {
    cfg.validate()?;
    if a.cols() != mdp.n_features() {
        return Err(Error::DimensionMismatch { expected: mdp.n_features(), got: a.cols() });
    }
    if target_view_mu.len() != a.rows() {
        return Err(Error::DimensionMismatch { expected: a.rows(), got: target_view_mu.len() });
    }
    if a.rows() == 0 {
        let policy = mdp::plan(mdp, &DVector::zeros(mdp.n_states()), &cfg.planner)?.policy;
        let mu = feature_expectations_exact(mdp, &policy)?;
        return Ok(LearnerResult {
            mixed_policy: MixedPolicy::single(policy),
            view_distance_history: vec![0.0],
            converged: true,
            final_view_distance: 0.0,
            virtual_view_mu: DVector::zeros(0),
            feature_expectations: mu,
        });
    }

    let mut oracle = Oracle::new(mdp, a, &cfg.planner);
    let first = oracle.best_response(target_view_mu)?;
    let mut mu_bar = a.apply(&first.mu);
    let mut mixture = Mixture::new(first);
    let mut distance = (target_view_mu - &mu_bar).norm();
    let mut history = vec![distance];

    for _ in 0..cfg.max_iterations {
        if distance < cfg.match_tolerance {
            break;
        }
        let direction = target_view_mu - &mu_bar;
        let next = oracle.best_response(&direction)?;
        let candidate = a.apply(&next.mu);
        let step = &candidate - &mu_bar;
        let step_sq = step.norm_squared();
        let t = if step_sq > 0.0 { (step.dot(&direction) / step_sq).clamp(0.0, 1.0) } else { 0.0 };
        if t <= 0.0 {
            // the planner found no direction of progress; further rounds would repeat it
            break;
        }
        mu_bar += step * t;
        mixture.blend(next, t);
        distance = (target_view_mu - &mu_bar).norm();
        history.push(distance);
    }

    let (mixed_policy, feature_expectations) = mixture.finish()?;
    Ok(LearnerResult {
        mixed_policy,
        feature_expectations,
        converged: distance < cfg.match_tolerance,
        final_view_distance: distance,
        view_distance_history: history,
        virtual_view_mu: mu_bar,
    })
}

/// `A mu(mixture)` computed exactly.
pub fn mixture_view_mu(mdp: &Mdp, a: &Worldview, mixed: &MixedPolicy) -> Result<DVector<f64>> {
    let mu: FeatureExpectations = mdp::feature_expectations_mixed(mdp, mixed)?;
    Ok(a.apply(&mu.mu))
}
