//! Finite MDPs with a linear feature map, their policies, and the discounted
//! feature expectations `mu(pi) = E[sum_t gamma^t phi(s_t)]`.

mod enumerate;
mod gridworld;
mod occupancy;
mod performance;
mod planning;

pub use enumerate::{
    count_deterministic_policies, deterministic_policies, enumerate_feature_expectations,
    max_linear_values, DeterministicPolicies,
};
pub use gridworld::{build_gridworld, Action, GridworldSpec};
pub use occupancy::{
    feature_expectations_exact, feature_expectations_mixed, feature_expectations_sampled,
    state_occupancy, SampledPolicy,
};
pub use performance::{estimate_diameter, relative_performance, DiameterEstimate, PerformanceScale};
pub use planning::{optimal_policy, plan, plan_from, PlanResult, PlannerConfig};

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const STOCHASTIC_TOL: f64 = 1e-12;

/// A finite discounted MDP `(S, A, T, D, gamma)` together with the feature map `phi`.
///
/// Transitions are stored sparsely, one successor list per `(state, action)`;
/// disallowed actions have an empty list.
#[derive(Debug, Clone)]
pub struct Mdp {
    n_states: usize,
    n_actions: usize,
    transitions: Vec<Vec<(usize, f64)>>,
    allowed: Vec<bool>,
    initial_dist: DVector<f64>,
    gamma: f64,
    features: DMatrix<f64>,
}

impl Mdp {
    /// `transitions[s * n_actions + a]` lists `(next_state, probability)` pairs.
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transitions: Vec<Vec<(usize, f64)>>,
        allowed: Vec<bool>,
        initial_dist: DVector<f64>,
        gamma: f64,
        features: DMatrix<f64>,
    ) -> Result<Self> {
        if n_states == 0 || n_actions == 0 {
            return Err(Error::InvalidMdp("state and action counts must be positive".into()));
        }
        let pairs = n_states * n_actions;
        if transitions.len() != pairs || allowed.len() != pairs {
            return Err(Error::InvalidMdp(format!(
                "expected {pairs} transition rows and action-mask entries"
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidMdp(format!("discount {gamma} outside (0, 1)")));
        }
        if initial_dist.len() != n_states {
            return Err(Error::DimensionMismatch { expected: n_states, got: initial_dist.len() });
        }
        check_distribution(initial_dist.iter().copied(), "initial distribution")?;
        if features.nrows() != n_states || features.ncols() == 0 {
            return Err(Error::InvalidMdp("feature matrix must be n_states x k with k >= 1".into()));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidMdp("non-finite feature entry".into()));
        }
        for s in 0..n_states {
            let row = &allowed[s * n_actions..(s + 1) * n_actions];
            if !row.iter().any(|&a| a) {
                return Err(Error::InvalidMdp(format!("state {s} has no allowed action")));
            }
            for a in 0..n_actions {
                let succ = &transitions[s * n_actions + a];
                if !row[a] {
                    if !succ.is_empty() {
                        return Err(Error::InvalidMdp(format!(
                            "disallowed action {a} in state {s} has transitions"
                        )));
                    }
                    continue;
                }
                if let Some(&(t, _)) = succ.iter().find(|(t, _)| *t >= n_states) {
                    return Err(Error::InvalidMdp(format!("successor {t} out of range")));
                }
                check_distribution(
                    succ.iter().map(|&(_, p)| p),
                    &format!("transition row ({s}, {a})"),
                )?;
            }
        }
        Ok(Mdp { n_states, n_actions, transitions, allowed, initial_dist, gamma, features })
    }

    /// Dense constructor: `probs[s][a]` is a full distribution over next states,
    /// or `None` when the action is not allowed in `s`.
    pub fn from_dense(
        probs: &[Vec<Option<Vec<f64>>>],
        initial_dist: DVector<f64>,
        gamma: f64,
        features: DMatrix<f64>,
    ) -> Result<Self> {
        let n_states = probs.len();
        let n_actions = probs.first().map_or(0, Vec::len);
        let mut transitions = Vec::with_capacity(n_states * n_actions);
        let mut allowed = Vec::with_capacity(n_states * n_actions);
        for row in probs {
            if row.len() != n_actions {
                return Err(Error::InvalidMdp("ragged action table".into()));
            }
            for entry in row {
                match entry {
                    Some(p) => {
                        if p.len() != n_states {
                            return Err(Error::DimensionMismatch { expected: n_states, got: p.len() });
                        }
                        transitions.push(
                            p.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(t, &x)| (t, x)).collect(),
                        );
                        allowed.push(true);
                    }
                    None => {
                        transitions.push(Vec::new());
                        allowed.push(false);
                    }
                }
            }
        }
        Mdp::new(n_states, n_actions, transitions, allowed, initial_dist, gamma, features)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Dimension `k` of the true feature space.
    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn initial_dist(&self) -> &DVector<f64> {
        &self.initial_dist
    }

    /// `n_states x k`; row `s` is `phi(s)`.
    pub fn features(&self) -> &DMatrix<f64> {
        &self.features
    }

    pub fn is_allowed(&self, state: usize, action: usize) -> bool {
        self.allowed[state * self.n_actions + action]
    }

    pub fn allowed_actions(&self, state: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n_actions).filter(move |&a| self.is_allowed(state, a))
    }

    pub fn successors(&self, state: usize, action: usize) -> &[(usize, f64)] {
        &self.transitions[state * self.n_actions + action]
    }

    /// State reward vector `R(s) = <w, phi(s)>`.
    pub fn state_rewards(&self, weights: &DVector<f64>) -> Result<DVector<f64>> {
        if weights.len() != self.n_features() {
            return Err(Error::DimensionMismatch { expected: self.n_features(), got: weights.len() });
        }
        Ok(&self.features * weights)
    }

    /// Largest feature norm `max_s ||phi(s)||`.
    pub fn max_feature_norm(&self) -> f64 {
        self.features.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    /// Analytic upper bound `2 max_s ||phi(s)|| / (1 - gamma)` on the diameter of `mu(Pi)`.
    pub fn diameter_upper_bound(&self) -> f64 {
        2.0 * self.max_feature_norm() / (1.0 - self.gamma)
    }

    /// Same dynamics with a different discount factor.
    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Mdp::new(
            self.n_states,
            self.n_actions,
            self.transitions.clone(),
            self.allowed.clone(),
            self.initial_dist.clone(),
            gamma,
            self.features.clone(),
        )
    }

    /// Same dynamics with the initial distribution replaced.
    pub fn with_initial_dist(&self, initial_dist: DVector<f64>) -> Result<Self> {
        Mdp::new(
            self.n_states,
            self.n_actions,
            self.transitions.clone(),
            self.allowed.clone(),
            initial_dist,
            self.gamma,
            self.features.clone(),
        )
    }
}

fn check_distribution(probs: impl Iterator<Item = f64>, what: &str) -> Result<()> {
    let mut sum = 0.0;
    for p in probs {
        if !(p.is_finite() && p >= 0.0) {
            return Err(Error::InvalidMdp(format!("{what} has a negative or non-finite entry")));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(Error::InvalidMdp(format!("{what} sums to {sum}, not 1")));
    }
    Ok(())
}

/// Stationary stochastic policy, stored as a row-stochastic `n_states x n_actions` table.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    n_actions: usize,
    probs: Vec<f64>,
}

impl Policy {
    /// `probs` is row-major `n_states x n_actions`.
    pub fn new(mdp: &Mdp, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != mdp.n_states() * mdp.n_actions() {
            return Err(Error::DimensionMismatch {
                expected: mdp.n_states() * mdp.n_actions(),
                got: probs.len(),
            });
        }
        for s in 0..mdp.n_states() {
            let row = &probs[s * mdp.n_actions()..(s + 1) * mdp.n_actions()];
            let mut sum = 0.0;
            for (a, &p) in row.iter().enumerate() {
                if !(p.is_finite() && p >= 0.0) {
                    return Err(Error::InvalidPolicy(format!("bad probability {p} at ({s}, {a})")));
                }
                if p > 0.0 && !mdp.is_allowed(s, a) {
                    return Err(Error::InvalidPolicy(format!("disallowed action {a} used in state {s}")));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(Error::InvalidPolicy(format!("row {s} sums to {sum}")));
            }
        }
        Ok(Policy { n_actions: mdp.n_actions(), probs })
    }

    /// One-hot policy taking `actions[s]` in state `s`.
    pub fn deterministic(mdp: &Mdp, actions: &[usize]) -> Result<Self> {
        if actions.len() != mdp.n_states() {
            return Err(Error::DimensionMismatch { expected: mdp.n_states(), got: actions.len() });
        }
        let mut probs = vec![0.0; mdp.n_states() * mdp.n_actions()];
        for (s, &a) in actions.iter().enumerate() {
            if a >= mdp.n_actions() || !mdp.is_allowed(s, a) {
                return Err(Error::InvalidPolicy(format!("action {a} not allowed in state {s}")));
            }
            probs[s * mdp.n_actions() + a] = 1.0;
        }
        Ok(Policy { n_actions: mdp.n_actions(), probs })
    }

    /// Uniform over the allowed actions of each state.
    pub fn uniform(mdp: &Mdp) -> Self {
        let mut probs = vec![0.0; mdp.n_states() * mdp.n_actions()];
        for s in 0..mdp.n_states() {
            let allowed: Vec<usize> = mdp.allowed_actions(s).collect();
            for &a in &allowed {
                probs[s * mdp.n_actions() + a] = 1.0 / allowed.len() as f64;
            }
        }
        Policy { n_actions: mdp.n_actions(), probs }
    }

    pub fn n_states(&self) -> usize {
        self.probs.len() / self.n_actions
    }

    pub fn action_probs(&self, state: usize) -> &[f64] {
        &self.probs[state * self.n_actions..(state + 1) * self.n_actions]
    }

    /// The action taken in each state, if every row is one-hot.
    pub fn deterministic_actions(&self) -> Option<Vec<usize>> {
        (0..self.n_states())
            .map(|s| {
                let row = self.action_probs(s);
                row.iter().position(|&p| p == 1.0)
            })
            .collect()
    }

    fn check_shape(&self, mdp: &Mdp) -> Result<()> {
        if self.n_actions != mdp.n_actions() || self.n_states() != mdp.n_states() {
            return Err(Error::InvalidPolicy("policy shape does not match the MDP".into()));
        }
        Ok(())
    }
}

/// Convex mixture of policies: a trajectory first draws a component with
/// probability equal to its weight and then follows it forever.
#[derive(Debug, Clone)]
pub struct MixedPolicy {
    components: Vec<(f64, Policy)>,
}

impl MixedPolicy {
    pub fn new(components: Vec<(f64, Policy)>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidPolicy("mixture has no components".into()));
        }
        let mut sum = 0.0;
        for (w, _) in &components {
            if !(w.is_finite() && *w >= 0.0) {
                return Err(Error::InvalidPolicy(format!("bad mixture weight {w}")));
            }
            sum += w;
        }
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPolicy(format!("mixture weights sum to {sum}")));
        }
        Ok(MixedPolicy { components })
    }

    pub fn single(policy: Policy) -> Self {
        MixedPolicy { components: vec![(1.0, policy)] }
    }

    pub fn components(&self) -> &[(f64, Policy)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// Discounted feature expectations `mu(pi)` (or an image of them under a worldview).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureExpectations {
    pub mu: DVector<f64>,
}

impl FeatureExpectations {
    pub fn new(mu: DVector<f64>) -> Self {
        FeatureExpectations { mu }
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Policy value `<w, mu>` under linear reward weights `w`.
    pub fn value(&self, weights: &DVector<f64>) -> f64 {
        self.mu.dot(weights)
    }
}

impl From<DVector<f64>> for FeatureExpectations {
    fn from(mu: DVector<f64>) -> Self {
        FeatureExpectations { mu }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state() -> Mdp {
        Mdp::from_dense(
            &[
                vec![Some(vec![1.0, 0.0]), Some(vec![0.0, 1.0])],
                vec![Some(vec![1.0, 0.0]), None],
            ],
            DVector::from_vec(vec![0.5, 0.5]),
            0.5,
            DMatrix::identity(2, 2),
        )
        .unwrap()
    }

    #[test]
    fn rejects_bad_discount_and_rows() {
        let feats = DMatrix::identity(1, 1);
        let d = DVector::from_vec(vec![1.0]);
        assert!(Mdp::from_dense(&[vec![Some(vec![1.0])]], d.clone(), 1.0, feats.clone()).is_err());
        assert!(Mdp::from_dense(&[vec![Some(vec![0.9])]], d.clone(), 0.5, feats.clone()).is_err());
        assert!(Mdp::from_dense(&[vec![None]], d, 0.5, feats).is_err());
    }

    #[test]
    fn policy_validation() {
        let mdp = two_state();
        assert!(Policy::deterministic(&mdp, &[1, 1]).is_err());
        assert!(Policy::new(&mdp, vec![0.5, 0.5, 0.5, 0.5]).is_err());
        let p = Policy::new(&mdp, vec![0.25, 0.75, 1.0, 0.0]).unwrap();
        assert_eq!(p.deterministic_actions(), None);
        let d = Policy::deterministic(&mdp, &[1, 0]).unwrap();
        assert_eq!(d.deterministic_actions(), Some(vec![1, 0]));
        assert_eq!(Policy::uniform(&mdp).action_probs(1), &[1.0, 0.0]);
    }

    #[test]
    fn mixture_weights_must_sum_to_one() {
        let mdp = two_state();
        let p = Policy::uniform(&mdp);
        assert!(MixedPolicy::new(vec![]).is_err());
        assert!(MixedPolicy::new(vec![(0.3, p.clone()), (0.3, p.clone())]).is_err());
        assert!(MixedPolicy::new(vec![(0.3, p.clone()), (0.7, p)]).is_ok());
    }
}
