//! Feature-selection strategies, each behind [`TeachingStrategy`] and looked up
//! by name in a [`StrategyRegistry`].

use std::collections::BTreeMap;
use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

use super::FeaturePool;
use crate::error::{Error, Result};
use crate::learner::{project_learner, LearnerConfig};
use crate::linalg::{teaching_risk, RewardWeights, Worldview};
use crate::mdp::Mdp;
use crate::rng;

/// Everything a strategy may look at when choosing the next feature.
pub struct SelectionContext<'a> {
    pub mdp: &'a Mdp,
    pub worldview: &'a Worldview,
    pub pool: &'a FeaturePool,
    pub w_star: &'a RewardWeights,
    /// `mu(pi^T)` in the true feature space.
    pub teacher_mu: &'a DVector<f64>,
    pub learner: &'a LearnerConfig,
    pub round: usize,
    pub seed: u64,
}

pub trait TeachingStrategy: Send + Sync {
    fn name(&self) -> &'static str;

    /// Index into the pool of the (untaught) feature to teach next.
    fn select(&self, ctx: &SelectionContext<'_>) -> Result<usize>;
}

/// Teach the feature whose row-append minimises the teaching risk.
#[derive(Debug, Default, Clone, Copy)]
pub struct TrGreedy;

/// Teach a uniformly random untaught feature.
#[derive(Debug, Default, Clone, Copy)]
pub struct RandomFeature;

/// Simulate the learner for every candidate and teach the best-performing one.
#[derive(Debug, Default, Clone, Copy)]
pub struct PerfGreedy;

impl TeachingStrategy for TrGreedy {
    fn name(&self) -> &'static str {
        "trgreedy"
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<usize> {
        trgreedy_select(ctx.worldview, ctx.pool, ctx.w_star)
    }
}

impl TeachingStrategy for RandomFeature {
    fn name(&self) -> &'static str {
        "random"
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<usize> {
        random_select(ctx.pool, rng::derive_seed(ctx.seed, ctx.round as u64, "random-select"))
    }
}

impl TeachingStrategy for PerfGreedy {
    fn name(&self) -> &'static str {
        "perfgreedy"
    }

    fn select(&self, ctx: &SelectionContext<'_>) -> Result<usize> {
        perfgreedy_select(ctx.mdp, ctx.worldview, ctx.pool, ctx.teacher_mu, ctx.w_star, ctx.learner)
    }
}

/// Scores this close count as tied, so roundoff cannot override the lowest-index rule.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Lowest-index minimiser of `rho(A (+) f; w)` over untaught features.
pub fn trgreedy_select(a: &Worldview, pool: &FeaturePool, w: &RewardWeights) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in pool.untaught() {
        let risk = teaching_risk(&a.with_row(pool.feature(i))?, w)?;
        if best.is_none_or(|(_, b)| risk < b - TIE_TOLERANCE) {
            best = Some((i, risk));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptyPool)
}

/// Uniform draw over untaught features, reproducible from `seed`.
pub fn random_select(pool: &FeaturePool, seed: u64) -> Result<usize> {
    let candidates: Vec<usize> = pool.untaught().collect();
    if candidates.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut r = rng::stream(seed, 0, "random-feature");
    Ok(candidates[r.random_range(0..candidates.len())])
}

/// Lowest-index maximiser of the true value `<w*, mu(pi^L)>` reached by a learner
/// trained against `(A (+) f) mu(pi^T)`. The learner is deterministic, so the
/// simulation needs no random stream.
pub fn perfgreedy_select(
    mdp: &Mdp,
    a: &Worldview,
    pool: &FeaturePool,
    teacher_mu: &DVector<f64>,
    w: &RewardWeights,
    learner: &LearnerConfig,
) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for i in pool.untaught() {
        let extended = a.with_row(pool.feature(i))?;
        let result = project_learner(mdp, &extended, &extended.apply(teacher_mu), learner)?;
        let value = result.feature_expectations.value(w.vector());
        if best.is_none_or(|(_, b)| value > b + TIE_TOLERANCE * b.abs().max(1.0)) {
            best = Some((i, value));
        }
    }
    best.map(|(i, _)| i).ok_or(Error::EmptyPool)
}

/// Name-keyed table of strategies.
#[derive(Clone)]
pub struct StrategyRegistry {
    strategies: BTreeMap<String, Arc<dyn TeachingStrategy>>,
}

impl StrategyRegistry {
    pub fn empty() -> Self {
        StrategyRegistry { strategies: BTreeMap::new() }
    }

    /// `trgreedy`, `random` and `perfgreedy`.
    pub fn with_builtins() -> Self {
        let mut registry = Self::empty();
        registry.register(Arc::new(TrGreedy));
        registry.register(Arc::new(RandomFeature));
        registry.register(Arc::new(PerfGreedy));
        registry
    }

    /// Registers under the strategy's own name, replacing any previous entry.
    pub fn register(&mut self, strategy: Arc<dyn TeachingStrategy>) {
        self.strategies.insert(strategy.name().to_string(), strategy);
    }

    pub fn get(&self, name: &str) -> Result<Arc<dyn TeachingStrategy>> {
        self.strategies
            .get(&name.to_ascii_lowercase())
            .cloned()
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.strategies.keys().map(String::as_str)
    }
}

impl Default for StrategyRegistry {
    fn default() -> Self {
        Self::with_builtins()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::kernel_projection;
    use crate::mdp::{build_gridworld, feature_expectations_exact, optimal_policy, GridworldSpec};

    fn chain_w() -> RewardWeights {
        RewardWeights::normalized(DVector::from_vec(vec![-1.0, -0.5, 0.0, 0.5, 1.0])).unwrap()
    }

    #[test]
    fn trgreedy_prefers_the_reward_vector() {
        let w = chain_w();
        let pool = FeaturePool::new(vec![
            DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0, 0.0]),
            w.vector().clone(),
            DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0, 0.0]),
        ])
        .unwrap();
        let a = Worldview::empty(5);
        let chosen = trgreedy_select(&a, &pool, &w).unwrap();
        assert_eq!(chosen, 1);
        assert_eq!(teaching_risk(&a.with_row(pool.feature(chosen)).unwrap(), &w).unwrap(), 0.0);
    }

    #[test]
    fn trgreedy_on_one_hot_chain_pool_picks_an_extreme_cell() {
        let w = chain_w();
        let pool = FeaturePool::one_hot(5);
        let a = Worldview::empty(5);
        // oracle: residual risk after teaching e_i is ||w - <w, e_i> e_i|| = sqrt(1 - w_i^2)
        let risks: Vec<f64> = (0..5)
            .map(|i| {
                let row = Worldview::empty(5).with_row(pool.feature(i)).unwrap();
                kernel_projection(&row, w.vector()).unwrap().norm()
            })
            .collect();
        for (i, r) in risks.iter().enumerate() {
            assert!((r - (1.0 - w.vector()[i].powi(2)).sqrt()).abs() < 1e-12);
        }
        // cells 1 and 5 tie; the lower index wins
        assert_eq!(trgreedy_select(&a, &pool, &w).unwrap(), 0);
    }

    #[test]
    fn ties_break_to_lowest_index() {
        let w = RewardWeights::new(DVector::from_vec(vec![1.0, 0.0, 0.0])).unwrap();
        let pool = FeaturePool::new(vec![
            DVector::from_vec(vec![0.0, 1.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 1.0]),
        ])
        .unwrap();
        assert_eq!(trgreedy_select(&Worldview::empty(3), &pool, &w).unwrap(), 0);
    }

    #[test]
    fn random_select_is_reproducible_and_respects_mask() {
        let mut pool = FeaturePool::one_hot(4);
        assert_eq!(random_select(&pool, 9).unwrap(), random_select(&pool, 9).unwrap());
        for i in 0..3 {
            pool.mark_taught(i).unwrap();
        }
        for seed in 0..20 {
            assert_eq!(random_select(&pool, seed).unwrap(), 3);
        }
        pool.mark_taught(3).unwrap();
        assert_eq!(random_select(&pool, 0), Err(Error::EmptyPool));
    }

    #[test]
    fn random_select_is_uniform() {
        let pool = FeaturePool::one_hot(4);
        let mut counts = [0usize; 4];
        let draws = 10_000;
        for seed in 0..draws {
            counts[random_select(&pool, seed).unwrap()] += 1;
        }
        // binomial standard deviation sqrt(n p (1 - p))
        let sd = (draws as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - draws as f64 / 4.0).abs() < 3.0 * sd, "{counts:?}");
        }
        let chi2: f64 = counts.iter().map(|&c| (c as f64 - 2500.0).powi(2) / 2500.0).sum();
        // 99.9% quantile of chi-square with 3 degrees of freedom
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }

    #[test]
    fn perfgreedy_picks_the_feature_revealing_the_goal() {
        let mdp = build_gridworld(&GridworldSpec::chain(5, 0.9)).unwrap();
        let w = chain_w();
        let star = optimal_policy(&mdp, &mdp.state_rewards(w.vector()).unwrap()).unwrap();
        let teacher_mu = feature_expectations_exact(&mdp, &star).unwrap().mu;
        let pool = FeaturePool::new(vec![
            DVector::from_vec(vec![0.0, 0.0, 1.0, 0.0, 0.0]),
            DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, 1.0]),
        ])
        .unwrap();
        let cfg = LearnerConfig::for_discount(0.9);
        // oracle: simulate both branches directly
        let value = |i: usize| {
            let a = Worldview::empty(5).with_row(pool.feature(i)).unwrap();
            project_learner(&mdp, &a, &a.apply(&teacher_mu), &cfg).unwrap().feature_expectations.value(w.vector())
        };
        assert!(value(1) > value(0));
        assert_eq!(perfgreedy_select(&mdp, &Worldview::empty(5), &pool, &teacher_mu, &w, &cfg).unwrap(), 1);
    }

    #[test]
    fn singleton_pools_agree_across_strategies() {
        let mdp = build_gridworld(&GridworldSpec::chain(5, 0.9)).unwrap();
        let w = chain_w();
        let teacher_mu = DVector::from_element(5, 2.0);
        let mut pool = FeaturePool::one_hot(5);
        for i in [0, 1, 3, 4] {
            pool.mark_taught(i).unwrap();
        }
        let a = Worldview::empty(5);
        let cfg = LearnerConfig::for_discount(0.9);
        let registry = StrategyRegistry::with_builtins();
        for name in ["trgreedy", "random", "perfgreedy"] {
            let ctx = SelectionContext {
                mdp: &mdp,
                worldview: &a,
                pool: &pool,
                w_star: &w,
                teacher_mu: &teacher_mu,
                learner: &cfg,
                round: 1,
                seed: 4,
            };
            assert_eq!(registry.get(name).unwrap().select(&ctx).unwrap(), 2, "{name}");
        }
    }

    #[test]
    fn registry_lookup() {
        let registry = StrategyRegistry::with_builtins();
        assert_eq!(registry.names().collect::<Vec<_>>(), vec!["perfgreedy", "random", "trgreedy"]);
        assert_eq!(registry.get("TRGreedy").unwrap().name(), "trgreedy");
        assert!(matches!(registry.get("oracle"), Err(Error::UnknownStrategy(_))));
    }
}
