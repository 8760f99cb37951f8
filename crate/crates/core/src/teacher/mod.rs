//! Round-based feature teaching: the teacher appends features to the learner's
//! worldview and the learner retrains against its view of the teacher's
//! feature expectations.

mod strategy;
mod witness;

pub use strategy::{
    perfgreedy_select, random_select, trgreedy_select, PerfGreedy, RandomFeature, SelectionContext,
    StrategyRegistry, TeachingStrategy, TrGreedy,
};
pub use witness::{suboptimality_witness, view_suboptimality, WitnessMethod, WitnessReport, ENUMERATION_LIMIT};

use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;

use crate::error::{Error, Result};
use crate::learner::{project_learner, LearnerConfig, LearnerResult};
use crate::linalg::{teaching_risk, RewardWeights, Worldview};
use crate::mdp::{feature_expectations_exact, Mdp, MixedPolicy, PerformanceScale, Policy};
use crate::rng;

/// The teachable feature set `F` and which of its members were already taught.
#[derive(Debug, Clone)]
pub struct FeaturePool {
    features: Vec<DVector<f64>>,
    taught: Vec<bool>,
}

impl FeaturePool {
    pub fn new(features: Vec<DVector<f64>>) -> Result<Self> {
        let Some(first) = features.first() else {
            return Err(Error::InvalidPool("pool is empty".into()));
        };
        let k = first.len();
        if k == 0 {
            return Err(Error::InvalidPool("features must have positive dimension".into()));
        }
        for f in &features {
            if f.len() != k {
                return Err(Error::DimensionMismatch { expected: k, got: f.len() });
            }
            if f.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidPool("non-finite feature entry".into()));
            }
        }
        let taught = vec![false; features.len()];
        Ok(FeaturePool { features, taught })
    }

    /// `{e_1, ..., e_k}`.
    pub fn one_hot(k: usize) -> Self {
        let features = (0..k).map(|i| DVector::from_fn(k, |j, _| if i == j { 1.0 } else { 0.0 })).collect();
        FeaturePool { features, taught: vec![false; k] }
    }

    /// `size` independent uniformly random unit vectors in `R^k`.
    pub fn random_unit<R: Rng + ?Sized>(rng: &mut R, k: usize, size: usize) -> Result<Self> {
        FeaturePool::new((0..size).map(|_| rng::unit_vector(rng, k)).collect())
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features[0].len()
    }

    pub fn feature(&self, index: usize) -> &DVector<f64> {
        &self.features[index]
    }

    pub fn is_taught(&self, index: usize) -> bool {
        self.taught[index]
    }

    pub fn untaught(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.features.len()).filter(|&i| !self.taught[i])
    }

    pub fn has_untaught(&self) -> bool {
        self.taught.iter().any(|t| !t)
    }

    pub fn mark_taught(&mut self, index: usize) -> Result<()> {
        match self.taught.get_mut(index) {
            None => Err(Error::InvalidPool(format!("feature index {index} out of range"))),
            Some(true) => Err(Error::InvalidPool(format!("feature {index} was already taught"))),
            Some(flag) => {
                *flag = true;
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    /// Feature budget `B`.
    pub budget: usize,
    /// Stop once `|<w*, mu(pi^L)> - <w*, mu(pi^T)>| <= threshold`.
    pub threshold: f64,
    pub learner: LearnerConfig,
    pub seed: u64,
    /// Record wall-clock time per round; when off, `elapsed_ms` is 0 so logs are reproducible.
    pub record_timing: bool,
}

/// One row of the session log. Round 0 is the learner trained on the initial worldview.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub feature_index: Option<usize>,
    pub teaching_risk: f64,
    pub view_distance: f64,
    pub learner_converged: bool,
    pub true_perf: f64,
    pub rel_perf: f64,
    /// `|<w*, mu(pi^L) - mu(pi^T)>|`.
    pub perf_gap: f64,
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone)]
pub struct TeachingSession {
    pub strategy: String,
    pub budget: usize,
    pub threshold: f64,
    pub rounds: Vec<RoundRecord>,
    pub final_worldview: Worldview,
    pub final_policy: MixedPolicy,
    /// The performance gap fell to the threshold before the budget was used up.
    pub stopped_early: bool,
    /// The pool ran out of untaught features before the budget was used up.
    pub exhausted: bool,
}

impl TeachingSession {
    /// Features taught, in order.
    pub fn taught(&self) -> Vec<usize> {
        self.rounds.iter().filter_map(|r| r.feature_index).collect()
    }

    pub fn last(&self) -> &RoundRecord {
        self.rounds.last().expect("a session always has the initial round")
    }
}

/// Runs the teaching loop: while the true performance gap exceeds the threshold
/// and budget remains, select a feature, append it to the worldview, and retrain
/// the learner against `A mu(pi^T)`.
pub fn run_teaching_session(
    mdp: &Mdp,
    w_star: &RewardWeights,
    initial_worldview: Worldview,
    mut pool: FeaturePool,
    teacher_policy: &Policy,
    strategy: &dyn TeachingStrategy,
    cfg: &SessionConfig,
) -> Result<TeachingSession> {
    if pool.dim() != mdp.n_features() || w_star.dim() != mdp.n_features() {
        return Err(Error::DimensionMismatch { expected: mdp.n_features(), got: pool.dim() });
    }
    let scale = PerformanceScale::new(mdp, w_star.vector())?;
    let teacher_mu = feature_expectations_exact(mdp, teacher_policy)?.mu;
    let teacher_value = teacher_mu.dot(w_star.vector());

    let mut worldview = initial_worldview;
    let clock = Instant::now();
    let mut learner = project_learner(mdp, &worldview, &worldview.apply(&teacher_mu), &cfg.learner)?;
    let elapsed = elapsed_ms(cfg, clock);
    let mut rounds = vec![record(0, None, &worldview, w_star, &learner, &scale, teacher_value, elapsed)?];
    let mut stopped_early = false;
    let mut exhausted = false;

    for round in 1..=cfg.budget {
        if rounds.last().expect("nonempty").perf_gap <= cfg.threshold {
            stopped_early = true;
            break;
        }
        if !pool.has_untaught() {
            exhausted = true;
            break;
        }
        let clock = Instant::now();
        let ctx = SelectionContext {
            mdp,
            worldview: &worldview,
            pool: &pool,
            w_star,
            teacher_mu: &teacher_mu,
            learner: &cfg.learner,
            round,
            seed: cfg.seed,
        };
        let chosen = strategy.select(&ctx)?;
        pool.mark_taught(chosen)?;
        worldview.append_row(pool.feature(chosen))?;
        learner = project_learner(mdp, &worldview, &worldview.apply(&teacher_mu), &cfg.learner)?;
        let elapsed = elapsed_ms(cfg, clock);
        rounds.push(record(round, Some(chosen), &worldview, w_star, &learner, &scale, teacher_value, elapsed)?);
    }

    Ok(TeachingSession {
        strategy: strategy.name().to_string(),
        budget: cfg.budget,
        threshold: cfg.threshold,
        rounds,
        final_worldview: worldview,
        final_policy: learner.mixed_policy,
        stopped_early,
        exhausted,
    })
}

fn elapsed_ms(cfg: &SessionConfig, clock: Instant) -> f64 {
    if cfg.record_timing {
        clock.elapsed().as_secs_f64() * 1e3
    } else {
        0.0
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    round: usize,
    feature_index: Option<usize>,
    worldview: &Worldview,
    w_star: &RewardWeights,
    learner: &LearnerResult,
    scale: &PerformanceScale,
    teacher_value: f64,
    elapsed_ms: f64,
) -> Result<RoundRecord> {
    let true_perf = learner.feature_expectations.value(w_star.vector());
    Ok(RoundRecord {
        round,
        feature_index,
        teaching_risk: teaching_risk(worldview, w_star)?,
        view_distance: learner.final_view_distance,
        learner_converged: learner.converged,
        true_perf,
        rel_perf: scale.relative(true_perf),
        perf_gap: (true_perf - teacher_value).abs(),
        elapsed_ms,
    })
}
