use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DVector;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::Command;
use crate::error::{Error, Result};
use crate::learner::LearnerConfig;
use crate::linalg::{RewardWeights, Worldview};
use crate::mdp::{build_gridworld, GridworldSpec, Mdp};
use crate::rng;
use crate::teacher::{FeaturePool, StrategyRegistry};

pub const BUILTIN_SCENARIOS: [&str; 3] = ["fig1-chain", "fig4-obstacles", "random-grid"];

const DEFAULT_GAMMA: f64 = 0.9;

/// Either a builtin name or a full gridworld description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scenario {
    Builtin(String),
    Gridworld(GridworldSpec),
}

impl Scenario {
    pub fn builtin(name: &str) -> Self {
        Scenario::Builtin(name.to_string())
    }

    fn validate(&self) -> Result<()> {
        match self {
            Scenario::Builtin(name) if !BUILTIN_SCENARIOS.contains(&name.as_str()) => Err(Error::Config(format!(
                "unknown scenario {name:?}; builtins are {}",
                BUILTIN_SCENARIOS.join(", ")
            ))),
            Scenario::Builtin(_) => Ok(()),
            Scenario::Gridworld(spec) => spec.validate(),
        }
    }

    pub fn default_gamma(&self) -> f64 {
        match self {
            Scenario::Builtin(_) => DEFAULT_GAMMA,
            Scenario::Gridworld(spec) => spec.gamma,
        }
    }

    pub fn gridworld(&self, gamma: f64) -> GridworldSpec {
        let mut spec = match self {
            Scenario::Builtin(name) if name == "fig1-chain" => GridworldSpec::chain(5, gamma),
            Scenario::Builtin(_) => GridworldSpec::square(10, 2, gamma),
            Scenario::Gridworld(spec) => spec.clone(),
        };
        spec.gamma = gamma;
        spec
    }

    /// True reward weights for one trial. Scenarios without fixed weights draw a
    /// Gaussian direction.
    pub fn reward<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<RewardWeights> {
        match self {
            Scenario::Builtin(name) if name == "fig1-chain" => {
                RewardWeights::normalized(DVector::from_vec(vec![-1.0, -0.5, 0.0, 0.5, 1.0]))
            }
            Scenario::Builtin(name) if name == "fig4-obstacles" => obstacle_reward(k, rng),
            Scenario::Gridworld(GridworldSpec { reward_weights: Some(w), .. }) => {
                RewardWeights::normalized(DVector::from_column_slice(w))
            }
            _ => RewardWeights::new(rng::unit_vector(rng, k)),
        }
    }
}

/// +1 on cells 4 and 9, -1 on the obstacles 18 and 23, small noise elsewhere.
fn obstacle_reward<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<RewardWeights> {
    let noise = Normal::new(0.0, 0.01).expect("valid normal");
    let w = DVector::from_fn(k, |i, _| match i {
        4 | 9 => 1.0,
        18 | 23 => -1.0,
        _ => noise.sample(rng),
    });
    RewardWeights::normalized(w)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WorldviewSpec {
    /// Fresh `rows x k` matrix with standard normal entries per trial.
    Random { rows: usize },
    /// Fixed matrix, row-major.
    Explicit { rows: usize, cols: usize, data: Vec<f64> },
    Identity,
    Empty,
}

impl WorldviewSpec {
    pub fn draw<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Worldview> {
        match self {
            WorldviewSpec::Random { rows } => Worldview::new(rng::gaussian_matrix(rng, *rows, k)),
            WorldviewSpec::Explicit { rows, cols, data } => {
                if *cols != k {
                    return Err(Error::Config(format!("worldview has {cols} columns but the scenario has {k} features")));
                }
                Worldview::from_row_major(*rows, *cols, data)
            }
            WorldviewSpec::Identity => Ok(Worldview::identity(k)),
            WorldviewSpec::Empty => Ok(Worldview::empty(k)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolSpec {
    OneHot,
    /// `size` independent uniformly random unit vectors per trial.
    RandomUnit { size: usize },
    Explicit { features: Vec<Vec<f64>> },
}

impl PoolSpec {
    pub fn draw<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<FeaturePool> {
        match self {
            PoolSpec::OneHot => Ok(FeaturePool::one_hot(k)),
            PoolSpec::RandomUnit { size } => FeaturePool::random_unit(rng, k, *size),
            PoolSpec::Explicit { features } => {
                if let Some(f) = features.iter().find(|f| f.len() != k) {
                    return Err(Error::DimensionMismatch { expected: k, got: f.len() });
                }
                FeaturePool::new(features.iter().map(|f| DVector::from_column_slice(f)).collect())
            }
        }
    }
}

/// Inclusive range of worldview row counts; the sweep cycles through it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LearnerOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub match_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub trials: usize,
    pub seed: u64,
    /// Discount factors to run; empty means the scenario's own.
    #[serde(default)]
    pub gammas: Vec<f64>,
    pub worldview: WorldviewSpec,
    pub pool: PoolSpec,
    pub strategies: Vec<String>,
    pub budget: usize,
    pub threshold: f64,
    /// Fixed true reward weights (normalized); overrides the scenario.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reward: Option<Vec<f64>>,
    /// Deterministic teaching policy, one action per state; defaults to an optimal policy.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub teacher_policy: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<EllRange>,
    /// Learner-reward directions sampled per instance by the witness check.
    pub directions: usize,
    #[serde(default)]
    pub learner: LearnerOverrides,
    pub record_timing: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn defaults(command: Command) -> Self {
        let mut cfg = ExperimentConfig {
            scenario: Scenario::builtin("random-grid"),
            trials: 30,
            seed: 0,
            gammas: Vec::new(),
            worldview: WorldviewSpec::Random { rows: 5 },
            pool: PoolSpec::OneHot,
            strategies: vec!["trgreedy".into()],
            budget: 10,
            threshold: 1e-2,
            reward: None,
            teacher_policy: None,
            ell: None,
            directions: 200,
            learner: LearnerOverrides::default(),
            record_timing: true,
            threads: None,
            output: None,
        };
        match command {
            Command::SweepRisk => {
                cfg.trials = 200;
                cfg.gammas = vec![0.75];
            }
            Command::Compare => {
                cfg.pool = PoolSpec::RandomUnit { size: 30 };
                // PerfGreedy trains one learner per candidate per round
                cfg.learner.max_iterations = Some(300);
                cfg.strategies = vec!["trgreedy".into(), "random".into(), "perfgreedy".into()];
            }
            Command::Histogram => {
                cfg.scenario = Scenario::builtin("fig4-obstacles");
                cfg.trials = 100;
                cfg.budget = 2;
                cfg.threshold = 0.0;
                // at the default cap the 100 sessions take over ten minutes
                cfg.learner.max_iterations = Some(5000);
            }
            Command::VerifyBounds => {
                cfg.scenario = Scenario::Gridworld(GridworldSpec::square(8, 2, DEFAULT_GAMMA));
                cfg.trials = 100;
            }
            Command::Teach => {
                cfg.scenario = Scenario::builtin("fig1-chain");
                cfg.trials = 1;
                cfg.worldview = WorldviewSpec::Explicit { rows: 1, cols: 5, data: vec![0.0, 0.0, 1.0, 0.0, 0.0] };
                cfg.budget = 5;
                cfg.threshold = 1e-3;
            }
        }
        cfg
    }

    /// Command defaults overlaid with the top-level keys of a JSON file.
    pub fn load(command: Command, path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(Self::defaults(command));
        };
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(command, &text)
    }

    pub fn from_json(command: Command, text: &str) -> Result<Self> {
        let user: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        let Value::Object(user) = user else {
            return Err(Error::Config("config must be a JSON object".into()));
        };
        let mut merged = serde_json::to_value(Self::defaults(command)).expect("defaults serialize");
        let base = merged.as_object_mut().expect("object");
        base.extend(user);
        let cfg: Self = serde_json::from_value(merged).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.trials == 0 {
            return Err(Error::Config("trials must be at least 1".into()));
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && **g < 1.0)) {
            return Err(Error::Config(format!("gamma {g} outside (0, 1)")));
        }
        if self.threshold.is_nan() {
            return Err(Error::Config("threshold is NaN".into()));
        }
        if self.directions == 0 {
            return Err(Error::Config("directions must be at least 1".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("no strategies given".into()));
        }
        let registry = StrategyRegistry::with_builtins();
        for name in &self.strategies {
            registry.get(name).map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(EllRange { min, max }) = self.ell {
            if min == 0 || min > max {
                return Err(Error::Config(format!("bad ell range [{min}, {max}]")));
            }
        }
        if self.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(())
    }

    pub fn gammas(&self) -> Vec<f64> {
        if self.gammas.is_empty() {
            vec![self.scenario.default_gamma()]
        } else {
            self.gammas.clone()
        }
    }

    /// First configured discount; single-gamma commands use only this one.
    pub fn gamma(&self) -> f64 {
        self.gammas()[0]
    }

    pub fn build_mdp(&self, gamma: f64) -> Result<Mdp> {
        build_gridworld(&self.scenario.gridworld(gamma))
    }

    pub fn reward<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<RewardWeights> {
        match &self.reward {
            Some(w) if w.len() != k => Err(Error::DimensionMismatch { expected: k, got: w.len() }),
            Some(w) => RewardWeights::normalized(DVector::from_column_slice(w)),
            None => self.scenario.reward(k, rng),
        }
    }

    pub fn learner_config(&self, gamma: f64) -> LearnerConfig {
        let mut cfg = LearnerConfig::for_discount(gamma);
        if let Some(t) = self.learner.match_tolerance {
            cfg.match_tolerance = t;
        }
        if let Some(n) = self.learner.max_iterations {
            cfg.max_iterations = n;
        }
        cfg
    }

    pub fn ell_range(&self, k: usize) -> EllRange {
        self.ell.unwrap_or(EllRange { min: 1, max: k })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_keys_override_defaults() {
        let cfg = ExperimentConfig::from_json(Command::Compare, r#"{"trials": 3, "pool": {"random-unit": {"size": 7}}}"#)
            .unwrap();
        assert_eq!(cfg.trials, 3);
        assert_eq!(cfg.pool, PoolSpec::RandomUnit { size: 7 });
        assert_eq!(cfg.strategies.len(), 3);
    }

    #[test]
    fn scenario_accepts_name_or_gridworld() {
        let cfg = ExperimentConfig::from_json(Command::Teach, r#"{"scenario": "fig4-obstacles"}"#).unwrap();
        assert_eq!(cfg.scenario, Scenario::builtin("fig4-obstacles"));
        let cfg = ExperimentConfig::from_json(
            Command::SweepRisk,
            r#"{"scenario": {"grid_size": 4, "macrocell_size": 2, "gamma": 0.8}, "gammas": []}"#,
        )
        .unwrap();
        assert_eq!(cfg.gammas(), vec![0.8]);
        assert_eq!(cfg.build_mdp(cfg.gamma()).unwrap().n_features(), 4);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        for bad in [
            r#"{"trials": 0}"#,
            r#"{"scenario": "fig9"}"#,
            r#"{"gammas": [1.0]}"#,
            r#"{"strategies": ["oracle"]}"#,
            r#"{"unknown_key": 1}"#,
            r#"{"ell": {"min": 3, "max": 2}}"#,
            r#"[1, 2]"#,
        ] {
            assert!(matches!(ExperimentConfig::from_json(Command::Compare, bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn obstacle_reward_has_four_dominant_cells() {
        let w = Scenario::builtin("fig4-obstacles").reward(25, &mut rng::stream(1, 0, "t")).unwrap();
        let mut idx: Vec<usize> = (0..25).collect();
        idx.sort_by(|&a, &b| w.vector()[b].abs().total_cmp(&w.vector()[a].abs()));
        let mut top = idx[..4].to_vec();
        top.sort();
        assert_eq!(top, vec![4, 9, 18, 23]);
        assert!(w.vector()[4] > 0.0 && w.vector()[18] < 0.0);
    }

    #[test]
    fn defaults_validate() {
        for c in Command::ALL {
            ExperimentConfig::defaults(c).validate().unwrap();
        }
    }
}
