//! Seeded experiment runners behind the `teachrisk` command line tool. Each
//! command produces CSV tables and a short text summary.

pub mod compare;
pub mod config;
pub mod histogram;
pub mod sweep;
pub mod table;
pub mod teach;
pub mod verify;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

pub use config::{EllRange, ExperimentConfig, LearnerOverrides, PoolSpec, Scenario, WorldviewSpec, BUILTIN_SCENARIOS};
pub use table::Table;

use crate::error::{Error, Result};
use crate::mdp::{optimal_policy, Mdp, Policy};
use crate::linalg::RewardWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Command {
    SweepRisk,
    Compare,
    Histogram,
    VerifyBounds,
    Teach,
}

impl Command {
    pub const ALL: [Command; 5] =
        [Command::SweepRisk, Command::Compare, Command::Histogram, Command::VerifyBounds, Command::Teach];

    pub fn name(self) -> &'static str {
        match self {
            Command::SweepRisk => "sweep-risk",
            Command::Compare => "compare",
            Command::Histogram => "histogram",
            Command::VerifyBounds => "verify-bounds",
            Command::Teach => "teach",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown command {s:?}")))
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub tables: Vec<Table>,
    pub summary: String,
    /// Failed property checks; only `verify-bounds` reports any.
    pub violations: usize,
}

impl Outcome {
    pub fn table(&self, name: &str) -> Option<&Table> {
        self.tables.iter().find(|t| t.name == name)
    }
}

pub fn run(command: Command, cfg: &ExperimentConfig) -> Result<Outcome> {
    cfg.validate()?;
    match command {
        Command::SweepRisk => sweep::run(cfg),
        Command::Compare => compare::run(cfg),
        Command::Histogram => histogram::run(cfg),
        Command::VerifyBounds => verify::run(cfg),
        Command::Teach => teach::run(cfg),
    }
}

/// Runs `f` for every trial index on the worker pool; results come back in trial order.
pub(crate) fn par_trials<T, F>(cfg: &ExperimentConfig, trials: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    let work = || (0..trials).into_par_iter().map(&f).collect::<Result<Vec<T>>>();
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    }
}

/// The configured teaching policy, or an optimal one for `w`.
pub(crate) fn teacher_policy(cfg: &ExperimentConfig, mdp: &Mdp, w: &RewardWeights) -> Result<Policy> {
    match &cfg.teacher_policy {
        Some(actions) => Policy::deterministic(mdp, actions),
        None => optimal_policy(mdp, &mdp.state_rewards(w.vector())?),
    }
}

pub(crate) fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
