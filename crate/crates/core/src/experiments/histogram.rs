use std::fmt::Write as _;

use super::table::{opt, Table};
use super::{par_trials, teacher_policy, ExperimentConfig, Outcome};
use crate::error::Result;
use crate::rng;
use crate::teacher::{run_teaching_session, SessionConfig, StrategyRegistry};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FirstTaught {
    pub trial: usize,
    pub first: Option<usize>,
    pub second: Option<usize>,
}

/// Runs one session per trial with the first configured strategy and records
/// which pool indices were taught first and second.
pub fn first_taught(cfg: &ExperimentConfig) -> Result<(usize, Vec<FirstTaught>)> {
    let gamma = cfg.gamma();
    let mdp = cfg.build_mdp(gamma)?;
    let k = mdp.n_features();
    let strategy = StrategyRegistry::with_builtins().get(&cfg.strategies[0])?;
    let trials = par_trials(cfg, cfg.trials, |trial| {
        let t = trial as u64;
        let w = cfg.reward(k, &mut rng::stream(cfg.seed, t, "reward"))?;
        let a0 = cfg.worldview.draw(k, &mut rng::stream(cfg.seed, t, "worldview"))?;
        let pool = cfg.pool.draw(k, &mut rng::stream(cfg.seed, t, "pool"))?;
        let size = pool.len();
        let teacher = teacher_policy(cfg, &mdp, &w)?;
        let session_cfg = SessionConfig {
            budget: cfg.budget,
            threshold: cfg.threshold,
            learner: cfg.learner_config(gamma),
            seed: rng::derive_seed(cfg.seed, t, "session"),
            record_timing: false,
        };
        let session = run_teaching_session(&mdp, &w, a0, pool, &teacher, strategy.as_ref(), &session_cfg)?;
        let taught = session.taught();
        Ok((size, FirstTaught { trial, first: taught.first().copied(), second: taught.get(1).copied() }))
    })?;
    let pool_size = trials.iter().map(|(size, _)| *size).max().unwrap_or(0);
    Ok((pool_size, trials.into_iter().map(|(_, rec)| rec).collect()))
}

/// `(first, second)` counts per pool index.
pub fn counts(pool_size: usize, records: &[FirstTaught]) -> Vec<(usize, usize)> {
    let mut c = vec![(0, 0); pool_size];
    for r in records {
        if let Some(i) = r.first {
            c[i].0 += 1;
        }
        if let Some(i) = r.second {
            c[i].1 += 1;
        }
    }
    c
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let (pool_size, records) = first_taught(cfg)?;
    let c = counts(pool_size, &records);
    let mut hist = Table::new("histogram", &["feature_index", "first_count", "second_count"]);
    for (i, (first, second)) in c.iter().enumerate() {
        hist.push(vec![i.to_string(), first.to_string(), second.to_string()]);
    }
    let mut per_trial = Table::new("histogram_trials", &["trial", "first", "second"]);
    for r in &records {
        per_trial.push(vec![r.trial.to_string(), opt(r.first), opt(r.second)]);
    }

    let mut summary = String::new();
    writeln!(summary, "{} sessions, strategy {}", records.len(), cfg.strategies[0]).unwrap();
    for label in ["first", "second"] {
        let mut ranked: Vec<usize> = (0..pool_size).collect();
        let count = |i: usize| if label == "first" { c[i].0 } else { c[i].1 };
        ranked.sort_by_key(|&i| (std::cmp::Reverse(count(i)), i));
        let top: Vec<String> = ranked.iter().take(5).filter(|&&i| count(i) > 0).map(|&i| format!("{i}:{}", count(i))).collect();
        writeln!(summary, "most often taught {label}: {}", top.join(" ")).unwrap();
    }
    Ok(Outcome { tables: vec![hist, per_trial], summary, violations: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{Command, PoolSpec};

    #[test]
    fn singleton_pool_is_always_taught_first() {
        let mut cfg = ExperimentConfig::defaults(Command::Histogram);
        cfg.trials = 4;
        cfg.learner.max_iterations = Some(50);
        let mut only = vec![0.0; 25];
        only[7] = 1.0;
        cfg.pool = PoolSpec::Explicit { features: vec![only] };
        let (size, records) = first_taught(&cfg).unwrap();
        assert_eq!(counts(size, &records), vec![(4, 0)]);
    }
}
