use std::fmt::Write as _;

use super::table::{float, opt, Table};
use super::{mean_std, par_trials, teacher_policy, ExperimentConfig, Outcome};
use crate::error::Result;
use crate::rng;
use crate::teacher::{run_teaching_session, SessionConfig, StrategyRegistry, TeachingSession};

pub const ROUND_COLUMNS: [&str; 9] = [
    "trial",
    "strategy",
    "round",
    "feature_index",
    "teaching_risk",
    "view_distance",
    "rel_perf",
    "perf_gap",
    "elapsed_ms",
];

pub const SUMMARY_COLUMNS: [&str; 8] = [
    "strategy",
    "round",
    "sessions",
    "mean_rel_perf",
    "std_rel_perf",
    "mean_teaching_risk",
    "timed_rounds",
    "mean_elapsed_ms",
];

#[derive(Debug, Clone)]
pub struct TrialSessions {
    pub trial: usize,
    /// One session per configured strategy, in config order.
    pub sessions: Vec<TeachingSession>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub strategy: String,
    pub round: usize,
    pub sessions: usize,
    pub mean_rel_perf: f64,
    pub std_rel_perf: f64,
    pub mean_teaching_risk: f64,
    /// Sessions that actually executed this round (stopped sessions do not).
    pub timed_rounds: usize,
    pub mean_elapsed_ms: f64,
}

/// Every strategy starts each trial from the same reward, worldview, pool and session seed.
pub fn compare(cfg: &ExperimentConfig) -> Result<Vec<TrialSessions>> {
    let gamma = cfg.gamma();
    let mdp = cfg.build_mdp(gamma)?;
    let k = mdp.n_features();
    let registry = StrategyRegistry::with_builtins();
    let strategies = cfg.strategies.iter().map(|s| registry.get(s)).collect::<Result<Vec<_>>>()?;
    par_trials(cfg, cfg.trials, |trial| {
        let t = trial as u64;
        let w = cfg.reward(k, &mut rng::stream(cfg.seed, t, "reward"))?;
        let a0 = cfg.worldview.draw(k, &mut rng::stream(cfg.seed, t, "worldview"))?;
        let pool = cfg.pool.draw(k, &mut rng::stream(cfg.seed, t, "pool"))?;
        let teacher = teacher_policy(cfg, &mdp, &w)?;
        let session_cfg = SessionConfig {
            budget: cfg.budget,
            threshold: cfg.threshold,
            learner: cfg.learner_config(gamma),
            seed: rng::derive_seed(cfg.seed, t, "session"),
            record_timing: cfg.record_timing,
        };
        let sessions = strategies
            .iter()
            .map(|s| run_teaching_session(&mdp, &w, a0.clone(), pool.clone(), &teacher, s.as_ref(), &session_cfg))
            .collect::<Result<Vec<_>>>()?;
        Ok(TrialSessions { trial, sessions })
    })
}

/// Per strategy and round `0..=budget`. Sessions that ended early carry their
/// last relative performance and risk forward; timing only averages executed rounds.
pub fn aggregate(trials: &[TrialSessions], strategies: &[String], budget: usize) -> Vec<SummaryRow> {
    let mut out = Vec::new();
    for (si, name) in strategies.iter().enumerate() {
        for round in 0..=budget {
            let sessions: Vec<&TeachingSession> = trials.iter().map(|t| &t.sessions[si]).collect();
            let at = |s: &TeachingSession| s.rounds.get(round).unwrap_or_else(|| s.last()).clone();
            let perf: Vec<f64> = sessions.iter().map(|s| at(s).rel_perf).collect();
            let risk: Vec<f64> = sessions.iter().map(|s| at(s).teaching_risk).collect();
            let timed: Vec<f64> = sessions.iter().filter_map(|s| s.rounds.get(round)).map(|r| r.elapsed_ms).collect();
            let (mean_rel_perf, std_rel_perf) = mean_std(&perf);
            out.push(SummaryRow {
                strategy: name.clone(),
                round,
                sessions: sessions.len(),
                mean_rel_perf,
                std_rel_perf,
                mean_teaching_risk: mean_std(&risk).0,
                timed_rounds: timed.len(),
                mean_elapsed_ms: mean_std(&timed).0,
            });
        }
    }
    out
}

pub fn rounds_table(trials: &[TrialSessions]) -> Table {
    let mut t = Table::new("compare_rounds", &ROUND_COLUMNS);
    for trial in trials {
        for s in &trial.sessions {
            for r in &s.rounds {
                t.push(vec![
                    trial.trial.to_string(),
                    s.strategy.clone(),
                    r.round.to_string(),
                    opt(r.feature_index),
                    float(r.teaching_risk),
                    float(r.view_distance),
                    float(r.rel_perf),
                    float(r.perf_gap),
                    float(r.elapsed_ms),
                ]);
            }
        }
    }
    t
}

pub fn summary_table(rows: &[SummaryRow]) -> Table {
    let mut t = Table::new("compare_summary", &SUMMARY_COLUMNS);
    for r in rows {
        t.push(vec![
            r.strategy.clone(),
            r.round.to_string(),
            r.sessions.to_string(),
            float(r.mean_rel_perf),
            float(r.std_rel_perf),
            float(r.mean_teaching_risk),
            r.timed_rounds.to_string(),
            float(r.mean_elapsed_ms),
        ]);
    }
    t
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let trials = compare(cfg)?;
    let summary_rows = aggregate(&trials, &cfg.strategies, cfg.budget);
    let mut summary = String::new();
    writeln!(summary, "{:<12} {:>5} {:>10} {:>10} {:>10} {:>12}", "strategy", "round", "mean_perf", "std_perf", "mean_rho", "ms/round")
        .unwrap();
    for r in &summary_rows {
        writeln!(
            summary,
            "{:<12} {:>5} {:>10.4} {:>10.4} {:>10.4} {:>12.3}",
            r.strategy, r.round, r.mean_rel_perf, r.std_rel_perf, r.mean_teaching_risk, r.mean_elapsed_ms
        )
        .unwrap();
    }
    Ok(Outcome { tables: vec![rounds_table(&trials), summary_table(&summary_rows)], summary, violations: 0 })
}
