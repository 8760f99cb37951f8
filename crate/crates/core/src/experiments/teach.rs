use std::fmt::Write as _;

use super::table::{float, opt, Table};
use super::{teacher_policy, ExperimentConfig, Outcome};
use crate::error::Result;
use crate::rng;
use crate::teacher::{run_teaching_session, SessionConfig, StrategyRegistry, TeachingSession};

pub const COLUMNS: [&str; 8] =
    ["round", "strategy", "feature_index", "teaching_risk", "view_distance", "true_perf", "rel_perf", "elapsed_ms"];

/// A single session with the first configured strategy; draws use trial index 0.
pub fn teach(cfg: &ExperimentConfig) -> Result<TeachingSession> {
    let gamma = cfg.gamma();
    let mdp = cfg.build_mdp(gamma)?;
    let k = mdp.n_features();
    let strategy = StrategyRegistry::with_builtins().get(&cfg.strategies[0])?;
    let w = cfg.reward(k, &mut rng::stream(cfg.seed, 0, "reward"))?;
    let a0 = cfg.worldview.draw(k, &mut rng::stream(cfg.seed, 0, "worldview"))?;
    let pool = cfg.pool.draw(k, &mut rng::stream(cfg.seed, 0, "pool"))?;
    let teacher = teacher_policy(cfg, &mdp, &w)?;
    let session_cfg = SessionConfig {
        budget: cfg.budget,
        threshold: cfg.threshold,
        learner: cfg.learner_config(gamma),
        seed: rng::derive_seed(cfg.seed, 0, "session"),
        record_timing: cfg.record_timing,
    };
    run_teaching_session(&mdp, &w, a0, pool, &teacher, strategy.as_ref(), &session_cfg)
}

pub fn session_table(session: &TeachingSession) -> Table {
    let mut t = Table::new("teach_session", &COLUMNS);
    for r in &session.rounds {
        t.push(vec![
            r.round.to_string(),
            session.strategy.clone(),
            opt(r.feature_index),
            float(r.teaching_risk),
            float(r.view_distance),
            float(r.true_perf),
            float(r.rel_perf),
            float(r.elapsed_ms),
        ]);
    }
    t
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let session = teach(cfg)?;
    let mut summary = String::new();
    writeln!(summary, "{:>5} {:>8} {:>10} {:>10} {:>10} {:>10}", "round", "feature", "rho", "view_dist", "rel_perf", "gap").unwrap();
    for r in &session.rounds {
        writeln!(
            summary,
            "{:>5} {:>8} {:>10.6} {:>10.3e} {:>10.6} {:>10.3e}",
            r.round,
            opt(r.feature_index),
            r.teaching_risk,
            r.view_distance,
            r.rel_perf,
            r.perf_gap
        )
        .unwrap();
    }
    writeln!(
        summary,
        "strategy {}: taught {:?}, stopped early: {}, exhausted: {}",
        session.strategy,
        session.taught(),
        session.stopped_early,
        session.exhausted
    )
    .unwrap();
    Ok(Outcome { tables: vec![session_table(&session)], summary, violations: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{Command, WorldviewSpec};

    #[test]
    fn identity_worldview_teaches_nothing() {
        let mut cfg = ExperimentConfig::defaults(Command::Teach);
        cfg.worldview = WorldviewSpec::Identity;
        let out = run(&cfg).unwrap();
        assert_eq!(out.tables[0].rows.len(), 1);
        assert!(out.summary.contains("stopped early: true"));
    }

    #[test]
    fn exhausted_pool_is_reported() {
        let mut cfg = ExperimentConfig::defaults(Command::Teach);
        cfg.worldview = WorldviewSpec::Empty;
        cfg.pool = crate::experiments::PoolSpec::Explicit { features: vec![vec![0.0, 0.0, 1.0, 0.0, 0.0]] };
        cfg.threshold = 1e-9;
        let out = run(&cfg).unwrap();
        assert!(out.summary.contains("exhausted: true"), "{}", out.summary);
    }
}
