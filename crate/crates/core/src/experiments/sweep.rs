use std::fmt::Write as _;

use super::table::{float, Table};
use super::{mean_std, par_trials, teacher_policy, ExperimentConfig, Outcome};
use crate::error::{Error, Result};
use crate::learner::project_learner;
use crate::linalg::{teaching_risk, Worldview};
use crate::mdp::{feature_expectations_exact, PerformanceScale};
use crate::rng;

pub const COLUMNS: [&str; 7] =
    ["gamma", "trial", "ell", "teaching_risk", "rel_perf", "learner_converged", "learner_iterations"];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub trial: usize,
    pub ell: usize,
    pub teaching_risk: f64,
    pub rel_perf: f64,
    pub learner_converged: bool,
    pub learner_iterations: usize,
}

/// One learner per trial and discount: Gaussian `ell x k` worldview, random
/// `w*`, teacher optimal for `w*`. Trial `i` uses `ell = min + i mod (max - min + 1)`
/// and the same draws for every discount.
pub fn sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::new();
    for gamma in cfg.gammas() {
        let mdp = cfg.build_mdp(gamma)?;
        let k = mdp.n_features();
        let range = cfg.ell_range(k);
        if range.max > k {
            return Err(Error::Config(format!("ell up to {} exceeds k = {k}", range.max)));
        }
        let learner_cfg = cfg.learner_config(gamma);
        let per_trial = par_trials(cfg, cfg.trials, |trial| {
            let ell = range.min + trial % (range.max - range.min + 1);
            let mut r = rng::stream(cfg.seed, trial as u64, "sweep");
            let w = cfg.reward(k, &mut r)?;
            let a = Worldview::new(rng::gaussian_matrix(&mut r, ell, k))?;
            let scale = match PerformanceScale::new(&mdp, w.vector()) {
                Ok(s) => s,
                Err(Error::UndefinedRelativePerformance { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            let teacher = teacher_policy(cfg, &mdp, &w)?;
            let target = a.apply(&feature_expectations_exact(&mdp, &teacher)?.mu);
            let learner = project_learner(&mdp, &a, &target, &learner_cfg)?;
            Ok(Some(SweepRow {
                gamma,
                trial,
                ell,
                teaching_risk: teaching_risk(&a, &w)?,
                rel_perf: scale.relative(learner.feature_expectations.value(w.vector())),
                learner_converged: learner.converged,
                learner_iterations: learner.iterations(),
            }))
        })?;
        rows.extend(per_trial.into_iter().flatten());
    }
    Ok(rows)
}

pub fn to_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new("sweep_risk", &COLUMNS);
    for r in rows {
        t.push(vec![
            float(r.gamma),
            r.trial.to_string(),
            r.ell.to_string(),
            float(r.teaching_risk),
            float(r.rel_perf),
            r.learner_converged.to_string(),
            r.learner_iterations.to_string(),
        ]);
    }
    t
}

/// Relative performances of rows with teaching risk in `[lo, hi)`.
pub fn bucket(rows: &[SweepRow], gamma: f64, lo: f64, hi: f64) -> Vec<f64> {
    rows.iter()
        .filter(|r| r.gamma == gamma && r.teaching_risk >= lo && r.teaching_risk < hi)
        .map(|r| r.rel_perf)
        .collect()
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let rows = sweep(cfg)?;
    let mut summary = String::new();
    writeln!(summary, "{:>6} {:>6} {:>10} {:>16} {:>16}", "gamma", "rows", "mean_perf", "std(rho<0.3)", "std(rho>0.7)")
        .unwrap();
    for gamma in cfg.gammas() {
        let all = bucket(&rows, gamma, 0.0, f64::INFINITY);
        let (low, high) = (bucket(&rows, gamma, 0.0, 0.3), bucket(&rows, gamma, 0.7, f64::INFINITY));
        writeln!(
            summary,
            "{gamma:>6} {:>6} {:>10.4} {:>16.4} {:>16.4}",
            all.len(),
            mean_std(&all).0,
            mean_std(&low).1,
            mean_std(&high).1
        )
        .unwrap();
    }
    Ok(Outcome { tables: vec![to_table(&rows)], summary, violations: 0 })
}
