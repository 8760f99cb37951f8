use std::collections::BTreeMap;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::Rng;

use super::table::{float, Table};
use super::{par_trials, teacher_policy, ExperimentConfig, Outcome, WorldviewSpec};
use crate::error::Result;
use crate::learner::project_learner;
use crate::linalg::{
    kernel_projection, learner_reward_vector, max_risk_direction, pseudoinverse, sigma_min_nonzero, spectral_norm,
    teaching_risk, theorem1_bound, theorem2_bound, Worldview,
};
use crate::mdp::feature_expectations_exact;
use crate::rng;
use crate::teacher::{suboptimality_witness, view_suboptimality};

/// Allowed negative slack for the two performance bounds.
pub const BOUND_SLACK: f64 = 1e-6;
pub const ESTIMATE_TOL: f64 = 1e-9;
pub const PENROSE_TOL: f64 = 1e-8;
/// `theorem2` rows with risk at or above `1 - RISK_CUTOFF` are reported as infinite.
pub const RISK_CUTOFF: f64 = 1e-6;
/// Witness checks run only on instances with at least this much risk.
pub const WITNESS_MIN_RISK: f64 = 0.05;
pub const WITNESS_FRACTION: f64 = 0.95;

pub const COLUMNS: [&str; 7] = ["check", "trial", "ell", "lhs", "rhs", "slack", "status"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Status {
    Pass,
    Fail,
    /// The bound is infinite; nothing to check.
    Infinite,
    /// The instance does not meet the check's precondition.
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Infinite => "infinite",
            Status::Skipped => "skipped",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub check: &'static str,
    pub trial: usize,
    pub ell: usize,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs - lhs`, or the margin over the required fraction for the witness check.
    pub slack: f64,
    pub status: Status,
}

fn inequality(check: &'static str, trial: usize, ell: usize, lhs: f64, rhs: f64, tol: f64) -> Check {
    let slack = rhs - lhs;
    let status = if rhs.is_infinite() {
        Status::Infinite
    } else if slack >= -tol {
        Status::Pass
    } else {
        Status::Fail
    };
    Check { check, trial, ell, lhs, rhs, slack, status }
}

fn skipped(check: &'static str, trial: usize, ell: usize) -> Check {
    Check { check, trial, ell, lhs: f64::NAN, rhs: f64::NAN, slack: f64::NAN, status: Status::Skipped }
}

/// Largest entry-wise residual over the four Penrose identities.
pub fn penrose_residual(a: &DMatrix<f64>, p: &DMatrix<f64>) -> f64 {
    let apa = a * p * a - a;
    let pap = p * a * p - p;
    let ap = a * p;
    let pa = p * a;
    [apa.amax(), pap.amax(), (&ap - ap.transpose()).amax(), (&pa - pa.transpose()).amax()]
        .into_iter()
        .fold(0.0, f64::max)
}

/// All checks for one random instance.
pub fn check_instance(cfg: &ExperimentConfig, mdp: &crate::mdp::Mdp, trial: usize) -> Result<Vec<Check>> {
    let k = mdp.n_features();
    let mut r = rng::stream(cfg.seed, trial as u64, "verify");
    let w = cfg.reward(k, &mut r)?;
    let a = match cfg.worldview {
        WorldviewSpec::Random { .. } => {
            let range = cfg.ell_range(k);
            let ell = r.random_range(range.min..=range.max);
            Worldview::new(rng::gaussian_matrix(&mut r, ell, k))?
        }
        ref spec => spec.draw(k, &mut r)?,
    };
    let ell = a.rows();
    let rho = teaching_risk(&a, &w)?;
    let diam = mdp.diameter_upper_bound();
    let teacher = teacher_policy(cfg, mdp, &w)?;
    let teacher_mu = feature_expectations_exact(mdp, &teacher)?;
    let mut out = Vec::new();

    let learner = project_learner(mdp, &a, &a.apply(&teacher_mu.mu), &cfg.learner_config(mdp.gamma()))?;
    let gap = (teacher_mu.value(w.vector()) - learner.feature_expectations.value(w.vector())).abs();
    let sigma = sigma_min_nonzero(&a).unwrap_or(0.0);
    let bound = if ell == 0 { diam * rho } else { theorem1_bound(learner.final_view_distance, sigma, rho, diam) };
    out.push(inequality("theorem1", trial, ell, gap, bound, BOUND_SLACK));

    if ell == 0 || rho >= 1.0 - RISK_CUTOFF {
        out.push(Check { status: Status::Infinite, ..inequality("theorem2", trial, ell, f64::NAN, f64::INFINITY, 0.0) });
    } else {
        let wl = learner_reward_vector(&a, &w)?;
        let subopt = view_suboptimality(mdp, &a, &teacher, &wl)?;
        out.push(inequality("theorem2", trial, ell, subopt, theorem2_bound(diam, spectral_norm(&a), rho), BOUND_SLACK));
    }

    let delta = kernel_projection(&a, &rng::gaussian_vector(&mut r, k))?;
    out.push(inequality(
        "basic_estimate",
        trial,
        ell,
        w.vector().dot(&delta).abs(),
        rho * delta.norm() + ESTIMATE_TOL,
        0.0,
    ));
    let (lhs, rhs) = match max_risk_direction(&a, &w)? {
        Some(v) => (w.vector().dot(&v), rho * v.norm()),
        None => (0.0, 0.0),
    };
    out.push(inequality("basic_estimate_equality", trial, ell, (lhs - rhs).abs(), ESTIMATE_TOL, 0.0));

    let residual = penrose_residual(a.matrix(), &pseudoinverse(&a));
    out.push(inequality("penrose", trial, ell, residual, PENROSE_TOL, 0.0));

    if ell == 0 || rho <= WITNESS_MIN_RISK {
        out.push(skipped("witness", trial, ell));
    } else {
        let seed = rng::derive_seed(cfg.seed, trial as u64, "witness");
        let report = suboptimality_witness(mdp, &a, &teacher, cfg.directions, seed)?;
        let weak = report.gaps.iter().filter(|&&g| g >= -ESTIMATE_TOL).count() as f64 / report.gaps.len() as f64;
        let strict = report.strict_count(ESTIMATE_TOL);
        let status = if weak >= WITNESS_FRACTION && strict > 0 { Status::Pass } else { Status::Fail };
        out.push(Check {
            check: "witness",
            trial,
            ell,
            lhs: weak,
            rhs: WITNESS_FRACTION,
            slack: weak - WITNESS_FRACTION,
            status,
        });
        out.push(Check {
            check: "witness_strict",
            trial,
            ell,
            lhs: strict as f64 / report.gaps.len() as f64,
            rhs: 0.0,
            slack: strict as f64 / report.gaps.len() as f64,
            status: if strict > 0 { Status::Pass } else { Status::Fail },
        });
    }
    Ok(out)
}

pub fn verify(cfg: &ExperimentConfig) -> Result<Vec<Check>> {
    let mdp = cfg.build_mdp(cfg.gamma())?;
    Ok(par_trials(cfg, cfg.trials, |trial| check_instance(cfg, &mdp, trial))?.into_iter().flatten().collect())
}

pub fn to_table(checks: &[Check]) -> Table {
    let mut t = Table::new("verify_bounds", &COLUMNS);
    for c in checks {
        t.push(vec![
            c.check.to_string(),
            c.trial.to_string(),
            c.ell.to_string(),
            float(c.lhs),
            float(c.rhs),
            float(c.slack),
            c.status.as_str().to_string(),
        ]);
    }
    t
}

pub fn run(cfg: &ExperimentConfig) -> Result<Outcome> {
    let checks = verify(cfg)?;
    let mut by_check: BTreeMap<&str, (BTreeMap<Status, usize>, f64)> = BTreeMap::new();
    for c in &checks {
        let entry = by_check.entry(c.check).or_insert_with(|| (BTreeMap::new(), f64::INFINITY));
        *entry.0.entry(c.status).or_default() += 1;
        if matches!(c.status, Status::Pass | Status::Fail) {
            entry.1 = entry.1.min(c.slack);
        }
    }
    let mut summary = String::new();
    writeln!(summary, "{:<24} {:>6} {:>6} {:>9} {:>8} {:>14}", "check", "pass", "fail", "infinite", "skipped", "worst_slack")
        .unwrap();
    for (name, (counts, worst)) in &by_check {
        let n = |s| counts.get(&s).copied().unwrap_or(0);
        writeln!(
            summary,
            "{name:<24} {:>6} {:>6} {:>9} {:>8} {:>14.6e}",
            n(Status::Pass),
            n(Status::Fail),
            n(Status::Infinite),
            n(Status::Skipped),
            worst
        )
        .unwrap();
    }
    let violations = checks.iter().filter(|c| c.status == Status::Fail).count();
    writeln!(summary, "violations: {violations}").unwrap();
    Ok(Outcome { tables: vec![to_table(&checks)], summary, violations })
}
