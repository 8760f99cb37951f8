use nalgebra::DVector;

use crate::error::Result;
use crate::linalg::Worldview;
use crate::mdp::{
    count_deterministic_policies, enumerate_feature_expectations, feature_expectations_exact, optimal_policy, Mdp,
    Policy,
};
use crate::rng;

/// MDPs with at most this many deterministic policies are enumerated exhaustively.
pub const ENUMERATION_LIMIT: u128 = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WitnessMethod {
    /// Maximum taken over every deterministic policy.
    Enumeration,
    /// Too many policies to enumerate; the maximum comes from the planner instead.
    Planner,
}

#[derive(Debug, Clone)]
pub struct WitnessReport {
    /// `max_w (max_pi <w, A mu(pi)> - <w, A mu(pi*)>)` over the sampled directions.
    pub max_gap: f64,
    pub witness_direction: DVector<f64>,
    pub directions: Vec<DVector<f64>>,
    /// Per-direction gap, aligned with `directions`; each is `>= 0` up to roundoff.
    pub gaps: Vec<f64>,
    pub method: WitnessMethod,
}

impl WitnessReport {
    /// Directions for which some policy looks strictly better than `pi*` by more than `tol`.
    pub fn strict_count(&self, tol: f64) -> usize {
        self.gaps.iter().filter(|&&g| g > tol).count()
    }
}

/// `max_pi <d, A mu(pi)> - <d, A mu(policy)>`, using the planner for the maximum.
pub fn view_suboptimality(mdp: &Mdp, a: &Worldview, policy: &Policy, direction: &DVector<f64>) -> Result<f64> {
    let objective = a.matrix().tr_mul(direction);
    let best = optimal_policy(mdp, &mdp.state_rewards(&objective)?)?;
    let best_value = feature_expectations_exact(mdp, &best)?.value(&objective);
    let value = feature_expectations_exact(mdp, policy)?.value(&objective);
    Ok(best_value - value)
}

/// Empirical check that `pi_star` never looks optimal in the learner's view:
/// over `n_directions` random unit `w` in `R^l`, how much better than `pi_star`
/// the best policy scores under the learner reward `<w, A phi(s)>`.
pub fn suboptimality_witness(
    mdp: &Mdp,
    a: &Worldview,
    pi_star: &Policy,
    n_directions: usize,
    seed: u64,
) -> Result<WitnessReport> {
    let l = a.rows();
    let mut r = rng::stream(seed, 0, "witness-directions");
    let directions: Vec<DVector<f64>> =
        if l == 0 { Vec::new() } else { (0..n_directions).map(|_| rng::unit_vector(&mut r, l)).collect() };
    let star_view = a.apply(&feature_expectations_exact(mdp, pi_star)?.mu);

    let (method, gaps) = if count_deterministic_policies(mdp) <= ENUMERATION_LIMIT {
        let views: Vec<DVector<f64>> = enumerate_feature_expectations(mdp, ENUMERATION_LIMIT)?
            .into_iter()
            .map(|(_, mu)| a.apply(&mu.mu))
            .collect();
        let gaps: Vec<f64> = directions
            .iter()
            .map(|d| {
                let best = views.iter().map(|v| v.dot(d)).fold(f64::NEG_INFINITY, f64::max);
                best - star_view.dot(d)
            })
            .collect();
        (WitnessMethod::Enumeration, gaps)
    } else {
        let gaps = directions.iter().map(|d| view_suboptimality(mdp, a, pi_star, d)).collect::<Result<_>>()?;
        (WitnessMethod::Planner, gaps)
    };

    let (best_index, max_gap) = gaps
        .iter()
        .copied()
        .enumerate()
        .fold((None, 0.0f64), |(bi, bg), (i, g)| if bi.is_none() || g > bg { (Some(i), g) } else { (bi, bg) });
    let witness_direction = best_index.map_or_else(|| DVector::zeros(l), |i| directions[i].clone());
    Ok(WitnessReport { max_gap, witness_direction, directions, gaps, method })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{learner_reward_vector, RewardWeights};
    use crate::mdp::{build_gridworld, GridworldSpec};
    use nalgebra::DMatrix;

    fn chain() -> (Mdp, RewardWeights, Policy) {
        let mdp = build_gridworld(&GridworldSpec::chain(5, 0.9)).unwrap();
        let w = RewardWeights::normalized(DVector::from_vec(vec![-1.0, -0.5, 0.0, 0.5, 1.0])).unwrap();
        let star = optimal_policy(&mdp, &mdp.state_rewards(w.vector()).unwrap()).unwrap();
        (mdp, w, star)
    }

    #[test]
    fn zero_risk_worldview_sees_optimal_policy_as_optimal() {
        let (mdp, w, star) = chain();
        let a = Worldview::empty(5).with_row(w.vector()).unwrap();
        let wl = learner_reward_vector(&a, &w).unwrap();
        assert!(view_suboptimality(&mdp, &a, &star, &wl).unwrap().abs() < 1e-9);
    }

    #[test]
    fn central_cell_view_cannot_tell_mirror_policies_apart() {
        let (mdp, _, star) = chain();
        let a = Worldview::from_row_major(1, 5, &[0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let mirror = Policy::deterministic(&mdp, &[1, 0, 0, 0, 0]).unwrap();
        let view = |p: &Policy| a.apply(&feature_expectations_exact(&mdp, p).unwrap().mu);
        assert!((view(&star) - view(&mirror)).norm() < 1e-12);
        let report = suboptimality_witness(&mdp, &a, &star, 16, 2).unwrap();
        assert_eq!(report.method, WitnessMethod::Enumeration);
        assert!(report.gaps.iter().all(|&g| g >= -1e-12));
        assert!(report.strict_count(1e-9) > 0);
    }

    #[test]
    fn single_policy_mdp_has_no_gap() {
        let mdp = Mdp::from_dense(
            &[vec![Some(vec![0.0, 1.0])], vec![Some(vec![1.0, 0.0])]],
            DVector::from_vec(vec![1.0, 0.0]),
            0.9,
            DMatrix::identity(2, 2),
        )
        .unwrap();
        let only = Policy::deterministic(&mdp, &[0, 0]).unwrap();
        let a = Worldview::identity(2);
        let report = suboptimality_witness(&mdp, &a, &only, 10, 0).unwrap();
        assert!(report.max_gap.abs() < 1e-12);
    }

    #[test]
    fn large_mdps_fall_back_to_the_planner() {
        let mdp = build_gridworld(&GridworldSpec::square(4, 2, 0.9)).unwrap();
        let w = DVector::from_vec(vec![0.5, 0.5, -0.5, -0.5]);
        let star = optimal_policy(&mdp, &mdp.state_rewards(&w).unwrap()).unwrap();
        let a = Worldview::from_row_major(1, 4, &[1.0, 0.0, 0.0, 0.0]).unwrap();
        let report = suboptimality_witness(&mdp, &a, &star, 5, 0).unwrap();
        assert_eq!(report.method, WitnessMethod::Planner);
        assert_eq!(report.gaps.len(), 5);
    }
}
