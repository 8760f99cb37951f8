use nalgebra::DVector;

use super::{feature_expectations_exact, optimal_policy, FeatureExpectations, Mdp};
use crate::error::{Error, Result};
use crate::rng;

/// Best and worst achievable true values `<w*, mu(pi)>`, used to map policy
/// values affinely onto `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerformanceScale {
    pub min: f64,
    pub max: f64,
}

impl PerformanceScale {
    pub fn new(mdp: &Mdp, w_star: &DVector<f64>) -> Result<Self> {
        let rewards = mdp.state_rewards(w_star)?;
        let best = optimal_policy(mdp, &rewards)?;
        let worst = optimal_policy(mdp, &(-&rewards))?;
        let max = feature_expectations_exact(mdp, &best)?.value(w_star);
        let min = feature_expectations_exact(mdp, &worst)?.value(w_star);
        let scale = PerformanceScale { min, max };
        if scale.is_degenerate() {
            return Err(Error::UndefinedRelativePerformance { value: max });
        }
        Ok(scale)
    }

    fn is_degenerate(&self) -> bool {
        (self.max - self.min).abs() <= 1e-12 * self.max.abs().max(self.min.abs()).max(1.0)
    }

    pub fn relative(&self, value: f64) -> f64 {
        (value - self.min) / (self.max - self.min)
    }
}

/// `(<w*, mu> - R_min) / (R_max - R_min)`.
pub fn relative_performance(mdp: &Mdp, w_star: &DVector<f64>, mu: &FeatureExpectations) -> Result<f64> {
    let scale = PerformanceScale::new(mdp, w_star)?;
    Ok(scale.relative(mu.value(w_star)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiameterEstimate {
    pub lower: f64,
    pub upper: f64,
}

/// Bracket for `diam mu(Pi)`: the lower end comes from pairs of policies
/// optimal for `+u` and `-u` over random unit directions `u`, the upper end is
/// `2 max ||phi|| / (1 - gamma)`.
pub fn estimate_diameter(mdp: &Mdp, n_directions: usize, seed: u64) -> Result<DiameterEstimate> {
    let upper = mdp.diameter_upper_bound();
    let mut rng = rng::stream(seed, 0, "diameter");
    let mut lower: f64 = 0.0;
    for _ in 0..n_directions.max(1) {
        let u = rng::unit_vector(&mut rng, mdp.n_features());
        let rewards = mdp.state_rewards(&u)?;
        let plus = feature_expectations_exact(mdp, &optimal_policy(mdp, &rewards)?)?;
        let minus = feature_expectations_exact(mdp, &optimal_policy(mdp, &(-rewards))?)?;
        lower = lower.max((plus.mu - minus.mu).norm());
    }
    Ok(DiameterEstimate { lower: lower.min(upper), upper })
}
