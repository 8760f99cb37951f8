use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};

use super::{FeatureExpectations, Mdp, MixedPolicy, Policy};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

const RESIDUAL_TOL: f64 = 1e-10;

/// Discounted state occupancy `d` solving `(I - gamma P_pi^T) d = D`.
pub fn state_occupancy(mdp: &Mdp, policy: &Policy) -> Result<DVector<f64>> {
    policy.check_shape(mdp)?;
    let n = mdp.n_states();
    let gamma = mdp.gamma();
    let mut system = DMatrix::<f64>::identity(n, n);
    for s in 0..n {
        for (a, &pa) in policy.action_probs(s).iter().enumerate() {
            if pa == 0.0 {
                continue;
            }
            for &(t, p) in mdp.successors(s, a) {
                system[(t, s)] -= gamma * pa * p;
            }
        }
    }
    let rhs = mdp.initial_dist();
    let occupancy = system
        .clone()
        .lu()
        .solve(rhs)
        .ok_or(Error::SingularOccupancy { residual: f64::INFINITY })?;
    let residual = (&system * &occupancy - rhs).amax();
    if !(residual <= RESIDUAL_TOL) {
        return Err(Error::SingularOccupancy { residual });
    }
    Ok(occupancy)
}

/// `mu(pi) = Phi^T d` with `d` the exact discounted occupancy.
pub fn feature_expectations_exact(mdp: &Mdp, policy: &Policy) -> Result<FeatureExpectations> {
    let occupancy = state_occupancy(mdp, policy)?;
    Ok(FeatureExpectations::new(mdp.features().tr_mul(&occupancy)))
}

/// `sum_i w_i mu(pi_i)`.
pub fn feature_expectations_mixed(mdp: &Mdp, mixed: &MixedPolicy) -> Result<FeatureExpectations> {
    let mut mu = DVector::zeros(mdp.n_features());
    for (weight, policy) in mixed.components() {
        if *weight == 0.0 {
            continue;
        }
        mu += feature_expectations_exact(mdp, policy)?.mu * *weight;
    }
    Ok(FeatureExpectations::new(mu))
}

#[derive(Debug, Clone, Copy)]
pub enum SampledPolicy<'a> {
    Single(&'a Policy),
    Mixed(&'a MixedPolicy),
}

impl<'a> From<&'a Policy> for SampledPolicy<'a> {
    fn from(p: &'a Policy) -> Self {
        SampledPolicy::Single(p)
    }
}

impl<'a> From<&'a MixedPolicy> for SampledPolicy<'a> {
    fn from(p: &'a MixedPolicy) -> Self {
        SampledPolicy::Mixed(p)
    }
}

/// Monte Carlo estimate of `mu` from `n_rollouts` trajectories truncated at `horizon`.
///
/// Mixtures draw one component per trajectory. Also returns the per-coordinate
/// standard error of the mean.
pub fn feature_expectations_sampled<'a>(
    mdp: &Mdp,
    policy: impl Into<SampledPolicy<'a>>,
    n_rollouts: usize,
    horizon: usize,
    seed: u64,
) -> Result<(FeatureExpectations, DVector<f64>)> {
    if n_rollouts == 0 {
        return Err(Error::ZeroRollouts);
    }
    let policy = policy.into();
    match policy {
        SampledPolicy::Single(p) => p.check_shape(mdp)?,
        SampledPolicy::Mixed(m) => {
            for (_, p) in m.components() {
                p.check_shape(mdp)?;
            }
        }
    }
    let mut rng = SeededRng::seed_from_u64(seed);
    let k = mdp.n_features();
    let mut sum = DVector::zeros(k);
    let mut sum_sq = DVector::zeros(k);
    let mut ret = DVector::zeros(k);
    for _ in 0..n_rollouts {
        let chosen = match policy {
            SampledPolicy::Single(p) => p,
            SampledPolicy::Mixed(m) => {
                let weights = m.components().iter().map(|c| c.0);
                &m.components()[sample_index(&mut rng, weights)].1
            }
        };
        ret.fill(0.0);
        let mut state = sample_index(&mut rng, mdp.initial_dist().iter().copied());
        let mut discount = 1.0;
        for _ in 0..horizon {
            ret.axpy(discount, &mdp.features().row(state).transpose(), 1.0);
            let action = sample_index(&mut rng, chosen.action_probs(state).iter().copied());
            state = mdp.successors(state, action)[sample_index(
                &mut rng,
                mdp.successors(state, action).iter().map(|e| e.1),
            )]
            .0;
            discount *= mdp.gamma();
        }
        sum += &ret;
        sum_sq += ret.component_mul(&ret);
    }
    let n = n_rollouts as f64;
    let mean = &sum / n;
    let var = (sum_sq / n - mean.component_mul(&mean)).map(|v| v.max(0.0));
    let std_error = if n_rollouts > 1 { var.map(|v| (v / (n - 1.0)).sqrt()) } else { DVector::zeros(k) };
    Ok((FeatureExpectations::new(mean), std_error))
}

fn sample_index<R: Rng>(rng: &mut R, probs: impl Iterator<Item = f64> + Clone) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        if p <= 0.0 {
            continue;
        }
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}
