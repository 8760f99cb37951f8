//! Exhaustive enumeration of deterministic policies for small MDPs.

use nalgebra::DVector;
use rayon::prelude::*;

use super::{FeatureExpectations, Mdp};
use crate::error::{Error, Result};

/// Number of deterministic stationary policies, `prod_s |A(s)|`.
pub fn count_deterministic_policies(mdp: &Mdp) -> u128 {
    (0..mdp.n_states())
        .map(|s| mdp.allowed_actions(s).count() as u128)
        .try_fold(1u128, |acc, c| acc.checked_mul(c))
        .unwrap_or(u128::MAX)
}

/// Mixed-radix walk over all deterministic policies, yielding the action of each state.
pub struct DeterministicPolicies {
    choices: Vec<Vec<usize>>,
    digits: Vec<usize>,
    remaining: u128,
}

pub fn deterministic_policies(mdp: &Mdp) -> DeterministicPolicies {
    let choices: Vec<Vec<usize>> = (0..mdp.n_states()).map(|s| mdp.allowed_actions(s).collect()).collect();
    DeterministicPolicies {
        digits: vec![0; choices.len()],
        remaining: count_deterministic_policies(mdp),
        choices,
    }
}

impl DeterministicPolicies {
    fn seek(&mut self, mut index: u128) {
        for (digit, options) in self.digits.iter_mut().zip(&self.choices) {
            let radix = options.len() as u128;
            *digit = (index % radix) as usize;
            index /= radix;
        }
    }
}

impl Iterator for DeterministicPolicies {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.remaining == 0 {
            return None;
        }
        self.remaining -= 1;
        let actions = self.digits.iter().zip(&self.choices).map(|(&d, c)| c[d]).collect();
        for (digit, options) in self.digits.iter_mut().zip(&self.choices) {
            *digit += 1;
            if *digit < options.len() {
                break;
            }
            *digit = 0;
        }
        Some(actions)
    }
}

/// Dense occupancy solver specialised for deterministic policies. `I - gamma P^T`
/// is strictly column diagonally dominant, so elimination needs no pivoting.
struct OccupancySolver<'a> {
    mdp: &'a Mdp,
    system: Vec<f64>,
    rhs: Vec<f64>,
}

impl<'a> OccupancySolver<'a> {
    fn new(mdp: &'a Mdp) -> Self {
        let n = mdp.n_states();
        OccupancySolver { mdp, system: vec![0.0; n * n], rhs: vec![0.0; n] }
    }

    fn solve(&mut self, actions: &[usize]) -> &[f64] {
        let n = self.mdp.n_states();
        let gamma = self.mdp.gamma();
        let m = &mut self.system;
        m.fill(0.0);
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        for (s, &a) in actions.iter().enumerate() {
            for &(t, p) in self.mdp.successors(s, a) {
                m[t * n + s] -= gamma * p;
            }
        }
        let x = &mut self.rhs;
        x.copy_from_slice(self.mdp.initial_dist().as_slice());
        for col in 0..n {
            let pivot = m[col * n + col];
            for row in col + 1..n {
                let factor = m[row * n + col] / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    m[row * n + j] -= factor * m[col * n + j];
                }
                x[row] -= factor * x[col];
            }
        }
        for row in (0..n).rev() {
            let mut acc = x[row];
            for j in row + 1..n {
                acc -= m[row * n + j] * x[j];
            }
            x[row] = acc / m[row * n + row];
        }
        x
    }
}

/// Feature expectations of every deterministic policy, paired with its actions.
pub fn enumerate_feature_expectations(
    mdp: &Mdp,
    limit: u128,
) -> Result<Vec<(Vec<usize>, FeatureExpectations)>> {
    let count = count_deterministic_policies(mdp);
    if count > limit {
        return Err(Error::EnumerationTooLarge { count, limit });
    }
    let mut solver = OccupancySolver::new(mdp);
    Ok(deterministic_policies(mdp)
        .map(|actions| {
            let d = DVector::from_column_slice(solver.solve(&actions));
            let mu = FeatureExpectations::new(mdp.features().tr_mul(&d));
            (actions, mu)
        })
        .collect())
}

/// `max_pi <c_j, mu(pi)>` over all deterministic policies, for each objective `c_j`,
/// streamed without storing the enumerated set.
pub fn max_linear_values(mdp: &Mdp, objectives: &[DVector<f64>], limit: u128) -> Result<Vec<f64>> {
    let count = count_deterministic_policies(mdp);
    if count > limit {
        return Err(Error::EnumerationTooLarge { count, limit });
    }
    // <c, Phi^T d> = <Phi c, d>
    let state_objectives: Vec<DVector<f64>> =
        objectives.iter().map(|c| mdp.state_rewards(c)).collect::<Result<_>>()?;
    let chunks = (rayon::current_num_threads() as u128 * 8).min(count.max(1));
    let chunk_len = count.div_ceil(chunks);
    let best = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let start = chunk * chunk_len;
            let len = chunk_len.min(count.saturating_sub(start));
            let mut walk = deterministic_policies(mdp);
            walk.seek(start);
            walk.remaining = len;
            let mut solver = OccupancySolver::new(mdp);
            let mut best = vec![f64::NEG_INFINITY; state_objectives.len()];
            for actions in walk {
                let d = solver.solve(&actions);
                for (b, r) in best.iter_mut().zip(&state_objectives) {
                    let v: f64 = r.iter().zip(d).map(|(x, y)| x * y).sum();
                    *b = b.max(v);
                }
            }
            best
        })
        .reduce(
            || vec![f64::NEG_INFINITY; state_objectives.len()],
            |a, b| a.into_iter().zip(b).map(|(x, y)| x.max(y)).collect(),
        );
    Ok(best)
}
