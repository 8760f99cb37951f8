//! Geometry of a learner's worldview `A` (an `l x k` matrix): SVD with a
//! numerical-rank cutoff, projections onto `ker A` and its complement, the
//! teaching risk, the pseudoinverse, and the two performance bounds.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Teaching risks this close to 1 make the learner-view reward direction
/// undefined and the suboptimality bound infinite.
pub const RHO_ONE_GUARD: f64 = 1e-9;

/// The learner's worldview: a linear map `R^k -> R^l`. `l = 0` is allowed and
/// means the learner observes nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct Worldview {
    matrix: DMatrix<f64>,
}

impl Worldview {
    pub fn new(matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.ncols() == 0 {
            return Err(Error::Config("worldview needs at least one column".into()));
        }
        if matrix.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("worldview has non-finite entries".into()));
        }
        Ok(Worldview { matrix })
    }

    pub fn empty(k: usize) -> Self {
        Worldview { matrix: DMatrix::zeros(0, k) }
    }

    pub fn identity(k: usize) -> Self {
        Worldview { matrix: DMatrix::identity(k, k) }
    }

    /// Row-major `rows x cols` data.
    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: data.len() });
        }
        Worldview::new(DMatrix::from_row_slice(rows, cols, data))
    }

    /// Learner feature dimension `l`.
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    /// True feature dimension `k`.
    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn to_row_major(&self) -> Vec<f64> {
        self.matrix.transpose().as_slice().to_vec()
    }

    /// `A (+) <f, .>`: the worldview with `f` appended as a new row.
    pub fn with_row(&self, feature: &DVector<f64>) -> Result<Self> {
        if feature.len() != self.cols() {
            return Err(Error::DimensionMismatch { expected: self.cols(), got: feature.len() });
        }
        let l = self.rows();
        let mut matrix = self.matrix.clone().insert_row(l, 0.0);
        matrix.row_mut(l).copy_from(&feature.transpose());
        Worldview::new(matrix)
    }

    pub fn append_row(&mut self, feature: &DVector<f64>) -> Result<()> {
        *self = self.with_row(feature)?;
        Ok(())
    }

    /// `A v`.
    pub fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        &self.matrix * v
    }

    pub fn svd(&self) -> SvdFactors {
        SvdFactors::of(&self.matrix)
    }
}

/// Thin SVD `A = U diag(s) V^T` with singular values sorted non-increasingly.
#[derive(Debug, Clone)]
pub struct SvdFactors {
    /// `l x r` with `r = min(l, k)`.
    pub left_vectors: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    /// `k x r`, columns are right singular vectors.
    pub right_vectors: DMatrix<f64>,
    pub numerical_rank: usize,
    pub rank_tolerance: f64,
}

impl SvdFactors {
    pub fn of(a: &DMatrix<f64>) -> Self {
        let (l, k) = a.shape();
        let r = l.min(k);
        if r == 0 {
            return SvdFactors {
                left_vectors: DMatrix::zeros(l, 0),
                singular_values: DVector::zeros(0),
                right_vectors: DMatrix::zeros(k, 0),
                numerical_rank: 0,
                rank_tolerance: 0.0,
            };
        }
        let svd = a.clone().svd(true, true);
        let u = svd.u.expect("left vectors requested");
        let v = svd.v_t.expect("right vectors requested").transpose();
        let mut order: Vec<usize> = (0..r).collect();
        order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
        let singular_values = DVector::from_iterator(r, order.iter().map(|&i| svd.singular_values[i]));
        let left_vectors = DMatrix::from_columns(&order.iter().map(|&i| u.column(i)).collect::<Vec<_>>());
        let right_vectors = DMatrix::from_columns(&order.iter().map(|&i| v.column(i)).collect::<Vec<_>>());
        let sigma_max = singular_values[0];
        let rank_tolerance = l.max(k) as f64 * f64::EPSILON * sigma_max;
        let numerical_rank = singular_values.iter().filter(|&&s| s > rank_tolerance).count();
        SvdFactors { left_vectors, singular_values, right_vectors, numerical_rank, rank_tolerance }
    }

    /// Orthonormal basis (as columns) of the row space of `A`.
    pub fn row_space_basis(&self) -> DMatrix<f64> {
        self.right_vectors.columns(0, self.numerical_rank).into_owned()
    }

    pub fn spectral_norm(&self) -> f64 {
        self.singular_values.get(0).copied().unwrap_or(0.0)
    }
}

/// True reward direction `w*`, a unit vector in `R^k`.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardWeights(DVector<f64>);

impl RewardWeights {
    pub fn new(w: DVector<f64>) -> Result<Self> {
        let norm = w.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(Error::NotUnitNorm(norm));
        }
        Ok(RewardWeights(w))
    }

    /// Normalises `w`; fails on the zero vector.
    pub fn normalized(w: DVector<f64>) -> Result<Self> {
        let norm = w.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::NotUnitNorm(norm));
        }
        Ok(RewardWeights(w / norm))
    }

    pub fn vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl AsRef<DVector<f64>> for RewardWeights {
    fn as_ref(&self) -> &DVector<f64> {
        &self.0
    }
}

fn check_dim(a: &Worldview, v: &DVector<f64>) -> Result<()> {
    if v.len() != a.cols() {
        return Err(Error::DimensionMismatch { expected: a.cols(), got: v.len() });
    }
    Ok(())
}

/// Orthogonal projection `pr(v) = (I - V_r V_r^T) v` onto `ker A`.
pub fn kernel_projection(a: &Worldview, v: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(a, v)?;
    Ok(kernel_projection_with(&a.svd(), v))
}

fn kernel_projection_with(svd: &SvdFactors, v: &DVector<f64>) -> DVector<f64> {
    if svd.numerical_rank == v.len() {
        // trivial kernel; skip the roundoff of v - V V^T v
        return DVector::zeros(v.len());
    }
    let basis = svd.row_space_basis();
    v - &basis * (basis.tr_mul(v))
}

/// Orthogonal projection `pr_perp(v) = v - pr(v)` onto `(ker A)^perp`, the row space.
pub fn complement_projection(a: &Worldview, v: &DVector<f64>) -> Result<DVector<f64>> {
    Ok(v - kernel_projection(a, v)?)
}

/// Teaching risk `rho(A; w) = ||pr(w)||`, the cosine of the angle between `w` and `ker A`.
pub fn teaching_risk(a: &Worldview, w: &RewardWeights) -> Result<f64> {
    check_dim(a, w.vector())?;
    let svd = a.svd();
    Ok(risk_from_residual(&svd, kernel_projection_with(&svd, w.vector()).norm()))
}

fn risk_from_residual(svd: &SvdFactors, residual: f64) -> f64 {
    // roundoff left over when w lies in the row space
    if residual <= svd.rank_tolerance {
        0.0
    } else {
        residual.min(1.0)
    }
}

/// Unit vector in `ker A` attaining the maximum `max_{v in ker A, |v| <= 1} <w, v>`,
/// or `None` when the teaching risk is zero.
pub fn max_risk_direction(a: &Worldview, w: &RewardWeights) -> Result<Option<DVector<f64>>> {
    check_dim(a, w.vector())?;
    let svd = a.svd();
    let residual = kernel_projection_with(&svd, w.vector());
    if risk_from_residual(&svd, residual.norm()) == 0.0 {
        return Ok(None);
    }
    // projecting twice strips the row-space roundoff from a short residual
    let v = kernel_projection_with(&svd, &residual);
    Ok(Some(&v / v.norm()))
}

/// `sigma(A)`: the smallest singular value above the rank cutoff.
pub fn sigma_min_nonzero(a: &Worldview) -> Result<f64> {
    let svd = a.svd();
    if svd.numerical_rank == 0 {
        return Err(Error::RankZero);
    }
    Ok(svd.singular_values[svd.numerical_rank - 1])
}

/// `||A||`, the largest singular value (0 for an empty or zero worldview).
pub fn spectral_norm(a: &Worldview) -> f64 {
    a.svd().spectral_norm()
}

/// Moore-Penrose pseudoinverse `A^+` (`k x l`) with the numerical-rank cutoff applied.
pub fn pseudoinverse(a: &Worldview) -> DMatrix<f64> {
    let svd = a.svd();
    let r = svd.numerical_rank;
    let v = svd.right_vectors.columns(0, r);
    let u = svd.left_vectors.columns(0, r);
    let inv = DMatrix::from_diagonal(&svd.singular_values.rows(0, r).map(|s| 1.0 / s));
    v * inv * u.transpose()
}

/// `w*_L = X w / ||X w||` with `X = (A^+)^T`: the learner-space reward direction
/// under which truly optimal behaviour looks near-optimal.
pub fn learner_reward_vector(a: &Worldview, w: &RewardWeights) -> Result<DVector<f64>> {
    let rho = teaching_risk(a, w)?;
    if rho >= 1.0 - RHO_ONE_GUARD {
        return Err(Error::UndefinedLearnerDirection { rho });
    }
    let xw = pseudoinverse(a).tr_mul(w.vector());
    let norm = xw.norm();
    if !(norm > 0.0) {
        return Err(Error::UndefinedLearnerDirection { rho });
    }
    Ok(xw / norm)
}

/// Gap bound `eps / sigma + rho * diam` for a learner matching the teacher's
/// feature expectations up to `eps` in her own view. Infinite when `sigma` is 0.
pub fn theorem1_bound(epsilon: f64, sigma: f64, rho: f64, diam: f64) -> f64 {
    if !(sigma > 0.0) {
        return f64::INFINITY;
    }
    epsilon / sigma + rho * diam
}

/// Learner-view suboptimality bound `diam ||A|| rho / sqrt(1 - rho^2)` for a truly
/// optimal policy under `w*_L`. Infinite once `rho` is within `RHO_ONE_GUARD` of 1.
pub fn theorem2_bound(diam: f64, a_norm: f64, rho: f64) -> f64 {
    if rho >= 1.0 - RHO_ONE_GUARD {
        return f64::INFINITY;
    }
    if rho == 0.0 {
        return 0.0;
    }
    diam * a_norm * rho / (1.0 - rho * rho).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn chain_w() -> RewardWeights {
        RewardWeights::normalized(DVector::from_vec(vec![-1.0, -0.5, 0.0, 0.5, 1.0])).unwrap()
    }

    fn e(k: usize, i: usize) -> DVector<f64> {
        DVector::from_fn(k, |j, _| if i == j { 1.0 } else { 0.0 })
    }

    #[test]
    fn full_rank_kernel_is_trivial() {
        let a = Worldview::identity(4);
        let v = DVector::from_vec(vec![1.0, -2.0, 3.0, 0.5]);
        assert!(kernel_projection(&a, &v).unwrap().amax() < 1e-15);
        let w = RewardWeights::normalized(v).unwrap();
        assert_eq!(teaching_risk(&a, &w).unwrap(), 0.0);
    }

    #[test]
    fn central_cell_worldview_misses_chain_reward() {
        let a = Worldview::from_row_major(1, 5, &[0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let w = chain_w();
        let pr = kernel_projection(&a, w.vector()).unwrap();
        assert!((&pr - w.vector()).amax() < 1e-15);
        assert!((teaching_risk(&a, &w).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn empty_worldview_has_full_risk() {
        let a = Worldview::empty(3);
        let w = RewardWeights::normalized(DVector::from_vec(vec![1.0, 2.0, 2.0])).unwrap();
        assert_eq!(teaching_risk(&a, &w).unwrap(), 1.0);
        assert_eq!(spectral_norm(&a), 0.0);
        assert_eq!(sigma_min_nonzero(&a), Err(Error::RankZero));
        assert_eq!(pseudoinverse(&a).shape(), (3, 0));
    }

    #[test]
    fn reward_row_removes_risk() {
        let w = chain_w();
        let a = Worldview::empty(5).with_row(&e(5, 0)).unwrap().with_row(w.vector()).unwrap();
        assert_eq!(teaching_risk(&a, &w).unwrap(), 0.0);
        assert_eq!(max_risk_direction(&a, &w).unwrap(), None);
    }

    #[test]
    fn singular_values_of_simple_matrices() {
        let diag = Worldview::from_row_major(2, 2, &[3.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((sigma_min_nonzero(&diag).unwrap() - 3.0).abs() < 1e-14);
        assert!((spectral_norm(&diag) - 3.0).abs() < 1e-14);
        let id = Worldview::identity(3);
        assert!((sigma_min_nonzero(&id).unwrap() - 1.0).abs() < 1e-14);
        assert!((spectral_norm(&id) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn svd_reconstructs_and_is_sorted() {
        let mut r = rng::stream(5, 0, "svd");
        for (l, k) in [(3, 7), (7, 3), (4, 4), (1, 5)] {
            let m = rng::gaussian_matrix(&mut r, l, k);
            let svd = SvdFactors::of(&m);
            let rebuilt = &svd.left_vectors * DMatrix::from_diagonal(&svd.singular_values) * svd.right_vectors.transpose();
            assert!((rebuilt - &m).amax() <= 1e-9 * svd.spectral_norm().max(1.0));
            assert!(svd.singular_values.as_slice().windows(2).all(|p| p[0] >= p[1]));
            assert_eq!(svd.numerical_rank, l.min(k));
        }
    }

    #[test]
    fn pseudoinverse_closed_forms() {
        let id = Worldview::identity(3);
        assert!((pseudoinverse(&id) - DMatrix::identity(3, 3)).amax() < 1e-14);
        let u = DVector::from_vec(vec![0.6, 0.0, 0.8]);
        let row = Worldview::empty(3).with_row(&u).unwrap();
        assert!((pseudoinverse(&row).column(0) - &u).amax() < 1e-14);
    }

    #[test]
    fn learner_direction_for_selection_matrix() {
        let a = Worldview::from_row_major(2, 4, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]).unwrap();
        let w = RewardWeights::new(DVector::from_vec(vec![0.6, 0.8, 0.0, 0.0])).unwrap();
        let wl = learner_reward_vector(&a, &w).unwrap();
        assert!((wl - DVector::from_vec(vec![0.6, 0.8])).amax() < 1e-14);
        let id = Worldview::identity(4);
        assert!((learner_reward_vector(&id, &w).unwrap() - w.vector()).amax() < 1e-14);
        let blind = Worldview::from_row_major(1, 4, &[0.0, 0.0, 1.0, 0.0]).unwrap();
        assert!(matches!(learner_reward_vector(&blind, &w), Err(Error::UndefinedLearnerDirection { .. })));
    }

    #[test]
    fn bound_formulas() {
        assert_eq!(theorem1_bound(0.0, 1.0, 0.0, 7.0), 0.0);
        assert_eq!(theorem1_bound(0.3, 2.0, 0.0, 7.0), 0.15);
        assert_eq!(theorem1_bound(0.3, 0.0, 0.0, 7.0), f64::INFINITY);
        assert_eq!(theorem2_bound(4.0, 2.0, 0.0), 0.0);
        assert!((theorem2_bound(4.0, 2.0, std::f64::consts::FRAC_1_SQRT_2) - 8.0).abs() < 1e-12);
        assert_eq!(theorem2_bound(4.0, 2.0, 1.0), f64::INFINITY);
        assert_eq!(theorem2_bound(4.0, 2.0, 1.0 - 1e-10), f64::INFINITY);
    }

    #[test]
    fn rejects_non_unit_weights() {
        assert!(matches!(RewardWeights::new(DVector::from_vec(vec![1.0, 1.0])), Err(Error::NotUnitNorm(_))));
        assert!(RewardWeights::normalized(DVector::zeros(3)).is_err());
    }
}
