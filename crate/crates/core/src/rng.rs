//! Seed derivation and the handful of random draws the experiments need.
//!
//! Every random stream is derived from `(base seed, index, purpose tag)` so that
//! results do not depend on the order in which trials are executed.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub type SeededRng = ChaCha8Rng;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn fnv1a(tag: &str) -> u64 {
    tag.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

/// Stable seed for the stream identified by `(base, index, tag)`.
pub fn derive_seed(base: u64, index: u64, tag: &str) -> u64 {
    let a = splitmix64(base ^ fnv1a(tag));
    splitmix64(a ^ splitmix64(index.wrapping_add(0x5851_f42d_4c95_7f2d)))
}

pub fn stream(base: u64, index: u64, tag: &str) -> SeededRng {
    SeededRng::seed_from_u64(derive_seed(base, index, tag))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<f64> {
    // Row-major fill so the draw order is independent of nalgebra's storage order.
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect();
    DMatrix::from_row_slice(rows, cols, &data)
}

pub fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<f64> {
    DVector::from_iterator(dim, (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)))
}

/// Uniformly distributed point on the unit sphere in `R^dim`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> DVector<f64> {
    loop {
        let v = gaussian_vector(rng, dim);
        let norm = v.norm();
        if norm > 1e-12 {
            return v / norm;
        }
    }
}
