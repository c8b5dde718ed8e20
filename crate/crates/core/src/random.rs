//! Seeded random systems for tests and benchmarks.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::hippo::diagonalize_normal;
use crate::linalg::complexify;
use crate::ssm::DplrSpec;
use crate::{CMat, CVec, Result, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn normal_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(normal(rng), normal(rng))
}

/// Real stable NPLR system `shift I + S - P P^T` with random skew `S`,
/// `shift` in `[-1, -0.1]` and real `B`, `C`, brought to DPLR form.
///
/// The real input and output make the kernel real, so the result is
/// flagged conjugate-symmetric.
pub fn stable_dplr(n: usize, rank: usize, seed: u64) -> Result<DplrSpec> {
    let mut rng = rng(seed);
    let shift = -rng.random_range(0.1..1.0);
    let g = DMatrix::<f64>::from_fn(n, n, |_, _| normal(&mut rng));
    let skew = (&g - g.transpose()) * (0.5 / (n as f64).sqrt());
    let p_real = DMatrix::<f64>::from_fn(n, rank, |_, _| normal(&mut rng) / (n as f64).sqrt());
    let b: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let c: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
    let (v, lambda) = diagonalize_normal(shift, &skew)?;
    let vh = v.adjoint();
    let p = &vh * p_real.map(|x| C64::new(x, 0.0));
    DplrSpec::new(lambda, p.clone(), p, &vh * complexify(&b), &vh * complexify(&c), true)
}

/// Diagonal-plus-low-rank system with random complex entries, used where
/// only the cost of an operation matters.
pub fn diagonal_dplr(n: usize, rank: usize, seed: u64) -> Result<DplrSpec> {
    let mut rng = rng(seed);
    let lambda = CVec::from_fn(n, |_, _| C64::new(-rng.random_range(0.1..1.0), rng.random_range(-(n as f64)..n as f64)));
    let scale = 0.1 / (n as f64).sqrt();
    let p = CMat::from_fn(n, rank, |_, _| normal_c(&mut rng) * scale);
    let q = CMat::from_fn(n, rank, |_, _| normal_c(&mut rng) * scale);
    let b = CVec::from_fn(n, |_, _| normal_c(&mut rng));
    let c = CVec::from_fn(n, |_, _| normal_c(&mut rng));
    DplrSpec::new(lambda, p, q, b, c, false)
}

/// Real vector of standard normals.
pub fn normal_vec(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng(seed);
    (0..n).map(|_| normal(&mut rng)).collect()
}
