#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use schedopt::matops::{solve_dare, DEFAULT_MAX_ITER, DEFAULT_TOL};
use schedopt::table::{scalar_golden, triple_integrator};
use schedopt::{Matrix, RiccatiData, SystemModel};

pub fn golden() -> SystemModel {
    scalar_golden()
}

pub fn triple() -> SystemModel {
    triple_integrator()
}

pub fn riccati(model: &SystemModel) -> RiccatiData {
    solve_dare(model, DEFAULT_TOL, DEFAULT_MAX_ITER).expect("riccati converges")
}

fn gaussian(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    DMatrix::from_fn(r, c, |_, _| StandardNormal.sample(rng))
}

fn spectral_radius(a: &Matrix) -> f64 {
    a.complex_eigenvalues().iter().map(|l| l.norm()).fold(0.0, f64::max)
}

/// Random model with `n` states and `m` inputs whose A has spectral radius
/// `radius`. W is rank-deficient for every third seed.
pub fn random_model(seed: u64, n: usize, m: usize, radius: f64) -> SystemModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = gaussian(&mut rng, n, n);
    let rho = spectral_radius(&a);
    if rho > 1e-9 {
        a *= radius / rho;
    }
    let b = gaussian(&mut rng, n, m);
    let c = gaussian(&mut rng, n, n);
    let q = c.transpose() * &c + Matrix::identity(n, n) * 0.1;
    let d = gaussian(&mut rng, m, m);
    let r = d.transpose() * &d + Matrix::identity(m, m) * 0.1;
    let rank = if seed.is_multiple_of(3) { n.saturating_sub(1).max(1) } else { n };
    let e = gaussian(&mut rng, n, rank);
    let w = &e * e.transpose();
    SystemModel::new(a, b, q, r, w).expect("random model is valid")
}

/// Twenty random models, n <= 4, mixed stable and unstable.
pub fn random_corpus() -> Vec<SystemModel> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    (0..20)
        .map(|i| {
            let n = 1 + i % 4;
            let m = 1 + (i / 4) % 2;
            let radius = if i % 2 == 0 { rng.random_range(0.3..0.95) } else { rng.random_range(1.02..1.3) };
            random_model(1000 + i as u64, n, m.min(n), radius)
        })
        .collect()
}

/// Random corpus plus the two reference models.
pub fn full_corpus() -> Vec<SystemModel> {
    let mut v = random_corpus();
    v.push(triple());
    v.push(golden());
    v
}

/// Random symmetric PSD matrix.
pub fn random_psd(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Matrix {
    let e = gaussian(rng, n, n);
    (&e * e.transpose()) * scale
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Min eigenvalue of a symmetric matrix.
pub fn min_eig(m: &Matrix) -> f64 {
    let s = (m + m.transpose()) * 0.5;
    s.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
