#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vpurify_core::linalg::{c, ComplexMatrix, DensityMatrix};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ginibre(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let data = (0..dim * dim).map(|_| c(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect();
    ComplexMatrix::from_vec(dim, dim, data).unwrap()
}

pub fn random_state(n: usize, rng: &mut impl Rng) -> DensityMatrix {
    let g = ginibre(1 << n, rng);
    let m = &g * &g.adjoint();
    let tr = m.trace().re;
    DensityMatrix::new(m.scale_real(1.0 / tr)).unwrap()
}

pub fn random_hermitian(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let g = ginibre(dim, rng);
    (&g + &g.adjoint()).scale_real(0.5)
}

pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let h = random_hermitian(dim, rng);
    ComplexMatrix::exp_i_hermitian(&h, 3.0).unwrap()
}

/// Pauli table with total weight at most `max`.
pub fn random_pauli_weights(max: f64, rng: &mut impl Rng) -> (f64, f64, f64) {
    let x = rng.random::<f64>() * max / 3.0;
    let y = rng.random::<f64>() * max / 3.0;
    let z = rng.random::<f64>() * max / 3.0;
    (x, y, z)
}
