#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tradeoff_core::{ComplexMatrix, C64};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

pub fn random_hermitian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    random_matrix(n, n, rng).symmetrized()
}

/// `B B^dag / Tr[B B^dag]`.
pub fn random_density(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let b = random_matrix(n, n, rng);
    let p = &b * &b.dagger();
    let t = p.trace().re;
    p.scale_real(1.0 / t)
}

pub fn rel_err(got: &ComplexMatrix, want: &ComplexMatrix) -> f64 {
    got.max_abs_diff(want) / want.max_abs().max(1.0)
}
