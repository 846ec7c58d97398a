//! Seeded random generators for matrices, states and isometries.
//!
//! All randomness in the library flows through an explicitly seeded
//! [`ChaCha8Rng`] so that tests and CLI runs are reproducible bit-for-bit.

use num_complex::Complex64 as C64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::linalg::{ComplexMatrix, HermitianOperator, SubsystemDims};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard complex Gaussian entry (independent N(0,1) real and imaginary
/// parts via Box-Muller).
pub fn gaussian_c64(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(gaussian(rng), gaussian(rng))
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; u1 in (0, 1] avoids log(0).
    let u1: f64 = 1.0 - rng.gen::<f64>();
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn uniform_usize(rng: &mut ChaCha8Rng, bound: usize) -> usize {
    rng.gen_range(0..bound)
}

pub fn random_complex_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// GUE-style random Hermitian matrix (G + G†)/2.
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> HermitianOperator {
    let g = random_complex_matrix(rng, n, n);
    HermitianOperator::new(g.hermitian_part(), SubsystemDims::single(n))
        .expect("symmetrized matrix is Hermitian")
}

/// Haar-random normalized state vector (column).
pub fn random_state_vector(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    loop {
        let v = random_complex_matrix(rng, n, 1);
        let norm = v.frobenius_norm();
        if norm > 1e-8 {
            return v.scale_re(1.0 / norm);
        }
    }
}

/// Random full-rank density matrix G G† / Tr[G G†].
pub fn random_density(rng: &mut ChaCha8Rng, n: usize) -> HermitianOperator {
    let g = random_complex_matrix(rng, n, n);
    let gg = g.matmul(&g.adjoint());
    let t = gg.trace().re;
    HermitianOperator::new_symmetrized(gg.scale_re(1.0 / t), SubsystemDims::single(n))
        .expect("Gram matrix is Hermitian")
}

/// Haar-random unitary via Gram-Schmidt on a Gaussian matrix.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> ComplexMatrix {
    random_isometry(rng, n, n)
}

/// Random isometry V: C^cols -> C^rows (rows >= cols, V†V = I) from
/// orthonormalized Gaussian columns.
pub fn random_isometry(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> ComplexMatrix {
    assert!(rows >= cols, "isometry needs rows >= cols");
    let mut columns: Vec<Vec<C64>> = Vec::with_capacity(cols);
    while columns.len() < cols {
        let mut v: Vec<C64> = (0..rows).map(|_| gaussian_c64(rng)).collect();
        // Modified Gram-Schmidt against accepted columns, twice for
        // numerical orthogonality.
        for _ in 0..2 {
            for u in &columns {
                let proj: C64 = u.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, ui) in v.iter_mut().zip(u) {
                    *vi -= proj * ui;
                }
            }
        }
        let norm: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-8 {
            continue; // numerically dependent draw; resample
        }
        for vi in v.iter_mut() {
            *vi /= norm;
        }
        columns.push(v);
    }
    ComplexMatrix::from_fn(rows, cols, |r, c| columns[c][r])
}
