//! Seeded random matrices for property corpora (`--seed`) and tests.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::numcore::{c64, CMatrix, C64};

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Standard normal sample by Box-Muller.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c64(gaussian(rng), gaussian(rng)) * std::f64::consts::FRAC_1_SQRT_2)
}

/// Haar-distributed unitary: Gram-Schmidt on a complex Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = complex_gaussian(rng, n, n);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut v: Vec<C64> = (0..n).map(|i| g[(i, j)]).collect();
        for _pass in 0..2 {
            for q in &cols {
                let dot: C64 = q.iter().zip(&v).map(|(a, b)| a.conj() * b).sum();
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= dot * qi;
                }
            }
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= norm);
        cols.push(v);
    }
    CMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Random Hermitian matrix with entries of order one.
pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let g = complex_gaussian(rng, n, n);
    (&g + &g.adjoint()).scale_real(0.5)
}

/// Diagonal density with a random probability vector (all entries at least `floor`).
pub fn random_probability<R: Rng + ?Sized>(rng: &mut R, n: usize, floor: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..1.0)).collect();
    let s: f64 = raw.iter().sum();
    let free = 1.0 - floor * n as f64;
    raw.iter().map(|x| floor + free * x / s).collect()
}

/// Faithful density `u* diag(p) u` with a random spectrum and Haar unitary.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let p = random_probability(rng, n, 0.02);
    conjugate_diag(rng, &p)
}

/// `u* diag(p) u` for a Haar-random `u`.
pub fn conjugate_diag<R: Rng + ?Sized>(rng: &mut R, p: &[f64]) -> CMatrix {
    let u = random_unitary(rng, p.len());
    let d = CMatrix::from_real_diag(p);
    let m = &(&u.adjoint() * &d) * &u;
    (&m + &m.adjoint()).scale_real(0.5)
}

/// Probability vector with prescribed multiplicities: distinct levels, each
/// repeated `mults[i]` times, levels separated by at least `gap`.
pub fn clustered_probability<R: Rng + ?Sized>(rng: &mut R, mults: &[usize], gap: f64) -> Vec<f64> {
    loop {
        let mut levels: Vec<f64> = mults.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
        let total: f64 = levels.iter().zip(mults).map(|(l, &m)| l * m as f64).sum();
        levels.iter_mut().for_each(|l| *l /= total);
        let mut sorted = levels.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[1] - w[0] >= gap) {
            return levels.iter().zip(mults).flat_map(|(&l, &m)| std::iter::repeat(l).take(m)).collect();
        }
    }
}

/// Unitary commuting with `u* diag(p) u`, built block-wise over equal entries of `p`.
pub fn commuting_unitary<R: Rng + ?Sized>(rng: &mut R, p: &[f64], u: &CMatrix, eps: f64) -> CMatrix {
    let n = p.len();
    let mut z = CMatrix::zeros(n, n);
    let mut assigned = vec![false; n];
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        let idx: Vec<usize> = (i..n).filter(|&j| !assigned[j] && (p[j] - p[i]).abs() <= eps).collect();
        let block = random_unitary(rng, idx.len());
        for (a, &ia) in idx.iter().enumerate() {
            assigned[ia] = true;
            for (b, &ib) in idx.iter().enumerate() {
                z[(ia, ib)] = block[(a, b)];
            }
        }
    }
    &(&u.adjoint() * &z) * u
}
