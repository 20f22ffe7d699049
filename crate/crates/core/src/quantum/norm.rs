use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::operator::QuantumOperator;
use crate::error::{Error, Result};
use crate::phase_space::{forward_transform, Symbol};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormOptions {
    /// Relative tolerance on the largest singular value.
    pub tol: f64,
    /// Krylov dimension cap.
    pub max_iter: usize,
    pub seed: u64,
}

impl Default for NormOptions {
    fn default() -> Self {
        NormOptions {
            tol: 1e-9,
            max_iter: 400,
            seed: 0x5eed,
        }
    }
}

/// Largest singular value, by Lanczos iteration on `A^* A` with full
/// reorthogonalization.
pub fn operator_norm(a: &QuantumOperator) -> Result<f64> {
    operator_norm_with(a.matrix(), NormOptions::default())
}

pub fn operator_norm_with(a: &DMatrix<C64>, opts: NormOptions) -> Result<f64> {
    let n = a.ncols();
    if n == 0 || a.iter().all(|v| *v == C64::new(0.0, 0.0)) {
        return Ok(0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut q = DVector::<C64>::from_fn(n, |_, _| {
        C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    q /= C64::new(q.norm(), 0.0);
    let cap = opts.max_iter.min(n);
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(cap + 1);
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut theta = 0.0;
    for j in 0..cap {
        basis.push(q.clone());
        let mut w = a.ad_mul(&(a * &q));
        let aj = q.dotc(&w).re;
        alpha.push(aj);
        // Two passes of Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for v in &basis {
                let c = v.dotc(&w);
                w.axpy(-c, v, C64::new(1.0, 0.0));
            }
        }
        let bj = w.norm();
        let k = j + 1;
        let t = DMatrix::<f64>::from_fn(k, k, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(t);
        let (imax, &tmax) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.total_cmp(y.1))
            .expect("nonempty");
        theta = tmax;
        let residual = bj * eig.eigenvectors[(k - 1, imax)].abs();
        if residual <= opts.tol * theta || bj <= 1e-14 * theta.max(f64::MIN_POSITIVE) {
            return Ok(theta.max(0.0).sqrt());
        }
        beta.push(bj);
        q = w / C64::new(bj, 0.0);
    }
    if cap == n {
        // The Krylov space is the whole space: the Ritz value is exact.
        return Ok(theta.max(0.0).sqrt());
    }
    Err(Error::NoConvergence { iterations: cap })
}

/// `|r^|_{L^1}` on the dual grid, in the unitary angular convention.
///
/// Dominates the operator norm of `Op(r)` with a factor `2 pi` to spare.
pub fn l1_fourier_norm_bound(r: &Symbol) -> f64 {
    if r.is_zero() {
        return 0.0;
    }
    forward_transform(r).l1_norm()
}
