//! Discrete Weyl quantization on a matched grid.
//!
//! With `h h_xi = 2 pi hbar / M` the kernel of `Op(b)` sampled at `(x_a, x_b)`
//! times the grid measure is
//! `A_ab = (-1)^d (1/M) sum_m b(X, xi_m) e^{2 pi i d m / M}`,
//! where `d = a - b` (minimum image) and `X = x_b + d h / 2` is the periodic
//! midpoint. Odd `d` put `X` on the half-grid, reached by a band-limited shift.
//! The map is a bijection between grid symbols and `M x M` matrices.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use super::operator::{PositionGrid, QuantumOperator};
use crate::classical::HamiltonianModel;
use crate::error::Result;
use crate::phase_space::Symbol;
use crate::spectral::{fft_cols, fft_rows, signed};

/// Shift every column (fixed momentum index) by `c` grid spacings in position.
fn shift_columns(data: &mut [C64], m: usize, c: f64) {
    fft_cols(data, m, false);
    let norm = 1.0 / m as f64;
    for k in 0..m {
        let ph = C64::from_polar(
            norm,
            2.0 * std::f64::consts::PI * signed(k, m) as f64 * c / m as f64,
        );
        for v in &mut data[k * m..(k + 1) * m] {
            *v *= ph;
        }
    }
    fft_cols(data, m, true);
}

/// `Op(b)` as a dense matrix. Real observables give Hermitian operators.
pub fn weyl_quantize(b: &Symbol, grid: &PositionGrid) -> Result<QuantumOperator> {
    let pg = PositionGrid::from_phase_grid(b.grid(), b.hbar())?;
    if pg != *grid {
        return Err(crate::Error::GridMismatch(
            "symbol grid does not match the position grid".into(),
        ));
    }
    let m = grid.points();
    // t[i][d] = (1/M) sum_m b(x_i, xi_m) e^{2 pi i d m / M}
    let mut t = b.values().to_vec();
    fft_rows(&mut t, m, true);
    let norm = 1.0 / m as f64;
    t.iter_mut().for_each(|v| *v *= norm);
    let mut half = t.clone();
    shift_columns(&mut half, m, 0.5);
    let mut matrix = DMatrix::<C64>::zeros(m, m);
    let mi = m as i64;
    for dk in 0..m {
        let d = signed(dk, m);
        let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
        let (src, off) = if d % 2 == 0 {
            (&t, d / 2)
        } else {
            (&half, (d - 1).div_euclid(2))
        };
        for col in 0..m {
            let row = (col as i64 + d).rem_euclid(mi) as usize;
            let i = (col as i64 + off).rem_euclid(mi) as usize;
            matrix[(row, col)] = src[i * m + dk] * sign;
        }
    }
    let op = QuantumOperator::new(matrix, *grid)?;
    // A real symbol with Nyquist content across half a period can leave the
    // d = -M/2 band slightly non-Hermitian; such operators stay untagged.
    Ok(if b.is_real_observable() {
        op.tagged_if_hermitian()
    } else {
        op
    })
}

/// The grid symbol whose quantization is `a` (inverse of [`weyl_quantize`]).
pub fn weyl_symbol(a: &QuantumOperator) -> Result<Symbol> {
    let grid = *a.grid();
    let m = grid.points();
    let mi = m as i64;
    let mat = a.matrix();
    let mut t = vec![C64::new(0.0, 0.0); m * m];
    let mut half = vec![C64::new(0.0, 0.0); m * m];
    for dk in 0..m {
        let d = signed(dk, m);
        let sign = if d % 2 == 0 { 1.0 } else { -1.0 };
        let (dst, off) = if d % 2 == 0 {
            (&mut t, d / 2)
        } else {
            (&mut half, (d - 1).div_euclid(2))
        };
        for col in 0..m {
            let row = (col as i64 + d).rem_euclid(mi) as usize;
            let i = (col as i64 + off).rem_euclid(mi) as usize;
            dst[i * m + dk] = mat[(row, col)] * sign;
        }
    }
    shift_columns(&mut half, m, -0.5);
    for i in 0..m {
        for dk in 0..m {
            if signed(dk, m) % 2 != 0 {
                t[i * m + dk] = half[i * m + dk];
            }
        }
    }
    fft_rows(&mut t, m, false);
    let s = Symbol::new(grid.phase_grid(), grid.hbar(), t)?;
    Ok(if a.is_hermitian() { s.real_part() } else { s })
}

/// `Op(xi^2/2 + V(x))` assembled directly: spectral kinetic part plus a
/// diagonal potential. Equals [`weyl_quantize`] of the sampled symbol.
pub fn hamiltonian_operator(
    model: &HamiltonianModel,
    grid: &PositionGrid,
) -> Result<QuantumOperator> {
    let m = grid.points();
    let kinetic: Vec<f64> = (0..m).map(|k| 0.5 * grid.momentum(k).powi(2)).collect();
    // K_ab = (1/M) sum_k T_k e^{2 pi i k (a - b) / M} depends on a - b only.
    let mut row: Vec<C64> = kinetic
        .iter()
        .map(|&v| C64::new(v / m as f64, 0.0))
        .collect();
    crate::spectral::plan(m, true).process(&mut row);
    // Real and even in a - b up to round-off.
    let even: Vec<C64> = (0..m)
        .map(|n| C64::new(0.5 * (row[n].re + row[(m - n) % m].re), 0.0))
        .collect();
    let mut matrix = DMatrix::<C64>::from_fn(m, m, |a, b| even[(a + m - b) % m]);
    for i in 0..m {
        matrix[(i, i)] += model.potential.derivative(0, grid.coordinate(i));
    }
    QuantumOperator::new(matrix, *grid)?.into_hermitian()
}
