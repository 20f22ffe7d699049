use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use super::grid::{PhaseGrid, X, XI};
use super::symbol::Symbol;
use crate::error::Result;
use crate::spectral::fft2;

/// Sign and normalization of the phase-space Fourier transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FourierConvention {
    /// Sign of the exponent in the forward transform.
    pub exponent_sign: i8,
    /// The forward transform carries `(2 pi)^(-n * normalization_power)`.
    pub normalization_power: u8,
}

impl FourierConvention {
    /// `bhat(k) = (2 pi)^(-n) \int b(z) exp(-i k.z) dz`, unitary for `n = 1`.
    pub const UNITARY_ANGULAR: FourierConvention = FourierConvention {
        exponent_sign: -1,
        normalization_power: 1,
    };

    pub fn tag(&self) -> &'static str {
        "unitary-angular"
    }
}

/// Fourier coefficients of a symbol on the dual grid, in natural FFT order
/// (bin `k` carries frequency `grid.frequency(axis, k)`).
#[derive(Clone, Debug)]
pub struct FourierSymbol {
    grid: PhaseGrid,
    hbar: f64,
    values: Vec<C64>,
    convention: FourierConvention,
}

fn parity(i: usize, j: usize) -> f64 {
    if (i + j) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Discrete approximation of the transform under [`FourierConvention::UNITARY_ANGULAR`].
pub fn forward_transform(b: &Symbol) -> FourierSymbol {
    let grid = *b.grid();
    let m = grid.points();
    let mut data = b.values().to_vec();
    fft2(&mut data, m, false);
    let c = grid.cell_area() / (2.0 * PI);
    for i in 0..m {
        for j in 0..m {
            data[i * m + j] *= c * parity(i, j);
        }
    }
    FourierSymbol {
        grid,
        hbar: b.hbar(),
        values: data,
        convention: FourierConvention::UNITARY_ANGULAR,
    }
}

/// Exact inverse of [`forward_transform`].
pub fn inverse_transform(bhat: &FourierSymbol) -> Symbol {
    let grid = bhat.grid;
    let m = grid.points();
    let c = grid.cell_area() / (2.0 * PI);
    let scale = 1.0 / (c * (m * m) as f64);
    let mut data = bhat.values.clone();
    for i in 0..m {
        for j in 0..m {
            data[i * m + j] *= scale * parity(i, j);
        }
    }
    fft2(&mut data, m, true);
    Symbol::new(grid, bhat.hbar, data).expect("grid-consistent data")
}

impl FourierSymbol {
    pub fn new(grid: PhaseGrid, hbar: f64, values: Vec<C64>) -> Result<Self> {
        Symbol::new(grid, hbar, values.clone())?;
        Ok(FourierSymbol {
            grid,
            hbar,
            values,
            convention: FourierConvention::UNITARY_ANGULAR,
        })
    }

    /// The primal grid; dual metadata is derived from it.
    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn convention(&self) -> FourierConvention {
        self.convention
    }

    /// Frequency vector of bin `(k1, k2)`.
    pub fn frequency(&self, k1: usize, k2: usize) -> [f64; 2] {
        [self.grid.frequency(X, k1), self.grid.frequency(XI, k2)]
    }

    pub fn at(&self, k1: usize, k2: usize) -> C64 {
        self.values[k1 * self.grid.points() + k2]
    }

    /// Dual cell area `(pi/L_x)(pi/L_xi)`.
    pub fn dual_cell_area(&self) -> f64 {
        self.grid.dual_spacing(X) * self.grid.dual_spacing(XI)
    }

    /// Riemann sum of `|bhat|` over the dual grid.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).sum::<f64>() * self.dual_cell_area()
    }

    /// Riemann sum of `|bhat|^2`, square-rooted.
    pub fn l2_norm(&self) -> f64 {
        (self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * self.dual_cell_area()).sqrt()
    }
}

/// Grid-weighted `L^2` norm of a symbol.
pub fn l2_norm(b: &Symbol) -> f64 {
    (b.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * b.grid().cell_area()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_maps_to_weighted_delta() {
        let g = PhaseGrid::square(4.0, 16).unwrap();
        let one = Symbol::constant(g, 0.1, 1.0).unwrap();
        let hat = forward_transform(&one);
        let area = (2.0 * 4.0f64).powi(2);
        assert!((hat.at(0, 0).re - area / (2.0 * PI)).abs() < 1e-12);
        let rest: f64 = hat
            .values()
            .iter()
            .skip(1)
            .map(|v| v.norm())
            .fold(0.0, f64::max);
        assert!(rest < 1e-12);
    }

    #[test]
    fn cosine_gives_two_deltas() {
        let g = PhaseGrid::square(PI * 4.0, 32).unwrap();
        let b = Symbol::from_real_fn(g, 0.1, |x, _| x.cos()).unwrap();
        let hat = forward_transform(&b);
        let m = 32;
        let mut hits = vec![];
        for k1 in 0..m {
            for k2 in 0..m {
                if hat.at(k1, k2).norm() > 1e-9 {
                    hits.push(hat.frequency(k1, k2));
                }
            }
        }
        assert_eq!(hits.len(), 2);
        for f in hits {
            assert!((f[0].abs() - 1.0).abs() < 1e-12 && f[1] == 0.0);
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let g = PhaseGrid::new([5.0, 3.0], 32).unwrap();
        let b = Symbol::from_fn(g, 0.1, |x, p| {
            C64::new((-(x * x) - p * p).exp(), x.sin() * 0.1)
        })
        .unwrap();
        let back = inverse_transform(&forward_transform(&b));
        assert!(back.distance(&b).unwrap() < 1e-13 * b.max_norm());
    }
}
