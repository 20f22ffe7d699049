use num_complex::Complex64 as C64;

use super::grid::{PhaseGrid, X, XI};
use crate::error::{Error, Result};

/// Relative tolerance on the imaginary part of a real observable.
pub const REAL_TOLERANCE: f64 = 1e-12;

/// Boundary-to-peak amplitude ratio below which a symbol counts as decaying.
pub const DECAY_RATIO: f64 = 1e-8;

/// A complex function sampled on a [`PhaseGrid`], together with `hbar`.
#[derive(Clone, Debug)]
pub struct Symbol {
    grid: PhaseGrid,
    hbar: f64,
    values: Vec<C64>,
    real_observable: bool,
}

impl Symbol {
    pub fn new(grid: PhaseGrid, hbar: f64, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, got {}",
                grid.len(),
                values.len()
            )));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        Ok(Symbol {
            grid,
            hbar,
            values,
            real_observable: false,
        })
    }

    pub fn from_fn(grid: PhaseGrid, hbar: f64, f: impl Fn(f64, f64) -> C64) -> Result<Self> {
        let m = grid.points();
        let xs = grid.coordinates(X);
        let ps = grid.coordinates(XI);
        let mut values = Vec::with_capacity(m * m);
        for &x in &xs {
            for &p in &ps {
                values.push(f(x, p));
            }
        }
        Self::new(grid, hbar, values)
    }

    /// Real-valued symbol, tagged as a real observable.
    pub fn from_real_fn(grid: PhaseGrid, hbar: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut s = Self::from_fn(grid, hbar, |x, p| C64::new(f(x, p), 0.0))?;
        s.real_observable = true;
        Ok(s)
    }

    pub fn zeros(grid: PhaseGrid, hbar: f64) -> Result<Self> {
        let mut s = Self::new(grid, hbar, vec![C64::new(0.0, 0.0); grid.len()])?;
        s.real_observable = true;
        Ok(s)
    }

    pub fn constant(grid: PhaseGrid, hbar: f64, c: f64) -> Result<Self> {
        let mut s = Self::new(grid, hbar, vec![C64::new(c, 0.0); grid.len()])?;
        s.real_observable = true;
        Ok(s)
    }

    /// Tag as a real observable after checking the imaginary part.
    pub fn into_real_observable(mut self) -> Result<Self> {
        let scale = self.max_norm().max(f64::MIN_POSITIVE);
        let imag = self.max_abs_imag();
        if imag > REAL_TOLERANCE * scale {
            return Err(Error::InvalidParameter(format!(
                "imaginary part {imag:e} exceeds tolerance for a real observable"
            )));
        }
        self.real_observable = true;
        Ok(self)
    }

    /// Drop the imaginary part and tag as a real observable.
    pub fn real_part(&self) -> Symbol {
        let values = self.values.iter().map(|v| C64::new(v.re, 0.0)).collect();
        Symbol {
            grid: self.grid,
            hbar: self.hbar,
            values,
            real_observable: true,
        }
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    pub fn is_real_observable(&self) -> bool {
        self.real_observable
    }

    pub fn at(&self, i: usize, j: usize) -> C64 {
        self.values[i * self.grid.points() + j]
    }

    pub fn max_norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_abs_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Largest modulus on the outer ring of nodes divided by the peak modulus.
    pub fn boundary_ratio(&self) -> f64 {
        let peak = self.max_norm();
        if peak == 0.0 {
            return 0.0;
        }
        let m = self.grid.points();
        let mut edge: f64 = 0.0;
        for k in 0..m {
            for idx in [k, (m - 1) * m + k, k * m, k * m + m - 1] {
                edge = edge.max(self.values[idx].norm());
            }
        }
        edge / peak
    }

    /// Whether the symbol is negligible on the grid boundary.
    pub fn is_decaying(&self) -> bool {
        self.boundary_ratio() <= DECAY_RATIO
    }

    pub fn ensure_compatible(&self, other: &Symbol) -> Result<()> {
        if !self.grid.same_as(&other.grid) {
            return Err(Error::GridMismatch(format!(
                "{:?} vs {:?}",
                self.grid, other.grid
            )));
        }
        if (self.hbar - other.hbar).abs() > 1e-14 * self.hbar {
            return Err(Error::GridMismatch(format!(
                "hbar {} vs {}",
                self.hbar, other.hbar
            )));
        }
        Ok(())
    }

    /// New symbol on the same grid from raw values.
    pub fn with_values(&self, values: Vec<C64>) -> Symbol {
        assert_eq!(values.len(), self.values.len());
        Symbol {
            grid: self.grid,
            hbar: self.hbar,
            values,
            real_observable: false,
        }
    }

    pub fn map(&self, f: impl Fn(C64) -> C64) -> Symbol {
        self.with_values(self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn scale(&self, a: f64) -> Symbol {
        let mut s = self.map(|v| v * a);
        s.real_observable = self.real_observable;
        s
    }

    /// `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &Symbol, b: f64) -> Result<Symbol> {
        self.ensure_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u * a + v * b)
            .collect();
        let mut s = self.with_values(values);
        s.real_observable = self.real_observable && other.real_observable;
        Ok(s)
    }

    pub fn add(&self, other: &Symbol) -> Result<Symbol> {
        self.combine(1.0, other, 1.0)
    }

    pub fn sub(&self, other: &Symbol) -> Result<Symbol> {
        self.combine(1.0, other, -1.0)
    }

    /// Pointwise product.
    pub fn mul(&self, other: &Symbol) -> Result<Symbol> {
        self.ensure_compatible(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| u * v)
            .collect();
        Ok(self.with_values(values))
    }

    /// Max-norm distance to another symbol on the same grid.
    pub fn distance(&self, other: &Symbol) -> Result<f64> {
        self.ensure_compatible(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(u, v)| (u - v).norm())
            .fold(0.0, f64::max))
    }

    /// Max-norm distance restricted to nodes with `|x| <= rx` and `|xi| <= rp`.
    pub fn distance_within(&self, other: &Symbol, rx: f64, rp: f64) -> Result<f64> {
        self.ensure_compatible(other)?;
        let mut d: f64 = 0.0;
        for (idx, (u, v)) in self.values.iter().zip(&other.values).enumerate() {
            let [x, p] = self.grid.node(idx);
            if x.abs() <= rx && p.abs() <= rp {
                d = d.max((u - v).norm());
            }
        }
        Ok(d)
    }
}
