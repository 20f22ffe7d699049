use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::spectral::signed;

/// Index of the position axis.
pub const X: usize = 0;
/// Index of the momentum axis.
pub const XI: usize = 1;

/// Node-centred rectangular grid on `[-L_x, L_x) x [-L_xi, L_xi)` with `M`
/// points per axis, for one degree of freedom.
///
/// Node `i` on an axis sits at `-L + i h` with `h = 2L/M`, so the origin is a
/// node. Arrays over the grid are row-major with the position index slow.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseGrid {
    extents: [f64; 2],
    points: usize,
}

impl PhaseGrid {
    pub fn new(extents: [f64; 2], points: usize) -> Result<Self> {
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be a power of two >= 8, got {points}"
            )));
        }
        for &l in &extents {
            if !(l.is_finite() && l > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "extent must be positive, got {l}"
                )));
            }
        }
        Ok(PhaseGrid { extents, points })
    }

    pub fn square(extent: f64, points: usize) -> Result<Self> {
        Self::new([extent, extent], points)
    }

    /// Grid whose momentum axis is the discrete Fourier dual of the position
    /// axis at this `hbar`: `L_xi = pi hbar M / (2 L_x)`.
    pub fn matched(position_extent: f64, points: usize, hbar: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "hbar must be positive, got {hbar}"
            )));
        }
        let xi = PI * hbar * points as f64 / (2.0 * position_extent);
        Self::new([position_extent, xi], points)
    }

    /// Degrees of freedom; always one.
    pub fn dof(&self) -> usize {
        1
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points * self.points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn extents(&self) -> [f64; 2] {
        self.extents
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.extents[axis]
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        2.0 * self.extents[axis] / self.points as f64
    }

    pub fn coordinate(&self, axis: usize, i: usize) -> f64 {
        -self.extents[axis] + i as f64 * self.spacing(axis)
    }

    pub fn coordinates(&self, axis: usize) -> Vec<f64> {
        (0..self.points).map(|i| self.coordinate(axis, i)).collect()
    }

    /// Phase-space point of flat index `idx`.
    pub fn node(&self, idx: usize) -> [f64; 2] {
        let m = self.points;
        [self.coordinate(X, idx / m), self.coordinate(XI, idx % m)]
    }

    /// Spacing of the dual (Fourier) grid on an axis: `pi / L`.
    pub fn dual_spacing(&self, axis: usize) -> f64 {
        PI / self.extents[axis]
    }

    /// Nyquist frequency on an axis: `pi M / (2 L)`.
    pub fn nyquist(&self, axis: usize) -> f64 {
        PI * self.points as f64 / (2.0 * self.extents[axis])
    }

    /// Angular frequency of DFT bin `k` on an axis.
    pub fn frequency(&self, axis: usize, k: usize) -> f64 {
        self.dual_spacing(axis) * signed(k, self.points) as f64
    }

    /// Area element `h_x h_xi`.
    pub fn cell_area(&self) -> f64 {
        self.spacing(X) * self.spacing(XI)
    }

    /// True if the momentum axis is the Fourier dual of the position axis at
    /// this `hbar` (relative tolerance 1e-10).
    pub fn is_matched(&self, hbar: f64) -> bool {
        let want = PI * hbar / self.spacing(X);
        (self.extents[XI] - want).abs() <= 1e-10 * want
    }

    /// The `hbar` at which this grid is matched.
    pub fn matched_hbar(&self) -> f64 {
        self.extents[XI] * self.spacing(X) / PI
    }

    pub fn same_as(&self, other: &PhaseGrid) -> bool {
        self.points == other.points
            && self
                .extents
                .iter()
                .zip(other.extents.iter())
                .all(|(a, b)| (a - b).abs() <= 1e-13 * a.abs().max(b.abs()))
    }
}
