use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::phase_space::{PhaseGrid, X, XI};

/// `M` position samples `x_i = -L + i h` on `[-L, L)` for a given `hbar`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PositionGrid {
    extent: f64,
    points: usize,
    hbar: f64,
}

impl PositionGrid {
    pub fn new(extent: f64, points: usize, hbar: f64) -> Result<Self> {
        PhaseGrid::matched(extent, points, hbar)?;
        Ok(PositionGrid {
            extent,
            points,
            hbar,
        })
    }

    /// The position grid underlying a phase grid matched at `hbar`.
    ///
    /// A grid whose momentum window exceeds the dual window of its position
    /// samples cannot carry the symbol at this `hbar`; the smallest admissible
    /// `hbar` is reported.
    pub fn from_phase_grid(grid: &PhaseGrid, hbar: f64) -> Result<Self> {
        if !grid.is_matched(hbar) {
            let min_hbar = grid.matched_hbar();
            if hbar < min_hbar {
                return Err(Error::HbarTooSmall { hbar, min_hbar });
            }
            return Err(Error::GridMismatch(format!(
                "momentum extent {} is not the dual window {} of the position grid",
                grid.extent(XI),
                std::f64::consts::PI * hbar / grid.spacing(X)
            )));
        }
        Self::new(grid.extent(X), grid.points(), hbar)
    }

    /// Position grid whose dual momentum window covers `[-xi_extent, xi_extent)`.
    pub fn covering(extent: f64, points: usize, hbar: f64, xi_extent: f64) -> Result<Self> {
        let min_hbar = admissible_hbar(extent, points, xi_extent);
        if hbar < min_hbar {
            return Err(Error::HbarTooSmall { hbar, min_hbar });
        }
        Self::new(extent, points, hbar)
    }

    pub fn phase_grid(&self) -> PhaseGrid {
        PhaseGrid::matched(self.extent, self.points, self.hbar).expect("validated")
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.extent / self.points as f64
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        -self.extent + i as f64 * self.spacing()
    }

    /// Momentum value `hbar k` of DFT bin `k`.
    pub fn momentum(&self, k: usize) -> f64 {
        self.hbar * std::f64::consts::PI / self.extent
            * crate::spectral::signed(k, self.points) as f64
    }
}

/// Smallest `hbar` whose dual momentum window covers `[-xi_extent, xi_extent)`.
pub fn admissible_hbar(extent: f64, points: usize, xi_extent: f64) -> f64 {
    2.0 * extent * xi_extent / (std::f64::consts::PI * points as f64)
}

/// Dense operator on the position grid.
#[derive(Clone, Debug)]
pub struct QuantumOperator {
    matrix: DMatrix<C64>,
    grid: PositionGrid,
    hermitian: bool,
}

impl QuantumOperator {
    pub fn new(matrix: DMatrix<C64>, grid: PositionGrid) -> Result<Self> {
        let m = grid.points();
        if matrix.nrows() != m || matrix.ncols() != m {
            return Err(Error::GridMismatch(format!(
                "matrix is {}x{}, grid has {m} points",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(QuantumOperator {
            matrix,
            grid,
            hermitian: false,
        })
    }

    fn check_hermitian(&self) -> Result<()> {
        let defect = self.hermitian_defect();
        let scale = self.matrix.iter().map(|v| v.norm()).fold(0.0, f64::max);
        if defect > 1e-10 * scale.max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidParameter(format!(
                "operator is not Hermitian (defect {defect:e})"
            )));
        }
        Ok(())
    }

    /// Tag as Hermitian after checking `|A - A^*| <= 1e-10 |A|` (max entry).
    pub fn into_hermitian(mut self) -> Result<Self> {
        self.check_hermitian()?;
        self.hermitian = true;
        Ok(self)
    }

    /// Tag as Hermitian when the check passes; otherwise leave untagged.
    pub fn tagged_if_hermitian(mut self) -> Self {
        self.hermitian = self.check_hermitian().is_ok();
        self
    }

    pub fn identity(grid: PositionGrid) -> Self {
        let m = grid.points();
        QuantumOperator {
            matrix: DMatrix::identity(m, m),
            grid,
            hermitian: true,
        }
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// Max-entry modulus of `A - A^*`.
    pub fn hermitian_defect(&self) -> f64 {
        let m = self.matrix.nrows();
        let mut d = 0.0f64;
        for j in 0..m {
            for i in 0..=j {
                d = d.max((self.matrix[(i, j)] - self.matrix[(j, i)].conj()).norm());
            }
        }
        d
    }

    fn ensure_compatible(&self, other: &QuantumOperator) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(
                "operators live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// `a A + b B`.
    pub fn combine(&self, a: f64, other: &QuantumOperator, b: f64) -> Result<QuantumOperator> {
        self.ensure_compatible(other)?;
        let matrix = self.matrix.map(|v| v * a) + other.matrix.map(|v| v * b);
        Ok(QuantumOperator {
            matrix,
            grid: self.grid,
            hermitian: self.hermitian && other.hermitian,
        })
    }

    pub fn sub(&self, other: &QuantumOperator) -> Result<QuantumOperator> {
        self.combine(1.0, other, -1.0)
    }

    /// Operator product `A B`.
    pub fn compose(&self, other: &QuantumOperator) -> Result<QuantumOperator> {
        self.ensure_compatible(other)?;
        Ok(QuantumOperator {
            matrix: matmul(&self.matrix, &other.matrix),
            grid: self.grid,
            hermitian: false,
        })
    }

    pub fn adjoint(&self) -> QuantumOperator {
        QuantumOperator {
            matrix: self.matrix.adjoint(),
            grid: self.grid,
            hermitian: self.hermitian,
        }
    }

    /// `|A^* A - I|` in max-entry modulus.
    pub fn unitarity_defect(&self) -> f64 {
        let p = matmul(&self.matrix.adjoint(), &self.matrix);
        let m = p.nrows();
        let mut d = 0.0f64;
        for j in 0..m {
            for i in 0..m {
                let e = if i == j { p[(i, j)] - 1.0 } else { p[(i, j)] };
                d = d.max(e.norm());
            }
        }
        d
    }
}

/// Dense complex product through the blocked kernel of `matrixmultiply`.
pub fn matmul(a: &DMatrix<C64>, b: &DMatrix<C64>) -> DMatrix<C64> {
    assert_eq!(a.ncols(), b.nrows(), "inner dimensions differ");
    let (m, k, n) = (a.nrows(), a.ncols(), b.ncols());
    let mut c = DMatrix::<C64>::zeros(m, n);
    // nalgebra stores column-major: element (i, j) sits at i + j * nrows.
    // SAFETY: Complex64 is repr(C) with layout [re, im]; pointers and strides
    // describe the full, non-overlapping buffers of a, b and c.
    unsafe {
        matrixmultiply::zgemm(
            matrixmultiply::CGemmOption::Standard,
            matrixmultiply::CGemmOption::Standard,
            m,
            k,
            n,
            [1.0, 0.0],
            a.as_ptr() as *const [f64; 2],
            1,
            m as isize,
            b.as_ptr() as *const [f64; 2],
            1,
            k as isize,
            [0.0, 0.0],
            c.as_mut_ptr() as *mut [f64; 2],
            1,
            m as isize,
        );
    }
    c
}
