use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64 as C64;

use super::operator::{matmul, PositionGrid, QuantumOperator};
use crate::error::{Error, Result};

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// Spectral data of a Hermitian Hamiltonian, reused for every time.
#[derive(Clone, Debug)]
pub struct Propagator {
    grid: PositionGrid,
    energies: Vec<f64>,
    basis: DMatrix<C64>,
    basis_adj: DMatrix<C64>,
}

/// `V^* B V` in the eigenbasis of a [`Propagator`].
#[derive(Clone, Debug)]
pub struct PreparedObservable {
    rotated: DMatrix<C64>,
    hermitian: bool,
}

impl Propagator {
    pub fn new(h: &QuantumOperator) -> Result<Self> {
        if !h.is_hermitian() {
            return Err(Error::InvalidParameter(
                "the Hamiltonian must be Hermitian".into(),
            ));
        }
        let mat = h.matrix();
        let scale = mat.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let imag = mat.iter().map(|v| v.im.abs()).fold(0.0, f64::max);
        let (energies, basis) = if imag <= 1e-14 * scale {
            let re = mat.map(|v| v.re);
            let re = (&re + re.transpose()) * 0.5;
            let eig = SymmetricEigen::try_new(re, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(
                Error::NoConvergence {
                    iterations: EIGEN_MAX_ITER,
                },
            )?;
            (
                eig.eigenvalues.iter().copied().collect::<Vec<_>>(),
                eig.eigenvectors.map(|v| C64::new(v, 0.0)),
            )
        } else {
            let herm = (mat + mat.adjoint()) * C64::new(0.5, 0.0);
            let eig = SymmetricEigen::try_new(herm, EIGEN_EPS, EIGEN_MAX_ITER).ok_or(
                Error::NoConvergence {
                    iterations: EIGEN_MAX_ITER,
                },
            )?;
            (
                eig.eigenvalues.iter().copied().collect::<Vec<_>>(),
                eig.eigenvectors,
            )
        };
        let basis_adj = basis.adjoint();
        Ok(Propagator {
            grid: *h.grid(),
            energies,
            basis,
            basis_adj,
        })
    }

    pub fn grid(&self) -> &PositionGrid {
        &self.grid
    }

    /// Eigenvalues, unsorted, in the order of the basis columns.
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn basis(&self) -> &DMatrix<C64> {
        &self.basis
    }

    fn phases(&self, t: f64) -> Vec<C64> {
        let hbar = self.grid.hbar();
        self.energies
            .iter()
            .map(|&e| C64::from_polar(1.0, e * t / hbar))
            .collect()
    }

    /// `U(t) = exp(i H t / hbar)`.
    pub fn unitary(&self, t: f64) -> QuantumOperator {
        let ph = self.phases(t);
        let mut scaled = self.basis.clone();
        for (j, p) in ph.iter().enumerate() {
            scaled.column_mut(j).iter_mut().for_each(|v| *v *= p);
        }
        QuantumOperator::new(matmul(&scaled, &self.basis_adj), self.grid).expect("same grid")
    }

    pub fn prepare(&self, b: &QuantumOperator) -> Result<PreparedObservable> {
        if *b.grid() != self.grid {
            return Err(Error::GridMismatch(
                "observable and Hamiltonian grids differ".into(),
            ));
        }
        let rotated = matmul(&matmul(&self.basis_adj, b.matrix()), &self.basis);
        Ok(PreparedObservable {
            rotated,
            hermitian: b.is_hermitian(),
        })
    }

    /// `B_t = U(t) B U(-t)`.
    pub fn evolve(&self, b: &PreparedObservable, t: f64) -> QuantumOperator {
        let ph = self.phases(t);
        let m = ph.len();
        let mut inner = b.rotated.clone();
        for k in 0..m {
            let ck = ph[k].conj();
            for j in 0..m {
                inner[(j, k)] *= ph[j] * ck;
            }
        }
        let out = matmul(&matmul(&self.basis, &inner), &self.basis_adj);
        let op = QuantumOperator::new(out, self.grid).expect("same grid");
        if b.hermitian {
            op.tagged_if_hermitian()
        } else {
            op
        }
    }
}

/// `U(t) = exp(i H t / hbar)`.
pub fn propagator(h: &QuantumOperator, t: f64) -> Result<QuantumOperator> {
    Ok(Propagator::new(h)?.unitary(t))
}

/// `B_t = U(t) B U(-t)`.
pub fn heisenberg_evolve(
    b: &QuantumOperator,
    h: &QuantumOperator,
    t: f64,
) -> Result<QuantumOperator> {
    let p = Propagator::new(h)?;
    Ok(p.evolve(&p.prepare(b)?, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::HamiltonianModel;
    use crate::quantum::hamiltonian_operator;

    #[test]
    fn zero_time_is_identity_and_group_law_holds() {
        let grid = PositionGrid::new(6.0, 32, 0.2).unwrap();
        let h = hamiltonian_operator(&HamiltonianModel::gaussian_well(1.0), &grid).unwrap();
        let p = Propagator::new(&h).unwrap();
        assert!(p
            .unitary(0.0)
            .sub(&QuantumOperator::identity(grid))
            .unwrap()
            .matrix()
            .iter()
            .all(|v| v.norm() < 1e-12));
        let u = p.unitary(0.3).compose(&p.unitary(0.9)).unwrap();
        let w = p.unitary(1.2);
        assert!((u.matrix() - w.matrix()).iter().all(|v| v.norm() < 1e-11));
        assert!(w.unitarity_defect() < 1e-11);
    }
}
