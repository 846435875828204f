use std::fmt::Debug;

use nalgebra::DMatrix;
use num_complex::Complex64;

use super::ket::FockKet;
use super::pure::PureState;

/// A dense density matrix over an explicit, ordered basis.
///
/// The basis type is a `FockKet` for full states and a factor label for
/// reduced operators.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator<B = FockKet> {
    basis: Vec<B>,
    matrix: DMatrix<Complex64>,
}

impl<B: Clone + Ord + Debug> DensityOperator<B> {
    pub fn new(basis: Vec<B>, matrix: DMatrix<Complex64>) -> Self {
        assert_eq!(matrix.shape(), (basis.len(), basis.len()), "basis/matrix size mismatch");
        DensityOperator { basis, matrix }
    }

    pub fn basis(&self) -> &[B] {
        &self.basis
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn trace(&self) -> Complex64 {
        self.matrix.trace()
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> f64 {
        (&self.matrix * &self.matrix).trace().re
    }

    pub fn hermiticity_deviation(&self) -> f64 {
        (&self.matrix - self.matrix.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Smallest eigenvalue; near zero or positive for a valid state.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.matrix + self.matrix.adjoint()) * Complex64::new(0.5, 0.0);
        herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Entry by basis labels; zero when either label is outside the basis.
    pub fn entry(&self, row: &B, col: &B) -> Complex64 {
        let i = self.basis.iter().position(|b| b == row);
        let j = self.basis.iter().position(|b| b == col);
        match (i, j) {
            (Some(i), Some(j)) => self.matrix[(i, j)],
            _ => Complex64::new(0.0, 0.0),
        }
    }
}

impl DensityOperator<FockKet> {
    /// `|ψ⟩⟨ψ|` over the state's support, in canonical ket order.
    pub fn from_pure(state: &PureState) -> Self {
        let (basis, amps): (Vec<FockKet>, Vec<Complex64>) =
            state.terms().map(|(k, a)| (k.clone(), *a)).unzip();
        let v = nalgebra::DVector::from_vec(amps);
        let matrix = &v * v.adjoint();
        DensityOperator { basis, matrix }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ket::modes;
    use crate::state::Polarization::{H, V};

    #[test]
    fn pure_state_projector_is_a_valid_state() {
        let m = modes(["a", "b"]);
        let s = PureState::from_real([
            (FockKet::photons(m.iter().zip([H, V])), 0.6),
            (FockKet::photons(m.iter().zip([V, H])), -0.8),
        ]);
        let rho = DensityOperator::from_pure(&s);
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.hermiticity_deviation() < 1e-12);
        assert!((rho.purity() - 1.0).abs() < 1e-12);
        assert!(rho.min_eigenvalue() > -1e-12);
    }
}
