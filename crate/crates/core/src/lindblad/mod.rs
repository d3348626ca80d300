//! Master-equation simulation on truncated Fock spaces.

mod fock;
mod generator;
mod propagate;
mod transfer;
mod wigner;

pub use fock::{FockSpace, Sparse, DEFAULT_DIM_CAP};
pub use generator::{build_network, build_single_coupler_generator, build_two_coupler_generator, Generator, SpaceOptions};
pub use propagate::{propagate, Propagation, PropagateOptions};
pub use transfer::{transfer_experiment, StateSpec, TransferOptions, TransferResult};
pub use wigner::{displacement_element, wigner, wigner_imag_max, WignerMap};

use nalgebra::{DMatrix, DVector};

use crate::linear::C64;

#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    pub rho: DMatrix<C64>,
    pub t: f64,
}

impl DensityMatrix {
    pub fn pure(psi: &[C64], t: f64) -> Self {
        let v = DVector::from_column_slice(psi);
        let norm = v.norm();
        let v = v / C64::from(norm);
        Self { rho: &v * v.adjoint(), t }
    }

    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn purity(&self) -> f64 {
        (&self.rho * &self.rho).trace().re
    }

    pub fn hermiticity_defect(&self) -> f64 {
        (&self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let h = (&self.rho + self.rho.adjoint()) * C64::from(0.5);
        h.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// ⟨ψ|ρ|ψ⟩ for normalised ψ.
    pub fn fidelity_pure(&self, psi: &[C64]) -> f64 {
        let v = DVector::from_column_slice(psi);
        let v = &v / C64::from(v.norm());
        (v.adjoint() * &self.rho * &v)[(0, 0)].re
    }

    /// Expectation of a diagonal observable given by its diagonal.
    pub fn expect_diag(&self, d: &[f64]) -> f64 {
        d.iter().enumerate().map(|(i, v)| v * self.rho[(i, i)].re).sum()
    }

    pub fn expect(&self, op: &Sparse) -> C64 {
        op.mul_dense(&self.rho).trace()
    }

    /// e^{−iθ n} ρ e^{iθ n} for a single mode.
    pub fn rotate_phase(&self, theta: f64) -> Self {
        let n = self.dim();
        let rho = DMatrix::from_fn(n, n, |i, j| self.rho[(i, j)] * C64::from_polar(1.0, -theta * (i as f64 - j as f64)));
        Self { rho, t: self.t }
    }
}
