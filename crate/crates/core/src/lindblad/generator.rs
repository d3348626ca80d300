use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};

use super::fock::{FockSpace, Sparse, DEFAULT_DIM_CAP};
use crate::error::{Error, Result};
use crate::linear::{C64, I};
use crate::model::{CouplerParams, NetworkLayout};
use crate::timedomain::DriveEnvelope;

#[derive(Clone, Debug)]
pub struct SpaceOptions {
    /// Per-mode truncation d_k (applied to every mode).
    pub fock_dim: usize,
    /// Total-excitation cap; `None` keeps the full tensor-product space.
    pub max_excitations: Option<usize>,
    pub dim_cap: usize,
}

impl Default for SpaceOptions {
    fn default() -> Self {
        Self { fock_dim: 3, max_excitations: None, dim_cap: DEFAULT_DIM_CAP }
    }
}

/// Pump term c(t)·a†b + h.c. for one a-mode of one coupler.
#[derive(Clone, Debug)]
struct DriveTerm {
    coupler: usize,
    /// 0 for the first a-mode of the coupler, 1 for the second
    which: usize,
    op: Sparse,
    op_adj: Sparse,
}

/// dρ/dt = −i(Kρ − ρK†) + Σ_m L_m ρ L_m†, with K = H − (i/2)Σ Γ_jk c_k†c_j.
#[derive(Clone, Debug)]
pub struct Generator {
    pub space: FockSpace,
    /// Mode index of each coupler's (a1, a2, b).
    pub coupler_modes: Vec<[usize; 3]>,
    /// Static part of K.
    k0: Sparse,
    drive_terms: Vec<DriveTerm>,
    pub drives: Vec<DriveEnvelope>,
    pub jumps: Vec<Sparse>,
    /// Γ over modes (energy-decay and cross-decay rates).
    pub rate_matrix: DMatrix<f64>,
    /// Static single-particle Hamiltonian h (H = Σ h_jk c_j† c_k, pumps excluded).
    pub static_h: DMatrix<f64>,
}

/// Hermitian-part diagnostic for the complete-positivity check.
const CP_TOLERANCE: f64 = 1e-12;

pub fn build_single_coupler_generator(
    params: &CouplerParams,
    drive: &DriveEnvelope,
    opts: &SpaceOptions,
) -> Result<Generator> {
    let layout = NetworkLayout {
        positions: vec![0.0, params.path_delay_phase / (2.0 * PI)],
        couplers: vec![*params],
    };
    build_network(&layout, std::slice::from_ref(drive), opts)
}

pub fn build_two_coupler_generator(layout: &NetworkLayout, drives: &[DriveEnvelope], opts: &SpaceOptions) -> Result<Generator> {
    if layout.couplers.len() != 2 || drives.len() != 2 {
        return Err(Error::Domain("two-coupler generator needs two couplers and two drives".into()));
    }
    layout.validate()?;
    build_network(layout, drives, opts)
}

/// Any number of couplers on one line; modes are ordered (a1, a2, b) per coupler.
pub fn build_network(layout: &NetworkLayout, drives: &[DriveEnvelope], opts: &SpaceOptions) -> Result<Generator> {
    let nc = layout.couplers.len();
    if drives.len() != nc || layout.positions.len() != 2 * nc {
        return Err(Error::Domain("layout, drives and positions disagree".into()));
    }
    let nm = 3 * nc;
    let space = FockSpace::new(vec![opts.fock_dim; nm], opts.max_excitations, opts.dim_cap)?;
    let coupler_modes: Vec<[usize; 3]> = (0..nc).map(|k| [3 * k, 3 * k + 1, 3 * k + 2]).collect();

    // a-mode list: (mode index, position index, γ, γᵢ)
    let mut a_modes = Vec::new();
    for (k, c) in layout.couplers.iter().enumerate() {
        a_modes.push((3 * k, 2 * k, c.a1.external_coupling, c.a1.internal_damping));
        a_modes.push((3 * k + 1, 2 * k + 1, c.a2.external_coupling, c.a2.internal_damping));
    }

    let mut gamma = DMatrix::<f64>::zeros(nm, nm);
    let mut h = DMatrix::<f64>::zeros(nm, nm);
    for &(j, pj, gj, gij) in &a_modes {
        gamma[(j, j)] = 2.0 * gj + gij;
        for &(k, pk, gk, _) in &a_modes {
            if j == k {
                continue;
            }
            let phase = 2.0 * PI * (layout.positions[pj] - layout.positions[pk]).abs();
            let kk = (gj * gk).sqrt();
            gamma[(j, k)] = 2.0 * kk * phase.cos();
            h[(j, k)] = kk * phase.sin();
        }
    }
    for (k, c) in layout.couplers.iter().enumerate() {
        let b = 3 * k + 2;
        gamma[(b, b)] = c.b.external_coupling + c.b.internal_damping;
        h[(3 * k, 3 * k + 1)] += c.cancellation_coupling;
        h[(3 * k + 1, 3 * k)] += c.cancellation_coupling;
    }

    let eig = SymmetricEigen::new(gamma.clone());
    let scale = gamma.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < -CP_TOLERANCE * scale {
        return Err(Error::NotCompletelyPositive(min_eig));
    }

    let lower: Vec<Sparse> = (0..nm).map(|m| space.lowering(m)).collect();
    let raise: Vec<Sparse> = lower.iter().map(Sparse::adjoint).collect();
    let n = space.dim();

    let mut k0 = Sparse::zero(n);
    for j in 0..nm {
        for k in 0..nm {
            // h_jk c_j†c_k − (i/2)Γ_kj c_j†c_k
            let coef = C64::from(h[(j, k)]) - 0.5 * I * gamma[(k, j)];
            if coef != C64::from(0.0) {
                k0 = k0.add(&raise[j].mul(&lower[k]).scale(coef));
            }
        }
    }

    let mut jumps = Vec::new();
    for (m, &lam) in eig.eigenvalues.iter().enumerate() {
        if lam <= CP_TOLERANCE * scale {
            continue;
        }
        let mut l = Sparse::zero(n);
        for j in 0..nm {
            let v = eig.eigenvectors[(j, m)];
            if v.abs() > 1e-15 {
                l = l.add(&lower[j].scale(C64::from(lam.sqrt() * v)));
            }
        }
        jumps.push(l);
    }

    let mut drive_terms = Vec::new();
    for k in 0..nc {
        let b = 3 * k + 2;
        for which in 0..2 {
            let op = raise[3 * k + which].mul(&lower[b]);
            let op_adj = op.adjoint();
            drive_terms.push(DriveTerm { coupler: k, which, op, op_adj });
        }
    }

    Ok(Generator {
        space,
        coupler_modes,
        k0,
        drive_terms,
        drives: drives.to_vec(),
        jumps,
        rate_matrix: gamma,
        static_h: h,
    })
}

impl Generator {
    /// Pump amplitudes (c1, c2) per coupler at time t.
    pub fn amplitudes(&self, t: f64) -> Vec<(C64, C64)> {
        self.drives.iter().map(|d| d.amplitudes(t)).collect()
    }

    /// Kρ into `out` (overwriting).
    fn apply_k(&self, amps: &[(C64, C64)], rho: &DMatrix<C64>, out: &mut DMatrix<C64>) {
        out.fill(C64::from(0.0));
        self.k0.mul_dense_into(C64::from(1.0), rho, out);
        for d in &self.drive_terms {
            let (c1, c2) = amps[d.coupler];
            let c = if d.which == 0 { c1 } else { c2 };
            if c != C64::from(0.0) {
                d.op.mul_dense_into(c, rho, out);
                d.op_adj.mul_dense_into(c.conj(), rho, out);
            }
        }
    }

    /// dρ/dt at time t.
    pub fn apply(&self, t: f64, rho: &DMatrix<C64>) -> DMatrix<C64> {
        let amps = self.amplitudes(t);
        let n = rho.nrows();
        let mut a = DMatrix::zeros(n, n);
        self.apply_k(&amps, rho, &mut a);
        // ρK† = (Kρ†)†
        let mut b = DMatrix::zeros(n, n);
        self.apply_k(&amps, &rho.adjoint(), &mut b);
        let mut out = (a - b.adjoint()) * (-I);
        for l in &self.jumps {
            let lr = l.mul_dense(rho);
            let llr = l.mul_dense(&lr.adjoint());
            out += llr.adjoint();
        }
        out
    }

    pub fn max_rate(&self, t0: f64, t1: f64) -> f64 {
        let g = self.drives.iter().map(|d| d.max_on(t0, t1)).fold(0.0, f64::max);
        let r = self.rate_matrix.iter().chain(self.static_h.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
        g.max(r)
    }

    /// Single-particle evolution matrix A(t) with d⟨c⟩/dt = A⟨c⟩.
    pub fn mode_matrix(&self, t: f64) -> DMatrix<C64> {
        let nm = self.rate_matrix.nrows();
        let mut h = self.static_h.map(C64::from);
        for (k, (c1, c2)) in self.amplitudes(t).into_iter().enumerate() {
            let [a1, a2, b] = self.coupler_modes[k];
            h[(a1, b)] += c1;
            h[(b, a1)] += c1.conj();
            h[(a2, b)] += c2;
            h[(b, a2)] += c2.conj();
        }
        let g = self.rate_matrix.transpose().map(C64::from);
        DMatrix::from_fn(nm, nm, |i, j| -I * h[(i, j)] - 0.5 * g[(i, j)])
    }
}
