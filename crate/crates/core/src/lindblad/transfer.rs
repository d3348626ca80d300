use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::generator::{build_two_coupler_generator, SpaceOptions};
use super::propagate::{propagate, propagate_modes, PropagateOptions};
use super::{DensityMatrix, DEFAULT_DIM_CAP};
use crate::error::{Error, Result};
use crate::linear::C64;
use crate::model::{NetworkLayout, WavepacketSpec};
use crate::timedomain::{envelope_gamma, DriveEnvelope, TimeGrid};

/// Single-mode state placed on the sender's b mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StateSpec {
    Fock(usize),
    /// (|0⟩ + |1⟩)/√2
    Plus,
    /// Amplitudes over |0⟩, |1⟩, …
    Superposition(Vec<(f64, f64)>),
    Coherent { re: f64, im: f64 },
    /// (|α⟩ ± |−α⟩) normalised; `even` selects +.
    Cat { alpha: f64, even: bool },
}

/// Tail weight dropped when truncating coherent and cat states.
const TAIL: f64 = 1e-6;

fn coherent_amps(alpha: C64, nmax: usize) -> Vec<C64> {
    let mut v = Vec::with_capacity(nmax + 1);
    let mut c = C64::from((-0.5 * alpha.norm_sqr()).exp());
    for n in 0..=nmax {
        v.push(c);
        c *= alpha / ((n + 1) as f64).sqrt();
    }
    v
}

impl StateSpec {
    pub fn is_cat(&self) -> bool {
        matches!(self, StateSpec::Cat { .. })
    }

    /// Normalised amplitudes, truncated where the neglected weight is below 1e-6.
    pub fn amplitudes(&self) -> Vec<C64> {
        let mut v = match self {
            StateSpec::Fock(n) => {
                let mut v = vec![C64::from(0.0); n + 1];
                v[*n] = C64::from(1.0);
                v
            }
            StateSpec::Plus => vec![C64::from(1.0), C64::from(1.0)],
            StateSpec::Superposition(a) => a.iter().map(|&(r, i)| C64::new(r, i)).collect(),
            StateSpec::Coherent { re, im } => truncate(coherent_amps(C64::new(*re, *im), 60)),
            StateSpec::Cat { alpha, even } => {
                let s = if *even { 1.0 } else { -1.0 };
                let p = coherent_amps(C64::from(*alpha), 60);
                let m = coherent_amps(C64::from(-*alpha), 60);
                truncate(p.iter().zip(&m).map(|(a, b)| a + s * b).collect())
            }
        };
        while v.len() > 1 && v.last() == Some(&C64::from(0.0)) {
            v.pop();
        }
        let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter().map(|z| z / norm).collect()
    }

    pub fn max_excitation(&self) -> usize {
        self.amplitudes().len() - 1
    }
}

fn truncate(v: Vec<C64>) -> Vec<C64> {
    let total: f64 = v.iter().map(|z| z.norm_sqr()).sum();
    let mut acc = 0.0;
    for (n, z) in v.iter().enumerate() {
        acc += z.norm_sqr();
        if total - acc < TAIL * total {
            return v[..=n].to_vec();
        }
    }
    v
}

#[derive(Clone, Debug)]
pub struct TransferOptions {
    pub fock_dim: usize,
    /// Keep the full tensor-product space instead of capping total excitations
    /// at the initial state's maximum (the cap is exact, see [`super::FockSpace`]).
    pub full_space: bool,
    /// Simulation window is ±window/γ_ph.
    pub window: f64,
    /// Steps per 1/max_rate (≥ 50).
    pub per_rate: f64,
    pub allow_cat: bool,
    pub dim_cap: usize,
    pub propagate: PropagateOptions,
}

impl Default for TransferOptions {
    fn default() -> Self {
        Self {
            fock_dim: 3,
            full_space: false,
            window: 12.0,
            per_rate: 50.0,
            allow_cat: false,
            dim_cap: DEFAULT_DIM_CAP,
            propagate: PropagateOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TransferResult {
    /// ⟨ψ|ρ_b2|ψ⟩ as received.
    pub fidelity: f64,
    /// Fidelity after undoing the single-photon transfer phase arg(t) on the receiver.
    pub fidelity_corrected: f64,
    pub purity: f64,
    pub residual_source_population: f64,
    /// Single-excitation amplitude b1 → b2.
    pub transfer_amplitude: C64,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub truncation_flagged: bool,
    pub sent: DensityMatrix,
    pub received: DensityMatrix,
}

/// Emits from coupler 1 and catches with the time-reversed pumps on coupler 2.
pub fn transfer_experiment(
    initial: &StateSpec,
    spec: &WavepacketSpec,
    layout: &NetworkLayout,
    opts: &TransferOptions,
) -> Result<TransferResult> {
    if initial.is_cat() && !opts.allow_cat {
        return Err(Error::Domain("cat-state transfer is gated; set allow_cat".into()));
    }
    if layout.couplers.len() != 2 {
        return Err(Error::Domain("transfer needs exactly two couplers".into()));
    }
    let psi = initial.amplitudes();
    let nmax = psi.len() - 1;
    if nmax + 1 > opts.fock_dim {
        return Err(Error::Domain(format!("state needs {} levels, fock_dim is {}", nmax + 1, opts.fock_dim)));
    }
    let drives = [
        DriveEnvelope::emission(envelope_gamma(&layout.couplers[0]), spec)?,
        DriveEnvelope::absorption(envelope_gamma(&layout.couplers[1]), spec)?,
    ];
    let space = SpaceOptions {
        fock_dim: opts.fock_dim,
        max_excitations: if opts.full_space { None } else { Some(nmax) },
        dim_cap: opts.dim_cap,
    };
    let gen = build_two_coupler_generator(layout, &drives, &space)?;
    let [_, _, b1] = gen.coupler_modes[0];
    let [_, _, b2] = gen.coupler_modes[1];

    let amps: Vec<(Vec<u8>, C64)> = psi
        .iter()
        .enumerate()
        .map(|(n, a)| {
            let mut occ = vec![0u8; gen.space.modes()];
            occ[b1] = n as u8;
            (occ, *a)
        })
        .collect();
    let rho0 = DensityMatrix::pure(&gen.space.ket(&amps)?, 0.0);

    let (t0, t1) = (-opts.window / spec.gamma_ph, opts.window / spec.gamma_ph);
    let grid = TimeGrid::with_points_per_rate(t0, t1, gen.max_rate(t0, t1), opts.per_rate);
    let run = propagate(&rho0, &gen, &grid, &opts.propagate)?;

    let nm = gen.space.modes();
    let mut x0 = DMatrix::zeros(nm, 1);
    x0[(b1, 0)] = C64::from(1.0);
    let transfer_amplitude = propagate_modes(&gen, &grid, &x0)[(b2, 0)];

    let received = DensityMatrix { rho: gen.space.partial_trace(&run.final_state.rho, b2), t: run.final_state.t };
    let mut target = vec![C64::from(0.0); opts.fock_dim];
    target[..psi.len()].copy_from_slice(&psi);
    let sent = DensityMatrix::pure(&target, t0);
    let fidelity = received.fidelity_pure(&target);
    let fidelity_corrected = received.rotate_phase(transfer_amplitude.arg()).fidelity_pure(&target);
    let residual_source_population = run.final_state.expect_diag(&gen.space.number(b1));

    Ok(TransferResult {
        fidelity,
        fidelity_corrected,
        purity: received.purity(),
        residual_source_population,
        transfer_amplitude,
        max_trace_drift: run.max_trace_drift,
        min_eigenvalue: run.min_eigenvalue,
        truncation_flagged: run.truncation_flagged,
        sent,
        received,
    })
}
