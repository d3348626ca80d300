use nalgebra::DMatrix;

use super::{DensityMatrix, Generator};
use crate::error::{Error, Result};
use crate::linear::C64;
use crate::timedomain::TimeGrid;

#[derive(Clone, Debug)]
pub struct PropagateOptions {
    /// Quality checks run every this many steps (and at the end).
    pub check_every: usize,
    pub trace_tolerance: f64,
    pub negativity_tolerance: f64,
    /// Top-Fock-level population above this flags the run.
    pub truncation_tolerance: f64,
    /// Keep every n-th state in the trajectory; 0 keeps only the endpoints.
    pub record_every: usize,
}

impl Default for PropagateOptions {
    fn default() -> Self {
        Self {
            check_every: 100,
            trace_tolerance: 1e-6,
            negativity_tolerance: 1e-6,
            truncation_tolerance: 1e-4,
            record_every: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Propagation {
    pub trajectory: Vec<DensityMatrix>,
    pub final_state: DensityMatrix,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub max_top_level_population: f64,
    pub truncation_flagged: bool,
    pub steps: usize,
}

fn check_initial(rho: &DensityMatrix) -> Result<()> {
    let herm = rho.hermiticity_defect();
    let tr = rho.trace();
    let min = rho.min_eigenvalue();
    if herm > 1e-10 || (tr - C64::from(1.0)).norm() > 1e-8 || min < -1e-8 {
        return Err(Error::Domain(format!(
            "initial state is not a density matrix (hermiticity {herm:e}, trace {tr}, min eigenvalue {min:e})"
        )));
    }
    Ok(())
}

/// Diagonal mask selecting states with some mode at its top Fock level.
fn top_level_mask(gen: &Generator) -> Option<Vec<f64>> {
    let s = &gen.space;
    let dims = s.mode_dims();
    // With an excitation cap below d−1 the top levels are unreachable and the cap is exact.
    if let Some(cap) = s.max_excitations() {
        if dims.iter().all(|&d| cap < d - 1) {
            return None;
        }
    }
    Some(
        (0..s.dim())
            .map(|i| if s.state(i).iter().zip(dims).any(|(&n, &d)| n as usize == d - 1) { 1.0 } else { 0.0 })
            .collect(),
    )
}

/// Fixed-step RK4 without trace renormalisation.
pub fn propagate(rho0: &DensityMatrix, gen: &Generator, grid: &TimeGrid, opts: &PropagateOptions) -> Result<Propagation> {
    check_initial(rho0)?;
    if rho0.dim() != gen.space.dim() {
        return Err(Error::Domain(format!("state dimension {} vs space {}", rho0.dim(), gen.space.dim())));
    }
    grid.check(gen.max_rate(grid.t_start, grid.t_end))?;
    let tr0 = rho0.trace();
    let mask = top_level_mask(gen);
    let mut rho = rho0.rho.clone();
    let mut out = Propagation {
        trajectory: vec![DensityMatrix { rho: rho.clone(), t: grid.t_start }],
        final_state: rho0.clone(),
        max_trace_drift: 0.0,
        min_eigenvalue: rho0.min_eigenvalue(),
        max_top_level_population: 0.0,
        truncation_flagged: false,
        steps: grid.steps(),
    };
    let dt = grid.dt;
    let half = C64::from(0.5 * dt);
    let full = C64::from(dt);
    let n = out.steps;
    for k in 0..n {
        let t = grid.t_start + k as f64 * dt;
        let k1 = gen.apply(t, &rho);
        let k2 = gen.apply(t + 0.5 * dt, &(&rho + &k1 * half));
        let k3 = gen.apply(t + 0.5 * dt, &(&rho + &k2 * half));
        let k4 = gen.apply(t + dt, &(&rho + &k3 * full));
        rho += (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(dt / 6.0);
        let t1 = grid.t_start + (k + 1) as f64 * dt;

        if (k + 1) % opts.check_every == 0 || k + 1 == n {
            let state = DensityMatrix { rho: rho.clone(), t: t1 };
            quality(&state, tr0, &mask, opts, &mut out)?;
        }
        if opts.record_every > 0 && (k + 1) % opts.record_every == 0 {
            out.trajectory.push(DensityMatrix { rho: rho.clone(), t: t1 });
        }
    }
    out.final_state = DensityMatrix { rho, t: grid.t_start + n as f64 * dt };
    if out.trajectory.last().map(|s| s.t) != Some(out.final_state.t) {
        out.trajectory.push(out.final_state.clone());
    }
    Ok(out)
}

fn quality(state: &DensityMatrix, tr0: C64, mask: &Option<Vec<f64>>, opts: &PropagateOptions, out: &mut Propagation) -> Result<()> {
    let drift = (state.trace() - tr0).norm();
    out.max_trace_drift = out.max_trace_drift.max(drift);
    if !(drift <= opts.trace_tolerance) {
        return Err(Error::IntegrationQuality { t: state.t, reason: format!("trace drift {drift:e}") });
    }
    let min = state.min_eigenvalue();
    out.min_eigenvalue = out.min_eigenvalue.min(min);
    if min < -opts.negativity_tolerance {
        return Err(Error::IntegrationQuality { t: state.t, reason: format!("eigenvalue {min:e}") });
    }
    if let Some(m) = mask {
        let top = state.expect_diag(m);
        out.max_top_level_population = out.max_top_level_population.max(top);
        if top >= opts.truncation_tolerance {
            out.truncation_flagged = true;
        }
    }
    Ok(())
}

/// Linear RK4 propagation of single-particle amplitudes d⟨c⟩/dt = A(t)⟨c⟩.
pub(crate) fn propagate_modes(gen: &Generator, grid: &TimeGrid, x0: &DMatrix<C64>) -> DMatrix<C64> {
    let dt = grid.dt;
    let mut x = x0.clone();
    for k in 0..grid.steps() {
        let t = grid.t_start + k as f64 * dt;
        let a0 = gen.mode_matrix(t);
        let am = gen.mode_matrix(t + 0.5 * dt);
        let a1 = gen.mode_matrix(t + dt);
        let k1 = &a0 * &x;
        let k2 = &am * (&x + &k1 * C64::from(0.5 * dt));
        let k3 = &am * (&x + &k2 * C64::from(0.5 * dt));
        let k4 = &a1 * (&x + &k3 * C64::from(dt));
        x += (k1 + (k2 + k3) * C64::from(2.0) + k4) * C64::from(dt / 6.0);
    }
    x
}
