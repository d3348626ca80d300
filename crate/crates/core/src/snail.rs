//! SNAIL element: one small junction (ratio α) in parallel with three large ones.
//!
//! Energies are stored as angular frequencies (E/ħ). The potential in units of
//! E_J is u(φ) = −α cos φ − 3 cos((φ_ext − φ)/3), which has period 6π in φ.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnailParams {
    pub e_c: f64,
    pub e_j: f64,
    pub alpha: f64,
    pub phi_ext: f64,
}

impl SnailParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Domain(format!("alpha {} outside (0, 1)", self.alpha)));
        }
        if !(self.e_c > 0.0 && self.e_j > 0.0) {
            return Err(Error::Domain("E_C and E_J must be positive".into()));
        }
        Ok(())
    }
}

/// u and its first four φ-derivatives at (φ, φ_ext), all in units of E_J.
pub fn potential_derivatives(alpha: f64, phi_ext: f64, phi: f64) -> [f64; 5] {
    let th = (phi_ext - phi) / 3.0;
    let (s, c) = phi.sin_cos();
    let (st, ct) = th.sin_cos();
    [
        -alpha * c - 3.0 * ct,
        alpha * s - st,
        alpha * c + ct / 3.0,
        -alpha * s + st / 9.0,
        -alpha * c - ct / 27.0,
    ]
}

pub fn potential(alpha: f64, phi_ext: f64, phi: f64) -> f64 {
    potential_derivatives(alpha, phi_ext, phi)[0]
}

const SCAN_POINTS: usize = 6000;

/// Global minimum of u over one 6π period, refined by bisection on u′.
pub fn potential_minimum(p: &SnailParams) -> Result<f64> {
    p.validate()?;
    let (a, fe) = (p.alpha, p.phi_ext);
    let h = 6.0 * PI / SCAN_POINTS as f64;
    let at = |k: isize| -3.0 * PI + k as f64 * h;
    let best = (0..SCAN_POINTS as isize)
        .min_by(|&i, &j| potential(a, fe, at(i)).total_cmp(&potential(a, fe, at(j))))
        .ok_or(Error::NoBracket)?;
    let du = |x: f64| potential_derivatives(a, fe, x)[1];
    let (mut lo, mut hi) = (at(best - 1), at(best + 1));
    if du(lo) > 0.0 || du(hi) < 0.0 {
        return Err(Error::NoBracket);
    }
    while hi - lo > 1e-15 * (1.0 + lo.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if du(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = 0.5 * (lo + hi);
    if potential_derivatives(a, fe, x)[2] <= 0.0 {
        return Err(Error::NoBracket);
    }
    Ok(x)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnailExpansion {
    pub phi_min: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
    pub omega_s: f64,
    /// dω_S/dφ_ext
    pub flux_sensitivity: f64,
    /// dc2/dφ_ext
    pub c2_slope: f64,
}

/// Taylor coefficients with H_L = (E_J/2)(c2 x² + c3 x³ + c4 x⁴ + …).
pub fn expansion_coefficients(p: &SnailParams) -> Result<SnailExpansion> {
    let phi_min = potential_minimum(p)?;
    let d = potential_derivatives(p.alpha, p.phi_ext, phi_min);
    let (c2, c3, c4) = (d[2], d[3] / 3.0, d[4] / 12.0);
    let th = (p.phi_ext - phi_min) / 3.0;
    // Implicit differentiation of u′(φ_min, φ_ext) = 0.
    let dphi = th.cos() / (3.0 * d[2]);
    let c2_slope = d[3] * dphi - th.sin() / 9.0;
    let omega_s = omega_s(p.e_c, c2, p.e_j);
    Ok(SnailExpansion { phi_min, c2, c3, c4, omega_s, flux_sensitivity: omega_s / (2.0 * c2) * c2_slope, c2_slope })
}

pub fn omega_s(e_c: f64, c2: f64, e_j: f64) -> f64 {
    (8.0 * e_c * c2 * e_j).sqrt()
}

fn c4_at(alpha: f64, phi_ext: f64) -> Result<f64> {
    let p = SnailParams { e_c: 1.0, e_j: 1.0, alpha, phi_ext };
    Ok(expansion_coefficients(&p)?.c4)
}

/// Smallest φ_ext in (0, π) with c4 = 0.
pub fn kerr_free_flux(alpha: f64, e_j: f64, e_c: f64) -> Result<f64> {
    SnailParams { e_c, e_j, alpha, phi_ext: 0.0 }.validate()?;
    let n = 2000;
    let x = |k: usize| PI * k as f64 / n as f64;
    let mut prev = c4_at(alpha, x(1))?;
    for k in 2..n {
        let cur = c4_at(alpha, x(k))?;
        if prev.signum() != cur.signum() {
            let (mut lo, mut hi, flo) = (x(k - 1), x(k), prev);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                let fm = c4_at(alpha, mid)?;
                if fm.signum() == flo.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev = cur;
    }
    Err(Error::NoKerrFreePoint(alpha))
}

/// |dc2/dφ_ext| at the Kerr-free point.
pub fn c2_slope_at_kerr_free(alpha: f64) -> Result<f64> {
    let fe = kerr_free_flux(alpha, 1.0, 1.0)?;
    Ok(expansion_coefficients(&SnailParams { e_c: 1.0, e_j: 1.0, alpha, phi_ext: fe })?.c2_slope.abs())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxNoiseModel {
    pub reference_alpha: f64,
    pub reference_damping: f64,
    /// Flux-noise PSD prefactor; only ratios are meaningful.
    pub psd_scale: f64,
}

impl FluxNoiseModel {
    pub fn device(reference_damping: f64) -> Self {
        Self { reference_alpha: 0.29, reference_damping, psd_scale: 1.0 }
    }
}

/// γᵢ(α) = γᵢ(α_ref)·s(α)/s(α_ref).
pub fn damping_scale(alpha: f64, model: &FluxNoiseModel) -> Result<f64> {
    if alpha == model.reference_alpha {
        return Ok(model.reference_damping);
    }
    Ok(model.reference_damping * c2_slope_at_kerr_free(alpha)? / c2_slope_at_kerr_free(model.reference_alpha)?)
}

/// Rows of (φ_ext, c2, c3, c4, ω_S, dω_S/dφ_ext) over `flux`.
pub fn flux_table(base: &SnailParams, flux: &[f64]) -> Result<Vec<[f64; 6]>> {
    flux.iter()
        .map(|&fe| {
            let e = expansion_coefficients(&SnailParams { phi_ext: fe, ..*base })?;
            Ok([fe, e.c2, e.c3, e.c4, e.omega_s, e.flux_sensitivity])
        })
        .collect()
}
