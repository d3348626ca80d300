//! Scattering parameters: printed closed forms and the numeric solver.

use nalgebra::Matrix3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{conversion_amplitudes, drift_matrix, output_matrix, C64, I, PORT_INPUT, PORT_OUTPUT};
use crate::model::{CouplerParams, PumpSettings};

/// Loss values are clamped here instead of reporting infinities.
pub const DB_CEILING: f64 = 100.0;

/// S-matrix at one detuning; ports 1 = Left, 2 = Right, 3 = b.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SParameterMatrix {
    pub entries: [[C64; 3]; 3],
    pub detuning: f64,
}

impl SParameterMatrix {
    /// 1-based S_ij: output at port i for input at port j.
    pub fn s(&self, i: usize, j: usize) -> C64 {
        self.entries[i - 1][j - 1]
    }

    pub fn as_matrix(&self) -> Matrix3<C64> {
        Matrix3::from_fn(|i, j| self.entries[i][j])
    }

    /// ‖S†S − I‖∞ (max abs entry).
    pub fn unitarity_defect(&self) -> f64 {
        let s = self.as_matrix();
        (s.adjoint() * s - Matrix3::identity()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn column_norm(&self, j: usize) -> f64 {
        (1..=3).map(|i| self.s(i, j).norm_sqr()).sum::<f64>().sqrt()
    }
}

/// −20·log10|s|, clamped to [−ceiling, ceiling].
pub fn loss_db(s: C64) -> f64 {
    let v = -20.0 * s.norm().log10();
    v.clamp(-DB_CEILING, DB_CEILING)
}

/// (δ² + γ²)/(δ + iγ)²: the pumps-off transmission at exact cancellation.
pub fn s21_lossless_cancelled(delta: f64, gamma: f64) -> C64 {
    let z = C64::new(delta, gamma);
    C64::from(delta * delta + gamma * gamma) / (z * z)
}

/// Closed-form S for γ1 = γ2 = γ_b = γ, g1 = g2 = g, g_c = −γ, no loss.
///
/// S12 is returned as printed, which duplicates S21 and is not trusted.
pub fn s_matrix_closed_form(gamma: f64, g: f64, delta: f64, phi1: f64, phi2: f64) -> Result<SParameterMatrix> {
    if g == 0.0 {
        return Err(Error::Domain("closed-form S is singular at g = 0".into()));
    }
    let dp = phi1 - phi2;
    let d = C64::from(delta);
    let dg = d + I * gamma;
    let d2g = 2.0 * d + I * gamma;
    let g2 = g * g;
    let a = (-4.0 + dg * d2g / g2) * (dg / g);
    let b = 4.0 - dg * d2g / g2;
    let c = d2g * (delta * delta + gamma * gamma) / (g2 * g);
    let dd = C64::from_polar(1.0, phi1) * gamma * (-I * delta + gamma) / g2;
    let e = C64::from_polar(1.0, phi2) * gamma * dg / g2;

    let refl = 4.0 * gamma / g * dp.cos() / a;
    let trans = (4.0 * I * gamma / g * dp.sin() - 4.0 * delta / g + c) / a;
    let eb1 = C64::from_polar(1.0, -phi1);
    let eb2 = C64::from_polar(1.0, -phi2);
    let entries = [
        [refl, trans, 2.0 * (dd + e) / a],
        [trans, -refl, 2.0 * (dd - e) / a],
        [
            2.0 * gamma / g * (I * eb1 - eb2) / b,
            2.0 * gamma / g * (I * eb1 + eb2) / b,
            (4.0 - (2.0 * d - I * gamma) * dg / g2) / b,
        ],
    ];
    Ok(SParameterMatrix { entries, detuning: delta })
}

fn inf_norm(m: &Matrix3<C64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

pub fn s_matrix_numeric(params: &CouplerParams, pumps: &PumpSettings, delta: f64) -> Result<SParameterMatrix> {
    let (c1, c2) = conversion_amplitudes(pumps.g1, pumps.g2, pumps.phi1, pumps.phi2, pumps.leakage_ratio);
    let m = drift_matrix(params, c1, c2) + Matrix3::from_diagonal_element(I * delta);
    let c = output_matrix(params);
    let singular = |condition| Error::Singular { detuning: delta, condition };
    let inv = m.try_inverse().ok_or_else(|| singular(f64::INFINITY))?;
    let condition = inf_norm(&m) * inf_norm(&inv);
    if !condition.is_finite() || condition > 1e14 {
        return Err(singular(condition));
    }
    let sio = Matrix3::identity() + c * inv * c.adjoint();
    let mut entries = [[C64::from(0.0); 3]; 3];
    for (i, row) in entries.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = sio[(PORT_OUTPUT[i], PORT_INPUT[j])];
        }
    }
    Ok(SParameterMatrix { entries, detuning: delta })
}

/// Numeric S over a detuning grid, evaluated in parallel, in grid order.
pub fn s_trace(params: &CouplerParams, pumps: &PumpSettings, grid: &[f64]) -> Result<Vec<SParameterMatrix>> {
    grid.par_iter().map(|&d| s_matrix_numeric(params, pumps, d)).collect()
}

/// Pumps-off transmission for γ1 = γ2 = γ_e with arbitrary g_c and internal loss.
pub fn s21_unpumped_nonideal(delta: f64, g_c: f64, gamma_e: f64, gi1: f64, gi2: f64) -> C64 {
    let s = gi1 + gi2;
    let num = C64::new(
        4.0 * g_c * g_c + 8.0 * g_c * gamma_e - 4.0 * delta * delta + gi1 * gi2,
        -2.0 * delta * s,
    );
    let den = num + C64::new(8.0 * gamma_e * gamma_e + 2.0 * gamma_e * s, -8.0 * gamma_e * delta);
    num / den
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsolationMetrics {
    pub insertion_loss_db: f64,
    pub isolation_db: f64,
    /// Full width (rad/s) of the region around δ = 0 with isolation above 20 dB.
    pub isolation_bandwidth: f64,
}

/// (pass, isolate) pump settings sharing g1, g2, φ1 and ε of `pumps`.
pub fn pass_and_isolate(pumps: &PumpSettings) -> (PumpSettings, PumpSettings) {
    let half = std::f64::consts::FRAC_PI_2;
    let pass = PumpSettings { phi2: pumps.phi1 - half, ..*pumps };
    let iso = PumpSettings { phi2: pumps.phi1 + half, ..*pumps };
    (pass, iso)
}

/// Insertion loss and isolation at δ = 0 only.
pub fn resonance_metrics(params: &CouplerParams, pumps: &PumpSettings) -> Result<(f64, f64)> {
    let (pass, iso) = pass_and_isolate(pumps);
    let il = loss_db(s_matrix_numeric(params, &pass, 0.0)?.s(2, 1));
    let is = loss_db(s_matrix_numeric(params, &iso, 0.0)?.s(2, 1));
    Ok((il, is))
}

pub fn isolation_metrics(params: &CouplerParams, pumps: &PumpSettings, grid: &[f64]) -> Result<IsolationMetrics> {
    let zero = grid
        .iter()
        .position(|&d| d == 0.0)
        .ok_or_else(|| Error::Domain("detuning grid must contain 0".into()))?;
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Domain("detuning grid must be strictly increasing".into()));
    }
    let (pass, iso) = pass_and_isolate(pumps);
    let insertion_loss_db = loss_db(s_matrix_numeric(params, &pass, 0.0)?.s(2, 1));
    let iso_db: Vec<f64> = s_trace(params, &iso, grid)?.iter().map(|s| loss_db(s.s(2, 1))).collect();

    let threshold = 20.0;
    let mut isolation_bandwidth = 0.0;
    if iso_db[zero] > threshold {
        let crossing = |i: usize, j: usize| {
            let t = (iso_db[i] - threshold) / (iso_db[i] - iso_db[j]);
            grid[i] + t * (grid[j] - grid[i])
        };
        let mut hi = zero;
        while hi + 1 < grid.len() && iso_db[hi + 1] > threshold {
            hi += 1;
        }
        let upper = if hi + 1 < grid.len() { crossing(hi, hi + 1) } else { grid[hi] };
        let mut lo = zero;
        while lo > 0 && iso_db[lo - 1] > threshold {
            lo -= 1;
        }
        let lower = if lo > 0 { crossing(lo, lo - 1) } else { grid[lo] };
        isolation_bandwidth = upper - lower;
    }
    Ok(IsolationMetrics { insertion_loss_db, isolation_db: iso_db[zero], isolation_bandwidth })
}

/// Symmetric grid of `n` points on [−span, span]; odd `n` puts a point at 0.
pub fn symmetric_grid(span: f64, n: usize) -> Vec<f64> {
    let mid = (n - 1) / 2;
    (0..n)
        .map(|k| if 2 * k == n - 1 { 0.0 } else { span * (k as f64 - mid as f64) / mid as f64 })
        .collect()
}

/// Golden-section search over g ∈ [lo, hi] maximising isolation at δ = 0.
/// Returns (g, isolation_db).
pub fn optimize_g(params: &CouplerParams, pumps: &PumpSettings, lo: f64, hi: f64) -> Result<(f64, f64)> {
    let (_, iso) = pass_and_isolate(pumps);
    // Work with |S21| rather than dB so the ceiling clamp does not flatten the minimum.
    let f = |g: f64| -> Result<f64> {
        let p = PumpSettings { g1: g, g2: g, ..iso };
        Ok(s_matrix_numeric(params, &p, 0.0)?.s(2, 1).norm())
    };
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - r * (b - a);
    let mut x2 = a + r * (b - a);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    while b - a > 1e-10 * hi.abs() {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - r * (b - a);
            f1 = f(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + r * (b - a);
            f2 = f(x2)?;
        }
    }
    let g = 0.5 * (a + b);
    Ok((g, loss_db(C64::from(f(g)?))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn lossless_cancelled_values() {
        let g = 1.7;
        assert!(close(s21_lossless_cancelled(0.0, g), C64::from(-1.0), 1e-15));
        assert!(close(s21_lossless_cancelled(g, g), -I, 1e-15));
        let far = s21_lossless_cancelled(10.0 * g, g);
        assert!((far.norm() - 1.0).abs() < 1e-15);
        // arg((δ−iγ)/(δ+iγ)) = −2·atan(γ/δ)
        assert!((far.arg() + 2.0 * 0.1f64.atan()).abs() < 1e-14);
        assert!((far.arg() + 0.19933).abs() < 1e-5);
    }

    #[test]
    fn closed_form_circulation() {
        let s = s_matrix_closed_form(2.0, 1.0, 0.0, 0.0, FRAC_PI_2).unwrap();
        assert!(s.s(2, 1).norm() < 1e-15);
        assert!(close(s.s(3, 1), I, 1e-15));
        let s = s_matrix_closed_form(2.0, 1.0, 0.0, 0.0, -FRAC_PI_2).unwrap();
        assert!((s.s(2, 1).norm() - 1.0).abs() < 1e-15);
        assert!(s.s(3, 1).norm() < 1e-15);
        for dp in [FRAC_PI_2, -FRAC_PI_2] {
            let s = s_matrix_closed_form(1.3, 0.4, 0.0, 0.7, 0.7 - dp).unwrap();
            assert!(s.s(1, 1).norm() < 1e-15 && s.s(2, 2).norm() < 1e-15);
        }
        assert!(s_matrix_closed_form(1.0, 0.0, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn closed_form_matches_numeric_except_s12() {
        let gamma = 1.0;
        for &(g, d, p1, p2) in &[(0.5, 0.3, 0.2, 1.1), (1.4, -0.7, 1.0, -0.4), (0.8, 2.5, -2.0, 0.3)] {
            let p = CouplerParams::symmetric_lossless(gamma, gamma);
            let pumps = PumpSettings::new(g, g, p1, p2, &p);
            let n = s_matrix_numeric(&p, &pumps, d).unwrap();
            let c = s_matrix_closed_form(gamma, g, d, p1, p2).unwrap();
            for i in 1..=3 {
                for j in 1..=3 {
                    if (i, j) != (1, 2) {
                        assert!(close(n.s(i, j), c.s(i, j), 1e-12), "S{i}{j} at {g} {d}");
                    }
                }
            }
        }
    }

    #[test]
    fn pumps_off_is_all_pass() {
        let p = CouplerParams::symmetric_lossless(1.0, 1.0);
        for d in [-3.0, -0.2, 0.0, 0.9, 7.0] {
            let s = s_matrix_numeric(&p, &PumpSettings::off(&p), d).unwrap();
            assert!(close(s.s(2, 1), s21_lossless_cancelled(d, 1.0), 1e-14));
            assert!(close(s.s(2, 1), s.s(1, 2), 1e-15));
        }
    }

    #[test]
    fn nonideal_reduces_and_blocks() {
        for d in [-2.0, 0.0, 0.4, 5.0] {
            assert!(close(s21_unpumped_nonideal(d, -1.3, 1.3, 0.0, 0.0), s21_lossless_cancelled(d, 1.3), 1e-14));
        }
        assert_eq!(s21_unpumped_nonideal(0.0, 0.0, 1.0, 0.0, 0.0).norm(), 0.0);
    }

    #[test]
    fn nonideal_matches_numeric() {
        let ge = 1.0;
        for &(gc, gi1, gi2) in &[(-1.04, 0.29, 0.40), (-0.55, 0.0, 0.1), (0.3, 0.2, 0.2)] {
            let mut p = CouplerParams::symmetric_lossless(ge, 2.0).with_a_internal(gi1, gi2);
            p.cancellation_coupling = gc;
            for d in [-3.0, -0.5, 0.0, 0.2, 4.0] {
                let n = s_matrix_numeric(&p, &PumpSettings::off(&p), d).unwrap().s(2, 1);
                assert!(close(n, s21_unpumped_nonideal(d, gc, ge, gi1, gi2), 1e-12));
            }
        }
    }

    #[test]
    fn singular_system_reports() {
        let mut p = CouplerParams::symmetric_lossless(0.0, 0.0);
        p.cancellation_coupling = 0.0;
        let err = s_matrix_numeric(&p, &PumpSettings::off(&p), 0.0).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn ideal_metrics_hit_ceiling() {
        let gamma = 1.0;
        let p = CouplerParams::symmetric_lossless(gamma, 2.0 * gamma);
        let g = (gamma * 2.0 * gamma).sqrt() / 2.0;
        let grid = symmetric_grid(5.0 * gamma, 201);
        let m = isolation_metrics(&p, &PumpSettings::new(g, g, 0.0, 0.0, &p), &grid).unwrap();
        assert!(m.insertion_loss_db.abs() < 1e-12);
        assert_eq!(m.isolation_db, DB_CEILING);
        assert!(m.isolation_bandwidth > 0.0);
        let no_zero: Vec<f64> = grid.iter().map(|d| d + 1e-3).collect();
        assert!(isolation_metrics(&p, &PumpSettings::new(g, g, 0.0, 0.0, &p), &no_zero).is_err());
    }

    #[test]
    fn grid_has_zero() {
        let g = symmetric_grid(2.0, 5);
        assert_eq!(g, vec![-2.0, -1.0, 0.0, 1.0, 2.0]);
        assert!((symmetric_grid(PI, 1001)[1000] - PI).abs() < 1e-15);
    }
}
