//! Equations of motion for (a1, a2, b) in the frame rotating at (ω0, ω_b).
//!
//! ẋ = M x − C† u and y = u + C x, with u = (d_L^in, d_R^in, b^in) and
//! y = (d_L^out, d_R^out, b^out).

use nalgebra::Matrix3;
use num_complex::Complex64;

use crate::model::CouplerParams;

pub type C64 = Complex64;

pub const I: C64 = C64::new(0.0, 1.0);

/// Conversion amplitudes driving a1 and a2, including pump leakage ε.
pub fn conversion_amplitudes(g1: f64, g2: f64, phi1: f64, phi2: f64, eps: f64) -> (C64, C64) {
    let p1 = C64::from_polar(g1, phi1);
    let p2 = C64::from_polar(g2, phi2);
    (p1 + eps * p2, p2 + eps * p1)
}

pub fn drift_matrix(p: &CouplerParams, c1: C64, c2: C64) -> Matrix3<C64> {
    let k = p.geometric_gamma();
    let th = p.path_delay_phase;
    let x12 = -C64::new(k * th.cos(), k * th.sin() + p.cancellation_coupling);
    Matrix3::new(
        C64::from(-(p.a1.external_coupling + 0.5 * p.a1.internal_damping)),
        x12,
        -I * c1,
        x12,
        C64::from(-(p.a2.external_coupling + 0.5 * p.a2.internal_damping)),
        -I * c2,
        -I * c1.conj(),
        -I * c2.conj(),
        C64::from(-0.5 * (p.b.external_coupling + p.b.internal_damping)),
    )
}

pub fn output_matrix(p: &CouplerParams) -> Matrix3<C64> {
    let s1 = C64::from(p.a1.external_coupling.sqrt());
    let s2 = p.a2.external_coupling.sqrt();
    let th = p.path_delay_phase;
    let z = C64::from(0.0);
    Matrix3::new(
        s1,
        C64::from_polar(s2, th),
        z,
        s1,
        C64::from_polar(s2, -th),
        z,
        z,
        z,
        C64::from(p.b.external_coupling.sqrt()),
    )
}

/// Physical port index (0-based) to position in u.
pub const PORT_INPUT: [usize; 3] = [1, 0, 2];
/// Physical port index (0-based) to position in y.
pub const PORT_OUTPUT: [usize; 3] = [0, 1, 2];
