//! Parameter records for one chiral coupler and the static-coupling arithmetic.
//!
//! Every rate and frequency is an angular frequency in rad/s. Use [`units`] to
//! convert from the "value/2π" numbers quoted in MHz or GHz.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod units {
    use std::f64::consts::TAU;

    pub fn ghz(f: f64) -> f64 {
        TAU * f * 1e9
    }
    pub fn mhz(f: f64) -> f64 {
        TAU * f * 1e6
    }
    pub fn khz(f: f64) -> f64 {
        TAU * f * 1e3
    }
    pub fn to_mhz(w: f64) -> f64 {
        w / TAU / 1e6
    }
    pub fn to_ghz(w: f64) -> f64 {
        w / TAU / 1e9
    }
}

use units::{ghz, mhz};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    pub frequency: f64,
    /// Amplitude coupling rate γ to the output channel.
    pub external_coupling: f64,
    /// Internal energy damping γᵢ; enters the amplitude equation as γᵢ/2.
    pub internal_damping: f64,
}

impl ModeParams {
    pub fn new(frequency: f64, external_coupling: f64, internal_damping: f64) -> Self {
        Self { frequency, external_coupling, internal_damping }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CouplerParams {
    pub a1: ModeParams,
    pub a2: ModeParams,
    pub b: ModeParams,
    /// Signed static a1–a2 coupling g_c.
    pub cancellation_coupling: f64,
    /// Propagation phase between a1 and a2, π/2 for λ/4 spacing.
    pub path_delay_phase: f64,
}

pub const A_FREQ_GHZ: f64 = 4.875;
pub const B_FREQ_GHZ: f64 = 6.270;

impl CouplerParams {
    /// The measured device: half-linewidth rates with g_c at 1.04× the
    /// geometric mean of γ1, γ2.
    pub fn measured_device() -> Self {
        let g1 = mhz(0.73);
        let g2 = mhz(0.715);
        Self {
            a1: ModeParams::new(ghz(A_FREQ_GHZ), g1, mhz(0.215)),
            a2: ModeParams::new(ghz(A_FREQ_GHZ), g2, mhz(0.294)),
            b: ModeParams::new(ghz(B_FREQ_GHZ), mhz(2.51), mhz(0.588)),
            cancellation_coupling: -1.04 * (g1 * g2).sqrt(),
            path_delay_phase: FRAC_PI_2,
        }
    }

    /// γ1 = γ2 = γ, exact cancellation, no internal loss.
    pub fn symmetric_lossless(gamma: f64, gamma_b: f64) -> Self {
        Self {
            a1: ModeParams::new(ghz(A_FREQ_GHZ), gamma, 0.0),
            a2: ModeParams::new(ghz(A_FREQ_GHZ), gamma, 0.0),
            b: ModeParams::new(ghz(B_FREQ_GHZ), gamma_b, 0.0),
            cancellation_coupling: -gamma,
            path_delay_phase: FRAC_PI_2,
        }
    }

    pub fn geometric_gamma(&self) -> f64 {
        (self.a1.external_coupling * self.a2.external_coupling).sqrt()
    }

    pub fn mean_gamma(&self) -> f64 {
        0.5 * (self.a1.external_coupling + self.a2.external_coupling)
    }

    /// Signed g_c / √(γ1γ2); NaN when either coupling is zero.
    pub fn cancellation_ratio(&self) -> f64 {
        self.cancellation_coupling / self.geometric_gamma()
    }

    pub fn with_a_internal(mut self, gi1: f64, gi2: f64) -> Self {
        self.a1.internal_damping = gi1;
        self.a2.internal_damping = gi2;
        self
    }

    pub fn with_b(mut self, gamma_b: f64, gi_b: f64) -> Self {
        self.b.external_coupling = gamma_b;
        self.b.internal_damping = gi_b;
        self
    }

    /// Sets g_c = −ratio·√(γ1γ2).
    pub fn with_ratio(mut self, ratio: f64) -> Self {
        self.cancellation_coupling = -ratio * self.geometric_gamma();
        self
    }

    /// Rescales both a-mode external couplings (and g_c with them) to mean `gamma`.
    pub fn with_mean_gamma(mut self, gamma: f64) -> Self {
        let s = gamma / self.mean_gamma();
        self.a1.external_coupling *= s;
        self.a2.external_coupling *= s;
        self.cancellation_coupling *= s;
        self
    }

    pub fn max_rate(&self) -> f64 {
        [
            self.a1.external_coupling,
            self.a2.external_coupling,
            self.b.external_coupling,
            self.a1.internal_damping,
            self.a2.internal_damping,
            self.b.internal_damping,
            self.cancellation_coupling.abs(),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpSettings {
    pub g1: f64,
    pub g2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub pump_frequency: f64,
    #[serde(default)]
    pub leakage_ratio: f64,
}

impl PumpSettings {
    pub fn new(g1: f64, g2: f64, phi1: f64, phi2: f64, params: &CouplerParams) -> Self {
        Self {
            g1,
            g2,
            phi1,
            phi2,
            pump_frequency: params.b.frequency - params.a1.frequency,
            leakage_ratio: 0.0,
        }
    }

    /// Δφ = −π/2: routes port 1 into b, blocking left-to-right transmission.
    pub fn isolate(g: f64, params: &CouplerParams) -> Self {
        Self::new(g, g, 0.0, FRAC_PI_2, params)
    }

    /// Δφ = +π/2: left-to-right transmission passes.
    pub fn pass(g: f64, params: &CouplerParams) -> Self {
        Self::new(g, g, 0.0, -FRAC_PI_2, params)
    }

    pub fn off(params: &CouplerParams) -> Self {
        Self::new(0.0, 0.0, 0.0, 0.0, params)
    }

    pub fn with_leakage(mut self, eps: f64) -> Self {
        self.leakage_ratio = eps;
        self
    }

    pub fn delta_phi(&self) -> f64 {
        self.phi1 - self.phi2
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// Signed g_c/√(γ1γ2).
    pub cancellation_ratio: f64,
    /// |g_c|/√(γ1γ2), the quantity quoted as the "cancellation ratio".
    pub cancellation_ratio_magnitude: f64,
    pub delta_phi: f64,
    pub ideal_cancellation: bool,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn validate_params(params: &CouplerParams, pumps: &PumpSettings) -> ValidationReport {
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| {
        checks.push(Check { name: name.to_string(), passed, detail })
    };

    for (label, m) in [("a1", &params.a1), ("a2", &params.a2), ("b", &params.b)] {
        push(
            &format!("{label}.frequency"),
            m.frequency > 0.0 && m.frequency.is_finite(),
            format!("{:e} rad/s", m.frequency),
        );
        push(
            &format!("{label}.internal_damping"),
            m.internal_damping >= 0.0,
            format!("{:e} rad/s", m.internal_damping),
        );
    }
    // The a-modes must couple to the line for the device to be a coupler at all.
    push(
        "gamma1",
        params.a1.external_coupling > 0.0,
        format!("{:e} rad/s", params.a1.external_coupling),
    );
    push(
        "gamma2",
        params.a2.external_coupling > 0.0,
        format!("{:e} rad/s", params.a2.external_coupling),
    );
    push(
        "gamma_b",
        params.b.external_coupling >= 0.0,
        format!("{:e} rad/s", params.b.external_coupling),
    );
    push(
        "a1.frequency == a2.frequency",
        params.a1.frequency == params.a2.frequency,
        format!("{:e} vs {:e}", params.a1.frequency, params.a2.frequency),
    );
    push(
        "path_delay_phase",
        (params.path_delay_phase - FRAC_PI_2).abs() < 1e-12,
        format!("{} rad (λ/4 spacing is π/2)", params.path_delay_phase),
    );
    push("g1", pumps.g1 >= 0.0, format!("{:e}", pumps.g1));
    push("g2", pumps.g2 >= 0.0, format!("{:e}", pumps.g2));
    push("leakage", pumps.leakage_ratio >= 0.0, format!("{}", pumps.leakage_ratio));
    let target = params.b.frequency - params.a1.frequency;
    push(
        "pump_frequency",
        (pumps.pump_frequency - target).abs() <= 1e-9 * target.abs().max(1.0),
        format!("{:e} vs b−a {:e}", pumps.pump_frequency, target),
    );

    let ratio = params.cancellation_ratio();
    let ideal = ratio.is_finite() && (ratio + 1.0).abs() < 1e-12;
    ValidationReport {
        checks,
        cancellation_ratio: ratio,
        cancellation_ratio_magnitude: ratio.abs(),
        delta_phi: pumps.delta_phi(),
        ideal_cancellation: ideal,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusCouplingModel {
    pub g12: f64,
    pub g_b: f64,
    pub detuning: f64,
}

/// g12 + g_b²/Δ.
pub fn cancellation_coupling(model: &BusCouplingModel) -> Result<f64> {
    if model.detuning == 0.0 {
        return Err(Error::Domain("bus detuning must be nonzero".into()));
    }
    Ok(model.g12 + model.g_b * model.g_b / model.detuning)
}

pub fn target_cancellation(gamma1: f64, gamma2: f64) -> f64 {
    -(gamma1 * gamma2).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavepacketSpec {
    pub gamma_ph: f64,
    pub direction: Direction,
}

impl WavepacketSpec {
    pub fn right(gamma_ph: f64) -> Self {
        Self { gamma_ph, direction: Direction::Right }
    }

    /// Pump phases (φ1, φ2) that route b into this direction.
    pub fn pump_phases(&self) -> (f64, f64) {
        match self.direction {
            Direction::Right => (0.0, FRAC_PI_2),
            Direction::Left => (FRAC_PI_2, 0.0),
        }
    }
}

/// Several couplers on one line. `positions` holds the a-mode positions in
/// units of λ, two per coupler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkLayout {
    pub positions: Vec<f64>,
    pub couplers: Vec<CouplerParams>,
}

impl NetworkLayout {
    /// Couplers placed `spacing` wavelengths apart, each with λ/4 internal spacing.
    pub fn chain(couplers: Vec<CouplerParams>, spacing: f64) -> Self {
        let positions = (0..couplers.len())
            .flat_map(|k| {
                let x0 = k as f64 * spacing;
                [x0, x0 + 0.25]
            })
            .collect();
        Self { positions, couplers }
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.len() != 2 * self.couplers.len() {
            return Err(Error::Domain(format!(
                "{} positions for {} couplers",
                self.positions.len(),
                self.couplers.len()
            )));
        }
        if self.positions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Domain("mode positions must be strictly increasing".into()));
        }
        for (k, pair) in self.positions.chunks(2).enumerate() {
            if (pair[1] - pair[0] - 0.25).abs() > 1e-12 {
                return Err(Error::Domain(format!("coupler {k} is not λ/4 spaced")));
            }
        }
        Ok(())
    }

    /// Propagation phase 2π|x_j − x_k| between two a-modes.
    pub fn phase(&self, j: usize, k: usize) -> f64 {
        2.0 * PI * (self.positions[j] - self.positions[k]).abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn measured_device_ratio() {
        let p = CouplerParams::measured_device();
        let r = validate_params(&p, &PumpSettings::off(&p));
        assert!(r.is_ok(), "{:?}", r.failures().collect::<Vec<_>>());
        assert!((r.cancellation_ratio_magnitude - 1.04).abs() < 1e-12);
        assert!(!r.ideal_cancellation);
    }

    #[test]
    fn zero_rates_fail_gamma_checks() {
        let mut p = CouplerParams::measured_device();
        for m in [&mut p.a1, &mut p.a2, &mut p.b] {
            m.external_coupling = 0.0;
            m.internal_damping = 0.0;
        }
        p.cancellation_coupling = 0.0;
        let r = validate_params(&p, &PumpSettings::off(&p));
        let failed: Vec<_> = r.failures().map(|c| c.name.as_str()).collect();
        assert_eq!(failed, ["gamma1", "gamma2"]);
    }

    #[test]
    fn symmetric_is_ideal() {
        let p = CouplerParams::symmetric_lossless(2.0, 2.0);
        let r = validate_params(&p, &PumpSettings::off(&p));
        assert_eq!(r.cancellation_ratio, -1.0);
        assert!(r.ideal_cancellation);
    }

    #[test]
    fn bus_formula() {
        let zero = BusCouplingModel { g12: 0.0, g_b: 0.0, detuning: 1.0 };
        assert_eq!(cancellation_coupling(&zero).unwrap(), 0.0);
        let far = BusCouplingModel { g12: 0.3, g_b: 2.0, detuning: 2.0e12 };
        assert!((cancellation_coupling(&far).unwrap() - 0.3).abs() < 1e-9);
        let op = BusCouplingModel { g12: mhz(0.10), g_b: mhz(30.0), detuning: mhz(1395.0) };
        let gc = units::to_mhz(cancellation_coupling(&op).unwrap());
        assert!((gc - (0.10 + 900.0 / 1395.0)).abs() < 1e-12);
        assert!((gc - 0.745).abs() < 5e-4);
        let bad = BusCouplingModel { detuning: 0.0, ..op };
        assert!(matches!(cancellation_coupling(&bad), Err(Error::Domain(_))));
    }

    #[test]
    fn target_values() {
        assert_eq!(target_cancellation(3.0, 3.0), -3.0);
        assert_eq!(target_cancellation(0.0, 3.0), 0.0);
        let t = units::to_mhz(target_cancellation(mhz(0.73), mhz(0.715)));
        assert!((t + (0.73f64 * 0.715).sqrt()).abs() < 1e-12);
        assert!((t + 0.7224).abs() < 1e-4);
    }

    #[test]
    fn layout_checks() {
        let p = CouplerParams::symmetric_lossless(1.0, 1.0);
        let l = NetworkLayout::chain(vec![p, p], 1.0);
        assert_eq!(l.positions, vec![0.0, 0.25, 1.0, 1.25]);
        l.validate().unwrap();
        let bad = NetworkLayout { positions: vec![0.0, 0.3], couplers: vec![p] };
        assert!(bad.validate().is_err());
    }
}
