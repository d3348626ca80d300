//! Semiclassical time-domain integration with time-dependent pumps.
//!
//! Mode amplitudes are normalised so |a|² is a photon number and |d|² a photon
//! flux. Integrated output photon counts are carried as extra RK4 state, so
//! they converge at the same order as the fields.

use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freqdomain::s_matrix_numeric;
use crate::linear::{conversion_amplitudes, drift_matrix, output_matrix, C64, PORT_INPUT, PORT_OUTPUT};
use crate::model::{CouplerParams, Direction, PumpSettings, WavepacketSpec};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_end: f64,
    pub dt: f64,
}

impl TimeGrid {
    /// Grid with `dt` no larger than 1/(50·max_rate), dividing the window evenly.
    pub fn for_rate(t_start: f64, t_end: f64, max_rate: f64) -> Self {
        Self::with_points_per_rate(t_start, t_end, max_rate, 50.0)
    }

    pub fn with_points_per_rate(t_start: f64, t_end: f64, max_rate: f64, per: f64) -> Self {
        let n = ((t_end - t_start) * per * max_rate).ceil().max(1.0);
        Self { t_start, t_end, dt: (t_end - t_start) / n }
    }

    pub fn steps(&self) -> usize {
        ((self.t_end - self.t_start) / self.dt).round() as usize
    }

    pub fn check(&self, max_rate: f64) -> Result<()> {
        if !(self.t_end > self.t_start) {
            return Err(Error::Grid(format!("t_end {:e} ≤ t_start {:e}", self.t_end, self.t_start)));
        }
        if !(self.dt > 0.0) {
            return Err(Error::Grid("dt must be positive".into()));
        }
        let limit = 1.0 / (50.0 * max_rate);
        if self.dt > limit * (1.0 + 1e-12) {
            return Err(Error::Grid(format!("dt {:e} exceeds 1/(50·max_rate) = {limit:e}", self.dt)));
        }
        Ok(())
    }
}

/// (√γ_ph/2)·sech(γ_ph t/2), normalised to one photon.
pub fn sech_wavepacket(spec: &WavepacketSpec, t: f64) -> f64 {
    0.5 * spec.gamma_ph.sqrt() / (0.5 * spec.gamma_ph * t).cosh()
}

/// |g(t)| that releases b into the target sech wavepacket.
pub fn emission_pump_envelope(gamma: f64, spec: &WavepacketSpec, t: f64) -> Result<f64> {
    let gph = spec.gamma_ph;
    if !(gph < 2.0 * gamma) {
        return Err(Error::Domain(format!("gamma_ph {gph:e} must be below 2γ = {:e}", 2.0 * gamma)));
    }
    let x = 0.5 * gph * t;
    // (1 − tanh x)cosh²x rewritten as (1 + e^{−2x})/2 to stay finite for large |t|.
    let rad = -gph / 8.0 + gamma * (1.0 + (-2.0 * x).exp()) / 4.0;
    if !(rad > 0.0) {
        return Err(Error::Domain(format!("non-positive radicand {rad:e} at t = {t:e}")));
    }
    let num = -gph * gph.sqrt() * x.tanh() + 2.0 * gamma * gph.sqrt();
    Ok((num / (-8.0 * rad.sqrt())).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Envelope {
    Off,
    Constant(f64),
    Emission { gamma: f64, gamma_ph: f64 },
    /// Emission envelope with t → −t.
    Absorption { gamma: f64, gamma_ph: f64 },
    /// Linear interpolation of samples starting at `t0` spaced by `dt`; zero outside.
    Sampled { t0: f64, dt: f64, values: Vec<f64> },
}

impl Envelope {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Envelope::Off => 0.0,
            Envelope::Constant(g) => *g,
            Envelope::Emission { gamma, gamma_ph } => {
                emission_pump_envelope(*gamma, &WavepacketSpec::right(*gamma_ph), t).unwrap_or(f64::NAN)
            }
            Envelope::Absorption { gamma, gamma_ph } => {
                emission_pump_envelope(*gamma, &WavepacketSpec::right(*gamma_ph), -t).unwrap_or(f64::NAN)
            }
            Envelope::Sampled { t0, dt, values } => {
                let u = (t - t0) / dt;
                if u < 0.0 || values.is_empty() {
                    return 0.0;
                }
                let k = u.floor() as usize;
                if k + 1 >= values.len() {
                    return if k + 1 == values.len() { values[k] } else { 0.0 };
                }
                let f = u - k as f64;
                values[k] * (1.0 - f) + values[k + 1] * f
            }
        }
    }

    /// Upper bound of the envelope on [t0, t1].
    pub fn max_on(&self, t0: f64, t1: f64) -> f64 {
        match self {
            Envelope::Off => 0.0,
            Envelope::Constant(g) => g.abs(),
            Envelope::Sampled { values, .. } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
            _ => (0..=400).map(|k| self.at(t0 + (t1 - t0) * k as f64 / 400.0)).fold(0.0, f64::max),
        }
    }
}

/// Pump envelopes for one coupler; phases are constant per run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveEnvelope {
    pub g1: Envelope,
    pub g2: Envelope,
    pub phi1: f64,
    pub phi2: f64,
    pub leakage: f64,
}

impl DriveEnvelope {
    pub fn constant(p: &PumpSettings) -> Self {
        Self {
            g1: Envelope::Constant(p.g1),
            g2: Envelope::Constant(p.g2),
            phi1: p.phi1,
            phi2: p.phi2,
            leakage: p.leakage_ratio,
        }
    }

    pub fn off() -> Self {
        Self { g1: Envelope::Off, g2: Envelope::Off, phi1: 0.0, phi2: 0.0, leakage: 0.0 }
    }

    /// Both pumps follow the emission envelope; phases route b in `spec.direction`.
    pub fn emission(gamma: f64, spec: &WavepacketSpec) -> Result<Self> {
        emission_pump_envelope(gamma, spec, 0.0)?;
        let (phi1, phi2) = spec.pump_phases();
        let e = Envelope::Emission { gamma, gamma_ph: spec.gamma_ph };
        Ok(Self { g1: e.clone(), g2: e, phi1, phi2, leakage: 0.0 })
    }

    /// Time-reversed emission: captures a wavepacket travelling in `spec.direction`.
    pub fn absorption(gamma: f64, spec: &WavepacketSpec) -> Result<Self> {
        emission_pump_envelope(gamma, spec, 0.0)?;
        let (phi1, phi2) = spec.pump_phases();
        let e = Envelope::Absorption { gamma, gamma_ph: spec.gamma_ph };
        Ok(Self { g1: e.clone(), g2: e, phi1, phi2, leakage: 0.0 })
    }

    pub fn amplitudes(&self, t: f64) -> (C64, C64) {
        conversion_amplitudes(self.g1.at(t), self.g2.at(t), self.phi1, self.phi2, self.leakage)
    }

    pub fn max_on(&self, t0: f64, t1: f64) -> f64 {
        (1.0 + self.leakage) * self.g1.max_on(t0, t1).max(self.g2.max_on(t0, t1))
    }
}

/// Amplitude-decay rate for the emission envelope: γ + γᵢ/2 averaged over a1, a2.
pub fn envelope_gamma(params: &CouplerParams) -> f64 {
    0.5 * (params.a1.external_coupling
        + params.a2.external_coupling
        + 0.5 * (params.a1.internal_damping + params.a2.internal_damping))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum InputWave {
    Zero,
    /// Sech wavepacket centred at t = 0 scaled by a complex amplitude.
    Wavepacket { gamma_ph: f64, amplitude: (f64, f64) },
    /// amplitude · e^{−iδt}
    Tone { amplitude: (f64, f64), detuning: f64 },
}

impl InputWave {
    pub fn at(&self, t: f64) -> C64 {
        match self {
            InputWave::Zero => C64::from(0.0),
            InputWave::Wavepacket { gamma_ph, amplitude } => {
                C64::new(amplitude.0, amplitude.1) * sech_wavepacket(&WavepacketSpec::right(*gamma_ph), t)
            }
            InputWave::Tone { amplitude, detuning } => {
                C64::new(amplitude.0, amplitude.1) * C64::from_polar(1.0, -detuning * t)
            }
        }
    }

    fn rate(&self) -> f64 {
        match self {
            InputWave::Zero => 0.0,
            InputWave::Wavepacket { gamma_ph, .. } => *gamma_ph,
            InputWave::Tone { detuning, .. } => detuning.abs(),
        }
    }
}

/// Inputs indexed by physical port: 1 = d_R^in (from the left), 2 = d_L^in, 3 = b^in.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Inputs {
    pub port1: InputWave,
    pub port2: InputWave,
    pub port3: InputWave,
}

impl Inputs {
    pub fn none() -> Self {
        Self { port1: InputWave::Zero, port2: InputWave::Zero, port3: InputWave::Zero }
    }

    pub fn on_port(port: usize, w: InputWave) -> Self {
        let mut s = Self::none();
        match port {
            1 => s.port1 = w,
            2 => s.port2 = w,
            _ => s.port3 = w,
        }
        s
    }

    /// u = (d_L^in, d_R^in, b^in)
    fn u(&self, t: f64) -> Vector3<C64> {
        let mut u = Vector3::zeros();
        u[PORT_INPUT[0]] = self.port1.at(t);
        u[PORT_INPUT[1]] = self.port2.at(t);
        u[PORT_INPUT[2]] = self.port3.at(t);
        u
    }

    fn max_rate(&self) -> f64 {
        self.port1.rate().max(self.port2.rate()).max(self.port3.rate())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FieldRecord {
    pub t: Vec<f64>,
    pub a1: Vec<C64>,
    pub a2: Vec<C64>,
    pub b: Vec<C64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FluxRecord {
    pub t: Vec<f64>,
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub b: Vec<f64>,
    pub g1: Vec<f64>,
    pub g2: Vec<f64>,
    /// Integrated photons leaving through each output, and entering through all inputs.
    pub photons_left: f64,
    pub photons_right: f64,
    pub photons_b: f64,
    pub photons_in: f64,
    pub initial_photons: f64,
}

/// Output fields y = u + Cx reordered to (d_L^out, d_R^out, b^out).
fn outputs(c: &Matrix3<C64>, x: &Vector3<C64>, u: &Vector3<C64>) -> [C64; 3] {
    let y = u + c * x;
    [y[PORT_OUTPUT[0]], y[PORT_OUTPUT[1]], y[PORT_OUTPUT[2]]]
}

#[derive(Clone, Copy)]
struct State {
    x: Vector3<C64>,
    /// (left, right, b, input) integrated photon counts
    n: [f64; 4],
}

impl State {
    fn axpy(&self, h: f64, k: &State) -> State {
        let mut n = self.n;
        for (a, b) in n.iter_mut().zip(k.n) {
            *a += h * b;
        }
        State { x: self.x + k.x * C64::from(h), n }
    }
}

pub struct Simulator<'a> {
    params: &'a CouplerParams,
    drive: &'a DriveEnvelope,
    inputs: &'a Inputs,
    c: Matrix3<C64>,
    c_adj: Matrix3<C64>,
}

impl<'a> Simulator<'a> {
    pub fn new(params: &'a CouplerParams, drive: &'a DriveEnvelope, inputs: &'a Inputs) -> Self {
        let c = output_matrix(params);
        Self { params, drive, inputs, c, c_adj: c.adjoint() }
    }

    /// Largest rate in the problem, used for the step-size invariant.
    pub fn max_rate(&self, t0: f64, t1: f64) -> f64 {
        self.params.max_rate().max(self.drive.max_on(t0, t1)).max(self.inputs.max_rate())
    }

    fn deriv(&self, t: f64, s: &State) -> State {
        let (c1, c2) = self.drive.amplitudes(t);
        let m = drift_matrix(self.params, c1, c2);
        let u = self.inputs.u(t);
        let x = m * s.x - self.c_adj * u;
        let y = outputs(&self.c, &s.x, &u);
        State { x, n: [y[0].norm_sqr(), y[1].norm_sqr(), y[2].norm_sqr(), u.norm_squared()] }
    }

    fn step(&self, t: f64, dt: f64, s: &State) -> State {
        let k1 = self.deriv(t, s);
        let k2 = self.deriv(t + 0.5 * dt, &s.axpy(0.5 * dt, &k1));
        let k3 = self.deriv(t + 0.5 * dt, &s.axpy(0.5 * dt, &k2));
        let k4 = self.deriv(t + dt, &s.axpy(dt, &k3));
        let mut out = *s;
        out.x += (k1.x + (k2.x + k3.x) * C64::from(2.0) + k4.x) * C64::from(dt / 6.0);
        for i in 0..4 {
            out.n[i] += dt / 6.0 * (k1.n[i] + 2.0 * (k2.n[i] + k3.n[i]) + k4.n[i]);
        }
        out
    }

    fn record(&self, t: f64, s: &State, field: &mut FieldRecord, flux: &mut FluxRecord) {
        let u = self.inputs.u(t);
        let y = outputs(&self.c, &s.x, &u);
        field.t.push(t);
        field.a1.push(s.x[0]);
        field.a2.push(s.x[1]);
        field.b.push(s.x[2]);
        flux.t.push(t);
        flux.left.push(y[0].norm_sqr());
        flux.right.push(y[1].norm_sqr());
        flux.b.push(y[2].norm_sqr());
        flux.g1.push(self.drive.g1.at(t));
        flux.g2.push(self.drive.g2.at(t));
    }

    /// Integrates over `grid`, or until `stop` returns true after a step.
    pub fn run(
        &self,
        initial: [C64; 3],
        grid: &TimeGrid,
        mut stop: impl FnMut(f64, &[C64; 3]) -> bool,
    ) -> Result<(FieldRecord, FluxRecord)> {
        grid.check(self.max_rate(grid.t_start, grid.t_end))?;
        let mut s = State { x: Vector3::from(initial), n: [0.0; 4] };
        let mut field = FieldRecord::default();
        let mut flux = FluxRecord { initial_photons: s.x.norm_squared(), ..Default::default() };
        self.record(grid.t_start, &s, &mut field, &mut flux);
        for k in 0..grid.steps() {
            let t = grid.t_start + k as f64 * grid.dt;
            s = self.step(t, grid.dt, &s);
            let t1 = grid.t_start + (k + 1) as f64 * grid.dt;
            if !s.x.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
                return Err(Error::IntegrationQuality { t: t1, reason: "non-finite amplitude".into() });
            }
            self.record(t1, &s, &mut field, &mut flux);
            if stop(t1, &[s.x[0], s.x[1], s.x[2]]) {
                break;
            }
        }
        [flux.photons_left, flux.photons_right, flux.photons_b, flux.photons_in] = s.n;
        Ok((field, flux))
    }
}

pub fn simulate_semiclassical(
    params: &CouplerParams,
    drive: &DriveEnvelope,
    inputs: &Inputs,
    initial: [C64; 3],
    grid: &TimeGrid,
) -> Result<(FieldRecord, FluxRecord)> {
    Simulator::new(params, drive, inputs).run(initial, grid, |_, _| false)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmissionMetrics {
    pub total_photons: f64,
    pub right_fraction: f64,
    pub left_fraction: f64,
    pub efficiency: f64,
}

/// Fractions are of the initial photon number; `target` picks the efficiency direction.
pub fn emission_metrics(flux: &FluxRecord, target: Direction) -> EmissionMetrics {
    let n0 = flux.initial_photons;
    let total = flux.photons_left + flux.photons_right + flux.photons_b;
    let right_fraction = flux.photons_right / n0;
    let left_fraction = flux.photons_left / n0;
    EmissionMetrics {
        total_photons: total,
        right_fraction,
        left_fraction,
        efficiency: match target {
            Direction::Right => right_fraction,
            Direction::Left => left_fraction,
        },
    }
}

pub const EMISSION_STOP_POPULATION: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct EmissionRun {
    pub field: FieldRecord,
    pub flux: FluxRecord,
    pub metrics: EmissionMetrics,
}

/// Releases one photon stored in b. Starts at −8/γ_ph and stops once the mode
/// population falls below 1e-4 (hard limit `t_max`). `per_rate` sets points per
/// 1/max_rate and must be ≥ 50.
pub fn emit(params: &CouplerParams, drive: &DriveEnvelope, spec: &WavepacketSpec, per_rate: f64) -> Result<EmissionRun> {
    let t0 = -8.0 / spec.gamma_ph;
    let t_max = 200.0 / spec.gamma_ph;
    let inputs = Inputs::none();
    let sim = Simulator::new(params, drive, &inputs);
    // The emission envelope is bounded by its late-time plateau.
    let rate = sim.max_rate(t0, 40.0 / spec.gamma_ph);
    let dt = 1.0 / (per_rate * rate);
    let grid = TimeGrid { t_start: t0, t_end: t0 + dt * ((t_max - t0) / dt).ceil(), dt };
    let (field, flux) = sim.run([C64::from(0.0), C64::from(0.0), C64::from(1.0)], &grid, |t, x| {
        t > 0.0 && x.iter().map(|z| z.norm_sqr()).sum::<f64>() < EMISSION_STOP_POPULATION
    })?;
    let metrics = emission_metrics(&flux, spec.direction);
    Ok(EmissionRun { field, flux, metrics })
}

/// Emission with the standard envelope for `params` (γ from [`envelope_gamma`]).
pub fn emit_standard(params: &CouplerParams, spec: &WavepacketSpec) -> Result<EmissionRun> {
    let drive = DriveEnvelope::emission(envelope_gamma(params), spec)?;
    emit(params, &drive, spec, 50.0)
}

#[derive(Clone, Debug)]
pub struct AbsorptionRun {
    pub field: FieldRecord,
    pub flux: FluxRecord,
    pub final_b_population: f64,
}

/// Sends one sech photon into port 1 (rightward) and catches it in b.
pub fn absorb(params: &CouplerParams, spec: &WavepacketSpec, per_rate: f64) -> Result<AbsorptionRun> {
    let drive = DriveEnvelope::absorption(envelope_gamma(params), spec)?;
    let port = match spec.direction {
        Direction::Right => 1,
        Direction::Left => 2,
    };
    let inputs = Inputs::on_port(port, InputWave::Wavepacket { gamma_ph: spec.gamma_ph, amplitude: (1.0, 0.0) });
    let (t0, t1) = (-12.0 / spec.gamma_ph, 12.0 / spec.gamma_ph);
    let sim = Simulator::new(params, &drive, &inputs);
    let grid = TimeGrid::with_points_per_rate(t0, t1, sim.max_rate(t0, t1), per_rate);
    let (field, flux) = sim.run([C64::from(0.0); 3], &grid, |_, _| false)?;
    let final_b_population = field.b.last().map(|z| z.norm_sqr()).unwrap_or(0.0);
    Ok(AbsorptionRun { field, flux, final_b_population })
}

/// Slowest decay rate of the pumped linear system.
fn slowest_rate(params: &CouplerParams, pumps: &PumpSettings) -> f64 {
    let (c1, c2) = conversion_amplitudes(pumps.g1, pumps.g2, pumps.phi1, pumps.phi2, pumps.leakage_ratio);
    let m = drift_matrix(params, c1, c2);
    match m.schur().eigenvalues() {
        Some(ev) => ev.iter().map(|z| -z.re).fold(f64::INFINITY, f64::min),
        None => 0.0,
    }
}

/// Steady-state ratio output/input for a tone at detuning `delta` into
/// `input_port`, measured at `output_port` (1-based physical ports).
pub fn steady_state_response(
    params: &CouplerParams,
    pumps: &PumpSettings,
    delta: f64,
    input_port: usize,
    output_port: usize,
) -> Result<C64> {
    let rate = slowest_rate(params, pumps);
    if !(rate > 0.0) {
        return Err(Error::Domain("undamped system has no steady state".into()));
    }
    let drive = DriveEnvelope::constant(pumps);
    let inputs = Inputs::on_port(input_port, InputWave::Tone { amplitude: (1.0, 0.0), detuning: delta });
    let sim = Simulator::new(params, &drive, &inputs);
    let mut t_end = 20.0 / rate;
    let mut drift = f64::INFINITY;
    for _ in 0..4 {
        let grid = TimeGrid::for_rate(0.0, t_end, sim.max_rate(0.0, t_end));
        let (field, _) = sim.run([C64::from(0.0); 3], &grid, |_, _| false)?;
        let c = output_matrix(params);
        let ratio = |k: usize| {
            let t = field.t[k];
            let x = Vector3::new(field.a1[k], field.a2[k], field.b[k]);
            let u = inputs.u(t);
            let y = outputs(&c, &x, &u);
            y[output_port - 1] / inputs.u(t)[PORT_INPUT[input_port - 1]]
        };
        let n = field.t.len();
        let last = ratio(n - 1);
        let start = n - 1 - (n - 1) / 10;
        drift = (start..n).map(|k| (ratio(k) - last).norm()).fold(0.0, f64::max) / last.norm().max(1e-300);
        if drift <= 1e-6 {
            return Ok(last);
        }
        t_end *= 2.0;
    }
    Err(Error::NotConverged { drift })
}

/// Cross-check helper: S_ij from the frequency-domain solver.
pub fn frequency_domain_reference(
    params: &CouplerParams,
    pumps: &PumpSettings,
    delta: f64,
    input_port: usize,
    output_port: usize,
) -> Result<C64> {
    Ok(s_matrix_numeric(params, pumps, delta)?.s(output_port, input_port))
}

/// CSV with columns t_us, re/im of a1, a2, b, fluxes and pump envelopes.
pub fn write_csv(field: &FieldRecord, flux: &FluxRecord, out: impl Write) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "t_us", "re_a1", "im_a1", "re_a2", "im_a2", "re_b", "im_b", "flux_left", "flux_right", "flux_b", "g1_t",
        "g2_t",
    ])?;
    for k in 0..field.t.len() {
        let v = [
            field.t[k] * 1e6,
            field.a1[k].re,
            field.a1[k].im,
            field.a2[k].re,
            field.a2[k].im,
            field.b[k].re,
            field.b[k].im,
            flux.left[k],
            flux.right[k],
            flux.b[k],
            flux.g1[k],
            flux.g2[k],
        ];
        w.write_record(v.iter().map(|x| format!("{x:.16e}")))?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wavepacket_values() {
        let spec = WavepacketSpec::right(0.8);
        assert!((sech_wavepacket(&spec, 0.0) - 0.8f64.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(sech_wavepacket(&spec, 1.3), sech_wavepacket(&spec, -1.3));
        let dt = 1e-3;
        let norm: f64 = (-40000..=40000).map(|k| sech_wavepacket(&spec, k as f64 * dt).powi(2) * dt).sum();
        assert!((norm - 1.0).abs() < 1e-4);
    }

    #[test]
    fn envelope_values() {
        let spec = WavepacketSpec::right(0.5);
        let g0 = emission_pump_envelope(1.0, &spec, 0.0).unwrap();
        let direct = 2.0 * 0.5f64.sqrt() / (8.0 * (0.5f64 - 0.5 / 8.0).sqrt());
        assert!((g0 - direct).abs() < 1e-15);
        assert!((g0 - 0.26726).abs() < 1e-5);
        assert!(emission_pump_envelope(1.0, &spec, -200.0).unwrap() < 1e-20);
        let late = emission_pump_envelope(1.0, &spec, 400.0).unwrap();
        let gph: f64 = 0.5;
        let asym = gph.sqrt() * (2.0 - gph) / (8.0 * ((2.0 - gph) / 8.0).sqrt());
        assert!((late - asym).abs() < 1e-12);
        assert!(emission_pump_envelope(1.0, &WavepacketSpec::right(2.0), 0.0).is_err());
    }

    #[test]
    fn zero_in_zero_out() {
        let p = CouplerParams::symmetric_lossless(1.0, 1.0);
        let grid = TimeGrid::for_rate(0.0, 10.0, 1.0);
        let (f, x) = simulate_semiclassical(
            &p,
            &DriveEnvelope::constant(&PumpSettings::isolate(0.5, &p)),
            &Inputs::none(),
            [C64::from(0.0); 3],
            &grid,
        )
        .unwrap();
        assert!(f.a1.iter().chain(&f.a2).chain(&f.b).all(|z| *z == C64::from(0.0)));
        assert!(x.left.iter().chain(&x.right).all(|v| *v == 0.0));
    }

    #[test]
    fn coarse_grid_rejected() {
        let p = CouplerParams::symmetric_lossless(1.0, 1.0);
        let grid = TimeGrid { t_start: 0.0, t_end: 1.0, dt: 0.1 };
        let r = simulate_semiclassical(&p, &DriveEnvelope::off(), &Inputs::none(), [C64::from(1.0); 3], &grid);
        assert!(matches!(r, Err(Error::Grid(_))));
    }

    #[test]
    fn ideal_emission_goes_right() {
        let p = CouplerParams::symmetric_lossless(1.0, 0.0);
        let spec = WavepacketSpec::right(0.5);
        let run = emit_standard(&p, &spec).unwrap();
        assert!((run.metrics.total_photons - 1.0).abs() < 1e-3, "{:?}", run.metrics);
        assert!(run.metrics.right_fraction >= 0.999);
        // emitted flux follows the target |φ(t)|²
        for k in (0..run.flux.t.len()).step_by(97) {
            let t = run.flux.t[k];
            assert!((run.flux.right[k] - sech_wavepacket(&spec, t).powi(2)).abs() < 2e-3);
        }
    }

    #[test]
    fn absorption_catches_photon() {
        let p = CouplerParams::symmetric_lossless(1.0, 0.0);
        let run = absorb(&p, &WavepacketSpec::right(0.5), 50.0).unwrap();
        assert!((run.final_b_population - 1.0).abs() < 1e-3, "{}", run.final_b_population);
    }

    #[test]
    fn steady_state_matches_s21() {
        let p = CouplerParams::measured_device();
        let pumps = PumpSettings::pass(crate::units::mhz(0.7), &p);
        for d in [0.0, 2.0 * p.mean_gamma()] {
            let td = steady_state_response(&p, &pumps, d, 1, 2).unwrap();
            let fd = frequency_domain_reference(&p, &pumps, d, 1, 2).unwrap();
            assert!((td - fd).norm() / fd.norm() < 1e-6, "{td} vs {fd}");
        }
    }
}
