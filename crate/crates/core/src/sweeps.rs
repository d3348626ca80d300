//! Parameter sweeps over the other modules, producing tables with provenance.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::freqdomain::{optimize_g, resonance_metrics};
use crate::lindblad::{transfer_experiment, StateSpec, TransferOptions};
use crate::model::units::mhz;
use crate::model::{CouplerParams, NetworkLayout, PumpSettings, WavepacketSpec};
use crate::snail::{damping_scale, FluxNoiseModel};
use crate::timedomain::emit_standard;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub unit: String,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn new(name: &str, unit: &str, values: Vec<f64>) -> Self {
        Self { name: name.into(), unit: unit.into(), values }
    }

    /// `n` evenly spaced points on [lo, hi].
    pub fn linspace(name: &str, unit: &str, lo: f64, hi: f64, n: usize) -> Self {
        let values = (0..n).map(|k| if n == 1 { lo } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect();
        Self::new(name, unit, values)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub name: String,
    pub axes: Vec<Axis>,
    /// Metrics to report; empty means all the sweep produces.
    pub metrics: Vec<String>,
    pub base: CouplerParams,
    pub pumps: PumpSettings,
    /// Also report isolation with g optimised over [0.1γ, 3γ] per point.
    pub optimize_g: bool,
    /// Run the master-equation transfer where a sweep supports it.
    pub lindblad: bool,
    /// γ_ph as a multiple of the mean a-mode γ for time-domain sweeps.
    pub gamma_ph_ratio: f64,
    /// Worker count; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl SweepSpec {
    fn single(name: &str, axis: Axis, base: CouplerParams, pumps: PumpSettings, gamma_ph_ratio: f64) -> Self {
        Self {
            name: name.into(),
            axes: vec![axis],
            metrics: Vec::new(),
            base,
            pumps,
            optimize_g: true,
            lindblad: false,
            gamma_ph_ratio,
            threads: None,
        }
    }

    /// γ = γ_b = g = 0.5 MHz, swept over the common γᵢ/γ.
    pub fn isolation_vs_damping(ratios: Vec<f64>) -> Self {
        let base = CouplerParams::symmetric_lossless(mhz(0.5), mhz(0.5));
        let pumps = PumpSettings::isolate(mhz(0.5), &base);
        Self::single("isolation_vs_damping", Axis::new("gi_over_gamma", "1", ratios), base, pumps, 0.5)
    }

    /// measured device at g = 0.70 MHz, swept over the SNAIL asymmetry.
    pub fn isolation_vs_alpha(alphas: Vec<f64>) -> Self {
        let base = CouplerParams::measured_device();
        let pumps = PumpSettings::isolate(mhz(0.70), &base);
        Self::single("isolation_vs_alpha", Axis::new("alpha", "1", alphas), base, pumps, 0.5)
    }

    /// Measured-device a-modes with an ideal b, over mean γ (MHz) × α.
    pub fn emission_efficiency_map(gammas_mhz: Vec<f64>, alphas: Vec<f64>) -> Self {
        let base = CouplerParams::measured_device().with_b(0.0, 0.0);
        let pumps = PumpSettings::isolate(0.0, &base);
        let mut s = Self::single("emission_efficiency_map", Axis::new("gamma", "MHz", gammas_mhz), base, pumps, 0.5);
        s.axes.push(Axis::new("alpha", "1", alphas));
        s.optimize_g = false;
        s
    }

    pub fn pump_leakage(eps: Vec<f64>) -> Self {
        let base = CouplerParams::measured_device();
        let pumps = PumpSettings::isolate(mhz(0.70), &base);
        Self::single("pump_leakage", Axis::new("epsilon", "1", eps), base, pumps, 0.5)
    }

    /// Lossless couplers with γ = 1 MHz and an ideal b, over |g_c|/√(γ1γ2).
    pub fn residual_coupling(ratios: Vec<f64>) -> Self {
        let base = CouplerParams::symmetric_lossless(mhz(1.0), 0.0);
        let pumps = PumpSettings::isolate(0.0, &base);
        let mut s = Self::single("residual_coupling", Axis::new("ratio", "1", ratios), base, pumps, 0.5);
        s.optimize_g = false;
        s
    }

    /// Two lossless couplers (γ = 1 MHz, ideal b) over γᵢ,a/γ at γ_ph = 0.1γ.
    pub fn transfer_fidelity_vs_damping(ratios: Vec<f64>) -> Self {
        let base = CouplerParams::symmetric_lossless(mhz(1.0), 0.0);
        let pumps = PumpSettings::isolate(0.0, &base);
        let mut s = Self::single("transfer_fidelity_vs_damping", Axis::new("gi_a_over_gamma", "1", ratios), base, pumps, 0.1);
        s.optimize_g = false;
        s.lindblad = true;
        s
    }

    pub fn validate(&self) -> Result<()> {
        if self.axes.is_empty() {
            return Err(Error::Domain("sweep needs at least one axis".into()));
        }
        for a in &self.axes {
            if a.values.len() < 2 {
                return Err(Error::Domain(format!("axis {} needs at least 2 points", a.name)));
            }
            if a.values.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("axis {} has non-finite values", a.name)));
            }
        }
        if !(self.gamma_ph_ratio > 0.0) {
            return Err(Error::Domain("gamma_ph_ratio must be positive".into()));
        }
        Ok(())
    }

    /// SHA-256 of the JSON encoding of the spec.
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("spec serialises");
        Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
    }

    fn expect_axes(&self, names: &[&str]) -> Result<()> {
        let got: Vec<&str> = self.axes.iter().map(|a| a.name.as_str()).collect();
        if got != names {
            return Err(Error::Domain(format!("{} expects axes {names:?}, got {got:?}", self.name)));
        }
        Ok(())
    }
}

/// Every parameter a row was computed with, in rad/s and rad.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ResolvedParams {
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma_b: f64,
    pub gamma_i1: f64,
    pub gamma_i2: f64,
    pub gamma_ib: f64,
    pub g_c: f64,
    pub g1: f64,
    pub g2: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub leakage: f64,
    /// NaN for frequency-domain rows.
    pub gamma_ph: f64,
}

const PARAM_COLUMNS: [&str; 13] = [
    "gamma1", "gamma2", "gamma_b", "gamma_i1", "gamma_i2", "gamma_ib", "g_c", "g1", "g2", "phi1", "phi2", "leakage",
    "gamma_ph",
];

impl ResolvedParams {
    pub fn new(p: &CouplerParams, pumps: &PumpSettings, gamma_ph: f64) -> Self {
        Self {
            gamma1: p.a1.external_coupling,
            gamma2: p.a2.external_coupling,
            gamma_b: p.b.external_coupling,
            gamma_i1: p.a1.internal_damping,
            gamma_i2: p.a2.internal_damping,
            gamma_ib: p.b.internal_damping,
            g_c: p.cancellation_coupling,
            g1: pumps.g1,
            g2: pumps.g2,
            phi1: pumps.phi1,
            phi2: pumps.phi2,
            leakage: pumps.leakage_ratio,
            gamma_ph,
        }
    }

    fn values(&self) -> [f64; 13] {
        [
            self.gamma1, self.gamma2, self.gamma_b, self.gamma_i1, self.gamma_i2, self.gamma_ib, self.g_c, self.g1,
            self.g2, self.phi1, self.phi2, self.leakage, self.gamma_ph,
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub axes: Vec<f64>,
    pub params: ResolvedParams,
    /// NaN where the point failed.
    pub metrics: Vec<f64>,
    /// "ok" or the error code of the failure.
    pub status: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub unit: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub sweep: String,
    pub config_hash: String,
    pub version: String,
    pub axes: Vec<Axis>,
    pub metrics: Vec<Column>,
    pub param_unit: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub provenance: Provenance,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn metric_index(&self, name: &str) -> Option<usize> {
        self.provenance.metrics.iter().position(|c| c.name == name)
    }

    /// One metric over all rows in grid order.
    pub fn metric(&self, name: &str) -> Result<Vec<f64>> {
        let k = self.metric_index(name).ok_or_else(|| Error::Domain(format!("no metric {name}")))?;
        Ok(self.rows.iter().map(|r| r.metrics[k]).collect())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.status != "ok")
    }

    pub fn header(&self) -> Vec<String> {
        let mut h: Vec<String> = vec!["index".into()];
        h.extend(self.provenance.axes.iter().map(|a| a.name.clone()));
        h.extend(self.provenance.metrics.iter().map(|c| c.name.clone()));
        h.extend(PARAM_COLUMNS.iter().map(|s| s.to_string()));
        h.push("status".into());
        h
    }

    /// CSV with 17 significant digits per value.
    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.header())?;
        for r in &self.rows {
            let mut rec = vec![r.index.to_string()];
            rec.extend(r.axes.iter().chain(&r.metrics).chain(r.params.values().iter()).map(|x| fmt17(*x)));
            rec.push(r.status.clone());
            w.write_record(rec)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Sidecar metadata: hash, version, axes and units.
    pub fn write_metadata(&self, out: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.provenance)?;
        Ok(())
    }
}

/// Round-trippable text for a double.
pub fn fmt17(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

fn grid_points(axes: &[Axis]) -> Vec<Vec<f64>> {
    let mut pts = vec![Vec::new()];
    for a in axes {
        pts = pts.into_iter().flat_map(|p| a.values.iter().map(move |&v| [p.clone(), vec![v]].concat())).collect();
    }
    pts
}

type PointFn<'a> = dyn Fn(&[f64]) -> (ResolvedParams, Result<Vec<f64>>) + Sync + 'a;

fn run_grid(spec: &SweepSpec, columns: Vec<Column>, eval: &PointFn) -> Result<SweepResult> {
    spec.validate()?;
    let keep: Vec<usize> = if spec.metrics.is_empty() {
        (0..columns.len()).collect()
    } else {
        spec.metrics
            .iter()
            .map(|m| {
                columns.iter().position(|c| &c.name == m).ok_or_else(|| Error::Domain(format!("{} has no metric {m}", spec.name)))
            })
            .collect::<Result<_>>()?
    };
    let pts = grid_points(&spec.axes);
    let work = || -> Vec<SweepRow> {
        pts.par_iter()
            .enumerate()
            .map(|(index, x)| {
                let (params, res) = eval(x);
                let (metrics, status) = match res {
                    Ok(m) => (keep.iter().map(|&k| m[k]).collect(), "ok".to_string()),
                    Err(e) => (vec![f64::NAN; keep.len()], e.code().to_string()),
                };
                SweepRow { index, axes: x.clone(), params, metrics, status }
            })
            .collect()
    };
    let rows = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Domain(e.to_string()))?
            .install(work),
        None => work(),
    };
    Ok(SweepResult {
        provenance: Provenance {
            sweep: spec.name.clone(),
            config_hash: spec.config_hash(),
            version: env!("CARGO_PKG_VERSION").into(),
            axes: spec.axes.clone(),
            metrics: keep.iter().map(|&k| columns[k].clone()).collect(),
            param_unit: "rad/s (phases in rad)".into(),
        },
        rows,
    })
}

fn col(name: &str, unit: &str) -> Column {
    Column { name: name.into(), unit: unit.into() }
}

fn isolation_columns(optimize: bool) -> Vec<Column> {
    let mut c = vec![
        col("insertion_loss_db", "dB"),
        col("isolation_db", "dB"),
        col("g_match", "MHz"),
        col("insertion_loss_match_db", "dB"),
        col("isolation_match_db", "dB"),
    ];
    if optimize {
        c.extend([col("g_opt", "MHz"), col("insertion_loss_opt_db", "dB"), col("isolation_opt_db", "dB")]);
    }
    c
}

/// g = √(√(γ1γ2)·γ_b)/2, which isolates perfectly when nothing is lossy.
pub fn matched_g(p: &CouplerParams) -> f64 {
    0.5 * (p.geometric_gamma() * p.b.external_coupling).sqrt()
}

/// Metrics at the pumps' g, at the lossless matching g, then (optionally) at the isolation-optimal g.
fn isolation_row(p: &CouplerParams, pumps: &PumpSettings, optimize: bool) -> Result<Vec<f64>> {
    let (il, iso) = resonance_metrics(p, pumps)?;
    let gm = matched_g(p);
    let (il_m, iso_m) = resonance_metrics(p, &PumpSettings { g1: gm, g2: gm, ..*pumps })?;
    let mut m = vec![il, iso, crate::units::to_mhz(gm), il_m, iso_m];
    if optimize {
        let gamma = p.mean_gamma();
        let (g, _) = optimize_g(p, pumps, 0.1 * gamma, 3.0 * gamma)?;
        let (il_o, iso_o) = resonance_metrics(p, &PumpSettings { g1: g, g2: g, ..*pumps })?;
        m.extend([crate::units::to_mhz(g), il_o, iso_o]);
    }
    Ok(m)
}

/// Isolation and insertion loss at δ = 0 over a common γᵢ/γ on all three modes.
pub fn sweep_isolation_vs_damping(spec: &SweepSpec) -> Result<SweepResult> {
    spec.expect_axes(&["gi_over_gamma"])?;
    let eval = |x: &[f64]| {
        let b = &spec.base;
        let p = b
            .clone()
            .with_a_internal(x[0] * b.a1.external_coupling, x[0] * b.a2.external_coupling)
            .with_b(b.b.external_coupling, x[0] * b.b.external_coupling);
        let res = if x[0] < 0.0 { Err(Error::Domain("negative damping".into())) } else { isolation_row(&p, &spec.pumps, spec.optimize_g) };
        (ResolvedParams::new(&p, &spec.pumps, f64::NAN), res)
    };
    run_grid(spec, isolation_columns(spec.optimize_g), &eval)
}

/// Internal dampings of all modes scaled by the flux-noise model relative to the base (α = 0.29).
pub fn scaled_for_alpha(base: &CouplerParams, alpha: f64) -> Result<CouplerParams> {
    let s = damping_scale(alpha, &FluxNoiseModel::device(1.0))?;
    let mut p = base.clone();
    p.a1.internal_damping *= s;
    p.a2.internal_damping *= s;
    p.b.internal_damping *= s;
    Ok(p)
}

pub fn sweep_isolation_vs_alpha(spec: &SweepSpec) -> Result<SweepResult> {
    spec.expect_axes(&["alpha"])?;
    let eval = |x: &[f64]| match scaled_for_alpha(&spec.base, x[0]) {
        Ok(p) => (ResolvedParams::new(&p, &spec.pumps, f64::NAN), isolation_row(&p, &spec.pumps, spec.optimize_g)),
        Err(e) => (ResolvedParams::new(&spec.base, &spec.pumps, f64::NAN), Err(e)),
    };
    run_grid(spec, isolation_columns(spec.optimize_g), &eval)
}

/// One-way emission efficiency over (γ in MHz, α); the b-mode dampings of the base are kept.
pub fn sweep_emission_efficiency_map(spec: &SweepSpec) -> Result<SweepResult> {
    spec.expect_axes(&["gamma", "alpha"])?;
    let eval = |x: &[f64]| {
        let gamma = mhz(x[0]);
        let mut p = spec.base.clone().with_mean_gamma(gamma);
        let res = (|| {
            let s = damping_scale(x[1], &FluxNoiseModel::device(1.0))?;
            p.a1.internal_damping *= s;
            p.a2.internal_damping *= s;
            let run = emit_standard(&p, &WavepacketSpec::right(spec.gamma_ph_ratio * gamma))?;
            let m = run.metrics;
            Ok(vec![m.efficiency, m.right_fraction, m.left_fraction, m.total_photons])
        })();
        let (phi1, phi2) = WavepacketSpec::right(1.0).pump_phases();
        let pumps = PumpSettings { phi1, phi2, ..spec.pumps };
        (ResolvedParams::new(&p, &pumps, spec.gamma_ph_ratio * gamma), res)
    };
    let cols = vec![col("efficiency", "1"), col("right_fraction", "1"), col("left_fraction", "1"), col("total_photons", "1")];
    run_grid(spec, cols, &eval)
}

pub fn sweep_pump_leakage(spec: &SweepSpec) -> Result<SweepResult> {
    spec.expect_axes(&["epsilon"])?;
    let eval = |x: &[f64]| {
        let pumps = spec.pumps.with_leakage(x[0]);
        let res = if x[0] < 0.0 { Err(Error::Domain("negative leakage".into())) } else { isolation_row(&spec.base, &pumps, spec.optimize_g) };
        (ResolvedParams::new(&spec.base, &pumps, f64::NAN), res)
    };
    run_grid(spec, isolation_columns(spec.optimize_g), &eval)
}

/// Emission flux split per cancellation ratio, plus received-state purity and
/// fidelity of a (|0⟩+|1⟩)/√2 transfer when `spec.lindblad` is set (NaN otherwise).
pub fn sweep_residual_coupling(spec: &SweepSpec) -> Result<SweepResult> {
    spec.expect_axes(&["ratio"])?;
    let eval = |x: &[f64]| {
        let p = spec.base.clone().with_ratio(x[0]);
        let gph = spec.gamma_ph_ratio * p.mean_gamma();
        let res = (|| {
            if !(x[0] > 0.0 && x[0] <= 2.0) {
                return Err(Error::Domain(format!("ratio {} outside (0, 2]", x[0])));
            }
            let m = emit_standard(&p, &WavepacketSpec::right(gph))?.metrics;
            let (purity, fidelity) = if spec.lindblad {
                let layout = NetworkLayout::chain(vec![p.clone(), p.clone()], 1.0);
                let r = transfer_experiment(&StateSpec::Plus, &WavepacketSpec::right(gph), &layout, &TransferOptions::default())?;
                (r.purity, r.fidelity_corrected)
            } else {
                (f64::NAN, f64::NAN)
            };
            Ok(vec![m.right_fraction, m.left_fraction, m.total_photons, purity, fidelity])
        })();
        (ResolvedParams::new(&p, &spec.pumps, gph), res)
    };
    let cols = vec![
        col("right_fraction", "1"),
        col("left_fraction", "1"),
        col("total_photons", "1"),
        col("purity", "1"),
        col("fidelity_corrected", "1"),
    ];
    run_grid(spec, cols, &eval)
}

/// Two-coupler transfer of (|0⟩+|1⟩)/√2 over γᵢ,a/γ on both couplers.
pub fn sweep_transfer_fidelity_vs_damping(spec: &SweepSpec) -> Result<SweepResult> {
    spec.expect_axes(&["gi_a_over_gamma"])?;
    let eval = |x: &[f64]| {
        let b = &spec.base;
        let p = b.clone().with_a_internal(x[0] * b.a1.external_coupling, x[0] * b.a2.external_coupling);
        let gph = spec.gamma_ph_ratio * p.mean_gamma();
        let res = (|| {
            if x[0] < 0.0 {
                return Err(Error::Domain("negative damping".into()));
            }
            let layout = NetworkLayout::chain(vec![p.clone(), p.clone()], 1.0);
            let r = transfer_experiment(&StateSpec::Plus, &WavepacketSpec::right(gph), &layout, &TransferOptions::default())?;
            Ok(vec![r.fidelity, r.fidelity_corrected, r.purity, r.max_trace_drift])
        })();
        (ResolvedParams::new(&p, &spec.pumps, gph), res)
    };
    let cols = vec![col("fidelity", "1"), col("fidelity_corrected", "1"), col("purity", "1"), col("max_trace_drift", "1")];
    run_grid(spec, cols, &eval)
}

/// Dispatch by sweep name.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    match spec.name.as_str() {
        "isolation_vs_damping" => sweep_isolation_vs_damping(spec),
        "isolation_vs_alpha" => sweep_isolation_vs_alpha(spec),
        "emission_efficiency_map" => sweep_emission_efficiency_map(spec),
        "pump_leakage" => sweep_pump_leakage(spec),
        "residual_coupling" => sweep_residual_coupling(spec),
        "transfer_fidelity_vs_damping" => sweep_transfer_fidelity_vs_damping(spec),
        other => Err(Error::Domain(format!("unknown sweep {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_order_is_row_major() {
        let pts = grid_points(&[Axis::new("a", "", vec![1.0, 2.0]), Axis::new("b", "", vec![10.0, 20.0, 30.0])]);
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1], vec![1.0, 20.0]);
        assert_eq!(pts[3], vec![2.0, 10.0]);
    }

    #[test]
    fn spec_checks() {
        let mut s = SweepSpec::pump_leakage(vec![0.0]);
        assert!(s.validate().is_err());
        s.axes.clear();
        assert!(s.validate().is_err());
        let s = SweepSpec::pump_leakage(vec![0.0, 0.2]);
        let mut t = s.clone();
        t.name = "isolation_vs_alpha".into();
        assert!(run_sweep(&t).is_err());
        assert_ne!(s.config_hash(), t.config_hash());
    }

    #[test]
    fn leakage_rows_and_failures() {
        let s = SweepSpec::pump_leakage(vec![0.0, -0.1, 0.2]);
        let r = sweep_pump_leakage(&s).unwrap();
        assert_eq!(r.rows.len(), 3);
        assert_eq!(r.rows[1].status, "domain");
        assert!(r.rows[1].metrics.iter().all(|v| v.is_nan()));
        assert_eq!(r.failures().count(), 1);
        let mut a = Vec::new();
        let mut b = Vec::new();
        r.write_csv(&mut a).unwrap();
        sweep_pump_leakage(&s).unwrap().write_csv(&mut b).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn metric_selection() {
        let mut s = SweepSpec::pump_leakage(vec![0.0, 0.2]);
        s.metrics = vec!["isolation_db".into()];
        let r = sweep_pump_leakage(&s).unwrap();
        assert_eq!(r.rows[0].metrics.len(), 1);
        s.metrics = vec!["nope".into()];
        assert!(sweep_pump_leakage(&s).is_err());
    }

    #[test]
    fn fmt17_roundtrips() {
        for x in [0.1, 1.0 / 3.0, -2.5e-17, 6.02214076e23] {
            assert_eq!(fmt17(x).parse::<f64>().unwrap(), x);
        }
    }
}
