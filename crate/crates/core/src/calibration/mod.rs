//! Parameter extraction on synthetic (or loaded) traces.

pub mod nelder_mead;

use std::io::Read;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::freqdomain::s21_unpumped_nonideal;
use crate::linear::{C64, I};
use nelder_mead::{latin_hypercube, multistart, NmOptions, NmResult};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceSample {
    pub detuning: f64,
    pub value: C64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticNoiseSpec {
    /// Standard deviation of each quadrature.
    pub sigma: f64,
    pub seed: u64,
}

impl SyntheticNoiseSpec {
    pub fn none() -> Self {
        Self { sigma: 0.0, seed: 0 }
    }
}

/// Evaluates `model` on the grid and adds seeded complex Gaussian noise.
pub fn synth_trace(model: impl Fn(f64) -> C64, grid: &[f64], noise: &SyntheticNoiseSpec) -> Result<Vec<TraceSample>> {
    if !(noise.sigma >= 0.0) {
        return Err(Error::Domain("noise sigma must be non-negative".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let normal = Normal::new(0.0, noise.sigma.max(f64::MIN_POSITIVE)).map_err(|e| Error::Domain(e.to_string()))?;
    Ok(grid
        .iter()
        .map(|&d| {
            let mut v = model(d);
            if noise.sigma > 0.0 {
                v += C64::new(normal.sample(&mut rng), normal.sample(&mut rng));
            }
            TraceSample { detuning: d, value: v }
        })
        .collect())
}

/// Reads columns freq_mhz, re, im; detuning is taken relative to `center_mhz`.
pub fn read_trace_csv(input: impl Read, center_mhz: f64) -> Result<Vec<TraceSample>> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers()?.clone();
    let col = |name: &str| {
        headers.iter().position(|h| h.trim() == name).ok_or_else(|| Error::Config(format!("trace CSV lacks column {name}")))
    };
    let (cf, cr, ci) = (col("freq_mhz")?, col("re")?, col("im")?);
    let mut out = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        let num = |i: usize| -> Result<f64> {
            rec[i].trim().parse::<f64>().map_err(|e| Error::Config(format!("bad number {:?}: {e}", &rec[i])))
        };
        let v = C64::new(num(cr)?, num(ci)?);
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(Error::Config("non-finite trace value".into()));
        }
        out.push(TraceSample { detuning: crate::units::mhz(num(cf)? - center_mhz), value: v });
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult<P> {
    pub estimate: P,
    /// √(Σ residual²) over the stacked real/imaginary residuals.
    pub residual_norm: f64,
    /// ∂²(Σ residual²)/∂θ_k² at the optimum, per parameter in estimate order.
    pub curvature: Vec<f64>,
    pub starts: usize,
    pub converged_starts: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonidealParams {
    pub g_c: f64,
    pub gamma_e: f64,
    pub gamma_i1: f64,
    pub gamma_i2: f64,
}

impl NonidealParams {
    pub fn s21(&self, delta: f64) -> C64 {
        s21_unpumped_nonideal(delta, self.g_c, self.gamma_e, self.gamma_i1, self.gamma_i2)
    }

    pub fn ratio(&self) -> f64 {
        -self.g_c / self.gamma_e
    }

    /// The other (g_c) solution giving an identical trace: g_c → −2γ_e − g_c.
    pub fn mirror(&self) -> Self {
        Self { g_c: -2.0 * self.gamma_e - self.g_c, ..*self }
    }

    /// The combinations a trace actually determines: (γ_e, γ_i1 + γ_i2, 4(g_c + γ_e)² + γ_i1γ_i2).
    pub fn identifiable(&self) -> [f64; 3] {
        [
            self.gamma_e,
            self.gamma_i1 + self.gamma_i2,
            4.0 * (self.g_c + self.gamma_e).powi(2) + self.gamma_i1 * self.gamma_i2,
        ]
    }

    fn as_vec(&self) -> [f64; 4] {
        [self.g_c, self.gamma_e, self.gamma_i1, self.gamma_i2]
    }

    fn from_vec(v: &[f64]) -> Self {
        Self { g_c: v[0], gamma_e: v[1], gamma_i1: v[2], gamma_i2: v[3] }
    }
}

/// Which of the two indistinguishable g_c solutions to report.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CancellationBranch {
    /// |g_c| ≥ γ_e
    AtLeastUnity,
    /// |g_c| ≤ γ_e
    AtMostUnity,
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    pub starts: usize,
    pub seed: u64,
    pub branch: CancellationBranch,
    /// Fit |S21| only, as the dip-depth procedure does.
    pub magnitude_only: bool,
    /// Internal dampings (γ_i1, γ_i2) known from separate resonance fits.
    /// Without them g_c and γ_i1γ_i2 trade off along a line of identical traces.
    pub fixed_internal: Option<(f64, f64)>,
    pub nm: NmOptions,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { starts: 8, seed: 1, branch: CancellationBranch::AtLeastUnity, magnitude_only: false, fixed_internal: None, nm: NmOptions::default() }
    }
}

fn sum_sq(trace: &[TraceSample], magnitude_only: bool, model: impl Fn(f64) -> C64) -> f64 {
    trace
        .iter()
        .map(|s| {
            let m = model(s.detuning);
            if magnitude_only {
                (m.norm() - s.value.norm()).powi(2)
            } else {
                (m - s.value).norm_sqr()
            }
        })
        .sum()
}

/// Central second differences of `f` at `x` with relative step 1e-4.
fn curvature(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let f0 = f(x);
    (0..x.len())
        .map(|k| {
            let h = 1e-4 * x[k].abs().max(1e-12);
            let mut p = x.to_vec();
            p[k] += h;
            let fp = f(&p);
            p[k] -= 2.0 * h;
            let fm = f(&p);
            (fp - 2.0 * f0 + fm) / (h * h)
        })
        .collect()
}

fn best_converged(results: &[NmResult]) -> Result<&NmResult> {
    results
        .iter()
        .filter(|r| r.converged)
        .min_by(|a, b| a.f.total_cmp(&b.f))
        .ok_or_else(|| Error::Fit("no multistart run converged".into()))
}

/// Fits the pumps-off transmission with the nonideal cancellation model.
pub fn fit_s21_cancellation(trace: &[TraceSample], opts: &FitOptions) -> Result<FitResult<NonidealParams>> {
    if trace.len() < 8 {
        return Err(Error::Fit("trace too short".into()));
    }
    let span = trace.iter().fold(0.0f64, |m, s| m.max(s.detuning.abs()));
    // The trace must cover ±5γ_e, which bounds γ_e from above.
    let (ln_lo, ln_hi) = ((span / 500.0).ln(), (span / 4.0).ln());
    let (r_lo, r_hi) = match opts.branch {
        CancellationBranch::AtLeastUnity => (1.0, 3.0),
        CancellationBranch::AtMostUnity => (0.0, 1.0),
    };
    let q_hi = 2.0;
    if let Some((a, b)) = opts.fixed_internal {
        if !(a >= 0.0 && b >= 0.0) {
            return Err(Error::Domain("internal dampings must be non-negative".into()));
        }
    }
    let decode = |u: &[f64]| -> NonidealParams {
        let ge = (ln_lo + u[0] * (ln_hi - ln_lo)).exp();
        let ratio = r_lo + u[1] * (r_hi - r_lo);
        let (gi1, gi2) = opts.fixed_internal.unwrap_or_else(|| (u[2] * q_hi * ge, u[3] * q_hi * ge));
        NonidealParams { g_c: -ratio * ge, gamma_e: ge, gamma_i1: gi1, gamma_i2: gi2 }
    };
    let objective = |u: &[f64]| {
        let p = decode(u);
        sum_sq(trace, opts.magnitude_only, |d| p.s21(d))
    };
    let dims = if opts.fixed_internal.is_some() { 2 } else { 4 };
    let starts = latin_hypercube(opts.starts.max(5), dims, opts.seed);
    let results = multistart(&objective, &starts, &opts.nm);
    let best = best_converged(&results)?;

    let mut est = decode(&best.x);
    if opts.fixed_internal.is_none() && est.gamma_i1 > est.gamma_i2 {
        std::mem::swap(&mut est.gamma_i1, &mut est.gamma_i2);
    }
    let phys = |v: &[f64]| {
        let p = NonidealParams::from_vec(v);
        sum_sq(trace, opts.magnitude_only, |d| p.s21(d))
    };
    Ok(FitResult {
        estimate: est,
        residual_norm: best.f.sqrt(),
        curvature: curvature(phys, &est.as_vec()),
        starts: results.len(),
        converged_starts: results.iter().filter(|r| r.converged).count(),
    })
}

/// Residual of a trace against fixed parameters (for comparing fits across traces).
pub fn residual_norm(trace: &[TraceSample], p: &NonidealParams) -> f64 {
    sum_sq(trace, false, |d| p.s21(d)).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BusFit {
    pub g12: f64,
    pub g_b: f64,
}

/// Fits ratio(Δ) = |g12 + g_b²/Δ|/√(γ1γ2) by linear least squares in 1/Δ.
pub fn fit_cancellation_vs_detuning(points: &[(f64, f64)], gamma1: f64, gamma2: f64) -> Result<FitResult<BusFit>> {
    if points.len() < 3 {
        return Err(Error::Fit("need at least 3 detuning points".into()));
    }
    if points.iter().any(|p| p.0 == 0.0) {
        return Err(Error::Fit("detuning must be nonzero".into()));
    }
    if points.iter().all(|p| p.0 == points[0].0) {
        return Err(Error::Fit("degenerate design: all detunings equal".into()));
    }
    let k = (gamma1 * gamma2).sqrt();
    let xy: Vec<(f64, f64)> = points.iter().map(|&(d, r)| (1.0 / d, r * k)).collect();
    let line = ols(&xy)?;
    let (g12, gb2) = (line.intercept, line.slope);
    let estimate = BusFit { g12, g_b: gb2.signum() * gb2.abs().sqrt() };
    let rss: f64 = xy.iter().map(|&(x, y)| (y - g12 - gb2 * x).powi(2)).sum();
    let n = xy.len() as f64;
    let sxx: f64 = xy.iter().map(|p| p.0 * p.0).sum();
    Ok(FitResult {
        estimate,
        residual_norm: rss.sqrt() / k,
        curvature: vec![2.0 * n, 2.0 * sxx],
        starts: 1,
        converged_starts: 1,
    })
}

impl BusFit {
    pub fn coupling(&self, detuning: f64) -> f64 {
        self.g12 + self.g_b * self.g_b.abs() / detuning
    }

    pub fn ratio(&self, detuning: f64, gamma1: f64, gamma2: f64) -> f64 {
        self.coupling(detuning).abs() / (gamma1 * gamma2).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
}

impl LineFit {
    /// The line should pass through the origin: g vanishes with the pump.
    pub fn intercept_consistent_with_zero(&self) -> bool {
        self.intercept.abs() <= 3.0 * self.intercept_stderr + 1e-12 * self.slope.abs()
    }
}

fn ols(xy: &[(f64, f64)]) -> Result<LineFit> {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Fit("degenerate design: all abscissae equal".into()));
    }
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xy.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let s2 = if xy.len() > 2 { rss / (n - 2.0) } else { 0.0 };
    Ok(LineFit {
        slope,
        intercept,
        slope_stderr: (s2 / sxx).sqrt(),
        intercept_stderr: (s2 * (1.0 / n + mx * mx / sxx)).sqrt(),
    })
}

/// Ordinary least-squares line through (amplitude, g) points.
pub fn fit_pump_linearity(points: &[(f64, f64)]) -> Result<FitResult<LineFit>> {
    if points.len() < 2 {
        return Err(Error::Fit("need at least 2 points".into()));
    }
    let line = ols(points)?;
    let rss: f64 = points.iter().map(|p| (p.1 - line.intercept - line.slope * p.0).powi(2)).sum();
    let n = points.len() as f64;
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    Ok(FitResult { estimate: line, residual_norm: rss.sqrt(), curvature: vec![2.0 * sxx, 2.0 * n], starts: 1, converged_starts: 1 })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResonatorKind {
    /// One-port: S11 = 1 − κ_e/(κ/2 − i(δ−δ0))
    Reflection,
    /// Side-coupled: S21 = 1 − (κ_e/2)/(κ/2 − i(δ−δ0))
    Hanger,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceFit {
    pub delta0: f64,
    pub kappa_ext: f64,
    pub kappa_int: f64,
}

impl ResonanceFit {
    pub fn response(&self, kind: ResonatorKind, delta: f64) -> C64 {
        let den = C64::from(0.5 * (self.kappa_ext + self.kappa_int)) - I * (delta - self.delta0);
        match kind {
            ResonatorKind::Reflection => 1.0 - self.kappa_ext / den,
            ResonatorKind::Hanger => 1.0 - 0.5 * self.kappa_ext / den,
        }
    }
}

/// Complex Lorentzian fit of a single resonance.
pub fn fit_resonance(trace: &[TraceSample], kind: ResonatorKind, opts: &FitOptions) -> Result<FitResult<ResonanceFit>> {
    if trace.len() < 5 {
        return Err(Error::Fit("trace too short".into()));
    }
    let lo = trace.iter().map(|s| s.detuning).fold(f64::INFINITY, f64::min);
    let hi = trace.iter().map(|s| s.detuning).fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let (ln_lo, ln_hi) = ((span / 1e4).ln(), span.ln());
    let decode = |u: &[f64]| ResonanceFit {
        delta0: lo + u[0] * span,
        kappa_ext: (ln_lo + u[1] * (ln_hi - ln_lo)).exp(),
        // Internal loss may vanish, so it is bounded linearly.
        kappa_int: u[2] * span,
    };
    let objective = |u: &[f64]| {
        let p = decode(u);
        sum_sq(trace, opts.magnitude_only, |d| p.response(kind, d))
    };
    let starts = latin_hypercube(opts.starts.max(5), 3, opts.seed);
    let results = multistart(&objective, &starts, &opts.nm);
    let best = best_converged(&results)?;
    let est = decode(&best.x);
    let phys = |v: &[f64]| {
        let p = ResonanceFit { delta0: v[0], kappa_ext: v[1], kappa_int: v[2] };
        sum_sq(trace, opts.magnitude_only, |d| p.response(kind, d))
    };
    Ok(FitResult {
        estimate: est,
        residual_norm: best.f.sqrt(),
        curvature: curvature(phys, &[est.delta0, est.kappa_ext, est.kappa_int]),
        starts: results.len(),
        converged_starts: results.iter().filter(|r| r.converged).count(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freqdomain::symmetric_grid;

    #[test]
    fn noiseless_synth_is_exact() {
        let p = NonidealParams { g_c: -1.04, gamma_e: 1.0, gamma_i1: 0.3, gamma_i2: 0.4 };
        let grid = symmetric_grid(8.0, 201);
        let t = synth_trace(|d| p.s21(d), &grid, &SyntheticNoiseSpec::none()).unwrap();
        assert!(t.iter().all(|s| s.value == p.s21(s.detuning)));
        let n = SyntheticNoiseSpec { sigma: 0.01, seed: 9 };
        assert_eq!(synth_trace(|d| p.s21(d), &grid, &n).unwrap(), synth_trace(|d| p.s21(d), &grid, &n).unwrap());
    }

    #[test]
    fn cancellation_fit_roundtrip() {
        let p = NonidealParams { g_c: -1.04, gamma_e: 1.0, gamma_i1: 0.29, gamma_i2: 0.41 };
        let grid = symmetric_grid(8.0, 201);
        let t = synth_trace(|d| p.s21(d), &grid, &SyntheticNoiseSpec::none()).unwrap();
        let free = fit_s21_cancellation(&t, &FitOptions::default()).unwrap().estimate;
        for (a, b) in free.identifiable().iter().zip(p.identifiable()) {
            assert!((a - b).abs() <= 1e-6 * b.abs(), "{free:?}");
        }
        let opts = FitOptions { fixed_internal: Some((0.29, 0.41)), ..FitOptions::default() };
        let e = fit_s21_cancellation(&t, &opts).unwrap().estimate;
        for (a, b) in e.as_vec().iter().zip(p.as_vec()) {
            assert!((a - b).abs() <= 1e-6 * b.abs(), "{e:?}");
        }
    }

    #[test]
    fn product_and_gc_trade_off() {
        let p = NonidealParams { g_c: -1.04, gamma_e: 1.0, gamma_i1: 0.29, gamma_i2: 0.41 };
        // Same sum, product lowered by 0.01, g_c moved to keep 4(g_c+γ_e)² + γ_i1γ_i2 fixed.
        let (s, prod): (f64, f64) = (0.70, 0.29 * 0.41 - 0.01);
        let disc = (s * s - 4.0 * prod).sqrt();
        let q = (p.identifiable()[2] - prod) / 4.0;
        let other = NonidealParams { g_c: -1.0 - q.sqrt(), gamma_e: 1.0, gamma_i1: 0.5 * (s - disc), gamma_i2: 0.5 * (s + disc) };
        for d in [-3.0, -0.4, 0.0, 0.7, 2.5] {
            assert!((p.s21(d) - other.s21(d)).norm() < 1e-14);
        }
    }

    #[test]
    fn bus_fit_roundtrip() {
        let truth = BusFit { g12: 0.10, g_b: 30.0 };
        let pts: Vec<(f64, f64)> = [1000.0, 1200.0, 1395.0, 1600.0, 1800.0]
            .iter()
            .map(|&d| (d, truth.ratio(d, 0.73, 0.715)))
            .collect();
        let f = fit_cancellation_vs_detuning(&pts, 0.73, 0.715).unwrap().estimate;
        assert!((f.g12 - 0.10).abs() < 1e-12 && (f.g_b - 30.0).abs() < 1e-10);
        assert!(fit_cancellation_vs_detuning(&[(1.0, 1.0); 3], 1.0, 1.0).is_err());
    }

    #[test]
    fn resonance_fit_roundtrip() {
        let truth = ResonanceFit { delta0: 0.3, kappa_ext: 1.2, kappa_int: 0.2 };
        let grid = symmetric_grid(10.0, 301);
        for kind in [ResonatorKind::Reflection, ResonatorKind::Hanger] {
            let t = synth_trace(|d| truth.response(kind, d), &grid, &SyntheticNoiseSpec::none()).unwrap();
            let f = fit_resonance(&t, kind, &FitOptions::default()).unwrap().estimate;
            assert!((f.delta0 - 0.3).abs() < 1e-7 && (f.kappa_ext - 1.2).abs() < 1e-7 && (f.kappa_int - 0.2).abs() < 1e-7, "{f:?}");
        }
    }

    #[test]
    fn pump_line() {
        let pts: Vec<(f64, f64)> = (0..6).map(|k| (k as f64, 0.35 * k as f64)).collect();
        let f = fit_pump_linearity(&pts).unwrap().estimate;
        assert!((f.slope - 0.35).abs() < 1e-14 && f.intercept.abs() < 1e-14);
        assert!(f.intercept_consistent_with_zero());
        assert!(fit_pump_linearity(&pts[..1]).is_err());
    }
}
