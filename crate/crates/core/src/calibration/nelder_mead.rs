//! Bounded Nelder–Mead on the unit box with Latin-hypercube multistart.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct NmOptions {
    /// Stop when every vertex is within this distance of the best (unit-box coordinates).
    pub simplex_tol: f64,
    pub max_evals: usize,
    /// Restart from the best vertex until a restart no longer improves the minimum.
    pub max_restarts: usize,
    pub initial_step: f64,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self { simplex_tol: 1e-9, max_evals: 20_000, max_restarts: 4, initial_step: 0.05 }
    }
}

#[derive(Clone, Debug)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub converged: bool,
    /// Best objective after each iteration.
    pub history: Vec<f64>,
}

fn clamp01(x: &mut [f64]) {
    for v in x {
        *v = v.clamp(0.0, 1.0);
    }
}

/// Minimises `f` over the unit box starting at `x0`.
pub fn minimize_unit_box(f: &impl Fn(&[f64]) -> f64, x0: &[f64], opts: &NmOptions) -> NmResult {
    let mut best = NmResult { x: x0.to_vec(), f: f(x0), evals: 1, converged: false, history: Vec::new() };
    for _ in 0..=opts.max_restarts {
        let before = best.f;
        let run = simplex(f, &best.x, opts, opts.max_evals.saturating_sub(best.evals));
        best.evals += run.evals;
        best.history.extend(run.history.iter().map(|&v| v.min(before)));
        let improved = run.f < before;
        if run.f <= best.f {
            best.x = run.x;
            best.f = run.f;
        }
        best.converged = run.converged;
        if !improved || !run.converged {
            break;
        }
    }
    best
}

fn simplex(f: &impl Fn(&[f64]) -> f64, x0: &[f64], opts: &NmOptions, budget: usize) -> NmResult {
    let n = x0.len();
    let mut pts: Vec<Vec<f64>> = vec![x0.to_vec()];
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += if p[i] + opts.initial_step <= 1.0 { opts.initial_step } else { -opts.initial_step };
        pts.push(p);
    }
    let mut vals: Vec<f64> = pts.iter().map(|p| f(p)).collect();
    let mut evals = n + 1;
    let mut history = Vec::new();
    let mut converged = false;
    let eval = |p: &mut Vec<f64>, evals: &mut usize| {
        clamp01(p);
        *evals += 1;
        f(p)
    };
    while evals < budget {
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        history.push(vals[0]);

        let size = pts[1..]
            .iter()
            .flat_map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if size < opts.simplex_tol {
            converged = true;
            break;
        }

        let centroid: Vec<f64> = (0..n).map(|j| pts[..n].iter().map(|p| p[j]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { (0..n).map(|j| centroid[j] + t * (pts[n][j] - centroid[j])).collect() };

        let mut xr = along(-1.0);
        let fr = eval(&mut xr, &mut evals);
        if fr < vals[0] {
            let mut xe = along(-2.0);
            let fe = eval(&mut xe, &mut evals);
            if fe < fr {
                pts[n] = xe;
                vals[n] = fe;
            } else {
                pts[n] = xr;
                vals[n] = fr;
            }
        } else if fr < vals[n - 1] {
            pts[n] = xr;
            vals[n] = fr;
        } else {
            let (mut xc, outside) = if fr < vals[n] { (along(-0.5), true) } else { (along(0.5), false) };
            let fc = eval(&mut xc, &mut evals);
            if (outside && fc <= fr) || (!outside && fc < vals[n]) {
                pts[n] = xc;
                vals[n] = fc;
            } else {
                for i in 1..=n {
                    let mut p: Vec<f64> = (0..n).map(|j| pts[0][j] + 0.5 * (pts[i][j] - pts[0][j])).collect();
                    vals[i] = eval(&mut p, &mut evals);
                    pts[i] = p;
                }
            }
        }
    }
    let (ib, fb) = vals.iter().enumerate().fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    history.push(fb);
    NmResult { x: pts[ib].clone(), f: fb, evals, converged, history }
}

/// Latin-hypercube sample of `k` points in the d-dimensional unit box.
pub fn latin_hypercube(k: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pts = vec![vec![0.0; d]; k];
    for j in 0..d {
        let mut strata: Vec<usize> = (0..k).collect();
        strata.shuffle(&mut rng);
        for (i, s) in strata.into_iter().enumerate() {
            pts[i][j] = (s as f64 + rng.random::<f64>()) / k as f64;
        }
    }
    pts
}

/// Runs every start (in parallel) and returns all results in start order.
pub fn multistart(f: &(impl Fn(&[f64]) -> f64 + Sync), starts: &[Vec<f64>], opts: &NmOptions) -> Vec<NmResult> {
    starts.par_iter().map(|x0| minimize_unit_box(f, x0, opts)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_rosenbrock_minimum() {
        // Rosenbrock mapped so the minimum (1, 1) sits at (0.6, 0.6) in the box.
        let f = |u: &[f64]| {
            let (x, y) = (5.0 * u[0] - 2.0, 5.0 * u[1] - 2.0);
            (1.0 - x).powi(2) + 100.0 * (y - x * x).powi(2)
        };
        let r = minimize_unit_box(&f, &[0.1, 0.9], &NmOptions::default());
        assert!(r.converged);
        assert!((r.x[0] - 0.6).abs() < 1e-7 && (r.x[1] - 0.6).abs() < 1e-7, "{:?}", r.x);
        assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn respects_bounds() {
        let f = |u: &[f64]| (u[0] + 1.0).powi(2) + (u[1] - 0.3).powi(2);
        let r = minimize_unit_box(&f, &[0.5, 0.5], &NmOptions::default());
        assert!(r.x[0] >= 0.0 && r.x[0] < 1e-8);
        assert!((r.x[1] - 0.3).abs() < 1e-7);
    }

    #[test]
    fn lhs_strata() {
        let pts = latin_hypercube(10, 3, 7);
        for j in 0..3 {
            let mut s: Vec<usize> = pts.iter().map(|p| (p[j] * 10.0) as usize).collect();
            s.sort();
            assert_eq!(s, (0..10).collect::<Vec<_>>());
        }
        assert_eq!(pts, latin_hypercube(10, 3, 7));
    }
}
