use std::io::Write;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::linear::C64;

/// Wigner function sampled on an (x, p) grid; `w[i][j]` is at (x[i], p[j]).
#[derive(Clone, Debug, PartialEq)]
pub struct WignerMap {
    pub x: Vec<f64>,
    pub p: Vec<f64>,
    pub w: Vec<Vec<f64>>,
}

/// Generalised Laguerre polynomial L_n^{(k)}(x) by the three-term recurrence.
fn laguerre(n: usize, k: f64, x: f64) -> f64 {
    if n == 0 {
        return 1.0;
    }
    let (mut l0, mut l1) = (1.0, 1.0 + k - x);
    for m in 1..n {
        let m = m as f64;
        let l2 = ((2.0 * m + 1.0 + k - x) * l1 - (m + k) * l0) / (m + 1.0);
        l0 = l1;
        l1 = l2;
    }
    l1
}

fn ln_factorial(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// ⟨m|D(α)|n⟩ in closed form.
pub fn displacement_element(m: usize, n: usize, alpha: C64) -> C64 {
    let x = alpha.norm_sqr();
    let gauss = (-0.5 * x).exp();
    if m >= n {
        let pre = (0.5 * (ln_factorial(n) - ln_factorial(m))).exp();
        alpha.powu((m - n) as u32) * (pre * gauss * laguerre(n, (m - n) as f64, x))
    } else {
        let pre = (0.5 * (ln_factorial(m) - ln_factorial(n))).exp();
        (-alpha.conj()).powu((n - m) as u32) * (pre * gauss * laguerre(m, (n - m) as f64, x))
    }
}

fn raw(rho: &DMatrix<C64>, x: f64, p: f64) -> C64 {
    let beta2 = C64::new(x, p) * std::f64::consts::SQRT_2;
    let mut acc = C64::from(0.0);
    for n in 0..rho.nrows() {
        let parity = if n % 2 == 0 { 1.0 } else { -1.0 };
        for m in 0..rho.nrows() {
            acc += rho[(n, m)] * parity * displacement_element(m, n, beta2);
        }
    }
    acc / std::f64::consts::PI
}

/// W(x, p) = (1/π) Tr[ρ D(2β) Π], β = (x + ip)/√2, normalised to ∫∫W dx dp = 1.
pub fn wigner(rho: &DMatrix<C64>, x: &[f64], p: &[f64]) -> WignerMap {
    let w = x.iter().map(|&xi| p.iter().map(|&pj| raw(rho, xi, pj).re).collect()).collect();
    WignerMap { x: x.to_vec(), p: p.to_vec(), w }
}

/// Largest imaginary part of the unsymmetrised sum; zero for Hermitian ρ.
pub fn wigner_imag_max(rho: &DMatrix<C64>, x: &[f64], p: &[f64]) -> f64 {
    x.iter().flat_map(|&xi| p.iter().map(move |&pj| raw(rho, xi, pj).im.abs())).fold(0.0, f64::max)
}

impl WignerMap {
    /// Riemann sum over the grid (assumes uniform spacing).
    pub fn integral(&self) -> f64 {
        let dx = self.x[1] - self.x[0];
        let dp = self.p[1] - self.p[0];
        self.w.iter().flatten().sum::<f64>() * dx * dp
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        wr.write_record(["x", "p", "w"])?;
        for (i, xi) in self.x.iter().enumerate() {
            for (j, pj) in self.p.iter().enumerate() {
                wr.write_record([format!("{xi:.16e}"), format!("{pj:.16e}"), format!("{:.16e}", self.w[i][j])])?;
            }
        }
        wr.flush()?;
        Ok(())
    }
}
