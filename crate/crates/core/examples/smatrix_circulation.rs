//! Ideal chiral coupler: circulation at resonance and the all-pass line.
//!
//! cargo run --example smatrix_circulation

use chiralsim::freqdomain::{loss_db, s21_lossless_cancelled, s_matrix_closed_form, s_matrix_numeric, symmetric_grid};
use chiralsim::units::{mhz, to_mhz};
use chiralsim::{CouplerParams, PumpSettings};

fn main() -> chiralsim::Result<()> {
    let gamma = mhz(1.0);
    let p = CouplerParams::symmetric_lossless(gamma, gamma);
    let g = 0.5 * gamma; // matched: g = √(γγ_b)/2

    for (label, pumps) in [("isolate", PumpSettings::isolate(g, &p)), ("pass", PumpSettings::pass(g, &p))] {
        let s = s_matrix_closed_form(gamma, g, 0.0, pumps.phi1, pumps.phi2)?;
        println!("{label:>8}: |S21| = {:.3e}  |S31| = {:.6}  |S13| = {:.6}", s.s(2, 1).norm(), s.s(3, 1).norm(), s.s(1, 3).norm());
    }

    println!("\n δ/2π (MHz)   |S21| off   arg S21 off   isolate (dB)   defect");
    let (off, iso) = (PumpSettings::off(&p), PumpSettings::isolate(g, &p));
    for d in symmetric_grid(5.0 * gamma, 11) {
        let s_off = s_matrix_numeric(&p, &off, d)?;
        let s_iso = s_matrix_numeric(&p, &iso, d)?;
        assert!((s_off.s(2, 1) - s21_lossless_cancelled(d, gamma)).norm() < 1e-12);
        println!(
            "{:>11.2} {:>11.6} {:>13.4} {:>14.2} {:>8.1e}",
            to_mhz(d),
            s_off.s(2, 1).norm(),
            s_off.s(2, 1).arg(),
            loss_db(s_iso.s(2, 1)),
            s_iso.unitarity_defect()
        );
    }
    Ok(())
}
