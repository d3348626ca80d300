//! Wigner function of the received state after a lossy transfer.
//!
//! cargo run --release --example wigner_maps [out.csv]

use chiralsim::freqdomain::symmetric_grid;
use chiralsim::lindblad::{transfer_experiment, wigner, StateSpec, TransferOptions};
use chiralsim::model::{NetworkLayout, WavepacketSpec};
use chiralsim::units::mhz;
use chiralsim::CouplerParams;

fn main() -> chiralsim::Result<()> {
    let gamma = mhz(1.0);
    let c = CouplerParams::symmetric_lossless(gamma, 0.0).with_a_internal(0.05 * gamma, 0.05 * gamma);
    let layout = NetworkLayout::chain(vec![c, c], 1.0);
    let r = transfer_experiment(&StateSpec::Fock(1), &WavepacketSpec::right(0.1 * gamma), &layout, &TransferOptions::default())?;

    let axis = symmetric_grid(3.0, 41);
    let map = wigner(&r.received.rho, &axis, &axis);
    let w0 = map.w[20][20];
    // A perfect |1⟩ has W(0) = −1/π; loss mixes in |0⟩ and pulls it up.
    println!("F = {:.4}, W(0,0) = {w0:.4} (ideal {:.4}), ∫W = {:.4}", r.fidelity, -1.0 / std::f64::consts::PI, map.integral());
    for (i, row) in map.w.iter().enumerate().step_by(4) {
        let line: String = row.iter().step_by(2).map(|&v| if v < -0.05 { '-' } else if v > 0.05 { '+' } else { '.' }).collect();
        println!("{:>5.2} {line}", axis[i]);
    }
    if let Some(path) = std::env::args().nth(1) {
        map.write_csv(std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
