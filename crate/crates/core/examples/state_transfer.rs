//! Two couplers on one line: send a qubit state from b1 and catch it in b2.
//!
//! cargo run --release --example state_transfer

use chiralsim::lindblad::{transfer_experiment, StateSpec, TransferOptions};
use chiralsim::model::{NetworkLayout, WavepacketSpec};
use chiralsim::units::mhz;
use chiralsim::CouplerParams;

fn main() -> chiralsim::Result<()> {
    let gamma = mhz(1.0);
    let opts = TransferOptions::default();
    for (label, c) in [
        ("lossless", CouplerParams::symmetric_lossless(gamma, 0.0)),
        ("γi = 0.05γ", CouplerParams::symmetric_lossless(gamma, 0.0).with_a_internal(0.05 * gamma, 0.05 * gamma)),
        ("ratio 0.8", CouplerParams::symmetric_lossless(gamma, 0.0).with_ratio(0.8)),
    ] {
        let layout = NetworkLayout::chain(vec![c, c], 1.0);
        for state in [StateSpec::Plus, StateSpec::Fock(1)] {
            let r = transfer_experiment(&state, &WavepacketSpec::right(0.1 * gamma), &layout, &opts)?;
            println!(
                "{label:>11} {state:?}: F = {:.5} (phase-corrected {:.5})  purity {:.5}  left behind {:.1e}  drift {:.1e}",
                r.fidelity, r.fidelity_corrected, r.purity, r.residual_source_population, r.max_trace_drift
            );
        }
    }
    Ok(())
}
