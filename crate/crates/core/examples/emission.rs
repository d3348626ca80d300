//! Directional single-photon emission from b into a sech wavepacket.
//!
//! cargo run --example emission [out.csv]

use chiralsim::model::{Direction, WavepacketSpec};
use chiralsim::timedomain::{emit_standard, write_csv};
use chiralsim::units::mhz;
use chiralsim::CouplerParams;

fn main() -> chiralsim::Result<()> {
    let cases = [
        ("lossless", CouplerParams::symmetric_lossless(mhz(1.0), 0.0)),
        ("device, ideal b", CouplerParams::measured_device().with_b(0.0, 0.0)),
        // b keeps its own port here, so most of the photon leaves through it.
        ("device, b port", CouplerParams::measured_device()),
    ];
    for (label, p) in &cases {
        for dir in [Direction::Right, Direction::Left] {
            let spec = WavepacketSpec { gamma_ph: 0.5 * p.mean_gamma(), direction: dir };
            let m = emit_standard(p, &spec)?.metrics;
            println!(
                "{label:>16} {dir:?}: right {:.4}  left {:.4}  total {:.4}  efficiency {:.4}",
                m.right_fraction, m.left_fraction, m.total_photons, m.efficiency
            );
        }
    }

    if let Some(path) = std::env::args().nth(1) {
        let run = emit_standard(&cases[1].1, &WavepacketSpec::right(0.5 * cases[1].1.mean_gamma()))?;
        write_csv(&run.field, &run.flux, std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
