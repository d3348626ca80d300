//! Catching an incoming sech photon in b with the time-reversed pump.
//!
//! cargo run --example absorption

use chiralsim::model::WavepacketSpec;
use chiralsim::timedomain::absorb;
use chiralsim::units::mhz;
use chiralsim::CouplerParams;

fn main() -> chiralsim::Result<()> {
    let p = CouplerParams::symmetric_lossless(mhz(1.0), 0.0);
    println!(" γ_ph/γ   caught in b");
    for r in [0.1, 0.25, 0.5, 1.0] {
        let run = absorb(&p, &WavepacketSpec::right(r * p.mean_gamma()), 50.0)?;
        println!("{r:>7.2} {:>13.5}", run.final_b_population);
    }
    let dev = CouplerParams::measured_device().with_b(0.0, 0.0);
    let run = absorb(&dev, &WavepacketSpec::right(0.5 * dev.mean_gamma()), 50.0)?;
    println!("device (ideal b): {:.5}", run.final_b_population);
    Ok(())
}
