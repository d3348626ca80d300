//! Isolator figures of merit for the measured device parameters.
//!
//! cargo run --example isolation_device

use chiralsim::freqdomain::{isolation_metrics, optimize_g, symmetric_grid};
use chiralsim::model::validate_params;
use chiralsim::sweeps::matched_g;
use chiralsim::units::{mhz, to_mhz};
use chiralsim::{CouplerParams, PumpSettings};

fn main() -> chiralsim::Result<()> {
    let p = CouplerParams::measured_device();
    let grid = symmetric_grid(10.0 * p.mean_gamma(), 2001);

    let report = validate_params(&p, &PumpSettings::isolate(mhz(0.7), &p));
    for c in report.failures() {
        println!("warning: {} ({})", c.name, c.detail);
    }

    let (g_opt, _) = optimize_g(&p, &PumpSettings::isolate(mhz(0.7), &p), 0.1 * p.mean_gamma(), 3.0 * p.mean_gamma())?;
    for (label, g) in [("measured", mhz(0.7)), ("matched", matched_g(&p)), ("optimised", g_opt)] {
        let m = isolation_metrics(&p, &PumpSettings::isolate(g, &p), &grid)?;
        println!(
            "{label:>10}: g/2π = {:.3} MHz  insertion loss {:.2} dB  isolation {:.2} dB  20 dB bandwidth {:.3} MHz",
            to_mhz(g),
            m.insertion_loss_db,
            m.isolation_db,
            to_mhz(m.isolation_bandwidth)
        );
    }

    // Leakage of each pump onto the other a-mode.
    for eps in [0.0, 0.1, 0.3] {
        let pumps = PumpSettings::isolate(mhz(0.7), &p).with_leakage(eps);
        let m = isolation_metrics(&p, &pumps, &grid)?;
        println!("ε = {eps:.1}: isolation {:.2} dB", m.isolation_db);
    }
    Ok(())
}
