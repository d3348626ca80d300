//! SNAIL Taylor coefficients, Kerr-free bias and flux-noise scaling of damping.
//!
//! cargo run --example snail_design

use chiralsim::snail::{damping_scale, expansion_coefficients, kerr_free_flux, FluxNoiseModel, SnailParams};
use chiralsim::units::to_ghz;

fn main() -> chiralsim::Result<()> {
    let (e_j, e_c) = (chiralsim::units::ghz(54.5), chiralsim::units::mhz(100.0));
    let noise = FluxNoiseModel::device(1.0);
    println!("   α   φ_ext*      c2       c3        c4     ω_S/2π (GHz)  γi(α)/γi(0.29)");
    for alpha in [0.1, 0.15, 0.2, 0.25, 0.29] {
        let fe = kerr_free_flux(alpha, e_j, e_c)?;
        let e = expansion_coefficients(&SnailParams { e_c, e_j, alpha, phi_ext: fe })?;
        println!(
            "{alpha:>5.2} {fe:>8.4} {:>8.4} {:>8.4} {:>9.2e} {:>12.3} {:>14.4}",
            e.c2,
            e.c3,
            e.c4,
            to_ghz(e.omega_s),
            damping_scale(alpha, &noise)?
        );
    }
    Ok(())
}
