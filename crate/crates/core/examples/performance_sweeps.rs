//! Built-in parameter sweeps written as CSV plus a JSON provenance record.
//!
//! cargo run --release --example performance_sweeps [out_dir]

use std::fs::File;
use std::path::PathBuf;

use chiralsim::sweeps::{run_sweep, SweepSpec};

fn main() -> chiralsim::Result<()> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "sweeps_out".into()));
    std::fs::create_dir_all(&out)?;
    let specs = [
        SweepSpec::isolation_vs_damping(vec![0.0, 0.01, 0.02, 0.05, 0.1, 0.2, 0.3]),
        SweepSpec::isolation_vs_alpha(vec![0.1, 0.15, 0.2, 0.25, 0.29]),
        SweepSpec::emission_efficiency_map(vec![0.73, 1.5, 2.5, 3.5], vec![0.1, 0.2, 0.29]),
        SweepSpec::pump_leakage(vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]),
        SweepSpec::residual_coupling(vec![0.5, 0.8, 1.0, 1.2, 1.5]),
    ];
    for spec in &specs {
        let r = run_sweep(spec)?;
        r.write_csv(File::create(out.join(format!("{}.csv", spec.name)))?)?;
        r.write_metadata(File::create(out.join(format!("{}.json", spec.name)))?)?;
        println!("{:<28} {} rows, {} failed, hash {}", spec.name, r.rows.len(), r.failures().count(), &r.provenance.config_hash[..12]);
    }
    let r = run_sweep(&specs[0])?;
    println!("\nisolation (matched g) vs γi/γ: {:?}", r.metric("isolation_match_db")?.iter().map(|v| (v * 10.0).round() / 10.0).collect::<Vec<_>>());
    Ok(())
}
