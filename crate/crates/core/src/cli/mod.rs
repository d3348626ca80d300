//! Command-line front end: one output directory per run with a manifest, data
//! files and optional SVG plots.

pub mod plot;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::calibration::{fit_s21_cancellation, read_trace_csv, synth_trace, FitOptions, NonidealParams, SyntheticNoiseSpec};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::freqdomain::{isolation_metrics, loss_db, optimize_g, pass_and_isolate, s_trace, symmetric_grid};
use crate::lindblad::{transfer_experiment, wigner, StateSpec, TransferOptions, TransferResult};
use crate::model::units::to_mhz;
use crate::model::{validate_params, CouplerParams, Direction, NetworkLayout, PumpSettings, WavepacketSpec};
use crate::snail::{c2_slope_at_kerr_free, expansion_coefficients, flux_table, kerr_free_flux};
use crate::sweeps::{self, SweepSpec};
use crate::timedomain::{absorb, emit_standard, FieldRecord, FluxRecord};
use plot::{render_plot, PlotKind, Table};

#[derive(Debug, Parser)]
#[command(name = "chiralsim", version, about = "Chiral coupler simulator")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct Common {
    /// TOML device configuration (defaults to the measured device).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Also write SVG plots.
    #[arg(long, global = true)]
    pub plot: bool,
    /// Optimise g for isolation before computing traces and metrics.
    #[arg(long, global = true)]
    pub optimize_g: bool,
    #[arg(long, global = true, default_value_t = 3)]
    pub fock_dim: usize,
    /// Offset added to dB values in power-comparison plots.
    #[arg(long, global = true, default_value_t = 0.0, allow_hyphen_values = true)]
    pub db_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
pub enum Command {
    /// Full 3×3 S-matrix trace with the configured pumps.
    Smatrix,
    /// S21 traces in the passing and isolating settings, with metrics.
    Isolate,
    /// Emit the photon stored in b as a sech wavepacket.
    Emit {
        #[arg(long)]
        left: bool,
        /// Remove the b-mode port and internal loss.
        #[arg(long)]
        ideal_b: bool,
    },
    /// Catch a sech wavepacket arriving from the left.
    Absorb {
        #[arg(long)]
        ideal_b: bool,
    },
    /// Pitch-and-catch transfer between two identical couplers.
    Transfer {
        /// plus | fock:N | coherent:RE,IM | cat:ALPHA[,odd]
        #[arg(long, default_value = "plus")]
        state: String,
        /// γ_ph as a multiple of γ (defaults to the config value).
        #[arg(long)]
        gamma_ph_ratio: Option<f64>,
        #[arg(long)]
        ideal_b: bool,
        #[arg(long)]
        allow_cat: bool,
    },
    /// SNAIL expansion over external flux and the Kerr-free point.
    Snail {
        #[arg(long, default_value_t = 401)]
        points: usize,
    },
    /// Fit the pumps-off S21 with the nonideal cancellation model.
    Fit {
        /// CSV with freq_mhz, re, im; synthesised from the config when absent.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Trace centre frequency (defaults to the a1 frequency).
        #[arg(long)]
        center_mhz: Option<f64>,
        /// Quadrature noise for synthesised traces.
        #[arg(long, default_value_t = 0.01)]
        noise: f64,
        #[arg(long)]
        magnitude_only: bool,
        /// Hold γ_i1, γ_i2 at the config values.
        #[arg(long)]
        fixed_internal: bool,
    },
    /// Parameter sweep.
    Sweep {
        #[arg(value_enum)]
        kind: SweepKind,
        /// Axis values (single-axis sweeps), comma separated.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Option<Vec<f64>>,
        /// Also run the master equation where supported.
        #[arg(long)]
        lindblad: bool,
    },
    /// Wigner maps of the sent and received states of a transfer.
    Wigner {
        #[arg(long, default_value = "plus")]
        state: String,
        #[arg(long, default_value_t = 61)]
        grid: usize,
        #[arg(long, default_value_t = 3.5)]
        extent: f64,
        #[arg(long)]
        gamma_ph_ratio: Option<f64>,
        #[arg(long)]
        ideal_b: bool,
        #[arg(long)]
        allow_cat: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
pub enum SweepKind {
    IsolationVsDamping,
    IsolationVsAlpha,
    EmissionMap,
    PumpLeakage,
    ResidualCoupling,
    TransferFidelity,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Smatrix => "smatrix",
            Command::Isolate => "isolate",
            Command::Emit { .. } => "emit",
            Command::Absorb { .. } => "absorb",
            Command::Transfer { .. } => "transfer",
            Command::Snail { .. } => "snail",
            Command::Fit { .. } => "fit",
            Command::Sweep { .. } => "sweep",
            Command::Wigner { .. } => "wigner",
        }
    }
}

/// Written to `manifest.json` before any computation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub arguments: serde_json::Value,
    pub config: Config,
    pub out_dir: PathBuf,
    pub seed: u64,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub version: String,
}

pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const INVALID: i32 = 4;
    pub const NUMERICAL: i32 = 5;
    pub const FIT: i32 = 6;
    pub const IO: i32 = 7;
}

/// Exit code for each error category.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) => exit::CONFIG,
        Error::Domain(_) | Error::Grid(_) | Error::FockTooLarge { .. } | Error::NoKerrFreePoint(_) => exit::INVALID,
        Error::Singular { .. }
        | Error::NotConverged { .. }
        | Error::IntegrationQuality { .. }
        | Error::NotCompletelyPositive(_)
        | Error::NoBracket => exit::NUMERICAL,
        Error::Fit(_) => exit::FIT,
        Error::Plot(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_) => exit::IO,
    }
}

/// Parses `argv` (including the program name), runs, and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => exit::OK,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.code());
            exit_code(&e)
        }
    }
}

fn load_config(common: &Common) -> Result<Config> {
    let env = Config::process_env();
    match &common.config {
        Some(p) if !p.exists() => Err(Error::Config(format!("config file {} not found", p.display()))),
        Some(p) => Config::load(p, &env),
        None => Config::from_toml_str("", &env),
    }
}

pub fn execute(cli: &Cli) -> Result<()> {
    let c = &cli.common;
    let config = load_config(c)?;
    fs::create_dir_all(&c.out)?;
    let manifest = RunManifest {
        subcommand: cli.command.name().into(),
        arguments: serde_json::to_value(&cli.command)?,
        config: config.clone(),
        out_dir: c.out.clone(),
        seed: c.seed,
        timestamp: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
        version: env!("CARGO_PKG_VERSION").into(),
    };
    fs::write(c.out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    let out = Output { dir: &c.out, format: c.format, plot: c.plot, db_offset: c.db_offset };

    match &cli.command {
        Command::Smatrix => cmd_smatrix(&config, c, &out),
        Command::Isolate => cmd_isolate(&config, c, &out),
        Command::Emit { left, ideal_b } => cmd_emit(&config, *left, *ideal_b, &out),
        Command::Absorb { ideal_b } => cmd_absorb(&config, *ideal_b, &out),
        Command::Transfer { state, gamma_ph_ratio, ideal_b, allow_cat } => {
            let r = run_transfer(&config, c, state, *gamma_ph_ratio, *ideal_b, *allow_cat)?;
            let mut t = Table::new("received_populations", &["n", "p_sent", "p_received"]);
            for n in 0..r.received.dim() {
                t.push(vec![n as f64, r.sent.rho[(n, n)].re, r.received.rho[(n, n)].re]);
            }
            out.table(&t, None)?;
            out.summary(
                "transfer",
                &json!({
                    "fidelity": r.fidelity,
                    "fidelity_corrected": r.fidelity_corrected,
                    "purity": r.purity,
                    "residual_source_population": r.residual_source_population,
                    "transfer_amplitude": [r.transfer_amplitude.re, r.transfer_amplitude.im],
                    "max_trace_drift": r.max_trace_drift,
                    "min_eigenvalue": r.min_eigenvalue,
                    "truncation_flagged": r.truncation_flagged,
                }),
            )
        }
        Command::Snail { points } => cmd_snail(&config, *points, &out),
        Command::Fit { trace, center_mhz, noise, magnitude_only, fixed_internal } => {
            cmd_fit(&config, c, trace.as_deref(), *center_mhz, *noise, *magnitude_only, *fixed_internal, &out)
        }
        Command::Sweep { kind, values, lindblad } => cmd_sweep(&config, c, *kind, values.clone(), *lindblad, &out),
        Command::Wigner { state, grid, extent, gamma_ph_ratio, ideal_b, allow_cat } => {
            if *grid < 2 || !(*extent > 0.0) {
                return Err(Error::Domain("wigner grid needs ≥ 2 points and a positive extent".into()));
            }
            let r = run_transfer(&config, c, state, *gamma_ph_ratio, *ideal_b, *allow_cat)?;
            let axis: Vec<f64> = (0..*grid).map(|k| -extent + 2.0 * extent * k as f64 / (*grid - 1) as f64).collect();
            for (name, rho) in [("wigner_sent", &r.sent.rho), ("wigner_received", &r.received.rho)] {
                let m = wigner(rho, &axis, &axis);
                let mut t = Table::new(name, &["x", "p", "w"]);
                for (i, x) in m.x.iter().enumerate() {
                    for (j, p) in m.p.iter().enumerate() {
                        t.push(vec![*x, *p, m.w[i][j]]);
                    }
                }
                out.table(&t, Some(PlotKind::Heatmap))?;
            }
            out.summary("wigner", &json!({ "fidelity_corrected": r.fidelity_corrected, "purity": r.purity }))
        }
    }
}

struct Output<'a> {
    dir: &'a Path,
    format: Format,
    plot: bool,
    db_offset: f64,
}

impl Output<'_> {
    fn table(&self, t: &Table, plot: Option<PlotKind>) -> Result<()> {
        self.table_with_offset(t, plot, 0.0)
    }

    fn table_with_offset(&self, t: &Table, plot: Option<PlotKind>, y_offset: f64) -> Result<()> {
        match self.format {
            Format::Csv => t.write_csv(fs::File::create(self.dir.join(format!("{}.csv", t.name)))?)?,
            Format::Json => t.write_json(fs::File::create(self.dir.join(format!("{}.json", t.name)))?)?,
        }
        if let (true, Some(kind)) = (self.plot, plot) {
            for (name, svg) in render_plot(t, kind, y_offset)? {
                fs::write(self.dir.join(name), svg)?;
            }
        }
        Ok(())
    }

    fn summary(&self, name: &str, v: &serde_json::Value) -> Result<()> {
        println!("{}", serde_json::to_string_pretty(v)?);
        fs::write(self.dir.join(format!("{name}_summary.json")), serde_json::to_string_pretty(v)?)?;
        Ok(())
    }
}

fn detuning_grid(config: &Config, p: &CouplerParams) -> Result<Vec<f64>> {
    let n = config.sim.points;
    if n < 3 || n % 2 == 0 {
        return Err(Error::Domain(format!("sim.points must be odd and ≥ 3 (got {n})")));
    }
    Ok(symmetric_grid(config.sim.span_gamma * p.mean_gamma(), n))
}

fn checked(config: &Config) -> Result<(CouplerParams, PumpSettings)> {
    let p = config.coupler_params();
    let pumps = config.pump_settings();
    let report = validate_params(&p, &pumps);
    if !report.is_ok() {
        let msg: Vec<String> = report.failures().map(|c| format!("{}: {}", c.name, c.detail)).collect();
        return Err(Error::Domain(msg.join("; ")));
    }
    Ok((p, pumps))
}

fn with_optimal_g(p: &CouplerParams, pumps: PumpSettings, common: &Common) -> Result<PumpSettings> {
    if !common.optimize_g {
        return Ok(pumps);
    }
    let gamma = p.mean_gamma();
    let (g, _) = optimize_g(p, &pumps, 0.1 * gamma, 3.0 * gamma)?;
    Ok(PumpSettings { g1: g, g2: g, ..pumps })
}

fn cmd_smatrix(config: &Config, common: &Common, out: &Output) -> Result<()> {
    let (p, pumps) = checked(config)?;
    let pumps = with_optimal_g(&p, pumps, common)?;
    let grid = detuning_grid(config, &p)?;
    let trace = s_trace(&p, &pumps, &grid)?;
    let mut names = vec!["detuning_mhz".to_string()];
    let mut db_names = vec!["detuning_mhz".to_string()];
    for i in 1..=3 {
        for j in 1..=3 {
            names.push(format!("re_s{i}{j}"));
            names.push(format!("im_s{i}{j}"));
            db_names.push(format!("s{i}{j}_db"));
        }
    }
    let mut t = Table { name: "smatrix".into(), columns: names, rows: Vec::new() };
    let mut db = Table { name: "smatrix_db".into(), columns: db_names, rows: Vec::new() };
    for (d, s) in grid.iter().zip(&trace) {
        let mut row = vec![to_mhz(*d)];
        let mut row_db = vec![to_mhz(*d)];
        for i in 1..=3 {
            for j in 1..=3 {
                row.extend([s.s(i, j).re, s.s(i, j).im]);
                row_db.push(-loss_db(s.s(i, j)));
            }
        }
        t.push(row);
        db.push(row_db);
    }
    out.table(&t, None)?;
    out.table_with_offset(&db, Some(PlotKind::Line), out.db_offset)?;
    let mid = trace.len() / 2;
    out.summary(
        "smatrix",
        &json!({
            "g1_mhz": to_mhz(pumps.g1),
            "g2_mhz": to_mhz(pumps.g2),
            "delta_phi": pumps.delta_phi(),
            "unitarity_defect_at_resonance": trace[mid].unitarity_defect(),
        }),
    )
}

fn cmd_isolate(config: &Config, common: &Common, out: &Output) -> Result<()> {
    let (p, pumps) = checked(config)?;
    let pumps = with_optimal_g(&p, pumps, common)?;
    let grid = detuning_grid(config, &p)?;
    let (pass, iso) = pass_and_isolate(&pumps);
    let tp = s_trace(&p, &pass, &grid)?;
    let ti = s_trace(&p, &iso, &grid)?;
    let mut t = Table::new("s21", &["detuning_mhz", "s21_pass_db", "s21_isolate_db"]);
    for k in 0..grid.len() {
        t.push(vec![to_mhz(grid[k]), -loss_db(tp[k].s(2, 1)), -loss_db(ti[k].s(2, 1))]);
    }
    out.table_with_offset(&t, Some(PlotKind::Line), out.db_offset)?;
    let m = isolation_metrics(&p, &pumps, &grid)?;
    out.summary(
        "isolate",
        &json!({
            "g_mhz": to_mhz(pumps.g1),
            "insertion_loss_db": m.insertion_loss_db,
            "isolation_db": m.isolation_db,
            "isolation_bandwidth_mhz": to_mhz(m.isolation_bandwidth),
        }),
    )
}

fn emission_params(config: &Config, ideal_b: bool) -> CouplerParams {
    let p = config.coupler_params();
    if ideal_b {
        p.with_b(0.0, 0.0)
    } else {
        p
    }
}

fn time_table(name: &str, field: &FieldRecord, flux: &FluxRecord) -> Table {
    let mut t = Table::new(
        name,
        &["t_us", "re_a1", "im_a1", "re_a2", "im_a2", "re_b", "im_b", "flux_left", "flux_right", "flux_b", "g1_mhz", "g2_mhz"],
    );
    for k in 0..field.t.len() {
        t.push(vec![
            field.t[k] * 1e6,
            field.a1[k].re,
            field.a1[k].im,
            field.a2[k].re,
            field.a2[k].im,
            field.b[k].re,
            field.b[k].im,
            flux.left[k],
            flux.right[k],
            flux.b[k],
            to_mhz(flux.g1[k]),
            to_mhz(flux.g2[k]),
        ]);
    }
    t
}

fn flux_plot_table(name: &str, flux: &FluxRecord) -> Table {
    let mut t = Table::new(name, &["t_us", "flux_left", "flux_right", "flux_b"]);
    for k in 0..flux.t.len() {
        t.push(vec![flux.t[k] * 1e6, flux.left[k], flux.right[k], flux.b[k]]);
    }
    t
}

fn cmd_emit(config: &Config, left: bool, ideal_b: bool, out: &Output) -> Result<()> {
    let p = emission_params(config, ideal_b);
    let dir = if left { Direction::Left } else { Direction::Right };
    let spec = WavepacketSpec { gamma_ph: config.sim.gamma_ph_ratio * p.mean_gamma(), direction: dir };
    let run = emit_standard(&p, &spec)?;
    out.table(&time_table("emission", &run.field, &run.flux), None)?;
    if out.plot {
        out.table(&flux_plot_table("emission_flux", &run.flux), Some(PlotKind::Line))?;
    }
    let m = run.metrics;
    out.summary(
        "emit",
        &json!({
            "gamma_ph_mhz": to_mhz(spec.gamma_ph),
            "efficiency": m.efficiency,
            "right_fraction": m.right_fraction,
            "left_fraction": m.left_fraction,
            "total_photons": m.total_photons,
            "photons_b_port": run.flux.photons_b,
        }),
    )
}

fn cmd_absorb(config: &Config, ideal_b: bool, out: &Output) -> Result<()> {
    let p = emission_params(config, ideal_b);
    let spec = WavepacketSpec::right(config.sim.gamma_ph_ratio * p.mean_gamma());
    let run = absorb(&p, &spec, 50.0)?;
    out.table(&time_table("absorption", &run.field, &run.flux), None)?;
    if out.plot {
        out.table(&flux_plot_table("absorption_flux", &run.flux), Some(PlotKind::Line))?;
    }
    out.summary(
        "absorb",
        &json!({
            "gamma_ph_mhz": to_mhz(spec.gamma_ph),
            "final_b_population": run.final_b_population,
            "photons_in": run.flux.photons_in,
            "photons_left": run.flux.photons_left,
            "photons_right": run.flux.photons_right,
        }),
    )
}

/// Parses plus | fock:N | coherent:RE,IM | cat:ALPHA[,odd].
pub fn parse_state(s: &str) -> Result<StateSpec> {
    let bad = || Error::Domain(format!("cannot parse state {s:?}"));
    let (kind, arg) = s.split_once(':').unwrap_or((s, ""));
    let nums = || -> Result<Vec<f64>> {
        arg.split(',').filter(|a| !a.is_empty() && *a != "odd" && *a != "even").map(|a| a.trim().parse::<f64>().map_err(|_| bad())).collect()
    };
    match kind {
        "plus" => Ok(StateSpec::Plus),
        "fock" => Ok(StateSpec::Fock(arg.trim().parse().map_err(|_| bad())?)),
        "coherent" => match nums()?.as_slice() {
            [re] => Ok(StateSpec::Coherent { re: *re, im: 0.0 }),
            [re, im] => Ok(StateSpec::Coherent { re: *re, im: *im }),
            _ => Err(bad()),
        },
        "cat" => match nums()?.as_slice() {
            [a] => Ok(StateSpec::Cat { alpha: *a, even: !arg.contains("odd") }),
            _ => Err(bad()),
        },
        _ => Err(bad()),
    }
}

fn run_transfer(
    config: &Config,
    common: &Common,
    state: &str,
    gamma_ph_ratio: Option<f64>,
    ideal_b: bool,
    allow_cat: bool,
) -> Result<TransferResult> {
    let spec_state = parse_state(state)?;
    let p = emission_params(config, ideal_b);
    let ratio = gamma_ph_ratio.unwrap_or(config.sim.gamma_ph_ratio);
    let layout = NetworkLayout::chain(vec![p.clone(), p.clone()], 1.0);
    let opts = TransferOptions { fock_dim: common.fock_dim, allow_cat, ..TransferOptions::default() };
    transfer_experiment(&spec_state, &WavepacketSpec::right(ratio * p.mean_gamma()), &layout, &opts)
}

fn cmd_snail(config: &Config, points: usize, out: &Output) -> Result<()> {
    if points < 2 {
        return Err(Error::Domain("snail needs at least 2 flux points".into()));
    }
    let base = config.snail_params(0.0);
    base.validate()?;
    let flux: Vec<f64> = (0..points).map(|k| 0.01 + (std::f64::consts::PI - 0.02) * k as f64 / (points - 1) as f64).collect();
    let rows = flux_table(&base, &flux)?;
    let mut t = Table::new("snail", &["phi_ext", "c2", "c3", "c4", "omega_s_ghz", "d_omega_s_d_phi_ghz"]);
    for r in rows {
        t.push(vec![r[0], r[1], r[2], r[3], crate::units::to_ghz(r[4]), crate::units::to_ghz(r[5])]);
    }
    out.table(&t, Some(PlotKind::Line))?;
    let fe = kerr_free_flux(base.alpha, base.e_j, base.e_c)?;
    let e = expansion_coefficients(&crate::snail::SnailParams { phi_ext: fe, ..base })?;
    out.summary(
        "snail",
        &json!({
            "alpha": base.alpha,
            "kerr_free_flux": fe,
            "c2": e.c2,
            "c3": e.c3,
            "omega_s_ghz": crate::units::to_ghz(e.omega_s),
            "flux_sensitivity_ghz": crate::units::to_ghz(e.flux_sensitivity),
            "damping_scale_vs_0_29": c2_slope_at_kerr_free(base.alpha)? / c2_slope_at_kerr_free(0.29)?,
        }),
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_fit(
    config: &Config,
    common: &Common,
    trace_path: Option<&Path>,
    center_mhz: Option<f64>,
    noise: f64,
    magnitude_only: bool,
    fixed_internal: bool,
    out: &Output,
) -> Result<()> {
    let p = config.coupler_params();
    let truth = NonidealParams {
        g_c: p.cancellation_coupling,
        gamma_e: p.mean_gamma(),
        gamma_i1: p.a1.internal_damping,
        gamma_i2: p.a2.internal_damping,
    };
    let trace = match trace_path {
        Some(path) => {
            let center = center_mhz.unwrap_or(config.mode.a1.freq_ghz * 1e3);
            read_trace_csv(fs::File::open(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?, center)?
        }
        None => {
            let grid = detuning_grid(config, &p)?;
            synth_trace(|d| truth.s21(d), &grid, &SyntheticNoiseSpec { sigma: noise, seed: common.seed })?
        }
    };
    let opts = FitOptions {
        seed: common.seed,
        magnitude_only,
        fixed_internal: fixed_internal.then_some((truth.gamma_i1, truth.gamma_i2)),
        ..FitOptions::default()
    };
    let fit = fit_s21_cancellation(&trace, &opts)?;
    let e = fit.estimate;
    let mut t = Table::new("fit_trace", &["detuning_mhz", "re_data", "im_data", "re_model", "im_model"]);
    for s in &trace {
        let m = e.s21(s.detuning);
        t.push(vec![to_mhz(s.detuning), s.value.re, s.value.im, m.re, m.im]);
    }
    out.table(&t, Some(PlotKind::Line))?;
    let ident = e.identifiable();
    out.summary(
        "fit",
        &json!({
            "g_c_mhz": to_mhz(e.g_c),
            "gamma_e_mhz": to_mhz(e.gamma_e),
            "gamma_i1_mhz": to_mhz(e.gamma_i1),
            "gamma_i2_mhz": to_mhz(e.gamma_i2),
            "ratio": e.ratio(),
            "gamma_i_sum_mhz": to_mhz(ident[1]),
            "residual_norm": fit.residual_norm,
            "curvature": fit.curvature,
            "starts": fit.starts,
            "converged_starts": fit.converged_starts,
            "synthetic": trace_path.is_none(),
        }),
    )
}

fn cmd_sweep(
    config: &Config,
    common: &Common,
    kind: SweepKind,
    values: Option<Vec<f64>>,
    lindblad: bool,
    out: &Output,
) -> Result<()> {
    let device = config.coupler_params();
    let pumps = config.pump_settings();
    let v = |default: &[f64]| values.clone().unwrap_or_else(|| default.to_vec());
    let mut spec = match kind {
        SweepKind::IsolationVsDamping => SweepSpec::isolation_vs_damping(v(&[0.0, 0.01, 0.02, 0.05, 0.1, 0.15, 0.2])),
        SweepKind::IsolationVsAlpha => {
            let mut s = SweepSpec::isolation_vs_alpha(v(&[0.05, 0.1, 0.15, 0.2, 0.25, 0.29]));
            s.base = device.clone();
            s.pumps = PumpSettings { phi1: 0.0, phi2: std::f64::consts::FRAC_PI_2, ..pumps };
            s
        }
        SweepKind::EmissionMap => {
            if values.is_some() {
                return Err(Error::Domain("emission-map axes are fixed; --values is for single-axis sweeps".into()));
            }
            let mut s = SweepSpec::emission_efficiency_map(
                vec![0.5, 0.75, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5],
                vec![0.05, 0.1, 0.15, 0.2, 0.25, 0.29],
            );
            s.base = device.clone().with_b(0.0, 0.0);
            s.gamma_ph_ratio = config.sim.gamma_ph_ratio;
            s
        }
        SweepKind::PumpLeakage => {
            let mut s = SweepSpec::pump_leakage(v(&[0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5]));
            s.base = device.clone();
            s.pumps = PumpSettings { phi1: 0.0, phi2: std::f64::consts::FRAC_PI_2, ..pumps };
            s
        }
        SweepKind::ResidualCoupling => {
            let mut s = SweepSpec::residual_coupling(v(&[0.5, 0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3, 1.4, 1.5]));
            s.lindblad = lindblad;
            s
        }
        SweepKind::TransferFidelity => SweepSpec::transfer_fidelity_vs_damping(v(&[0.0, 0.05, 0.1, 0.15, 0.2])),
    };
    spec.optimize_g = spec.optimize_g || common.optimize_g;
    let r = sweeps::run_sweep(&spec)?;
    let name = &r.provenance.sweep;
    match out.format {
        Format::Csv => r.write_csv(fs::File::create(out.dir.join(format!("{name}.csv")))?)?,
        Format::Json => serde_json::to_writer_pretty(fs::File::create(out.dir.join(format!("{name}.json")))?, &r)?,
    }
    r.write_metadata(fs::File::create(out.dir.join(format!("{name}.meta.json")))?)?;
    if out.plot {
        let t = Table::from_sweep(&r);
        let kind = if r.provenance.axes.len() == 2 { PlotKind::Heatmap } else { PlotKind::Line };
        for (file, svg) in render_plot(&t, kind, 0.0)? {
            fs::write(out.dir.join(file), svg)?;
        }
    }
    let failures: Vec<_> = r.failures().map(|row| json!({ "index": row.index, "status": row.status })).collect();
    println!("{name}: {} rows, {} failed", r.rows.len(), failures.len());
    fs::write(out.dir.join(format!("{name}_summary.json")), serde_json::to_string_pretty(&json!({ "rows": r.rows.len(), "failures": failures }))?)?;
    Ok(())
}
