//! TOML configuration in quoted "value/2π" units, with environment overrides.
//!
//! `kappa_ext_mhz` and `kappa_int_khz` are energy linewidths. For the a-modes the
//! amplitude coupling is γ = κ_ext/2; for b the stored γ_b equals κ_ext because
//! it enters the b equation as γ_b/2. Missing keys fall back to the measured
//! device. Any key can be overridden with `CHIRALSIM_<SECTION>_<KEY>`, where
//! the section `mode.a1` becomes `MODE_A1`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::units::{ghz, khz, mhz};
use crate::model::{CouplerParams, ModeParams, PumpSettings, A_FREQ_GHZ, B_FREQ_GHZ};
use crate::snail::SnailParams;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSection {
    pub freq_ghz: f64,
    pub kappa_ext_mhz: f64,
    pub kappa_int_khz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Modes {
    pub a1: ModeSection,
    pub a2: ModeSection,
    pub b: ModeSection,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplerSection {
    pub g_c_mhz: Option<f64>,
    /// |g_c|/√(γ1γ2); overrides `g_c_mhz` when present (g_c taken negative).
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PumpSection {
    pub g1_mhz: f64,
    pub g2_mhz: f64,
    pub phi1_deg: f64,
    pub phi2_deg: f64,
    #[serde(default)]
    pub leakage: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SnailSection {
    pub alpha: f64,
    pub ej_ghz: f64,
    pub ec_mhz: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    /// Wavepacket bandwidth γ_ph as a multiple of the mean a-mode γ.
    pub gamma_ph_ratio: f64,
    /// Half-width of detuning traces in units of the mean a-mode γ.
    pub span_gamma: f64,
    pub points: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub mode: Modes,
    #[serde(default)]
    pub coupler: CouplerSection,
    pub pumps: PumpSection,
    pub snail: SnailSection,
    pub sim: SimSection,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            mode: Modes {
                a1: ModeSection { freq_ghz: A_FREQ_GHZ, kappa_ext_mhz: 1.46, kappa_int_khz: 215.0 },
                a2: ModeSection { freq_ghz: A_FREQ_GHZ, kappa_ext_mhz: 1.43, kappa_int_khz: 294.0 },
                b: ModeSection { freq_ghz: B_FREQ_GHZ, kappa_ext_mhz: 2.51, kappa_int_khz: 588.0 },
            },
            coupler: CouplerSection { g_c_mhz: None, ratio: Some(1.04) },
            pumps: PumpSection { g1_mhz: 0.70, g2_mhz: 0.70, phi1_deg: 0.0, phi2_deg: 90.0, leakage: 0.0 },
            // E_J for a 3.0 nH large junction; E_C is a nominal value (only ratios are used).
            snail: SnailSection { alpha: 0.29, ej_ghz: 54.5, ec_mhz: 100.0 },
            sim: SimSection { gamma_ph_ratio: 0.5, span_gamma: 10.0, points: 1001 },
        }
    }
}

/// Keys accepted per section, in environment-variable order.
const SCHEMA: &[(&str, &[&str])] = &[
    ("mode.a1", &["freq_ghz", "kappa_ext_mhz", "kappa_int_khz"]),
    ("mode.a2", &["freq_ghz", "kappa_ext_mhz", "kappa_int_khz"]),
    ("mode.b", &["freq_ghz", "kappa_ext_mhz", "kappa_int_khz"]),
    ("coupler", &["g_c_mhz", "ratio"]),
    ("pumps", &["g1_mhz", "g2_mhz", "phi1_deg", "phi2_deg", "leakage"]),
    ("snail", &["alpha", "ej_ghz", "ec_mhz"]),
    ("sim", &["gamma_ph_ratio", "span_gamma", "points"]),
];

fn env_name(section: &str, key: &str) -> String {
    format!("CHIRALSIM_{}_{}", section.replace('.', "_").to_uppercase(), key.to_uppercase())
}

fn table_at<'a>(root: &'a mut toml::Table, path: &str) -> &'a mut toml::Table {
    let mut t = root;
    for part in path.split('.') {
        t = t
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .expect("config section is a table");
    }
    t
}

impl Config {
    /// Parses TOML text layered over the defaults, then applies `env` overrides.
    pub fn from_toml_str(text: &str, env: &BTreeMap<String, String>) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        let mut root: toml::Table = toml::Table::try_from(Config::default()).map_err(|e| Error::Config(e.to_string()))?;
        // An explicit g_c replaces the default ratio unless the file gives both.
        if let Some(c) = user.get("coupler").and_then(|v| v.as_table()) {
            if c.contains_key("g_c_mhz") && !c.contains_key("ratio") {
                table_at(&mut root, "coupler").remove("ratio");
            }
        }
        merge(&mut root, user);
        for (section, keys) in SCHEMA {
            for key in *keys {
                if let Some(raw) = env.get(&env_name(section, key)) {
                    let v = if *key == "points" {
                        toml::Value::Integer(raw.trim().parse().map_err(|_| Error::Config(format!("{}: {raw}", env_name(section, key))))?)
                    } else {
                        toml::Value::Float(raw.trim().parse().map_err(|_| Error::Config(format!("{}: {raw}", env_name(section, key))))?)
                    };
                    let t = table_at(&mut root, section);
                    if *key == "g_c_mhz" {
                        t.remove("ratio");
                    }
                    t.insert(key.to_string(), v);
                }
            }
        }
        toml::Value::Table(root).try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path, env: &BTreeMap<String, String>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text, env)
    }

    /// The process environment restricted to CHIRALSIM_ variables.
    pub fn process_env() -> BTreeMap<String, String> {
        std::env::vars().filter(|(k, _)| k.starts_with("CHIRALSIM_")).collect()
    }

    pub fn coupler_params(&self) -> CouplerParams {
        let m = &self.mode;
        let a = |s: &ModeSection| ModeParams::new(ghz(s.freq_ghz), 0.5 * mhz(s.kappa_ext_mhz), khz(s.kappa_int_khz));
        let mut p = CouplerParams {
            a1: a(&m.a1),
            a2: a(&m.a2),
            b: ModeParams::new(ghz(m.b.freq_ghz), mhz(m.b.kappa_ext_mhz), khz(m.b.kappa_int_khz)),
            cancellation_coupling: 0.0,
            path_delay_phase: std::f64::consts::FRAC_PI_2,
        };
        p.cancellation_coupling = match (self.coupler.ratio, self.coupler.g_c_mhz) {
            (Some(r), _) => -r * p.geometric_gamma(),
            (None, Some(g)) => mhz(g),
            (None, None) => -p.geometric_gamma(),
        };
        p
    }

    pub fn pump_settings(&self) -> PumpSettings {
        let p = &self.pumps;
        PumpSettings::new(
            mhz(p.g1_mhz),
            mhz(p.g2_mhz),
            p.phi1_deg.to_radians(),
            p.phi2_deg.to_radians(),
            &self.coupler_params(),
        )
        .with_leakage(p.leakage)
    }

    pub fn snail_params(&self, phi_ext: f64) -> SnailParams {
        SnailParams { e_c: mhz(self.snail.ec_mhz), e_j: ghz(self.snail.ej_ghz), alpha: self.snail.alpha, phi_ext }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
