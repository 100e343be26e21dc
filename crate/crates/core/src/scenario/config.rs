//! Scenario file: TOML with one section per subsystem, every field optional.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bioheat::{GridSpec, PatternTemplate, SolverConfig};
use crate::data;
use crate::error::{Error, Result};
use crate::mode::{DecisionConfig, OperatorProfile};
use crate::power::{AppId, ApplicationClass};

/// How the TR-capable handsets of the mixed cell pick their mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModePolicy {
    /// TR-capable handsets stay in TR mode for the whole run.
    #[default]
    Fixed,
    /// TR-capable handsets run the D² switch every slot.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AppRates {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl Default for AppRates {
    fn default() -> Self {
        Self { a1: 10e3, a2: 64e3, a3: 2e6 }
    }
}

impl AppRates {
    pub fn rate(&self, id: AppId) -> f64 {
        match id {
            AppId::A1 => self.a1,
            AppId::A2 => self.a2,
            AppId::A3 => self.a3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioConfig {
    /// Base-station transmit power T_BS [W].
    pub bs_power: f64,
    /// Power of an interfering handset [W].
    pub ue_power: f64,
    /// Optional ceiling on handset radiated power [W]; uncapped by default.
    pub power_cap: Option<f64>,
    /// Large-scale path gain, uniform in dB over this range.
    pub path_gain_db_min: f64,
    pub path_gain_db_max: f64,
    /// Gain towards interfering base stations and handsets [dB].
    pub interferer_gain_db: f64,
    pub min_taps: usize,
    pub max_taps: usize,
    /// Keep A3 downlink open for TR handsets.
    pub a3_downlink: bool,
}

impl Default for RadioConfig {
    fn default() -> Self {
        Self {
            bs_power: 20.0,
            ue_power: 1.0,
            power_cap: None,
            path_gain_db_min: -140.0,
            path_gain_db_max: -95.0,
            interferer_gain_db: -150.0,
            min_taps: 4,
            max_taps: 12,
            a3_downlink: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    pub n_slots: usize,
    /// Per-slot base-station budget [W].
    pub p_max: f64,
    /// Frame-average base-station budget [W].
    pub p_avg: f64,
    /// Power-splitting ratio.
    pub alpha: f64,
    /// RF-to-DC conversion rate.
    pub gamma: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { n_slots: 10, p_max: 20.0, p_avg: 20.0, alpha: 0.5, gamma: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExposureConfig {
    /// Handset-to-head distance [m].
    pub distance: f64,
    pub antenna_gain: f64,
    /// Exposed tissue mass [kg].
    pub mass: f64,
    pub depth_max_mm: f64,
    pub depth_step_mm: f64,
}

impl Default for ExposureConfig {
    fn default() -> Self {
        Self {
            distance: 0.05,
            antenna_gain: 1.0,
            mass: 0.01,
            depth_max_mm: 3.0,
            depth_step_mm: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct BioheatConfig {
    pub grid: GridSpec,
    pub solver: SolverConfig,
    pub pattern: PatternTemplate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub seed: u64,
    pub iterations: usize,
    pub n_users: usize,
    pub tr_users: usize,
    pub mode_policy: ModePolicy,
    pub operator_profile: String,
    /// Carrier frequency [Hz].
    pub frequency: f64,
    /// [Hz]
    pub bandwidth: f64,
    /// [W]
    pub noise_var: f64,
    /// Circuit power per handset [W].
    pub p_ckt: f64,
    /// Step of the active-user axis in the series outputs.
    pub user_step: usize,
    pub app_rates: AppRates,
    pub radio: RadioConfig,
    pub frame: FrameConfig,
    pub decision: DecisionConfig,
    pub exposure: ExposureConfig,
    pub bioheat: BioheatConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            iterations: 100,
            n_users: 50,
            tr_users: 20,
            mode_policy: ModePolicy::Fixed,
            operator_profile: "generic".into(),
            frequency: 30e9,
            bandwidth: 5e6,
            noise_var: 1e-13,
            p_ckt: 0.1,
            user_step: 10,
            app_rates: AppRates::default(),
            radio: RadioConfig::default(),
            frame: FrameConfig::default(),
            decision: DecisionConfig::default(),
            exposure: ExposureConfig::default(),
            bioheat: BioheatConfig::default(),
        }
    }
}

fn field(name: &str, reason: impl Into<String>) -> Error {
    Error::Config { field: name.into(), reason: reason.into() }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(field(name, format!("must be > 0, got {v}")))
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(field("iterations", "must be >= 1"));
        }
        if self.tr_users > self.n_users {
            return Err(field(
                "tr_users",
                format!("{} exceeds n_users = {}", self.tr_users, self.n_users),
            ));
        }
        if self.user_step == 0 {
            return Err(field("user_step", "must be >= 1"));
        }
        positive("frequency", self.frequency)?;
        positive("bandwidth", self.bandwidth)?;
        positive("noise_var", self.noise_var)?;
        positive("p_ckt", self.p_ckt)?;
        for (n, v) in [("app_rates.a1", self.app_rates.a1), ("app_rates.a2", self.app_rates.a2), ("app_rates.a3", self.app_rates.a3)] {
            positive(n, v)?;
        }
        if !(self.app_rates.a1 <= self.app_rates.a2 && self.app_rates.a2 <= self.app_rates.a3) {
            return Err(field("app_rates", "rates must be ordered a1 <= a2 <= a3"));
        }

        let r = &self.radio;
        positive("radio.bs_power", r.bs_power)?;
        positive("radio.ue_power", r.ue_power)?;
        if let Some(c) = r.power_cap {
            positive("radio.power_cap", c)?;
        }
        if !(r.path_gain_db_min <= r.path_gain_db_max) || !r.path_gain_db_max.is_finite() || !r.path_gain_db_min.is_finite() {
            return Err(field("radio.path_gain_db_min", "range must be finite and ordered"));
        }
        if !r.interferer_gain_db.is_finite() {
            return Err(field("radio.interferer_gain_db", "must be finite"));
        }
        if r.min_taps == 0 || r.max_taps < r.min_taps {
            return Err(field("radio.min_taps", "need 1 <= min_taps <= max_taps"));
        }

        let f = &self.frame;
        if f.n_slots == 0 {
            return Err(field("frame.n_slots", "must be >= 1"));
        }
        positive("frame.p_max", f.p_max)?;
        positive("frame.p_avg", f.p_avg)?;
        if !(0.0..=1.0).contains(&f.alpha) {
            return Err(field("frame.alpha", "must lie in [0, 1]"));
        }
        if !(f.gamma > 0.0 && f.gamma <= 1.0) {
            return Err(field("frame.gamma", "must lie in (0, 1]"));
        }

        let d = &self.decision;
        if !d.ss_threshold.is_finite() {
            return Err(field("decision.ss_threshold", "must be finite"));
        }
        if !(d.hysteresis_db >= 0.0) {
            return Err(field("decision.hysteresis_db", "must be >= 0"));
        }
        if d.window == 0 {
            return Err(field("decision.window", "must be >= 1"));
        }
        positive("decision.bandwidth", d.bandwidth)?;

        let e = &self.exposure;
        positive("exposure.distance", e.distance)?;
        positive("exposure.antenna_gain", e.antenna_gain)?;
        positive("exposure.mass", e.mass)?;
        positive("exposure.depth_max_mm", e.depth_max_mm)?;
        positive("exposure.depth_step_mm", e.depth_step_mm)?;
        if e.depth_max_mm / e.depth_step_mm < 2.0 {
            return Err(field("exposure.depth_step_mm", "need at least 3 depth points"));
        }

        self.profile()?;
        self.bioheat
            .grid
            .build()
            .map_err(|e| field("bioheat.grid", e.to_string()))?;
        self.bioheat
            .solver
            .n_steps()
            .map_err(|e| field("bioheat.solver", e.to_string()))?;
        if !(self.bioheat.pattern.azimuth_step_deg > 0.0 && self.bioheat.pattern.elevation_step_deg > 0.0) {
            return Err(field("bioheat.pattern", "angle steps must be > 0"));
        }
        Ok(())
    }

    pub fn profile(&self) -> Result<OperatorProfile> {
        data::operator_profile(&self.operator_profile)
            .ok_or_else(|| field("operator_profile", format!("unknown operator `{}`", self.operator_profile)))
    }

    pub fn applications(&self) -> [ApplicationClass; 3] {
        AppId::ALL.map(|id| ApplicationClass {
            id,
            target_rate: self.app_rates.rate(id),
            bandwidth: self.bandwidth,
        })
    }

    /// Parses and validates.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::with_overrides(text, &[])
    }

    /// Parses, applies `key.path = value` overrides, then validates. Values
    /// are read as TOML literals, falling back to plain strings.
    pub fn with_overrides(text: &str, overrides: &[(String, String)]) -> Result<Self> {
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| field("<file>", e.to_string()))?;
        for (key, raw) in overrides {
            set_path(&mut table, key, parse_literal(raw))?;
        }
        let cfg: Self = table
            .try_into()
            .map_err(|e: toml::de::Error| field("<file>", e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, overrides: &[(String, String)]) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| field("--config", format!("{}: {e}", path.display())))?;
        Self::with_overrides(&text, overrides)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn parse_literal(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(field(key, "malformed override key"));
    }
    let (last, parents) = parts.split_last().expect("non-empty");
    let mut cur = table;
    for p in parents {
        let entry = cur
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry
            .as_table_mut()
            .ok_or_else(|| field(key, format!("`{p}` is not a section")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Parses `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| field("--set", format!("expected key=value, got `{s}`")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}
