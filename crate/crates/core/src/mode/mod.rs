//! Display-and-decision (D²) mode selection and adaptive switching.
//!
//! A handset whose received signal strength falls below the threshold
//! (−99 dBm by default) leaves Active mode for TR mode, where the
//! high-bandwidth application is no longer served, and returns to Active
//! mode at the first slot where the signal meets the threshold again.

mod profile;
pub mod rrc;

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::power::AppId;

pub use profile::{classify_signal, read_profiles, OperatorProfile, SignalQuality};
pub use rrc::{emitted_links, emitted_nas, transition, RrcEvent, RrcPhase, RrcState, TransferKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UeMode {
    Active,
    #[serde(rename = "tr")]
    Thermal,
    Flight,
}

impl fmt::Display for UeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            UeMode::Active => "ACTIVE",
            UeMode::Thermal => "TR",
            UeMode::Flight => "FLIGHT",
        })
    }
}

impl FromStr for UeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "active" | "am" => Ok(UeMode::Active),
            "tr" | "thermal" => Ok(UeMode::Thermal),
            "flight" => Ok(UeMode::Flight),
            _ => Err(Error::Config {
                field: "mode".into(),
                reason: format!("unknown mode `{s}`"),
            }),
        }
    }
}

pub fn allowed_applications(mode: UeMode) -> BTreeSet<AppId> {
    match mode {
        UeMode::Active => AppId::ALL.into_iter().collect(),
        UeMode::Thermal => [AppId::A1, AppId::A2].into_iter().collect(),
        UeMode::Flight => BTreeSet::new(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecisionConfig {
    /// SS_th [dBm].
    pub ss_threshold: f64,
    /// Open interval [dBm] in which all applications may be served.
    pub served_band: (f64, f64),
    /// Extra margin [dB] above the threshold required to leave TR mode.
    pub hysteresis_db: f64,
    /// Rolling database length in slots.
    pub window: usize,
    /// Bandwidth [Hz] used to check the target rate.
    pub bandwidth: f64,
}

impl Default for DecisionConfig {
    fn default() -> Self {
        Self {
            ss_threshold: -99.0,
            served_band: (-99.0, -50.0),
            hysteresis_db: 0.0,
            window: 32,
            bandwidth: 5e6,
        }
    }
}

/// One D² decision. Flight mode is user-set and never left here.
pub fn d2_decide(ss_dbm: f64, config: &DecisionConfig, current: UeMode) -> UeMode {
    match current {
        UeMode::Flight => UeMode::Flight,
        UeMode::Active if ss_dbm < config.ss_threshold => UeMode::Thermal,
        UeMode::Active => UeMode::Active,
        UeMode::Thermal if ss_dbm >= config.ss_threshold + config.hysteresis_db => UeMode::Active,
        UeMode::Thermal => UeMode::Thermal,
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotRecord {
    /// Linear SNR.
    pub snr: f64,
    /// Linear SINR.
    pub sinr: f64,
    /// Received signal strength [dBm].
    pub ss_dbm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub slot: usize,
    pub ss_dbm: f64,
    pub mode: UeMode,
    pub served: BTreeSet<AppId>,
    /// Whether `B·log2(1 + SINR)` meets the target rate.
    pub rate_ok: bool,
    pub in_served_band: bool,
    /// Mean SINR over the rolling database [dB].
    pub window_sinr_db: f64,
}

/// Per-user training database and current mode.
#[derive(Debug, Clone)]
pub struct AdaptiveSwitch {
    config: DecisionConfig,
    mode: UeMode,
    database: VecDeque<SlotRecord>,
}

impl AdaptiveSwitch {
    pub fn new(config: DecisionConfig) -> Self {
        Self {
            config,
            mode: UeMode::Active,
            database: VecDeque::with_capacity(config.window.max(1)),
        }
    }

    pub fn mode(&self) -> UeMode {
        self.mode
    }

    pub fn database(&self) -> impl Iterator<Item = &SlotRecord> {
        self.database.iter()
    }

    pub fn observe(&mut self, slot: usize, rec: SlotRecord, demand: &BTreeSet<AppId>, target_rate: f64) -> TraceEntry {
        if self.database.len() == self.config.window.max(1) {
            self.database.pop_front();
        }
        self.database.push_back(rec);
        self.mode = d2_decide(rec.ss_dbm, &self.config, self.mode);

        let allowed = allowed_applications(self.mode);
        let served = demand.intersection(&allowed).copied().collect();
        let rate = self.config.bandwidth * (1.0 + rec.sinr).log2();
        let mean_sinr = self.database.iter().map(|r| r.sinr).sum::<f64>() / self.database.len() as f64;
        let (lo, hi) = self.config.served_band;
        TraceEntry {
            slot,
            ss_dbm: rec.ss_dbm,
            mode: self.mode,
            served,
            rate_ok: rate >= target_rate,
            in_served_band: rec.ss_dbm > lo && rec.ss_dbm < hi,
            window_sinr_db: 10.0 * mean_sinr.log10(),
        }
    }
}

/// Runs the adaptive switch over a slot history starting in Active mode.
pub fn adaptive_switch(
    history: &[SlotRecord],
    demand: &BTreeSet<AppId>,
    target_rate: f64,
    config: &DecisionConfig,
) -> Vec<TraceEntry> {
    let mut sw = AdaptiveSwitch::new(*config);
    history
        .iter()
        .enumerate()
        .map(|(i, rec)| sw.observe(i, *rec, demand, target_rate))
        .collect()
}

fn app_list(apps: &BTreeSet<AppId>) -> String {
    apps.iter().map(|a| a.label()).collect::<Vec<_>>().join("+")
}

pub fn write_trace_csv<W: Write>(trace: &[TraceEntry], mut out: W) -> std::io::Result<()> {
    writeln!(out, "slot,ss_dbm,mode,served,rate_ok,in_served_band,window_sinr_db")?;
    for e in trace {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e.slot,
            crate::format::sig9(e.ss_dbm),
            e.mode,
            app_list(&e.served),
            u8::from(e.rate_ok),
            u8::from(e.in_served_band),
            crate::format::sig9(e.window_sinr_db)
        )?;
    }
    Ok(())
}
