//! Scenario configuration files.

use std::path::Path;

use arraygnss::acquisition::{DEFAULT_NULLED, DEFAULT_TAU, DEFAULT_TAU_J};
use arraygnss::consistency::RangeBounds;
use arraygnss::doa::{DEFAULT_SNAPSHOTS, DEFAULT_SNAPSHOT_START, DEFAULT_TAU_M};
use arraygnss::pipeline::{Mode, ReceiverParams};
use arraygnss::positioning::{default_sigma, DEFAULT_MAX_ITERATIONS};
use arraygnss::scene::{JammerSpec, ScenarioParams, SpooferSpec};
use arraygnss::synth::ChannelKind;
use serde::{Deserialize, Serialize};

use crate::HarnessError;

/// `count` identical jammers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JammerGroup {
    #[serde(default = "one")]
    pub count: usize,
    #[serde(default = "one")]
    pub antennas: usize,
    pub jsr_db: f64,
    #[serde(default)]
    pub channel: ChannelKind,
}

/// `count` identical spoofers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpooferGroup {
    #[serde(default = "one")]
    pub count: usize,
    #[serde(default = "one")]
    pub spoofed_count: usize,
    pub ssr_db: f64,
    #[serde(default)]
    pub channel: ChannelKind,
}

fn one() -> usize {
    1
}

/// Receiver thresholds; every field defaults to the built-in value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReceiverConfig {
    pub tau: f64,
    pub tau_j: f64,
    pub nulled: usize,
    pub tau_m: f64,
    pub snapshots: usize,
    pub snapshot_start: usize,
    /// Admissible satellite distance, km.
    pub bounds_km: [f64; 2],
    /// IRLS weight floor, m.
    pub sigma_m: f64,
    pub max_iterations: usize,
}

impl Default for ReceiverConfig {
    fn default() -> Self {
        let b = RangeBounds::default();
        Self {
            tau: DEFAULT_TAU,
            tau_j: DEFAULT_TAU_J,
            nulled: DEFAULT_NULLED,
            tau_m: DEFAULT_TAU_M,
            snapshots: DEFAULT_SNAPSHOTS,
            snapshot_start: DEFAULT_SNAPSHOT_START,
            bounds_km: [b.min / 1e3, b.max / 1e3],
            sigma_m: default_sigma(),
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub snr_db: f64,
    pub jammers: Vec<JammerGroup>,
    pub spoofers: Vec<SpooferGroup>,
    pub antennas: usize,
    pub code_periods: usize,
    pub data_step: i64,
    pub trials: usize,
    pub seed: u64,
    pub modes: Vec<Mode>,
    pub receiver: ReceiverConfig,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let p = ScenarioParams::default();
        Self {
            name: String::new(),
            snr_db: p.snr_db,
            jammers: vec![],
            spoofers: vec![],
            antennas: p.antennas,
            code_periods: p.code_periods,
            data_step: p.data_step,
            trials: 20,
            seed: 0,
            modes: Mode::ALL.to_vec(),
            receiver: ReceiverConfig::default(),
        }
    }
}

fn invalid(field: &str, msg: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(format!("field `{field}`: {msg}"))
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| {
            HarnessError::Config(format!("line {} column {}: {e}", e.line(), e.column()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io { path: path.to_owned(), source: e })?;
        Self::from_json(&text).map_err(|e| match e {
            HarnessError::Config(msg) => HarnessError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let r = &self.receiver;
        if self.trials == 0 {
            return Err(invalid("trials", "must be at least 1"));
        }
        if self.modes.is_empty() {
            return Err(invalid("modes", "must list at least one mode"));
        }
        if self.antennas < 2 {
            return Err(invalid("antennas", "need at least 2"));
        }
        // acquisition window, step search and DoA snapshots all need room
        if self.code_periods < 2 * (self.data_step.max(0) as usize) || self.code_periods < 20 {
            return Err(invalid("code_periods", "too short for the data step"));
        }
        if self.data_step < 1 {
            return Err(invalid("data_step", "must be positive"));
        }
        if !self.snr_db.is_finite() {
            return Err(invalid("snr_db", "must be finite"));
        }
        for (name, v) in [("receiver.tau", r.tau), ("receiver.tau_j", r.tau_j), ("receiver.tau_m", r.tau_m), ("receiver.sigma_m", r.sigma_m)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, "must be positive"));
            }
        }
        if r.nulled >= self.antennas {
            return Err(invalid("receiver.nulled", format!("must be below the antenna count {}", self.antennas)));
        }
        if r.snapshots == 0 {
            return Err(invalid("receiver.snapshots", "must be at least 1"));
        }
        if r.max_iterations == 0 {
            return Err(invalid("receiver.max_iterations", "must be at least 1"));
        }
        RangeBounds::new(r.bounds_km[0] * 1e3, r.bounds_km[1] * 1e3).map_err(|e| invalid("receiver.bounds_km", e))?;
        for (i, j) in self.jammers.iter().enumerate() {
            if j.antennas == 0 {
                return Err(invalid(&format!("jammers[{i}].antennas"), "must be at least 1"));
            }
            if !j.jsr_db.is_finite() {
                return Err(invalid(&format!("jammers[{i}].jsr_db"), "must be finite"));
            }
        }
        for (i, s) in self.spoofers.iter().enumerate() {
            if s.spoofed_count == 0 {
                return Err(invalid(&format!("spoofers[{i}].spoofed_count"), "must be at least 1"));
            }
            if !s.ssr_db.is_finite() {
                return Err(invalid(&format!("spoofers[{i}].ssr_db"), "must be finite"));
            }
        }
        Ok(())
    }

    pub fn scenario_params(&self) -> ScenarioParams {
        let jammers = self
            .jammers
            .iter()
            .flat_map(|g| std::iter::repeat(JammerSpec { antennas: g.antennas, jsr_db: g.jsr_db, channel: g.channel }).take(g.count))
            .collect();
        let spoofers = self
            .spoofers
            .iter()
            .flat_map(|g| {
                std::iter::repeat(SpooferSpec { spoofed_count: g.spoofed_count, ssr_db: g.ssr_db, channel: g.channel }).take(g.count)
            })
            .collect();
        ScenarioParams {
            snr_db: self.snr_db,
            jammers,
            spoofers,
            antennas: self.antennas,
            code_periods: self.code_periods,
            data_step: self.data_step,
        }
    }

    pub fn receiver_params(&self) -> ReceiverParams {
        let r = &self.receiver;
        ReceiverParams {
            tau: r.tau,
            tau_j: r.tau_j,
            nulled: r.nulled,
            tau_m: r.tau_m,
            snapshots: r.snapshots,
            snapshot_start: r.snapshot_start,
            bounds: RangeBounds { min: r.bounds_km[0] * 1e3, max: r.bounds_km[1] * 1e3 },
            sigma: r.sigma_m,
            max_iterations: r.max_iterations,
        }
    }
}
