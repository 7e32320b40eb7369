//! Scenario config files: a TOML schema with defaults for every key, four
//! named presets compiled into the binary, and the conversion into the
//! engine's validated [`ScenarioConfig`].

use std::fs;
use std::path::Path;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer};

use chronosim_core::{
    AttackMode, AttackStrategy, BenignMode, CaptureThreshold, MitigationPolicy, PayloadSpec,
    QuerySchedule, SampleSize, ScenarioConfig, SyncConfig, WireParams,
};

use crate::CliError;

/// Preset names shipped with the binary, in listing order.
pub const PRESET_NAMES: [&str; 4] = [
    "baseline",
    "paper_attack",
    "paper_attack_mitigated",
    "short_ttl",
];

/// The compiled-in config for `name`, if it is a preset.
pub fn preset(name: &str) -> Option<&'static str> {
    match name {
        "baseline" => Some(include_str!("../presets/baseline.toml")),
        "paper_attack" => Some(include_str!("../presets/paper_attack.toml")),
        "paper_attack_mitigated" => Some(include_str!("../presets/paper_attack_mitigated.toml")),
        "short_ttl" => Some(include_str!("../presets/short_ttl.toml")),
        _ => None,
    }
}

/// Load a config by preset name or file path (preset names win).
pub fn load(name_or_path: &str) -> Result<FileConfig, CliError> {
    if let Some(text) = preset(name_or_path) {
        return parse(text, name_or_path);
    }
    let path = Path::new(name_or_path);
    if !path.is_file() {
        return Err(CliError::Usage(format!(
            "config not found: {name_or_path} (not a preset — {} — and not a file)",
            PRESET_NAMES.join(", ")
        )));
    }
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read config {name_or_path}: {e}")))?;
    parse(&text, name_or_path)
}

fn parse(text: &str, origin: &str) -> Result<FileConfig, CliError> {
    toml::from_str(text).map_err(|e| CliError::Usage(format!("invalid config {origin}:\n{e}")))
}

/// On-disk schema. Every key is optional; omissions fall back to the
/// unattacked baseline. Unknown keys are rejected with their name.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub benign_mode: Option<BenignModeField>,
    pub threshold: Option<CaptureThreshold>,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub strategy: StrategySection,
    #[serde(default)]
    pub policy: PolicySection,
    #[serde(default)]
    pub sync: SyncSection,
}

/// `benign_mode = "distinct"` or `benign_mode = { universe_size = N }`.
#[derive(Debug, Clone, Copy)]
pub struct BenignModeField(pub BenignMode);

impl<'de> Deserialize<'de> for BenignModeField {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct UniverseSpec {
            universe_size: u32,
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Name(String),
            Universe(UniverseSpec),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Name(s) if s == "distinct" => Ok(BenignModeField(BenignMode::Distinct)),
            Repr::Name(s) => Err(D::Error::custom(format!(
                "benign_mode: expected \"distinct\" or {{ universe_size = N }}, got {s:?}"
            ))),
            Repr::Universe(u) => Ok(BenignModeField(BenignMode::FiniteUniverse(u.universe_size))),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub query_count: Option<u32>,
    pub interval_s: Option<u64>,
    pub start_s: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StrategySection {
    /// "none" | "deterministic" | "bernoulli"
    pub mode: Option<String>,
    /// Poisoning query index; deterministic mode only.
    pub k: Option<u32>,
    /// Per-query poisoning probability; bernoulli mode only.
    pub p: Option<f64>,
    pub payload: Option<PayloadSection>,
    pub mechanism_tag: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PayloadSection {
    /// Addresses per forged reply.
    #[serde(rename = "M")]
    pub address_count: Option<u32>,
    pub ttl_s: Option<u64>,
    pub enforce_wire_fit: Option<bool>,
    pub mtu: Option<u32>,
    pub qname: Option<String>,
    pub edns: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySection {
    pub enabled: Option<bool>,
    pub max_addresses: Option<u32>,
    pub max_ttl_s: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncSection {
    /// Servers queried per sync round: a count or "all".
    pub m: Option<SampleSize>,
    pub jitter_ms: Option<u64>,
    pub delta_ms: Option<i64>,
    pub rounds: Option<u32>,
}

fn usage(message: String) -> CliError {
    CliError::Usage(message)
}

impl FileConfig {
    /// Build the validated engine config. Field errors name their key.
    pub fn into_scenario(self) -> Result<ScenarioConfig, CliError> {
        let mode = match self.strategy.mode.as_deref().unwrap_or("none") {
            "none" => {
                if self.strategy.k.is_some() {
                    return Err(usage(
                        "strategy.k is only valid with mode = \"deterministic\"".into(),
                    ));
                }
                if self.strategy.p.is_some() {
                    return Err(usage(
                        "strategy.p is only valid with mode = \"bernoulli\"".into(),
                    ));
                }
                AttackMode::None
            }
            "deterministic" => {
                if self.strategy.p.is_some() {
                    return Err(usage(
                        "strategy.p is only valid with mode = \"bernoulli\"".into(),
                    ));
                }
                let k = self.strategy.k.ok_or_else(|| {
                    usage("strategy.k is required when mode = \"deterministic\"".into())
                })?;
                AttackMode::Deterministic { k }
            }
            "bernoulli" => {
                if self.strategy.k.is_some() {
                    return Err(usage(
                        "strategy.k is only valid with mode = \"deterministic\"".into(),
                    ));
                }
                let p = self.strategy.p.ok_or_else(|| {
                    usage("strategy.p is required when mode = \"bernoulli\"".into())
                })?;
                AttackMode::Bernoulli { p }
            }
            other => {
                return Err(usage(format!(
                    "strategy.mode: expected \"none\", \"deterministic\", or \"bernoulli\", \
                     got {other:?}"
                )))
            }
        };

        let payload_defaults = PayloadSpec::default();
        let wire_defaults = WireParams::default();
        let p = self.strategy.payload.unwrap_or_default();
        let payload = PayloadSpec {
            address_count: p.address_count.unwrap_or(payload_defaults.address_count),
            ttl_s: p.ttl_s.unwrap_or(payload_defaults.ttl_s),
            enforce_wire_fit: p
                .enforce_wire_fit
                .unwrap_or(payload_defaults.enforce_wire_fit),
            wire: WireParams {
                mtu: p.mtu.unwrap_or(wire_defaults.mtu),
                qname: p.qname.unwrap_or_else(|| wire_defaults.qname.clone()),
                edns: p.edns.unwrap_or(wire_defaults.edns),
                ..wire_defaults.clone()
            },
        };

        let strategy = AttackStrategy {
            mode,
            payload,
            mechanism_tag: self.strategy.mechanism_tag.unwrap_or_default(),
        };

        let schedule_defaults = QuerySchedule::default();
        let schedule = QuerySchedule {
            query_count: self
                .schedule
                .query_count
                .unwrap_or(schedule_defaults.query_count),
            interval_s: self
                .schedule
                .interval_s
                .unwrap_or(schedule_defaults.interval_s),
            start_s: self.schedule.start_s.unwrap_or(schedule_defaults.start_s),
        };

        let policy_defaults = MitigationPolicy::default();
        let policy = MitigationPolicy {
            enabled: self.policy.enabled.unwrap_or(policy_defaults.enabled),
            max_addresses: self
                .policy
                .max_addresses
                .unwrap_or(policy_defaults.max_addresses),
            max_ttl_s: self.policy.max_ttl_s.unwrap_or(policy_defaults.max_ttl_s),
        };

        let sync_defaults = SyncConfig::default();
        let sync = SyncConfig {
            sample_size_m: self.sync.m.unwrap_or(sync_defaults.sample_size_m),
            jitter_ms: self.sync.jitter_ms.unwrap_or(sync_defaults.jitter_ms),
            delta_ms: self.sync.delta_ms.unwrap_or(sync_defaults.delta_ms),
        };

        let scenario = ScenarioConfig {
            schedule,
            strategy,
            policy,
            sync,
            benign_mode: self.benign_mode.map_or(BenignMode::Distinct, |b| b.0),
            sync_rounds: self.sync.rounds.unwrap_or(1),
            threshold: self.threshold.unwrap_or(CaptureThreshold::StrictTwoThirds),
            seed: self.seed.unwrap_or(0),
            ..ScenarioConfig::default()
        };
        scenario.validate().map_err(|e| usage(e.to_string()))?;
        Ok(scenario)
    }
}
