//! Scenario files: TOML documents that start from a preset and override any
//! subset of its keys.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Deserialize;
use toml::Spanned;
use v2x_fuzzy_core::world::{Mode, Scenario};

use crate::issues::{ConfigErrors, ConfigIssue, SourceMap};

pub const SCENARIO1_TOML: &str = include_str!("../assets/scenario1.toml");
pub const SCENARIO2_TOML: &str = include_str!("../assets/scenario2.toml");

type Field<T> = Option<Spanned<T>>;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    preset: Field<String>,
    name: Field<String>,
    vehicle_count: Field<u32>,
    rsu_count: Field<u32>,
    rsu_beacons: Field<bool>,
    duration: Field<f64>,
    bitrate: Field<f64>,
    beacon_interval: Field<f64>,
    beacon_bits: Field<u32>,
    data_bits: Field<u32>,
    wsa_bits: Field<u32>,
    wsa_probability: Field<f64>,
    accidents: Field<u32>,
    accident_halt: Field<f64>,
    mode: Field<String>,
    acceptance: Field<String>,
    seed: Field<Seed>,
    mobility_tick: Field<f64>,
    neighbor_expiry: Field<f64>,
    area: Option<RawArea>,
    speed_range: Option<RawRange>,
    phy: Option<RawPhy>,
    mac: Option<RawMac>,
    gain: Option<RawGain>,
}

/// TOML integers stop at `i64::MAX`, so larger seeds are written as strings.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Seed {
    Int(u64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawArea {
    width: Field<f64>,
    height: Field<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRange {
    min: Field<f64>,
    max: Field<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhy {
    tx_power: Field<f64>,
    frequency: Field<f64>,
    path_loss_exponent: Field<f64>,
    sensitivity_dbm: Field<f64>,
    bit_error_probability: Field<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMac {
    cw_min: Field<u32>,
    cw_max: Field<u32>,
    slot_time: Field<f64>,
    aifs: Field<f64>,
    collision_doubling: Field<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGain {
    a: Field<f64>,
    b: Field<f64>,
}

/// A scenario plus where each of its keys was set.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    /// Key to location, for keys set explicitly.
    pub origins: BTreeMap<String, String>,
    /// Where unset keys come from.
    pub fallback: String,
}

impl LoadedScenario {
    pub fn from_preset(name: &str) -> Option<Self> {
        Scenario::preset(name).map(|scenario| LoadedScenario {
            scenario,
            origins: BTreeMap::new(),
            fallback: format!("preset {name}"),
        })
    }

    pub fn location_of(&self, key: &str) -> String {
        self.origins.get(key).cloned().unwrap_or_else(|| self.fallback.clone())
    }

    /// Records a command-line override.
    pub fn set_origin(&mut self, key: &str, location: &str) {
        self.origins.insert(key.to_string(), location.to_string());
    }

    /// Runs scenario validation and attaches locations to every finding.
    pub fn validate(&self) -> Result<(), ConfigErrors> {
        self.scenario.validate().map_err(|errs| {
            ConfigErrors(
                errs.into_iter()
                    .map(|e| ConfigIssue {
                        key: e.key.to_string(),
                        location: self.location_of(e.key),
                        message: e.reason.to_string(),
                    })
                    .collect(),
            )
        })
    }
}

/// Parses a scenario document. Keys it leaves out keep the values of its
/// `preset` (default `scenario1`). Does not run semantic validation.
pub fn parse_scenario(text: &str, path: &str) -> Result<LoadedScenario, ConfigErrors> {
    let map = SourceMap { path, text };
    let raw: RawScenario = toml::from_str(text).map_err(|e| ConfigErrors(vec![map.parse_issue(&e)]))?;
    let mut issues = Vec::new();
    let preset_name = raw.preset.as_ref().map_or("scenario1", |p| p.get_ref().as_str()).to_string();
    let Some(mut loaded) = LoadedScenario::from_preset(&preset_name) else {
        let loc = raw.preset.as_ref().map_or_else(|| path.to_string(), |p| map.locate(p.span()));
        return Err(ConfigErrors(vec![ConfigIssue {
            key: "preset".into(),
            location: loc,
            message: format!("unknown preset `{preset_name}`"),
        }]));
    };
    let s = &mut loaded.scenario;
    let origins = &mut loaded.origins;
    let mut take = |key: &str, span: std::ops::Range<usize>| {
        origins.insert(key.to_string(), map.locate(span));
    };
    macro_rules! set {
        ($raw:expr, $key:literal, $dst:expr) => {
            if let Some(v) = $raw {
                take($key, v.span());
                $dst = v.into_inner();
            }
        };
    }
    set!(raw.name, "name", s.name);
    set!(raw.vehicle_count, "vehicle_count", s.vehicle_count);
    set!(raw.rsu_count, "rsu_count", s.rsu_count);
    set!(raw.rsu_beacons, "rsu_beacons", s.rsu_beacons);
    set!(raw.duration, "duration", s.duration);
    set!(raw.bitrate, "bitrate", s.bitrate);
    set!(raw.beacon_interval, "beacon_interval", s.beacon_interval);
    set!(raw.beacon_bits, "beacon_bits", s.beacon_bits);
    set!(raw.data_bits, "data_bits", s.data_bits);
    set!(raw.wsa_bits, "wsa_bits", s.wsa_bits);
    set!(raw.wsa_probability, "wsa_probability", s.wsa_probability);
    set!(raw.accidents, "accidents", s.accidents);
    set!(raw.accident_halt, "accident_halt", s.accident_halt);
    set!(raw.acceptance, "acceptance", s.acceptance);
    set!(raw.mobility_tick, "mobility_tick", s.mobility_tick);
    set!(raw.neighbor_expiry, "neighbor_expiry", s.neighbor_expiry);
    if let Some(m) = raw.mode {
        let loc = map.locate(m.span());
        take("mode", m.span());
        match Mode::from_name(m.get_ref()) {
            Some(mode) => s.mode = mode,
            None => issues.push(ConfigIssue {
                key: "mode".into(),
                location: loc,
                message: format!("expected `baseline` or `fuzzy`, found `{}`", m.get_ref()),
            }),
        }
    }
    if let Some(seed) = raw.seed {
        let loc = map.locate(seed.span());
        take("seed", seed.span());
        match seed.into_inner() {
            Seed::Int(v) => s.seed = v,
            Seed::Text(t) => match t.parse() {
                Ok(v) => s.seed = v,
                Err(_) => issues.push(ConfigIssue {
                    key: "seed".into(),
                    location: loc,
                    message: format!("`{t}` is not an unsigned 64-bit integer"),
                }),
            },
        }
    }
    if let Some(a) = raw.area {
        set!(a.width, "area.width", s.area.width);
        set!(a.height, "area.height", s.area.height);
    }
    if let Some(r) = raw.speed_range {
        set!(r.min, "speed_range.min", s.speed_range.0);
        set!(r.max, "speed_range.max", s.speed_range.1);
    }
    if let Some(p) = raw.phy {
        set!(p.tx_power, "phy.tx_power", s.phy.tx_power);
        set!(p.frequency, "phy.frequency", s.phy.frequency);
        set!(p.path_loss_exponent, "phy.path_loss_exponent", s.phy.path_loss_exponent);
        set!(p.sensitivity_dbm, "phy.sensitivity_dbm", s.phy.sensitivity_dbm);
        set!(p.bit_error_probability, "phy.bit_error_probability", s.phy.bit_error_probability);
    }
    if let Some(m) = raw.mac {
        set!(m.cw_min, "mac.cw_min", s.mac.cw_min);
        set!(m.cw_max, "mac.cw_max", s.mac.cw_max);
        set!(m.slot_time, "mac.slot_time", s.mac.timings.slot_time);
        set!(m.aifs, "mac.aifs", s.mac.timings.aifs);
        set!(m.collision_doubling, "mac.collision_doubling", s.mac.collision_doubling);
    }
    if let Some(g) = raw.gain {
        set!(g.a, "gain.a", s.gain.a);
        set!(g.b, "gain.b", s.gain.b);
    }
    loaded.fallback = format!("preset {preset_name}");
    if issues.is_empty() {
        Ok(loaded)
    } else {
        Err(ConfigErrors(issues))
    }
}

/// Writes every key of `s`, so the document reproduces it exactly.
pub fn scenario_to_toml(s: &Scenario) -> String {
    let mut o = String::new();
    let seed = if s.seed <= i64::MAX as u64 { s.seed.to_string() } else { format!("\"{}\"", s.seed) };
    let _ = writeln!(o, "name = {}", quote(&s.name));
    let _ = writeln!(o, "vehicle_count = {}", s.vehicle_count);
    let _ = writeln!(o, "rsu_count = {}", s.rsu_count);
    let _ = writeln!(o, "rsu_beacons = {}", s.rsu_beacons);
    let _ = writeln!(o, "duration = {:?}", s.duration);
    let _ = writeln!(o, "bitrate = {:?}", s.bitrate);
    let _ = writeln!(o, "beacon_interval = {:?}", s.beacon_interval);
    let _ = writeln!(o, "beacon_bits = {}", s.beacon_bits);
    let _ = writeln!(o, "data_bits = {}", s.data_bits);
    let _ = writeln!(o, "wsa_bits = {}", s.wsa_bits);
    let _ = writeln!(o, "wsa_probability = {:?}", s.wsa_probability);
    let _ = writeln!(o, "accidents = {}", s.accidents);
    let _ = writeln!(o, "accident_halt = {:?}", s.accident_halt);
    let _ = writeln!(o, "mode = {}", quote(s.mode.name()));
    let _ = writeln!(o, "acceptance = {}", quote(&s.acceptance));
    let _ = writeln!(o, "seed = {seed}");
    let _ = writeln!(o, "mobility_tick = {:?}", s.mobility_tick);
    let _ = writeln!(o, "neighbor_expiry = {:?}", s.neighbor_expiry);
    let _ = writeln!(o, "\n[area]\nwidth = {:?}\nheight = {:?}", s.area.width, s.area.height);
    let _ = writeln!(o, "\n[speed_range]\nmin = {:?}\nmax = {:?}", s.speed_range.0, s.speed_range.1);
    let p = &s.phy;
    let _ = writeln!(
        o,
        "\n[phy]\ntx_power = {:?}\nfrequency = {:?}\npath_loss_exponent = {:?}\nsensitivity_dbm = {:?}\nbit_error_probability = {:?}",
        p.tx_power, p.frequency, p.path_loss_exponent, p.sensitivity_dbm, p.bit_error_probability
    );
    let m = &s.mac;
    let _ = writeln!(
        o,
        "\n[mac]\ncw_min = {}\ncw_max = {}\nslot_time = {:?}\naifs = {:?}\ncollision_doubling = {}",
        m.cw_min, m.cw_max, m.timings.slot_time, m.timings.aifs, m.collision_doubling
    );
    let _ = writeln!(o, "\n[gain]\na = {:?}\nb = {:?}", s.gain.a, s.gain.b);
    o
}

pub(crate) fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}
