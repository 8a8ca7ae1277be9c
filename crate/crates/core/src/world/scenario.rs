use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use rand::Rng;

use crate::mac::MacConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Baseline,
    Fuzzy,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "baseline",
            Mode::Fuzzy => "fuzzy",
        }
    }

    pub fn from_name(name: &str) -> Option<Mode> {
        match name {
            "baseline" => Some(Mode::Baseline),
            "fuzzy" => Some(Mode::Fuzzy),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

impl Area {
    pub fn contains(&self, (x, y): (f64, f64)) -> bool {
        (0.0..=self.width).contains(&x) && (0.0..=self.height).contains(&y)
    }

    pub fn center(&self) -> (f64, f64) {
        (self.width / 2.0, self.height / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhyParams {
    /// Watts.
    pub tx_power: f64,
    /// Hz.
    pub frequency: f64,
    pub path_loss_exponent: f64,
    pub sensitivity_dbm: f64,
    /// Chance that a frame which survived the collision check is still lost.
    pub bit_error_probability: f64,
}

impl Default for PhyParams {
    fn default() -> Self {
        PhyParams {
            tx_power: 0.1,
            frequency: 5.89e9,
            path_loss_exponent: 2.0,
            sensitivity_dbm: -89.0,
            bit_error_probability: 0.0,
        }
    }
}

/// Kumaraswamy(a, b) on `[0, 1]`; `a = b = 1` is uniform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainDistribution {
    pub a: f64,
    pub b: f64,
}

impl Default for GainDistribution {
    fn default() -> Self {
        GainDistribution { a: 1.0, b: 1.0 }
    }
}

impl GainDistribution {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.gen();
        let x = libm::pow(1.0 - libm::pow(1.0 - u, 1.0 / self.b), 1.0 / self.a);
        x.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub area: Area,
    pub vehicle_count: u32,
    /// m/s, inclusive.
    pub speed_range: (f64, f64),
    /// bits/s.
    pub bitrate: f64,
    /// Seconds.
    pub duration: f64,
    pub beacon_interval: f64,
    pub beacon_bits: u32,
    pub data_bits: u32,
    pub wsa_bits: u32,
    pub accidents: u32,
    pub accident_halt: f64,
    pub rsu_count: u32,
    /// Whether RSUs send periodic beacons like vehicles do.
    pub rsu_beacons: bool,
    /// Chance per beacon interval that a vehicle asks the RSU for services.
    pub wsa_probability: f64,
    pub mode: Mode,
    /// Output term the gate must reach, by label.
    pub acceptance: String,
    pub seed: u64,
    pub phy: PhyParams,
    pub mac: MacConfig,
    pub mobility_tick: f64,
    pub neighbor_expiry: f64,
    pub gain: GainDistribution,
}

pub const MAX_VEHICLES: u32 = 100_000;
pub const MAX_RSUS: u32 = 1_000;

/// Fixed default seed, so runs never depend on the wall clock.
pub const DEFAULT_SEED: u64 = 20_230_101;

impl Scenario {
    fn common(name: &str) -> Self {
        Scenario {
            name: name.into(),
            area: Area { width: 100.0, height: 100.0 },
            vehicle_count: 0,
            speed_range: (0.0, 0.0),
            bitrate: 6e6,
            duration: 200.0,
            beacon_interval: 1.0,
            beacon_bits: 256,
            data_bits: 1024,
            wsa_bits: 256,
            accidents: 10,
            accident_halt: 10.0,
            rsu_count: 1,
            rsu_beacons: true,
            wsa_probability: 0.1,
            mode: Mode::Baseline,
            acceptance: "Good".into(),
            seed: DEFAULT_SEED,
            phy: PhyParams::default(),
            mac: MacConfig::default(),
            mobility_tick: 0.1,
            neighbor_expiry: 5.0,
            gain: GainDistribution::default(),
        }
    }

    /// Low-speed campus grid: 44 vehicles at 0-30 km/h, 6 Mbps.
    pub fn scenario1() -> Self {
        Scenario {
            area: Area { width: 20.0, height: 100.0 },
            vehicle_count: 44,
            speed_range: (0.0, 8.33),
            bitrate: 6e6,
            acceptance: "Good".into(),
            ..Self::common("scenario1")
        }
    }

    /// Denser town traffic: 193 vehicles at 0-80 km/h, 27 Mbps.
    pub fn scenario2() -> Self {
        Scenario {
            area: Area { width: 100.0, height: 100.0 },
            vehicle_count: 193,
            speed_range: (0.0, 22.2),
            bitrate: 27e6,
            acceptance: "VGood".into(),
            ..Self::common("scenario2")
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "scenario1" => Some(Self::scenario1()),
            "scenario2" => Some(Self::scenario2()),
            _ => None,
        }
    }

    pub fn node_count(&self) -> u32 {
        self.vehicle_count + self.rsu_count
    }

    /// Beacons each node sends over the run.
    pub fn beacons_per_node(&self) -> u64 {
        libm::floor(self.duration / self.beacon_interval) as u64
    }

    /// Every problem found, keyed by configuration field.
    pub fn validate(&self) -> Result<(), Vec<ScenarioError>> {
        let mut errs = Vec::new();
        let mut check = |ok: bool, key: &'static str, reason: &'static str| {
            if !ok {
                errs.push(ScenarioError { key, reason });
            }
        };
        let pos = |x: f64| x > 0.0 && x.is_finite();
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        check(!self.name.is_empty(), "name", "must not be empty");
        check(pos(self.area.width), "area.width", "must be positive");
        check(pos(self.area.height), "area.height", "must be positive");
        let (lo, hi) = self.speed_range;
        check(lo >= 0.0 && lo.is_finite(), "speed_range.min", "must be non-negative");
        check(hi >= lo && hi.is_finite(), "speed_range.max", "must be at least the minimum");
        check(self.vehicle_count <= MAX_VEHICLES, "vehicle_count", "too many vehicles");
        check(self.rsu_count <= MAX_RSUS, "rsu_count", "too many RSUs");
        check(pos(self.bitrate), "bitrate", "must be positive");
        check(pos(self.duration), "duration", "must be positive");
        check(pos(self.beacon_interval), "beacon_interval", "must be positive");
        check(self.beacon_bits > 0, "beacon_bits", "must be positive");
        check(self.data_bits > 0, "data_bits", "must be positive");
        check(self.wsa_bits > 0, "wsa_bits", "must be positive");
        check(self.accidents == 0 || self.vehicle_count > 0, "accidents", "need at least one vehicle");
        check(self.accident_halt >= 0.0 && self.accident_halt.is_finite(), "accident_halt", "must be non-negative");
        check(unit(self.wsa_probability), "wsa_probability", "must lie in [0, 1]");
        check(self.wsa_probability == 0.0 || self.rsu_count > 0, "wsa_probability", "service requests need an RSU");
        check(!self.acceptance.is_empty(), "acceptance", "must name an output term");
        check(pos(self.phy.tx_power), "phy.tx_power", "must be positive");
        check(pos(self.phy.frequency), "phy.frequency", "must be positive");
        check(pos(self.phy.path_loss_exponent), "phy.path_loss_exponent", "must be positive");
        check(self.phy.sensitivity_dbm.is_finite(), "phy.sensitivity_dbm", "must be finite");
        check(unit(self.phy.bit_error_probability), "phy.bit_error_probability", "must lie in [0, 1]");
        check(pos(self.mobility_tick), "mobility_tick", "must be positive");
        check(pos(self.neighbor_expiry), "neighbor_expiry", "must be positive");
        check(pos(self.gain.a), "gain.a", "must be positive");
        check(pos(self.gain.b), "gain.b", "must be positive");
        let mac_key = match self.mac.validate() {
            Ok(()) => None,
            Err(_) if !self.mac.cw_min.checked_add(1).is_some_and(u32::is_power_of_two) => Some("mac.cw_min"),
            Err(_) if !self.mac.cw_max.checked_add(1).is_some_and(u32::is_power_of_two) => Some("mac.cw_max"),
            Err(_) if self.mac.cw_min > self.mac.cw_max => Some("mac.cw_min"),
            Err(_) if !pos(self.mac.timings.slot_time) => Some("mac.slot_time"),
            Err(_) => Some("mac.aifs"),
        };
        if let Some(key) = mac_key {
            errs.push(ScenarioError { key, reason: "invalid contention or timing setting" });
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(errs)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScenarioError {
    pub key: &'static str,
    pub reason: &'static str,
}

impl fmt::Display for ScenarioError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.key, self.reason)
    }
}
