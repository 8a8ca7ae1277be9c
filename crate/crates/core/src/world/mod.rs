//! Scenario setup, node state, random-waypoint mobility and neighbor
//! knowledge.

mod scenario;

pub use scenario::{Area, GainDistribution, Mode, PhyParams, Scenario, ScenarioError, DEFAULT_SEED};

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use rand::Rng;

use crate::mac::{MacMode, MacState};
use crate::metrics::{MetricsLedger, NodeKind};
use crate::phy::{ChannelState, NodeId, OriginId};
use crate::sim::{Purpose, RngStreams, GLOBAL};

/// Receiver gain assumed when no neighbor has been heard recently.
pub const FALLBACK_RECEIVER_GAIN: f64 = 0.5;

/// What a node last heard from one neighbor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeighborEntry {
    pub last_heard: f64,
    pub gain: f64,
    pub position: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub id: NodeId,
    pub kind: NodeKind,
    /// Position at the start of the current mobility tick.
    from: (f64, f64),
    /// Position at the end of the current mobility tick.
    to: (f64, f64),
    tick_start: f64,
    tick_len: f64,
    pub waypoint: (f64, f64),
    /// Current speed, 0 while halted.
    pub speed: f64,
    /// Speed to resume after a halt.
    cruise_speed: f64,
    pub halted_until: Option<f64>,
    pub sender_gain: f64,
    pub neighbors: BTreeMap<NodeId, NeighborEntry>,
    pub mac: MacState,
    pub channel: ChannelState,
    pub metrics: MetricsLedger,
    /// Messages this node created or already rebroadcast.
    pub seen_origins: BTreeSet<OriginId>,
    /// Service requests already answered (RSU only).
    pub answered: BTreeSet<OriginId>,
}

impl NodeState {
    fn new(id: NodeId, kind: NodeKind, position: (f64, f64), mac: MacState) -> Self {
        NodeState {
            id,
            kind,
            from: position,
            to: position,
            tick_start: 0.0,
            tick_len: 0.0,
            waypoint: position,
            speed: 0.0,
            cruise_speed: 0.0,
            halted_until: None,
            sender_gain: 0.0,
            neighbors: BTreeMap::new(),
            mac,
            channel: ChannelState::new(),
            metrics: MetricsLedger::new(),
            seen_origins: BTreeSet::new(),
            answered: BTreeSet::new(),
        }
    }

    pub fn is_vehicle(&self) -> bool {
        self.kind == NodeKind::Vehicle
    }

    /// Position at `now`, interpolated within the current mobility tick.
    pub fn position_at(&self, now: f64) -> (f64, f64) {
        if self.tick_len <= 0.0 {
            return self.to;
        }
        let f = ((now - self.tick_start) / self.tick_len).clamp(0.0, 1.0);
        (self.from.0 + (self.to.0 - self.from.0) * f, self.from.1 + (self.to.1 - self.from.1) * f)
    }

    /// Gain of the closest neighbor heard within `expiry` seconds, by last
    /// known position.
    pub fn nearest_neighbor_gain(&self, now: f64, expiry: f64) -> f64 {
        let here = self.position_at(now);
        let mut best: Option<(f64, f64)> = None;
        for e in self.neighbors.values() {
            if now - e.last_heard > expiry {
                continue;
            }
            let d = distance(here, e.position);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, e.gain));
            }
        }
        best.map_or(FALLBACK_RECEIVER_GAIN, |(_, g)| g)
    }

    pub fn hear(&mut self, from: NodeId, entry: NeighborEntry) {
        self.neighbors.insert(from, entry);
    }

    /// Stops the vehicle where it is until `until`.
    pub fn halt(&mut self, now: f64, until: f64) {
        let here = self.position_at(now);
        if self.halted_until.is_none() {
            self.cruise_speed = self.speed;
        }
        self.from = here;
        self.to = here;
        self.tick_start = now;
        self.tick_len = 0.0;
        self.speed = 0.0;
        self.halted_until = Some(self.halted_until.map_or(until, |u| u.max(until)));
    }

    /// Ends a halt if its window is over. Returns whether the node resumed.
    pub fn resume(&mut self, now: f64) -> bool {
        match self.halted_until {
            Some(u) if now >= u => {
                self.halted_until = None;
                self.speed = self.cruise_speed;
                true
            }
            _ => false,
        }
    }
}

pub fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    libm::hypot(a.0 - b.0, a.1 - b.1)
}

/// Moves from `pos` toward `target` by at most `speed * dt`. Returns the new
/// position and the time left over if the target was reached.
pub fn advance_toward(pos: (f64, f64), target: (f64, f64), speed: f64, dt: f64) -> ((f64, f64), Option<f64>) {
    let d = distance(pos, target);
    let reach = speed * dt;
    if speed <= 0.0 || dt <= 0.0 {
        return (pos, None);
    }
    if reach < d {
        let f = reach / d;
        return ((pos.0 + (target.0 - pos.0) * f, pos.1 + (target.1 - pos.1) * f), None);
    }
    (target, Some(dt - d / speed))
}

/// Mirrors a coordinate back into `[0, limit]`.
fn reflect(x: f64, limit: f64) -> f64 {
    let period = 2.0 * limit;
    let m = x - period * libm::floor(x / period);
    if m > limit {
        period - m
    } else {
        m
    }
}

/// A scheduled accident.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Accident {
    pub time: f64,
    pub vehicle: NodeId,
}

#[derive(Debug, Clone)]
pub struct World {
    pub scenario: Scenario,
    pub nodes: Vec<NodeState>,
    pub accidents: Vec<Accident>,
}

fn draw_in<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.gen_range(lo..=hi)
    } else {
        lo
    }
}

fn draw_point<R: Rng + ?Sized>(rng: &mut R, area: &Area) -> (f64, f64) {
    (draw_in(rng, 0.0, area.width), draw_in(rng, 0.0, area.height))
}

impl World {
    /// Places vehicles uniformly with uniform speeds, RSUs along the
    /// horizontal center line (one RSU sits at the area center), and draws
    /// the accident schedule. Vehicles take ids `0..vehicle_count`, RSUs
    /// follow.
    pub fn build(scenario: Scenario, mac_mode: MacMode, streams: &mut RngStreams) -> Result<World, Vec<ScenarioError>> {
        scenario.validate()?;
        let mac = MacState::new(scenario.mac, mac_mode)
            .map_err(|_| alloc::vec![ScenarioError { key: "mac", reason: "invalid MAC configuration" }])?;
        let area = scenario.area;
        let (lo, hi) = scenario.speed_range;
        let mut nodes = Vec::with_capacity(scenario.node_count() as usize);
        for id in 0..scenario.vehicle_count {
            let rng = streams.get(Purpose::Placement, id);
            let pos = draw_point(rng, &area);
            let waypoint = draw_point(rng, &area);
            let speed = draw_in(rng, lo, hi);
            let mut n = NodeState::new(id, NodeKind::Vehicle, pos, mac.clone());
            n.waypoint = waypoint;
            n.speed = speed;
            n.cruise_speed = speed;
            n.sender_gain = scenario.gain.sample(streams.get(Purpose::Gain, id));
            nodes.push(n);
        }
        let rsus = scenario.rsu_count;
        for k in 0..rsus {
            let id = scenario.vehicle_count + k;
            let x = area.width * f64::from(k + 1) / f64::from(rsus + 1);
            let mut n = NodeState::new(id, NodeKind::Rsu, (x, area.height / 2.0), mac.clone());
            n.sender_gain = scenario.gain.sample(streams.get(Purpose::Gain, id));
            nodes.push(n);
        }
        let rng = streams.get(Purpose::Accident, GLOBAL);
        let mut accidents: Vec<Accident> = (0..scenario.accidents)
            .map(|_| Accident {
                time: rng.gen_range(0.0..scenario.duration),
                vehicle: rng.gen_range(0..scenario.vehicle_count),
            })
            .collect();
        accidents.sort_by(|a, b| a.time.total_cmp(&b.time).then(a.vehicle.cmp(&b.vehicle)));
        Ok(World { scenario, nodes, accidents })
    }

    pub fn node(&self, id: NodeId) -> &NodeState {
        &self.nodes[id as usize]
    }

    pub fn node_mut(&mut self, id: NodeId) -> &mut NodeState {
        &mut self.nodes[id as usize]
    }

    /// Random waypoint over `[now, now + dt]`: each moving vehicle heads for
    /// its waypoint at its speed and, on arrival, draws a new waypoint and
    /// speed and keeps going for the rest of the tick. Halted vehicles and
    /// RSUs stay put.
    pub fn step_mobility(&mut self, now: f64, dt: f64, streams: &mut RngStreams) {
        let area = self.scenario.area;
        let (lo, hi) = self.scenario.speed_range;
        for n in self.nodes.iter_mut() {
            let here = n.position_at(now);
            n.from = here;
            n.to = here;
            n.tick_start = now;
            n.tick_len = dt;
            if !n.is_vehicle() || n.halted_until.is_some() {
                continue;
            }
            let mut pos = here;
            let mut left = dt;
            // A vehicle reaches at most a handful of waypoints per tick; the
            // cap guards against pathological tiny-distance draws.
            for _ in 0..64 {
                let (p, rest) = advance_toward(pos, n.waypoint, n.speed, left);
                pos = p;
                let Some(rest) = rest else { break };
                let rng = streams.get(Purpose::Mobility, n.id);
                n.waypoint = draw_point(rng, &area);
                n.speed = draw_in(rng, lo, hi);
                n.cruise_speed = n.speed;
                left = rest;
                if left <= 0.0 {
                    break;
                }
            }
            n.to = (reflect(pos.0, area.width), reflect(pos.1, area.height));
        }
    }
}
