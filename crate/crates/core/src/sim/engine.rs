use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use rand::Rng;
use thiserror::Error;

use super::queue::EventQueue;
use super::rng::{Purpose, RngStreams};
use crate::fuzzy::{FisDefinition, FuzzyError, VehicleStatus};
use crate::mac::{AccessDecision, AccessPhase, MacMode, SlotOutcome, SlotSense, SubmitOutcome, TxOutcome};
use crate::metrics::{union_measure, Metric, NodeKind, NodeReport, RunSummary};
use crate::phy::{
    dbm_to_watts, frame_airtime, received_power_exp, Frame, FrameId, FrameKind, NodeId, OriginId, Provenance,
    ReceptionOutcome,
};
use crate::world::{Mode, NeighborEntry, Scenario, ScenarioError, World};

/// Slack for comparing sensed idle time against slot and AIFS lengths.
const SENSE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid scenario: {}", join(.0))]
    Scenario(Vec<ScenarioError>),
    #[error("acceptance level: {0}")]
    Acceptance(FuzzyError),
    #[error("transmit gate: {0}")]
    Fis(FuzzyError),
}

fn join(errs: &[ScenarioError]) -> String {
    use core::fmt::Write;
    let mut s = String::new();
    for (i, e) in errs.iter().enumerate() {
        if i > 0 {
            s.push_str("; ");
        }
        let _ = write!(s, "{e}");
    }
    s
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SimEvent {
    MobilityTick {
        index: u64,
    },
    BeaconDue {
        node: NodeId,
        index: u64,
    },
    WsaDue {
        node: NodeId,
    },
    AccidentStart {
        vehicle: NodeId,
    },
    AccidentEnd {
        vehicle: NodeId,
    },
    AifsDone {
        node: NodeId,
    },
    SlotTick {
        node: NodeId,
    },
    /// Only reported to the trace; transmissions start inline.
    FrameStart {
        node: NodeId,
        frame: FrameId,
        kind: FrameKind,
        origin: OriginId,
        hops: u32,
    },
    FrameEnd {
        frame: FrameId,
    },
}

/// One processed event, as handed to the trace sink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord<'a> {
    pub time: f64,
    /// `None` for events that never went through the queue.
    pub seq: Option<u64>,
    pub event: &'a SimEvent,
}

pub type TraceSink = Box<dyn FnMut(&TraceRecord<'_>) + Send>;

/// Appends `[start, end]` to time-ordered intervals, joining it to the last
/// one when they touch.
fn push_merged(v: &mut Vec<(f64, f64)>, start: f64, end: f64) {
    match v.last_mut() {
        Some(last) if last.1 + SENSE_EPS >= start => last.1 = last.1.max(end),
        _ => v.push((start, end)),
    }
}

/// Reception bookkeeping over every completed transmission.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Tally {
    pub completed_transmissions: u64,
    pub delivered: u64,
    pub lost_collision: u64,
    pub below_sensitivity: u64,
    pub lost_bit_error: u64,
    pub collided_transmissions: u64,
    /// Transmissions whose receptions did not cover every other node once.
    pub conservation_violations: u64,
    pub rebroadcasts: u64,
    pub wsa_responses: u64,
}

impl Tally {
    pub fn receptions(&self) -> u64 {
        self.delivered + self.lost_collision + self.below_sensitivity + self.lost_bit_error
    }
}

#[derive(Debug, Clone)]
struct InFlight {
    frame: Frame,
    sender_position: (f64, f64),
    /// Nodes that sensed the frame above sensitivity.
    receivers: Vec<NodeId>,
    below_sensitivity: u64,
}

#[derive(Debug)]
pub struct RunOutput {
    pub nodes: Vec<NodeReport>,
    pub summary: RunSummary,
    pub tally: Tally,
    pub end_time: f64,
    pub events_processed: u64,
    /// Frames still waiting for channel access when the run ended, per node.
    pub queued_at_end: Vec<usize>,
}

/// One simulation run. Single-threaded and fully determined by the
/// scenario, its seed and the gate definition.
pub struct Simulation {
    world: World,
    fis: FisDefinition,
    queue: EventQueue<SimEvent>,
    streams: RngStreams,
    in_flight: BTreeMap<FrameId, InFlight>,
    /// Frozen backoff slots per node, merged as they arrive.
    mac_busy: Vec<Vec<(f64, f64)>>,
    tally: Tally,
    trace: Option<TraceSink>,
    next_frame: u64,
    next_origin: u64,
    sensitivity: f64,
    /// Offset of each node's beacon schedule within the interval.
    beacon_phase: Vec<f64>,
    /// End of the current `step` window.
    horizon: f64,
    events_processed: u64,
}

impl core::fmt::Debug for Simulation {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("Simulation")
            .field("scenario", &self.world.scenario.name)
            .field("now", &self.queue.now())
            .field("pending", &self.queue.len())
            .finish_non_exhaustive()
    }
}

impl Simulation {
    pub fn new(scenario: Scenario, fis: FisDefinition) -> Result<Self, SimError> {
        fis.validate().map_err(SimError::Fis)?;
        let mac_mode = match scenario.mode {
            Mode::Baseline => MacMode::Baseline,
            Mode::Fuzzy => {
                MacMode::Fuzzy { acceptance: fis.output_term(&scenario.acceptance).map_err(SimError::Acceptance)? }
            }
        };
        let mut streams = RngStreams::new(scenario.seed);
        let world = World::build(scenario, mac_mode, &mut streams).map_err(SimError::Scenario)?;
        let n = world.nodes.len();
        let sensitivity = dbm_to_watts(world.scenario.phy.sensitivity_dbm);
        let mut sim = Simulation {
            world,
            fis,
            queue: EventQueue::new(),
            streams,
            in_flight: BTreeMap::new(),
            mac_busy: alloc::vec![Vec::new(); n],
            tally: Tally::default(),
            trace: None,
            next_frame: 0,
            next_origin: 0,
            sensitivity,
            beacon_phase: alloc::vec![0.0; n],
            horizon: 0.0,
            events_processed: 0,
        };
        sim.schedule_initial();
        Ok(sim)
    }

    fn schedule_initial(&mut self) {
        let s = &self.world.scenario;
        let interval = s.beacon_interval;
        let beacons = s.beacons_per_node();
        let mut initial = alloc::vec![(0.0, SimEvent::MobilityTick { index: 0 })];
        if beacons > 0 {
            for n in &self.world.nodes {
                let phase = self.streams.get(Purpose::Traffic, n.id).gen_range(0.0..interval);
                self.beacon_phase[n.id as usize] = phase;
                initial.push((phase, SimEvent::BeaconDue { node: n.id, index: 0 }));
            }
        }
        for a in &self.world.accidents {
            initial.push((a.time, SimEvent::AccidentStart { vehicle: a.vehicle }));
        }
        for (t, e) in initial {
            self.schedule(t, e);
        }
    }

    pub fn set_trace(&mut self, sink: TraceSink) {
        self.trace = Some(sink);
    }

    pub fn world(&self) -> &World {
        &self.world
    }

    pub fn now(&self) -> f64 {
        self.queue.now()
    }

    pub fn tally(&self) -> &Tally {
        &self.tally
    }

    fn schedule(&mut self, time: f64, event: SimEvent) {
        self.queue.schedule(time, event).expect("handlers only schedule at or after the clock");
    }

    fn emit(&mut self, time: f64, seq: Option<u64>, event: &SimEvent) {
        if let Some(sink) = self.trace.as_mut() {
            sink(&TraceRecord { time, seq, event });
        }
    }

    /// Processes the next event if it is due before `t_end`. Returns its time.
    pub fn step(&mut self, t_end: f64) -> Option<f64> {
        self.horizon = t_end;
        if !self.queue.peek_time().is_some_and(|t| t < t_end) {
            return None;
        }
        let (time, seq, event) = self.queue.pop()?;
        self.events_processed += 1;
        self.emit(time, Some(seq), &event);
        self.handle(time, event);
        Some(time)
    }

    /// Runs every event due before `t_end`, then freezes the ledgers.
    pub fn run_until(mut self, t_end: f64) -> RunOutput {
        while self.step(t_end).is_some() {}
        self.finish(t_end)
    }

    /// Runs for the scenario's duration.
    pub fn run(self) -> RunOutput {
        let d = self.world.scenario.duration;
        self.run_until(d)
    }

    fn handle(&mut self, now: f64, event: SimEvent) {
        match event {
            SimEvent::MobilityTick { index } => {
                let dt = self.world.scenario.mobility_tick;
                self.world.step_mobility(now, dt, &mut self.streams);
                self.schedule((index + 1) as f64 * dt, SimEvent::MobilityTick { index: index + 1 });
            }
            SimEvent::BeaconDue { node, index } => self.on_beacon(now, node, index),
            SimEvent::WsaDue { node } => {
                let bits = self.world.scenario.wsa_bits;
                self.originate(now, node, FrameKind::WsaRequest, bits);
            }
            SimEvent::AccidentStart { vehicle } => {
                let halt = self.world.scenario.accident_halt;
                self.world.node_mut(vehicle).halt(now, now + halt);
                self.schedule(now + halt, SimEvent::AccidentEnd { vehicle });
                let bits = self.world.scenario.data_bits;
                self.originate(now, vehicle, FrameKind::Bsm, bits);
            }
            SimEvent::AccidentEnd { vehicle } => {
                self.world.node_mut(vehicle).resume(now);
            }
            SimEvent::AifsDone { node } => self.on_aifs_done(now, node),
            SimEvent::SlotTick { node } => self.on_slot(now, node),
            SimEvent::FrameStart { .. } => {}
            SimEvent::FrameEnd { frame } => self.on_frame_end(now, frame),
        }
    }

    fn on_beacon(&mut self, now: f64, node: NodeId, index: u64) {
        let s = &self.world.scenario;
        let (interval, beacons, p_wsa, bits, rsu_beacons) =
            (s.beacon_interval, s.beacons_per_node(), s.wsa_probability, s.beacon_bits, s.rsu_beacons);
        let gain = s.gain.sample(self.streams.get(Purpose::Gain, node));
        let n = self.world.node_mut(node);
        n.sender_gain = gain;
        let vehicle = n.is_vehicle();
        if vehicle || rsu_beacons {
            self.originate(now, node, FrameKind::Wsm, bits);
        }
        if vehicle && p_wsa > 0.0 && self.streams.get(Purpose::Traffic, node).gen_bool(p_wsa) {
            self.schedule(now, SimEvent::WsaDue { node });
        }
        if index + 1 < beacons {
            let phase = self.beacon_phase[node as usize];
            self.schedule(phase + (index + 1) as f64 * interval, SimEvent::BeaconDue { node, index: index + 1 });
        }
    }

    /// Creates a new message at `node`: counts it, then offers it to the MAC.
    fn originate(&mut self, now: f64, node: NodeId, kind: FrameKind, bits: u32) {
        let origin = Provenance { id: OriginId(self.next_origin), node, created: now, kind };
        self.next_origin += 1;
        let metric = match kind {
            FrameKind::Wsm => Metric::GeneratedWsm,
            FrameKind::Bsm => Metric::GeneratedBsm,
            FrameKind::WsaRequest | FrameKind::WsaResponse => Metric::GeneratedWsa,
        };
        let n = self.world.node_mut(node);
        n.metrics.bump(metric).expect("ledger open during the run");
        n.seen_origins.insert(origin.id);
        let frame = self.new_frame(node, kind, bits, origin, 0);
        self.submit(now, node, frame);
    }

    fn new_frame(&mut self, node: NodeId, kind: FrameKind, bits: u32, origin: Provenance, hops: u32) -> Frame {
        let id = FrameId(self.next_frame);
        self.next_frame += 1;
        let s = &self.world.scenario;
        Frame {
            id,
            kind,
            bits,
            sender: node,
            origin,
            hops,
            tx_power: s.phy.tx_power,
            sender_gain: self.world.node(node).sender_gain,
            start: 0.0,
            airtime: frame_airtime(bits, s.bitrate),
        }
    }

    fn submit(&mut self, now: f64, node: NodeId, frame: Frame) {
        let expiry = self.world.scenario.neighbor_expiry;
        let n = self.world.node_mut(node);
        let status = VehicleStatus {
            speed: n.speed,
            sender_gain: n.sender_gain,
            receiver_gain: n.nearest_neighbor_gain(now, expiry),
        };
        match n.mac.submit_frame(frame, &status, &self.fis) {
            SubmitOutcome::DroppedByGate => {
                n.metrics.bump(Metric::DroppedByGate).expect("ledger open during the run");
            }
            SubmitOutcome::Enqueued => {
                if n.mac.phase() == AccessPhase::Idle {
                    self.start_access(now, node);
                }
            }
        }
    }

    /// The head-of-line frame senses the medium for one AIFS.
    fn start_access(&mut self, now: f64, node: NodeId) {
        let aifs = self.world.scenario.mac.timings.aifs;
        self.world.node_mut(node).mac.set_phase(AccessPhase::Aifs { until: now + aifs });
        self.schedule(now + aifs, SimEvent::AifsDone { node });
    }

    fn on_aifs_done(&mut self, now: f64, node: NodeId) {
        let slot = self.world.scenario.mac.timings.slot_time;
        let n = self.world.node_mut(node);
        let idle = n.channel.idle_for(now);
        match n.mac.channel_access(idle) {
            AccessDecision::TransmitNow => self.transmit(now, node),
            AccessDecision::EnterBackoff => {
                let rng = self.streams.get(Purpose::Backoff, node);
                self.world.nodes[node as usize].mac.draw_backoff(rng);
                self.schedule(now + slot, SimEvent::SlotTick { node });
            }
        }
    }

    fn on_slot(&mut self, now: f64, node: NodeId) {
        let t = self.world.scenario.mac.timings;
        let sense_at = |idle: Option<f64>| SlotSense {
            idle_this_slot: idle.is_some_and(|i| i + SENSE_EPS >= t.slot_time),
            aifs_idle: idle.is_some_and(|i| i + SENSE_EPS >= t.aifs),
        };
        let n = &mut self.world.nodes[node as usize];
        let busy = &mut self.mac_busy[node as usize];
        match n.mac.advance_slot(sense_at(n.channel.idle_for(now))) {
            SlotOutcome::ReadyToTransmit => self.transmit(now, node),
            SlotOutcome::Countdown => self.schedule(now + t.slot_time, SimEvent::SlotTick { node }),
            SlotOutcome::Frozen => {
                push_merged(busy, now - t.slot_time, now);
                // Slots that end before the current busy stretch plus one
                // slot are frozen whatever else happens, so they are
                // settled here instead of through the queue.
                let until = n.channel.busy_until();
                let mut next = now + t.slot_time;
                while next < self.horizon {
                    let idle = (next >= until).then_some(next - until);
                    if sense_at(idle).idle_this_slot {
                        break;
                    }
                    let outcome = n.mac.advance_slot(sense_at(idle));
                    debug_assert_eq!(outcome, SlotOutcome::Frozen);
                    push_merged(busy, next - t.slot_time, next);
                    next += t.slot_time;
                }
                self.schedule(next, SimEvent::SlotTick { node });
            }
        }
    }

    fn transmit(&mut self, now: f64, node: NodeId) {
        let sender = self.world.node_mut(node);
        let mut frame = sender.mac.pop_head().expect("access runs only with a queued frame");
        frame.start = now;
        let end = frame.end();
        sender.mac.set_phase(AccessPhase::Transmitting { end });
        sender.channel.start_transmission(now, end);
        sender.metrics.bump(Metric::SentPackets).expect("ledger open during the run");
        let from = sender.position_at(now);
        let phy = self.world.scenario.phy;
        let mut receivers = Vec::new();
        let mut below = 0;
        for r in self.world.nodes.iter_mut().filter(|r| r.id != node) {
            let d = crate::world::distance(from, r.position_at(now));
            let power = received_power_exp(
                frame.tx_power,
                frame.sender_gain,
                r.sender_gain,
                d,
                phy.frequency,
                phy.path_loss_exponent,
            );
            match r.channel.begin_reception(frame.id, now, end, power, self.sensitivity) {
                Some(_) => below += 1,
                None => receivers.push(r.id),
            }
        }
        let ev =
            SimEvent::FrameStart { node, frame: frame.id, kind: frame.kind, origin: frame.origin.id, hops: frame.hops };
        self.emit(now, None, &ev);
        let id = frame.id;
        self.in_flight.insert(id, InFlight { frame, sender_position: from, receivers, below_sensitivity: below });
        self.schedule(end, SimEvent::FrameEnd { frame: id });
    }

    fn on_frame_end(&mut self, now: f64, id: FrameId) {
        let f = self.in_flight.remove(&id).expect("every frame end has a frame in flight");
        let sender = f.frame.sender;
        let p_err = self.world.scenario.phy.bit_error_probability;
        let mut collided = false;
        let mut delivered = Vec::new();
        for &r in &f.receivers {
            let mut outcome =
                self.world.node_mut(r).channel.end_reception(id, now).expect("receiver registered the frame");
            if outcome == ReceptionOutcome::Delivered
                && p_err > 0.0
                && self.streams.get(Purpose::Corruption, r).gen_bool(p_err)
            {
                outcome = ReceptionOutcome::LostBitError;
            }
            let ledger = &mut self.world.node_mut(r).metrics;
            match outcome {
                ReceptionOutcome::Delivered => {
                    self.tally.delivered += 1;
                    delivered.push(r);
                }
                ReceptionOutcome::LostCollision => {
                    self.tally.lost_collision += 1;
                    collided = true;
                    ledger.bump(Metric::TotalLostPackets).expect("ledger open during the run");
                }
                ReceptionOutcome::LostBitError => {
                    self.tally.lost_bit_error += 1;
                    ledger.bump(Metric::TotalLostPackets).expect("ledger open during the run");
                }
                ReceptionOutcome::BelowSensitivity => unreachable!("weak frames never start a reception"),
            }
        }
        self.tally.below_sensitivity += f.below_sensitivity;
        self.tally.completed_transmissions += 1;
        self.tally.collided_transmissions += u64::from(collided);
        if f.receivers.len() as u64 + f.below_sensitivity + 1 != self.world.nodes.len() as u64 {
            self.tally.conservation_violations += 1;
        }

        let s = self.world.node_mut(sender);
        s.channel.end_transmission(now);
        s.mac.report_tx_outcome(if collided { TxOutcome::Collision } else { TxOutcome::Success });
        s.mac.set_phase(AccessPhase::Idle);
        if s.mac.queue_len() > 0 {
            self.start_access(now, sender);
        }

        for r in delivered {
            self.on_delivery(now, r, &f);
        }
    }

    /// Counts a delivered frame, records the sender as a neighbor and applies
    /// the rebroadcast policy.
    fn on_delivery(&mut self, now: f64, node: NodeId, f: &InFlight) {
        let frame = &f.frame;
        let n = self.world.node_mut(node);
        let metric = match frame.kind {
            FrameKind::Wsm => Metric::ReceivedWsm,
            FrameKind::Bsm => Metric::ReceivedBsm,
            FrameKind::WsaRequest | FrameKind::WsaResponse => Metric::ReceivedWsa,
        };
        n.metrics.bump(metric).expect("ledger open during the run");
        n.hear(frame.sender, NeighborEntry { last_heard: now, gain: frame.sender_gain, position: f.sender_position });
        match frame.kind {
            FrameKind::Wsm => {}
            FrameKind::WsaRequest if n.kind == NodeKind::Rsu => {
                if n.answered.insert(frame.origin.id) {
                    self.tally.wsa_responses += 1;
                    let bits = self.world.scenario.wsa_bits;
                    self.originate(now, node, FrameKind::WsaResponse, bits);
                }
            }
            FrameKind::Bsm | FrameKind::WsaRequest | FrameKind::WsaResponse => {
                if n.seen_origins.insert(frame.origin.id) {
                    self.tally.rebroadcasts += 1;
                    let copy = self.new_frame(node, frame.kind, frame.bits, frame.origin, frame.hops + 1);
                    self.submit(now, node, copy);
                }
            }
        }
    }

    fn finish(mut self, t_end: f64) -> RunOutput {
        let t_end = t_end.max(0.0);
        let mut reports = Vec::with_capacity(self.world.nodes.len());
        let mut queued = Vec::with_capacity(self.world.nodes.len());
        for (n, mac_busy) in self.world.nodes.iter_mut().zip(&self.mac_busy) {
            n.channel.close(t_end);
            let clip = |&(a, b): &(f64, f64)| (a.clamp(0.0, t_end), b.clamp(0.0, t_end));
            let busy: Vec<(f64, f64)> = mac_busy.iter().chain(n.channel.busy_periods()).map(clip).collect();
            let idle = (t_end - union_measure(&busy)).max(0.0);
            let position = n.position_at(t_end);
            let l = &mut n.metrics;
            let record = |l: &mut crate::metrics::MetricsLedger, m, v: f64| l.record(m, v).expect("valid accumulator");
            record(l, Metric::TimesIntoBackoff, n.mac.times_into_backoff() as f64);
            record(l, Metric::SlotsBackoff, n.mac.slots_backoff() as f64);
            record(l, Metric::MacBusySeconds, n.mac.mac_busy_seconds());
            record(l, Metric::PhyBusySeconds, n.channel.phy_busy_seconds());
            l.freeze();
            queued.push(n.mac.queue_len());
            reports.push(NodeReport { id: n.id, kind: n.kind, position, ledger: l.clone(), idle_seconds: idle });
        }
        let s = &self.world.scenario;
        let acceptance = (s.mode == Mode::Fuzzy).then(|| s.acceptance.clone());
        let summary = RunSummary::from_reports(s.name.clone(), s.seed, s.mode.name(), acceptance, t_end, &reports);
        RunOutput {
            nodes: reports,
            summary,
            tally: self.tally,
            end_time: t_end,
            events_processed: self.events_processed,
            queued_at_end: queued,
        }
    }
}
