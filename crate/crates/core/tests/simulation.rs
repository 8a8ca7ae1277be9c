mod support;

use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

use v2x_fuzzy_core::fuzzy::FisDefinition;
use v2x_fuzzy_core::metrics::{compare_runs, Metric, NodeKind};
use v2x_fuzzy_core::phy::{FrameKind, NodeId, OriginId};
use v2x_fuzzy_core::sim::{RunOutput, SimEvent, Simulation};
use v2x_fuzzy_core::world::{Mode, Scenario};

fn small(vehicles: u32, duration: f64, seed: u64) -> Scenario {
    Scenario { vehicle_count: vehicles, duration, seed, ..Scenario::scenario1() }
}

fn run(s: Scenario) -> RunOutput {
    Simulation::new(s, FisDefinition::f802_11p()).unwrap().run()
}

type Log = Arc<Mutex<Vec<(f64, SimEvent)>>>;

fn run_traced(s: Scenario) -> (RunOutput, Vec<(f64, SimEvent)>) {
    let log: Log = Arc::default();
    let sink = log.clone();
    let mut sim = Simulation::new(s, FisDefinition::f802_11p()).unwrap();
    sim.set_trace(Box::new(move |r| sink.lock().unwrap().push((r.time, *r.event))));
    let out = sim.run();
    let events = std::mem::take(&mut *log.lock().unwrap());
    (out, events)
}

#[test]
fn receptions_are_conserved() {
    let out = run(small(12, 30.0, 4));
    let t = out.tally;
    let n = out.nodes.len() as u64;
    assert!(t.completed_transmissions > 0);
    assert_eq!(t.conservation_violations, 0);
    assert_eq!(t.receptions(), t.completed_transmissions * (n - 1));

    let sum = |m: Metric| out.nodes.iter().map(|r| r.ledger.count(m)).sum::<u64>();
    let received = sum(Metric::ReceivedWsm) + sum(Metric::ReceivedBsm) + sum(Metric::ReceivedWsa);
    assert_eq!(received, t.delivered);
    assert_eq!(sum(Metric::TotalLostPackets), t.lost_collision + t.lost_bit_error);
}

#[test]
fn bit_errors_join_the_loss_count() {
    let mut s = small(8, 20.0, 3);
    s.phy.bit_error_probability = 0.2;
    let out = run(s);
    let t = out.tally;
    assert!(t.lost_bit_error > 0);
    assert_eq!(t.conservation_violations, 0);
    let lost: u64 = out.nodes.iter().map(|r| r.ledger.count(Metric::TotalLostPackets)).sum();
    assert_eq!(lost, t.lost_collision + t.lost_bit_error);
}

#[test]
fn sent_covers_admitted_traffic() {
    for mode in [Mode::Baseline, Mode::Fuzzy] {
        let out = run(Scenario { mode, ..small(10, 40.0, 8) });
        for (r, queued) in out.nodes.iter().zip(&out.queued_at_end) {
            let l = &r.ledger;
            let generated =
                l.count(Metric::GeneratedWsm) + l.count(Metric::GeneratedBsm) + l.count(Metric::GeneratedWsa);
            assert!(
                l.count(Metric::SentPackets) + *queued as u64 + l.count(Metric::DroppedByGate) >= generated,
                "node {}",
                r.id
            );
        }
    }
}

#[test]
fn same_seed_same_ledgers() {
    let a = run(small(15, 30.0, 21));
    let b = run(small(15, 30.0, 21));
    assert_eq!(a.nodes, b.nodes);
    assert_eq!(a.summary, b.summary);
    assert_eq!(a.tally, b.tally);
    let c = run(small(15, 30.0, 22));
    assert_ne!(a.nodes, c.nodes);
}

#[test]
fn zero_horizon_processes_nothing() {
    let out = Simulation::new(Scenario::scenario1(), FisDefinition::f802_11p()).unwrap().run_until(0.0);
    assert_eq!(out.events_processed, 0);
    for r in &out.nodes {
        assert!(Metric::ALL.iter().all(|&m| r.ledger.get(m) == 0.0));
        assert!(r.ledger.is_frozen());
    }
}

#[test]
fn single_node_run() {
    let mut s = small(1, 200.0, 1);
    s.rsu_count = 0;
    s.wsa_probability = 0.0;
    s.accidents = 0;
    let aifs = s.mac.timings.aifs;
    let (out, events) = run_traced(s);
    let l = &out.nodes[0].ledger;
    assert_eq!(l.count(Metric::GeneratedWsm), 200);
    assert_eq!(l.count(Metric::SentPackets), 200);
    assert_eq!(l.count(Metric::TotalLostPackets), 0);
    assert_eq!(l.count(Metric::TimesIntoBackoff), 0);
    assert_eq!(l.get(Metric::MacBusySeconds), 0.0);
    assert!((l.get(Metric::MacBusySeconds) + out.nodes[0].idle_seconds - 200.0).abs() < 1e-9);

    // Each beacon goes out exactly one AIFS after it was generated.
    let beacons: Vec<f64> = events.iter().filter(|e| matches!(e.1, SimEvent::BeaconDue { .. })).map(|e| e.0).collect();
    let starts: Vec<f64> = events.iter().filter(|e| matches!(e.1, SimEvent::FrameStart { .. })).map(|e| e.0).collect();
    assert_eq!(beacons.len(), 200);
    assert_eq!(starts.len(), 200);
    for (b, s) in beacons.iter().zip(&starts) {
        assert!((s - b - aifs).abs() < 1e-12);
    }
}

#[test]
fn beacon_and_accident_accounting() {
    let out = run(Scenario::scenario1());
    let vehicles: Vec<_> = out.nodes.iter().filter(|r| r.kind == NodeKind::Vehicle).collect();
    assert_eq!(vehicles.len(), 44);
    assert_eq!(out.nodes.len(), 45);
    assert!(vehicles.iter().all(|r| r.ledger.count(Metric::GeneratedWsm) == 200));
    let bsm: u64 = out.nodes.iter().map(|r| r.ledger.count(Metric::GeneratedBsm)).sum();
    assert_eq!(bsm, 10);
    let lost: u64 = out.nodes.iter().map(|r| r.ledger.count(Metric::TotalLostPackets)).sum();
    assert!(lost > 0);
}

#[test]
fn disabled_service_requests() {
    let mut s = small(10, 30.0, 2);
    s.wsa_probability = 0.0;
    let out = run(s);
    for r in &out.nodes {
        assert_eq!(r.ledger.count(Metric::GeneratedWsa), 0);
        assert_eq!(r.ledger.count(Metric::ReceivedWsa), 0);
    }
}

#[test]
fn empty_world_runs() {
    let mut s = small(0, 20.0, 2);
    s.accidents = 0;
    s.wsa_probability = 0.0;
    let out = run(s);
    assert_eq!(out.nodes.len(), 1);
    assert_eq!(out.nodes[0].ledger.count(Metric::TotalLostPackets), 0);
}

#[test]
fn rebroadcast_at_most_once_per_origin() {
    let (out, events) = run_traced(small(12, 60.0, 6));
    let mut copies: BTreeMap<(NodeId, OriginId), u32> = BTreeMap::new();
    let mut wsm_relays = 0;
    for (_, e) in &events {
        if let SimEvent::FrameStart { node, kind, origin, hops, .. } = *e {
            if hops > 0 {
                *copies.entry((node, origin)).or_default() += 1;
                wsm_relays += u32::from(kind == FrameKind::Wsm);
            }
        }
    }
    assert!(!copies.is_empty());
    assert!(copies.values().all(|&c| c == 1));
    assert_eq!(wsm_relays, 0);
    // Duplicates are still counted on every delivery.
    let bsm_rx: u64 = out.nodes.iter().map(|r| r.ledger.count(Metric::ReceivedBsm)).sum();
    let bsm_relays = out.tally.rebroadcasts;
    assert!(bsm_rx > 0 && bsm_relays > 0);
    assert!(out.nodes.iter().any(|r| r.ledger.count(Metric::ReceivedBsm) >= 2));
}

#[test]
fn clock_never_goes_back_and_halts_hold() {
    let s = small(10, 60.0, 9);
    let halt = s.accident_halt;
    let mut sim = Simulation::new(s, FisDefinition::f802_11p()).unwrap();
    let accidents = sim.world().accidents.clone();
    assert_eq!(accidents.len(), 10);
    let mut last = 0.0;
    let mut checked = 0;
    while let Some(t) = sim.step(60.0) {
        assert!(t >= last);
        last = t;
        for a in &accidents {
            if t > a.time && t < a.time + halt {
                assert_eq!(sim.world().node(a.vehicle).speed, 0.0);
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}

#[test]
fn idle_time_never_exceeds_run_length() {
    let out = run(small(20, 30.0, 5));
    for r in &out.nodes {
        let l = &r.ledger;
        assert!(r.idle_seconds >= 0.0 && r.idle_seconds <= 30.0);
        assert!(l.get(Metric::PhyBusySeconds) <= 30.0);
        assert!(l.get(Metric::MacBusySeconds) <= 30.0);
        assert!(r.idle_seconds + l.get(Metric::PhyBusySeconds) <= 30.0 + 1e-9);
        assert!(r.idle_seconds + l.get(Metric::MacBusySeconds) <= 30.0 + 1e-9);
    }
}

#[test]
fn self_comparison_of_a_real_run() {
    let out = run(small(10, 20.0, 3));
    let rep = compare_runs(&out.summary, &out.summary).unwrap();
    for f in &rep.figures {
        assert!(f.total.percent.is_none_or(|p| p == 0.0), "{}", f.name);
    }
}

#[test]
fn fuzzy_gate_cuts_scenario1_traffic() {
    let base = run(Scenario::scenario1());
    let fuzzy = run(Scenario { mode: Mode::Fuzzy, ..Scenario::scenario1() });
    let rep = compare_runs(&base.summary, &fuzzy.summary).unwrap();
    let lost = rep.figure("collided_packets").unwrap().total.percent.unwrap();
    assert!(lost >= 50.0);
    assert!(fuzzy.summary.frames_on_air < base.summary.frames_on_air);
    assert!(fuzzy.summary.mean_idle_seconds > base.summary.mean_idle_seconds);
}
