//! Single-channel broadcast PHY: free-space propagation, airtime, and
//! per-node reception with a no-capture collision rule.

use alloc::vec::Vec;
use core::cmp::Ordering;

/// Speed of light, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Distances below this are treated as this (co-located nodes).
pub const MIN_DISTANCE_M: f64 = 1.0;

pub type NodeId = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FrameId(pub u64);

/// Identifies one application message across all of its rebroadcasts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct OriginId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FrameKind {
    Wsm,
    Bsm,
    WsaRequest,
    WsaResponse,
}

impl FrameKind {
    pub fn is_wsa(self) -> bool {
        matches!(self, FrameKind::WsaRequest | FrameKind::WsaResponse)
    }

    pub fn name(self) -> &'static str {
        match self {
            FrameKind::Wsm => "WSM",
            FrameKind::Bsm => "BSM",
            FrameKind::WsaRequest => "WSA-request",
            FrameKind::WsaResponse => "WSA-response",
        }
    }
}

/// Where a message came from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Provenance {
    pub id: OriginId,
    pub node: NodeId,
    pub created: f64,
    pub kind: FrameKind,
}

/// One over-the-air transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub id: FrameId,
    pub kind: FrameKind,
    pub bits: u32,
    pub sender: NodeId,
    pub origin: Provenance,
    /// 0 for the originator's own copy.
    pub hops: u32,
    /// Watts.
    pub tx_power: f64,
    pub sender_gain: f64,
    /// Set when the frame goes on air.
    pub start: f64,
    pub airtime: f64,
}

impl Frame {
    pub fn end(&self) -> f64 {
        self.start + self.airtime
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, dbm / 10.0) * 1e-3
}

/// Friis free-space received power in watts.
pub fn received_power(tx_power: f64, sg: f64, rg: f64, distance: f64, freq_hz: f64) -> f64 {
    received_power_exp(tx_power, sg, rg, distance, freq_hz, 2.0)
}

/// Free-space form with a configurable path-loss exponent:
/// `Pt * sg * rg * (lambda / 4 pi)^2 / d^n`.
pub fn received_power_exp(tx_power: f64, sg: f64, rg: f64, distance: f64, freq_hz: f64, exponent: f64) -> f64 {
    let d = distance.max(MIN_DISTANCE_M);
    let lambda = SPEED_OF_LIGHT / freq_hz;
    let k = lambda / (4.0 * core::f64::consts::PI);
    let spread = if exponent == 2.0 { d * d } else { libm::pow(d, exponent) };
    tx_power * sg * rg * k * k / spread
}

/// Airtime without preamble or header overhead.
pub fn frame_airtime(bits: u32, bitrate: f64) -> f64 {
    bits as f64 / bitrate
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ReceptionOutcome {
    Delivered,
    LostCollision,
    BelowSensitivity,
    /// Delivered by the collision model but dropped by the independent
    /// per-frame corruption draw.
    LostBitError,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Reception {
    frame: FrameId,
    end: f64,
    corrupted: bool,
}

/// Reception state of one node.
///
/// Two above-sensitivity frames that overlap by any positive amount at this
/// node are both lost. A node that is transmitting loses everything that
/// overlaps its own transmission. Frames that merely touch end-to-start do
/// not overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelState {
    ongoing: Vec<Reception>,
    busy_since: Option<f64>,
    phy_busy: f64,
    busy_periods: Vec<(f64, f64)>,
    transmitting_until: Option<f64>,
    idle_since: f64,
}

impl Default for ChannelState {
    fn default() -> Self {
        ChannelState {
            ongoing: Vec::new(),
            busy_since: None,
            phy_busy: 0.0,
            busy_periods: Vec::new(),
            transmitting_until: None,
            idle_since: 0.0,
        }
    }
}

impl ChannelState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers the start of an arrival. Returns `Some(BelowSensitivity)`
    /// for frames too weak to be seen at all; those never occupy the
    /// channel.
    pub fn begin_reception(
        &mut self,
        frame: FrameId,
        now: f64,
        end: f64,
        power: f64,
        sensitivity: f64,
    ) -> Option<ReceptionOutcome> {
        if power < sensitivity {
            return Some(ReceptionOutcome::BelowSensitivity);
        }
        let mut corrupted = self.transmitting_until.is_some_and(|t| t > now);
        for r in self.ongoing.iter_mut().filter(|r| r.end > now) {
            r.corrupted = true;
            corrupted = true;
        }
        self.ongoing.push(Reception { frame, end, corrupted });
        if self.busy_since.is_none() {
            self.busy_since = Some(now);
        }
        None
    }

    /// Completes an arrival begun with [`begin_reception`](Self::begin_reception).
    /// Returns `None` for frames this node never saw.
    pub fn end_reception(&mut self, frame: FrameId, now: f64) -> Option<ReceptionOutcome> {
        let pos = self.ongoing.iter().position(|r| r.frame == frame)?;
        let r = self.ongoing.swap_remove(pos);
        if self.ongoing.is_empty() {
            if let Some(start) = self.busy_since.take() {
                self.phy_busy += now - start;
                self.busy_periods.push((start, now));
            }
            if self.transmitting_until.is_none() {
                self.idle_since = now;
            }
        }
        Some(if r.corrupted { ReceptionOutcome::LostCollision } else { ReceptionOutcome::Delivered })
    }

    /// Half-duplex: whatever is being received now is lost.
    pub fn start_transmission(&mut self, now: f64, end: f64) {
        for r in self.ongoing.iter_mut().filter(|r| r.end > now) {
            r.corrupted = true;
        }
        self.transmitting_until = Some(end);
    }

    pub fn end_transmission(&mut self, now: f64) {
        self.transmitting_until = None;
        if self.ongoing.is_empty() {
            self.idle_since = now;
        }
    }

    pub fn is_transmitting(&self) -> bool {
        self.transmitting_until.is_some()
    }

    /// Carrier sense.
    pub fn is_busy(&self, now: f64) -> bool {
        self.transmitting_until.is_some_and(|t| t > now) || self.ongoing.iter().any(|r| r.end > now)
    }

    /// How long the medium has been continuously idle, or `None` if busy.
    pub fn idle_for(&self, now: f64) -> Option<f64> {
        if self.is_busy(now) {
            return None;
        }
        Some(now - self.busy_until())
    }

    /// Latest moment the medium is known to be busy: the end of the last
    /// ongoing reception or own transmission, or when it last went idle.
    pub fn busy_until(&self) -> f64 {
        self.ongoing.iter().map(|r| r.end).chain(self.transmitting_until).fold(self.idle_since, f64::max)
    }

    /// Seconds of above-sensitivity reception seen so far (union of
    /// overlapping frames counted once).
    pub fn phy_busy_seconds(&self) -> f64 {
        self.phy_busy
    }

    /// Closed busy periods, in the order they ended.
    pub fn busy_periods(&self) -> &[(f64, f64)] {
        &self.busy_periods
    }

    /// Closes an open busy period at `now`, for end-of-run accounting.
    pub fn close(&mut self, now: f64) {
        if let Some(start) = self.busy_since.take() {
            if now > start {
                self.phy_busy += now - start;
                self.busy_periods.push((start, now));
            }
        }
    }
}

/// A frame arriving at the node under consideration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub frame: FrameId,
    pub start: f64,
    pub end: f64,
    /// Received power, watts.
    pub power: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Resolution {
    /// Outcome per arrival, in input order.
    pub outcomes: Vec<(FrameId, ReceptionOutcome)>,
    pub phy_busy_seconds: f64,
}

/// Resolves a complete arrival schedule at one node. `own_tx` lists the
/// node's own transmissions as `(start, end)`. Input order does not matter.
pub fn resolve_reception(arrivals: &[Arrival], own_tx: &[(f64, f64)], sensitivity: f64) -> Resolution {
    // At equal times ends go before starts, so touching frames do not
    // overlap. Frame ids break the remaining ties.
    #[derive(Clone, Copy)]
    enum Step {
        RxEnd(usize),
        TxEnd,
        TxStart(f64),
        RxStart(usize),
    }
    let rank = |s: &Step| match s {
        Step::RxEnd(_) => 0,
        Step::TxEnd => 1,
        Step::TxStart(_) => 2,
        Step::RxStart(_) => 3,
    };
    let key = |s: &Step| match *s {
        Step::RxEnd(i) | Step::RxStart(i) => arrivals[i].frame.0,
        _ => 0,
    };
    let mut steps: Vec<(f64, Step)> = Vec::with_capacity(2 * (arrivals.len() + own_tx.len()));
    for (i, a) in arrivals.iter().enumerate() {
        steps.push((a.start, Step::RxStart(i)));
        steps.push((a.end, Step::RxEnd(i)));
    }
    for &(s, e) in own_tx {
        steps.push((s, Step::TxStart(e)));
        steps.push((e, Step::TxEnd));
    }
    steps.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then_with(|| rank(&a.1).cmp(&rank(&b.1)))
            .then_with(|| key(&a.1).cmp(&key(&b.1)))
            .then(Ordering::Equal)
    });

    let mut ch = ChannelState::new();
    let mut outcomes: Vec<Option<ReceptionOutcome>> = alloc::vec![None; arrivals.len()];
    for (t, step) in steps {
        match step {
            Step::RxStart(i) => {
                let a = &arrivals[i];
                if let Some(o) = ch.begin_reception(a.frame, t, a.end, a.power, sensitivity) {
                    outcomes[i] = Some(o);
                }
            }
            Step::RxEnd(i) => {
                if let Some(o) = ch.end_reception(arrivals[i].frame, t) {
                    outcomes[i] = Some(o);
                }
            }
            Step::TxStart(end) => ch.start_transmission(t, end),
            Step::TxEnd => ch.end_transmission(t),
        }
    }
    Resolution {
        outcomes: arrivals.iter().zip(outcomes).map(|(a, o)| (a.frame, o.expect("every arrival resolves"))).collect(),
        phy_busy_seconds: ch.phy_busy_seconds(),
    }
}
