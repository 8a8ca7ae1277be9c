//! CSMA/CA channel access for one node with a single access category.
//!
//! A frame submitted on an idle medium waits one AIFS and goes out if the
//! medium stayed idle; otherwise the node enters backoff, draws a slot count
//! uniformly from `[0, cw]` and counts down on idle slots, freezing on busy
//! ones. The contention window doubles on collision up to `cw_max` and
//! resets to `cw_min` on success. In fuzzy mode every submission first
//! passes the transmit gate.

use alloc::collections::VecDeque;

use rand::Rng;
use thiserror::Error;

use crate::fuzzy::{FisDefinition, GateDecision, VehicleStatus};
use crate::phy::Frame;

/// Slack for comparing accumulated float times against AIFS.
const TIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MacError {
    #[error("invalid MAC configuration: {0}")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacTimings {
    /// Seconds.
    pub slot_time: f64,
    /// Seconds.
    pub aifs: f64,
}

impl Default for MacTimings {
    fn default() -> Self {
        // 32 us inter-frame gap plus two 13 us slots.
        MacTimings { slot_time: 13e-6, aifs: 58e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MacConfig {
    pub cw_min: u32,
    pub cw_max: u32,
    pub timings: MacTimings,
    /// When false, a broadcast collision never grows the window.
    pub collision_doubling: bool,
}

impl Default for MacConfig {
    fn default() -> Self {
        MacConfig { cw_min: 15, cw_max: 1023, timings: MacTimings::default(), collision_doubling: true }
    }
}

impl MacConfig {
    pub fn validate(&self) -> Result<(), MacError> {
        let window = |cw: u32| cw.checked_add(1).is_some_and(u32::is_power_of_two);
        if !window(self.cw_min) || !window(self.cw_max) {
            return Err(MacError::InvalidConfig("contention windows must be 2^k - 1"));
        }
        if self.cw_min > self.cw_max {
            return Err(MacError::InvalidConfig("cw_min exceeds cw_max"));
        }
        let MacTimings { slot_time, aifs } = self.timings;
        if !(slot_time > 0.0 && slot_time.is_finite()) {
            return Err(MacError::InvalidConfig("slot time must be positive"));
        }
        if !(aifs >= slot_time && aifs.is_finite()) {
            return Err(MacError::InvalidConfig("AIFS must be at least one slot"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MacMode {
    Baseline,
    /// Gate on, admitting outputs ranked at or above this output term.
    Fuzzy {
        acceptance: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubmitOutcome {
    Enqueued,
    DroppedByGate,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessDecision {
    TransmitNow,
    EnterBackoff,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotOutcome {
    Countdown,
    Frozen,
    ReadyToTransmit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TxOutcome {
    Success,
    Collision,
}

/// What the node sensed over the slot that just ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SlotSense {
    pub idle_this_slot: bool,
    /// Medium idle for at least one AIFS up to now.
    pub aifs_idle: bool,
}

/// Where the head-of-line frame is in the access procedure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AccessPhase {
    Idle,
    /// Sensing until the given time.
    Aifs {
        until: f64,
    },
    Backoff,
    Transmitting {
        end: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacState {
    config: MacConfig,
    mode: MacMode,
    cw: u32,
    backoff_remaining: Option<u32>,
    queue: VecDeque<Frame>,
    phase: AccessPhase,
    mac_busy_seconds: f64,
    times_into_backoff: u64,
    slots_backoff: u64,
}

impl MacState {
    pub fn new(config: MacConfig, mode: MacMode) -> Result<Self, MacError> {
        config.validate()?;
        Ok(MacState {
            config,
            mode,
            cw: config.cw_min,
            backoff_remaining: None,
            queue: VecDeque::new(),
            phase: AccessPhase::Idle,
            mac_busy_seconds: 0.0,
            times_into_backoff: 0,
            slots_backoff: 0,
        })
    }

    pub fn config(&self) -> &MacConfig {
        &self.config
    }

    pub fn mode(&self) -> MacMode {
        self.mode
    }

    pub fn cw(&self) -> u32 {
        self.cw
    }

    pub fn backoff_remaining(&self) -> Option<u32> {
        self.backoff_remaining
    }

    pub fn phase(&self) -> AccessPhase {
        self.phase
    }

    pub fn set_phase(&mut self, phase: AccessPhase) {
        self.phase = phase;
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn head(&self) -> Option<&Frame> {
        self.queue.front()
    }

    pub fn pop_head(&mut self) -> Option<Frame> {
        self.queue.pop_front()
    }

    pub fn mac_busy_seconds(&self) -> f64 {
        self.mac_busy_seconds
    }

    pub fn times_into_backoff(&self) -> u64 {
        self.times_into_backoff
    }

    pub fn slots_backoff(&self) -> u64 {
        self.slots_backoff
    }

    /// Gate check (fuzzy mode only), then FIFO enqueue.
    pub fn submit_frame(&mut self, frame: Frame, status: &VehicleStatus, fis: &FisDefinition) -> SubmitOutcome {
        if let MacMode::Fuzzy { acceptance } = self.mode {
            if fis.gate_decision(&status.as_inputs(), acceptance) == GateDecision::Defer {
                return SubmitOutcome::DroppedByGate;
            }
        }
        self.queue.push_back(frame);
        SubmitOutcome::Enqueued
    }

    /// Direct access needs the medium idle for a full AIFS; `idle_for` is
    /// `None` while the medium is busy.
    pub fn channel_access(&mut self, idle_for: Option<f64>) -> AccessDecision {
        match idle_for {
            Some(t) if t + TIME_EPS >= self.config.timings.aifs => AccessDecision::TransmitNow,
            _ => {
                self.times_into_backoff += 1;
                AccessDecision::EnterBackoff
            }
        }
    }

    /// Uniform draw from `[0, cw]`.
    pub fn draw_backoff<R: Rng + ?Sized>(&mut self, rng: &mut R) -> u32 {
        let slots = rng.gen_range(0..=self.cw);
        self.slots_backoff += u64::from(slots);
        self.backoff_remaining = Some(slots);
        self.phase = AccessPhase::Backoff;
        slots
    }

    /// One backoff slot has elapsed.
    pub fn advance_slot(&mut self, sense: SlotSense) -> SlotOutcome {
        let remaining = self.backoff_remaining.unwrap_or(0);
        if remaining == 0 && sense.aifs_idle {
            self.backoff_remaining = None;
            return SlotOutcome::ReadyToTransmit;
        }
        if !sense.idle_this_slot {
            self.mac_busy_seconds += self.config.timings.slot_time;
            return SlotOutcome::Frozen;
        }
        self.backoff_remaining = Some(remaining.saturating_sub(1));
        SlotOutcome::Countdown
    }

    /// Updates the contention window after a transmission.
    pub fn report_tx_outcome(&mut self, outcome: TxOutcome) -> u32 {
        self.cw = match outcome {
            TxOutcome::Collision if self.config.collision_doubling => (2 * (self.cw + 1) - 1).min(self.config.cw_max),
            _ => self.config.cw_min,
        };
        self.cw
    }
}
