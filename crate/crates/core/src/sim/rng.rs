use alloc::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::phy::NodeId;

/// Node id used for streams that belong to the whole world.
pub const GLOBAL: NodeId = NodeId::MAX;

/// What a random stream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Purpose {
    Placement,
    Mobility,
    Traffic,
    Gain,
    Backoff,
    Accident,
    Corruption,
}

impl Purpose {
    pub const ALL: [Purpose; 7] = [
        Purpose::Placement,
        Purpose::Mobility,
        Purpose::Traffic,
        Purpose::Gain,
        Purpose::Backoff,
        Purpose::Accident,
        Purpose::Corruption,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Purpose::Placement => "placement",
            Purpose::Mobility => "mobility",
            Purpose::Traffic => "traffic",
            Purpose::Gain => "gain",
            Purpose::Backoff => "backoff",
            Purpose::Accident => "accident",
            Purpose::Corruption => "corruption",
        }
    }

    pub fn from_name(name: &str) -> Result<Purpose, UnknownPurpose> {
        Purpose::ALL.into_iter().find(|p| p.name() == name).ok_or(UnknownPurpose)
    }

    fn code(self) -> u64 {
        self as u64 + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("random stream purpose is not registered")]
pub struct UnknownPurpose;

/// Independent random streams keyed by purpose and node, all derived from
/// one master seed. Each key maps to its own ChaCha stream, so draws on one
/// key never shift another key's sequence.
#[derive(Debug, Clone)]
pub struct RngStreams {
    master: u64,
    registered: [bool; 7],
    streams: BTreeMap<(Purpose, NodeId), ChaCha8Rng>,
}

impl RngStreams {
    /// All purposes registered.
    pub fn new(master: u64) -> Self {
        Self::with_purposes(master, &Purpose::ALL)
    }

    pub fn with_purposes(master: u64, purposes: &[Purpose]) -> Self {
        let mut registered = [false; 7];
        for p in purposes {
            registered[*p as usize] = true;
        }
        RngStreams { master, registered, streams: BTreeMap::new() }
    }

    pub fn master_seed(&self) -> u64 {
        self.master
    }

    pub fn stream(&mut self, purpose: Purpose, node: NodeId) -> Result<&mut ChaCha8Rng, UnknownPurpose> {
        if !self.registered[purpose as usize] {
            return Err(UnknownPurpose);
        }
        let master = self.master;
        Ok(self.streams.entry((purpose, node)).or_insert_with(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(master);
            rng.set_stream((purpose.code() << 32) | u64::from(node));
            rng
        }))
    }

    /// For purposes the caller registered itself.
    pub(crate) fn get(&mut self, purpose: Purpose, node: NodeId) -> &mut ChaCha8Rng {
        self.stream(purpose, node).expect("purpose registered at construction")
    }
}
