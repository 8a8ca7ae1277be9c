//! Discrete-event engine: event queue, seeded random streams and the run
//! loop.

mod engine;
mod queue;
mod rng;

pub use engine::{RunOutput, SimError, SimEvent, Simulation, Tally, TraceRecord, TraceSink};
pub use queue::{EventQueue, PastEvent};
pub use rng::{Purpose, RngStreams, UnknownPurpose, GLOBAL};
