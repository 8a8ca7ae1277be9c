//! Deterministic discrete-event simulator for V2X beaconing over a
//! simplified 802.11p MAC/PHY, with a fuzzy transmit gate that can replace
//! plain random-backoff access.
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the CLI and
//! result export live in the companion `v2x-fuzzy` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod fuzzy;
pub mod mac;
pub mod metrics;
pub mod miner;
pub mod phy;
pub mod sim;
pub mod world;
