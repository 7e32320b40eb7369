//! Server addresses and the two disjoint allocation ranges the simulation
//! draws them from.

use std::fmt;
use std::net::Ipv4Addr;

use serde::{Deserialize, Serialize};

/// An NTP server address. Opaque to the simulation logic, totally ordered,
/// and rendered as a dotted quad in reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Addr(Ipv4Addr);

impl Addr {
    pub const fn from_bits(raw: u32) -> Self {
        Addr(Ipv4Addr::from_bits(raw))
    }

    pub const fn to_bits(self) -> u32 {
        self.0.to_bits()
    }
}

impl fmt::Display for Addr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

// Benign servers come out of 10.0.0.0/8, attacker-controlled ones out of
// 198.18.0.0/15. The bases are far enough apart that the ranges stay
// disjoint for any payload size the validators accept, which is what makes
// the per-address ground-truth labels unambiguous.
const BENIGN_BASE: u32 = 0x0A00_0000;
const ATTACKER_BASE: u32 = 0xC612_0000;

/// Number of addresses either allocator can hand out.
pub const ALLOCATOR_CAPACITY: u32 = 1 << 24;

/// The `index`-th benign address (1-based).
pub fn benign(index: u32) -> Addr {
    debug_assert!((1..=ALLOCATOR_CAPACITY).contains(&index));
    Addr::from_bits(BENIGN_BASE + index)
}

/// The `index`-th attacker-controlled address (1-based).
pub fn attacker(index: u32) -> Addr {
    debug_assert!((1..=ALLOCATOR_CAPACITY).contains(&index));
    Addr::from_bits(ATTACKER_BASE + index)
}
