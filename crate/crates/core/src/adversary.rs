//! Attacker models: when a poisoning attempt lands, what the forged reply
//! carries, and the closed-form deadline for pool capture.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::addr;
use crate::dns::wire::{max_a_records, WireParams};
use crate::dns::{DnsResponse, Origin};
use crate::error::{Result, SimError};

/// When poisoning succeeds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AttackMode {
    /// No attacker.
    None,
    /// The attack lands exactly at this query index (1-based).
    Deterministic { k: u32 },
    /// Independent success probability at each cache-miss query, until the
    /// first success.
    Bernoulli { p: f64 },
}

/// What a successful poisoning injects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayloadSpec {
    /// Number of attacker-controlled addresses in the forged reply.
    pub address_count: u32,
    pub ttl_s: u64,
    /// Refuse payloads that could not fit one non-fragmented reply.
    pub enforce_wire_fit: bool,
    pub wire: WireParams,
}

impl Default for PayloadSpec {
    /// 89 addresses under a 25-hour TTL: fills one non-fragmented Ethernet
    /// reply and outlives the whole pool-generation window.
    fn default() -> Self {
        PayloadSpec {
            address_count: 89,
            ttl_s: 90_000,
            enforce_wire_fit: true,
            wire: WireParams::default(),
        }
    }
}

impl PayloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.address_count < 1 {
            return Err(SimError::InvalidConfig(
                "payload address count must be >= 1".into(),
            ));
        }
        if self.address_count > addr::ALLOCATOR_CAPACITY {
            return Err(SimError::InvalidConfig(format!(
                "payload address count {} exceeds the allocator range",
                self.address_count
            )));
        }
        if self.enforce_wire_fit {
            let capacity = max_a_records(&self.wire)?;
            if self.address_count > capacity {
                return Err(SimError::PayloadTooLarge {
                    requested: self.address_count,
                    capacity,
                });
            }
        }
        Ok(())
    }
}

/// A full attacker description. `mechanism_tag` names how the poisoning
/// would be delivered (fragment injection, BGP hijack, a third-party
/// trigger); it is bookkeeping only and never steers the simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackStrategy {
    pub mode: AttackMode,
    pub payload: PayloadSpec,
    #[serde(default)]
    pub mechanism_tag: String,
}

impl AttackStrategy {
    pub fn none() -> Self {
        AttackStrategy {
            mode: AttackMode::None,
            payload: PayloadSpec::default(),
            mechanism_tag: String::new(),
        }
    }

    pub fn deterministic(k: u32) -> Self {
        AttackStrategy {
            mode: AttackMode::Deterministic { k },
            ..AttackStrategy::none()
        }
    }

    pub fn bernoulli(p: f64) -> Self {
        AttackStrategy {
            mode: AttackMode::Bernoulli { p },
            ..AttackStrategy::none()
        }
    }

    pub fn with_payload(mut self, payload: PayloadSpec) -> Self {
        self.payload = payload;
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.mode {
            AttackMode::None => Ok(()),
            AttackMode::Deterministic { k } => {
                if k < 1 {
                    return Err(SimError::InvalidConfig("strategy.k must be >= 1".into()));
                }
                self.payload.validate()
            }
            AttackMode::Bernoulli { p } => {
                if !(0.0..=1.0).contains(&p) {
                    return Err(SimError::InvalidConfig(
                        "strategy.p must lie in [0, 1]".into(),
                    ));
                }
                self.payload.validate()
            }
        }
    }
}

/// Decide whether poisoning lands at this cache-miss query.
///
/// At most one poisoning event occurs per scenario: the caller threads
/// `already_succeeded`, and every mode answers false once it is set.
pub fn decide_poison<R: Rng + ?Sized>(
    strategy: &AttackStrategy,
    query_index: u32,
    already_succeeded: bool,
    rng: &mut R,
) -> bool {
    debug_assert!(query_index >= 1);
    if already_succeeded {
        return false;
    }
    match strategy.mode {
        AttackMode::None => false,
        AttackMode::Deterministic { k } => query_index == k,
        AttackMode::Bernoulli { p } => rng.random_bool(p),
    }
}

/// Forge the poisoned reply: fresh attacker-controlled addresses, disjoint
/// from every benign address, under the configured TTL.
pub fn craft_payload(spec: &PayloadSpec) -> Result<DnsResponse> {
    spec.validate()?;
    Ok(DnsResponse {
        addresses: (1..=spec.address_count).map(addr::attacker).collect(),
        ttl_s: spec.ttl_s,
        origin: Origin::Poisoned,
    })
}

/// Capture test applied to the attacker's share of the pool.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptureThreshold {
    /// Share strictly above 2/3 — every trim survivor is malicious.
    StrictTwoThirds,
    /// Share of at least 2/3, for sensitivity studies at the exact boundary.
    GeTwoThirds,
}

impl CaptureThreshold {
    /// Integer-exact share test; no floating point at the boundary.
    pub fn captured(self, malicious: u64, total: u64) -> bool {
        match self {
            CaptureThreshold::StrictTwoThirds => 3 * malicious > 2 * total,
            CaptureThreshold::GeTwoThirds => 3 * malicious >= 2 * total,
        }
    }
}

/// Latest query index at which a successful poisoning still captures the
/// pool, when every earlier query contributed `benign_per_query` benign
/// servers and the payload TTL covers the remaining schedule: the largest k
/// with `payload / (payload + benign_per_query * (k - 1))` above the
/// threshold. Returns 0 only for an empty payload.
pub fn k_max(payload_addresses: u32, benign_per_query: u32, threshold: CaptureThreshold) -> u32 {
    assert!(benign_per_query >= 1, "benign_per_query must be >= 1");
    let m = u64::from(payload_addresses);
    let step = 2 * u64::from(benign_per_query);
    match threshold {
        // fraction > 2/3  <=>  m > step * (k - 1)
        CaptureThreshold::StrictTwoThirds => m.div_ceil(step) as u32,
        // fraction >= 2/3 <=>  m >= step * (k - 1)
        CaptureThreshold::GeTwoThirds => {
            if m == 0 {
                0
            } else {
                (m / step + 1) as u32
            }
        }
    }
}
