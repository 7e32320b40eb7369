//! Pool bootstrap: periodic DNS queries whose accepted replies accumulate
//! into a deduplicated server pool, with per-address provenance and a
//! per-query timeline.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::addr::Addr;
use crate::adversary::{craft_payload, decide_poison, AttackStrategy};
use crate::dns::{
    apply_mitigation, resolve, BenignSource, MitigationPolicy, MitigationVerdict, Origin,
    ResolverState,
};
use crate::error::{Result, SimError};

/// Query cadence for pool generation. The first query fires at `start_s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySchedule {
    pub query_count: u32,
    pub interval_s: u64,
    pub start_s: u64,
}

impl Default for QuerySchedule {
    /// Hourly queries for 24 hours.
    fn default() -> Self {
        QuerySchedule {
            query_count: 24,
            interval_s: 3600,
            start_s: 0,
        }
    }
}

impl QuerySchedule {
    pub fn validate(&self) -> Result<()> {
        if self.query_count < 1 {
            return Err(SimError::InvalidConfig(
                "schedule.query_count must be >= 1".into(),
            ));
        }
        if self.interval_s == 0 {
            return Err(SimError::InvalidConfig(
                "schedule.interval_s must be > 0".into(),
            ));
        }
        Ok(())
    }

    /// Wall-clock time of query `k` (1-based).
    pub fn time_of(&self, k: u32) -> u64 {
        self.start_s + u64::from(k - 1) * self.interval_s
    }
}

/// Provenance for one pooled address.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolEntry {
    /// Ground-truth label; selection logic never reads it.
    pub honest: bool,
    /// Query index (1-based) whose reply introduced the address.
    pub added_at_query: u32,
    /// Origin of the reply that introduced the address.
    pub origin: Origin,
}

/// Accumulated pool, deduplicated by address and iterated in address order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ServerPool {
    entries: BTreeMap<Addr, PoolEntry>,
}

impl ServerPool {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All addresses in ascending order.
    pub fn addresses(&self) -> Vec<Addr> {
        self.entries.keys().copied().collect()
    }

    pub fn get(&self, addr: Addr) -> Option<&PoolEntry> {
        self.entries.get(&addr)
    }

    /// Ground-truth label of a pooled server. Panics on an address that was
    /// never pooled; callers only look up addresses they sampled.
    pub fn is_honest(&self, addr: Addr) -> bool {
        self.entries
            .get(&addr)
            .unwrap_or_else(|| panic!("address {addr} not in pool"))
            .honest
    }

    /// Insert if unseen; returns whether the address was new.
    pub fn insert_new(&mut self, addr: Addr, entry: PoolEntry) -> bool {
        match self.entries.entry(addr) {
            std::collections::btree_map::Entry::Vacant(slot) => {
                slot.insert(entry);
                true
            }
            std::collections::btree_map::Entry::Occupied(_) => false,
        }
    }

    /// (benign, malicious) counts by ground-truth label.
    pub fn counts(&self) -> (u64, u64) {
        let malicious = self.entries.values().filter(|e| !e.honest).count() as u64;
        (self.entries.len() as u64 - malicious, malicious)
    }
}

/// One timeline row per query.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimelineRecord {
    pub query_index: u32,
    pub time_s: u64,
    pub origin: Origin,
    pub new_addresses: u32,
    pub cum_benign: u64,
    pub cum_malicious: u64,
    pub attacker_fraction: f64,
}

pub type PoolTimeline = Vec<TimelineRecord>;

/// Composition of a finished pool.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoolComposition {
    pub benign: u64,
    pub malicious: u64,
    pub fraction: f64,
}

/// Counts by ground-truth label plus the attacker's share.
pub fn pool_composition(pool: &ServerPool) -> Result<PoolComposition> {
    if pool.is_empty() {
        return Err(SimError::EmptyPool);
    }
    let (benign, malicious) = pool.counts();
    Ok(PoolComposition {
        benign,
        malicious,
        fraction: malicious as f64 / (benign + malicious) as f64,
    })
}

fn fraction_or_zero(malicious: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        malicious as f64 / total as f64
    }
}

/// Run the whole query schedule against the resolver and accumulate the pool.
///
/// Per query: the attacker is consulted only when the cache is stale; the
/// reply (cache, injected, or benign upstream) passes through the mitigation
/// policy; accepted replies contribute their unseen addresses, rejected ones
/// contribute nothing and are evicted so they never answer from cache.
pub fn generate_pool<R: Rng + ?Sized>(
    schedule: &QuerySchedule,
    resolver: &mut ResolverState,
    benign: &mut BenignSource,
    strategy: &AttackStrategy,
    policy: &MitigationPolicy,
    rng: &mut R,
) -> Result<(ServerPool, PoolTimeline)> {
    schedule.validate()?;
    strategy.validate()?;
    policy.validate()?;

    let mut pool = ServerPool::default();
    let mut timeline = Vec::with_capacity(schedule.query_count as usize);
    let mut poisoning_happened = false;
    // Origin the current cache entry had when it went in; cache hits inherit
    // it for ground-truth labeling.
    let mut cached_content_origin = Origin::BenignUpstream;

    for k in 1..=schedule.query_count {
        resolver.advance_to(schedule.time_of(k));

        let injection = if !resolver.cache_is_fresh()
            && decide_poison(strategy, k, poisoning_happened, rng)
        {
            poisoning_happened = true;
            Some(craft_payload(&strategy.payload)?)
        } else {
            None
        };

        let response = resolve(resolver, benign, injection, rng);
        let row_origin = response.origin;

        let mut new_addresses = 0u32;
        match apply_mitigation(&response, policy) {
            MitigationVerdict::Accepted(accepted) => {
                let content_origin = if accepted.origin == Origin::Cache {
                    cached_content_origin
                } else {
                    cached_content_origin = accepted.origin;
                    accepted.origin
                };
                let honest = content_origin != Origin::Poisoned;
                for address in accepted.addresses {
                    let entry = PoolEntry {
                        honest,
                        added_at_query: k,
                        origin: accepted.origin,
                    };
                    if pool.insert_new(address, entry) {
                        new_addresses += 1;
                    }
                }
            }
            MitigationVerdict::Rejected(_) => {
                if row_origin != Origin::Cache {
                    resolver.evict();
                }
            }
        }

        let (cum_benign, cum_malicious) = pool.counts();
        timeline.push(TimelineRecord {
            query_index: k,
            time_s: resolver.now_s(),
            origin: row_origin,
            new_addresses,
            cum_benign,
            cum_malicious,
            attacker_fraction: fraction_or_zero(cum_malicious, cum_benign + cum_malicious),
        });
    }

    Ok((pool, timeline))
}
