//! The simulated shared resolver: TTL-faithful caching, the benign upstream
//! behavior for the pool domain, and the client-side reply policy.

pub mod wire;

use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::addr::{self, Addr};

/// Where a DNS response came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    BenignUpstream,
    Poisoned,
    Cache,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Origin::BenignUpstream => "benign-upstream",
            Origin::Poisoned => "poisoned",
            Origin::Cache => "cache",
        };
        f.write_str(s)
    }
}

/// One DNS reply: a duplicate-free set of NTP server addresses plus the TTL
/// the resolver would cache it under.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DnsResponse {
    pub addresses: Vec<Addr>,
    pub ttl_s: u64,
    pub origin: Origin,
}

/// Addresses per benign reply for the pool domain.
pub const BENIGN_ADDRESSES_PER_RESPONSE: u32 = 4;

/// TTL on benign replies. Short enough that hourly queries always miss the
/// cache, so every benign query reaches upstream for new addresses.
pub const BENIGN_TTL_S: u64 = 150;

/// How the benign address universe behaves across queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BenignMode {
    /// Every upstream draw yields previously-unseen addresses.
    Distinct,
    /// Draws come uniformly from a fixed universe of this many addresses,
    /// with replacement across queries (duplicates dedup away downstream).
    FiniteUniverse(u32),
}

/// Stateful source of benign upstream replies.
#[derive(Debug, Clone)]
pub struct BenignSource {
    mode: BenignMode,
    per_response: u32,
    ttl_s: u64,
    allocated: u32,
}

impl BenignSource {
    pub fn new(mode: BenignMode) -> Self {
        BenignSource {
            mode,
            per_response: BENIGN_ADDRESSES_PER_RESPONSE,
            ttl_s: BENIGN_TTL_S,
            allocated: 0,
        }
    }

    pub fn with_per_response(mut self, per_response: u32) -> Self {
        assert!(per_response >= 1);
        self.per_response = per_response;
        self
    }

    pub fn with_ttl(mut self, ttl_s: u64) -> Self {
        self.ttl_s = ttl_s;
        self
    }

    /// Draw one benign reply. Distinct mode allocates sequentially and never
    /// consumes randomness; finite-universe mode samples without replacement
    /// within the reply (a reply never repeats an address).
    pub fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> DnsResponse {
        let addresses: Vec<Addr> = match self.mode {
            BenignMode::Distinct => (0..self.per_response)
                .map(|_| {
                    self.allocated += 1;
                    addr::benign(self.allocated)
                })
                .collect(),
            BenignMode::FiniteUniverse(universe) => {
                let count = self.per_response.min(universe) as usize;
                rand::seq::index::sample(rng, universe as usize, count)
                    .iter()
                    .map(|i| addr::benign(i as u32 + 1))
                    .collect()
            }
        };
        DnsResponse {
            addresses,
            ttl_s: self.ttl_s,
            origin: Origin::BenignUpstream,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct CacheEntry {
    response: DnsResponse,
    inserted_at_s: u64,
}

/// The shared resolver's cache slot for the pool domain, plus its clock.
/// A value threaded explicitly through the query loop.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ResolverState {
    cached: Option<CacheEntry>,
    now_s: u64,
}

impl ResolverState {
    pub fn new() -> Self {
        ResolverState::default()
    }

    pub fn now_s(&self) -> u64 {
        self.now_s
    }

    /// Move the resolver clock forward. Time never runs backwards.
    pub fn advance_to(&mut self, now_s: u64) {
        debug_assert!(now_s >= self.now_s);
        self.now_s = now_s;
    }

    /// A cached entry answers queries strictly before `inserted_at + ttl`.
    pub fn cache_is_fresh(&self) -> bool {
        self.cached
            .as_ref()
            .is_some_and(|e| self.now_s - e.inserted_at_s < e.response.ttl_s)
    }

    /// Origin the cached entry had when it entered the cache.
    pub fn cached_origin(&self) -> Option<Origin> {
        self.cached.as_ref().map(|e| e.response.origin)
    }

    /// Drop the cached entry. A reply the client discards must not stay
    /// cached, so the query loop evicts after a rejection.
    pub fn evict(&mut self) {
        self.cached = None;
    }
}

/// Answer one query at the resolver's current time.
///
/// A fresh cache entry is served as-is with its origin rewritten to `Cache`,
/// without touching the upstream. On a miss, a present `injection` wins the
/// race and is cached; otherwise the benign upstream answers and is cached.
pub fn resolve<R: Rng + ?Sized>(
    state: &mut ResolverState,
    benign: &mut BenignSource,
    injection: Option<DnsResponse>,
    rng: &mut R,
) -> DnsResponse {
    if state.cache_is_fresh() {
        let entry = state.cached.as_ref().expect("fresh cache entry");
        let mut served = entry.response.clone();
        served.origin = Origin::Cache;
        return served;
    }
    let response = injection.unwrap_or_else(|| benign.draw(rng));
    state.cached = Some(CacheEntry {
        response: response.clone(),
        inserted_at_s: state.now_s,
    });
    response
}

/// Client-side reply policy: cap the addresses per reply and discard
/// suspiciously long TTLs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MitigationPolicy {
    pub enabled: bool,
    pub max_addresses: u32,
    pub max_ttl_s: u64,
}

impl Default for MitigationPolicy {
    fn default() -> Self {
        MitigationPolicy {
            enabled: false,
            max_addresses: 4,
            max_ttl_s: 3600,
        }
    }
}

impl MitigationPolicy {
    /// The default limits with enforcement switched on.
    pub fn enforcing() -> Self {
        MitigationPolicy {
            enabled: true,
            ..MitigationPolicy::default()
        }
    }

    pub fn validate(&self) -> crate::error::Result<()> {
        if self.max_addresses < 1 {
            return Err(crate::error::SimError::InvalidConfig(
                "policy.max_addresses must be >= 1".into(),
            ));
        }
        if self.max_ttl_s == 0 {
            return Err(crate::error::SimError::InvalidConfig(
                "policy.max_ttl_s must be > 0".into(),
            ));
        }
        Ok(())
    }
}

/// Why a reply was discarded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RejectReason {
    TooManyAddresses,
    TtlTooHigh,
}

/// Outcome of checking one reply against the policy. A rejection is a typed
/// result, not an error: the query simply contributes nothing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum MitigationVerdict {
    Accepted(DnsResponse),
    Rejected(RejectReason),
}

impl MitigationVerdict {
    pub fn is_accepted(&self) -> bool {
        matches!(self, MitigationVerdict::Accepted(_))
    }
}

/// Check one reply. Disabled policies pass everything through unchanged.
/// The address-count check runs before the TTL check.
pub fn apply_mitigation(response: &DnsResponse, policy: &MitigationPolicy) -> MitigationVerdict {
    if policy.enabled {
        if response.addresses.len() as u64 > u64::from(policy.max_addresses) {
            return MitigationVerdict::Rejected(RejectReason::TooManyAddresses);
        }
        if response.ttl_s > policy.max_ttl_s {
            return MitigationVerdict::Rejected(RejectReason::TtlTooHigh);
        }
    }
    MitigationVerdict::Accepted(response.clone())
}
