//! Client-side clock selection: sample servers from the pool, collect their
//! reported offsets, trim the extremes, and average what survives.

use std::fmt;

use rand::Rng;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::addr::Addr;
use crate::error::{Result, SimError};
use crate::pool::ServerPool;

/// One server's reported clock offset, in milliseconds versus true time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSample {
    pub server: Addr,
    pub offset_ms: i64,
    /// Ground-truth label; selection logic never reads it.
    pub honest: bool,
}

/// Result of one selection: the trimmed mean plus trim bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClockEstimate {
    /// Trimmed mean of the surviving offsets, in milliseconds.
    pub value_ms: f64,
    pub survivors: usize,
    pub discarded_low: usize,
    pub discarded_high: usize,
}

/// How many servers a sync round queries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleSize {
    /// Query every pooled server.
    All,
    /// Query this many servers, clamped to the pool size.
    Count(u32),
}

impl SampleSize {
    pub fn validate(self) -> Result<()> {
        if self == SampleSize::Count(0) {
            return Err(SimError::InvalidConfig("sync.m must be >= 1".into()));
        }
        Ok(())
    }
}

impl fmt::Display for SampleSize {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SampleSize::All => f.write_str("all"),
            SampleSize::Count(m) => write!(f, "{m}"),
        }
    }
}

impl Serialize for SampleSize {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            SampleSize::All => serializer.serialize_str("all"),
            SampleSize::Count(m) => serializer.serialize_u32(*m),
        }
    }
}

impl<'de> Deserialize<'de> for SampleSize {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(u32),
            Text(String),
        }
        match Repr::deserialize(deserializer)? {
            Repr::Count(m) => Ok(SampleSize::Count(m)),
            Repr::Text(s) if s == "all" => Ok(SampleSize::All),
            Repr::Text(s) => Err(D::Error::custom(format!(
                "expected \"all\" or a positive integer, got {s:?}"
            ))),
        }
    }
}

/// Parameters of one synchronization round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyncConfig {
    pub sample_size_m: SampleSize,
    /// Benign servers answer uniformly within ±jitter of zero.
    pub jitter_ms: u64,
    /// Malicious servers all answer exactly this offset.
    pub delta_ms: i64,
}

impl Default for SyncConfig {
    fn default() -> Self {
        SyncConfig {
            sample_size_m: SampleSize::All,
            jitter_ms: 10,
            delta_ms: 100,
        }
    }
}

impl SyncConfig {
    pub fn validate(&self) -> Result<()> {
        self.sample_size_m.validate()
    }
}

/// Trimmed-mean selection: sort offsets ascending (ties broken by server
/// identifier), discard the bottom and top floor(n/3), and average the rest.
/// At least one sample always survives.
pub fn select_time(samples: &[TimeSample]) -> Result<ClockEstimate> {
    if samples.is_empty() {
        return Err(SimError::NoSamples);
    }
    debug_assert!(
        {
            let servers: std::collections::BTreeSet<_> =
                samples.iter().map(|s| s.server).collect();
            servers.len() == samples.len()
        },
        "duplicate server identifiers in sample set"
    );

    let mut ordered: Vec<&TimeSample> = samples.iter().collect();
    ordered.sort_by_key(|s| (s.offset_ms, s.server));

    let n = ordered.len();
    let d = n / 3;
    let survivors = &ordered[d..n - d];
    let sum: i128 = survivors.iter().map(|s| i128::from(s.offset_ms)).sum();
    Ok(ClockEstimate {
        value_ms: sum as f64 / survivors.len() as f64,
        survivors: survivors.len(),
        discarded_low: d,
        discarded_high: d,
    })
}

/// Pick which servers to query: every address for `All` (in address order),
/// otherwise a uniform sample without replacement, clamped to the pool size.
pub fn sample_pool<R: Rng + ?Sized>(
    pool: &ServerPool,
    m: SampleSize,
    rng: &mut R,
) -> Result<Vec<Addr>> {
    if pool.is_empty() {
        return Err(SimError::EmptyPool);
    }
    let addresses = pool.addresses();
    match m {
        SampleSize::All => Ok(addresses),
        SampleSize::Count(m) if m as usize >= addresses.len() => Ok(addresses),
        SampleSize::Count(m) => Ok(rand::seq::index::sample(rng, addresses.len(), m as usize)
            .iter()
            .map(|i| addresses[i])
            .collect()),
    }
}

/// One synchronization round: sample servers, collect their offsets (benign
/// answer 0 ± jitter, malicious answer the configured shift), select time.
pub fn sync_round<R: Rng + ?Sized>(
    pool: &ServerPool,
    cfg: &SyncConfig,
    rng: &mut R,
) -> Result<ClockEstimate> {
    cfg.validate()?;
    let queried = sample_pool(pool, cfg.sample_size_m, rng)?;
    let jitter = cfg.jitter_ms as i64;
    let samples: Vec<TimeSample> = queried
        .into_iter()
        .map(|server| {
            let honest = pool.is_honest(server);
            let offset_ms = if !honest {
                cfg.delta_ms
            } else if jitter == 0 {
                // Zero jitter never touches the randomness stream.
                0
            } else {
                rng.random_range(-jitter..=jitter)
            };
            TimeSample {
                server,
                offset_ms,
                honest,
            }
        })
        .collect();
    select_time(&samples)
}
