//! Deterministic simulator for DNS cache-poisoning attacks on NTP clients
//! that build their server pool from periodic DNS queries and pick time by
//! a trimmed mean.
//!
//! The model has four moving parts:
//!
//! * [`dns`] — a TTL-faithful resolver cache, the benign upstream that hands
//!   out four addresses per query, a wire-size model bounding how many
//!   addresses fit one non-fragmented UDP reply, and the client-side reply
//!   policy (address cap + TTL cap).
//! * [`adversary`] — when a poisoning attempt lands, what the forged reply
//!   carries, and the closed-form capture deadline `k_max`.
//! * [`pool`] — the query schedule that accumulates the server pool, with
//!   per-address provenance and a per-query timeline.
//! * [`chronos`] — client clock selection: sample servers, trim the bottom
//!   and top third of offsets, average the survivors.
//!
//! [`engine`] composes those into runnable scenarios and Monte Carlo
//! estimates. Everything is a pure function of its inputs plus an explicit
//! seed: equal configs give bit-identical outcomes at any thread count.
//!
//! The headline scenario: an attacker who poisons the shared resolver once,
//! early enough (`k_max`), with a reply full of addresses under a long TTL,
//! owns more than two thirds of the generated pool — and with that, the
//! trimmed mean moves wherever the attacker wants it.

pub mod addr;
pub mod adversary;
pub mod chronos;
pub mod dns;
pub mod engine;
pub mod error;
pub mod pool;

pub use addr::Addr;
pub use adversary::{
    craft_payload, decide_poison, k_max, AttackMode, AttackStrategy, CaptureThreshold,
    PayloadSpec,
};
pub use chronos::{
    sample_pool, select_time, sync_round, ClockEstimate, SampleSize, SyncConfig, TimeSample,
};
pub use dns::wire::{encoded_size, max_a_records, WireParams};
pub use dns::{
    apply_mitigation, resolve, BenignMode, BenignSource, DnsResponse, MitigationPolicy,
    MitigationVerdict, Origin, RejectReason, ResolverState,
};
pub use engine::{
    analytic_capture_probability, analytic_capture_probability_for, mix_seed, monte_carlo,
    run_scenario, wilson_95, MonteCarloStats, ScenarioConfig, ScenarioOutcome, TrialSummary,
    TrialTally,
};
pub use error::{Result, SimError};
pub use pool::{
    generate_pool, pool_composition, PoolComposition, PoolEntry, PoolTimeline, QuerySchedule,
    ServerPool, TimelineRecord,
};
