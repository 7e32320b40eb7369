//! End-to-end scenarios: pool generation feeding sync rounds, Monte Carlo
//! estimation over many seeds, and the closed-form capture probability the
//! empirical rates are checked against.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adversary::{k_max, AttackStrategy, CaptureThreshold};
use crate::chronos::{sync_round, ClockEstimate, SyncConfig};
use crate::dns::{BenignMode, BenignSource, MitigationPolicy, ResolverState};
use crate::error::{Result, SimError};
use crate::pool::{
    generate_pool, pool_composition, PoolComposition, PoolTimeline, QuerySchedule,
};

fn default_shift_success_factor() -> f64 {
    0.9
}

/// Everything one scenario needs. Two equal configs (seed included) produce
/// bit-identical outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub schedule: QuerySchedule,
    pub strategy: AttackStrategy,
    pub policy: MitigationPolicy,
    pub sync: SyncConfig,
    pub benign_mode: BenignMode,
    pub sync_rounds: u32,
    pub threshold: CaptureThreshold,
    pub seed: u64,
    /// `shift_achieved` requires |achieved shift| >= factor * |delta|.
    #[serde(default = "default_shift_success_factor")]
    pub shift_success_factor: f64,
}

impl Default for ScenarioConfig {
    /// The unattacked baseline: default schedule, no attacker, no policy,
    /// whole-pool sync with 10 ms jitter.
    fn default() -> Self {
        ScenarioConfig {
            schedule: QuerySchedule::default(),
            strategy: AttackStrategy::none(),
            policy: MitigationPolicy::default(),
            sync: SyncConfig::default(),
            benign_mode: BenignMode::Distinct,
            sync_rounds: 1,
            threshold: CaptureThreshold::StrictTwoThirds,
            seed: 0,
            shift_success_factor: default_shift_success_factor(),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.strategy.validate()?;
        self.policy.validate()?;
        self.sync.validate()?;
        if self.benign_mode == BenignMode::FiniteUniverse(0) {
            return Err(SimError::InvalidConfig(
                "benign_mode.universe_size must be >= 1".into(),
            ));
        }
        if !(self.shift_success_factor.is_finite() && self.shift_success_factor > 0.0) {
            return Err(SimError::InvalidConfig(
                "shift_success_factor must be finite and positive".into(),
            ));
        }
        Ok(())
    }
}

/// Everything one scenario produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioOutcome {
    pub timeline: PoolTimeline,
    pub final_composition: PoolComposition,
    pub pool_captured: bool,
    pub clock_estimates: Vec<ClockEstimate>,
    /// Mean estimate across sync rounds, in milliseconds.
    pub achieved_shift_ms: f64,
    pub shift_achieved: bool,
}

/// Run one scenario start to finish: generate the pool over the whole query
/// schedule, then run the configured number of sync rounds against it.
pub fn run_scenario(config: &ScenarioConfig) -> Result<ScenarioOutcome> {
    config.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let mut resolver = ResolverState::new();
    let mut benign = BenignSource::new(config.benign_mode);

    let (pool, timeline) = generate_pool(
        &config.schedule,
        &mut resolver,
        &mut benign,
        &config.strategy,
        &config.policy,
        &mut rng,
    )?;
    let final_composition = pool_composition(&pool)?;
    let pool_captured = config.threshold.captured(
        final_composition.malicious,
        final_composition.benign + final_composition.malicious,
    );

    let mut clock_estimates = Vec::with_capacity(config.sync_rounds as usize);
    for _ in 0..config.sync_rounds {
        clock_estimates.push(sync_round(&pool, &config.sync, &mut rng)?);
    }
    let achieved_shift_ms = if clock_estimates.is_empty() {
        0.0
    } else {
        clock_estimates.iter().map(|e| e.value_ms).sum::<f64>() / clock_estimates.len() as f64
    };
    let shift_achieved = !clock_estimates.is_empty()
        && achieved_shift_ms.abs() >= shift_goal(config.shift_success_factor, config.sync.delta_ms);

    Ok(ScenarioOutcome {
        timeline,
        final_composition,
        pool_captured,
        clock_estimates,
        achieved_shift_ms,
        shift_achieved,
    })
}

fn shift_goal(factor: f64, delta_ms: i64) -> f64 {
    factor * (delta_ms as f64).abs()
}

/// What one Monte Carlo trial contributes to the aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub captured: bool,
    pub shift_achieved: bool,
    pub achieved_shift_ms: f64,
}

impl From<&ScenarioOutcome> for TrialSummary {
    fn from(outcome: &ScenarioOutcome) -> Self {
        TrialSummary {
            captured: outcome.pool_captured,
            shift_achieved: outcome.shift_achieved,
            achieved_shift_ms: outcome.achieved_shift_ms,
        }
    }
}

/// Order-preserving accumulator of trial summaries. Merging is plain
/// concatenation, so any grouping of partial tallies yields the same stats
/// as long as overall trial order is kept.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrialTally {
    summaries: Vec<TrialSummary>,
}

impl TrialTally {
    pub fn push(&mut self, summary: TrialSummary) {
        self.summaries.push(summary);
    }

    pub fn merge(mut self, other: TrialTally) -> TrialTally {
        self.summaries.extend(other.summaries);
        self
    }

    pub fn len(&self) -> usize {
        self.summaries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.summaries.is_empty()
    }

    /// Aggregate rates, mean shift, and the Wilson interval on the capture
    /// rate. Errors on an empty tally.
    pub fn stats(&self) -> Result<MonteCarloStats> {
        if self.summaries.is_empty() {
            return Err(SimError::NoSamples);
        }
        let trials = self.summaries.len() as u64;
        let capture_successes = self.summaries.iter().filter(|s| s.captured).count() as u64;
        let shift_successes = self.summaries.iter().filter(|s| s.shift_achieved).count() as u64;
        let mean_shift_ms = self
            .summaries
            .iter()
            .map(|s| s.achieved_shift_ms)
            .sum::<f64>()
            / trials as f64;
        Ok(MonteCarloStats {
            trials,
            capture_successes,
            capture_rate: capture_successes as f64 / trials as f64,
            shift_success_rate: shift_successes as f64 / trials as f64,
            mean_shift_ms,
            wilson_95_interval: wilson_95(capture_successes, trials),
        })
    }
}

/// Aggregate over many independent trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloStats {
    pub trials: u64,
    pub capture_successes: u64,
    pub capture_rate: f64,
    pub shift_success_rate: f64,
    pub mean_shift_ms: f64,
    pub wilson_95_interval: (f64, f64),
}

/// Derive a per-stream seed from a base seed: the splitmix64 finalizer over
/// the (base, stream) pair. Serial and parallel runs draw identical trial
/// seeds, and distinct streams decorrelate even for adjacent indices.
pub fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base.wrapping_add(stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run `trials` independent scenarios (seeded `mix_seed(config.seed, i)`)
/// and aggregate. Trials execute in parallel; results are collected in trial
/// order, so stats are identical at any thread count.
pub fn monte_carlo(config: &ScenarioConfig, trials: u64) -> Result<MonteCarloStats> {
    if trials == 0 {
        return Err(SimError::InvalidConfig("trials must be >= 1".into()));
    }
    config.validate()?;
    let summaries: Vec<TrialSummary> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let trial = ScenarioConfig {
                seed: mix_seed(config.seed, i),
                ..config.clone()
            };
            run_scenario(&trial).map(|outcome| TrialSummary::from(&outcome))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut tally = TrialTally::default();
    for summary in summaries {
        tally.push(summary);
    }
    tally.stats()
}

/// Wilson 95% score interval for `successes` out of `trials`, clamped to
/// [0, 1]. Stays well-behaved at rates near 0 and 1, where the normal
/// approximation collapses.
pub fn wilson_95(successes: u64, trials: u64) -> (f64, f64) {
    assert!(trials >= 1, "interval needs at least one trial");
    assert!(successes <= trials);
    const Z: f64 = 1.959963984540054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let denom = 1.0 + z2 / n;
    let center = p + z2 / (2.0 * n);
    let half = Z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    (
        ((center - half) / denom).max(0.0),
        ((center + half) / denom).min(1.0),
    )
}

/// Probability that per-query poisoning with success chance `p` lands at or
/// before the capture deadline: 1 − (1−p)^k_max. Assumes an attempt at every
/// query until the first success, a long-TTL payload, and a schedule long
/// enough to offer k_max attempts.
pub fn analytic_capture_probability(p: f64, payload_addresses: u32) -> f64 {
    analytic_capture_probability_for(
        p,
        payload_addresses,
        crate::dns::BENIGN_ADDRESSES_PER_RESPONSE,
        CaptureThreshold::StrictTwoThirds,
    )
}

/// As [`analytic_capture_probability`], generalized over the benign reply
/// size and the capture threshold.
pub fn analytic_capture_probability_for(
    p: f64,
    payload_addresses: u32,
    benign_per_query: u32,
    threshold: CaptureThreshold,
) -> f64 {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    assert!(payload_addresses >= 1);
    let deadline = k_max(payload_addresses, benign_per_query, threshold);
    1.0 - (1.0 - p).powi(deadline as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::PayloadSpec;
    use crate::dns::Origin;

    fn exact_sync() -> SyncConfig {
        SyncConfig {
            jitter_ms: 0,
            ..SyncConfig::default()
        }
    }

    fn attack_at(k: u32) -> ScenarioConfig {
        ScenarioConfig {
            strategy: AttackStrategy::deterministic(k),
            sync: exact_sync(),
            seed: 42,
            ..ScenarioConfig::default()
        }
    }

    fn bernoulli_attack(p: f64) -> ScenarioConfig {
        ScenarioConfig {
            strategy: AttackStrategy::bernoulli(p),
            sync: exact_sync(),
            seed: 42,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn baseline_scenario_is_benign_and_unshifted() {
        let outcome = run_scenario(&ScenarioConfig::default()).unwrap();
        assert_eq!(outcome.final_composition.benign, 96);
        assert_eq!(outcome.final_composition.malicious, 0);
        assert!(!outcome.pool_captured);
        assert!(outcome.achieved_shift_ms.abs() <= 10.0, "within jitter");
        assert!(!outcome.shift_achieved);
        assert_eq!(outcome.timeline.len(), 24);
    }

    #[test]
    fn deadline_poisoning_captures_and_fully_shifts_the_clock() {
        let outcome = run_scenario(&attack_at(12)).unwrap();
        assert_eq!(
            (outcome.final_composition.benign, outcome.final_composition.malicious),
            (44, 89)
        );
        assert!((outcome.final_composition.fraction - 89.0 / 133.0).abs() < 1e-12);
        assert!(outcome.pool_captured);
        assert_eq!(outcome.achieved_shift_ms, 100.0);
        assert!(outcome.shift_achieved);
        assert_eq!(outcome.clock_estimates[0].survivors, 45);
    }

    #[test]
    fn one_query_past_the_deadline_no_longer_captures() {
        let outcome = run_scenario(&attack_at(13)).unwrap();
        assert_eq!(
            (outcome.final_composition.benign, outcome.final_composition.malicious),
            (48, 89)
        );
        assert!(!outcome.pool_captured);
        // 137 samples, trim 45 per side: 3 benign zeros survive among the
        // 44 surviving shifts, so the clock still moves most of the way.
        assert_eq!(outcome.achieved_shift_ms, 4400.0 / 47.0);
    }

    #[test]
    fn enforced_policy_defeats_the_attack() {
        let config = ScenarioConfig {
            policy: MitigationPolicy::enforcing(),
            ..attack_at(12)
        };
        let outcome = run_scenario(&config).unwrap();
        assert_eq!(
            (outcome.final_composition.benign, outcome.final_composition.malicious),
            (92, 0)
        );
        assert!(!outcome.pool_captured);
        assert_eq!(outcome.achieved_shift_ms, 0.0);
        assert!(!outcome.shift_achieved);
    }

    #[test]
    fn equal_configs_give_bit_identical_outcomes() {
        let config = ScenarioConfig {
            sync: SyncConfig::default(), // jitter active, so RNG is exercised
            sync_rounds: 5,
            ..bernoulli_attack(0.3)
        };
        let a = run_scenario(&config).unwrap();
        let b = run_scenario(&config).unwrap();
        assert_eq!(a, b);
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn zero_sync_rounds_reports_no_shift() {
        let config = ScenarioConfig {
            sync_rounds: 0,
            ..attack_at(12)
        };
        let outcome = run_scenario(&config).unwrap();
        assert!(outcome.clock_estimates.is_empty());
        assert_eq!(outcome.achieved_shift_ms, 0.0);
        assert!(!outcome.shift_achieved);
        assert!(outcome.pool_captured, "capture is a pool property");
    }

    #[test]
    fn invalid_configs_are_rejected_before_running() {
        let zero_universe = ScenarioConfig {
            benign_mode: BenignMode::FiniteUniverse(0),
            ..ScenarioConfig::default()
        };
        assert!(run_scenario(&zero_universe).is_err());

        let bad_p = ScenarioConfig {
            strategy: AttackStrategy::bernoulli(1.5),
            ..ScenarioConfig::default()
        };
        assert!(run_scenario(&bad_p).is_err());

        let oversized = ScenarioConfig {
            strategy: AttackStrategy::deterministic(1).with_payload(PayloadSpec {
                address_count: 90,
                ..PayloadSpec::default()
            }),
            ..ScenarioConfig::default()
        };
        assert_eq!(
            run_scenario(&oversized),
            Err(SimError::PayloadTooLarge {
                requested: 90,
                capacity: 89
            })
        );
    }

    #[test]
    fn certain_poisoning_always_captures() {
        let stats = monte_carlo(&bernoulli_attack(1.0), 200).unwrap();
        assert_eq!(stats.capture_rate, 1.0);
        assert_eq!(stats.capture_successes, 200);
        assert_eq!(stats.mean_shift_ms, 100.0);
        assert_eq!(stats.shift_success_rate, 1.0);
    }

    #[test]
    fn impossible_poisoning_never_captures() {
        let stats = monte_carlo(&bernoulli_attack(0.0), 200).unwrap();
        assert_eq!(stats.capture_rate, 0.0);
        assert_eq!(stats.capture_successes, 0);
        assert_eq!(stats.mean_shift_ms, 0.0);
    }

    #[test]
    fn zero_trials_is_a_domain_error() {
        assert_eq!(
            monte_carlo(&bernoulli_attack(0.5), 0),
            Err(SimError::InvalidConfig("trials must be >= 1".into()))
        );
    }

    #[test]
    fn empirical_rate_tracks_the_closed_form() {
        let stats = monte_carlo(&bernoulli_attack(0.1), 5000).unwrap();
        let analytic = analytic_capture_probability(0.1, 89);
        assert!(
            (stats.capture_rate - analytic).abs() < 0.03,
            "empirical {} vs analytic {analytic}",
            stats.capture_rate
        );
        let (low, high) = stats.wilson_95_interval;
        assert!(low <= stats.capture_rate && stats.capture_rate <= high);
    }

    #[test]
    fn capture_happens_exactly_when_poisoning_beats_the_deadline() {
        let base = bernoulli_attack(0.3);
        let deadline = k_max(89, 4, CaptureThreshold::StrictTwoThirds);
        let mut saw_both = (false, false);
        for i in 0..200 {
            let config = ScenarioConfig {
                seed: mix_seed(base.seed, i),
                ..base.clone()
            };
            let outcome = run_scenario(&config).unwrap();
            let first_hit = outcome
                .timeline
                .iter()
                .find(|r| r.origin == Origin::Poisoned)
                .map(|r| r.query_index);
            let should_capture = first_hit.is_some_and(|k| k <= deadline);
            assert_eq!(outcome.pool_captured, should_capture, "trial {i}");
            if outcome.pool_captured {
                // Shift dominance: a captured pool moves the clock exactly.
                assert_eq!(outcome.achieved_shift_ms, 100.0);
                saw_both.0 = true;
            } else {
                saw_both.1 = true;
            }
        }
        assert_eq!(saw_both, (true, true), "both branches exercised");
    }

    #[test]
    fn tally_stats_are_grouping_invariant() {
        let summaries: Vec<TrialSummary> = (0..97)
            .map(|i| {
                let outcome =
                    run_scenario(&ScenarioConfig {
                        seed: mix_seed(9, i),
                        ..bernoulli_attack(0.4)
                    })
                    .unwrap();
                TrialSummary::from(&outcome)
            })
            .collect();

        let whole = {
            let mut t = TrialTally::default();
            summaries.iter().for_each(|s| t.push(*s));
            t.stats().unwrap()
        };
        for split in [1, 13, 48, 96] {
            let (a, b) = summaries.split_at(split);
            let mut left = TrialTally::default();
            a.iter().for_each(|s| left.push(*s));
            let mut right = TrialTally::default();
            b.iter().for_each(|s| right.push(*s));
            assert_eq!(left.merge(right).stats().unwrap(), whole);
        }
    }

    #[test]
    fn empty_tally_has_no_stats() {
        assert_eq!(TrialTally::default().stats(), Err(SimError::NoSamples));
    }

    #[test]
    fn mix_seed_separates_streams_and_bases() {
        let a: Vec<u64> = (0..100).map(|i| mix_seed(1, i)).collect();
        let b: Vec<u64> = (0..100).map(|i| mix_seed(2, i)).collect();
        let unique: std::collections::BTreeSet<_> = a.iter().chain(b.iter()).collect();
        assert_eq!(unique.len(), 200, "no collisions across streams or bases");
        assert_ne!(mix_seed(1, 0), 1, "stream 0 is already mixed");
    }

    #[test]
    fn wilson_endpoints_satisfy_the_score_equation() {
        // Each endpoint p* of the score interval solves
        // (phat - p)^2 = z^2 p (1 - p) / n.
        const Z: f64 = 1.959963984540054;
        for (s, n) in [(0u64, 10u64), (8, 10), (10, 10), (500, 1000), (71757, 100_000)] {
            let (low, high) = wilson_95(s, n);
            let phat = s as f64 / n as f64;
            for p in [low, high] {
                let lhs = (phat - p) * (phat - p);
                let rhs = Z * Z * p * (1.0 - p) / n as f64;
                assert!((lhs - rhs).abs() < 1e-9, "s={s} n={n} p={p}");
            }
            assert!((0.0..=1.0).contains(&low) && low <= high && high <= 1.0);
        }
    }

    #[test]
    fn wilson_degenerate_counts_pin_to_the_unit_boundary() {
        // At 0 and n successes, p = 0 and p = 1 are exact roots of the score
        // equation; the computed endpoints land there up to rounding.
        let (low, _) = wilson_95(0, 50);
        let (_, high) = wilson_95(50, 50);
        assert!((0.0..1e-15).contains(&low));
        assert!(high > 1.0 - 1e-15 && high <= 1.0);
    }

    #[test]
    fn analytic_probability_matches_hand_values() {
        assert_eq!(analytic_capture_probability(1.0, 89), 1.0);
        assert_eq!(analytic_capture_probability(0.0, 89), 0.0);
        let twelve_tries = 1.0 - 0.9f64.powi(12);
        assert_eq!(analytic_capture_probability(0.1, 89), twelve_tries);
        assert!((twelve_tries - 0.717570).abs() < 1e-6);
        assert_eq!(analytic_capture_probability(0.5, 89), 1.0 - 0.5f64.powi(12));
        // Single-query deadline: success must land immediately.
        assert_eq!(analytic_capture_probability(0.3, 8), 1.0 - 0.7f64.powi(1));
    }

    #[test]
    fn mechanism_tag_never_steers_outcomes() {
        let mut tagged = attack_at(12);
        tagged.strategy.mechanism_tag = "second-fragment splice".into();
        let plain = run_scenario(&attack_at(12)).unwrap();
        let with_tag = run_scenario(&tagged).unwrap();
        assert_eq!(plain, with_tag);
    }
}
