//! Deterministic text renderings: CSV tables, JSON documents, and the
//! one-paragraph human summaries. Byte-identical inputs give byte-identical
//! strings, so output files can be compared directly across runs.

use std::fmt::Write as _;

use serde::Serialize;

use chronosim_core::{MonteCarloStats, ScenarioOutcome, TimelineRecord};

pub const TIMELINE_HEADER: &str =
    "query_index,time_s,origin,new_addresses,cum_benign,cum_malicious,attacker_fraction";

/// One row per pool-generation query. Fractions carry six decimals.
pub fn render_timeline_csv(timeline: &[TimelineRecord]) -> String {
    let mut out = String::with_capacity(48 * (timeline.len() + 1));
    out.push_str(TIMELINE_HEADER);
    out.push('\n');
    for r in timeline {
        writeln!(
            out,
            "{},{},{},{},{},{},{:.6}",
            r.query_index,
            r.time_s,
            r.origin,
            r.new_addresses,
            r.cum_benign,
            r.cum_malicious,
            r.attacker_fraction
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Pretty JSON with a trailing newline; field order is fixed by the types.
pub fn render_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("value serializes");
    out.push('\n');
    out
}

/// One sweep cell: a (p, M) grid point and what came out of it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub p: f64,
    #[serde(rename = "M")]
    pub payload_addresses: u32,
    pub k_max: u32,
    pub analytic_capture: f64,
    pub empirical_capture: f64,
    pub mean_shift_ms: f64,
    pub trials: u64,
}

pub const SWEEP_HEADER: &str = "p,M,k_max,analytic_capture,empirical_capture,mean_shift_ms,trials";

/// Rows are emitted in the order given; callers sort by (p, M) first.
pub fn render_sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::with_capacity(48 * (rows.len() + 1));
    out.push_str(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.3},{}",
            r.p,
            r.payload_addresses,
            r.k_max,
            r.analytic_capture,
            r.empirical_capture,
            r.mean_shift_ms,
            r.trials
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// The one-paragraph summary printed after `run`.
pub fn render_run_summary(outcome: &ScenarioOutcome, stats: Option<&MonteCarloStats>) -> String {
    let c = &outcome.final_composition;
    let mut out = format!(
        "Pool after {} queries: {} benign / {} malicious servers (attacker share {:.6}) — {}.",
        outcome.timeline.len(),
        c.benign,
        c.malicious,
        c.fraction,
        if outcome.pool_captured {
            "pool captured"
        } else {
            "pool not captured"
        }
    );
    if outcome.clock_estimates.is_empty() {
        out.push_str(" No sync rounds requested.");
    } else {
        write!(
            out,
            " Sync over {} round(s): mean clock shift {:+.3} ms — shift goal {}.",
            outcome.clock_estimates.len(),
            outcome.achieved_shift_ms,
            if outcome.shift_achieved { "met" } else { "not met" }
        )
        .expect("writing to a String cannot fail");
    }
    if let Some(s) = stats {
        write!(
            out,
            " Monte Carlo over {} trials: capture rate {:.6} (95% interval {:.6}..{:.6}), \
             shift-success rate {:.6}, mean shift {:+.3} ms.",
            s.trials,
            s.capture_rate,
            s.wilson_95_interval.0,
            s.wilson_95_interval.1,
            s.shift_success_rate,
            s.mean_shift_ms
        )
        .expect("writing to a String cannot fail");
    }
    out
}

/// Answer to a wire-size query.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WireReport {
    pub qname: String,
    pub mtu: u32,
    pub edns: bool,
    pub payload_budget_bytes: u32,
    pub empty_message_bytes: u32,
    pub per_record_bytes: u32,
    pub max_a_records: u32,
}

pub fn render_wire_table(report: &WireReport) -> String {
    format!(
        "qname            {}\n\
         mtu              {}\n\
         edns             {}\n\
         payload budget   {} bytes\n\
         empty message    {} bytes\n\
         per A record     {} bytes\n\
         max A records    {}\n",
        report.qname,
        report.mtu,
        if report.edns { "yes" } else { "no" },
        report.payload_budget_bytes,
        report.empty_message_bytes,
        report.per_record_bytes,
        report.max_a_records
    )
}
