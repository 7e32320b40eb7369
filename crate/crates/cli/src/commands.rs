//! Subcommand definitions and implementations. Everything here returns
//! [`CliError`] so `main` owns the exit-code mapping: 0 success, 1 usage or
//! config problems, 2 runtime domain errors.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use chronosim_core::dns::wire::{encoded_size, max_a_records, A_RECORD_BYTES, DEFAULT_MTU, DEFAULT_QNAME};
use chronosim_core::dns::BENIGN_ADDRESSES_PER_RESPONSE;
use chronosim_core::{
    analytic_capture_probability_for, k_max, mix_seed, monte_carlo, run_scenario, AttackMode,
    AttackStrategy, MonteCarloStats, PayloadSpec, ScenarioConfig, WireParams,
};

use crate::config;
use crate::report::{
    render_json, render_run_summary, render_sweep_csv, render_timeline_csv, render_wire_table,
    SweepRow, WireReport,
};
use crate::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "chronosim",
    version,
    about = "Deterministic simulator of DNS cache poisoning against pool-fed, trim-averaging NTP clients"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario (and optionally a Monte Carlo estimate on top)
    Run(RunArgs),
    /// Monte Carlo over a grid of poisoning probabilities and payload sizes
    Sweep(SweepArgs),
    /// Show how many A records fit one non-fragmented DNS response
    Wire(WireArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Preset name (baseline, paper_attack, paper_attack_mitigated,
    /// short_ttl) or path to a scenario TOML file
    #[arg(long)]
    pub config: String,

    /// Override the config's seed
    #[arg(long)]
    pub seed: Option<u64>,

    /// Also run this many Monte Carlo trials and write stats.json
    #[arg(long)]
    pub trials: Option<u64>,

    /// Output directory (created if absent)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Replace existing output files
    #[arg(long)]
    pub overwrite: bool,

    /// Print machine-readable JSON to stdout instead of the summary
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Base scenario: preset name or TOML path; the grid overrides its
    /// strategy cell by cell
    #[arg(long, default_value = "baseline")]
    pub config: String,

    /// Comma-separated per-query poisoning probabilities
    #[arg(long, value_delimiter = ',', required = true)]
    pub p: Vec<f64>,

    /// Comma-separated payload sizes (addresses per forged reply)
    #[arg(long, value_delimiter = ',', required = true)]
    pub m: Vec<u32>,

    /// Monte Carlo trials per grid cell
    #[arg(long, default_value_t = 1000)]
    pub trials: u64,

    /// Override the config's seed
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output directory (created if absent)
    #[arg(long, default_value = "out")]
    pub out: PathBuf,

    /// Replace existing output files
    #[arg(long)]
    pub overwrite: bool,

    /// Print the rows as JSON to stdout instead of the summary
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct WireArgs {
    /// Question name of the response
    #[arg(long, default_value = DEFAULT_QNAME)]
    pub qname: String,

    /// Path MTU in bytes
    #[arg(long, default_value_t = DEFAULT_MTU)]
    pub mtu: u32,

    /// Cap the message at the classic 512-byte UDP limit instead of EDNS
    #[arg(long)]
    pub no_edns: bool,

    /// Print machine-readable JSON instead of the table
    #[arg(long)]
    pub json: bool,
}

pub fn dispatch(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Wire(args) => cmd_wire(args),
    }
}

fn runtime_io(path: &Path, err: std::io::Error) -> CliError {
    CliError::Runtime(format!("cannot write {}: {err}", path.display()))
}

fn write_guarded(path: &Path, contents: &str, overwrite: bool) -> Result<(), CliError> {
    if path.exists() && !overwrite {
        return Err(CliError::Usage(format!(
            "refusing to overwrite {}; pass --overwrite",
            path.display()
        )));
    }
    fs::write(path, contents).map_err(|e| runtime_io(path, e))
}

pub fn cmd_run(args: &RunArgs) -> Result<(), CliError> {
    if args.trials == Some(0) {
        return Err(CliError::Usage("--trials must be >= 1".into()));
    }
    let mut scenario = config::load(&args.config)?.into_scenario()?;
    if let Some(seed) = args.seed {
        scenario.seed = seed;
    }

    let outcome = run_scenario(&scenario)?;
    let stats: Option<MonteCarloStats> = match args.trials {
        Some(trials) => Some(monte_carlo(&scenario, trials)?),
        None => None,
    };

    fs::create_dir_all(&args.out).map_err(|e| runtime_io(&args.out, e))?;
    write_guarded(
        &args.out.join("timeline.csv"),
        &render_timeline_csv(&outcome.timeline),
        args.overwrite,
    )?;
    write_guarded(
        &args.out.join("outcome.json"),
        &render_json(&outcome),
        args.overwrite,
    )?;
    if let Some(stats) = &stats {
        write_guarded(
            &args.out.join("stats.json"),
            &render_json(stats),
            args.overwrite,
        )?;
    }

    if args.json {
        let doc = serde_json::json!({ "outcome": outcome, "stats": stats });
        print!("{}", render_json(&doc));
    } else {
        println!("{}", render_run_summary(&outcome, stats.as_ref()));
    }
    Ok(())
}

pub fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be >= 1".into()));
    }
    for &p in &args.p {
        if !(0.0..=1.0).contains(&p) {
            return Err(CliError::Usage(format!(
                "--p values must lie in [0, 1], got {p}"
            )));
        }
    }
    for &m in &args.m {
        if m == 0 {
            return Err(CliError::Usage("--m values must be >= 1".into()));
        }
    }

    let mut base = config::load(&args.config)?.into_scenario()?;
    if let Some(seed) = args.seed {
        base.seed = seed;
    }

    // Deterministic row order and per-cell seeds regardless of how the
    // grid lists were typed.
    let mut grid: Vec<(f64, u32)> = args
        .p
        .iter()
        .flat_map(|&p| args.m.iter().map(move |&m| (p, m)))
        .collect();
    grid.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let mut rows = Vec::with_capacity(grid.len());
    for (index, &(p, payload_addresses)) in grid.iter().enumerate() {
        let cell = ScenarioConfig {
            strategy: AttackStrategy {
                mode: AttackMode::Bernoulli { p },
                payload: PayloadSpec {
                    address_count: payload_addresses,
                    // The grid may exceed one reply's capacity on purpose;
                    // the wire bound is explored, not enforced, here.
                    enforce_wire_fit: false,
                    ..base.strategy.payload.clone()
                },
                mechanism_tag: base.strategy.mechanism_tag.clone(),
            },
            seed: mix_seed(base.seed, index as u64),
            ..base.clone()
        };
        let stats = monte_carlo(&cell, args.trials)?;
        rows.push(SweepRow {
            p,
            payload_addresses,
            k_max: k_max(payload_addresses, BENIGN_ADDRESSES_PER_RESPONSE, base.threshold),
            analytic_capture: analytic_capture_probability_for(
                p,
                payload_addresses,
                BENIGN_ADDRESSES_PER_RESPONSE,
                base.threshold,
            ),
            empirical_capture: stats.capture_rate,
            mean_shift_ms: stats.mean_shift_ms,
            trials: stats.trials,
        });
    }

    fs::create_dir_all(&args.out).map_err(|e| runtime_io(&args.out, e))?;
    write_guarded(
        &args.out.join("sweep.csv"),
        &render_sweep_csv(&rows),
        args.overwrite,
    )?;

    if args.json {
        print!("{}", render_json(&rows));
    } else {
        println!(
            "swept {} cells at {} trials each into {}",
            rows.len(),
            args.trials,
            args.out.join("sweep.csv").display()
        );
    }
    Ok(())
}

pub fn cmd_wire(args: &WireArgs) -> Result<(), CliError> {
    let edns = !args.no_edns;
    let params = WireParams::new(args.mtu, &args.qname, edns);
    // Flag problems (bad qname, hopeless mtu) are usage errors.
    let max = max_a_records(&params).map_err(|e| CliError::Usage(e.to_string()))?;
    let empty = encoded_size(&args.qname, 0, edns).map_err(|e| CliError::Usage(e.to_string()))?;

    let report = WireReport {
        qname: args.qname.clone(),
        mtu: args.mtu,
        edns,
        payload_budget_bytes: params.payload_budget(),
        empty_message_bytes: empty,
        per_record_bytes: A_RECORD_BYTES,
        max_a_records: max,
    };
    if args.json {
        print!("{}", render_json(&report));
    } else {
        print!("{}", render_wire_table(&report));
    }
    Ok(())
}
