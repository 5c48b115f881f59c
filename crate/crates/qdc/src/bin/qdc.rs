//! Command-line harness: configured Monte Carlo runs, attack shortcuts,
//! the enumeration oracle, and the acceptance selftest.
//!
//! Exit codes: 0 on success, 1 on configuration or validation errors, 2
//! when the selftest finds a failing criterion.

use clap::{Args, Parser, Subcommand};
use qdc::harness::{
    self, named_scenario, run_trials, AttackKind, ProtocolKind, ReportFormat, RunConfig,
    NAMED_SCENARIOS,
};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qdc", version, about = "Simulator and verification harness for an entanglement-swapping QDC protocol with mutual authentication")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the trials described by a JSON config file.
    Run(RunArgs),
    /// Run a named attack, overriding the config's attack field.
    Attack(AttackArgs),
    /// Print the exact enumerated distribution of a named scenario.
    Oracle(OracleArgs),
    /// Run the full acceptance suite and report each criterion.
    Selftest,
}

#[derive(Args)]
struct RunArgs {
    /// JSON config file with the run parameters.
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the trial count.
    #[arg(long)]
    trials: Option<u64>,
    /// Write the report to this path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format for --out.
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: ReportFormat,
    /// Execute trials on all cores (same result bytes either way).
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct AttackArgs {
    /// Strategy name: none, eve_intercept, eve_intercept_cnot,
    /// eve_intercept_resend, malicious_trent_ghz, trent_plus_state.
    #[arg(long)]
    name: String,
    /// Optional base config; a protocol-appropriate default is used
    /// otherwise.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value = "json", value_parser = parse_format)]
    format: ReportFormat,
    #[arg(long)]
    parallel: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Scenario name; omit to list the available scenarios.
    #[arg(long)]
    scenario: Option<String>,
}

fn parse_format(s: &str) -> Result<ReportFormat, String> {
    match s {
        "json" => Ok(ReportFormat::Json),
        "csv" => Ok(ReportFormat::Csv),
        other => Err(format!("unknown format {other:?}, expected json or csv")),
    }
}

fn load_config(path: &PathBuf) -> Result<RunConfig, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
}

fn parse_attack(name: &str) -> Result<AttackKind, String> {
    serde_json::from_value(serde_json::Value::String(name.to_string()))
        .map_err(|_| format!("unknown attack strategy {name:?}"))
}

fn default_config_for(attack: AttackKind) -> RunConfig {
    let protocol = match attack {
        AttackKind::TrentPlusState => ProtocolKind::Zhang,
        _ => ProtocolKind::MutualQdc,
    };
    serde_json::from_value(serde_json::json!({
        "protocol": protocol,
        "N": 16,
        "v": 8,
        "message": "b3c1",
        "trials": 100,
        "seed": 0
    }))
    .expect("default config is valid")
}

fn execute_run(
    mut cfg: RunConfig,
    seed: Option<u64>,
    trials: Option<u64>,
    out: Option<PathBuf>,
    format: ReportFormat,
    parallel: bool,
) -> Result<(), String> {
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(trials) = trials {
        cfg.trials = trials;
    }
    let report = run_trials(&cfg, parallel).map_err(|e| e.to_string())?;
    let agg = &report.aggregates;
    println!(
        "protocol {:?}, attack {:?}, {} trials, seed {}",
        cfg.protocol, cfg.attack, cfg.trials, cfg.seed
    );
    println!("detection_rate      {:.6}", agg.detection_rate);
    if let Some(rate) = agg.attack_success_rate {
        println!("attack_success_rate {rate:.6}");
    }
    if let Some(rate) = agg.message_delivery_rate {
        println!("message_delivery    {rate:.6}");
    }
    if let Some(freqs) = &agg.label_frequencies {
        let line: Vec<String> = freqs.iter().map(|(k, v)| format!("{k}: {v:.4}")).collect();
        println!("label_frequencies   {}", line.join(", "));
    }
    if let Some(mi) = agg.mi_estimate_bits {
        println!("view_information    {mi:.9} bits (exact enumeration)");
    }
    println!("wall_time           {:.3}s", report.wall_time);
    if let Some(path) = out {
        harness::emit_report(&report, format, &path).map_err(|e| e.to_string())?;
        println!("report written to {}", path.display());
    }
    Ok(())
}

fn oracle_command(args: &OracleArgs) -> Result<(), String> {
    let name = match &args.scenario {
        Some(name) => name.clone(),
        None => {
            println!("available scenarios:");
            for s in NAMED_SCENARIOS {
                println!("  {:32} {}", s.name, s.about);
            }
            return Ok(());
        }
    };
    let scenario = named_scenario(&name).ok_or_else(|| {
        let names: Vec<&str> = NAMED_SCENARIOS.iter().map(|s| s.name).collect();
        format!("unknown scenario {name:?}; available: {}", names.join(", "))
    })?;
    println!("{}: {}", scenario.name, scenario.about);
    let dist = (scenario.build)();
    for (outcome, p) in dist.entries() {
        let fields: Vec<String> = outcome.iter().map(|(n, v)| format!("{n}={v}")).collect();
        println!("  {{{}}}  {p:.12}", fields.join(", "));
    }
    println!("  total {:.12}", dist.total());
    Ok(())
}

fn selftest_command() -> ExitCode {
    let results = harness::selftest::run_all();
    let mut all_passed = true;
    for r in &results {
        let verdict = if r.passed { "PASS" } else { "FAIL" };
        println!("{verdict} [{:2}] {} ({:.2}s) — {}", r.index, r.name, r.seconds, r.detail);
        all_passed &= r.passed;
    }
    if all_passed {
        println!("all {} criteria passed", results.len());
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run(args) => load_config(&args.config).and_then(|cfg| {
            execute_run(cfg, args.seed, args.trials, args.out, args.format, args.parallel)
        }),
        Command::Attack(args) => parse_attack(&args.name).and_then(|attack| {
            let mut cfg = match &args.config {
                Some(path) => load_config(path),
                None => Ok(default_config_for(attack)),
            }?;
            cfg.attack = attack;
            execute_run(cfg, args.seed, args.trials, args.out, args.format, args.parallel)
        }),
        Command::Oracle(args) => oracle_command(&args),
        Command::Selftest => return selftest_command(),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}
