//! Configuration, Monte Carlo trial running, the exact branch-enumeration
//! oracle, statistics, and report emission.

pub mod oracle;
pub mod selftest;
pub mod stats;
pub mod trials;

pub use oracle::{enumerate_branches, named_scenario, OracleCtx, VerifyPhase, NAMED_SCENARIOS};
pub use stats::{mutual_information, Outcome, OutcomeDistribution, StatsError};
pub use trials::{
    aggregate, bits_to_hex, emit_report, hex_to_bits, mix_seed, report_bytes, run_trials,
    validate_config, Aggregates, AttackKind, HarnessError, ProtocolKind, Report, ReportFormat,
    RunConfig, TrialRecord,
};
