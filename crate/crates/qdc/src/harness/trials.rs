//! Monte Carlo trial runner: validated run configurations, per-trial seed
//! derivation, deterministic aggregation, and report emission.

use crate::adversary::{Adversary, AttackStrategy};
use crate::channels::Sim;
use crate::harness::oracle::{self, VerifyPhase};
use crate::harness::stats::mutual_information;
use crate::legacy::{self, DeliveryMode, LegacyConfig, LegacyVariant};
use crate::protocol::{
    self, derive_auth_key, validate_session, CommScheme, ConfigError, Conventions, GateMappings,
    SessionConfig, SessionError, HASH_ID,
};
use crate::qstate::BellLabel;
use crate::SimRng;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolKind {
    MutualQdc,
    Lee,
    Zhang,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackKind {
    #[default]
    None,
    EveIntercept,
    EveInterceptCnot,
    EveInterceptResend,
    MaliciousTrentGhz,
    TrentPlusState,
}

impl AttackKind {
    fn strategy(self) -> Option<AttackStrategy> {
        match self {
            AttackKind::None => Some(AttackStrategy::None),
            AttackKind::EveIntercept => Some(AttackStrategy::EveIntercept),
            AttackKind::EveInterceptCnot => Some(AttackStrategy::EveInterceptCnot),
            AttackKind::EveInterceptResend => Some(AttackStrategy::EveInterceptResend),
            AttackKind::MaliciousTrentGhz => Some(AttackStrategy::MaliciousTrentGhz),
            AttackKind::TrentPlusState => None,
        }
    }
}

fn default_initial() -> BellLabel {
    BellLabel::PhiPlus
}
fn default_scheme() -> CommScheme {
    CommScheme::SwapEncoding
}
fn default_trials() -> u64 {
    100
}
fn default_hash() -> String {
    HASH_ID.to_string()
}
fn default_key_length() -> usize {
    8
}
fn default_alice() -> String {
    "alice".to_string()
}
fn default_bob() -> String {
    "bob".to_string()
}
fn default_fraction() -> f64 {
    0.25
}
fn default_mode() -> DeliveryMode {
    DeliveryMode::Protocol1
}

/// One harness run: protocol, attack, sizes, message, seeding, and the
/// convention/mapping knobs. Loaded from JSON with these exact field names.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub protocol: ProtocolKind,
    #[serde(default)]
    pub attack: AttackKind,
    #[serde(rename = "N")]
    pub n: usize,
    pub v: usize,
    #[serde(default = "default_initial")]
    pub initial_bell: BellLabel,
    #[serde(default = "default_scheme")]
    pub comm_scheme: CommScheme,
    /// Message as a hex bit string, four bits per digit.
    #[serde(default)]
    pub message: String,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_hash")]
    pub hash_id: String,
    #[serde(default)]
    pub conventions: Conventions,
    #[serde(default)]
    pub mappings: GateMappings,
    #[serde(default = "default_key_length")]
    pub key_length: usize,
    #[serde(default = "default_alice")]
    pub alice_id: String,
    #[serde(default = "default_bob")]
    pub bob_id: String,
    #[serde(default)]
    pub counter: u64,
    #[serde(default)]
    pub error_threshold: usize,
    #[serde(default = "default_fraction")]
    pub dense_check_fraction: f64,
    #[serde(default = "default_fraction")]
    pub legacy_check_fraction: f64,
    #[serde(default = "default_mode")]
    pub legacy_mode: DeliveryMode,
}

impl RunConfig {
    pub fn session_config(&self) -> SessionConfig {
        SessionConfig {
            num_pairs: self.n,
            verifying_size: self.v,
            initial_bell: self.initial_bell,
            comm_scheme: self.comm_scheme,
            error_threshold: self.error_threshold,
            dense_check_fraction: self.dense_check_fraction,
            conventions: self.conventions,
            mappings: self.mappings.clone(),
        }
    }

    fn legacy_config(&self) -> LegacyConfig {
        LegacyConfig {
            variant: match self.protocol {
                ProtocolKind::Lee => LegacyVariant::LeeOriginal,
                _ => LegacyVariant::ZhangImproved,
            },
            mode: self.legacy_mode,
            check_fraction: self.legacy_check_fraction,
        }
    }
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("unsupported hash construction {got:?} (this build provides {HASH_ID:?})")]
    UnknownHash { got: String },
    #[error("attack {attack:?} does not apply to protocol {protocol:?}")]
    IncompatibleAttack { protocol: ProtocolKind, attack: AttackKind },
    #[error("at least one trial is required")]
    ZeroTrials,
    #[error("message is not a hex string: {0:?}")]
    BadHexDigit(char),
    #[error(transparent)]
    Session(#[from] ConfigError),
    #[error("trial {trial} failed unexpectedly: {detail}")]
    TrialFailed { trial: u64, detail: String },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Parses a hex string into bits, most significant bit of each digit first.
pub fn hex_to_bits(s: &str) -> Result<Vec<u8>, HarnessError> {
    let mut bits = Vec::with_capacity(s.len() * 4);
    for c in s.chars() {
        let nibble = c.to_digit(16).ok_or(HarnessError::BadHexDigit(c))? as u8;
        for shift in (0..4).rev() {
            bits.push((nibble >> shift) & 1);
        }
    }
    Ok(bits)
}

/// Formats bits as hex, zero-padding the final digit if needed.
pub fn bits_to_hex(bits: &[u8]) -> String {
    let mut out = String::with_capacity(bits.len().div_ceil(4));
    for chunk in bits.chunks(4) {
        let mut nibble = 0u8;
        for (i, &b) in chunk.iter().enumerate() {
            nibble |= b << (3 - i);
        }
        out.push(char::from_digit(u32::from(nibble), 16).expect("nibble < 16"));
    }
    out
}

/// Validates the whole configuration before any trial runs.
pub fn validate_config(cfg: &RunConfig) -> Result<Vec<u8>, HarnessError> {
    if cfg.hash_id != HASH_ID {
        return Err(HarnessError::UnknownHash { got: cfg.hash_id.clone() });
    }
    if cfg.trials == 0 {
        return Err(HarnessError::ZeroTrials);
    }
    let compatible = match cfg.protocol {
        ProtocolKind::MutualQdc => cfg.attack != AttackKind::TrentPlusState,
        ProtocolKind::Lee | ProtocolKind::Zhang => {
            matches!(cfg.attack, AttackKind::None | AttackKind::TrentPlusState)
        }
    };
    if !compatible {
        return Err(HarnessError::IncompatibleAttack {
            protocol: cfg.protocol,
            attack: cfg.attack,
        });
    }
    let message = hex_to_bits(&cfg.message)?;
    if cfg.protocol == ProtocolKind::MutualQdc {
        validate_session(&cfg.session_config(), &[cfg.key_length], &message)?;
    }
    Ok(message)
}

/// Record of one trial; the aggregates are recomputable from these.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub accepted: bool,
    pub mismatches: usize,
    pub message_delivered: bool,
    pub attack_inferred_bits: Option<String>,
    /// Session-key labels as digits 0..3 (phi+, phi-, psi+, psi-).
    pub labels: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub detection_rate: f64,
    pub attack_success_rate: Option<f64>,
    pub message_delivery_rate: Option<f64>,
    pub label_frequencies: Option<BTreeMap<String, f64>>,
    /// Exact per-position mutual information between one key bit and the
    /// attacker's view, from enumeration (never sampled).
    pub mi_estimate_bits: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub config: RunConfig,
    pub aggregates: Aggregates,
    pub trials: Vec<TrialRecord>,
    /// Wall-clock seconds; excluded from serialized reports so identical
    /// (config, seed) runs stay byte-identical.
    #[serde(skip)]
    pub wall_time: f64,
}

/// Splitmix-style mixer deriving one independent stream seed per trial.
pub fn mix_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn run_one_mutual(
    cfg: &RunConfig,
    session: &SessionConfig,
    message: &[u8],
    trial: u64,
) -> Result<TrialRecord, HarnessError> {
    let mut rng = SimRng::seed_from_u64(mix_seed(cfg.seed, trial));
    let mut sim = Sim::new();
    let alice_key = derive_auth_key(cfg.alice_id.as_bytes(), cfg.counter, cfg.key_length);
    let bob_key = derive_auth_key(cfg.bob_id.as_bytes(), cfg.counter, cfg.key_length);
    let strategy = cfg.attack.strategy().expect("validated for this protocol");
    let mut adversary = Adversary::new(strategy);
    match protocol::run_session(
        &mut sim,
        session,
        &alice_key,
        &bob_key,
        &mut adversary,
        message,
        &mut rng,
    ) {
        Ok(outcome) => Ok(TrialRecord {
            trial,
            accepted: true,
            mismatches: outcome.alice_auth.0.mismatches
                + outcome.alice_auth.1.mismatches
                + outcome.bob_auth.0.mismatches
                + outcome.bob_auth.1.mismatches,
            message_delivered: outcome.delivered == message,
            attack_inferred_bits: None,
            labels: Some(
                outcome
                    .session_key
                    .labels
                    .iter()
                    .map(|l| char::from_digit(l.index() as u32, 10).expect("label digit"))
                    .collect(),
            ),
        }),
        Err(SessionError::AuthRejected { abort, .. }) => Ok(TrialRecord {
            trial,
            accepted: false,
            mismatches: abort.forward.mismatches
                + abort.reverse.map(|r| r.mismatches).unwrap_or(0),
            message_delivered: false,
            attack_inferred_bits: None,
            labels: None,
        }),
        Err(other) => Err(HarnessError::TrialFailed { trial, detail: other.to_string() }),
    }
}

fn run_one_legacy(cfg: &RunConfig, message: &[u8], trial: u64) -> Result<TrialRecord, HarnessError> {
    let mut rng = SimRng::seed_from_u64(mix_seed(cfg.seed, trial));
    let mut sim = Sim::new();
    let alice_key = derive_auth_key(cfg.alice_id.as_bytes(), cfg.counter, cfg.key_length);
    let bob_key = derive_auth_key(cfg.bob_id.as_bytes(), cfg.counter, cfg.key_length);
    let legacy_cfg = cfg.legacy_config();
    let run = match cfg.attack {
        AttackKind::TrentPlusState => legacy::trent_plus_state_attack(
            &mut sim,
            &legacy_cfg,
            &alice_key,
            &bob_key,
            message,
            &mut rng,
        ),
        _ => legacy::legacy_run(&mut sim, &legacy_cfg, &alice_key, &bob_key, message, &mut rng),
    }
    .map_err(|e| HarnessError::TrialFailed { trial, detail: e.to_string() })?;
    Ok(TrialRecord {
        trial,
        accepted: run.auth_mismatches <= cfg.error_threshold,
        mismatches: run.auth_mismatches + run.payload_check_mismatches,
        message_delivered: run.delivered.as_deref() == Some(message),
        attack_inferred_bits: run.inferred.as_deref().map(bits_to_hex),
        labels: None,
    })
}

fn run_one(
    cfg: &RunConfig,
    session: &SessionConfig,
    message: &[u8],
    trial: u64,
) -> Result<TrialRecord, HarnessError> {
    match cfg.protocol {
        ProtocolKind::MutualQdc => run_one_mutual(cfg, session, message, trial),
        ProtocolKind::Lee | ProtocolKind::Zhang => run_one_legacy(cfg, message, trial),
    }
}

/// Exact leakage of the configured attack's per-position view, when one is
/// defined: the forward- and reverse-set view informations summed.
fn exact_view_information(attack: AttackKind) -> Option<f64> {
    match attack {
        AttackKind::TrentPlusState => {
            let d0 = oracle::legacy_plus_attack(0);
            let d1 = oracle::legacy_plus_attack(1);
            Some(mutual_information(&d0, &d1).expect("matching schemas"))
        }
        _ => {
            let strategy = attack.strategy()?;
            let mut total = 0.0;
            for phase in [VerifyPhase::Forward, VerifyPhase::Reverse] {
                let d0 = oracle::adversary_view(strategy, phase, 0)?;
                let d1 = oracle::adversary_view(strategy, phase, 1)?;
                total += mutual_information(&d0, &d1).expect("matching schemas");
            }
            Some(total)
        }
    }
}

/// Recomputes every aggregate from the per-trial records.
pub fn aggregate(cfg: &RunConfig, message: &[u8], records: &[TrialRecord]) -> Aggregates {
    let n = records.len() as f64;
    let detection_rate = records.iter().filter(|r| !r.accepted).count() as f64 / n;
    let message_delivery_rate = if cfg.protocol == ProtocolKind::MutualQdc || !message.is_empty() {
        Some(records.iter().filter(|r| r.message_delivered).count() as f64 / n)
    } else {
        None
    };
    let message_hex = bits_to_hex(message);
    let attack_success_rate = if cfg.attack == AttackKind::TrentPlusState {
        Some(
            records
                .iter()
                .filter(|r| r.attack_inferred_bits.as_deref() == Some(message_hex.as_str()))
                .count() as f64
                / n,
        )
    } else {
        None
    };
    let mut label_counts: BTreeMap<String, u64> = BTreeMap::new();
    let mut label_total = 0u64;
    for record in records {
        if let Some(labels) = &record.labels {
            for c in labels.chars() {
                let idx = c.to_digit(10).expect("label digit") as usize;
                let name = BellLabel::from_index(idx).to_string();
                *label_counts.entry(name).or_insert(0) += 1;
                label_total += 1;
            }
        }
    }
    let label_frequencies = (label_total > 0).then(|| {
        label_counts
            .into_iter()
            .map(|(k, c)| (k, c as f64 / label_total as f64))
            .collect()
    });
    Aggregates {
        detection_rate,
        attack_success_rate,
        message_delivery_rate,
        label_frequencies,
        mi_estimate_bits: exact_view_information(cfg.attack),
    }
}

/// Runs the configured trials, serially or in parallel. The per-trial seed
/// depends only on (master seed, trial index), so both modes produce the
/// same records in the same order.
pub fn run_trials(cfg: &RunConfig, parallel: bool) -> Result<Report, HarnessError> {
    let message = validate_config(cfg)?;
    let session = cfg.session_config();
    let start = Instant::now();
    let records: Result<Vec<TrialRecord>, HarnessError> = if parallel {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_one(cfg, &session, &message, t))
            .collect()
    } else {
        (0..cfg.trials).map(|t| run_one(cfg, &session, &message, t)).collect()
    };
    let records = records?;
    let aggregates = aggregate(cfg, &message, &records);
    Ok(Report {
        config: cfg.clone(),
        aggregates,
        trials: records,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Serialized report bytes; byte-stable for a fixed (config, seed).
pub fn report_bytes(report: &Report, format: ReportFormat) -> Result<Vec<u8>, HarnessError> {
    match format {
        ReportFormat::Json => {
            let mut bytes = serde_json::to_vec_pretty(report).expect("report serializes");
            bytes.push(b'\n');
            Ok(bytes)
        }
        ReportFormat::Csv => {
            let mut writer = csv::Writer::from_writer(Vec::new());
            writer
                .write_record([
                    "trial",
                    "accepted",
                    "mismatches",
                    "message_delivered",
                    "attack_inferred_bits",
                    "labels",
                ])
                .map_err(csv_io)?;
            for r in &report.trials {
                writer
                    .write_record([
                        r.trial.to_string(),
                        r.accepted.to_string(),
                        r.mismatches.to_string(),
                        r.message_delivered.to_string(),
                        r.attack_inferred_bits.clone().unwrap_or_default(),
                        r.labels.clone().unwrap_or_default(),
                    ])
                    .map_err(csv_io)?;
            }
            Ok(writer.into_inner().expect("csv buffer"))
        }
    }
}

fn csv_io(err: csv::Error) -> HarnessError {
    HarnessError::Io(std::io::Error::other(err))
}

/// Writes the report to `path` in the requested format.
pub fn emit_report(report: &Report, format: ReportFormat, path: &Path) -> Result<(), HarnessError> {
    let bytes = report_bytes(report, format)?;
    let mut file = std::fs::File::create(path)?;
    file.write_all(&bytes)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_config() -> RunConfig {
        serde_json::from_value(serde_json::json!({
            "protocol": "mutual_qdc",
            "N": 16,
            "v": 8,
            "message": "b3c1",
            "trials": 20,
            "seed": 7
        }))
        .expect("valid config")
    }

    #[test]
    fn config_defaults_fill_in() {
        let cfg = base_config();
        assert_eq!(cfg.initial_bell, BellLabel::PhiPlus);
        assert_eq!(cfg.comm_scheme, CommScheme::SwapEncoding);
        assert_eq!(cfg.hash_id, HASH_ID);
        assert_eq!(cfg.key_length, 8);
        assert_eq!(cfg.attack, AttackKind::None);
    }

    #[test]
    fn hex_round_trip() {
        let bits = hex_to_bits("b3c1").unwrap();
        assert_eq!(bits.len(), 16);
        assert_eq!(&bits[..4], &[1, 0, 1, 1]);
        assert_eq!(bits_to_hex(&bits), "b3c1");
        assert!(matches!(hex_to_bits("xy"), Err(HarnessError::BadHexDigit('x'))));
    }

    #[test]
    fn validation_catches_incompatible_attack() {
        let mut cfg = base_config();
        cfg.attack = AttackKind::TrentPlusState;
        assert!(matches!(
            validate_config(&cfg),
            Err(HarnessError::IncompatibleAttack { .. })
        ));
        cfg.protocol = ProtocolKind::Zhang;
        assert!(validate_config(&cfg).is_ok());
        cfg.attack = AttackKind::EveIntercept;
        assert!(matches!(
            validate_config(&cfg),
            Err(HarnessError::IncompatibleAttack { .. })
        ));
    }

    #[test]
    fn validation_rejects_unknown_hash() {
        let mut cfg = base_config();
        cfg.hash_id = "md5".into();
        assert!(matches!(validate_config(&cfg), Err(HarnessError::UnknownHash { .. })));
    }

    #[test]
    fn honest_trials_always_deliver() {
        let report = run_trials(&base_config(), false).unwrap();
        assert_eq!(report.aggregates.detection_rate, 0.0);
        assert_eq!(report.aggregates.message_delivery_rate, Some(1.0));
        assert!(report.trials.iter().all(|t| t.mismatches == 0));
        let freqs = report.aggregates.label_frequencies.as_ref().unwrap();
        let total: f64 = freqs.values().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn aggregates_recompute_from_records() {
        let cfg = base_config();
        let report = run_trials(&cfg, false).unwrap();
        let message = hex_to_bits(&cfg.message).unwrap();
        let again = aggregate(&cfg, &message, &report.trials);
        assert_eq!(report.aggregates, again);
    }

    #[test]
    fn serial_and_parallel_agree_byte_for_byte() {
        let cfg = base_config();
        let serial = report_bytes(&run_trials(&cfg, false).unwrap(), ReportFormat::Json).unwrap();
        let parallel = report_bytes(&run_trials(&cfg, true).unwrap(), ReportFormat::Json).unwrap();
        assert_eq!(serial, parallel);
        let serial_again =
            report_bytes(&run_trials(&cfg, false).unwrap(), ReportFormat::Json).unwrap();
        assert_eq!(serial, serial_again);
    }

    #[test]
    fn csv_has_header_plus_one_row_per_trial() {
        let cfg = base_config();
        let report = run_trials(&cfg, false).unwrap();
        let csv = String::from_utf8(report_bytes(&report, ReportFormat::Csv).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 1 + cfg.trials as usize);
        assert!(csv.starts_with("trial,accepted,mismatches"));
    }

    #[test]
    fn json_skips_wall_time() {
        let cfg = base_config();
        let report = run_trials(&cfg, false).unwrap();
        assert!(report.wall_time > 0.0);
        let json = String::from_utf8(report_bytes(&report, ReportFormat::Json).unwrap()).unwrap();
        assert!(!json.contains("wall_time"));
    }

    #[test]
    fn legacy_attack_trials_report_success() {
        let cfg: RunConfig = serde_json::from_value(serde_json::json!({
            "protocol": "zhang",
            "attack": "trent_plus_state",
            "N": 1,
            "v": 1,
            "message": "ab54a98ceb1f0ad2",
            "trials": 25,
            "seed": 3
        }))
        .unwrap();
        let report = run_trials(&cfg, false).unwrap();
        assert_eq!(report.aggregates.attack_success_rate, Some(1.0));
        assert!((report.aggregates.mi_estimate_bits.unwrap() - 1.0).abs() < 1e-12);
        assert!(report.aggregates.detection_rate > 0.9);
    }

    #[test]
    fn eve_intercept_trials_mostly_abort() {
        let cfg: RunConfig = serde_json::from_value(serde_json::json!({
            "protocol": "mutual_qdc",
            "attack": "eve_intercept",
            "N": 16,
            "v": 8,
            "message": "b3c1",
            "trials": 60,
            "seed": 11
        }))
        .unwrap();
        let report = run_trials(&cfg, false).unwrap();
        assert!(report.aggregates.detection_rate > 0.8);
        assert_eq!(report.aggregates.mi_estimate_bits, Some(0.0));
        assert_eq!(report.aggregates.message_delivery_rate, Some(0.0));
    }

    #[test]
    fn seed_mixing_separates_trials() {
        let a = mix_seed(42, 0);
        let b = mix_seed(42, 1);
        let c = mix_seed(43, 0);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }
}
