//! The mutual-authentication QDC protocol: key derivation, the
//! authentication phase, session-key creation by entanglement swapping, and
//! both message-communication schemes.

pub mod auth;
pub mod comm;
pub mod keys;

pub use auth::{
    attach_ancilla, keyed_code_sequence, keyed_transform_step, recover_pair, recovery_gate,
    run_mutual_auth, verify_round, z_parity, AuthAbort, AuthAdversary, AuthError, AuthOutcome,
    AuthStage, AuthedPair, MutualAuthSuccess, NoAdversary,
};
pub use comm::{
    bell_transform, dense_decode, dense_encode_gate, run_dense_coding, run_swap_encoding,
    swap_decode, swap_encode_gate, swap_pairing, swap_to_session_key, CommError, SessionKey,
    SharedPair,
};
pub use keys::{derive_auth_key, AuthKey, HASH_ID};

use crate::channels::Sim;
use crate::qstate::{BellLabel, GateLabel, Party};
use crate::SimRng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which key-bit value triggers an H in a keyed coding step.
///
/// The travelling-half encode/decode and the verifying-set transforms use
/// opposite parities by default; both are explicit so either reading of the
/// convention stays testable. The two honest parties only need to agree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HParity {
    HForZero,
    HForOne,
}

impl HParity {
    pub fn applies(self, bit: u8) -> bool {
        match self {
            HParity::HForZero => bit == 0,
            HParity::HForOne => bit == 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    /// Parity for encoding/decoding the travelling halves.
    pub forward: HParity,
    /// Parity for the verifying-set transforms and recovery.
    pub transform: HParity,
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions { forward: HParity::HForZero, transform: HParity::HForOne }
    }
}

/// Gate assignment for the 2-bit messages 00, 01, 10, 11, in that order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateMappings {
    pub dense: [GateLabel; 4],
    pub swap: [GateLabel; 4],
}

impl Default for GateMappings {
    fn default() -> Self {
        GateMappings {
            dense: [GateLabel::I, GateLabel::X, GateLabel::Z, GateLabel::Iy],
            swap: [GateLabel::I, GateLabel::Z, GateLabel::X, GateLabel::Iy],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommScheme {
    /// Two bits per pair; the sender's qubits travel to the receiver.
    DenseCoding,
    /// One bit per pair; no qubit moves between the users.
    SwapEncoding,
}

/// Parameters of one protocol session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionConfig {
    /// Message capacity in Bell pairs (N). Each authentication leg prepares
    /// `N + 2v` pairs so that `N` survive the two verifying sets.
    pub num_pairs: usize,
    /// Size of each verifying set (v). Must cover the key length.
    pub verifying_size: usize,
    pub initial_bell: BellLabel,
    pub comm_scheme: CommScheme,
    /// Maximum tolerated comparison mismatches before aborting.
    pub error_threshold: usize,
    /// Fraction of pairs sacrificed as eavesdropping checks under dense
    /// coding.
    pub dense_check_fraction: f64,
    pub conventions: Conventions,
    pub mappings: GateMappings,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            num_pairs: 16,
            verifying_size: 8,
            initial_bell: BellLabel::PhiPlus,
            comm_scheme: CommScheme::SwapEncoding,
            error_threshold: 0,
            dense_check_fraction: 0.25,
            conventions: Conventions::default(),
            mappings: GateMappings::default(),
        }
    }
}

impl SessionConfig {
    /// Message-bit capacity of the configured scheme with `num_pairs`
    /// surviving pairs.
    pub fn message_capacity(&self) -> usize {
        match self.comm_scheme {
            CommScheme::SwapEncoding => self.num_pairs,
            CommScheme::DenseCoding => {
                let checks = (self.dense_check_fraction * self.num_pairs as f64).ceil() as usize;
                2 * self.num_pairs.saturating_sub(checks)
            }
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("verifying set must be non-empty")]
    EmptyVerifyingSet,
    #[error("verifying set size {v} is below the key length {key_len}")]
    VerifyingSetBelowKeyLength { v: usize, key_len: usize },
    #[error("at least one message pair is required")]
    NoPairs,
    #[error("message of {bits} bits exceeds the scheme capacity of {capacity}")]
    MessageTooLong { bits: usize, capacity: usize },
    #[error("message length must be even (the schemes carry two bits per step)")]
    OddMessageLength,
    #[error("message entries must be 0/1 bits")]
    NotBits,
    #[error("dense check fraction must lie strictly between 0 and 1")]
    BadCheckFraction,
    #[error("gate mapping must assign four distinct gates from I, X, Z, iY")]
    BadGateMapping,
    #[error("error threshold {threshold} makes the {v}-position check vacuous")]
    VacuousThreshold { threshold: usize, v: usize },
}

fn validate_mapping(map: &[GateLabel; 4]) -> Result<(), ConfigError> {
    for (i, g) in map.iter().enumerate() {
        if *g == GateLabel::H || map[..i].contains(g) {
            return Err(ConfigError::BadGateMapping);
        }
    }
    Ok(())
}

/// Validates a session configuration against the key lengths and message.
pub fn validate_session(
    cfg: &SessionConfig,
    key_lengths: &[usize],
    message: &[u8],
) -> Result<(), ConfigError> {
    if cfg.verifying_size == 0 {
        return Err(ConfigError::EmptyVerifyingSet);
    }
    for &key_len in key_lengths {
        if cfg.verifying_size < key_len {
            return Err(ConfigError::VerifyingSetBelowKeyLength {
                v: cfg.verifying_size,
                key_len,
            });
        }
    }
    if cfg.num_pairs == 0 {
        return Err(ConfigError::NoPairs);
    }
    if message.iter().any(|&b| b > 1) {
        return Err(ConfigError::NotBits);
    }
    if message.len() % 2 != 0 {
        return Err(ConfigError::OddMessageLength);
    }
    if message.len() > cfg.message_capacity() {
        return Err(ConfigError::MessageTooLong {
            bits: message.len(),
            capacity: cfg.message_capacity(),
        });
    }
    if !(cfg.dense_check_fraction > 0.0 && cfg.dense_check_fraction < 1.0) {
        return Err(ConfigError::BadCheckFraction);
    }
    if cfg.error_threshold >= cfg.verifying_size {
        return Err(ConfigError::VacuousThreshold {
            threshold: cfg.error_threshold,
            v: cfg.verifying_size,
        });
    }
    validate_mapping(&cfg.mappings.dense)?;
    validate_mapping(&cfg.mappings.swap)?;
    Ok(())
}

#[derive(Debug, Error)]
pub enum SessionError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("authentication of {user} failed: {abort}")]
    AuthRejected { user: Party, abort: AuthAbort },
    #[error("authentication of {user} failed: {source}")]
    AuthFailed { user: Party, source: AuthError },
    #[error(transparent)]
    Comm(#[from] CommError),
}

#[derive(Debug, Clone)]
pub struct SessionOutcome {
    pub delivered: Vec<u8>,
    pub alice_auth: (AuthOutcome, AuthOutcome),
    pub bob_auth: (AuthOutcome, AuthOutcome),
    pub session_key: SessionKey,
}

/// Runs one full session: mutual authentication of both users, entanglement
/// swapping into a session key, then the configured message scheme. The
/// adversary wiring applies to the authenticator-to-Alice leg; the message
/// communication proceeds only if both authentications succeed.
pub fn run_session(
    sim: &mut Sim,
    cfg: &SessionConfig,
    alice_key: &AuthKey,
    bob_key: &AuthKey,
    adversary: &mut dyn AuthAdversary,
    message: &[u8],
    rng: &mut SimRng,
) -> Result<SessionOutcome, SessionError> {
    validate_session(cfg, &[alice_key.len(), bob_key.len()], message)?;
    let alice = run_mutual_auth(sim, cfg, Party::Alice, alice_key, adversary, rng)
        .map_err(|e| auth_error(Party::Alice, e))?;
    let bob = run_mutual_auth(sim, cfg, Party::Bob, bob_key, &mut NoAdversary, rng)
        .map_err(|e| auth_error(Party::Bob, e))?;
    let (session_key, shared) = swap_to_session_key(sim, &alice.pairs, &bob.pairs, rng)?;
    let delivered = match cfg.comm_scheme {
        CommScheme::DenseCoding => run_dense_coding(sim, cfg, &shared, message, None, rng)?,
        CommScheme::SwapEncoding => run_swap_encoding(sim, cfg, &shared, message, rng)?,
    };
    Ok(SessionOutcome {
        delivered,
        alice_auth: (alice.forward, alice.reverse),
        bob_auth: (bob.forward, bob.reverse),
        session_key,
    })
}

fn auth_error(user: Party, err: AuthError) -> SessionError {
    match err {
        AuthError::Rejected(abort) => SessionError::AuthRejected { user, abort },
        other => SessionError::AuthFailed { user, source: other },
    }
}
