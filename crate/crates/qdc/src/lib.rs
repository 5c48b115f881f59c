//! Simulator and verification harness for a quantum direct communication
//! (QDC) protocol with mutual authentication.
//!
//! The library executes a Bell-pair based protocol in which an authenticator
//! (Trent) and two clients (Alice and Bob) authenticate each other with
//! keyed Hadamard operations and ancilla checks, derive a per-session key of
//! shared Bell pairs through entanglement swapping, and then exchange a
//! message either by dense coding or by a swapping-based encoding that needs
//! no direct quantum link between the clients. It also implements the two
//! older GHZ-based authentication protocols this design replaces, the
//! attack that breaks them, and the eavesdropping strategies analyzed
//! against the new protocol, so that every detection probability and
//! leakage claim can be checked exactly or by Monte Carlo.
//!
//! Modules:
//!
//! - [`qstate`]: exact state-vector simulation of small qubit registers with
//!   entanglement-group bookkeeping.
//! - [`channels`]: quantum channel transfers with adversary taps, the public
//!   classical broadcast channel, and the transcript log.
//! - [`protocol`]: the mutual-authentication QDC protocol and both
//!   communication schemes.
//! - [`legacy`]: the two older GHZ-based protocols and the
//!   different-initial-state attack on them.
//! - [`adversary`]: pluggable attack strategies against the new protocol.
//! - [`harness`]: configuration, Monte Carlo trial runner, exact
//!   branch-enumeration oracle, statistics, and report emission.

pub mod adversary;
pub mod channels;
pub mod harness;
pub mod legacy;
pub mod protocol;
pub mod qstate;

pub use channels::{Payload, Sim, Transcript};
pub use qstate::{BellLabel, GateLabel, Party, QubitId, Registry, StateVector};

/// Deterministic generator used for every stochastic operation.
///
/// No operation in this crate draws hidden global randomness; callers seed
/// one of these and pass it down explicitly.
pub type SimRng = rand_chacha::ChaCha8Rng;
