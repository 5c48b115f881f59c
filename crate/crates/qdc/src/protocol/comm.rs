//! The communication phase: session-key creation by entanglement swapping,
//! then message transfer by dense coding or by the swapping-based encoding.
//!
//! After both users are authenticated the authenticator Bell-measures his
//! two halves pair by pair, which swaps the entanglement onto the users'
//! qubits and leaves him with closed pairs of his own. The announced
//! outcome sequence is the session key: it tells the users which Bell state
//! each of their shared pairs is in, and it is the reference against which
//! both encodings are decoded.

use crate::channels::{ChannelError, ChannelTap, Payload, QuantumChannel, Sim};
use crate::protocol::auth::AuthedPair;
use crate::protocol::{GateMappings, SessionConfig};
use crate::qstate::{BellLabel, GateLabel, Party, QstateError, QubitId};
use crate::SimRng;
use rand::seq::index::sample;
use thiserror::Error;

/// Ordered Bell labels shared between the two users after swapping; used
/// for one communication session only.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionKey {
    pub labels: Vec<BellLabel>,
}

/// One post-swap Bell pair between the two users.
#[derive(Debug, Clone, Copy)]
pub struct SharedPair {
    pub alice: QubitId,
    pub bob: QubitId,
    pub label: BellLabel,
}

#[derive(Debug, Error)]
pub enum CommError {
    #[error("check pairs disagreed with the session key at {mismatches} of {checked} positions")]
    TamperDetected { mismatches: usize, checked: usize },
    #[error("outcome {observed} is not reachable from pair state {expected} under the configured gates")]
    UnreachableOutcome { expected: BellLabel, observed: BellLabel },
    #[error("message needs {needed} pairs but only {available} are available")]
    CapacityExceeded { needed: usize, available: usize },
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Qstate(#[from] QstateError),
}

/// Bell label after applying a single-qubit gate to either member of a pair
/// in `label`. Global phases drop out, so the action is the same for both
/// slots and the four gates form the Klein group on labels.
pub fn bell_transform(label: BellLabel, gate: GateLabel) -> BellLabel {
    use BellLabel::*;
    use GateLabel::*;
    match gate {
        I => label,
        X => match label {
            PhiPlus => PsiPlus,
            PsiPlus => PhiPlus,
            PhiMinus => PsiMinus,
            PsiMinus => PhiMinus,
        },
        Z => match label {
            PhiPlus => PhiMinus,
            PhiMinus => PhiPlus,
            PsiPlus => PsiMinus,
            PsiMinus => PsiPlus,
        },
        Iy => match label {
            PhiPlus => PsiMinus,
            PsiMinus => PhiPlus,
            PhiMinus => PsiPlus,
            PsiPlus => PhiMinus,
        },
        H => unreachable!("H is not a Bell-label permutation"),
    }
}

/// Gate whose action on one pair member turns phi+ into `label`.
fn generator_of(label: BellLabel) -> GateLabel {
    match label {
        BellLabel::PhiPlus => GateLabel::I,
        BellLabel::PhiMinus => GateLabel::Z,
        BellLabel::PsiPlus => GateLabel::X,
        BellLabel::PsiMinus => GateLabel::Iy,
    }
}

/// The swapping correspondence: when pairs 1-2 and 3-4 sit in `(s1, s2)`
/// and the (1,3) Bell measurement yields `m13`, the (2,4) pair collapses to
/// the returned label.
pub fn swap_pairing(s1: BellLabel, s2: BellLabel, m13: BellLabel) -> BellLabel {
    bell_transform(bell_transform(m13, generator_of(s1)), generator_of(s2))
}

/// The authenticator swaps entanglement onto the users pair by pair and
/// announces his outcomes in order. His own two qubits close into a Bell
/// pair of their own, leaving him unentangled with either user.
pub fn swap_to_session_key(
    sim: &mut Sim,
    pairs_alice: &[AuthedPair],
    pairs_bob: &[AuthedPair],
    rng: &mut SimRng,
) -> Result<(SessionKey, Vec<SharedPair>), CommError> {
    assert_eq!(pairs_alice.len(), pairs_bob.len(), "one pair per side per position");
    let mut labels = Vec::with_capacity(pairs_alice.len());
    let mut shared = Vec::with_capacity(pairs_alice.len());
    for (pa, pb) in pairs_alice.iter().zip(pairs_bob) {
        let label = sim.registry.measure_bell(pa.trent, pb.trent, rng)?;
        labels.push(label);
        shared.push(SharedPair { alice: pa.user, bob: pb.user, label });
    }
    sim.broadcast(Party::Trent, Payload::BellLabels(labels.clone()));
    Ok((SessionKey { labels }, shared))
}

/// Gate encoding two message bits onto the sender's pair member under the
/// dense-coding table.
pub fn dense_encode_gate(mappings: &GateMappings, bits: (u8, u8)) -> GateLabel {
    mappings.dense[usize::from(bits.0) * 2 + usize::from(bits.1)]
}

/// Inverts dense coding: the receiver's Bell outcome relative to the known
/// pair label identifies the gate and hence the two bits.
pub fn dense_decode(
    mappings: &GateMappings,
    pair_label: BellLabel,
    observed: BellLabel,
) -> Result<(u8, u8), CommError> {
    for (index, &gate) in mappings.dense.iter().enumerate() {
        if bell_transform(pair_label, gate) == observed {
            return Ok(((index / 2) as u8, (index % 2) as u8));
        }
    }
    Err(CommError::UnreachableOutcome { expected: pair_label, observed })
}

/// Gate encoding two message bits under the swapping-based table.
pub fn swap_encode_gate(mappings: &GateMappings, bits: (u8, u8)) -> GateLabel {
    mappings.swap[usize::from(bits.0) * 2 + usize::from(bits.1)]
}

/// Inverts the swapping-based encoding from both announced Bell outcomes
/// and the two session-key labels the chunk consumed.
pub fn swap_decode(
    mappings: &GateMappings,
    bob_outcome: BellLabel,
    alice_outcome: BellLabel,
    pair1_label: BellLabel,
    pair2_label: BellLabel,
) -> Result<(u8, u8), CommError> {
    for (index, &gate) in mappings.swap.iter().enumerate() {
        let encoded = bell_transform(pair1_label, gate);
        if swap_pairing(encoded, pair2_label, alice_outcome) == bob_outcome {
            return Ok(((index / 2) as u8, (index % 2) as u8));
        }
    }
    Err(CommError::UnreachableOutcome { expected: pair1_label, observed: bob_outcome })
}

/// Dense-coding message phase: two bits ride on each transmitted qubit, and
/// a sacrificed fraction of the pairs is compared in public to catch
/// in-transit tampering.
pub fn run_dense_coding(
    sim: &mut Sim,
    cfg: &SessionConfig,
    shared: &[SharedPair],
    message: &[u8],
    tamper: Option<&mut dyn ChannelTap>,
    rng: &mut SimRng,
) -> Result<Vec<u8>, CommError> {
    let n = shared.len();
    let check_count = (cfg.dense_check_fraction * n as f64).ceil() as usize;
    let capacity = 2 * (n - check_count);
    if message.len() > capacity {
        return Err(CommError::CapacityExceeded {
            needed: check_count + message.len().div_ceil(2),
            available: n,
        });
    }

    // The sender picks and announces the sacrificed check pairs, then
    // encodes the message chunks onto the remaining pairs in order.
    let check_positions: Vec<usize> = {
        let mut picked: Vec<usize> = sample(rng, n, check_count).into_iter().collect();
        picked.sort_unstable();
        picked
    };
    sim.broadcast(Party::Alice, Payload::Positions(check_positions.clone()));
    let message_positions: Vec<usize> =
        (0..n).filter(|p| !check_positions.contains(p)).collect();
    let chunks: Vec<(u8, u8)> = message.chunks(2).map(|c| (c[0], c[1])).collect();
    for (chunk, &pos) in chunks.iter().zip(&message_positions) {
        let gate = dense_encode_gate(&cfg.mappings, *chunk);
        if gate != GateLabel::I {
            sim.registry.apply_gate(gate, shared[pos].alice)?;
        }
    }

    let sender_qubits: Vec<QubitId> = shared.iter().map(|p| p.alice).collect();
    let mut channel = QuantumChannel { from: Party::Alice, to: Party::Bob, tap: tamper };
    let received = sim.send_qubits(&mut channel, &sender_qubits, rng)?;

    // The receiver measures every pair; check outcomes are compared in
    // public against the session key before the message is trusted.
    let mut observed = Vec::with_capacity(n);
    for (pos, pair) in shared.iter().enumerate() {
        let got = received[pos].expect("dense coding channel delivers every qubit");
        observed.push(sim.registry.measure_bell(got, pair.bob, rng)?);
    }
    let check_outcomes: Vec<BellLabel> =
        check_positions.iter().map(|&p| observed[p]).collect();
    sim.broadcast(Party::Bob, Payload::BellLabels(check_outcomes.clone()));
    let mismatches = check_positions
        .iter()
        .filter(|&&p| observed[p] != shared[p].label)
        .count();
    if mismatches > cfg.error_threshold {
        return Err(CommError::TamperDetected { mismatches, checked: check_count });
    }

    let mut bits = Vec::with_capacity(message.len());
    for (&pos, _) in message_positions.iter().zip(&chunks) {
        let (b0, b1) = dense_decode(&cfg.mappings, shared[pos].label, observed[pos])?;
        bits.push(b0);
        bits.push(b1);
    }
    bits.truncate(message.len());
    Ok(bits)
}

/// Swapping-based message phase: two shared pairs carry two bits with no
/// qubit ever moving between the users.
pub fn run_swap_encoding(
    sim: &mut Sim,
    cfg: &SessionConfig,
    shared: &[SharedPair],
    message: &[u8],
    rng: &mut SimRng,
) -> Result<Vec<u8>, CommError> {
    if message.len() > shared.len() {
        return Err(CommError::CapacityExceeded {
            needed: message.len(),
            available: shared.len(),
        });
    }
    let chunks: Vec<(u8, u8)> = message.chunks(2).map(|c| (c[0], c[1])).collect();

    // The sender encodes on her first pair member, swaps her two halves
    // together, and announces the outcomes in order.
    let mut announced = Vec::with_capacity(chunks.len());
    for (j, chunk) in chunks.iter().enumerate() {
        let pair1 = &shared[2 * j];
        let pair2 = &shared[2 * j + 1];
        let gate = swap_encode_gate(&cfg.mappings, *chunk);
        if gate != GateLabel::I {
            sim.registry.apply_gate(gate, pair1.alice)?;
        }
        announced.push(sim.registry.measure_bell(pair1.alice, pair2.alice, rng)?);
    }
    sim.broadcast(Party::Alice, Payload::BellLabels(announced.clone()));

    // The receiver swaps his halves and reads the bits off the announced
    // outcome and the session key.
    let mut bits = Vec::with_capacity(message.len());
    for (j, _) in chunks.iter().enumerate() {
        let pair1 = &shared[2 * j];
        let pair2 = &shared[2 * j + 1];
        let outcome = sim.registry.measure_bell(pair1.bob, pair2.bob, rng)?;
        let (b0, b1) =
            swap_decode(&cfg.mappings, outcome, announced[j], pair1.label, pair2.label)?;
        bits.push(b0);
        bits.push(b1);
    }
    bits.truncate(message.len());
    Ok(bits)
}
