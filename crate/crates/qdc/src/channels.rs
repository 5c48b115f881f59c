//! Simulated quantum channel with adversary interposition hooks, the public
//! classical broadcast channel, and the transcript log.
//!
//! A transfer moves qubit ownership from sender to receiver. An installed
//! tap runs once per qubit and picks exactly one of three outcomes: deliver
//! the original handle, deliver a substituted handle, or withhold it (in
//! which case the adversary becomes the effective receiving endpoint).
//! Every transfer and broadcast lands in the [`Transcript`], which is the
//! adversary's entire classical view and the input to leakage analysis.

use crate::qstate::{BellLabel, Party, QstateError, QubitId, Registry};
use crate::SimRng;
use serde::Serialize;
use thiserror::Error;

/// Structured classical data carried by a public broadcast.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    /// Pair-sequence positions, e.g. a verifying set.
    Positions(Vec<usize>),
    /// Announced measurement bits, in position order.
    Bits(Vec<u8>),
    /// Announced Bell measurement outcomes, in position order.
    BellLabels(Vec<BellLabel>),
    /// A progress notice ("transforms finished", ...).
    Notice(String),
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferOutcome {
    Delivered,
    Substituted,
    Withheld,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Broadcast,
    QubitTransfer,
    AdversaryNote,
}

#[derive(Debug, Clone, Serialize)]
#[serde(untagged)]
pub enum EventData {
    Broadcast {
        payload: Payload,
    },
    Transfer {
        from: Party,
        to: Party,
        qubit: u64,
        received: Option<u64>,
        outcome: TransferOutcome,
        tapped_by: Option<Party>,
    },
    Note {
        text: String,
        values: Vec<u8>,
    },
}

/// One transcript entry, serialized as `{seq, kind, actor, data}`.
#[derive(Debug, Clone, Serialize)]
pub struct Event {
    pub seq: u64,
    pub kind: EventKind,
    pub actor: Party,
    pub data: EventData,
}

/// Ordered log of all classical broadcasts and channel events.
/// Deterministic given the session's configuration and seed.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    events: Vec<Event>,
}

impl Transcript {
    pub fn events(&self) -> &[Event] {
        &self.events
    }

    fn push(&mut self, kind: EventKind, actor: Party, data: EventData) {
        let seq = self.events.len() as u64;
        self.events.push(Event { seq, kind, actor, data });
    }

    /// All broadcast payloads in order, with their senders.
    pub fn broadcasts(&self) -> impl Iterator<Item = (Party, &Payload)> {
        self.events.iter().filter_map(|e| match &e.data {
            EventData::Broadcast { payload } => Some((e.actor, payload)),
            _ => None,
        })
    }

    /// Events visible to `viewer`: every broadcast, plus channel internals
    /// where the viewer is an endpoint or the tapping adversary, plus the
    /// viewer's own notes.
    pub fn view(&self, viewer: Party) -> Vec<&Event> {
        self.events
            .iter()
            .filter(|e| match &e.data {
                EventData::Broadcast { .. } => true,
                EventData::Transfer { from, to, tapped_by, .. } => {
                    viewer == *from || viewer == *to || Some(viewer) == *tapped_by
                }
                EventData::Note { .. } => e.actor == viewer,
            })
            .collect()
    }

    /// One JSON object per line, in transcript order.
    pub fn to_json_lines(&self) -> String {
        let mut out = String::new();
        for event in &self.events {
            out.push_str(&serde_json::to_string(event).expect("transcript events serialize"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum ChannelError {
    #[error("sender {expected} does not own qubit {qubit:?} (owner {owner})")]
    OwnershipViolation {
        qubit: QubitId,
        owner: Party,
        expected: Party,
    },
    #[error(transparent)]
    Qstate(#[from] QstateError),
}

/// What a channel tap decides for one in-flight qubit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TapDecision {
    Deliver,
    Substitute(QubitId),
    Withhold,
}

/// Per-qubit adversary hook on a quantum channel. The tap has full quantum
/// capability on qubits it holds, but no access to other parties' handles.
pub trait ChannelTap {
    fn party(&self) -> Party {
        Party::Eve
    }

    fn on_qubit(&mut self, registry: &mut Registry, qubit: QubitId, rng: &mut SimRng) -> TapDecision;
}

/// A directed qubit channel with an optional adversary tap.
pub struct QuantumChannel<'t> {
    pub from: Party,
    pub to: Party,
    pub tap: Option<&'t mut dyn ChannelTap>,
}

impl<'t> QuantumChannel<'t> {
    pub fn clean(from: Party, to: Party) -> QuantumChannel<'static> {
        QuantumChannel { from, to, tap: None }
    }

    pub fn tapped(from: Party, to: Party, tap: &'t mut dyn ChannelTap) -> QuantumChannel<'t> {
        QuantumChannel { from, to, tap: Some(tap) }
    }
}

/// One simulation session: quantum truth plus the classical record.
#[derive(Debug, Clone, Default)]
pub struct Sim {
    pub registry: Registry,
    pub transcript: Transcript,
}

impl Sim {
    pub fn new() -> Sim {
        Sim::default()
    }

    /// Appends a public broadcast, readable by all parties including the
    /// adversary. The classical channel is append-only and unforgeable.
    pub fn broadcast(&mut self, sender: Party, payload: Payload) {
        self.transcript
            .push(EventKind::Broadcast, sender, EventData::Broadcast { payload });
    }

    /// Records an adversary-visible observation (e.g. Eve's own measurement
    /// results).
    pub fn note(&mut self, actor: Party, text: &str, values: Vec<u8>) {
        self.transcript.push(
            EventKind::AdversaryNote,
            actor,
            EventData::Note { text: text.to_string(), values },
        );
    }

    /// Transfers the qubits over the channel in order. The returned vector
    /// is aligned with the input: `Some(handle)` for a delivered (possibly
    /// substituted) qubit, `None` for a withheld one.
    pub fn send_qubits(
        &mut self,
        channel: &mut QuantumChannel<'_>,
        qubits: &[QubitId],
        rng: &mut SimRng,
    ) -> Result<Vec<Option<QubitId>>, ChannelError> {
        for &q in qubits {
            let owner = self.registry.owner(q)?;
            if owner != channel.from {
                return Err(ChannelError::OwnershipViolation {
                    qubit: q,
                    owner,
                    expected: channel.from,
                });
            }
        }
        let mut received = Vec::with_capacity(qubits.len());
        for &q in qubits {
            let (decision, tapped_by) = match channel.tap.as_deref_mut() {
                None => (TapDecision::Deliver, None),
                Some(tap) => (tap.on_qubit(&mut self.registry, q, rng), Some(tap.party())),
            };
            let (outcome, got) = match decision {
                TapDecision::Deliver => {
                    self.registry.set_owner(q, channel.to)?;
                    (TransferOutcome::Delivered, Some(q))
                }
                TapDecision::Substitute(sub) => {
                    self.registry
                        .set_owner(q, tapped_by.expect("substitution implies a tap"))?;
                    self.registry.set_owner(sub, channel.to)?;
                    (TransferOutcome::Substituted, Some(sub))
                }
                TapDecision::Withhold => {
                    self.registry
                        .set_owner(q, tapped_by.expect("withholding implies a tap"))?;
                    (TransferOutcome::Withheld, None)
                }
            };
            self.transcript.push(
                EventKind::QubitTransfer,
                channel.from,
                EventData::Transfer {
                    from: channel.from,
                    to: channel.to,
                    qubit: q.0,
                    received: got.map(|h| h.0),
                    outcome,
                    tapped_by,
                },
            );
            received.push(got);
        }
        Ok(received)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::GateLabel;
    use rand::SeedableRng;

    #[test]
    fn clean_transfer_preserves_handles_and_state() {
        let mut sim = Sim::new();
        let mut rng = SimRng::seed_from_u64(1);
        let (t, a) = sim
            .registry
            .prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Trent);
        let before = sim.registry.joint_state(&[t, a]).unwrap();
        let mut ch = QuantumChannel::clean(Party::Trent, Party::Alice);
        let got = sim.send_qubits(&mut ch, &[a], &mut rng).unwrap();
        assert_eq!(got, vec![Some(a)]);
        assert_eq!(sim.registry.owner(a).unwrap(), Party::Alice);
        assert_eq!(sim.registry.owner(t).unwrap(), Party::Trent);
        let after = sim.registry.joint_state(&[t, a]).unwrap();
        assert_eq!(before.amps(), after.amps());
    }

    #[test]
    fn ownership_violation_detected() {
        let mut sim = Sim::new();
        let mut rng = SimRng::seed_from_u64(1);
        let q = sim.registry.fresh_qubit(Party::Bob);
        let mut ch = QuantumChannel::clean(Party::Trent, Party::Alice);
        assert!(matches!(
            sim.send_qubits(&mut ch, &[q], &mut rng),
            Err(ChannelError::OwnershipViolation { .. })
        ));
    }

    struct WithholdAll;
    impl ChannelTap for WithholdAll {
        fn on_qubit(&mut self, _reg: &mut Registry, _q: QubitId, _rng: &mut SimRng) -> TapDecision {
            TapDecision::Withhold
        }
    }

    struct SubstituteFresh;
    impl ChannelTap for SubstituteFresh {
        fn on_qubit(&mut self, reg: &mut Registry, _q: QubitId, _rng: &mut SimRng) -> TapDecision {
            let sub = reg.fresh_qubit(Party::Eve);
            TapDecision::Substitute(sub)
        }
    }

    #[test]
    fn withholding_moves_ownership_to_adversary() {
        let mut sim = Sim::new();
        let mut rng = SimRng::seed_from_u64(2);
        let (_t, a) = sim
            .registry
            .prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Trent);
        let mut tap = WithholdAll;
        let mut ch = QuantumChannel::tapped(Party::Trent, Party::Alice, &mut tap);
        let got = sim.send_qubits(&mut ch, &[a], &mut rng).unwrap();
        assert_eq!(got, vec![None]);
        assert_eq!(sim.registry.owner(a).unwrap(), Party::Eve);
    }

    #[test]
    fn substitution_delivers_adversary_qubit() {
        let mut sim = Sim::new();
        let mut rng = SimRng::seed_from_u64(3);
        let (_t, a) = sim
            .registry
            .prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Trent);
        let mut tap = SubstituteFresh;
        let mut ch = QuantumChannel::tapped(Party::Trent, Party::Alice, &mut tap);
        let got = sim.send_qubits(&mut ch, &[a], &mut rng).unwrap();
        let sub = got[0].expect("substituted handle delivered");
        assert_ne!(sub, a);
        assert_eq!(sim.registry.owner(sub).unwrap(), Party::Alice);
        assert_eq!(sim.registry.owner(a).unwrap(), Party::Eve);
    }

    #[test]
    fn broadcasts_visible_to_everyone_and_ordered() {
        let mut sim = Sim::new();
        sim.broadcast(Party::Alice, Payload::Positions(vec![0, 3, 5]));
        sim.broadcast(Party::Trent, Payload::BellLabels(vec![BellLabel::PsiMinus]));
        sim.broadcast(Party::Bob, Payload::Empty);
        for viewer in [Party::Trent, Party::Alice, Party::Bob, Party::Eve] {
            let view = sim.transcript.view(viewer);
            assert_eq!(view.len(), 3);
        }
        let seqs: Vec<u64> = sim.transcript.events().iter().map(|e| e.seq).collect();
        assert_eq!(seqs, vec![0, 1, 2]);
    }

    #[test]
    fn transfer_events_hidden_from_outsiders() {
        let mut sim = Sim::new();
        let mut rng = SimRng::seed_from_u64(4);
        let (_t, a) = sim
            .registry
            .prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Trent);
        let mut ch = QuantumChannel::clean(Party::Trent, Party::Alice);
        sim.send_qubits(&mut ch, &[a], &mut rng).unwrap();
        sim.broadcast(Party::Alice, Payload::Notice("done".into()));
        assert_eq!(sim.transcript.view(Party::Eve).len(), 1);
        assert_eq!(sim.transcript.view(Party::Bob).len(), 1);
        assert_eq!(sim.transcript.view(Party::Alice).len(), 2);
        assert_eq!(sim.transcript.view(Party::Trent).len(), 2);
    }

    #[test]
    fn tapped_transfers_visible_to_adversary() {
        let mut sim = Sim::new();
        let mut rng = SimRng::seed_from_u64(5);
        let (_t, a) = sim
            .registry
            .prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Trent);
        let mut tap = WithholdAll;
        let mut ch = QuantumChannel::tapped(Party::Trent, Party::Alice, &mut tap);
        sim.send_qubits(&mut ch, &[a], &mut rng).unwrap();
        assert_eq!(sim.transcript.view(Party::Eve).len(), 1);
    }

    #[test]
    fn replay_reproduces_transcript_bytes() {
        let run = |seed: u64| {
            let mut sim = Sim::new();
            let mut rng = SimRng::seed_from_u64(seed);
            let (t, a) = sim
                .registry
                .prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Trent);
            sim.registry.apply_gate(GateLabel::H, a).unwrap();
            let mut ch = QuantumChannel::clean(Party::Trent, Party::Alice);
            sim.send_qubits(&mut ch, &[a], &mut rng).unwrap();
            let bit = sim.registry.measure_z(t, &mut rng).unwrap();
            sim.broadcast(Party::Trent, Payload::Bits(vec![bit]));
            sim.transcript.to_json_lines()
        };
        assert_eq!(run(42), run(42));
        let lines = run(42);
        assert_eq!(lines.lines().count(), 2);
        let first: serde_json::Value = serde_json::from_str(lines.lines().next().unwrap()).unwrap();
        assert_eq!(first["kind"], "qubit_transfer");
        assert!(first["data"].is_object());
    }
}
