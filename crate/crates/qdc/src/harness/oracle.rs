//! Exact branch-enumeration oracle.
//!
//! A scenario is a deterministic program over a fresh simulation whose only
//! nondeterminism is measurement. The enumerator replays the scenario once
//! per measurement-outcome path, forcing recorded projective outcomes with
//! their exact Born probabilities, and returns the joint distribution of
//! everything the scenario recorded. No sampling is involved anywhere.
//!
//! The scenarios in this module are written against raw registry
//! operations, not against the protocol implementation, so their
//! distributions are an independent route to every derived probability the
//! tests assert.

use crate::adversary::AttackStrategy;
use crate::channels::Sim;
use crate::harness::stats::{Outcome, OutcomeDistribution};
use crate::qstate::{BellLabel, GateLabel, Party, QubitId};

const PRUNE_BELOW: f64 = 1e-12;

/// Execution context handed to a scenario. Measurements branch; everything
/// else is ordinary simulation.
pub struct OracleCtx {
    pub sim: Sim,
    tape: Vec<u8>,
    cursor: usize,
    prob: f64,
    pending: Option<Vec<u8>>,
    outcome: Outcome,
    halted: bool,
}

impl OracleCtx {
    fn fresh(tape: Vec<u8>) -> OracleCtx {
        OracleCtx {
            sim: Sim::new(),
            tape,
            cursor: 0,
            prob: 1.0,
            pending: None,
            outcome: Vec::new(),
            halted: false,
        }
    }

    /// Z measurement as a branch point. Returns the forced outcome on
    /// replayed prefixes; past the prefix it schedules the open branches
    /// and returns a placeholder.
    pub fn measure_z(&mut self, q: QubitId) -> u8 {
        if self.halted {
            return 0;
        }
        let probs = self.sim.registry.z_probabilities(q).expect("scenario qubit is live");
        if self.cursor < self.tape.len() {
            let forced = self.tape[self.cursor];
            self.cursor += 1;
            self.prob *= probs[usize::from(forced)];
            self.sim.registry.project_z(q, forced).expect("forced branch has weight");
            forced
        } else {
            self.pending = Some(
                (0..2u8)
                    .filter(|&b| probs[usize::from(b)] > PRUNE_BELOW)
                    .collect(),
            );
            self.halted = true;
            0
        }
    }

    /// Bell measurement as a branch point over the four labels.
    pub fn measure_bell(&mut self, q1: QubitId, q2: QubitId) -> BellLabel {
        if self.halted {
            return BellLabel::PhiPlus;
        }
        let probs = self
            .sim
            .registry
            .bell_probabilities(q1, q2)
            .expect("scenario qubits are live");
        if self.cursor < self.tape.len() {
            let forced = BellLabel::from_index(usize::from(self.tape[self.cursor]));
            self.cursor += 1;
            self.prob *= probs[forced.index()];
            self.sim
                .registry
                .project_bell(q1, q2, forced)
                .expect("forced branch has weight");
            forced
        } else {
            self.pending = Some(
                (0..4u8)
                    .filter(|&b| probs[usize::from(b)] > PRUNE_BELOW)
                    .collect(),
            );
            self.halted = true;
            BellLabel::PhiPlus
        }
    }

    /// Adds a classical observable to this path's recorded outcome.
    pub fn record(&mut self, name: &str, value: u8) {
        if !self.halted {
            self.outcome.push((name.to_string(), value));
        }
    }

    pub fn record_label(&mut self, name: &str, label: BellLabel) {
        self.record(name, label.index() as u8);
    }
}

/// Enumerates every measurement path of the scenario and returns the exact
/// joint distribution of the recorded observables.
pub fn enumerate_branches<F: Fn(&mut OracleCtx)>(scenario: F) -> OutcomeDistribution {
    let mut dist = OutcomeDistribution::default();
    let mut stack: Vec<Vec<u8>> = vec![Vec::new()];
    while let Some(tape) = stack.pop() {
        let mut ctx = OracleCtx::fresh(tape.clone());
        scenario(&mut ctx);
        match ctx.pending.take() {
            Some(options) => {
                assert!(
                    tape.len() < 24,
                    "scenario exceeds the enumeration depth cap"
                );
                for option in options {
                    let mut next = tape.clone();
                    next.push(option);
                    stack.push(next);
                }
            }
            None => dist.add(ctx.outcome, ctx.prob),
        }
    }
    dist
}

// ---------------------------------------------------------------------------
// Scenario building blocks. These mirror the protocol steps with raw gates
// and the default conventions: travelling halves keyed by H on a zero key
// bit, verifying-set transforms keyed by H on a one key bit.

fn reg(ctx: &mut OracleCtx) -> &mut crate::qstate::Registry {
    &mut ctx.sim.registry
}

/// Which verification set a single-position scenario models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyPhase {
    /// Forward set V: both parties transform, the authenticator announces.
    Forward,
    /// Reverse set V': comparison only, the user announces.
    Reverse,
}

/// The intercepted pair after the authenticator's keyed steps, with the
/// travelling half in the interceptor's hands.
fn intercepted_pair(ctx: &mut OracleCtx, phase: VerifyPhase, key_bit: u8) -> (QubitId, QubitId) {
    let (t, e) = reg(ctx).prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Eve);
    if key_bit == 0 {
        reg(ctx).apply_gate(GateLabel::H, e).unwrap();
    }
    if phase == VerifyPhase::Forward && key_bit == 1 {
        reg(ctx).apply_gate(GateLabel::H, t).unwrap();
    }
    (t, e)
}

/// Joint outcome distribution at one intercepted position: the
/// authenticator's Z outcome and the interceptor's Z outcome.
pub fn eve_intercept_joint(phase: VerifyPhase, key_bit: u8) -> OutcomeDistribution {
    enumerate_branches(|ctx| {
        let (t, e) = intercepted_pair(ctx, phase, key_bit);
        let tz = ctx.measure_z(t);
        ctx.record("trent", tz);
        let ez = ctx.measure_z(e);
        ctx.record("eve", ez);
    })
}

/// The interceptor's view at one position: the announced bit she can read
/// plus her own measurement. In the forward set the authenticator
/// announces; in the reverse set the announcement is her own.
pub fn eve_intercept_view(phase: VerifyPhase, key_bit: u8) -> OutcomeDistribution {
    enumerate_branches(move |ctx| {
        let (t, e) = intercepted_pair(ctx, phase, key_bit);
        if phase == VerifyPhase::Forward {
            let tz = ctx.measure_z(t);
            ctx.record("announced", tz);
        }
        let ez = ctx.measure_z(e);
        ctx.record("eve", ez);
    })
}

fn intercepted_pair_cnot(
    ctx: &mut OracleCtx,
    phase: VerifyPhase,
    key_bit: u8,
) -> (QubitId, QubitId, QubitId) {
    let (t, e) = reg(ctx).prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Eve);
    if key_bit == 0 {
        reg(ctx).apply_gate(GateLabel::H, e).unwrap();
    }
    let ancilla = reg(ctx).fresh_qubit(Party::Eve);
    reg(ctx).apply_cnot(e, ancilla).unwrap();
    if phase == VerifyPhase::Forward && key_bit == 1 {
        reg(ctx).apply_gate(GateLabel::H, t).unwrap();
    }
    (t, e, ancilla)
}

pub fn eve_cnot_joint(phase: VerifyPhase, key_bit: u8) -> OutcomeDistribution {
    enumerate_branches(move |ctx| {
        let (t, e, ea) = intercepted_pair_cnot(ctx, phase, key_bit);
        let tz = ctx.measure_z(t);
        ctx.record("trent", tz);
        let ez = ctx.measure_z(e);
        ctx.record("eve", ez);
        let az = ctx.measure_z(ea);
        ctx.record("eve_ancilla", az);
    })
}

pub fn eve_cnot_view(phase: VerifyPhase, key_bit: u8) -> OutcomeDistribution {
    enumerate_branches(move |ctx| {
        let (t, e, ea) = intercepted_pair_cnot(ctx, phase, key_bit);
        if phase == VerifyPhase::Forward {
            let tz = ctx.measure_z(t);
            ctx.record("announced", tz);
        }
        let ez = ctx.measure_z(e);
        ctx.record("eve", ez);
        let az = ctx.measure_z(ea);
        ctx.record("eve_ancilla", az);
    })
}

/// Resend state at one position: the interceptor holds the authenticator's
/// travelling half and one half of her own pair; the honest user runs the
/// protocol on the substituted half.
struct ResendPosition {
    trent: QubitId,
    captured: QubitId,
    kept: QubitId,
    substitute: QubitId,
}

fn resend_position(ctx: &mut OracleCtx, phase: VerifyPhase, key_bit: u8) -> ResendPosition {
    let (t, a) = reg(ctx).prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Eve);
    if key_bit == 0 {
        reg(ctx).apply_gate(GateLabel::H, a).unwrap();
    }
    let (kept, substitute) = reg(ctx).prepare_bell(BellLabel::PhiPlus, Party::Eve, Party::Alice);
    // The honest user decodes the substitute as if it were the real half.
    if key_bit == 0 {
        reg(ctx).apply_gate(GateLabel::H, substitute).unwrap();
    }
    if phase == VerifyPhase::Forward {
        // Forward-set pipeline on the substitute, and the authenticator's
        // transform on his own half.
        let anc = reg(ctx).fresh_qubit(Party::Alice);
        reg(ctx).apply_cnot(substitute, anc).unwrap();
        if key_bit == 1 {
            reg(ctx).apply_gate(GateLabel::H, substitute).unwrap();
            reg(ctx).apply_gate(GateLabel::H, anc).unwrap();
            reg(ctx).apply_gate(GateLabel::H, t).unwrap();
            let outcome = ctx.measure_z(anc);
            if outcome == 1 {
                reg(ctx).apply_gate(GateLabel::X, substitute).unwrap();
            }
        } else {
            reg(ctx).apply_cnot(substitute, anc).unwrap();
        }
    }
    ResendPosition { trent: t, captured: a, kept, substitute }
}

/// Joint forward-set distribution under resend: the user's private outcome
/// against the authenticator's announced one (their comparison), which is
/// an independent coin pair.
pub fn eve_resend_joint(phase: VerifyPhase, key_bit: u8) -> OutcomeDistribution {
    enumerate_branches(move |ctx| {
        let pos = resend_position(ctx, phase, key_bit);
        let tz = ctx.measure_z(pos.trent);
        ctx.record("trent", tz);
        let uz = ctx.measure_z(pos.substitute);
        ctx.record("user", uz);
    })
}

/// The resender's view: the announced forward-set bit plus her two retained
/// qubits. Reverse-set positions are never reached with announcements (the
/// forward comparison aborts the run), so that view is her qubits alone.
pub fn eve_resend_view(phase: VerifyPhase, key_bit: u8) -> OutcomeDistribution {
    enumerate_branches(move |ctx| {
        let pos = resend_position(ctx, phase, key_bit);
        if phase == VerifyPhase::Forward {
            let tz = ctx.measure_z(pos.trent);
            ctx.record("announced", tz);
        }
        let az = ctx.measure_z(pos.captured);
        ctx.record("eve_captured", az);
        let ez = ctx.measure_z(pos.kept);
        ctx.record("eve_kept", ez);
    })
}

/// One forward-set position under the unfaithful three-qubit preparation,
/// both parties otherwise honest. Records the user's and the
/// authenticator's comparison outcomes.
pub fn malicious_trent_forward(key_bit: u8) -> OutcomeDistribution {
    enumerate_branches(move |ctx| {
        let (t, a) = reg(ctx).prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Alice);
        let spy = reg(ctx).fresh_qubit(Party::Trent);
        reg(ctx).apply_cnot(t, spy).unwrap();
        // Keyed encode and decode cancel; the checking pipeline follows.
        let anc = reg(ctx).fresh_qubit(Party::Alice);
        reg(ctx).apply_cnot(a, anc).unwrap();
        if key_bit == 1 {
            for q in [a, anc, t] {
                reg(ctx).apply_gate(GateLabel::H, q).unwrap();
            }
            let outcome = ctx.measure_z(anc);
            if outcome == 1 {
                reg(ctx).apply_gate(GateLabel::X, a).unwrap();
            }
        } else {
            reg(ctx).apply_cnot(a, anc).unwrap();
        }
        let az = ctx.measure_z(a);
        ctx.record("user", az);
        let tz = ctx.measure_z(t);
        ctx.record("trent", tz);
    })
}

/// One fully honest forward-set position; records only the announced bit.
pub fn honest_forward_announced(key_bit: u8) -> OutcomeDistribution {
    enumerate_branches(move |ctx| {
        let (t, a) = reg(ctx).prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Alice);
        // Encode and decode with the shared key cancel exactly.
        let anc = reg(ctx).fresh_qubit(Party::Alice);
        reg(ctx).apply_cnot(a, anc).unwrap();
        if key_bit == 1 {
            for q in [a, anc, t] {
                reg(ctx).apply_gate(GateLabel::H, q).unwrap();
            }
            let outcome = ctx.measure_z(anc);
            if outcome == 1 {
                reg(ctx).apply_gate(GateLabel::X, a).unwrap();
            }
        } else {
            reg(ctx).apply_cnot(a, anc).unwrap();
        }
        let _user = ctx.measure_z(a);
        let tz = ctx.measure_z(t);
        ctx.record("announced", tz);
    })
}

/// The legacy different-initial-state attack at one payload position: the
/// rotated triple, the sender's keyed encoding of `bit`, then the
/// attacker's Z measurement of her qubit and X measurement of his own.
pub fn legacy_plus_attack(bit: u8) -> OutcomeDistribution {
    enumerate_branches(move |ctx| {
        let (a, t) = reg(ctx).prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Trent);
        let b = reg(ctx).fresh_qubit(Party::Trent);
        reg(ctx).apply_cnot(a, b).unwrap();
        for q in [a, t, b] {
            reg(ctx).apply_gate(GateLabel::H, q).unwrap();
        }
        if bit == 1 {
            reg(ctx).apply_gate(GateLabel::Z, a).unwrap();
        }
        reg(ctx).apply_gate(GateLabel::H, a).unwrap();
        let z = ctx.measure_z(a);
        ctx.record("z", z);
        reg(ctx).apply_gate(GateLabel::H, t).unwrap();
        let x = ctx.measure_z(t);
        ctx.record("x", x);
    })
}

/// Entanglement swapping from two pairs: the measuring side's outcome and
/// the label the partner pair collapses to.
pub fn swap_scenario(s1: BellLabel, s2: BellLabel) -> OutcomeDistribution {
    enumerate_branches(move |ctx| {
        let (q1, q2) = reg(ctx).prepare_bell(s1, Party::Trent, Party::Alice);
        let (q3, q4) = reg(ctx).prepare_bell(s2, Party::Trent, Party::Bob);
        let m = ctx.measure_bell(q1, q3);
        ctx.record_label("measured", m);
        let partner = ctx.measure_bell(q2, q4);
        ctx.record_label("partner", partner);
    })
}

/// Swap-based encoding of one 2-bit chunk over pairs in `(s1, s2)` with the
/// given gate: both users' Bell outcomes, over every branch.
pub fn swap_encode_scenario(s1: BellLabel, s2: BellLabel, gate: GateLabel) -> OutcomeDistribution {
    enumerate_branches(move |ctx| {
        let (a1, b2) = reg(ctx).prepare_bell(s1, Party::Alice, Party::Bob);
        let (a3, b4) = reg(ctx).prepare_bell(s2, Party::Alice, Party::Bob);
        if gate != GateLabel::I {
            reg(ctx).apply_gate(gate, a1).unwrap();
        }
        let alice = ctx.measure_bell(a1, a3);
        ctx.record_label("alice", alice);
        let bob = ctx.measure_bell(b2, b4);
        ctx.record_label("bob", bob);
    })
}

/// Dense coding of one 2-bit chunk over a pair in `label` with the given
/// gate: the receiver's Bell outcome (deterministic).
pub fn dense_encode_scenario(label: BellLabel, gate: GateLabel) -> OutcomeDistribution {
    enumerate_branches(move |ctx| {
        let (qa, qb) = reg(ctx).prepare_bell(label, Party::Alice, Party::Bob);
        if gate != GateLabel::I {
            reg(ctx).apply_gate(gate, qa).unwrap();
        }
        let bob = ctx.measure_bell(qa, qb);
        ctx.record_label("bob", bob);
    })
}

/// Per-position view of a strategy's adversary for the leakage checks.
pub fn adversary_view(
    strategy: AttackStrategy,
    phase: VerifyPhase,
    key_bit: u8,
) -> Option<OutcomeDistribution> {
    match strategy {
        AttackStrategy::EveIntercept => Some(eve_intercept_view(phase, key_bit)),
        AttackStrategy::EveInterceptCnot => Some(eve_cnot_view(phase, key_bit)),
        AttackStrategy::EveInterceptResend => Some(eve_resend_view(phase, key_bit)),
        AttackStrategy::None | AttackStrategy::MaliciousTrentGhz => None,
    }
}

/// A named scenario exposed through the command-line oracle.
pub struct NamedScenario {
    pub name: &'static str,
    pub about: &'static str,
    pub build: fn() -> OutcomeDistribution,
}

pub const NAMED_SCENARIOS: &[NamedScenario] = &[
    NamedScenario {
        name: "swap_phi_plus",
        about: "entanglement swapping from phi+ (x) phi+: outcome and partner label",
        build: || swap_scenario(BellLabel::PhiPlus, BellLabel::PhiPlus),
    },
    NamedScenario {
        name: "honest_forward_bit0",
        about: "announced bit at an honest forward-set position, key bit 0",
        build: || honest_forward_announced(0),
    },
    NamedScenario {
        name: "honest_forward_bit1",
        about: "announced bit at an honest forward-set position, key bit 1",
        build: || honest_forward_announced(1),
    },
    NamedScenario {
        name: "eve_intercept_forward_bit0",
        about: "interceptor at a forward-set position, key bit 0",
        build: || eve_intercept_joint(VerifyPhase::Forward, 0),
    },
    NamedScenario {
        name: "eve_intercept_forward_bit1",
        about: "interceptor at a forward-set position, key bit 1",
        build: || eve_intercept_joint(VerifyPhase::Forward, 1),
    },
    NamedScenario {
        name: "eve_intercept_reverse_bit0",
        about: "interceptor at a reverse-set position, key bit 0",
        build: || eve_intercept_joint(VerifyPhase::Reverse, 0),
    },
    NamedScenario {
        name: "eve_intercept_reverse_bit1",
        about: "interceptor at a reverse-set position, key bit 1",
        build: || eve_intercept_joint(VerifyPhase::Reverse, 1),
    },
    NamedScenario {
        name: "eve_cnot_forward_bit0",
        about: "intercept-and-entangle at a forward-set position, key bit 0",
        build: || eve_cnot_joint(VerifyPhase::Forward, 0),
    },
    NamedScenario {
        name: "eve_cnot_forward_bit1",
        about: "intercept-and-entangle at a forward-set position, key bit 1",
        build: || eve_cnot_joint(VerifyPhase::Forward, 1),
    },
    NamedScenario {
        name: "eve_cnot_reverse_bit0",
        about: "intercept-and-entangle at a reverse-set position, key bit 0",
        build: || eve_cnot_joint(VerifyPhase::Reverse, 0),
    },
    NamedScenario {
        name: "eve_cnot_reverse_bit1",
        about: "intercept-and-entangle at a reverse-set position, key bit 1",
        build: || eve_cnot_joint(VerifyPhase::Reverse, 1),
    },
    NamedScenario {
        name: "eve_resend_forward_bit0",
        about: "resend attack at a forward-set position, key bit 0",
        build: || eve_resend_joint(VerifyPhase::Forward, 0),
    },
    NamedScenario {
        name: "eve_resend_forward_bit1",
        about: "resend attack at a forward-set position, key bit 1",
        build: || eve_resend_joint(VerifyPhase::Forward, 1),
    },
    NamedScenario {
        name: "malicious_trent_forward_bit0",
        about: "unfaithful GHZ preparation at a forward-set position, key bit 0",
        build: || malicious_trent_forward(0),
    },
    NamedScenario {
        name: "malicious_trent_forward_bit1",
        about: "unfaithful GHZ preparation at a forward-set position, key bit 1",
        build: || malicious_trent_forward(1),
    },
    NamedScenario {
        name: "legacy_plus_attack_bit0",
        about: "legacy different-initial-state attack, payload bit 0",
        build: || legacy_plus_attack(0),
    },
    NamedScenario {
        name: "legacy_plus_attack_bit1",
        about: "legacy different-initial-state attack, payload bit 1",
        build: || legacy_plus_attack(1),
    },
];

pub fn named_scenario(name: &str) -> Option<&'static NamedScenario> {
    NAMED_SCENARIOS.iter().find(|s| s.name == name)
}
