//! Pluggable attack strategies against the mutual-authentication protocol,
//! implemented as channel taps plus a malicious-preparation hook.
//!
//! The strategies match the analyzed attacker powers one for one: an
//! interceptor who keeps the travelling qubits and plays the user's role, a
//! variant that first entangles an ancilla onto each intercepted qubit, a
//! resender who hands the user halves of her own pairs, and an unfaithful
//! authenticator who prepares three-qubit states so as to keep a spy qubit
//! per pair. Each strategy operates only on qubits it holds and on the
//! public broadcasts.

use crate::channels::{ChannelTap, TapDecision};
use crate::protocol::{AuthAdversary, AuthKey, HParity};
use crate::qstate::{BellLabel, GateLabel, Party, QubitId, Registry};
use crate::SimRng;
use serde::{Deserialize, Serialize};

/// Where the resend variant attaches its optional ancilla.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResendAncilla {
    /// CNOT from the intercepted qubit (the authenticator's pair half).
    OnIntercepted,
    /// CNOT from the retained half of the adversary's own pair.
    OnOwnPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AttackStrategy {
    None,
    /// Intercept the travelling halves, keep them, and impersonate the user.
    EveIntercept,
    /// As intercept, but first entangle a fresh ancilla onto each qubit.
    EveInterceptCnot,
    /// Keep the travelling halves and deliver halves of self-prepared pairs
    /// instead; the honest user runs on the substitutes.
    EveInterceptResend,
    /// The authenticator prepares three-qubit states, retaining a spy qubit
    /// entangled with every pair.
    MaliciousTrentGhz,
}

/// One attack instance: the strategy plus everything the adversary holds
/// and may later measure.
#[derive(Debug)]
pub struct Adversary {
    pub strategy: AttackStrategy,
    /// Qubits the adversary retains (intercepted halves, own pair halves,
    /// ancillas, spy qubits), in capture order.
    pub captured: Vec<QubitId>,
    /// Optional extra local unitary applied to each qubit at interception.
    /// The leakage analysis is unchanged by any such operation.
    pub extra_op: Option<GateLabel>,
    /// Optional ancilla entanglement for the resend strategy.
    pub resend_ancilla: Option<ResendAncilla>,
}

impl Adversary {
    pub fn new(strategy: AttackStrategy) -> Adversary {
        Adversary { strategy, captured: Vec::new(), extra_op: None, resend_ancilla: None }
    }

    pub fn none() -> Adversary {
        Adversary::new(AttackStrategy::None)
    }

    pub fn with_extra_op(mut self, op: GateLabel) -> Adversary {
        self.extra_op = Some(op);
        self
    }

    pub fn with_resend_ancilla(mut self, variant: ResendAncilla) -> Adversary {
        self.resend_ancilla = Some(variant);
        self
    }
}

impl ChannelTap for Adversary {
    fn party(&self) -> Party {
        Party::Eve
    }

    fn on_qubit(&mut self, reg: &mut Registry, q: QubitId, _rng: &mut SimRng) -> TapDecision {
        match self.strategy {
            AttackStrategy::None | AttackStrategy::MaliciousTrentGhz => TapDecision::Deliver,
            AttackStrategy::EveIntercept => {
                if let Some(op) = self.extra_op {
                    reg.apply_gate(op, q).expect("captured qubit is live");
                }
                self.captured.push(q);
                TapDecision::Withhold
            }
            AttackStrategy::EveInterceptCnot => {
                let ancilla = reg.fresh_qubit(Party::Eve);
                reg.apply_cnot(q, ancilla).expect("captured qubit is live");
                if let Some(op) = self.extra_op {
                    reg.apply_gate(op, q).expect("captured qubit is live");
                }
                self.captured.push(q);
                self.captured.push(ancilla);
                TapDecision::Withhold
            }
            AttackStrategy::EveInterceptResend => {
                let (kept, substitute) = reg.prepare_bell(BellLabel::PhiPlus, Party::Eve, Party::Eve);
                match self.resend_ancilla {
                    Some(ResendAncilla::OnIntercepted) => {
                        let ancilla = reg.fresh_qubit(Party::Eve);
                        reg.apply_cnot(q, ancilla).expect("captured qubit is live");
                        self.captured.push(ancilla);
                    }
                    Some(ResendAncilla::OnOwnPair) => {
                        let ancilla = reg.fresh_qubit(Party::Eve);
                        reg.apply_cnot(kept, ancilla).expect("own pair half is live");
                        self.captured.push(ancilla);
                    }
                    None => {}
                }
                if let Some(op) = self.extra_op {
                    reg.apply_gate(op, q).expect("captured qubit is live");
                }
                self.captured.push(q);
                self.captured.push(kept);
                TapDecision::Substitute(substitute)
            }
        }
    }
}

impl AuthAdversary for Adversary {
    fn channel_tap(&mut self) -> Option<&mut dyn ChannelTap> {
        match self.strategy {
            AttackStrategy::EveIntercept
            | AttackStrategy::EveInterceptCnot
            | AttackStrategy::EveInterceptResend => Some(self),
            AttackStrategy::None | AttackStrategy::MaliciousTrentGhz => None,
        }
    }

    fn impostor_user(&self) -> bool {
        matches!(
            self.strategy,
            AttackStrategy::EveIntercept | AttackStrategy::EveInterceptCnot
        )
    }

    fn ghz_preparer(&self) -> bool {
        self.strategy == AttackStrategy::MaliciousTrentGhz
    }

    fn spy_retained(&mut self, q: QubitId) {
        self.captured.push(q);
    }
}

/// Exact rejection probability of the unfaithful-preparer attack: the
/// forward check fails independently with probability 1/2 at each position
/// whose rank key bit triggers the H transform, and nowhere else.
pub fn ghz_attack_detection_probability(key: &AuthKey, v: usize, transform: HParity) -> f64 {
    let triggering = (0..v).filter(|&rank| transform.applies(key.bit(rank))).count();
    1.0 - 0.5f64.powi(triggering as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::Sim;
    use crate::protocol::{
        keyed_code_sequence, run_mutual_auth, AuthError, AuthStage, Conventions, SessionConfig,
    };
    use crate::qstate::states_equal_up_to_phase;
    use crate::qstate::StateVector;
    use crate::SimRng;
    use rand::SeedableRng;

    fn cfg() -> SessionConfig {
        SessionConfig { num_pairs: 8, verifying_size: 8, ..SessionConfig::default() }
    }

    /// Runs the first protocol step against a tap for a single pair and a
    /// single key bit, returning the sim and Eve's held qubits.
    fn intercept_one_position(strategy: AttackStrategy, key_bit: u8) -> (Sim, Vec<QubitId>, QubitId) {
        let mut sim = Sim::new();
        let mut rng = SimRng::seed_from_u64(1);
        let conventions = Conventions::default();
        let (t, a) = sim
            .registry
            .prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Trent);
        keyed_code_sequence(&mut sim, &[a], &AuthKey::from_bits(vec![key_bit]), conventions.forward)
            .unwrap();
        let mut adv = Adversary::new(strategy);
        let mut channel = crate::channels::QuantumChannel {
            from: Party::Trent,
            to: Party::Alice,
            tap: Some(&mut adv),
        };
        sim.send_qubits(&mut channel, &[a], &mut rng).unwrap();
        (sim, adv.captured, t)
    }

    #[test]
    fn intercepted_reverse_position_states() {
        // With the H-for-zero travelling convention and no decode, a
        // key-bit-0 pair sits in (|0+> + |1->)/sqrt(2) and a key-bit-1 pair
        // stays phi+.
        let (sim, captured, t) = intercept_one_position(AttackStrategy::EveIntercept, 0);
        let joint = sim.registry.joint_state(&[t, captured[0]]).unwrap();
        let half = 0.5;
        for (idx, want) in [(0b00, half), (0b01, half), (0b10, half), (0b11, -half)] {
            assert!((joint.amp(idx).re - want).abs() < 1e-12);
        }

        let (sim, captured, t) = intercept_one_position(AttackStrategy::EveIntercept, 1);
        let joint = sim.registry.joint_state(&[t, captured[0]]).unwrap();
        let want = StateVector::new(
            joint.qubits().to_vec(),
            BellLabel::PhiPlus.amplitudes().to_vec(),
        );
        assert!(states_equal_up_to_phase(&joint, &want, 1e-12).unwrap());
    }

    #[test]
    fn intercept_cnot_state_is_key_independent_after_transform() {
        // After the authenticator's forward-set transform the three-qubit
        // state is the same for both key bits:
        // (|0>(|00>+|11>) + |1>(|00>-|11>)) / 2 over (T, E, ancilla).
        for key_bit in [0u8, 1u8] {
            let (mut sim, captured, t) = intercept_one_position(AttackStrategy::EveInterceptCnot, key_bit);
            // Rank bit = key bit here; transform applies H for bit 1.
            if Conventions::default().transform.applies(key_bit) {
                sim.registry.apply_gate(GateLabel::H, t).unwrap();
            }
            let joint = sim.registry.joint_state(&[t, captured[0], captured[1]]).unwrap();
            let half = 0.5;
            for (idx, want) in [
                (0b000, half),
                (0b011, half),
                (0b100, half),
                (0b111, -half),
            ] {
                assert!(
                    (joint.amp(idx).re - want).abs() < 1e-12,
                    "key bit {key_bit}, index {idx:03b}"
                );
            }
        }
    }

    #[test]
    fn intercept_is_rejected_at_the_reverse_check() {
        // All-zero key: every reverse position carries a stray H, so each
        // mismatches with probability 1/2 and rejection is near-certain.
        let mut rejected = 0;
        let trials = 200;
        for seed in 0..trials {
            let mut rng = SimRng::seed_from_u64(seed);
            let mut sim = Sim::new();
            let key = AuthKey::from_bits(vec![0; 8]);
            let mut adv = Adversary::new(AttackStrategy::EveIntercept);
            let result =
                run_mutual_auth(&mut sim, &cfg(), Party::Alice, &key, &mut adv, &mut rng);
            match result {
                Err(AuthError::Rejected(abort)) => {
                    assert_eq!(abort.stage, AuthStage::Reverse);
                    assert!(abort.forward.accepted, "impostor bluffs the forward check");
                    rejected += 1;
                }
                Ok(_) => {}
                Err(other) => panic!("unexpected failure: {other}"),
            }
        }
        assert!(rejected >= 195, "rejected {rejected}/{trials}");
    }

    #[test]
    fn intercept_with_all_ones_key_is_never_detected() {
        // Key bits of 1 leave the travelling halves unkeyed under the
        // H-for-zero convention, so the interceptor's announced outcomes
        // match and the impostor is accepted every time.
        for seed in 0..40 {
            let mut rng = SimRng::seed_from_u64(seed);
            let mut sim = Sim::new();
            let key = AuthKey::from_bits(vec![1; 8]);
            let mut adv = Adversary::new(AttackStrategy::EveIntercept);
            let result =
                run_mutual_auth(&mut sim, &cfg(), Party::Alice, &key, &mut adv, &mut rng);
            assert!(result.is_ok(), "seed {seed}");
        }
    }

    #[test]
    fn intercept_captures_every_travelling_qubit() {
        let mut rng = SimRng::seed_from_u64(5);
        let mut sim = Sim::new();
        let key = AuthKey::from_bits(vec![0; 8]);
        let mut adv = Adversary::new(AttackStrategy::EveIntercept);
        let _ = run_mutual_auth(&mut sim, &cfg(), Party::Alice, &key, &mut adv, &mut rng);
        let total = cfg().num_pairs + 2 * cfg().verifying_size;
        assert_eq!(adv.captured.len(), total);
        for &q in &adv.captured {
            assert_eq!(sim.registry.owner(q).unwrap(), Party::Eve);
        }
    }

    #[test]
    fn resend_hands_substitutes_to_the_honest_user() {
        // The honest user runs on the adversary's pair halves, so her
        // forward comparison against the authenticator is a coin flip per
        // position and the run aborts there almost surely.
        let mut forward_aborts = 0;
        let trials = 100;
        for seed in 0..trials {
            let mut rng = SimRng::seed_from_u64(seed);
            let mut sim = Sim::new();
            let key = AuthKey::from_bits(vec![1, 0, 1, 0, 1, 0, 1, 0]);
            let mut adv = Adversary::new(AttackStrategy::EveInterceptResend);
            match run_mutual_auth(&mut sim, &cfg(), Party::Alice, &key, &mut adv, &mut rng) {
                Err(AuthError::Rejected(abort)) if abort.stage == AuthStage::Forward => {
                    forward_aborts += 1;
                }
                _ => {}
            }
        }
        assert!(forward_aborts >= 95, "forward aborts {forward_aborts}/{trials}");
    }

    #[test]
    fn resend_retains_two_qubits_per_position() {
        let mut rng = SimRng::seed_from_u64(9);
        let mut sim = Sim::new();
        let key = AuthKey::from_bits(vec![0; 8]);
        let mut adv = Adversary::new(AttackStrategy::EveInterceptResend);
        let _ = run_mutual_auth(&mut sim, &cfg(), Party::Alice, &key, &mut adv, &mut rng);
        let total = cfg().num_pairs + 2 * cfg().verifying_size;
        assert_eq!(adv.captured.len(), 2 * total);
    }

    #[test]
    fn ghz_preparer_is_caught_in_the_forward_check() {
        // Mixed key: detection probability 1 - (1/2)^(ones among the first
        // v rank bits).
        let key = AuthKey::from_bits(vec![1, 1, 0, 1, 1, 0, 1, 1]);
        let expected = ghz_attack_detection_probability(&key, 8, Conventions::default().transform);
        assert!((expected - (1.0 - 0.5f64.powi(6))).abs() < 1e-12);
        let trials = 400;
        let mut detected = 0;
        for seed in 0..trials {
            let mut rng = SimRng::seed_from_u64(seed);
            let mut sim = Sim::new();
            let mut adv = Adversary::new(AttackStrategy::MaliciousTrentGhz);
            match run_mutual_auth(&mut sim, &cfg(), Party::Alice, &key, &mut adv, &mut rng) {
                Err(AuthError::Rejected(abort)) => {
                    assert_eq!(abort.stage, AuthStage::Forward);
                    detected += 1;
                }
                Ok(_) => {}
                Err(other) => panic!("unexpected failure: {other}"),
            }
        }
        let rate = detected as f64 / trials as f64;
        assert!((rate - expected).abs() < 0.05, "rate {rate}, expected {expected}");
    }

    #[test]
    fn ghz_preparer_with_all_zero_key_is_never_detected() {
        // No rank bit triggers the H transform, so every forward position
        // recovers cleanly and the spy qubits stay unnoticed.
        let key = AuthKey::from_bits(vec![0; 8]);
        assert_eq!(
            ghz_attack_detection_probability(&key, 8, Conventions::default().transform),
            0.0
        );
        for seed in 0..40 {
            let mut rng = SimRng::seed_from_u64(seed);
            let mut sim = Sim::new();
            let mut adv = Adversary::new(AttackStrategy::MaliciousTrentGhz);
            let result = run_mutual_auth(&mut sim, &cfg(), Party::Alice, &key, &mut adv, &mut rng);
            assert!(result.is_ok(), "seed {seed}");
            assert_eq!(adv.captured.len(), cfg().num_pairs + 2 * cfg().verifying_size);
        }
    }

    #[test]
    fn extra_local_unitary_does_not_change_detection() {
        // The interceptor may rotate her held qubits arbitrarily; the
        // reverse-check statistics are unaffected.
        let mut rejected = 0;
        let trials = 200;
        for seed in 0..trials {
            let mut rng = SimRng::seed_from_u64(seed);
            let mut sim = Sim::new();
            let key = AuthKey::from_bits(vec![0; 8]);
            let mut adv =
                Adversary::new(AttackStrategy::EveIntercept).with_extra_op(GateLabel::Z);
            if run_mutual_auth(&mut sim, &cfg(), Party::Alice, &key, &mut adv, &mut rng).is_err() {
                rejected += 1;
            }
        }
        assert!(rejected >= 195, "rejected {rejected}/{trials}");
    }
}
