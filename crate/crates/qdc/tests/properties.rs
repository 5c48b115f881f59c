//! Property tests for the simulator and protocol invariants.

use proptest::prelude::*;
use qdc::harness::{bits_to_hex, hex_to_bits};
use qdc::protocol::{keyed_code_sequence, AuthKey, HParity};
use qdc::qstate::{states_equal_up_to_phase, BellLabel, GateLabel, Party, Registry, StateVector};
use qdc::Sim;

fn gate_strategy() -> impl Strategy<Value = GateLabel> {
    prop::sample::select(vec![
        GateLabel::I,
        GateLabel::H,
        GateLabel::X,
        GateLabel::Z,
        GateLabel::Iy,
    ])
}

fn label_strategy() -> impl Strategy<Value = BellLabel> {
    prop::sample::select(vec![
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
        BellLabel::PsiMinus,
    ])
}

#[derive(Debug, Clone)]
enum Op {
    Gate(GateLabel, u8),
    Cnot(u8, u8),
}

fn op_strategy(qubits: u8) -> impl Strategy<Value = Op> {
    prop_oneof![
        (gate_strategy(), 0..qubits).prop_map(|(g, q)| Op::Gate(g, q)),
        (0..qubits, 0..qubits).prop_map(|(c, t)| Op::Cnot(c, t)),
    ]
}

proptest! {
    /// Unitaries never drift the norm: after any circuit every group's
    /// squared amplitudes still sum to one.
    #[test]
    fn circuits_preserve_normalization(ops in prop::collection::vec(op_strategy(5), 0..60)) {
        let mut reg = Registry::new();
        let qs: Vec<_> = (0..5).map(|_| reg.fresh_qubit(Party::Unassigned)).collect();
        for op in ops {
            match op {
                Op::Gate(g, q) => reg.apply_gate(g, qs[usize::from(q)]).unwrap(),
                Op::Cnot(c, t) if c != t => {
                    reg.apply_cnot(qs[usize::from(c)], qs[usize::from(t)]).unwrap()
                }
                Op::Cnot(..) => {}
            }
        }
        let mut seen = std::collections::HashSet::new();
        for &q in &qs {
            let members = reg.group_members(q).unwrap();
            if seen.insert(members) {
                let state = reg.group_state(q).unwrap();
                prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
            }
        }
    }

    /// Bell-basis coefficients reconstruct any pure two-qubit state: the
    /// decomposition re-expanded over the four Bell states is the state.
    #[test]
    fn bell_decompose_round_trips(
        local in prop::collection::vec((gate_strategy(), prop::bool::ANY), 0..8),
        entangle in prop::bool::ANY,
    ) {
        let mut reg = Registry::new();
        let a = reg.fresh_qubit(Party::Alice);
        let b = reg.fresh_qubit(Party::Alice);
        for (g, on_first) in local {
            reg.apply_gate(g, if on_first { a } else { b }).unwrap();
        }
        if entangle {
            reg.apply_cnot(a, b).unwrap();
        }
        let coeffs = reg.bell_decompose(a, b).unwrap();
        let total: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);

        let mut amps = [num_complex::Complex64::default(); 4];
        for label in BellLabel::ALL {
            let basis = label.amplitudes();
            for (slot, base) in amps.iter_mut().zip(basis) {
                *slot += coeffs[label.index()] * base;
            }
        }
        let rebuilt = StateVector::new(vec![a, b], amps.to_vec());
        let original = reg.joint_state(&[a, b]).unwrap();
        prop_assert!(states_equal_up_to_phase(&original, &rebuilt, 1e-12).unwrap());
    }

    /// Encoding and decoding a pair sequence with the same key and
    /// convention restores every pair, for any key and any initial state.
    #[test]
    fn keyed_code_is_an_involution(
        bits in prop::collection::vec(0u8..2, 1..12),
        initial in label_strategy(),
        count in 1usize..10,
        h_for_zero in prop::bool::ANY,
    ) {
        let convention = if h_for_zero { HParity::HForZero } else { HParity::HForOne };
        let key = AuthKey::from_bits(bits);
        let mut sim = Sim::new();
        let mut pairs = Vec::new();
        let mut travelling = Vec::new();
        for _ in 0..count {
            let (t, a) = sim.registry.prepare_bell(initial, Party::Trent, Party::Trent);
            pairs.push((t, a));
            travelling.push(a);
        }
        keyed_code_sequence(&mut sim, &travelling, &key, convention).unwrap();
        keyed_code_sequence(&mut sim, &travelling, &key, convention).unwrap();
        for (t, a) in pairs {
            let got = sim.registry.joint_state(&[t, a]).unwrap();
            let want = StateVector::new(vec![t, a], initial.amplitudes().to_vec());
            prop_assert!(states_equal_up_to_phase(&got, &want, 1e-10).unwrap());
        }
    }

    /// Hex messages survive the bits round trip.
    #[test]
    fn hex_round_trips(digits in "[0-9a-f]{0,32}") {
        let bits = hex_to_bits(&digits).unwrap();
        prop_assert_eq!(bits.len(), digits.len() * 4);
        prop_assert_eq!(bits_to_hex(&bits), digits);
    }
}
