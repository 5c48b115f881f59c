//! The acceptance suite: every verifiable claim the simulator is built
//! around, as a list of pass/fail criteria with pinned tolerances.
//!
//! Each criterion is self-contained and returns what it measured, so the
//! same functions back both `cargo test` and the `selftest` subcommand.

use crate::adversary::{ghz_attack_detection_probability, Adversary, AttackStrategy};
use crate::channels::{QuantumChannel, Sim};
use crate::harness::oracle::{self, VerifyPhase};
use crate::harness::stats::{mutual_information, OutcomeDistribution};
use crate::harness::trials::{
    self, hex_to_bits, report_bytes, run_trials, AttackKind, ProtocolKind, ReportFormat, RunConfig,
};
use crate::legacy::{trent_plus_state_attack, LegacyConfig};
use crate::protocol::{
    attach_ancilla, derive_auth_key, keyed_code_sequence, keyed_transform_step, recovery_gate,
    run_session, swap_decode, AuthKey, CommScheme, Conventions, GateMappings, NoAdversary,
    SessionConfig,
};
use crate::qstate::{
    states_equal_up_to_phase, BellLabel, GateLabel, Party, Registry, StateVector, BELL_COEFFS,
};
use crate::SimRng;
use rand::{Rng, SeedableRng};
use std::time::Instant;

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub index: usize,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    fn finish(index: usize, name: &'static str, start: Instant, passed: bool, detail: String) -> Self {
        CriterionResult { index, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
    }
}

/// Runs all acceptance criteria in order.
pub fn run_all() -> Vec<CriterionResult> {
    vec![
        bell_basis_tables(),
        entanglement_swapping(),
        transformed_triple_state(),
        recovery_restoration(),
        honest_completeness(),
        legacy_attack_reproduction(),
        intercept_detection(),
        zero_leakage(),
        ghz_preparer_detection(),
        decode_tables(),
        report_determinism(),
    ]
}

/// 1. The Bell/computational basis-change coefficients, reproduced exactly.
pub fn bell_basis_tables() -> CriterionResult {
    let start = Instant::now();
    // Prepare all four computational two-qubit basis states up front.
    let mut prepared = Vec::new();
    for z in 0..4usize {
        let mut reg = Registry::new();
        let a = reg.fresh_qubit(Party::Alice);
        let b = reg.fresh_qubit(Party::Alice);
        if z & 0b10 != 0 {
            reg.apply_gate(GateLabel::X, a).unwrap();
        }
        if z & 0b01 != 0 {
            reg.apply_gate(GateLabel::X, b).unwrap();
        }
        prepared.push((reg, a, b));
    }
    let clock = Instant::now();
    let mut worst: f64 = 0.0;
    for (z, (reg, a, b)) in prepared.iter().enumerate() {
        let coeffs = reg.bell_decompose(*a, *b).unwrap();
        for m in 0..4 {
            let want = BELL_COEFFS[m][z];
            worst = worst.max((coeffs[m].re - want).abs().max(coeffs[m].im.abs()));
        }
    }
    let elapsed = clock.elapsed();
    let passed = worst < 1e-12 && elapsed.as_secs_f64() < 1e-3;
    CriterionResult::finish(
        1,
        "bell basis-change table exact",
        start,
        passed,
        format!("max coefficient error {worst:.2e}, decompose time {:?}", elapsed),
    )
}

/// 2. Entanglement swapping: exactly uniform outcomes by enumeration and a
/// 10,000-trial frequency check.
pub fn entanglement_swapping() -> CriterionResult {
    let start = Instant::now();
    let dist = oracle::swap_scenario(BellLabel::PhiPlus, BellLabel::PhiPlus);
    let mut exact_err: f64 = 0.0;
    for label in BellLabel::ALL {
        let idx = label.index() as u8;
        let p = dist.probability_where(|o| o[0].1 == idx);
        exact_err = exact_err.max((p - 0.25).abs());
        // The partner pair always collapses to the measured label.
        let joint = dist.probability_where(|o| o[0].1 == idx && o[1].1 == idx);
        exact_err = exact_err.max((joint - 0.25).abs());
    }

    let mut rng = SimRng::seed_from_u64(0x5eed_2);
    let trials = 10_000u32;
    let mut counts = [0u32; 4];
    for _ in 0..trials {
        let mut reg = Registry::new();
        let (t1, _a) = reg.prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Alice);
        let (t2, _b) = reg.prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Bob);
        let label = reg.measure_bell(t1, t2, &mut rng).unwrap();
        counts[label.index()] += 1;
    }
    let mut freq_err: f64 = 0.0;
    for c in counts {
        freq_err = freq_err.max((f64::from(c) / f64::from(trials) - 0.25).abs());
    }
    let elapsed = start.elapsed().as_secs_f64();
    let passed = exact_err < 1e-12 && freq_err <= 0.02 && elapsed < 5.0;
    CriterionResult::finish(
        2,
        "entanglement swapping uniform",
        start,
        passed,
        format!(
            "enumerated error {exact_err:.2e}, sampled deviation {freq_err:.4} at {trials} trials"
        ),
    )
}

/// 3. The transformed verification triple: after both parties' H transforms
/// on a phi+ triple the amplitudes are exactly 1/2 on 000, 011, 101, 110.
pub fn transformed_triple_state() -> CriterionResult {
    let start = Instant::now();
    let conventions = Conventions::default();
    let mut sim = Sim::new();
    let (t, a) = sim.registry.prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Alice);
    let anc = attach_ancilla(&mut sim, a).unwrap();
    keyed_transform_step(&mut sim, &[a, anc], 1, conventions.transform).unwrap();
    keyed_transform_step(&mut sim, &[t], 1, conventions.transform).unwrap();
    let state = sim.registry.joint_state(&[t, a, anc]).unwrap();
    let mut worst: f64 = 0.0;
    for idx in 0..8usize {
        let want = if [0b000, 0b011, 0b101, 0b110].contains(&idx) { 0.5 } else { 0.0 };
        worst = worst.max((state.amp(idx).re - want).abs().max(state.amp(idx).im.abs()));
    }
    let passed = worst < 1e-12;
    CriterionResult::finish(
        3,
        "transformed triple amplitudes exact",
        start,
        passed,
        format!("max amplitude error {worst:.2e}"),
    )
}

/// 4. Ancilla-outcome recovery restores every initial Bell state up to a
/// global phase (all four states, both outcomes).
pub fn recovery_restoration() -> CriterionResult {
    let start = Instant::now();
    let conventions = Conventions::default();
    let mut cases = 0;
    let mut failures = Vec::new();
    for initial in BellLabel::ALL {
        for forced in [0u8, 1u8] {
            cases += 1;
            let mut sim = Sim::new();
            let (t, a) = sim.registry.prepare_bell(initial, Party::Trent, Party::Alice);
            let anc = attach_ancilla(&mut sim, a).unwrap();
            keyed_transform_step(&mut sim, &[a, anc], 1, conventions.transform).unwrap();
            keyed_transform_step(&mut sim, &[t], 1, conventions.transform).unwrap();
            sim.registry.project_z(anc, forced).unwrap();
            let gate = recovery_gate(initial, forced);
            if gate != GateLabel::I {
                sim.registry.apply_gate(gate, a).unwrap();
            }
            let got = sim.registry.joint_state(&[t, a]).unwrap();
            let want = StateVector::new(vec![t, a], initial.amplitudes().to_vec());
            if !states_equal_up_to_phase(&got, &want, 1e-10).unwrap() {
                failures.push(format!("{initial}/{forced}"));
            }
        }
    }
    let passed = failures.is_empty();
    CriterionResult::finish(
        4,
        "ancilla recovery restores initial state",
        start,
        passed,
        if passed {
            format!("{cases}/8 cases restored within 1e-10")
        } else {
            format!("failed cases: {}", failures.join(", "))
        },
    )
}

/// 5. Honest completeness: both schemes, all four initial states, 100
/// sessions each, delivered exactly with zero mismatches.
pub fn honest_completeness() -> CriterionResult {
    let start = Instant::now();
    let alice_key = derive_auth_key(b"alice", 0, 8);
    let bob_key = derive_auth_key(b"bob", 0, 8);
    let message = hex_to_bits("b3c1").unwrap();
    let mut good = 0u32;
    let mut total = 0u32;
    for scheme in [CommScheme::SwapEncoding, CommScheme::DenseCoding] {
        for initial in BellLabel::ALL {
            let cfg = SessionConfig {
                num_pairs: 16,
                verifying_size: 8,
                initial_bell: initial,
                comm_scheme: scheme,
                ..SessionConfig::default()
            };
            for trial in 0..100u64 {
                total += 1;
                let mut rng = SimRng::seed_from_u64(trials::mix_seed(0xACCE, trial));
                let mut sim = Sim::new();
                let out = run_session(
                    &mut sim,
                    &cfg,
                    &alice_key,
                    &bob_key,
                    &mut NoAdversary,
                    &message,
                    &mut rng,
                );
                if let Ok(out) = out {
                    let zero = out.alice_auth.0.mismatches
                        + out.alice_auth.1.mismatches
                        + out.bob_auth.0.mismatches
                        + out.bob_auth.1.mismatches
                        == 0;
                    if zero && out.delivered == message {
                        good += 1;
                    }
                }
            }
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let passed = good == total && elapsed < 10.0;
    CriterionResult::finish(
        5,
        "honest sessions deliver exactly",
        start,
        passed,
        format!("{good}/{total} sessions clean in {elapsed:.2}s"),
    )
}

/// 6. The legacy different-initial-state attack reads random 64-bit
/// messages perfectly, and its outcome pair carries exactly one bit about
/// each payload bit.
pub fn legacy_attack_reproduction() -> CriterionResult {
    let start = Instant::now();
    let alice_key = derive_auth_key(b"alice", 0, 8);
    let bob_key = derive_auth_key(b"bob", 0, 8);
    let mut successes = 0u32;
    let trials = 100u64;
    for trial in 0..trials {
        let mut rng = SimRng::seed_from_u64(trials::mix_seed(0x1e6ac, trial));
        let message: Vec<u8> = (0..64).map(|_| rng.random_range(0..2u8)).collect();
        let mut sim = Sim::new();
        let run = trent_plus_state_attack(
            &mut sim,
            &LegacyConfig::default(),
            &alice_key,
            &bob_key,
            &message,
            &mut rng,
        )
        .unwrap();
        if run.inferred.as_deref() == Some(&message[..]) {
            successes += 1;
        }
    }
    let mi = mutual_information(&oracle::legacy_plus_attack(0), &oracle::legacy_plus_attack(1))
        .unwrap();
    let passed = successes == trials as u32 && (mi - 1.0).abs() < 1e-9;
    CriterionResult::finish(
        6,
        "legacy attack reads every message bit",
        start,
        passed,
        format!("success {successes}/{trials}, outcome information {mi:.12} bits"),
    )
}

/// 7. Interceptor detection: exact per-position reverse-set mismatch
/// probabilities, a 10,000-trial frequency check, and exactly uniform,
/// key-independent announced bits in the forward set.
pub fn intercept_detection() -> CriterionResult {
    let start = Instant::now();
    let mism0 = oracle::eve_intercept_joint(VerifyPhase::Reverse, 0)
        .probability_where(|o| o[0].1 != o[1].1);
    let mism1 = oracle::eve_intercept_joint(VerifyPhase::Reverse, 1)
        .probability_where(|o| o[0].1 != o[1].1);
    let exact_ok = (mism0 - 0.5).abs() < 1e-12 && mism1.abs() < 1e-12;

    // Sample the same per-position pipeline through the real channel tap.
    let mut rng = SimRng::seed_from_u64(0x5eed_7);
    let samples = 10_000u32;
    let mut freqs = [0.0f64; 2];
    for bit in [0u8, 1u8] {
        let mut mismatches = 0u32;
        for _ in 0..samples {
            let mut sim = Sim::new();
            let (t, a) = sim.registry.prepare_bell(BellLabel::PhiPlus, Party::Trent, Party::Trent);
            keyed_code_sequence(
                &mut sim,
                &[a],
                &AuthKey::from_bits(vec![bit]),
                Conventions::default().forward,
            )
            .unwrap();
            let mut adv = Adversary::new(AttackStrategy::EveIntercept);
            let mut channel = QuantumChannel::tapped(Party::Trent, Party::Alice, &mut adv);
            sim.send_qubits(&mut channel, &[a], &mut rng).unwrap();
            let tz = sim.registry.measure_z(t, &mut rng).unwrap();
            let ez = sim.registry.measure_z(a, &mut rng).unwrap();
            mismatches += u32::from(tz != ez);
        }
        freqs[usize::from(bit)] = f64::from(mismatches) / f64::from(samples);
    }
    let sampled_ok = (freqs[0] - 0.5).abs() <= 0.02 && freqs[1] <= 0.02;

    // Announced forward-set bits: uniform under both key bits, and the two
    // view distributions coincide exactly.
    let v0 = oracle::eve_intercept_view(VerifyPhase::Forward, 0);
    let v1 = oracle::eve_intercept_view(VerifyPhase::Forward, 1);
    let uniform = |d: &OutcomeDistribution| {
        (d.probability_where(|o| o[0].1 == 0) - 0.5).abs() < 1e-12
            && (d.probability_where(|o| o[0].1 == 1) - 0.5).abs() < 1e-12
    };
    let announced_ok = uniform(&v0) && uniform(&v1) && v0.max_divergence(&v1) < 1e-12;

    let passed = exact_ok && sampled_ok && announced_ok;
    CriterionResult::finish(
        7,
        "interceptor detection statistics",
        start,
        passed,
        format!(
            "exact mismatch ({mism0:.3}, {mism1:.3}), sampled ({:.4}, {:.4}), announced uniform {announced_ok}",
            freqs[0], freqs[1]
        ),
    )
}

/// 8. Zero leakage: the adversary view carries no information about any
/// key bit, for every interception strategy, per position and across a
/// product of positions.
pub fn zero_leakage() -> CriterionResult {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut detail = Vec::new();
    for strategy in [
        AttackStrategy::EveIntercept,
        AttackStrategy::EveInterceptCnot,
        AttackStrategy::EveInterceptResend,
    ] {
        for phase in [VerifyPhase::Forward, VerifyPhase::Reverse] {
            let d0 = oracle::adversary_view(strategy, phase, 0).expect("view defined");
            let d1 = oracle::adversary_view(strategy, phase, 1).expect("view defined");
            let mi = mutual_information(&d0, &d1).unwrap();
            worst = worst.max(mi);
            // Whole-transcript product over four independent positions.
            let p0 = d0.product(&d0).product(&d0.product(&d0));
            let p1 = d1.product(&d1).product(&d1.product(&d1));
            let mi4 = mutual_information(&p0, &p1).unwrap();
            worst = worst.max(mi4);
            detail.push(format!("{strategy:?}/{phase:?}: {mi:.2e} ({mi4:.2e} over 4)"));
        }
    }
    let passed = worst < 1e-9;
    CriterionResult::finish(
        8,
        "interception leaks zero key information",
        start,
        passed,
        format!("max information {worst:.2e} bits; {}", detail.join("; ")),
    )
}

/// 9. Unfaithful-preparer detection: mismatch probability exactly 1/2 per
/// H-transform position, and the end-to-end detection rate matches
/// 1 - (1/2)^n1 at 10,000 trials.
pub fn ghz_preparer_detection() -> CriterionResult {
    let start = Instant::now();
    let mism1 = oracle::malicious_trent_forward(1).probability_where(|o| o[0].1 != o[1].1);
    let mism0 = oracle::malicious_trent_forward(0).probability_where(|o| o[0].1 != o[1].1);
    let exact_ok = (mism1 - 0.5).abs() < 1e-12 && mism0.abs() < 1e-12;

    let cfg: RunConfig = RunConfig {
        protocol: ProtocolKind::MutualQdc,
        attack: AttackKind::MaliciousTrentGhz,
        n: 16,
        v: 8,
        initial_bell: BellLabel::PhiPlus,
        comm_scheme: CommScheme::SwapEncoding,
        message: "b3c1".into(),
        trials: 10_000,
        seed: 0x61f2,
        hash_id: crate::protocol::HASH_ID.into(),
        conventions: Conventions::default(),
        mappings: GateMappings::default(),
        key_length: 8,
        alice_id: "alice".into(),
        bob_id: "bob".into(),
        counter: 0,
        error_threshold: 0,
        dense_check_fraction: 0.25,
        legacy_check_fraction: 0.25,
        legacy_mode: crate::legacy::DeliveryMode::Protocol1,
    };
    let key = derive_auth_key(b"alice", 0, 8);
    let expected = ghz_attack_detection_probability(&key, 8, Conventions::default().transform);
    let report = run_trials(&cfg, true).expect("valid config");
    let observed = report.aggregates.detection_rate;
    let sampled_ok = (observed - expected).abs() <= 0.02;

    let passed = exact_ok && sampled_ok;
    CriterionResult::finish(
        9,
        "unfaithful preparer detection rate",
        start,
        passed,
        format!(
            "exact per-position mismatch ({mism1:.3}, {mism0:.3}); detection {observed:.4} vs {expected:.4}"
        ),
    )
}

/// 10. Both communication decode tables recover every message over every
/// label combination, across all measurement branches.
pub fn decode_tables() -> CriterionResult {
    let start = Instant::now();
    let mappings = GateMappings::default();
    let mut cases = 0u32;
    let mut good = 0u32;
    for s1 in BellLabel::ALL {
        for s2 in BellLabel::ALL {
            for bits in 0..4u8 {
                let message = (bits >> 1, bits & 1);
                let gate = mappings.swap[usize::from(bits)];
                let dist = oracle::swap_encode_scenario(s1, s2, gate);
                for (outcome, p) in dist.entries() {
                    if p <= 0.0 {
                        continue;
                    }
                    cases += 1;
                    let alice = BellLabel::from_index(usize::from(outcome[0].1));
                    let bob = BellLabel::from_index(usize::from(outcome[1].1));
                    if swap_decode(&mappings, bob, alice, s1, s2).ok() == Some(message) {
                        good += 1;
                    }
                }
            }
        }
    }
    let swap_cases = cases;
    for label in BellLabel::ALL {
        for bits in 0..4u8 {
            let message = (bits >> 1, bits & 1);
            let gate = mappings.dense[usize::from(bits)];
            let dist = oracle::dense_encode_scenario(label, gate);
            for (outcome, p) in dist.entries() {
                if p <= 0.0 {
                    continue;
                }
                cases += 1;
                let bob = BellLabel::from_index(usize::from(outcome[0].1));
                if crate::protocol::dense_decode(&mappings, label, bob).ok() == Some(message) {
                    good += 1;
                }
            }
        }
    }
    let passed = cases > 0 && good == cases;
    CriterionResult::finish(
        10,
        "communication decode tables exact",
        start,
        passed,
        format!("{good}/{cases} branches decoded ({swap_cases} swapping, {} dense)", cases - swap_cases),
    )
}

/// 11. Reports are byte-identical for a fixed (config, seed), serial or
/// parallel.
pub fn report_determinism() -> CriterionResult {
    let start = Instant::now();
    let cfg: RunConfig = serde_json::from_value(serde_json::json!({
        "protocol": "mutual_qdc",
        "N": 16,
        "v": 8,
        "message": "b3c1",
        "trials": 50,
        "seed": 99
    }))
    .expect("valid config");
    let serial_1 = report_bytes(&run_trials(&cfg, false).unwrap(), ReportFormat::Json).unwrap();
    let serial_2 = report_bytes(&run_trials(&cfg, false).unwrap(), ReportFormat::Json).unwrap();
    let parallel = report_bytes(&run_trials(&cfg, true).unwrap(), ReportFormat::Json).unwrap();
    let passed = serial_1 == serial_2 && serial_1 == parallel;
    CriterionResult::finish(
        11,
        "reports byte-identical across runs",
        start,
        passed,
        format!("{} bytes, serial repeat {}, parallel {}", serial_1.len(), serial_1 == serial_2, serial_1 == parallel),
    )
}
