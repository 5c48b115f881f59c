//! Exact state-vector simulation of small qubit registers.
//!
//! Qubits live in an [`Registry`] that partitions them into disjoint
//! entanglement groups, each backed by one joint state vector. Product-state
//! qubits sit in their own group; groups merge only when a two-qubit
//! operation spans them, and measurements factor qubits back out. A protocol
//! session touches hundreds of pairs but each group stays at four or five
//! qubits, so joint states never grow past the configured cap.
//!
//! Conventions: within a group, the qubit at position `p` of the group's
//! ordered qubit list is the `p`-th ket label, i.e. bit `n-1-p` of the
//! amplitude index. Amplitude algebra is kept to 1e-12; states renormalize
//! only after measurement, with drift bounded by 1e-10.

mod bell;
mod gates;

pub use bell::{BellLabel, BELL_COEFFS};
pub use gates::GateLabel;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use thiserror::Error;

/// Complex amplitude of a computational basis ket.
pub type Amplitude = Complex64;

/// Default cap on the number of qubits in one joint state.
pub const DEFAULT_QUBIT_CAP: usize = 24;

/// Threshold on the smaller squared Schmidt coefficient below which a qubit
/// counts as product-separable from its group.
const SCHMIDT_TOL: f64 = 1e-10;

/// Simulation participants. `Unassigned` marks qubits not yet handed to a
/// protocol role.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Party {
    Trent,
    Alice,
    Bob,
    Eve,
    Unassigned,
}

impl std::fmt::Display for Party {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Party::Trent => "trent",
            Party::Alice => "alice",
            Party::Bob => "bob",
            Party::Eve => "eve",
            Party::Unassigned => "unassigned",
        };
        f.write_str(s)
    }
}

/// Identity of one simulated qubit. Ids are never reused within a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QubitId(pub u64);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct GroupId(u64);

#[derive(Debug, Error, PartialEq)]
pub enum QstateError {
    #[error("unknown or dead qubit handle {0:?}")]
    UnknownQubit(QubitId),
    #[error("operation requires two distinct qubits, got {0:?} twice")]
    SameQubit(QubitId),
    #[error("joint state would span {requested} qubits, above the cap of {cap}")]
    CapExceeded { requested: usize, cap: usize },
    #[error("selected qubits do not form a pure {expected}-qubit state")]
    WrongArity { expected: usize },
    #[error("states are over different qubit sets")]
    QubitSetMismatch,
    #[error("projection onto a branch of probability zero")]
    ZeroProbabilityBranch,
}

type Result<T> = std::result::Result<T, QstateError>;

/// Joint complex-amplitude state of an ordered list of qubits.
#[derive(Debug, Clone)]
pub struct StateVector {
    qubits: Vec<QubitId>,
    amps: Vec<Amplitude>,
}

impl StateVector {
    pub fn new(qubits: Vec<QubitId>, amps: Vec<Amplitude>) -> StateVector {
        assert_eq!(amps.len(), 1 << qubits.len(), "amplitude count must be 2^n");
        StateVector { qubits, amps }
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn amps(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn num_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Amplitude of the basis ket whose bits (first qubit leftmost) are
    /// given by `index`.
    pub fn amp(&self, index: usize) -> Amplitude {
        self.amps[index]
    }

    fn bitpos(&self, position: usize) -> usize {
        self.qubits.len() - 1 - position
    }

    fn position_of(&self, q: QubitId) -> Option<usize> {
        self.qubits.iter().position(|&x| x == q)
    }

    fn apply_single(&mut self, position: usize, u: [[Complex64; 2]; 2]) {
        let mask = 1usize << self.bitpos(position);
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let j = i | mask;
                let (a, b) = (self.amps[i], self.amps[j]);
                self.amps[i] = u[0][0] * a + u[0][1] * b;
                self.amps[j] = u[1][0] * a + u[1][1] * b;
            }
        }
        debug_assert!(self.check_sane());
    }

    fn apply_cnot_at(&mut self, control: usize, target: usize) {
        let cmask = 1usize << self.bitpos(control);
        let tmask = 1usize << self.bitpos(target);
        for i in 0..self.amps.len() {
            if i & cmask != 0 && i & tmask == 0 {
                self.amps.swap(i, i | tmask);
            }
        }
    }

    fn tensor(&self, other: &StateVector) -> StateVector {
        let n2 = other.qubits.len();
        let mut qubits = self.qubits.clone();
        qubits.extend_from_slice(&other.qubits);
        let mut amps = vec![Complex64::default(); 1 << qubits.len()];
        for (i1, a1) in self.amps.iter().enumerate() {
            for (i2, a2) in other.amps.iter().enumerate() {
                amps[(i1 << n2) | i2] = a1 * a2;
            }
        }
        StateVector { qubits, amps }
    }

    /// Rewrites the state so its qubit list matches `order` (a permutation
    /// of the current qubits).
    pub fn reorder(&self, order: &[QubitId]) -> Result<StateVector> {
        let n = self.qubits.len();
        if order.len() != n {
            return Err(QstateError::QubitSetMismatch);
        }
        let mut old_pos = Vec::with_capacity(n);
        for q in order {
            let p = self.position_of(*q).ok_or(QstateError::QubitSetMismatch)?;
            if old_pos.contains(&p) {
                return Err(QstateError::QubitSetMismatch);
            }
            old_pos.push(p);
        }
        let mut amps = vec![Complex64::default(); self.amps.len()];
        for (j, slot) in amps.iter_mut().enumerate() {
            let mut i = 0usize;
            for (new_p, &old_p) in old_pos.iter().enumerate() {
                let bit = (j >> (n - 1 - new_p)) & 1;
                i |= bit << (n - 1 - old_p);
            }
            *slot = self.amps[i];
        }
        Ok(StateVector { qubits: order.to_vec(), amps })
    }

    fn check_sane(&self) -> bool {
        self.amps.iter().all(|a| a.re.is_finite() && a.im.is_finite())
            && (self.norm_sqr() - 1.0).abs() < 1e-9
    }
}

/// True iff `a = exp(i theta) * b` componentwise within `tol`, over the same
/// qubit set (in any order).
pub fn states_equal_up_to_phase(a: &StateVector, b: &StateVector, tol: f64) -> Result<bool> {
    let b = b.reorder(&a.qubits)?;
    let (k, amax) = a
        .amps
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.norm_sqr().total_cmp(&y.1.norm_sqr()))
        .expect("state vector is never empty");
    if amax.norm() < tol {
        return Err(QstateError::ZeroProbabilityBranch);
    }
    let phase = b.amps[k] / amax;
    if (phase.norm() - 1.0).abs() > tol {
        return Ok(false);
    }
    Ok(a.amps
        .iter()
        .zip(b.amps.iter())
        .all(|(x, y)| (x * phase - y).norm() <= tol))
}

fn insert_bit(i: usize, bitpos: usize, value: usize) -> usize {
    let low = i & ((1 << bitpos) - 1);
    let high = i >> bitpos;
    (high << (bitpos + 1)) | (value << bitpos) | low
}

/// Partition of live qubits into disjoint entanglement groups, each backed
/// by one [`StateVector`]. The single source of quantum truth in a session.
#[derive(Debug, Clone)]
pub struct Registry {
    next_qubit: u64,
    next_group: u64,
    cap: usize,
    owners: HashMap<QubitId, Party>,
    group_of: HashMap<QubitId, GroupId>,
    groups: HashMap<GroupId, StateVector>,
}

impl Default for Registry {
    fn default() -> Self {
        Registry::new()
    }
}

impl Registry {
    pub fn new() -> Registry {
        Registry::with_cap(DEFAULT_QUBIT_CAP)
    }

    pub fn with_cap(cap: usize) -> Registry {
        Registry {
            next_qubit: 0,
            next_group: 0,
            cap,
            owners: HashMap::new(),
            group_of: HashMap::new(),
            groups: HashMap::new(),
        }
    }

    fn new_group_id(&mut self) -> GroupId {
        let g = GroupId(self.next_group);
        self.next_group += 1;
        g
    }

    fn install_group(&mut self, state: StateVector) -> GroupId {
        let g = self.new_group_id();
        for q in state.qubits() {
            self.group_of.insert(*q, g);
        }
        self.groups.insert(g, state);
        g
    }

    /// Allocates a fresh qubit in |0> as its own group.
    pub fn fresh_qubit(&mut self, owner: Party) -> QubitId {
        let q = QubitId(self.next_qubit);
        self.next_qubit += 1;
        self.owners.insert(q, owner);
        let state = StateVector::new(
            vec![q],
            vec![Complex64::new(1.0, 0.0), Complex64::default()],
        );
        self.install_group(state);
        q
    }

    /// Creates a new two-qubit group in the given Bell state. The first
    /// handle is the first ket label.
    pub fn prepare_bell(&mut self, kind: BellLabel, owner_a: Party, owner_b: Party) -> (QubitId, QubitId) {
        let qa = QubitId(self.next_qubit);
        let qb = QubitId(self.next_qubit + 1);
        self.next_qubit += 2;
        self.owners.insert(qa, owner_a);
        self.owners.insert(qb, owner_b);
        let state = StateVector::new(vec![qa, qb], kind.amplitudes().to_vec());
        self.install_group(state);
        (qa, qb)
    }

    pub fn exists(&self, q: QubitId) -> bool {
        self.owners.contains_key(&q)
    }

    pub fn owner(&self, q: QubitId) -> Result<Party> {
        self.owners.get(&q).copied().ok_or(QstateError::UnknownQubit(q))
    }

    pub fn set_owner(&mut self, q: QubitId, owner: Party) -> Result<()> {
        match self.owners.get_mut(&q) {
            Some(slot) => {
                *slot = owner;
                Ok(())
            }
            None => Err(QstateError::UnknownQubit(q)),
        }
    }

    fn group_id(&self, q: QubitId) -> Result<GroupId> {
        self.group_of.get(&q).copied().ok_or(QstateError::UnknownQubit(q))
    }

    /// The qubits sharing an entanglement group with `q` (including `q`),
    /// in the group's ket order.
    pub fn group_members(&self, q: QubitId) -> Result<Vec<QubitId>> {
        let g = self.group_id(q)?;
        Ok(self.groups[&g].qubits().to_vec())
    }

    /// Read-only view of the joint state backing `q`'s group.
    pub fn group_state(&self, q: QubitId) -> Result<&StateVector> {
        let g = self.group_id(q)?;
        Ok(&self.groups[&g])
    }

    /// Merges the groups of `a` and `b` (tensor product) if distinct.
    fn merge(&mut self, a: QubitId, b: QubitId) -> Result<GroupId> {
        let ga = self.group_id(a)?;
        let gb = self.group_id(b)?;
        if ga == gb {
            return Ok(ga);
        }
        let sa = &self.groups[&ga];
        let sb = &self.groups[&gb];
        let total = sa.num_qubits() + sb.num_qubits();
        if total > self.cap {
            return Err(QstateError::CapExceeded { requested: total, cap: self.cap });
        }
        let merged = sa.tensor(sb);
        self.groups.remove(&ga);
        self.groups.remove(&gb);
        Ok(self.install_group(merged))
    }

    pub fn apply_gate(&mut self, gate: GateLabel, q: QubitId) -> Result<()> {
        let g = self.group_id(q)?;
        let state = self.groups.get_mut(&g).expect("group exists");
        let p = state.position_of(q).expect("qubit in its group");
        state.apply_single(p, gate.matrix());
        Ok(())
    }

    /// Standard CNOT; merges the two groups when they are distinct.
    pub fn apply_cnot(&mut self, control: QubitId, target: QubitId) -> Result<()> {
        if control == target {
            return Err(QstateError::SameQubit(control));
        }
        let g = self.merge(control, target)?;
        let state = self.groups.get_mut(&g).expect("group exists");
        let pc = state.position_of(control).expect("qubit in its group");
        let pt = state.position_of(target).expect("qubit in its group");
        state.apply_cnot_at(pc, pt);
        debug_assert!(state.check_sane());
        Ok(())
    }

    /// Born-rule probabilities of measuring `q` as 0 or 1.
    pub fn z_probabilities(&self, q: QubitId) -> Result<[f64; 2]> {
        let g = self.group_id(q)?;
        let state = &self.groups[&g];
        let p = state.position_of(q).expect("qubit in its group");
        let mask = 1usize << state.bitpos(p);
        let mut p1 = 0.0;
        for (i, a) in state.amps().iter().enumerate() {
            if i & mask != 0 {
                p1 += a.norm_sqr();
            }
        }
        Ok([1.0 - p1, p1])
    }

    /// Collapses `q` to the given outcome, renormalizes, and factors any
    /// now-product qubits out of the group.
    pub fn project_z(&mut self, q: QubitId, outcome: u8) -> Result<()> {
        let probs = self.z_probabilities(q)?;
        let p = probs[outcome as usize];
        if p < 1e-300 {
            return Err(QstateError::ZeroProbabilityBranch);
        }
        let g = self.group_id(q)?;
        let state = self.groups.get_mut(&g).expect("group exists");
        let pos = state.position_of(q).expect("qubit in its group");
        let mask = 1usize << state.bitpos(pos);
        let keep = if outcome == 0 { 0 } else { mask };
        let scale = 1.0 / p.sqrt();
        for (i, a) in state.amps.iter_mut().enumerate() {
            if i & mask == keep {
                *a *= scale;
            } else {
                *a = Complex64::default();
            }
        }
        self.factor_group_of(q)?;
        Ok(())
    }

    /// Measures `q` in the computational basis, collapsing the state.
    pub fn measure_z<R: rand::Rng>(&mut self, q: QubitId, rng: &mut R) -> Result<u8> {
        let probs = self.z_probabilities(q)?;
        let outcome = if rng.random::<f64>() < probs[0] { 0 } else { 1 };
        self.project_z(q, outcome)?;
        Ok(outcome)
    }

    /// Probabilities of the four Bell outcomes for the ordered pair
    /// `(q1, q2)`. Merges their groups first (a physical no-op).
    pub fn bell_probabilities(&mut self, q1: QubitId, q2: QubitId) -> Result<[f64; 4]> {
        if q1 == q2 {
            return Err(QstateError::SameQubit(q1));
        }
        let g = self.merge(q1, q2)?;
        let state = &self.groups[&g];
        let mut probs = [0.0; 4];
        for label in BellLabel::ALL {
            let inner = bell_branch(state, q1, q2, label);
            probs[label.index()] = inner.iter().map(|c| c.norm_sqr()).sum();
        }
        Ok(probs)
    }

    /// Projects the pair onto the given Bell state. The pair factors out
    /// into its own two-qubit group; the remainder of the group keeps the
    /// renormalized co-state.
    pub fn project_bell(&mut self, q1: QubitId, q2: QubitId, label: BellLabel) -> Result<()> {
        let probs = self.bell_probabilities(q1, q2)?;
        let p = probs[label.index()];
        if p < 1e-300 {
            return Err(QstateError::ZeroProbabilityBranch);
        }
        let g = self.group_id(q1)?;
        let state = self.groups.remove(&g).expect("group exists");
        for q in state.qubits() {
            self.group_of.remove(q);
        }
        let mut rest_qubits = state.qubits().to_vec();
        rest_qubits.retain(|&q| q != q1 && q != q2);
        let inner = bell_branch(&state, q1, q2, label);
        let pair = StateVector::new(vec![q1, q2], label.amplitudes().to_vec());
        self.install_group(pair);
        if !rest_qubits.is_empty() {
            let scale = 1.0 / p.sqrt();
            let amps: Vec<Amplitude> = inner.iter().map(|c| c * scale).collect();
            let rest = StateVector::new(rest_qubits, amps);
            debug_assert!(rest.check_sane());
            self.install_group(rest);
        }
        Ok(())
    }

    /// Bell-basis measurement of the ordered pair `(q1, q2)`.
    pub fn measure_bell<R: rand::Rng>(
        &mut self,
        q1: QubitId,
        q2: QubitId,
        rng: &mut R,
    ) -> Result<BellLabel> {
        let probs = self.bell_probabilities(q1, q2)?;
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = BellLabel::PsiMinus;
        for label in BellLabel::ALL {
            acc += probs[label.index()];
            if u < acc {
                chosen = label;
                break;
            }
        }
        self.project_bell(q1, q2, chosen)?;
        Ok(chosen)
    }

    /// Coefficients of the pure two-qubit state of `(q1, q2)` over the Bell
    /// basis (phi+, phi-, psi+, psi-). Errors unless the pair is isolated
    /// from all other qubits.
    pub fn bell_decompose(&self, q1: QubitId, q2: QubitId) -> Result<[Amplitude; 4]> {
        let state = self.joint_state(&[q1, q2])?;
        let mut coeffs = [Amplitude::default(); 4];
        for label in BellLabel::ALL {
            let e = label.amplitudes();
            coeffs[label.index()] = (0..4).map(|z| e[z].conj() * state.amp(z)).sum();
        }
        Ok(coeffs)
    }

    /// Pure joint state of exactly the listed qubits, in the listed order.
    /// Errors if they are entangled with anything outside the list.
    pub fn joint_state(&self, qs: &[QubitId]) -> Result<StateVector> {
        if qs.is_empty() {
            return Err(QstateError::WrongArity { expected: 1 });
        }
        let mut seen_groups: Vec<GroupId> = Vec::new();
        for &q in qs {
            let g = self.group_id(q)?;
            if !seen_groups.contains(&g) {
                seen_groups.push(g);
            }
        }
        let member_count: usize = seen_groups.iter().map(|g| self.groups[g].num_qubits()).sum();
        if member_count != qs.len() {
            return Err(QstateError::WrongArity { expected: qs.len() });
        }
        let mut acc: Option<StateVector> = None;
        for g in &seen_groups {
            let s = &self.groups[g];
            acc = Some(match acc {
                None => s.clone(),
                Some(prev) => prev.tensor(s),
            });
        }
        acc.expect("at least one group").reorder(qs)
    }

    /// Splits `q` from its group when its reduced state is a pure product
    /// factor (smaller squared Schmidt coefficient below 1e-10). Returns
    /// whether a split happened.
    pub fn factor_if_product(&mut self, q: QubitId) -> Result<bool> {
        let g = self.group_id(q)?;
        if self.groups[&g].num_qubits() == 1 {
            return Ok(false);
        }
        let state = &self.groups[&g];
        let pos = state.position_of(q).expect("qubit in its group");
        let bp = state.bitpos(pos);
        let half = state.amps().len() / 2;
        let mut v0 = Vec::with_capacity(half);
        let mut v1 = Vec::with_capacity(half);
        for r in 0..half {
            v0.push(state.amp(insert_bit(r, bp, 0)));
            v1.push(state.amp(insert_bit(r, bp, 1)));
        }
        let g00: f64 = v0.iter().map(|c| c.norm_sqr()).sum();
        let g11: f64 = v1.iter().map(|c| c.norm_sqr()).sum();
        let g01: Complex64 = v0.iter().zip(v1.iter()).map(|(a, b)| a.conj() * b).sum();
        let tr = g00 + g11;
        let det = g00 * g11 - g01.norm_sqr();
        let lambda_min = (tr - (tr * tr - 4.0 * det).max(0.0).sqrt()) / 2.0;
        if lambda_min > SCHMIDT_TOL {
            return Ok(false);
        }
        // Rank one: v0 = a0*w, v1 = a1*w. Take w from the heavier slice.
        let (w, a0, a1) = if g00 >= g11 {
            let norm = g00.sqrt();
            let w: Vec<Amplitude> = v0.iter().map(|c| c / norm).collect();
            (w, Complex64::new(norm, 0.0), g01 / norm)
        } else {
            let norm = g11.sqrt();
            let w: Vec<Amplitude> = v1.iter().map(|c| c / norm).collect();
            (w, g01.conj() / norm, Complex64::new(norm, 0.0))
        };
        let local_norm = (a0.norm_sqr() + a1.norm_sqr()).sqrt();
        let local = StateVector::new(vec![q], vec![a0 / local_norm, a1 / local_norm]);

        let old = self.groups.remove(&g).expect("group exists");
        for member in old.qubits() {
            self.group_of.remove(member);
        }
        let mut rest_qubits = old.qubits().to_vec();
        rest_qubits.remove(pos);
        self.install_group(local);
        let rest = StateVector::new(rest_qubits, w);
        debug_assert!(rest.check_sane());
        self.install_group(rest);
        Ok(true)
    }

    /// Factors every product qubit out of `q`'s group.
    fn factor_group_of(&mut self, q: QubitId) -> Result<()> {
        let members = self.group_members(q)?;
        for member in members {
            self.factor_if_product(member)?;
        }
        Ok(())
    }
}

/// Unnormalized co-state left on the rest of the group after projecting the
/// ordered pair `(q1, q2)` onto `label`, indexed by the rest qubits in group
/// order. Its squared norm is the branch probability.
fn bell_branch(state: &StateVector, q1: QubitId, q2: QubitId, label: BellLabel) -> Vec<Amplitude> {
    let p1 = state.position_of(q1).expect("qubit in its group");
    let p2 = state.position_of(q2).expect("qubit in its group");
    let bp1 = state.bitpos(p1);
    let bp2 = state.bitpos(p2);
    let (hi, lo) = if bp1 > bp2 { (bp1, bp2) } else { (bp2, bp1) };
    let e = label.amplitudes();
    let rest_len = state.amps().len() / 4;
    let mut inner = vec![Amplitude::default(); rest_len];
    for (r, slot) in inner.iter_mut().enumerate() {
        let base = insert_bit(r, lo, 0);
        for z1 in 0..2usize {
            for z2 in 0..2usize {
                let mut i = insert_bit(base, hi, 0);
                i |= z1 << bp1;
                i |= z2 << bp2;
                *slot += e[(z1 << 1) | z2].conj() * state.amp(i);
            }
        }
    }
    inner
}
