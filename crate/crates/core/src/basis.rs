//! Reference frames for an arbitrary operator basis.
//!
//! A basis of `K = d² − 1` Hermitian operators that is traceless, orthogonal
//! and closed under commutation plays the role of the spin components. The
//! frame uses `D = K − 1` particles, and the coupling `T` is the totally
//! antisymmetric sum over all `K!` orderings. Dense `T` is only built for a
//! single qubit; for two qubits the basis, its structure constants and the
//! separation pattern are checked directly.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{
    conjugate_local, expm_generator, kron, kron_all, operator_norm, partial_trace, spectral_norm, CMatrix,
    DensityMatrix, C64,
};

/// Tolerance for "zero" traces, overlaps and commutators.
pub const ZERO_TOL: f64 = 1e-12;
/// Residual allowed when matching a commutator to a single basis element.
pub const PROPORTIONAL_TOL: f64 = 1e-10;

const MAX_DENSE_QUBITS: usize = 2;
const MAX_DENSE_K: usize = 3;

#[derive(Clone, Debug)]
pub struct OperatorBasis {
    dim: usize,
    ops: Vec<CMatrix>,
    labels: Vec<String>,
}

impl OperatorBasis {
    /// Any list of square matrices of one size. The basis properties are
    /// not enforced here; see [`basis_report`].
    pub fn new(dim: usize, ops: Vec<CMatrix>, labels: Vec<String>) -> Result<Self> {
        if labels.len() != ops.len() {
            return Err(Error::DimensionMismatch { expected: ops.len(), found: labels.len() });
        }
        for op in &ops {
            if !op.is_square() {
                return Err(Error::NotSquare { rows: op.rows(), cols: op.cols() });
            }
            if op.rows() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: op.rows() });
            }
        }
        Ok(OperatorBasis { dim, ops, labels })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `K`
    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Number of frame particles, `D = K − 1`.
    pub fn frame_size(&self) -> usize {
        self.ops.len().saturating_sub(1)
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn op(&self, k: usize) -> Result<&CMatrix> {
        self.ops.get(k).ok_or(Error::InvalidIndex { index: k, len: self.ops.len() })
    }

    pub fn label(&self, k: usize) -> &str {
        self.labels.get(k).map(String::as_str).unwrap_or("?")
    }

    /// Index of the operator with the given label.
    pub fn position(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn norm(&self, k: usize) -> Result<f64> {
        operator_norm(self.op(k)?)
    }

    /// `η_k = tr(O_k²)/(d‖O_k‖)`
    pub fn eta(&self, k: usize) -> Result<f64> {
        let op = self.op(k)?;
        Ok(op.trace_product(op).re / (self.dim as f64 * operator_norm(op)?))
    }

    /// Copy with one operator replaced.
    pub fn with_op(&self, k: usize, op: CMatrix) -> Result<Self> {
        let mut ops = self.ops.clone();
        *ops.get_mut(k).ok_or(Error::InvalidIndex { index: k, len: self.ops.len() })? = op;
        OperatorBasis::new(self.dim, ops, self.labels.clone())
    }
}

/// Products of `{I/2, σ_x/2, σ_y/2, σ_z/2}` over `n` qubits, all-identity
/// removed, in lexicographic order with `I < X < Y < Z` and the first qubit
/// most significant. For one qubit this is `(s_x, s_y, s_z)`.
pub fn pauli_string_basis(qubits: usize) -> Result<OperatorBasis> {
    if qubits == 0 {
        return Err(Error::DimensionMismatch { expected: 1, found: 0 });
    }
    if qubits > MAX_DENSE_QUBITS {
        return Err(Error::DenseBasisScope { qubits });
    }
    let zero = C64::new(0.0, 0.0);
    let h = C64::new(0.5, 0.0);
    let ih = C64::new(0.0, 0.5);
    let factors = [
        ('I', CMatrix::from_real_diagonal(&[0.5, 0.5])),
        ('X', CMatrix::from_vec(2, 2, vec![zero, h, h, zero])?),
        ('Y', CMatrix::from_vec(2, 2, vec![zero, -ih, ih, zero])?),
        ('Z', CMatrix::from_real_diagonal(&[0.5, -0.5])),
    ];
    let count = 1usize << (2 * qubits);
    let mut ops = Vec::with_capacity(count - 1);
    let mut labels = Vec::with_capacity(count - 1);
    for code in 1..count {
        let digits: Vec<usize> = (0..qubits).rev().map(|q| (code >> (2 * q)) & 3).collect();
        ops.push(kron_all(digits.iter().map(|&d| &factors[d].1)));
        labels.push(digits.iter().map(|&d| factors[d].0).collect());
    }
    OperatorBasis::new(1 << qubits, ops, labels)
}

#[derive(Clone, Debug, PartialEq)]
pub enum StructureEntry {
    /// `[O_k, O_l] = 0`
    Zero,
    /// `[O_k, O_l] = c·O_m`
    Proportional { m: usize, coefficient: C64 },
    /// Not a multiple of one element; projection coefficients onto the basis.
    Expansion(Vec<(usize, C64)>),
}

impl StructureEntry {
    pub fn coefficient(&self) -> Option<(usize, C64)> {
        match *self {
            StructureEntry::Proportional { m, coefficient } => Some((m, coefficient)),
            _ => None,
        }
    }
}

/// Commutators of every ordered pair of basis elements.
#[derive(Clone, Debug)]
pub struct StructureTable {
    size: usize,
    entries: Vec<StructureEntry>,
}

impl StructureTable {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, k: usize, l: usize) -> &StructureEntry {
        &self.entries[k * self.size + l]
    }

    /// Unordered pairs `k < l`.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, &StructureEntry)> + '_ {
        (0..self.size).flat_map(move |k| (k + 1..self.size).map(move |l| (k, l, self.get(k, l))))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BasisReport {
    pub hermitian: bool,
    pub traceless: bool,
    pub orthogonal: bool,
    pub closed: bool,
    /// `[O_k, O_l] ∝ O_m` never has `m ∈ {k, l}`.
    pub index_exclusion: bool,
    pub max_trace: f64,
    pub max_overlap: f64,
    /// Pairs whose commutator is not a multiple of a single element.
    pub closure_violations: Vec<(usize, usize)>,
}

impl BasisReport {
    pub fn all(&self) -> bool {
        self.hermitian && self.traceless && self.orthogonal && self.closed && self.index_exclusion
    }
}

fn classify_commutator(basis: &OperatorBasis, c: &CMatrix) -> StructureEntry {
    if c.max_abs() <= ZERO_TOL {
        return StructureEntry::Zero;
    }
    let mut coefficients = Vec::with_capacity(basis.len());
    let mut best: Option<(usize, C64, f64)> = None;
    for (m, op) in basis.ops.iter().enumerate() {
        let norm_sq = op.trace_product(op).re;
        if norm_sq <= ZERO_TOL {
            coefficients.push(C64::new(0.0, 0.0));
            continue;
        }
        // tr(O_m† C)/tr(O_m† O_m)
        let coeff = op.adjoint().trace_product(c) / norm_sq;
        coefficients.push(coeff);
        let residual = (c - &op.scale(coeff)).max_abs();
        if best.is_none_or(|(_, _, r)| residual < r) {
            best = Some((m, coeff, residual));
        }
    }
    match best {
        Some((m, coefficient, residual)) if residual <= PROPORTIONAL_TOL => {
            StructureEntry::Proportional { m, coefficient }
        }
        _ => StructureEntry::Expansion(
            coefficients.into_iter().enumerate().filter(|(_, c)| c.norm() > ZERO_TOL).collect(),
        ),
    }
}

/// Checks tracelessness, orthogonality and closure, and tabulates every
/// commutator. Failures are reported, not returned as errors.
pub fn basis_report(basis: &OperatorBasis) -> (BasisReport, StructureTable) {
    let k = basis.len();
    let hermitian = basis.ops.iter().all(|op| op.is_hermitian(ZERO_TOL));
    let max_trace = basis.ops.iter().map(|op| op.trace().norm()).fold(0.0, f64::max);
    let mut max_overlap = 0.0f64;
    for a in 0..k {
        for b in a + 1..k {
            max_overlap = max_overlap.max(basis.ops[a].trace_product(&basis.ops[b]).norm());
        }
    }

    let mut entries = vec![StructureEntry::Zero; k * k];
    let mut closure_violations = Vec::new();
    let mut index_exclusion = true;
    for a in 0..k {
        for b in a + 1..k {
            let entry = classify_commutator(basis, &basis.ops[a].commutator(&basis.ops[b]));
            match entry {
                StructureEntry::Proportional { m, .. } if m == a || m == b => index_exclusion = false,
                StructureEntry::Expansion(_) => closure_violations.push((a, b)),
                _ => {}
            }
            entries[b * k + a] = match &entry {
                StructureEntry::Zero => StructureEntry::Zero,
                StructureEntry::Proportional { m, coefficient } => {
                    StructureEntry::Proportional { m: *m, coefficient: -coefficient }
                }
                StructureEntry::Expansion(terms) => {
                    StructureEntry::Expansion(terms.iter().map(|&(m, c)| (m, -c)).collect())
                }
            };
            entries[a * k + b] = entry;
        }
    }

    let report = BasisReport {
        hermitian,
        traceless: max_trace <= ZERO_TOL,
        orthogonal: max_overlap <= ZERO_TOL,
        closed: closure_violations.is_empty(),
        index_exclusion,
        max_trace,
        max_overlap,
        closure_violations,
    };
    (report, StructureTable { size: k, entries })
}

/// Sign of the totally antisymmetric symbol on `K` indices: the parity of
/// the permutation, or 0 if an index repeats.
pub fn f_sign(tuple: &[usize], k: usize) -> Result<i8> {
    if tuple.len() != k {
        return Err(Error::TupleLength { expected: k, found: tuple.len() });
    }
    if let Some(&bad) = tuple.iter().find(|&&i| i >= k) {
        return Err(Error::InvalidIndex { index: bad, len: k });
    }
    let mut seen = vec![false; k];
    for &i in tuple {
        if seen[i] {
            return Ok(0);
        }
        seen[i] = true;
    }
    // parity = (K − number of cycles) mod 2
    let mut visited = vec![false; k];
    let mut transpositions = 0usize;
    for start in 0..k {
        if visited[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !visited[i] {
            visited[i] = true;
            i = tuple[i];
            len += 1;
        }
        transpositions += len - 1;
    }
    Ok(if transpositions.is_multiple_of(2) { 1 } else { -1 })
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    // Heap's algorithm
    let mut current: Vec<usize> = (0..k).collect();
    let mut out = vec![current.clone()];
    let mut c = vec![0usize; k];
    let mut i = 0;
    while i < k {
        if c[i] < i {
            if i % 2 == 0 {
                current.swap(0, i);
            } else {
                current.swap(c[i], i);
            }
            out.push(current.clone());
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
    out
}

fn require_dense(basis: &OperatorBasis) -> Result<()> {
    if basis.len() > MAX_DENSE_K {
        return Err(Error::CombinatorialBlowup { operators: basis.len() });
    }
    Ok(())
}

/// `T = Σ f_{a₀…a_D} O_{a₀} ⊗ … ⊗ O_{a_D}` over all orderings.
pub fn build_general_t(basis: &OperatorBasis) -> Result<CMatrix> {
    require_dense(basis)?;
    let k = basis.len();
    let size = basis.dim.pow(k as u32);
    let mut t = CMatrix::zeros(size, size);
    for perm in permutations(k) {
        let sign = f_sign(&perm, k)?;
        if sign == 0 {
            continue;
        }
        let term = kron_all(perm.iter().map(|&a| &basis.ops[a]));
        t.axpy(C64::new(sign as f64, 0.0), &term);
    }
    Ok(t)
}

/// `Σ_slots O_k` over `parties` copies of the basis dimension.
pub fn total_operator(basis: &OperatorBasis, k: usize, parties: usize) -> Result<CMatrix> {
    let op = basis.op(k)?;
    let id = CMatrix::identity(basis.dim);
    let size = basis.dim.pow(parties as u32);
    let mut total = CMatrix::zeros(size, size);
    for slot in 0..parties {
        let factors: Vec<&CMatrix> = (0..parties).map(|p| if p == slot { op } else { &id }).collect();
        total = &total + &kron_all(factors);
    }
    Ok(total)
}

/// Largest `‖[T, O_k^tot]‖` over the basis.
pub fn extended_conservation_residual(basis: &OperatorBasis, t: &CMatrix) -> Result<f64> {
    let mut worst = 0.0f64;
    for k in 0..basis.len() {
        let total = total_operator(basis, k, basis.len())?;
        if total.rows() != t.rows() {
            return Err(Error::DimensionMismatch { expected: total.rows(), found: t.rows() });
        }
        worst = worst.max(spectral_norm(&t.commutator(&total))?);
    }
    Ok(worst)
}

/// Frame for generator `O_r`: particle `j = 1..D` carries `O_{(j+r) mod K}`
/// in the state `(I + O/‖O‖)/d`.
#[derive(Clone, Debug)]
pub struct GeneralFrame {
    pub offset: usize,
    pub carried: Vec<usize>,
    pub states: Vec<DensityMatrix>,
}

pub fn general_frame(basis: &OperatorBasis, offset: usize) -> Result<GeneralFrame> {
    let k = basis.len();
    basis.op(offset)?;
    let carried: Vec<usize> = (1..k).map(|j| (j + offset) % k).collect();
    let mut states = Vec::with_capacity(carried.len());
    for &a in &carried {
        let op = basis.op(a)?;
        let mut m = CMatrix::identity(basis.dim);
        m.axpy(C64::new(1.0 / operator_norm(op)?, 0.0), op);
        states.push(DensityMatrix::new(m.scale_real(1.0 / basis.dim as f64))?);
    }
    Ok(GeneralFrame { offset, carried, states })
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// `λ = K!·‖O_r‖·Π‖O_{a_j}‖/Π η_{a_j}` for the frame of generator `O_r`.
pub fn frame_lambda(basis: &OperatorBasis, offset: usize) -> Result<f64> {
    let frame = general_frame(basis, offset)?;
    let mut lambda = factorial(basis.len()) * basis.norm(offset)?;
    for &a in &frame.carried {
        lambda *= basis.norm(a)? / basis.eta(a)?;
    }
    Ok(lambda)
}

#[derive(Clone, Debug)]
pub struct GeneralStep {
    pub rho_out: DensityMatrix,
    /// `deltas[p][k]`: change of `⟨O_k⟩` on party `p`; party 0 is the system,
    /// `1..=D` the frame particles.
    pub deltas: Vec<Vec<f64>>,
    pub frame: GeneralFrame,
}

/// One step `exp(−iαT/(η_{a_1}…η_{a_D} N))` on system plus frame.
pub fn general_step(
    rho: &DensityMatrix,
    basis: &OperatorBasis,
    offset: usize,
    alpha: f64,
    iterations: usize,
) -> Result<GeneralStep> {
    require_dense(basis)?;
    if iterations == 0 {
        return Err(Error::ZeroIterations);
    }
    if rho.dim() != basis.dim {
        return Err(Error::DimensionMismatch { expected: basis.dim, found: rho.dim() });
    }
    let frame = general_frame(basis, offset)?;
    let k = basis.len();
    let mut eta_product = 1.0;
    for &a in &frame.carried {
        eta_product *= basis.eta(a)?;
    }
    let t = build_general_t(basis)?;
    let v = expm_generator(&t, alpha / (eta_product * iterations as f64))?;

    let mut joint = rho.matrix().clone();
    for state in &frame.states {
        joint = kron(&joint, state.matrix());
    }
    let dims = vec![basis.dim; k];
    let all: Vec<usize> = (0..k).collect();
    let out = conjugate_local(&joint, &dims, &all, &v)?;

    let mut before = vec![rho.matrix().clone()];
    before.extend(frame.states.iter().map(|s| s.matrix().clone()));
    let mut deltas = Vec::with_capacity(k);
    let mut rho_out = None;
    for (party, initial) in before.iter().enumerate() {
        let reduced = partial_trace(&out, &dims, &[party])?;
        deltas.push(basis.ops.iter().map(|op| op.expectation(&reduced) - op.expectation(initial)).collect());
        if party == 0 {
            rho_out = Some(DensityMatrix::from_channel_output(reduced));
        }
    }
    Ok(GeneralStep { rho_out: rho_out.expect("system party present"), deltas, frame })
}

/// First-order change of `⟨O_k⟩` on a frame particle carrying `O_a` under
/// generator `O_r`: `i(α/N)·tr(O_a ρ)·tr(O_k [O_r, O_a])/tr(O_a²)`.
pub fn first_order_delta(
    basis: &OperatorBasis,
    rho: &DensityMatrix,
    generator: usize,
    carried: usize,
    k: usize,
    alpha: f64,
    iterations: usize,
) -> Result<f64> {
    let (g, a, o) = (basis.op(generator)?, basis.op(carried)?, basis.op(k)?);
    let weight = a.expectation(rho.matrix()) / a.trace_product(a).re;
    let value = C64::new(0.0, alpha / iterations as f64) * o.trace_product(&g.commutator(a)) * weight;
    Ok(value.re)
}

#[derive(Clone, Debug, PartialEq)]
pub enum DeltaClass {
    NoChange,
    SingleObservable(usize),
    /// The commutator spreads over several elements; only possible for a
    /// basis that is not closed.
    Spread(Vec<usize>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleClass {
    pub particle: usize,
    pub carried: usize,
    pub class: DeltaClass,
}

/// Which observable each frame particle of generator `O_r` can change.
pub fn separation_classifier(table: &StructureTable, generator: usize) -> Vec<ParticleClass> {
    let k = table.size();
    (1..k)
        .map(|particle| {
            let carried = (particle + generator) % k;
            let class = match table.get(generator, carried) {
                StructureEntry::Zero => DeltaClass::NoChange,
                StructureEntry::Proportional { m, .. } => DeltaClass::SingleObservable(*m),
                StructureEntry::Expansion(terms) => DeltaClass::Spread(terms.iter().map(|(m, _)| *m).collect()),
            };
            ParticleClass { particle, carried, class }
        })
        .collect()
}

/// Short description of a basis element's commutator with another.
pub fn describe_entry(basis: &OperatorBasis, k: usize, l: usize, entry: &StructureEntry) -> String {
    match entry {
        StructureEntry::Zero => format!("[{}, {}] = 0", basis.label(k), basis.label(l)),
        StructureEntry::Proportional { m, coefficient } => format!(
            "[{}, {}] = ({:+.6}{:+.6}i) {}",
            basis.label(k),
            basis.label(l),
            coefficient.re,
            coefficient.im,
            basis.label(*m)
        ),
        StructureEntry::Expansion(terms) => {
            format!("[{}, {}] spreads over {} elements", basis.label(k), basis.label(l), terms.len())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::{general_bounds_valid, general_delta_bound, general_step_bound};
    use crate::frame::axis_step;
    use crate::linalg::trace_norm;
    use crate::spin::{build_t, spin_operators, Axis, Spin};
    use proptest::prelude::*;

    fn close(a: C64, b: C64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn single_qubit_basis_is_the_spin_operators() {
        let basis = pauli_string_basis(1).unwrap();
        let ops = spin_operators(Spin::HALF);
        assert_eq!(basis.len(), 3);
        for axis in Axis::ALL {
            assert!(basis.ops()[axis.index()].max_abs_diff(ops.get(axis)) < 1e-15);
        }
        assert_eq!(basis.label(0), "X");
    }

    #[test]
    fn two_qubit_basis_norms() {
        let basis = pauli_string_basis(2).unwrap();
        assert_eq!(basis.len(), 15);
        assert_eq!(basis.label(0), "IX");
        assert_eq!(basis.label(14), "ZZ");
        for k in 0..15 {
            assert!((basis.norm(k).unwrap() - 0.25).abs() < 1e-12);
            assert!((basis.eta(k).unwrap() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_scope_is_enforced() {
        assert!(matches!(pauli_string_basis(3), Err(Error::DenseBasisScope { qubits: 3 })));
        let two = pauli_string_basis(2).unwrap();
        assert!(matches!(build_general_t(&two), Err(Error::CombinatorialBlowup { operators: 15 })));
        let rho = DensityMatrix::maximally_mixed(4);
        assert!(general_step(&rho, &two, 0, 0.1, 10).is_err());
    }

    #[test]
    fn single_qubit_structure_is_spin_algebra() {
        let (report, table) = basis_report(&pauli_string_basis(1).unwrap());
        assert!(report.all(), "{report:?}");
        let i = C64::new(0.0, 1.0);
        assert_eq!(table.get(0, 1).coefficient().map(|(m, _)| m), Some(2));
        assert!(close(table.get(0, 1).coefficient().unwrap().1, i));
        assert!(close(table.get(1, 2).coefficient().unwrap().1, i));
        assert!(close(table.get(2, 0).coefficient().unwrap().1, i));
        assert!(close(table.get(1, 0).coefficient().unwrap().1, -i));
    }

    #[test]
    fn two_qubit_closure_against_direct_commutators() {
        let basis = pauli_string_basis(2).unwrap();
        let (report, table) = basis_report(&basis);
        assert!(report.all(), "{report:?}");
        assert_eq!(table.pairs().count(), 105);
        for (k, l, entry) in table.pairs() {
            let c = basis.ops()[k].commutator(&basis.ops()[l]);
            match entry {
                StructureEntry::Zero => assert!(c.max_abs() <= 1e-12),
                StructureEntry::Proportional { m, coefficient } => {
                    assert!(*m != k && *m != l);
                    assert!((&c - &basis.ops()[*m].scale(*coefficient)).max_abs() <= 1e-10);
                    assert_eq!(table.get(l, k), &StructureEntry::Proportional { m: *m, coefficient: -coefficient });
                }
                StructureEntry::Expansion(_) => panic!("{}", describe_entry(&basis, k, l, entry)),
            }
        }
    }

    #[test]
    fn perturbed_basis_fails_traceless_check() {
        let basis = pauli_string_basis(1).unwrap();
        let mut op = basis.ops()[1].clone();
        op.axpy(C64::new(1e-3, 0.0), &CMatrix::identity(2));
        let (report, _) = basis_report(&basis.with_op(1, op).unwrap());
        assert!(!report.traceless);
        assert!(!report.all());
    }

    #[test]
    fn non_closed_set_reports_expansion() {
        // s_x + s_y and s_y − s_z: commutator is i(s_y + s_z − s_x)
        let basis = pauli_string_basis(1).unwrap();
        let a = &basis.ops()[0] + &basis.ops()[1];
        let b = &basis.ops()[1] - &basis.ops()[2];
        let odd = OperatorBasis::new(2, vec![a, b, basis.ops()[2].clone()], vec!["A".into(), "B".into(), "Z".into()])
            .unwrap();
        let (report, table) = basis_report(&odd);
        assert!(!report.closed);
        assert!(report.closure_violations.contains(&(0, 1)));
        assert!(matches!(table.get(0, 1), StructureEntry::Expansion(_)));
    }

    #[test]
    fn f_sign_basics() {
        assert_eq!(f_sign(&[0, 1, 2], 3).unwrap(), 1);
        assert_eq!(f_sign(&[1, 0, 2], 3).unwrap(), -1);
        assert_eq!(f_sign(&[1, 2, 0], 3).unwrap(), 1);
        assert_eq!(f_sign(&[1, 1, 0], 3).unwrap(), 0);
        assert!(matches!(f_sign(&[0, 1], 3), Err(Error::TupleLength { .. })));
        assert!(f_sign(&[0, 1, 3], 3).is_err());
        for j in 0..3 {
            for k in 0..3 {
                for l in 0..3 {
                    assert_eq!(f_sign(&[j, k, l], 3).unwrap(), crate::spin::levi_civita(j, k, l));
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn f_sign_is_totally_antisymmetric(
            perm in Just((0..15usize).collect::<Vec<_>>()).prop_shuffle(),
            i in 0..15usize,
            j in 0..15usize,
        ) {
            prop_assume!(i != j);
            let mut swapped = perm.clone();
            swapped.swap(i, j);
            prop_assert_eq!(f_sign(&swapped, 15).unwrap(), -f_sign(&perm, 15).unwrap());
            let mut repeated = perm.clone();
            repeated[i] = repeated[j];
            prop_assert_eq!(f_sign(&repeated, 15).unwrap(), 0);
        }
    }

    #[test]
    fn general_t_reduces_to_spin_half_t() {
        let basis = pauli_string_basis(1).unwrap();
        let t = build_general_t(&basis).unwrap();
        assert!(t.max_abs_diff(&build_t(Spin::HALF)) <= 1e-15);
        assert!(t.trace().norm() < 1e-15);
        assert!(t.is_hermitian(1e-15));
        assert!(extended_conservation_residual(&basis, &t).unwrap() <= 1e-12);
    }

    #[test]
    fn frame_states() {
        let basis = pauli_string_basis(1).unwrap();
        for r in 0..3 {
            let frame = general_frame(&basis, r).unwrap();
            assert_eq!(frame.carried, vec![(r + 1) % 3, (r + 2) % 3]);
            for (state, &a) in frame.states.iter().zip(&frame.carried) {
                for k in 0..3 {
                    let want = if k == a { basis.eta(k).unwrap() } else { 0.0 };
                    assert!((basis.ops()[k].expectation(state.matrix()) - want).abs() <= 1e-10);
                }
            }
        }
        assert!((frame_lambda(&basis, 0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn general_step_matches_x_step() {
        let basis = pauli_string_basis(1).unwrap();
        let rho = DensityMatrix::bloch_angles(0.8, 2.1);
        for (alpha, n) in [(0.7, 10), (3.0, 40), (-1.2, 7)] {
            let general = general_step(&rho, &basis, 0, alpha, n).unwrap();
            let axis = axis_step(&rho, Axis::X, alpha, n, Spin::HALF).unwrap();
            assert!(general.rho_out.matrix().max_abs_diff(axis.rho_out.matrix()) <= 1e-12);
        }
    }

    #[test]
    fn general_step_within_bounds() {
        let basis = pauli_string_basis(1).unwrap();
        let rho = DensityMatrix::bloch_angles(1.1, -0.6);
        for r in 0..3 {
            let lambda = frame_lambda(&basis, r).unwrap();
            for (alpha, n) in [(0.5, 20), (2.0, 40), (3.1, 100)] {
                assert!(general_bounds_valid(lambda, alpha, n));
                let step = general_step(&rho, &basis, r, alpha, n).unwrap();
                let u = expm_generator(&basis.ops()[r], alpha / n as f64).unwrap();
                let ideal = rho.matrix().conjugate_by(&u);
                let err = trace_norm(&(step.rho_out.matrix() - &ideal)).unwrap();
                assert!(err <= general_step_bound(lambda, alpha, n), "r={r} α={alpha} N={n}: {err}");

                for (j, &a) in step.frame.carried.iter().enumerate() {
                    for k in 0..3 {
                        let predicted = first_order_delta(&basis, &rho, r, a, k, alpha, n).unwrap();
                        let measured = step.deltas[j + 1][k];
                        let bound = general_delta_bound(basis.norm(k).unwrap(), lambda, alpha, n);
                        assert!((measured - predicted).abs() <= bound, "r={r} a={a} k={k}");
                    }
                }
            }
        }
    }

    #[test]
    fn zero_angle_is_identity() {
        let basis = pauli_string_basis(1).unwrap();
        let rho = DensityMatrix::bloch_angles(0.3, 0.3);
        let step = general_step(&rho, &basis, 1, 0.0, 5).unwrap();
        assert!(step.rho_out.matrix().max_abs_diff(rho.matrix()) < 1e-15);
        assert!(step.deltas.iter().flatten().all(|d| d.abs() < 1e-15));
    }

    #[test]
    fn classifier_single_qubit() {
        let basis = pauli_string_basis(1).unwrap();
        let (_, table) = basis_report(&basis);
        let classes = separation_classifier(&table, 0);
        // particle carrying s_y can only change s_z, and vice versa
        assert_eq!(classes[0], ParticleClass { particle: 1, carried: 1, class: DeltaClass::SingleObservable(2) });
        assert_eq!(classes[1], ParticleClass { particle: 2, carried: 2, class: DeltaClass::SingleObservable(1) });

        let rho = DensityMatrix::bloch_angles(0.9, 0.4);
        let (alpha, n) = (1.0, 30);
        let step = general_step(&rho, &basis, 0, alpha, n).unwrap();
        let bound = general_delta_bound(0.5, frame_lambda(&basis, 0).unwrap(), alpha, n);
        for class in &classes {
            for k in 0..3 {
                let allowed = class.class == DeltaClass::SingleObservable(k);
                if !allowed {
                    assert!(step.deltas[class.particle][k].abs() <= bound);
                }
            }
        }
    }

    #[test]
    fn classifier_two_qubits() {
        let basis = pauli_string_basis(2).unwrap();
        let (_, table) = basis_report(&basis);
        let zi = basis.position("ZI").unwrap();
        let classes = separation_classifier(&table, zi);
        assert_eq!(classes.len(), 14);
        for class in &classes {
            let commutes = basis.ops()[zi].commutator(&basis.ops()[class.carried]).max_abs() <= 1e-12;
            match &class.class {
                DeltaClass::NoChange => assert!(commutes),
                DeltaClass::SingleObservable(m) => {
                    assert!(!commutes);
                    assert!(*m != zi && *m != class.carried);
                }
                DeltaClass::Spread(_) => panic!("closed basis"),
            }
        }
        let iz = basis.position("IZ").unwrap();
        let particle = classes.iter().find(|c| c.carried == iz).unwrap();
        assert_eq!(particle.class, DeltaClass::NoChange);
    }
}
