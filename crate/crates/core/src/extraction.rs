//! Moving the spin vector of an unknown qubit into three batteries.
//!
//! The qubit is paired with two maximally mixed ancillas and driven by
//! `U = Σ_{n,m} XⁿZᵐ ⊗ |n⟩⟨n| ⊗ |m⟩⟨m|`, which leaves it maximally mixed.
//! `U` is compiled into single-qubit rotations, each run through the
//! battery frame, and rotation-invariant exchange gates
//! `exp(−iθ s⁽ᵃ⁾·s⁽ᵇ⁾)`, which need no frame. Whatever spin the qubit had
//! ends up in the batteries, each component in its own part.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use crate::error::{Error, Result};
use crate::frame::{BatteryLedger, FramedRotation, Vec3};
use crate::linalg::{
    conjugate_local, expm_generator, kron, kron_all, partial_trace, phase_aligned_distance, CMatrix, DensityMatrix, C64,
};
use crate::spin::{spin_operators, Axis, Spin};

/// Register layout: party 0 is the system, parties 1 and 2 the ancillas.
pub const PARTIES: usize = 3;
const DIMS: [usize; PARTIES] = [2, 2, 2];

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    /// `exp(−i α·s)` on one party, realized through the battery frame.
    SingleRotation { target: usize, alpha: Vec3 },
    /// `exp(−iθ s⁽ᵃ⁾·s⁽ᵇ⁾)`, rotation invariant.
    Exchange { targets: (usize, usize), theta: f64 },
}

/// Gates in time order (first gate acts first).
#[derive(Clone, Debug, PartialEq)]
pub struct GateSequence {
    gates: Vec<Gate>,
}

/// `s⁽¹⁾·s⁽²⁾` on two qubits.
pub fn exchange_generator() -> CMatrix {
    let ops = spin_operators(Spin::HALF);
    let mut h = CMatrix::zeros(4, 4);
    for axis in Axis::ALL {
        h = &h + &kron(ops.get(axis), ops.get(axis));
    }
    h
}

fn rotation_matrix(alpha: Vec3) -> Result<CMatrix> {
    expm_generator(&crate::frame::rotation_generator(Spin::HALF, alpha), 1.0)
}

impl GateSequence {
    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    /// Exact unitary of the sequence on the three-qubit register.
    pub fn matrix(&self) -> Result<CMatrix> {
        let mut u = CMatrix::identity(8);
        for gate in &self.gates {
            let (local, targets) = gate_local(gate)?;
            let full = embed_local(&local, &targets);
            u = &full * &u;
        }
        Ok(u)
    }
}

fn gate_local(gate: &Gate) -> Result<(CMatrix, Vec<usize>)> {
    match *gate {
        Gate::SingleRotation { target, alpha } => Ok((rotation_matrix(alpha)?, vec![target])),
        Gate::Exchange { targets: (a, b), theta } => Ok((expm_generator(&exchange_generator(), theta)?, vec![a, b])),
    }
}

// local ⊗ I on the named qubits of the register, as a full 8x8 matrix.
fn embed_local(local: &CMatrix, targets: &[usize]) -> CMatrix {
    // conjugate_local on the operator basis would square the action; build
    // the map column by column instead.
    let n = 8;
    let mut out = CMatrix::zeros(n, n);
    for col in 0..n {
        let bits = [(col >> 2) & 1, (col >> 1) & 1, col & 1];
        let local_in = targets.iter().fold(0, |acc, &t| acc * 2 + bits[t]);
        for local_out in 0..local.rows() {
            let amp = local[(local_out, local_in)];
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            let mut out_bits = bits;
            for (pos, &t) in targets.iter().enumerate() {
                out_bits[t] = (local_out >> (targets.len() - 1 - pos)) & 1;
            }
            let row = (out_bits[0] << 2) | (out_bits[1] << 1) | out_bits[2];
            out[(row, col)] += amp;
        }
    }
    out
}

/// `Σ_{n,m} XⁿZᵐ ⊗ |n⟩⟨n| ⊗ |m⟩⟨m|` with the system as the first factor.
pub fn decoherence_unitary() -> CMatrix {
    let x = CMatrix::from_fn(2, 2, |i, j| if i != j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let z = CMatrix::from_real_diagonal(&[1.0, -1.0]);
    let id = CMatrix::identity(2);
    let proj = |k: usize| CMatrix::from_real_diagonal(if k == 0 { &[1.0, 0.0] } else { &[0.0, 1.0] });
    let mut u = CMatrix::zeros(8, 8);
    for n in 0..2 {
        for m in 0..2 {
            let xn = if n == 1 { &x } else { &id };
            let zm = if m == 1 { &z } else { &id };
            u = &u + &kron_all([&(xn * zm), &proj(n), &proj(m)]);
        }
    }
    u
}

fn rz(target: usize, angle: f64) -> Gate {
    Gate::SingleRotation { target, alpha: [0.0, 0.0, angle] }
}

fn hadamard(target: usize) -> Gate {
    // exp(−iπ (s_x + s_z)/√2) = −iH
    Gate::SingleRotation { target, alpha: [PI * FRAC_1_SQRT_2, 0.0, PI * FRAC_1_SQRT_2] }
}

// Controlled-Z between a and b from two √SWAP-type exchange gates.
fn controlled_z(a: usize, b: usize) -> [Gate; 5] {
    let half_swap = Gate::Exchange { targets: (a, b), theta: FRAC_PI_2 };
    [half_swap, rz(a, PI), half_swap, rz(a, FRAC_PI_2), rz(b, -FRAC_PI_2)]
}

fn controlled_x(control: usize, target: usize) -> Vec<Gate> {
    let mut gates = vec![hadamard(target)];
    gates.extend(controlled_z(control, target));
    gates.push(hadamard(target));
    gates
}

// Fuse neighbouring rotations on the same party into one.
fn merge_rotations(gates: &[Gate]) -> Result<Vec<Gate>> {
    let mut out: Vec<Gate> = Vec::with_capacity(gates.len());
    for gate in gates {
        if let (Some(Gate::SingleRotation { target: t0, alpha: a0 }), Gate::SingleRotation { target, alpha }) =
            (out.last().copied(), *gate)
        {
            if t0 == target {
                let u = &rotation_matrix(alpha)? * &rotation_matrix(a0)?;
                let fused = crate::frame::generator_from_unitary(&u)?;
                out.pop();
                if fused.iter().any(|a| *a != 0.0) {
                    out.push(Gate::SingleRotation { target, alpha: fused });
                }
                continue;
            }
        }
        out.push(*gate);
    }
    Ok(out)
}

/// Gate sequence for [`decoherence_unitary`]: controlled-Z from ancilla 2,
/// then controlled-X from ancilla 1, both onto the system.
///
/// The composition is checked against the target before returning.
pub fn compile_decoherence() -> Result<GateSequence> {
    let mut gates: Vec<Gate> = controlled_z(2, 0).into();
    gates.extend(controlled_x(1, 0));
    let seq = GateSequence { gates: merge_rotations(&gates)? };
    let residual = phase_aligned_distance(&decoherence_unitary(), &seq.matrix()?);
    if residual > crate::linalg::DECOMP_TOL {
        return Err(Error::CompilationInvalid { residual });
    }
    Ok(seq)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExtractionOptions {
    pub iterations: usize,
    /// Battery part that books the ancillas' spin changes.
    pub ancilla_part: Axis,
}

impl ExtractionOptions {
    pub fn new(iterations: usize) -> Self {
        ExtractionOptions { iterations, ancilla_part: Axis::Z }
    }
}

#[derive(Clone, Debug)]
pub struct ExtractionResult {
    pub rho_final: DensityMatrix,
    pub system_marginal: DensityMatrix,
    pub ancilla_marginals: [DensityMatrix; 2],
    /// Reference-frame changes per part, plus the ancillas' changes booked to
    /// the configured part.
    pub ledger: BatteryLedger,
    /// Change of the system qubit's spin.
    pub system_delta: Vec3,
    /// Combined change of both ancillas' spin.
    pub ancilla_delta: Vec3,
    /// Ideal gains per part: `(⟨s_x⟩,0,0)`, `(0,⟨s_y⟩,0)`, `(0,0,⟨s_z⟩)`.
    pub target_gains: [Vec3; 3],
}

impl ExtractionResult {
    /// Largest deviation of a designated slot from its target.
    pub fn designated_deviation(&self) -> f64 {
        Axis::ALL
            .iter()
            .map(|&p| libm::fabs(self.ledger.get(p, p) - self.target_gains[p.index()][p.index()]))
            .fold(0.0, f64::max)
    }

    /// Largest magnitude among the six off-target slots.
    pub fn off_target_max(&self) -> f64 {
        let mut worst = 0.0f64;
        for p in Axis::ALL {
            for k in Axis::ALL {
                if p != k {
                    worst = worst.max(libm::fabs(self.ledger.get(p, k)));
                }
            }
        }
        worst
    }

    /// `‖ρ_system − I/2‖₁`
    pub fn marginal_distance(&self) -> Result<f64> {
        self.system_marginal.trace_distance(&DensityMatrix::maximally_mixed(2))
    }

    /// Largest `‖ρ_ancilla − I/2‖₁`.
    pub fn ancilla_distance(&self) -> Result<f64> {
        let mixed = DensityMatrix::maximally_mixed(2);
        let a = self.ancilla_marginals[0].trace_distance(&mixed)?;
        let b = self.ancilla_marginals[1].trace_distance(&mixed)?;
        Ok(a.max(b))
    }
}

fn qubit_spin(rho: &CMatrix) -> Vec3 {
    let ops = spin_operators(Spin::HALF);
    Axis::ALL.map(|k| ops.get(k).expectation(rho))
}

fn marginals(register: &CMatrix) -> Result<[CMatrix; 3]> {
    Ok([
        partial_trace(register, &DIMS, &[0])?,
        partial_trace(register, &DIMS, &[1])?,
        partial_trace(register, &DIMS, &[2])?,
    ])
}

pub fn run_extraction(rho_s: &DensityMatrix, iterations: usize) -> Result<ExtractionResult> {
    run_extraction_with(rho_s, &ExtractionOptions::new(iterations))
}

pub fn run_extraction_with(rho_s: &DensityMatrix, options: &ExtractionOptions) -> Result<ExtractionResult> {
    if rho_s.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: rho_s.dim() });
    }
    if options.iterations == 0 {
        return Err(Error::ZeroIterations);
    }
    let circuit = compile_decoherence()?;
    let mixed = DensityMatrix::maximally_mixed(2);
    let initial = kron_all([rho_s.matrix(), mixed.matrix(), mixed.matrix()]);
    let before = marginals(&initial)?;

    let mut ledger = BatteryLedger::new();
    let mut register = initial;
    for gate in circuit.gates() {
        match *gate {
            Gate::SingleRotation { target, alpha } => {
                let framed = FramedRotation::new(Spin::HALF, alpha, options.iterations)?;
                register = framed.run_on(&register, &DIMS, target, &mut ledger)?;
            }
            Gate::Exchange { targets: (a, b), theta } => {
                let u = expm_generator(&exchange_generator(), theta)?;
                register = conjugate_local(&register, &DIMS, &[a, b], &u)?.hermitian_part();
            }
        }
    }

    let after = marginals(&register)?;
    let spin = |m: &CMatrix| qubit_spin(m);
    let s0 = spin(&before[0]);
    let system_delta = {
        let s1 = spin(&after[0]);
        [s1[0] - s0[0], s1[1] - s0[1], s1[2] - s0[2]]
    };
    let mut ancilla_delta = [0.0; 3];
    for a in 1..3 {
        let (b, f) = (spin(&before[a]), spin(&after[a]));
        for k in 0..3 {
            ancilla_delta[k] += f[k] - b[k];
        }
    }
    ledger.record(options.ancilla_part, ancilla_delta);

    let mut target_gains = [[0.0; 3]; 3];
    for k in 0..3 {
        target_gains[k][k] = s0[k];
    }
    let [m0, m1, m2] = after;
    Ok(ExtractionResult {
        rho_final: DensityMatrix::from_channel_output(register),
        system_marginal: DensityMatrix::from_channel_output(m0),
        ancilla_marginals: [DensityMatrix::from_channel_output(m1), DensityMatrix::from_channel_output(m2)],
        ledger,
        system_delta,
        ancilla_delta,
        target_gains,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spin::{total_spin_component, Party};

    fn maximally_mixed_ancillas(rho: &DensityMatrix) -> CMatrix {
        let mixed = DensityMatrix::maximally_mixed(2);
        kron_all([rho.matrix(), mixed.matrix(), mixed.matrix()])
    }

    #[test]
    fn decoherence_unitary_structure() {
        let u = decoherence_unitary();
        assert!(u.unitary_defect() <= 1e-12);
        // n = m = 0 block is the identity on the system
        for i in 0..2 {
            for j in 0..2 {
                let v = u[(i << 2, j << 2)];
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((v - C64::new(want, 0.0)).norm() < 1e-15);
            }
        }
        // n = 1, m = 0 block squares to the identity
        let block = CMatrix::from_fn(2, 2, |i, j| u[((i << 2) | 2, (j << 2) | 2)]);
        assert!((&block * &block).max_abs_diff(&CMatrix::identity(2)) < 1e-15);
    }

    #[test]
    fn decoherence_leaves_system_maximally_mixed() {
        let u = decoherence_unitary();
        for rho in [
            DensityMatrix::bloch_angles(0.0, 0.0),
            DensityMatrix::bloch_angles(core::f64::consts::FRAC_PI_3, core::f64::consts::FRAC_PI_4),
            DensityMatrix::from_bloch([0.2, -0.5, 0.1]).unwrap(),
        ] {
            let out = maximally_mixed_ancillas(&rho).conjugate_by(&u);
            let sys = partial_trace(&out, &DIMS, &[0]).unwrap();
            assert!(sys.max_abs_diff(&CMatrix::identity(2).scale_real(0.5)) < 1e-14);
        }
    }

    #[test]
    fn compiled_circuit_reproduces_target() {
        let seq = compile_decoherence().unwrap();
        assert!(phase_aligned_distance(&decoherence_unitary(), &seq.matrix().unwrap()) <= 1e-10);
        let exchanges = seq.gates().iter().filter(|g| matches!(g, Gate::Exchange { .. })).count();
        assert_eq!(exchanges, 4);
        assert_eq!(seq.len() - exchanges, 6);
    }

    #[test]
    fn exchange_gates_are_rotation_invariant() {
        let seq = compile_decoherence().unwrap();
        for gate in seq.gates() {
            match *gate {
                Gate::Exchange { theta, .. } => {
                    let u = expm_generator(&exchange_generator(), theta).unwrap();
                    for axis in Axis::ALL {
                        let s = total_spin_component(axis, &[Party::counted(Spin::HALF); 2]).unwrap();
                        assert!(u.commutator(&s).max_abs() <= 1e-12);
                    }
                }
                Gate::SingleRotation { target, alpha } => {
                    assert!(target < PARTIES);
                    assert!(alpha.iter().all(|a| a.abs() <= PI));
                }
            }
        }
    }

    #[test]
    fn embed_matches_kron() {
        let a = rotation_matrix([0.3, -0.1, 0.8]).unwrap();
        let full = embed_local(&a, &[1]);
        assert!(full.max_abs_diff(&kron_all([&CMatrix::identity(2), &a, &CMatrix::identity(2)])) < 1e-15);
        let e = expm_generator(&exchange_generator(), 0.7).unwrap();
        assert!(embed_local(&e, &[0, 1]).max_abs_diff(&kron(&e, &CMatrix::identity(2))) < 1e-15);
        // exchange is symmetric, so (2, 0) must equal (0, 2)
        assert!(embed_local(&e, &[2, 0]).max_abs_diff(&embed_local(&e, &[0, 2])) < 1e-15);
    }

    #[test]
    fn ancilla_relabeling_leaves_marginal_and_spin_fixed() {
        let x = CMatrix::from_fn(2, 2, |i, j| if i != j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
        let rho = DensityMatrix::bloch_angles(0.9, -0.4);
        let u = decoherence_unitary();
        let ops = spin_operators(Spin::HALF);
        for anc in [1, 2] {
            let flip = embed_local(&x, &[anc]);
            let relabeled = &(&flip * &u) * &flip;
            let a = maximally_mixed_ancillas(&rho).conjugate_by(&u);
            let b = maximally_mixed_ancillas(&rho).conjugate_by(&relabeled);
            for party in 0..3 {
                let ma = partial_trace(&a, &DIMS, &[party]).unwrap();
                let mb = partial_trace(&b, &DIMS, &[party]).unwrap();
                assert!(ma.max_abs_diff(&mb) <= 1e-10);
                for k in Axis::ALL {
                    assert!((ops.get(k).expectation(&ma) - ops.get(k).expectation(&mb)).abs() <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn mixed_input_has_nothing_to_extract() {
        let r = run_extraction(&DensityMatrix::maximally_mixed(2), 1024).unwrap();
        assert_eq!(r.target_gains, [[0.0; 3]; 3]);
        assert!(r.marginal_distance().unwrap() < 0.05);
        for p in Axis::ALL {
            for k in Axis::ALL {
                assert!(r.ledger.get(p, k).abs() < 0.05, "{:?}", r.ledger);
            }
        }
    }

    #[test]
    fn spin_up_goes_to_z_battery_and_everything_is_conserved() {
        let rho = DensityMatrix::bloch_angles(0.0, 0.0);
        let r = run_extraction(&rho, 1024).unwrap();
        assert!((r.ledger.get(Axis::Z, Axis::Z) - 0.5).abs() < 0.05, "{:?}", r.ledger);
        assert!(r.off_target_max() < 0.05, "{:?}", r.ledger);
        assert!(r.marginal_distance().unwrap() < 0.05);
        for (k, booked) in r.ledger.total().iter().enumerate() {
            assert!((r.system_delta[k] + booked).abs() <= 1e-8, "component {k}");
        }
    }

    #[test]
    fn ancilla_part_is_configurable() {
        let rho = DensityMatrix::bloch_angles(0.5, 0.5);
        let mut opts = ExtractionOptions::new(32);
        let z = run_extraction_with(&rho, &opts).unwrap();
        opts.ancilla_part = Axis::X;
        let x = run_extraction_with(&rho, &opts).unwrap();
        for k in 0..3 {
            let moved = z.ancilla_delta[k];
            assert!((x.ledger.part(Axis::X)[k] - moved - z.ledger.part(Axis::X)[k]).abs() < 1e-12);
            assert!((z.ledger.part(Axis::Z)[k] - moved - x.ledger.part(Axis::Z)[k]).abs() < 1e-12);
        }
    }
}
