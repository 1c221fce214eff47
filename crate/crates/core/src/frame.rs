//! The battery-separating reference frame.
//!
//! A rotation about axis `a` by `α/N` is produced by coupling the system to
//! two fresh reference particles polarized along the other two axes through
//! `V_α = exp(-i c T)`. Each reference particle then changes only one spin
//! component to first order, which fixes the battery it belongs to:
//!
//! | axis | ref 1 | ref 2 | ref 1 stores | ref 2 stores |
//! |------|-------|-------|--------------|--------------|
//! | x    | τ_y   | τ_z   | z            | y            |
//! | y    | τ_z   | τ_x   | x            | z            |
//! | z    | τ_x   | τ_y   | y            | x            |
//!
//! One iteration performs the x, y and z steps in that order; the protocol
//! repeats it `N` times with new reference particles every time. Because no
//! reference particle is reused, the system state after each step is exactly
//! the output of a channel on the system alone, so the simulation never has
//! to hold the `6N`-particle frame.

use alloc::vec::Vec;

use crate::bounds::{bounds, BoundSet};
use crate::error::{Error, Result};
use crate::linalg::{
    conjugate_local, expm_generator, kron, partial_trace, trace_norm, CMatrix, DensityMatrix, C64,
};
use crate::math;
use crate::spin::{spin_operators, tau_state, Axis, Spin, SpinOperators, StepUnitary, TripleProduct};

pub type Vec3 = [f64; 3];

/// Accumulated expectation changes, indexed by battery part then spin
/// component.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BatteryLedger {
    parts: [Vec3; 3],
}

impl BatteryLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, part: Axis, delta: Vec3) {
        for (acc, d) in self.parts[part.index()].iter_mut().zip(delta) {
            *acc += d;
        }
    }

    /// `ΔS_component^(part)`
    pub fn get(&self, part: Axis, component: Axis) -> f64 {
        self.parts[part.index()][component.index()]
    }

    pub fn part(&self, part: Axis) -> Vec3 {
        self.parts[part.index()]
    }

    pub fn parts(&self) -> &[Vec3; 3] {
        &self.parts
    }

    /// Sum over all parts.
    pub fn total(&self) -> Vec3 {
        let mut t = [0.0; 3];
        for p in &self.parts {
            for k in 0..3 {
                t[k] += p[k];
            }
        }
        t
    }

    /// Overwrites one entry; for harness self-checks.
    pub fn set(&mut self, part: Axis, component: Axis, value: f64) {
        self.parts[part.index()][component.index()] = value;
    }
}

/// Reference pair used for a rotation about `axis`: polarization axes and
/// the battery part each member belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairLayout {
    pub polarizations: (Axis, Axis),
    pub parts: (Axis, Axis),
}

pub fn pair_layout(axis: Axis) -> PairLayout {
    let (b, c) = (axis.next(), axis.next().next());
    PairLayout { polarizations: (b, c), parts: (c, b) }
}

#[derive(Clone, Debug)]
pub struct StepResult {
    pub rho_out: DensityMatrix,
    pub delta_ref1: Vec3,
    pub delta_ref2: Vec3,
    pub part_ref1: Axis,
    pub part_ref2: Axis,
}

/// Step unitaries and reference states for one rotation vector, reusable
/// across iterations.
#[derive(Clone, Debug)]
pub struct FramedRotation {
    spin: Spin,
    iterations: usize,
    alpha: Vec3,
    ops: SpinOperators,
    taus: [DensityMatrix; 3],
    steps: [Option<StepUnitary>; 3],
}

/// Result of one framed step on a register.
#[derive(Clone, Debug)]
pub struct RegisterStep {
    pub register: CMatrix,
    pub delta_ref1: Vec3,
    pub delta_ref2: Vec3,
    pub layout: PairLayout,
}

impl FramedRotation {
    pub fn new(spin: Spin, alpha: Vec3, iterations: usize) -> Result<Self> {
        if iterations == 0 {
            return Err(Error::ZeroIterations);
        }
        let triple = TripleProduct::new(spin);
        let mut steps: [Option<StepUnitary>; 3] = [None, None, None];
        for axis in Axis::ALL {
            let a = alpha[axis.index()];
            if a != 0.0 {
                steps[axis.index()] = Some(triple.step_unitary(a, iterations)?);
            }
        }
        Ok(FramedRotation {
            spin,
            iterations,
            alpha,
            ops: spin_operators(spin),
            taus: Axis::ALL.map(|a| tau_state(spin, a).state),
            steps,
        })
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn alpha(&self) -> Vec3 {
        self.alpha
    }

    pub fn operators(&self) -> &SpinOperators {
        &self.ops
    }

    /// Axes with a nonzero angle, in x, y, z order.
    pub fn active_axes(&self) -> impl Iterator<Item = Axis> + '_ {
        Axis::ALL.into_iter().filter(|a| self.steps[a.index()].is_some())
    }

    /// Applies the step for `axis` to party `target` of a register with the
    /// given factor dimensions. Returns `None` for an axis with zero angle.
    pub fn step_on(&self, register: &CMatrix, dims: &[usize], target: usize, axis: Axis) -> Result<Option<RegisterStep>> {
        let Some(v) = &self.steps[axis.index()] else {
            return Ok(None);
        };
        let d = self.spin.dim();
        if target >= dims.len() || dims[target] != d {
            return Err(Error::DimensionMismatch { expected: d, found: dims.get(target).copied().unwrap_or(0) });
        }
        let layout = pair_layout(axis);
        let tau1 = &self.taus[layout.polarizations.0.index()];
        let tau2 = &self.taus[layout.polarizations.1.index()];

        let n = dims.len();
        let mut full_dims = Vec::with_capacity(n + 2);
        full_dims.extend_from_slice(dims);
        full_dims.extend([d, d]);
        let joint = kron(register, &kron(tau1.matrix(), tau2.matrix()));
        let evolved = conjugate_local(&joint, &full_dims, &[target, n, n + 1], &v.matrix)?;

        let keep: Vec<usize> = (0..n).collect();
        let register_out = partial_trace(&evolved, &full_dims, &keep)?.hermitian_part();
        let ref1 = partial_trace(&evolved, &full_dims, &[n])?;
        let ref2 = partial_trace(&evolved, &full_dims, &[n + 1])?;
        Ok(Some(RegisterStep {
            register: register_out,
            delta_ref1: self.spin_change(&ref1, tau1),
            delta_ref2: self.spin_change(&ref2, tau2),
            layout,
        }))
    }

    fn spin_change(&self, after: &CMatrix, before: &DensityMatrix) -> Vec3 {
        Axis::ALL.map(|k| {
            let op = self.ops.get(k);
            op.expectation(after) - before.expectation(op)
        })
    }

    /// One iteration (x, then y, then z) on a single system.
    pub fn iterate(&self, rho: &DensityMatrix) -> Result<(DensityMatrix, Vec<StepResult>)> {
        let dims = [rho.dim()];
        let mut current = rho.matrix().clone();
        let mut results = Vec::with_capacity(3);
        for axis in Axis::ALL {
            if let Some(step) = self.step_on(&current, &dims, 0, axis)? {
                current = step.register;
                results.push(StepResult {
                    rho_out: DensityMatrix::from_channel_output(current.clone()),
                    delta_ref1: step.delta_ref1,
                    delta_ref2: step.delta_ref2,
                    part_ref1: step.layout.parts.0,
                    part_ref2: step.layout.parts.1,
                });
            }
        }
        Ok((DensityMatrix::from_channel_output(current), results))
    }

    /// `N` iterations on party `target` of a register; every reference
    /// change is added to `ledger`.
    pub fn run_on(&self, register: &CMatrix, dims: &[usize], target: usize, ledger: &mut BatteryLedger) -> Result<CMatrix> {
        let mut current = register.clone();
        for _ in 0..self.iterations {
            for axis in Axis::ALL {
                if let Some(step) = self.step_on(&current, dims, target, axis)? {
                    ledger.record(step.layout.parts.0, step.delta_ref1);
                    ledger.record(step.layout.parts.1, step.delta_ref2);
                    current = step.register;
                }
            }
        }
        Ok(current)
    }
}

fn check_system(rho: &DensityMatrix, spin: Spin) -> Result<()> {
    if rho.dim() != spin.dim() {
        return Err(Error::DimensionMismatch { expected: spin.dim(), found: rho.dim() });
    }
    Ok(())
}

/// One framed small rotation of `rho` about `axis` by `α/N`.
pub fn axis_step(rho: &DensityMatrix, axis: Axis, alpha: f64, iterations: usize, spin: Spin) -> Result<StepResult> {
    check_system(rho, spin)?;
    let mut angles = [0.0; 3];
    angles[axis.index()] = alpha;
    let rotation = FramedRotation::new(spin, angles, iterations)?;
    let layout = pair_layout(axis);
    match rotation.step_on(rho.matrix(), &[rho.dim()], 0, axis)? {
        Some(step) => Ok(StepResult {
            rho_out: DensityMatrix::from_channel_output(step.register),
            delta_ref1: step.delta_ref1,
            delta_ref2: step.delta_ref2,
            part_ref1: layout.parts.0,
            part_ref2: layout.parts.1,
        }),
        None => Ok(StepResult {
            rho_out: rho.clone(),
            delta_ref1: [0.0; 3],
            delta_ref2: [0.0; 3],
            part_ref1: layout.parts.0,
            part_ref2: layout.parts.1,
        }),
    }
}

/// `‖step(ρ) − U ρ U†‖₁` with `U = exp(−i(α/N) s_axis)`.
pub fn step_error(rho: &DensityMatrix, axis: Axis, alpha: f64, iterations: usize, spin: Spin) -> Result<f64> {
    let out = axis_step(rho, axis, alpha, iterations, spin)?;
    let u = expm_generator(spin_operators(spin).get(axis), alpha / iterations as f64)?;
    out.rho_out.trace_distance(&rho.evolve(&u)?)
}

/// One x/y/z iteration; steps with zero angle are skipped.
pub fn general_step(rho: &DensityMatrix, alpha: Vec3, iterations: usize, spin: Spin) -> Result<(DensityMatrix, Vec<StepResult>)> {
    check_system(rho, spin)?;
    FramedRotation::new(spin, alpha, iterations)?.iterate(rho)
}

/// `H = Σ α_k s_k`
pub fn rotation_generator(spin: Spin, alpha: Vec3) -> CMatrix {
    let ops = spin_operators(spin);
    let d = spin.dim();
    let mut h = CMatrix::zeros(d, d);
    for axis in Axis::ALL {
        h.axpy(C64::new(alpha[axis.index()], 0.0), ops.get(axis));
    }
    h
}

#[derive(Clone, Debug)]
pub struct ProtocolConfig {
    pub spin: Spin,
    pub iterations: usize,
    pub alpha: Vec3,
    pub initial_state: DensityMatrix,
}

impl ProtocolConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::ZeroIterations);
        }
        if let Some(&value) = self.alpha.iter().find(|a| a.is_nan() || math::abs(**a) > core::f64::consts::PI) {
            return Err(Error::AngleOutOfRange { value });
        }
        check_system(&self.initial_state, self.spin)
    }

    pub fn alpha_max(&self) -> f64 {
        self.alpha.iter().fold(0.0f64, |m, a| m.max(math::abs(*a)))
    }
}

/// Measured separation quantities of one run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Separation {
    /// `|Δs_j + ΔS_j^(j)|`
    pub diagonal: Vec3,
    /// `off[j][k] = |ΔS_j^(k)|`; diagonal entries are zero.
    pub off: [Vec3; 3],
}

impl Separation {
    pub fn measure(system_delta: Vec3, ledger: &BatteryLedger) -> Self {
        let mut diagonal = [0.0; 3];
        let mut off = [[0.0; 3]; 3];
        for j in Axis::ALL {
            diagonal[j.index()] = math::abs(system_delta[j.index()] + ledger.get(j, j));
            for k in Axis::ALL {
                if j != k {
                    off[j.index()][k.index()] = math::abs(ledger.get(k, j));
                }
            }
        }
        Separation { diagonal, off }
    }

    pub fn max_off(&self) -> f64 {
        self.off.iter().flatten().fold(0.0, |m, v| m.max(*v))
    }

    pub fn max_diagonal(&self) -> f64 {
        self.diagonal.iter().fold(0.0, |m, v| m.max(*v))
    }
}

/// Pass/fail flags; each is `measured ≤ bound`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub accuracy: bool,
    pub diagonal: [bool; 3],
    /// `off[j][k]` for `j ≠ k`; diagonal entries are `true`.
    pub off: [[bool; 3]; 3],
}

impl Verdict {
    pub fn all(&self) -> bool {
        self.accuracy && self.diagonal.iter().all(|b| *b) && self.off.iter().flatten().all(|b| *b)
    }

    /// `accuracy`, `sep_xx`…, `off_xy`… in a fixed order.
    pub fn entries(&self) -> Vec<(alloc::string::String, bool)> {
        use alloc::format;
        let mut out = Vec::with_capacity(10);
        out.push(("accuracy".into(), self.accuracy));
        for j in Axis::ALL {
            out.push((format!("sep_{j}{j}"), self.diagonal[j.index()]));
        }
        for j in Axis::ALL {
            for k in Axis::ALL {
                if j != k {
                    out.push((format!("off_{j}{k}"), self.off[j.index()][k.index()]));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct ProtocolResult {
    pub rho_final: DensityMatrix,
    pub ledger: BatteryLedger,
    /// `⟨s⟩_final − ⟨s⟩_initial`
    pub system_delta: Vec3,
    /// `‖ρ_final − U_S ρ U_S†‖₁` with `U_S = exp(−iH)`.
    pub error_trace_norm: f64,
    pub separation: Separation,
    pub bounds: BoundSet,
    pub passes: Verdict,
}

pub fn run_protocol(config: &ProtocolConfig) -> Result<ProtocolResult> {
    config.validate()?;
    let rotation = FramedRotation::new(config.spin, config.alpha, config.iterations)?;
    let rho0 = &config.initial_state;
    let mut ledger = BatteryLedger::new();
    let final_matrix = rotation.run_on(rho0.matrix(), &[rho0.dim()], 0, &mut ledger)?;
    let rho_final = DensityMatrix::from_channel_output(final_matrix);

    let ops = rotation.operators();
    let system_delta = Axis::ALL.map(|k| rho_final.expectation(ops.get(k)) - rho0.expectation(ops.get(k)));
    let target = rho0.evolve(&expm_generator(&rotation_generator(config.spin, config.alpha), 1.0)?)?;
    let error_trace_norm = trace_norm(&(rho_final.matrix() - target.matrix()))?;

    let bound_set = bounds(config.alpha, config.iterations);
    let separation = Separation::measure(system_delta, &ledger);
    let mut result = ProtocolResult {
        rho_final,
        ledger,
        system_delta,
        error_trace_norm,
        separation,
        bounds: bound_set,
        passes: Verdict { accuracy: true, diagonal: [true; 3], off: [[true; 3]; 3] },
    };
    result.passes = verify(&result, config.iterations);
    Ok(result)
}

/// Checks accuracy and both separation bounds at `N` iterations.
pub fn verify(result: &ProtocolResult, iterations: usize) -> Verdict {
    let b = bounds([0.0; 3], iterations);
    let sep = Separation::measure(result.system_delta, &result.ledger);
    let off = core::array::from_fn(|j| {
        core::array::from_fn(|k| j == k || sep.off[j][k] <= b.off_diagonal_separation)
    });
    Verdict {
        accuracy: result.error_trace_norm <= b.total_accuracy,
        diagonal: sep.diagonal.map(|v| v <= b.diagonal_separation),
        off,
    }
}

/// Rotation vector `α` with `exp(−i Σ α_k s_k) = U` up to global phase,
/// `|α| ≤ π`.
pub fn generator_from_unitary(u: &CMatrix) -> Result<Vec3> {
    if u.rows() != 2 || !u.is_square() {
        return Err(Error::DimensionMismatch { expected: 2, found: u.rows() });
    }
    let defect = u.unitary_defect();
    if defect > crate::linalg::DECOMP_TOL {
        return Err(Error::NotUnitary { defect });
    }
    // W = U / sqrt(det U) ∈ SU(2), W = a0 I − i a·σ
    let det = u[(0, 0)] * u[(1, 1)] - u[(0, 1)] * u[(1, 0)];
    let root = det.sqrt();
    let w = u.scale(root.inv());
    let a0 = 0.5 * (w[(0, 0)] + w[(1, 1)]).re;
    // a·σ coefficients from W = a0 I − i(a_x σ_x + a_y σ_y + a_z σ_z)
    let mut a = [
        -0.5 * (w[(0, 1)] + w[(1, 0)]).im,
        -0.5 * (w[(0, 1)] - w[(1, 0)]).re,
        -0.5 * (w[(0, 0)] - w[(1, 1)]).im,
    ];
    let mut a0 = a0;
    // −W is the same rotation up to phase; pick the branch with angle ≤ π,
    // breaking the a0 = 0 tie towards a positive leading component.
    let leading = a.iter().copied().find(|v| math::abs(*v) > 1e-12).unwrap_or(0.0);
    if a0 < -1e-15 || (math::abs(a0) <= 1e-15 && leading < 0.0) {
        a0 = -a0;
        a = a.map(|v| -v);
    }
    let sin_half = math::sqrt(a.iter().map(|v| v * v).sum::<f64>());
    if sin_half < 1e-300 {
        return Ok([0.0; 3]);
    }
    let angle = 2.0 * math::atan2(sin_half, a0.clamp(-1.0, 1.0));
    Ok(a.map(|v| angle * v / sin_half))
}
