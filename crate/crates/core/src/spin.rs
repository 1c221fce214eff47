//! Spin-`s` operators and the rotation-invariant three-body interaction.

use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};
use crate::linalg::{embed, herm_eig, kron_all, spectral_norm, CMatrix, DensityMatrix, HermitianEigen, C64};
use crate::math;

/// Spin quantum number, stored as `2s`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Spin {
    twice: u32,
}

impl Spin {
    pub const HALF: Spin = Spin { twice: 1 };
    pub const ONE: Spin = Spin { twice: 2 };
    pub const THREE_HALVES: Spin = Spin { twice: 3 };

    pub fn from_twice(twice: u32) -> Result<Self> {
        if twice == 0 {
            return Err(Error::InvalidSpin);
        }
        Ok(Spin { twice })
    }

    /// Accepts `s` only when `2s` is a positive integer.
    pub fn new(s: f64) -> Result<Self> {
        let twice = 2.0 * s;
        if twice.is_nan() || twice < 1.0 || twice > u32::MAX as f64 || math::abs(twice - libm::round(twice)) > 1e-12 {
            return Err(Error::InvalidSpin);
        }
        Self::from_twice(libm::round(twice) as u32)
    }

    pub fn twice(self) -> u32 {
        self.twice
    }

    pub fn value(self) -> f64 {
        self.twice as f64 / 2.0
    }

    /// Hilbert-space dimension `2s + 1`.
    pub fn dim(self) -> usize {
        self.twice as usize + 1
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.twice.is_multiple_of(2) {
            write!(f, "{}", self.twice / 2)
        } else {
            write!(f, "{}/2", self.twice)
        }
    }
}

/// Cartesian axis, ordered `x, y, z` ↔ `0, 1, 2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 3] = [Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Axis> {
        Self::ALL.get(i).copied()
    }

    /// Cyclic successor: x → y → z → x.
    pub fn next(self) -> Axis {
        Self::ALL[(self.index() + 1) % 3]
    }

    pub fn label(self) -> char {
        ['x', 'y', 'z'][self.index()]
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Levi-Civita symbol on axis indices.
pub fn levi_civita(j: usize, k: usize, l: usize) -> i8 {
    match (j, k, l) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1,
        _ => 0,
    }
}

/// `(s_x, s_y, s_z)` in the `|s, m⟩` basis with `m` descending, `ħ = 1`.
#[derive(Clone, Debug)]
pub struct SpinOperators {
    spin: Spin,
    ops: [CMatrix; 3],
}

impl SpinOperators {
    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn get(&self, axis: Axis) -> &CMatrix {
        &self.ops[axis.index()]
    }

    pub fn all(&self) -> &[CMatrix; 3] {
        &self.ops
    }

    /// `s(s + 1)`
    pub fn casimir_value(&self) -> f64 {
        let s = self.spin.value();
        s * (s + 1.0)
    }
}

/// Ladder-operator construction of the spin matrices.
pub fn spin_operators(spin: Spin) -> SpinOperators {
    let d = spin.dim();
    let s = spin.value();
    let m = |i: usize| s - i as f64;
    // raising: s+ |m⟩ = sqrt(s(s+1) - m(m+1)) |m+1⟩; index i-1 has m+1
    let mut raise = CMatrix::zeros(d, d);
    for i in 1..d {
        let mi = m(i);
        raise[(i - 1, i)] = C64::new(math::sqrt(s * (s + 1.0) - mi * (mi + 1.0)), 0.0);
    }
    let lower = raise.adjoint();
    let sx = (&raise + &lower).scale_real(0.5);
    let sy = (&raise - &lower).scale(C64::new(0.0, -0.5));
    let sz = CMatrix::from_real_diagonal(&(0..d).map(m).collect::<Vec<_>>());
    SpinOperators { spin, ops: [sx, sy, sz] }
}

/// A reference particle maximally polarized along one axis.
#[derive(Clone, Debug)]
pub struct TauState {
    pub spin: Spin,
    pub axis: Axis,
    pub state: DensityMatrix,
}

/// `τ_axis`: `I/2 + s_axis` for spin ½, otherwise the projector on the
/// top eigenvector of `s_axis`.
pub fn tau_state(spin: Spin, axis: Axis) -> TauState {
    let ops = spin_operators(spin);
    let d = spin.dim();
    let matrix = if spin == Spin::HALF {
        &CMatrix::identity(2).scale_real(0.5) + ops.get(axis)
    } else {
        let eig = herm_eig(ops.get(axis)).expect("spin operators are Hermitian");
        CMatrix::outer(&eig.vectors.column(d - 1))
    };
    TauState { spin, axis, state: DensityMatrix::from_channel_output(matrix) }
}

/// `T = Σ ε_{jkl} s_j ⊗ s'_k ⊗ s''_l`, the scalar triple product of three
/// spins.
pub fn build_t(spin: Spin) -> CMatrix {
    let ops = spin_operators(spin);
    let d = spin.dim();
    let mut t = CMatrix::zeros(d * d * d, d * d * d);
    for j in 0..3 {
        for k in 0..3 {
            for l in 0..3 {
                let eps = levi_civita(j, k, l);
                if eps != 0 {
                    let term = kron_all([&ops.ops[j], &ops.ops[k], &ops.ops[l]]);
                    t.axpy(C64::new(eps as f64, 0.0), &term);
                }
            }
        }
    }
    t
}

/// First-order coupling of the step unitary: `α / (s² N)`, which is `4α/N`
/// for spin ½.
pub fn step_coupling(spin: Spin, alpha: f64, iterations: usize) -> f64 {
    let s = spin.value();
    alpha / (s * s * iterations as f64)
}

/// `T` together with its eigendecomposition, so that step unitaries for many
/// angles cost one diagonalization.
#[derive(Clone, Debug)]
pub struct TripleProduct {
    spin: Spin,
    matrix: CMatrix,
    eigen: HermitianEigen,
}

impl TripleProduct {
    pub fn new(spin: Spin) -> Self {
        let matrix = build_t(spin);
        let eigen = herm_eig(&matrix).expect("T is Hermitian");
        TripleProduct { spin, matrix, eigen }
    }

    pub fn spin(&self) -> Spin {
        self.spin
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn step_unitary(&self, alpha: f64, iterations: usize) -> Result<StepUnitary> {
        if iterations == 0 {
            return Err(Error::ZeroIterations);
        }
        let matrix = if alpha == 0.0 {
            CMatrix::identity(self.matrix.dim())
        } else {
            self.eigen.exp_i(step_coupling(self.spin, alpha, iterations))
        };
        Ok(StepUnitary { spin: self.spin, alpha, iterations, matrix })
    }
}

/// `V_α = exp(-i c T)` on system ⊗ two reference particles.
#[derive(Clone, Debug)]
pub struct StepUnitary {
    pub spin: Spin,
    pub alpha: f64,
    pub iterations: usize,
    pub matrix: CMatrix,
}

pub fn build_v(spin: Spin, alpha: f64, iterations: usize) -> Result<StepUnitary> {
    TripleProduct::new(spin).step_unitary(alpha, iterations)
}

/// One party of a composite system. Uncounted parties contribute an
/// identity factor but no spin.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Party {
    pub spin: Spin,
    pub counted: bool,
}

impl Party {
    pub fn counted(spin: Spin) -> Self {
        Party { spin, counted: true }
    }
}

/// `Σ_parties I ⊗ … ⊗ s_k ⊗ … ⊗ I` over the counted parties.
pub fn total_spin_component(axis: Axis, parties: &[Party]) -> Result<CMatrix> {
    if parties.is_empty() {
        return Err(Error::BadFactorization);
    }
    let dims: Vec<usize> = parties.iter().map(|p| p.spin.dim()).collect();
    let total: usize = dims.iter().product();
    let mut sum = CMatrix::zeros(total, total);
    for (slot, party) in parties.iter().enumerate() {
        if party.counted {
            let op = spin_operators(party.spin);
            sum = &sum + &embed(op.get(axis), &dims, slot)?;
        }
    }
    Ok(sum)
}

/// `‖[V, S_k]‖` with `S_k` the total spin of the three parties `V` acts on.
pub fn conservation_residual(v: &StepUnitary, axis: Axis) -> Result<f64> {
    let d = v.spin.dim();
    if v.matrix.dim() != d * d * d {
        return Err(Error::DimensionMismatch { expected: d * d * d, found: v.matrix.dim() });
    }
    let s_tot = total_spin_component(axis, &[Party::counted(v.spin); 3])?;
    spectral_norm(&v.matrix.commutator(&s_tot))
}
