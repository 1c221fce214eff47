//! Exact simulation of a spin reference frame that implements arbitrary
//! rotations while routing every change of a non-commuting conserved quantity
//! (`S_x`, `S_y`, `S_z`, or a full Pauli-string basis) into its own battery.
//!
//! The crate is `no_std` and only needs `alloc`. All matrices are small and
//! dense; the protocol is simulated as a sequence of channels on the system,
//! one fresh pair of reference spins per step, which is exact because every
//! reference pair interacts once and is never touched again.
//!
//! Module map:
//!
//! - [`linalg`]: dense complex matrices, partial traces, Hermitian
//!   eigendecomposition, unitary exponentials and norms.
//! - [`spin`]: spin-`s` operators, polarized reference states, the three-body
//!   scalar `s·(s'×s'')` and the step unitary built from it.
//! - [`frame`]: the battery protocol itself (axis steps, iterations, ledgers).
//! - [`bounds`]: the explicit error and separation constants.
//! - [`extraction`]: moving the full spin vector of an unknown qubit into
//!   three batteries with a compiled decoherence circuit.
//! - [`basis`]: operator bases with the traceless / orthogonal / closed
//!   properties and the generalized frame built on them.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod basis;
pub mod bounds;
pub mod error;
pub mod extraction;
pub mod frame;
pub mod linalg;
mod math;
pub mod spin;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{CMatrix, DensityMatrix, C64};
pub use spin::{Axis, Spin};
