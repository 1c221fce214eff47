//! Explicit error and separation constants for the spin-½ battery protocol,
//! and their generalized-basis counterparts.
//!
//! All step bounds are quadratic in `α/N` and hold once `N ≥ 6α`; the
//! whole-protocol bounds are linear in `1/N` and hold once `N ≥ 36π`.

use core::f64::consts::{E, PI};

const E_MINUS_2: f64 = E - 2.0;

/// Remainder of the first-order expansion of one framed step: `36(e−2)(α/N)²`.
pub fn step_expansion_bound(alpha: f64, iterations: usize) -> f64 {
    36.0 * E_MINUS_2 * ratio_sq(alpha, iterations)
}

/// One framed step against the exact small rotation: `40(e−2)(α/N)²`.
pub fn step_channel_bound(alpha: f64, iterations: usize) -> f64 {
    40.0 * E_MINUS_2 * ratio_sq(alpha, iterations)
}

/// Reference-spin expectation change against its first-order value:
/// `18(e−2)(α/N)²`.
pub fn step_delta_bound(alpha: f64, iterations: usize) -> f64 {
    18.0 * E_MINUS_2 * ratio_sq(alpha, iterations)
}

/// One x/y/z iteration against `exp(−iH/N)`: `(648 + 16(e−2))π²/N²`.
pub fn iteration_bound(iterations: usize) -> f64 {
    let n = iterations as f64;
    (648.0 + 16.0 * E_MINUS_2) * PI * PI / (n * n)
}

/// Whole protocol against `exp(−iH)`: `(648 + 16(e−2))π²/N`.
pub fn total_accuracy_bound(iterations: usize) -> f64 {
    (648.0 + 16.0 * E_MINUS_2) * PI * PI / iterations as f64
}

/// `|Δs_j + ΔS_j^(j)| ≤ 648π²/N`
pub fn diagonal_separation_bound(iterations: usize) -> f64 {
    648.0 * PI * PI / iterations as f64
}

/// `|ΔS_j^(k)| ≤ 324π²/N` for `j ≠ k`
pub fn off_diagonal_separation_bound(iterations: usize) -> f64 {
    324.0 * PI * PI / iterations as f64
}

/// Step bounds are proven for `N ≥ 6α`.
pub fn step_bounds_valid(alpha: f64, iterations: usize) -> bool {
    iterations as f64 >= 6.0 * libm::fabs(alpha)
}

/// Sequence bounds are proven for `N ≥ 36π`.
pub fn sequence_bounds_valid(iterations: usize) -> bool {
    iterations as f64 >= 36.0 * PI
}

fn ratio_sq(alpha: f64, iterations: usize) -> f64 {
    let r = alpha / iterations as f64;
    r * r
}

/// Every bound for one `(α_max, N)` pair.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundSet {
    pub step_channel: f64,
    pub step_delta: f64,
    pub total_accuracy: f64,
    pub diagonal_separation: f64,
    pub off_diagonal_separation: f64,
    /// `N ≥ 6 α_max`
    pub step_valid: bool,
    /// `N ≥ 36π`
    pub sequence_valid: bool,
}

impl BoundSet {
    pub fn new(alpha_max: f64, iterations: usize) -> Self {
        BoundSet {
            step_channel: step_channel_bound(alpha_max, iterations),
            step_delta: step_delta_bound(alpha_max, iterations),
            total_accuracy: total_accuracy_bound(iterations),
            diagonal_separation: diagonal_separation_bound(iterations),
            off_diagonal_separation: off_diagonal_separation_bound(iterations),
            step_valid: step_bounds_valid(alpha_max, iterations),
            sequence_valid: sequence_bounds_valid(iterations),
        }
    }

    /// Named values in a fixed order, for reports.
    pub fn entries(&self) -> [(&'static str, f64); 5] {
        [
            ("step_channel", self.step_channel),
            ("step_delta", self.step_delta),
            ("total_accuracy", self.total_accuracy),
            ("diagonal_separation", self.diagonal_separation),
            ("off_diagonal_separation", self.off_diagonal_separation),
        ]
    }
}

/// Bounds for a rotation vector; `α_max` is the largest component magnitude.
pub fn bounds(alpha: [f64; 3], iterations: usize) -> BoundSet {
    let alpha_max = alpha.iter().fold(0.0f64, |m, a| m.max(libm::fabs(*a)));
    BoundSet::new(alpha_max, iterations)
}

/// Generalized frame, one step against `exp(−i(α/N)O_r)`:
/// `4(e−2)(1 + λ²)(α/N)²` with `λ = K!·‖O_0‖…‖O_D‖/(η_1…η_D)`.
pub fn general_step_bound(lambda: f64, alpha: f64, iterations: usize) -> f64 {
    4.0 * E_MINUS_2 * (1.0 + lambda * lambda) * ratio_sq(alpha, iterations)
}

/// Generalized frame, change of `O_k` on one frame particle against its
/// first-order value: `‖O_k‖(2λ)²(e−2)(α/N)²`.
pub fn general_delta_bound(op_norm: f64, lambda: f64, alpha: f64, iterations: usize) -> f64 {
    op_norm * 4.0 * lambda * lambda * E_MINUS_2 * ratio_sq(alpha, iterations)
}

/// The generalized bounds assume `N > 2λα`.
pub fn general_bounds_valid(lambda: f64, alpha: f64, iterations: usize) -> bool {
    iterations as f64 > 2.0 * lambda * libm::fabs(alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        assert!((step_channel_bound(1.0, 100) - 2.873127e-3).abs() < 1e-8);
        assert!((step_channel_bound(1.0, 50) - 1.1492509e-2).abs() < 1e-8);
        assert!((total_accuracy_bound(1000) - 6.5089).abs() < 1e-3);
        // (648 + 16(e−2))π²/512
        assert!((total_accuracy_bound(512) - 12.7127).abs() < 1e-3);
        assert!((diagonal_separation_bound(1) / off_diagonal_separation_bound(1) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn validity_thresholds() {
        // 36π ≈ 113.097
        assert!(!sequence_bounds_valid(113));
        assert!(sequence_bounds_valid(114));
        assert!(step_bounds_valid(1.0, 6));
        assert!(!step_bounds_valid(1.0, 5));
        let b = bounds([0.3, -3.0, 0.1], 17);
        assert!(!b.step_valid);
        assert_eq!(b.step_channel, step_channel_bound(3.0, 17));
    }

    #[test]
    fn generalized_bounds_reduce_to_spin_half() {
        // K = 3, ‖O‖ = η = 1/2: λ = 3!·(1/2)³/(1/2)² = 3
        let lambda = 3.0;
        assert!((general_step_bound(lambda, 0.7, 40) - step_channel_bound(0.7, 40)).abs() < 1e-18);
        assert!((general_delta_bound(0.5, lambda, 0.7, 40) - step_delta_bound(0.7, 40)).abs() < 1e-18);
    }
}
