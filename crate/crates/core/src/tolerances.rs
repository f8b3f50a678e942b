//! Numerical tolerances shared by the library and its tests.
//!
//! Every threshold that decides a branch in the algorithms, or that a test
//! asserts against, lives here so both sides agree on the same numbers.

/// Maximum entry of `|SᵀS − I|` accepted for a basis matrix.
pub const ORTHONORMALITY: f64 = 1e-10;

/// A Krylov direction whose norm after reorthogonalization falls below this
/// fraction of `‖R q_j‖` is treated as linearly dependent; the basis is
/// truncated there.
pub const KRYLOV_BREAKDOWN_REL: f64 = 1e-10;

/// Default degeneracy threshold for `‖p‖`, relative to the scale of the
/// estimates (see [`krylov_p_tol`]).
pub const KRYLOV_P_REL: f64 = 1e-10;

/// Quadratic forms more negative than this reject a matrix as non-PSD.
pub const PSD_NEGATIVE_SLACK: f64 = 1e-12;

/// `‖f̃‖` below this multiple of `sqrt(Σℓ)` is treated as exact cancellation
/// of the parallel directions; the step is skipped and counted.
pub const CANCELLATION_REL: f64 = 1e-14;

/// Tolerance for a vector being a fixed point of `S_kᵀS_{k+1}`: singular
/// values of `S_kᵀS_{k+1} − I` at or below this are treated as zero.
pub const FIXED_POINT_EIG: f64 = 1e-8;

/// Stopping criterion and certification tolerance of the alternating
/// projection oracles.
pub const ALT_PROJ: f64 = 1e-10;

/// Iteration cap of the alternating projection oracles.
pub const ALT_PROJ_MAX_ITERS: usize = 20_000;

/// Monotone approximation: admissible increase of the distance to a
/// certified feasible point.
pub const MONOTONE_SLACK: f64 = 1e-10;

/// Identity checks that are exact up to rounding of a handful of flops.
pub const EXACT: f64 = 1e-12;

/// Attracting-nonexpansive identity `‖x − Φx‖² = ‖x − f‖² − ‖Φx − f‖²`.
pub const ATTRACTING_IDENTITY: f64 = 1e-9;

/// Absolute threshold on `‖p‖` for a Krylov build from estimates whose
/// autocorrelation has the given scale (trace or lag-0 value).
pub fn krylov_p_tol(scale: f64) -> f64 {
    KRYLOV_P_REL * scale.abs().max(f64::MIN_POSITIVE)
}
