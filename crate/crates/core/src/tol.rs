//! Numerical tolerances shared across modules.

/// Trigonometric identities in double precision (normalization, trace, idempotence).
pub const TRIG: f64 = 1e-12;

/// Stopping rule of the Jacobi eigensolver: off-diagonal Frobenius norm.
pub const JACOBI_OFF_DIAG: f64 = 1e-12;

/// Maximum number of cyclic Jacobi sweeps before reporting non-convergence.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Sum-of-eigenvalues versus trace check.
pub const EIGEN_TRACE: f64 = 1e-10;

/// Two DP candidate values closer than this are treated as tied.
pub const DP_TIE: f64 = 1e-12;

/// Default consensus tolerance on pairwise fidelity squared.
pub const DEFAULT_EPS: f64 = 1e-9;

/// Default value-iteration stopping threshold (sup-norm change).
pub const DEFAULT_VI_TOL: f64 = 1e-10;

/// Default value-iteration iteration cap.
pub const DEFAULT_VI_MAX_ITERS: usize = 100_000;

/// Default DP operation budget.
pub const DEFAULT_BUDGET: u128 = 1_000_000_000;

/// Relative slack on the exponential convergence bound.
pub const RATE_BOUND_SLACK: f64 = 1e-9;
