//! Analysis toolkit for Runge-Kutta methods applied to stiff semilinear ODEs
//! `y' = J y + g(y) + r(t)` with a dissipative linear part `J`.
//!
//! The crate answers, for a given Butcher tableau, the questions that decide
//! whether the method suffers stiff order reduction on semilinear problems:
//!
//! * [`tableau`] — tableau parsing, a small catalog of classic methods,
//!   B/C simplifying-assumption residuals, stage and classical order;
//! * [`trees`] — rooted-tree combinatorics: enumeration in a standardized
//!   form, semi-lone-child-avoiding detection, vertex suppression, and the
//!   rational weights of the tree-indexed error expansion;
//! * [`conditions`] — the semilinear order conditions: per-tree vector
//!   spaces `V_tau`, orthogonality residuals, `p_SL`, and weak stage order;
//! * [`stability`] — stability function `R(z)`, A/AS/ASI-stability
//!   verdicts, the superconvergence condition on `R`, logarithmic norms;
//! * [`problems`] — built-in semilinear test problems with manufactured
//!   exact solutions and analytic derivatives;
//! * [`lte`] — local truncation error series: the direct coefficient
//!   recursion, its tree-structured equivalent, and defect vectors;
//! * [`solver`] — DIRK / fully implicit / explicit steppers with simplified
//!   Newton iterations, plus difference-propagation probes;
//! * [`harness`] — convergence studies over `(h, lambda)` grids with
//!   observed-order fits and stiffness-uniformity diagnostics.
//!
//! Tableaux with rational entries are analyzed in exact arithmetic; float
//! tableaux (Gauss nodes and friends) use residual tolerances. See
//! [`defaults`] for the tolerances shared by the CLI and library.

pub mod conditions;
pub mod harness;
pub mod linalg;
pub mod lte;
pub mod problems;
pub mod scalar;
pub mod solver;
pub mod stability;
pub mod tableau;
pub mod trees;

/// Default tolerances and grids shared by the library, CLI, and demo.
///
/// Everything here can be overridden per call; nothing reads environment
/// variables.
pub mod defaults {
    /// Residual magnitude below which a float-mode condition counts as zero.
    pub const TOL: f64 = 1e-10;
    /// Largest tree order examined by the semilinear order checker.
    pub const MAX_ORDER: usize = 5;
    /// Hard cap on the tree order the checker accepts.
    pub const MAX_ORDER_CAP: usize = 6;
    /// Stage-order and weak-stage-order probes stop here.
    pub const ORDER_PROBE_CAP: usize = 10;
    /// Classical order conditions are implemented through this order.
    pub const CLASSICAL_ORDER_CAP: usize = 5;
    /// Number of boundary samples used by the stability checkers.
    pub const BOUNDARY_SAMPLES: usize = 4096;
    /// Exponent range of the default step-size grid `2^-3 .. 2^-12`.
    pub const H_GRID_EXPONENTS: (u32, u32) = (3, 12);
    /// Default integration interval for convergence studies.
    pub const TIME_INTERVAL: (f64, f64) = (0.0, 1.0);
}

pub use scalar::{Mode, Scalar};
pub use tableau::ButcherTableau;
pub use trees::RootedTree;
