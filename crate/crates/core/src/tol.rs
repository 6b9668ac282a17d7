//! Numeric tolerances used by the solvers and the certification checks.
//!
//! Solver tolerances are two orders of magnitude tighter than the
//! certification residuals they have to satisfy, so a certified failure
//! always points at a modeling bug rather than at root-finding slack.

/// Relative width at which the equilibrium-cost bisection stops.
pub const EQUILIBRIUM_BISECTION_REL: f64 = 1e-13;

/// Absolute K-width at which the capped-price auxiliary bisection stops.
pub const AUX_BISECTION_ABS: f64 = 1e-12;

/// Sign threshold for the capped-price optimum-existence test: one-sided
/// derivatives at or below zero (within this band) mean the supremum is not
/// attained and the interior-price branch takes over.
pub const AUX_EXISTENCE_DERIVATIVE: f64 = 1e-10;

/// Residual bound for Wardrop complementarity checks.
pub const WARDROP_RESIDUAL: f64 = 1e-9;

/// Best-response profit gap allowed when certifying an equilibrium.
pub const CERT_PROFIT: f64 = 1e-8;

/// Best-response strategy distance allowed when certifying an equilibrium.
pub const CERT_STRATEGY: f64 = 1e-7;

/// Residual bound for the per-firm KKT identities in the certificate.
pub const CERT_IDENTITY: f64 = 1e-8;

/// Residual bound for the aggregate Gamma-sum identity in the certificate.
pub const CERT_GAMMA_SUM: f64 = 1e-9;

/// Window around the interior/capped branch boundary that gets flagged as
/// numerically ambiguous in the certification report.
pub const BRANCH_BOUNDARY_FLAG: f64 = 1e-10;

/// Agreement required between the subset-enumeration oracle and the solver.
pub const ORACLE_MATCH: f64 = 1e-7;

/// Capacity a firm installs when no best response exists (the supremum is
/// approached but not attained); keeps best-response dynamics total.
pub const DYNAMICS_FALLBACK_CAPACITY: f64 = 1e-3;

/// Default per-round strategy-change threshold for dynamics convergence.
pub const DYNAMICS_CONVERGENCE: f64 = 1e-9;
