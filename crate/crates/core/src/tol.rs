//! Centralized tolerance constants.
//!
//! Geometric identities that are exact in exact arithmetic get 1e-10;
//! quantities produced by adaptive integration get looser defaults.
//! Every operation taking a tolerance accepts an override; these are the
//! defaults used when none is given.

/// Exact algebraic identities evaluated in f64 (double cover, Hermitian
/// round trips, telescoping products).
pub const GEOMETRIC: f64 = 1e-10;

/// Unitarity / determinant checks on SU(2) lifts.
pub const LIFT: f64 = 1e-12;

/// Unit-vector preconditions.
pub const UNIT_VECTOR: f64 = 1e-10;

/// Adaptive ODE transport: relative tolerance.
pub const TRANSPORT_RTOL: f64 = 1e-10;

/// Adaptive ODE transport: absolute floor.
pub const TRANSPORT_ATOL: f64 = 1e-13;

/// Immersion quadrature (per mesh edge, absolute).
pub const IMMERSION_QUAD: f64 = 1e-10;

/// Edge-length quadrature: relative agreement required when doubling
/// the node count.
pub const EDGE_QUAD_REL: f64 = 1e-8;

/// Riemann–Hilbert generator mismatch target.
pub const RH_MISMATCH: f64 = 1e-8;

/// Frobenius log-obstruction threshold for apparent singularities.
pub const LOG_OBSTRUCTION: f64 = 1e-9;

/// Schlesinger flow relative tolerance.
pub const FLOW_RTOL: f64 = 1e-10;

/// Minimal clearance from the diagonal t_i = t_j, relative to scale,
/// before the flow aborts off the real locus.
pub const DIAGONAL_CLEARANCE: f64 = 1e-6;

/// Frobenius recursion default order.
pub const FROBENIUS_ORDER: usize = 30;
