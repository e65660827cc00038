//! Minimal surfaces with polygonal boundary, computed through the
//! monodromy of 2×2 Fuchsian systems.
//!
//! The pipeline: oriented edge directions fix a monodromy representation
//! built from half-turn lifts in SU(2); a numerical Riemann–Hilbert solve
//! produces a Fuchsian system with that monodromy; the Schlesinger system
//! moves the singularities isomonodromically; a distinguished fundamental
//! solution yields Weierstrass data whose immersion is a minimal disk
//! bounded by straight segments in the prescribed directions; edge-length
//! ratios are then driven to a requested target by root finding.
//!
//! Modules:
//! - [`spin3`]: complex 2×2 matrices, the SU(2)→SO(3) double cover,
//!   half-turn lifts, vector ↔ Hermitian-matrix identification.
//! - [`weierstrass`]: evaluable Weierstrass pairs, immersion into meshes,
//!   Hopf differential, metric, Gauss map, conjugate/associated family.
//! - [`fuchs`]: Fuchsian equations and systems, Frobenius series, apparent
//!   singularities, the equation↔system dictionary, accessory parameters.
//! - [`monodromy`]: analytic continuation, loop generators, the target
//!   representation from directions, reality conditions, the RH solver.
//! - [`schlesinger`]: the isomonodromic flow, conservation diagnostics,
//!   pseudo-shock limits and the Picard-iteration oracle.
//! - [`plateau`]: direction validation, edge lengths, the length-ratio
//!   map and the end-to-end solver.

pub mod error;
pub mod fuchs;
pub mod monodromy;
pub mod plateau;
pub mod quad;
pub mod rk;
pub mod schlesinger;
pub mod spin3;
pub mod tol;
pub mod weierstrass;

pub use error::Error;
pub use fuchs::{FuchsianEquation, FuchsianSystem, RiemannScheme};
pub use monodromy::MonodromyRep;
pub use plateau::{DirectionSet, LengthRatioReport, Polygon3};
pub use schlesinger::{PseudoShockLimit, SchlesingerTrajectory};
pub use spin3::{Mat2, RotationLift, Vec3, C};
pub use weierstrass::{SurfaceMesh, WeierstrassData};

/// Library result type.
pub type Result<T> = std::result::Result<T, Error>;
