//! Numerical laboratory for sharp quantitative stability of weighted
//! isoperimetric inequalities in planar convex cones.
//!
//! The crate is organised bottom-up:
//!
//! * [`cone`] and [`weight`]: angular sectors, homogeneous weights and the
//!   line / constancy / remainder decomposition of the plane.
//! * [`concave`]: sampled concave 1-homogeneous functions on a cone.
//! * [`geometry`]: star-shaped and rasterised sets with their weighted
//!   volume, perimeter, deficit and asymmetry.
//! * [`envelope`]: restricted conjugates and K-envelopes on slope grids.
//! * [`pde`]: polar triangulations and P1 Neumann solves.
//! * [`coupling`]: the convex coupling pipeline and its measured estimates.
//! * [`analysis`]: the supporting one-dimensional and algebraic lemmas.
//! * [`experiments`]: sweeps and diagnostics built from the above.

pub mod analysis;
pub mod concave;
pub mod cone;
pub mod coupling;
pub mod envelope;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod pde;
pub mod quad;
pub mod vec2;
pub mod weight;

pub use cone::{decompose_subspaces, Cone, Subspaces};
pub use error::{Error, Result};
pub use geometry::{GridSet, MeasureReport, StarSet};
pub use weight::{HomWeight, WeightForm};

/// Crate version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
