//! Mean-distance function, Hardy-type lower bounds for Dirichlet eigenvalues
//! and constructive ball extraction on constructive-solid-geometry domains.
//!
//! The pieces:
//!
//! * [`geometry`]: domains, exact exit distances, sphere quadrature.
//! * [`hardy_field`]: the mean distance `δ` and its grid fields.
//! * [`measure`]: ball overlaps and the radius `ρ_θ`.
//! * [`spectral`]: finite-difference Dirichlet Laplacian, eigenvalues and the
//!   inequality checks built on them.
//! * [`packing`]: greedy disjoint ball extraction and its certificates.
//! * [`cli`]: configuration-driven batch runs.

pub mod cli;
pub mod error;
pub mod fmt;
pub mod geometry;
pub mod grid;
pub mod hardy_field;
pub mod measure;
pub mod packing;
pub mod report;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};
pub use geometry::{Domain, SphereRule, UnitDirection};
pub use grid::Grid;
pub use hardy_field::{delta_at, delta_field, DeltaField};
pub use report::{BoundReport, Relation};
