//! Physical network systems on directed graphs and k-complexes.
//!
//! The crate builds the linear-algebraic machinery used to model
//! conservation laws and balance equations on networks:
//!
//! - [`graph`]: directed multigraphs, incidence matrices, connectivity,
//!   and exhaustive enumeration of rooted spanning trees.
//! - [`laplacian`]: the three Laplacian flavors (symmetric `DRD^T`,
//!   flow `-DK`, consensus) plus balancedness tests and the Metzler
//!   sink augmentation.
//! - [`kirchhoff`]: constructive Matrix-Tree machinery: cofactor kernel
//!   vectors, the balancing transform `L Σ`, consensus values, and the
//!   skew/symmetric split of a balanced Laplacian.
//! - [`dynamics`]: gradient flows `ẋ = -L ∂H/∂x`, fixed-step RK4
//!   integration, and dissipation/conservation diagnostics.
//! - [`storage`]: available (minimal) storage of passive network systems,
//!   from the quadratic closed form to general strictly convex energies
//!   and resistive-edge systems with a controllability gate.
//! - [`complexes`]: boundary-operator chains for k-complexes and heat
//!   transfer on a 2-complex with an entropy certificate.
//! - [`json`]: the serialization schemas consumed by the command-line
//!   front-end.
//!
//! Vertices are indexed from 0 everywhere in this API; the JSON layer in
//! [`json`] speaks 1-based indices and converts at the boundary.

pub mod complexes;
pub mod dynamics;
mod error;
pub mod graph;
pub mod json;
pub mod kirchhoff;
pub mod laplacian;
pub(crate) mod linalg;
pub mod storage;

pub use error::{Error, Result};
