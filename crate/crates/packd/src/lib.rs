//! Finite subdivision rules on polygons, circle packings of their subdivision
//! graphs, and measurements of how fast the finite packings stabilize.
//!
//! The crate is organized around a small pipeline:
//!
//! * [`plane_complex`] — finite plane graphs with an explicit face structure;
//! * [`subdivision`] — subdivision rules, validation, and iteration;
//! * [`combinatorics`] — the simple / irreducible / acylindrical predicates,
//!   connecting paths, and the Jordan-face refinement of a rule;
//! * [`geometry`] — circles in inversive coordinates and Möbius maps;
//! * [`packer`] — the tangency-packing solver and Möbius normalization;
//! * [`metrics`] — distances between marked packings, stabilization and
//!   renormalization-contraction experiments, scaling factors;
//! * [`render`] — deterministic SVG output;
//! * [`fixtures`] — the standard example rules used across tests and docs.

pub mod combinatorics;
pub mod fixtures;
pub mod geometry;
pub mod metrics;
pub mod packer;
pub mod plane_complex;
pub mod render;
pub mod subdivision;

pub use geometry::{Circle, MobiusMap};
pub use plane_complex::{PlaneComplex, VertexId};
pub use subdivision::SubdivisionRule;
