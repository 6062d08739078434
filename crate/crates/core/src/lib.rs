//! Gauged lowest-order finite element solvers for the curl-div system on
//! tetrahedral meshes.
//!
//! Two formulations are provided. With tangential boundary data the unknown
//! lives in the divergence-free Raviart-Thomas space and is parametrized by
//! the curls of tree-cotree gauged edge fields; with normal boundary data it
//! lives in the curl-free Nedelec space and is parametrized by gradients of
//! nodal functions. Both reduce to a symmetric positive definite system.

pub mod exact;
pub mod gauge;
pub mod io;
pub mod lift;
pub mod mesh;
pub mod quadrature;
pub mod solver;
pub mod sparse;
pub mod topology;
pub mod whitney;

pub type Point3 = nalgebra::Point3<f64>;
pub type Vec3 = nalgebra::Vector3<f64>;

pub use mesh::{build_mesh, derive_incidence, extract_boundary, Mesh, MeshError};
pub use topology::Topology;
pub use whitney::{FEFunction, Space};
