//! Lattice-to-mesh conversion through a compressed arc-loop representation.
//!
//! A lattice (nodal spheres joined by conical struts) is reduced to a
//! *metamesh*: for each strut end, a closed loop of elliptic arcs where the
//! strut meets its neighbors. Metameshes are quantized into 128-bit records,
//! laid out for lane-parallel access, cached, and later triangulated into
//! watertight STL at any chord tolerance.

pub mod codec;
pub mod conic;
pub mod lattice;
pub mod metamesh;
pub mod pipeline;
pub mod soa;
pub mod store;
pub mod triangulate;
pub mod warp;
mod error;

pub use error::{Error, Result};

pub type Vec3 = nalgebra::Vector3<f64>;
