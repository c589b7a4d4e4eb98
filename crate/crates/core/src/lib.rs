//! Metric deformations of a complex-hyperbolic background inside a Fermi tube
//! around a closed geodesic, with numerical checks on the deformed geodesic flow.

// index loops mirror the tensor notation
#![allow(clippy::needless_range_loop)]

pub mod curvature_scan;
pub mod deformation;
pub mod error;
pub mod flow;
pub mod hyperbolicity;
pub mod model;
pub mod sampling;
pub mod suite;
pub mod tensor;

pub use error::{GeometryError, Result};
