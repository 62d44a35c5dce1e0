//! Space-time LATIN-PGD solver for 2D compressible Newtonian laminar flow on
//! Taylor-Hood Q2/Q1 quadrilateral meshes.

pub mod assembly;
pub mod config;
pub mod constitutive;
pub mod driver;
pub mod elements;
pub mod error;
pub mod global_stage;
pub mod local_stage;
pub mod mesh;
pub mod oracles;
pub mod output;

pub use error::{Error, Result};
