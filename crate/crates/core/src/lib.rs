//! Numerics for symmetry-reduced SU(2) gauge theory on ℝ³ × SU(2).

pub mod bohr;
pub mod conn;
pub mod curve;
pub mod hom;
pub mod measure;
pub mod rbar;
pub mod stats;
pub mod su2;
pub mod transport;
pub mod vec3;
pub mod verify;
