//! Hardy-space decomposition of spherical vector fields and their
//! approximation by multiscale dictionaries.

pub mod cubature;
pub mod error;
pub mod hardy_dict;
pub mod harmonics;
pub mod kernels;
pub mod linalg;
pub mod multiscale_interp;
pub mod potentials;
pub mod sphere_geom;

pub use error::{Error, Result};
