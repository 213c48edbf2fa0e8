//! Recovery of a Dirac point source in the heat equation on the unit disc
//! from sparse boundary-flux measurements.
//!
//! Two independent forward engines compute the boundary flux `∂u/∂n(z, t)`:
//! a Bessel eigenfunction series ([`spectral`]) and a bilinear finite element
//! method in polar coordinates with backward Euler time stepping ([`fem`]).
//! [`inversion`] recovers the source location by gradient descent on
//! least-squares misfits of the flux data.
//!
//! The crate is `no_std` (with `alloc`); disable the default `std` feature
//! to build it for targets without an operating system.
#![cfg_attr(not(feature = "std"), no_std)]
// `!(x > 0.0)` is deliberate: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod admissibility;
pub mod bessel;
pub mod error;
pub mod fem;
pub mod inversion;
pub mod linalg;
pub mod mesh;
pub mod point;
pub mod spectral;

pub use error::{Error, Result};
pub use point::{angle_distance, wrap_angle, PolarPoint, SourcePoint};
