//! Points of the closed unit disc in polar coordinates.

use core::f64::consts::TAU;

use crate::error::{Error, Result};

/// Reduce an angle into `[0, 2π)`.
pub fn wrap_angle(theta: f64) -> f64 {
    let r = libm::fmod(theta, TAU);
    let w = if r < 0.0 { r + TAU } else { r };
    // the shift can round up to exactly TAU for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

/// Shortest angular distance between two angles, in `[0, π]`.
pub fn angle_distance(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    d.min(TAU - d)
}

/// A point `(r, θ)` of the closed unit disc with `θ ∈ [0, 2π)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolarPoint {
    pub r: f64,
    pub theta: f64,
}

impl PolarPoint {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) || !theta.is_finite() {
            return Err(Error::Domain("polar point requires 0 <= r <= 1 and a finite angle"));
        }
        Ok(Self {
            r,
            theta: wrap_angle(theta),
        })
    }

    pub fn to_cartesian(self) -> (f64, f64) {
        (self.r * libm::cos(self.theta), self.r * libm::sin(self.theta))
    }
}

/// Location of the unit Dirac source.
///
/// `r = 0` is accepted so the spectral engine can be evaluated for a centred
/// source; the FEM loads and the inversion reject it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourcePoint {
    pub r: f64,
    pub theta: f64,
}

impl SourcePoint {
    pub fn new(r: f64, theta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&r) || !theta.is_finite() {
            return Err(Error::Domain("source requires 0 <= r < 1 and a finite angle"));
        }
        Ok(Self {
            r,
            theta: wrap_angle(theta),
        })
    }

    /// Same source rotated by `delta` radians.
    pub fn rotated(self, delta: f64) -> Self {
        Self {
            r: self.r,
            theta: wrap_angle(self.theta + delta),
        }
    }

    pub fn as_polar(self) -> PolarPoint {
        PolarPoint {
            r: self.r,
            theta: self.theta,
        }
    }
}
