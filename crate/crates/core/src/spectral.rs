//! Analytic forward engine: the boundary flux as a Bessel eigenfunction
//! series,
//!
//! ```text
//! ∂u/∂n(z, t) = Σ_n a_{n,s*} e^{-i m θ_z} (1 - e^{-λ_n t}),
//! a_{n,r*} = -π^{-1/2} λ_n^{-1/2} ω_n J_|m|(√λ_n r*),   a_{n,s*} = a_{n,r*} e^{i m θ*},
//! ```
//!
//! plus the auxiliary fields `η_z^N` and `w_z^N` used to cross-check it.
//!
//! The `t → ∞` limit of the series is the Poisson-kernel normal derivative,
//! so the flux is evaluated as that closed form minus an exponentially
//! damped transient whose truncation is controlled by an explicit tail bound.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::bessel::{self, EigenMode};
use crate::error::{Error, Result};
use crate::point::{PolarPoint, SourcePoint};

/// Upper bound on `1 / (π j |J_{m+1}(j)|)` over all zeros `j = j_{m,k}`,
/// which in turn bounds every `|a_{n,r*}|` (attained near `m = 0, k = 1`,
/// where it is 0.2550).
pub const COEFFICIENT_ENVELOPE: f64 = 0.26;

/// Below this time the half-plane comparison bound is tried first.
pub const T_CUT: f64 = 1.0e-3;

/// Largest angular order and radial index the transient sum may use.
pub const MODE_BUDGET: usize = 400;

/// Default absolute tolerance for flux traces.
pub const DEFAULT_TOL: f64 = 1.0e-10;

/// Lower bound on the gap between consecutive zeros of any `J_m`, `m >= 0`.
const ZERO_GAP: f64 = 3.0;

/// Coefficients of one eigenmode in the flux series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxCoefficient {
    pub mode: EigenMode,
    /// Radial coefficient `a_{n,r*}`.
    pub a_r: f64,
    /// Full coefficient `a_{n,s*} = a_{n,r*} e^{i m θ*}`.
    pub a_s: Complex64,
}

/// Sampled boundary flux at one observation angle.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxTrace {
    pub theta_obs: f64,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl FluxTrace {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn radial_coefficient(mode: &EigenMode, r: f64) -> f64 {
    -mode.radial(r) / (libm::sqrt(PI) * mode.sqrt_lambda)
}

pub fn flux_coefficients(source: SourcePoint, modes: &[EigenMode]) -> Result<Vec<FluxCoefficient>> {
    if modes.is_empty() {
        return Err(Error::Domain("at least one mode is required"));
    }
    Ok(modes
        .iter()
        .map(|mode| {
            let a_r = radial_coefficient(mode, source.r);
            let phase = mode.m as f64 * source.theta;
            FluxCoefficient {
                mode: *mode,
                a_r,
                a_s: Complex64::new(libm::cos(phase), libm::sin(phase)) * a_r,
            }
        })
        .collect())
}

/// Closed-form steady flux `-(1/2π)(1 - r*²)/|z - s*|²`.
pub fn steady_flux(source: SourcePoint, theta_obs: f64) -> f64 {
    let r = source.r;
    let dist2 = 1.0 - 2.0 * r * libm::cos(source.theta - theta_obs) + r * r;
    -(1.0 - r * r) / (2.0 * PI * dist2)
}

/// Flux of the same source in the tangent half-plane at `z`; it dominates
/// the disc flux in magnitude for every `t`.
fn half_plane_bound(source: SourcePoint, theta_obs: f64, t: f64) -> f64 {
    let r = source.r;
    let cos = libm::cos(source.theta - theta_obs);
    let height = 1.0 - r * cos;
    let dist2 = 1.0 - 2.0 * r * cos + r * r;
    height / (PI * dist2) * libm::exp(-dist2 / (4.0 * t))
}

/// Truncated full series `Σ a_{n,s*} e^{-imθ_z}` over all modes with
/// `|m| <= max_order`, `k <= max_index`, kept complex so the cancellation of
/// the imaginary parts can be inspected.
pub fn mode_sum(source: SourcePoint, theta_obs: f64, max_order: u32, max_index: u32) -> Result<Complex64> {
    let modes = bessel::enumerate_modes(max_order, max_index)?;
    let coeffs = flux_coefficients(source, &modes)?;
    Ok(coeffs
        .iter()
        .map(|c| {
            let phase = -(c.mode.m as f64) * theta_obs;
            c.a_s * Complex64::new(libm::cos(phase), libm::sin(phase))
        })
        .sum())
}

/// Zeros and radial coefficients of one angular order, grown on demand.
#[derive(Debug, Clone)]
struct OrderBlock {
    order: u32,
    zeros: Vec<f64>,
    coeffs: Vec<f64>,
}

impl OrderBlock {
    fn grow(&mut self, len: usize, r: f64) -> Result<()> {
        if self.zeros.len() >= len {
            return Ok(());
        }
        bessel::extend_zeros(self.order, &mut self.zeros, len)?;
        for k in self.coeffs.len()..len {
            let mode = EigenMode::from_zero(self.order as i32, k as u32 + 1, self.zeros[k]);
            self.coeffs.push(radial_coefficient(&mode, r));
        }
        Ok(())
    }
}

/// Bound on `Σ_{k > K} e^{-λ_k t}` within one order given `j_{K+1}` (or a
/// lower bound for it): exponents grow by at least `6 j_{K+1}` per step.
fn block_tail(j_next: f64, t: f64) -> f64 {
    libm::exp(-j_next * j_next * t) / (1.0 - libm::exp(-2.0 * ZERO_GAP * j_next * t))
}

/// Bound on the transient contribution of all orders `m > max_order`,
/// using `j_{m,1} > m`.
fn orders_tail(max_order: usize, t: f64) -> f64 {
    let m = (max_order + 1) as f64;
    let geometric = (1.0 - libm::exp(-(2.0 * m + 1.0) * t)) * (1.0 - libm::exp(-2.0 * ZERO_GAP * m * t));
    2.0 * COEFFICIENT_ENVELOPE * libm::exp(-m * m * t) / geometric
}

/// Flux evaluator for one fixed source; caches zeros and coefficients so
/// repeated evaluations (traces, several angles) reuse them.
#[derive(Debug, Clone)]
pub struct SpectralEngine {
    source: SourcePoint,
    blocks: Vec<OrderBlock>,
}

impl SpectralEngine {
    pub fn new(source: SourcePoint) -> Self {
        Self {
            source,
            blocks: Vec::new(),
        }
    }

    pub fn source(&self) -> SourcePoint {
        self.source
    }

    fn block(&mut self, order: usize) -> &mut OrderBlock {
        while self.blocks.len() <= order {
            let order = self.blocks.len() as u32;
            self.blocks.push(OrderBlock {
                order,
                zeros: Vec::new(),
                coeffs: Vec::new(),
            });
        }
        &mut self.blocks[order]
    }

    /// `Σ_n a_{n,s*} e^{-imθ_z} e^{-λ_n t}` to absolute accuracy `tol`,
    /// restricted to `|m| <= order_cap` when given.
    fn transient(&mut self, theta_obs: f64, t: f64, tol: f64, order_cap: Option<usize>) -> Result<f64> {
        let limit = order_cap.map_or(MODE_BUDGET, |cap| cap.min(MODE_BUDGET));
        let mut max_order = 0;
        while max_order < limit && orders_tail(max_order, t) > 0.5 * tol {
            max_order += 1;
        }
        if order_cap.is_none() && orders_tail(max_order, t) > 0.5 * tol {
            return Err(Error::ModeBudgetExceeded {
                requested: tol,
                achieved: orders_tail(max_order, t),
            });
        }
        let per_block = 0.5 * tol / (max_order + 1) as f64;
        let r = self.source.r;
        let delta = self.source.theta - theta_obs;
        let mut total = 0.0;
        for order in 0..=max_order {
            let weight = if order == 0 { 1.0 } else { 2.0 } * libm::cos(order as f64 * delta);
            let block = self.block(order);
            let mut sum = 0.0;
            let mut k = 0;
            loop {
                block.grow(k + 1, r)?;
                let j = block.zeros[k];
                sum += block.coeffs[k] * libm::exp(-j * j * t);
                k += 1;
                let tail = 2.0 * COEFFICIENT_ENVELOPE * block_tail(j + ZERO_GAP, t);
                if tail <= per_block {
                    break;
                }
                if k >= MODE_BUDGET {
                    return Err(Error::ModeBudgetExceeded {
                        requested: tol,
                        achieved: tail * (max_order + 1) as f64,
                    });
                }
            }
            total += weight * sum;
        }
        Ok(total)
    }

    /// Boundary flux `∂u/∂n` at angle `theta_obs` and time `t`.
    pub fn flux(&mut self, theta_obs: f64, t: f64, tol: f64) -> Result<f64> {
        if !(t >= 0.0) || !(tol > 0.0) {
            return Err(Error::Domain("flux needs t >= 0 and tol > 0"));
        }
        if t == 0.0 {
            return Ok(0.0);
        }
        if t < T_CUT && half_plane_bound(self.source, theta_obs, t) <= tol {
            return Ok(0.0);
        }
        let steady = steady_flux(self.source, theta_obs);
        Ok(steady - self.transient(theta_obs, t, tol, None)?)
    }

    pub fn trace(&mut self, theta_obs: f64, times: &[f64], tol: f64) -> Result<FluxTrace> {
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Domain("trace times must be strictly increasing"));
        }
        let values = times
            .iter()
            .map(|&t| self.flux(theta_obs, t, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(FluxTrace {
            theta_obs,
            times: times.to_vec(),
            values,
        })
    }
}

pub fn flux(source: SourcePoint, theta_obs: f64, t: f64, tol: f64) -> Result<f64> {
    SpectralEngine::new(source).flux(theta_obs, t, tol)
}

pub fn flux_trace(source: SourcePoint, theta_obs: f64, times: &[f64], tol: f64) -> Result<FluxTrace> {
    SpectralEngine::new(source).trace(theta_obs, times, tol)
}

/// `η_z^N(r, θ) = Σ_{|l|<=N} ξ_l(z) ξ_{-l}(r, θ)` with
/// `ξ_l(r, θ) = (2π)^{-1/2} r^{|l|} e^{ilθ}`.
pub fn eval_eta(z_angle: f64, n: u32, point: PolarPoint) -> Complex64 {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut rl = 1.0;
    for l in 0..=n as i64 {
        let phase = l as f64 * (z_angle - point.theta);
        let term = Complex64::new(libm::cos(phase), libm::sin(phase)) * rl;
        sum += term;
        if l > 0 {
            sum += term.conj();
        }
        rl *= point.r;
    }
    sum / (2.0 * PI)
}

/// `w_z^N(x, t) = Σ_{|m|<=N} π^{-1/2} λ^{-1/2} e^{-imθ_z} (1 - e^{-λt}) φ_n(x)`,
/// evaluated as `η_z^N(x)` minus the damped part (the eigen-expansion of
/// `η_z^N` converges to it pointwise inside the disc).
pub fn eval_w(z_angle: f64, n: u32, point: PolarPoint, t: f64) -> Result<Complex64> {
    if !(t >= 0.0) {
        return Err(Error::Domain("eval_w needs t >= 0"));
    }
    if t == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let eta = eval_eta(z_angle, n, point);
    if point.r >= 1.0 {
        return Ok(eta);
    }
    // π^{-1/2}λ^{-1/2}ωJ(√λ r) is exactly -a_{n,r} for a source sitting at x.
    let mut engine = SpectralEngine::new(SourcePoint {
        r: point.r,
        theta: point.theta,
    });
    let damped = engine.transient(z_angle, t, 1e-13, Some(n as usize))?;
    Ok(eta + Complex64::new(damped, 0.0))
}
