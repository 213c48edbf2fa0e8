//! Integer-order Bessel functions of the first kind, their positive zeros,
//! and the Dirichlet eigensystem of `-Δ` on the unit disc built from them.
//!
//! The eigenfunctions are `φ(r, θ) = ω J_|m|(√λ r) e^{imθ}` with `√λ` a
//! positive zero of `J_|m|` and `ω = π^{-1/2} / J_{|m|+1}(√λ)`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::point::PolarPoint;

/// Largest argument accepted by [`bessel_j`].
pub const MAX_ARGUMENT: f64 = 1.0e4;

const MAX_NEWTON_STEPS: usize = 100;
const RESCALE_ABOVE: f64 = 1.0e250;
const RESCALE_BY: f64 = 1.0e-250;

/// `J_m(x)` for `m >= 0` and `0 <= x <= 10^4`.
///
/// Negative orders are the caller's business (`J_{-m} = (-1)^m J_m`).
pub fn bessel_j(m: i32, x: f64) -> Result<f64> {
    if m < 0 {
        return Err(Error::Domain("Bessel order must be nonnegative"));
    }
    if !(0.0..=MAX_ARGUMENT).contains(&x) {
        return Err(Error::Domain("Bessel argument must lie in [0, 1e4]"));
    }
    Ok(jn(m as u32, x))
}

/// Unchecked evaluation; `x` must already be validated.
pub(crate) fn jn(m: u32, x: f64) -> f64 {
    jn_pair(m, x).0
}

/// `(J_m(x), J_{m+1}(x))` in one pass.
pub(crate) fn jn_pair(m: u32, x: f64) -> (f64, f64) {
    if x == 0.0 {
        return (if m == 0 { 1.0 } else { 0.0 }, 0.0);
    }
    let q = 0.25 * x * x;
    // Terms of the ascending series decrease monotonically once q < m + 1,
    // so there is no cancellation to worry about.
    if x <= 4.0 || q < (m + 1) as f64 {
        (ascending_series(m, x), ascending_series(m + 1, x))
    } else {
        miller_pair(m, x)
    }
}

fn ascending_series(m: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for k in 1..=m {
        lead *= half / k as f64;
        if lead == 0.0 {
            return 0.0;
        }
    }
    let q = -half * half;
    let mut term = lead;
    let mut sum = lead;
    let mut k = 1.0;
    loop {
        term *= q / (k * (k + m as f64));
        sum += term;
        if term.abs() <= 1e-17 * sum.abs() {
            break;
        }
        k += 1.0;
    }
    sum
}

/// Backward recurrence normalised by `1 = J_0 + 2 Σ J_{2k}`.
fn miller_pair(m: u32, x: f64) -> (f64, f64) {
    let top = (m as f64).max(x);
    let mut n = (top + 20.0 * libm::cbrt(top) + 30.0) as u32;
    n += n % 2;
    let mut j_above = 0.0_f64;
    let mut j_here = 1.0e-30_f64;
    let mut sum = 0.0_f64;
    let (mut want_m, mut want_m1) = (0.0, 0.0);
    let two_over_x = 2.0 / x;
    // j_here holds J_k (unnormalised) at the top of each iteration
    let mut k = n;
    while k > 0 {
        if k == m + 1 {
            want_m1 = j_here;
        }
        if k == m {
            want_m = j_here;
        }
        if k.is_multiple_of(2) {
            sum += 2.0 * j_here;
        }
        let j_below = k as f64 * two_over_x * j_here - j_above;
        j_above = j_here;
        j_here = j_below;
        if j_here.abs() > RESCALE_ABOVE {
            j_here *= RESCALE_BY;
            j_above *= RESCALE_BY;
            sum *= RESCALE_BY;
            want_m *= RESCALE_BY;
            want_m1 *= RESCALE_BY;
        }
        k -= 1;
    }
    // k == 0 now
    if m == 0 {
        want_m = j_here;
    }
    sum += j_here;
    (want_m / sum, want_m1 / sum)
}

/// First `count` positive zeros of `J_m`, strictly increasing.
///
/// Each zero is bracketed by a sign-change scan (consecutive zeros are more
/// than 2.4 apart, so a unit step cannot skip one), seeded with the McMahon
/// estimate and polished by Newton steps that fall back to bisection
/// whenever they leave the bracket.
pub fn bessel_zeros(m: i32, count: usize) -> Result<Vec<f64>> {
    if m < 0 {
        return Err(Error::Domain("Bessel order must be nonnegative"));
    }
    if count == 0 {
        return Err(Error::Domain("zero count must be at least 1"));
    }
    let mut zeros = Vec::with_capacity(count);
    extend_zeros(m as u32, &mut zeros, count)?;
    Ok(zeros)
}

/// Append zeros of `J_m` to `zeros` (which must hold the first few, in
/// order) until it holds `len` of them.
pub(crate) fn extend_zeros(m: u32, zeros: &mut Vec<f64>, len: usize) -> Result<()> {
    while zeros.len() < len {
        // j_{m,1} > m, and J_m has no zero in (0, m]
        let lo = match zeros.last() {
            Some(&z) => z + 1.0,
            None if m == 0 => 1.0,
            None => m as f64,
        };
        let root = next_zero(m, zeros.len() + 1, lo)?;
        zeros.push(root);
    }
    Ok(())
}

fn mcmahon(m: u32, k: usize) -> f64 {
    let beta = (k as f64 + 0.5 * m as f64 - 0.25) * PI;
    let mu = 4.0 * (m as f64) * (m as f64);
    beta - (mu - 1.0) / (8.0 * beta)
}

fn next_zero(m: u32, index: usize, start: f64) -> Result<f64> {
    let mut a = start;
    let mut fa = jn(m, a);
    let mut b = a + 1.0;
    let mut fb = jn(m, b);
    while fa.signum() == fb.signum() && fb != 0.0 {
        a = b;
        fa = fb;
        b += 1.0;
        fb = jn(m, b);
        if b > MAX_ARGUMENT {
            return Err(Error::Domain("zero search ran past the Bessel argument limit"));
        }
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let guess = mcmahon(m, index);
    let mut x = if guess > a && guess < b { guess } else { 0.5 * (a + b) };
    for _ in 0..MAX_NEWTON_STEPS {
        let (j, j_next) = jn_pair(m, x);
        if j == 0.0 {
            return Ok(x);
        }
        if j.signum() == fa.signum() {
            a = x;
        } else {
            b = x;
        }
        let derivative = m as f64 / x * j - j_next;
        let mut step = j / derivative;
        let mut candidate = x - step;
        if !(candidate > a && candidate < b) || !candidate.is_finite() {
            candidate = 0.5 * (a + b);
            step = x - candidate;
        }
        x = candidate;
        if step.abs() <= 4.0 * f64::EPSILON * x || b - a <= 4.0 * f64::EPSILON * x {
            return Ok(x);
        }
    }
    Err(Error::ZeroNotConverged {
        order: m,
        index,
        iterations: MAX_NEWTON_STEPS,
    })
}

/// One Dirichlet eigenpair of `-Δ` on the unit disc.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenMode {
    /// Signed angular order.
    pub m: i32,
    /// Radial index, starting at 1.
    pub k: u32,
    pub lambda: f64,
    pub sqrt_lambda: f64,
    /// Normalisation making `‖φ‖_{L²(Ω)} = 1`.
    pub omega: f64,
}

impl EigenMode {
    /// Mode `(m, k)` whose `√λ` is the given zero of `J_|m|`.
    pub fn from_zero(m: i32, k: u32, zero: f64) -> Self {
        let order = m.unsigned_abs();
        let next = jn(order + 1, zero);
        Self {
            m,
            k,
            lambda: zero * zero,
            sqrt_lambda: zero,
            omega: 1.0 / (libm::sqrt(PI) * next),
        }
    }

    /// `|m|`.
    pub fn order(&self) -> u32 {
        self.m.unsigned_abs()
    }

    /// `ω J_|m|(√λ r)`, the real radial profile.
    pub fn radial(&self, r: f64) -> f64 {
        self.omega * jn(self.order(), self.sqrt_lambda * r)
    }
}

/// All signed modes with `|m| <= max_order` and `k <= max_index`, sorted by
/// eigenvalue; ties go to the smaller `|m|` and then `+m` before `-m`.
pub fn enumerate_modes(max_order: u32, max_index: u32) -> Result<Vec<EigenMode>> {
    if max_index == 0 {
        return Err(Error::Domain("radial index bound must be at least 1"));
    }
    let mut modes = Vec::with_capacity(((2 * max_order + 1) * max_index) as usize);
    for order in 0..=max_order {
        let zeros = bessel_zeros(order as i32, max_index as usize)?;
        for (i, &z) in zeros.iter().enumerate() {
            let mode = EigenMode::from_zero(order as i32, i as u32 + 1, z);
            modes.push(mode);
            if order > 0 {
                modes.push(EigenMode { m: -mode.m, ..mode });
            }
        }
    }
    modes.sort_by(|a, b| {
        a.lambda
            .total_cmp(&b.lambda)
            .then(a.order().cmp(&b.order()))
            .then(b.m.cmp(&a.m))
    });
    Ok(modes)
}

/// `φ(r, θ) = ω J_|m|(√λ r) e^{imθ}`.
pub fn eval_eigenfunction(mode: &EigenMode, point: PolarPoint) -> Complex64 {
    let phase = mode.m as f64 * point.theta;
    Complex64::new(libm::cos(phase), libm::sin(phase)) * mode.radial(point.r)
}
