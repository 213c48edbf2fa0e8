//! Test-only reference implementations, independent of the production code
//! paths they check.
#![allow(dead_code)]

use core::f64::consts::PI;

/// `J_m(x) = (1/π) ∫_0^π cos(mτ - x sin τ) dτ` by the trapezoid rule; the
/// integrand is smooth and periodic, so the rule converges geometrically once
/// the node count exceeds `x + m` comfortably.
pub fn bessel_j(m: u32, x: f64) -> f64 {
    let n = 2 * ((x + m as f64) as usize + 64);
    let h = PI / n as f64;
    let f = |tau: f64| (m as f64 * tau - x * tau.sin()).cos();
    let mut sum = 0.5 * (f(0.0) + f(PI));
    for i in 1..n {
        sum += f(i as f64 * h);
    }
    sum * h / PI
}

/// Bisection on the integral-representation evaluator.
pub fn zero_by_bisection(m: u32, mut a: f64, mut b: f64) -> f64 {
    let mut fa = bessel_j(m, a);
    assert!(fa * bessel_j(m, b) < 0.0, "no sign change in [{a}, {b}]");
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        let fc = bessel_j(m, c);
        if fc == 0.0 {
            return c;
        }
        if (fc < 0.0) == (fa < 0.0) {
            a = c;
            fa = fc;
        } else {
            b = c;
        }
        if b - a < 1e-15 * b {
            break;
        }
    }
    0.5 * (a + b)
}

/// First `count` zeros of `J_m` by a fine sign-change scan plus bisection.
pub fn zeros(m: u32, count: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(count);
    let step = 0.25;
    let mut a = if m == 0 { 0.5 } else { m as f64 };
    let mut fa = bessel_j(m, a);
    while out.len() < count {
        let b = a + step;
        let fb = bessel_j(m, b);
        if fa * fb < 0.0 {
            out.push(zero_by_bisection(m, a, b));
        }
        a = b;
        fa = fb;
    }
    out
}

/// Poisson-kernel steady flux, written out independently.
pub fn poisson_flux(r: f64, theta: f64, theta_obs: f64) -> f64 {
    let d2 = 1.0 - 2.0 * r * (theta - theta_obs).cos() + r * r;
    -(1.0 - r * r) / (2.0 * PI * d2)
}
