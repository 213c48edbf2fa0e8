//! Screening of observation-angle pairs.
//!
//! Two boundary observation points determine the source uniquely when
//! `θ₁ - θ₂` is not a rational multiple of π. Irrationality cannot be decided
//! in floating point, so the check searches the continued-fraction
//! convergents `p/q` of `(θ₁ - θ₂)/π` with `q <= q_max` and reports a witness,
//! a clean pass, or "unresolved" when a convergent comes close without
//! matching.

use core::f64::consts::PI;

use crate::error::{Error, Result};

/// `|q x - p|` at or below this is an exact rational match.
pub const MATCH_TOL: f64 = 1e-12;
/// Every convergent must miss by more than this for a clean pass.
pub const CLEARANCE: f64 = 1e-6;
pub const DEFAULT_Q_MAX: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Admissibility {
    Admissible,
    /// `θ₁ - θ₂ = (p/q)·π` to within the match tolerance.
    Inadmissible { p: i64, q: u64 },
    /// Closest convergent found, neither matching nor clearly separated.
    Unresolved { p: i64, q: u64, residual: f64 },
}

impl Admissibility {
    pub fn is_admissible(&self) -> bool {
        matches!(self, Admissibility::Admissible)
    }
}

pub fn check_observation_angles(theta_1: f64, theta_2: f64, q_max: u64) -> Result<Admissibility> {
    if q_max == 0 {
        return Err(Error::Domain("q_max must be at least 1"));
    }
    if !theta_1.is_finite() || !theta_2.is_finite() {
        return Err(Error::Domain("observation angles must be finite"));
    }
    let x = (theta_1 - theta_2) / PI;

    // convergents h_n / k_n with h_{-1} = 1, k_{-1} = 0, h_{-2} = 0, k_{-2} = 1
    let (mut h_prev, mut h) = (0i64, 1i64);
    let (mut k_prev, mut k) = (1u64, 0u64);
    let mut rest = x;
    let mut best: Option<(i64, u64, f64)> = None;
    loop {
        let a = libm::floor(rest);
        let a_int = a as i64;
        let h_next = a_int.checked_mul(h).and_then(|v| v.checked_add(h_prev));
        let k_next = (a_int as u64).checked_mul(k).and_then(|v| v.checked_add(k_prev));
        let (Some(h_next), Some(k_next)) = (h_next, k_next) else {
            break;
        };
        if k_next > q_max {
            break;
        }
        (h_prev, h) = (h, h_next);
        (k_prev, k) = (k, k_next);

        let residual = libm::fabs(k as f64 * x - h as f64);
        if residual <= MATCH_TOL {
            return Ok(Admissibility::Inadmissible { p: h, q: k });
        }
        if best.is_none_or(|(_, _, r)| residual < r) {
            best = Some((h, k, residual));
        }
        let frac = rest - a;
        if frac <= f64::EPSILON {
            break;
        }
        rest = 1.0 / frac;
    }
    match best {
        Some((p, q, residual)) if residual <= CLEARANCE => Ok(Admissibility::Unresolved { p, q, residual }),
        _ => Ok(Admissibility::Admissible),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turn_is_rational() {
        let a = check_observation_angles(2.0 + PI / 2.0, 2.0, DEFAULT_Q_MAX).unwrap();
        assert_eq!(a, Admissibility::Inadmissible { p: 1, q: 2 });
        let b = check_observation_angles(PI / 2.0, 0.0, DEFAULT_Q_MAX).unwrap();
        assert_eq!(b, Admissibility::Inadmissible { p: 1, q: 2 });
    }

    #[test]
    fn equal_angles() {
        let a = check_observation_angles(1.3, 1.3, DEFAULT_Q_MAX).unwrap();
        assert_eq!(a, Admissibility::Inadmissible { p: 0, q: 1 });
    }

    #[test]
    fn one_radian_is_admissible() {
        // convergents of 1/π: 1/3, 7/22, 106/333, 113/355, 33102/103993, ...
        let a = check_observation_angles(1.0, 0.0, DEFAULT_Q_MAX).unwrap();
        assert_eq!(a, Admissibility::Admissible);
    }

    #[test]
    fn negative_differences_and_witness_sign() {
        let a = check_observation_angles(0.0, 2.0 * PI / 3.0, DEFAULT_Q_MAX).unwrap();
        assert_eq!(a, Admissibility::Inadmissible { p: -2, q: 3 });
    }

    #[test]
    fn near_rational_is_unresolved() {
        let a = check_observation_angles(PI * (1.0 / 3.0 + 1e-8), 0.0, DEFAULT_Q_MAX).unwrap();
        assert!(matches!(a, Admissibility::Unresolved { p: 1, q: 3, .. }), "{a:?}");
    }

    #[test]
    fn rejects_zero_q_max() {
        assert!(check_observation_angles(1.0, 0.0, 0).is_err());
    }
}
