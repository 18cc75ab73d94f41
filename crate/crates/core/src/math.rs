//! Small numeric helpers shared across modules.

use core::f64::consts::PI;

pub(crate) use num_traits::Float;

/// Gravitational acceleration in m/s².
pub const GRAVITY: f64 = 9.81;

/// Wraps an angle to (−π, π].
pub fn wrap_angle(angle: f64) -> f64 {
    let mut a = angle % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

pub fn clamp(value: f64, lo: f64, hi: f64) -> f64 {
    if value < lo {
        lo
    } else if value > hi {
        hi
    } else {
        value
    }
}

/// Integral over [0, t] of the square of the polynomial with the given
/// ascending coefficients.
pub fn integral_of_square(coeffs: &[f64], t: f64) -> f64 {
    let mut total = 0.0;
    for (i, ci) in coeffs.iter().enumerate() {
        for (j, cj) in coeffs.iter().enumerate() {
            let p = (i + j + 1) as i32;
            total += ci * cj * t.powi(p) / p as f64;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_takes_the_short_way_round() {
        let e = wrap_angle(-3.10 - 3.10);
        assert!((e - (2.0 * PI - 6.2)).abs() < 1e-12);
        assert!((e - 0.0832).abs() < 1e-3);
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(7.0) - (7.0 - 2.0 * PI)).abs() < 1e-12);
    }

    #[test]
    fn integral_of_square_matches_closed_form() {
        // (1 + 2t)^2 over [0, 3] = t + 2t^2 + 4t^3/3 -> 3 + 18 + 36
        assert!((integral_of_square(&[1.0, 2.0], 3.0) - 57.0).abs() < 1e-12);
    }
}
