//! Boundary-value polynomials used for lateral and longitudinal motion.

use serde::{Deserialize, Serialize};

use crate::math::integral_of_square;
use crate::{Error, Result};

fn eval(coeffs: &[f64], t: f64, derivative: usize) -> f64 {
    let mut acc = 0.0;
    for (i, c) in coeffs.iter().enumerate().skip(derivative).rev() {
        let mut factor = 1.0;
        for k in 0..derivative {
            factor *= (i - k) as f64;
        }
        acc = acc * t + c * factor;
    }
    acc
}

/// Fifth-order polynomial in time, ascending coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quintic {
    pub coeffs: [f64; 6],
}

/// Fourth-order polynomial in time, ascending coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quartic {
    pub coeffs: [f64; 5],
}

macro_rules! poly_impl {
    ($ty:ty) => {
        impl $ty {
            pub fn value(&self, t: f64) -> f64 {
                eval(&self.coeffs, t, 0)
            }
            pub fn velocity(&self, t: f64) -> f64 {
                eval(&self.coeffs, t, 1)
            }
            pub fn acceleration(&self, t: f64) -> f64 {
                eval(&self.coeffs, t, 2)
            }
            pub fn jerk(&self, t: f64) -> f64 {
                eval(&self.coeffs, t, 3)
            }
        }
    };
}

poly_impl!(Quintic);
poly_impl!(Quartic);

fn check_horizon(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid("horizon", "must be > 0"))
    }
}

/// Quintic with the given initial position/velocity/acceleration reaching
/// `d_t` at time `t` with zero velocity and acceleration.
pub fn solve_quintic(d0: f64, v0: f64, a0: f64, d_t: f64, t: f64) -> Result<Quintic> {
    check_horizon(t)?;
    let (c0, c1, c2) = (d0, v0, a0 / 2.0);
    let t2 = t * t;
    let t3 = t2 * t;
    let h = d_t - (c0 + c1 * t + c2 * t2);
    let hv = -(c1 + 2.0 * c2 * t);
    let ha = -2.0 * c2;
    let c3 = (10.0 * h - 4.0 * hv * t + 0.5 * ha * t2) / t3;
    let c4 = (-15.0 * h + 7.0 * hv * t - ha * t2) / (t3 * t);
    let c5 = (6.0 * h - 3.0 * hv * t + 0.5 * ha * t2) / (t3 * t2);
    Ok(Quintic {
        coeffs: [c0, c1, c2, c3, c4, c5],
    })
}

/// Velocity-keeping quartic: initial position/velocity/acceleration, terminal
/// velocity `v_t` with zero terminal acceleration, terminal position free.
pub fn solve_quartic_velocity_keeping(s0: f64, v0: f64, a0: f64, v_t: f64, t: f64) -> Result<Quartic> {
    check_horizon(t)?;
    let (c0, c1, c2) = (s0, v0, a0 / 2.0);
    let dv = v_t - c1 - 2.0 * c2 * t;
    let da = -2.0 * c2;
    let c3 = (3.0 * dv - da * t) / (3.0 * t * t);
    let c4 = (da * t - 2.0 * dv) / (4.0 * t * t * t);
    Ok(Quartic {
        coeffs: [c0, c1, c2, c3, c4],
    })
}

impl Quintic {
    /// Largest boundary-condition residual against the inputs it was solved
    /// for.
    pub fn boundary_residual(&self, d0: f64, v0: f64, a0: f64, d_t: f64, t: f64) -> f64 {
        [
            self.value(0.0) - d0,
            self.velocity(0.0) - v0,
            self.acceleration(0.0) - a0,
            self.value(t) - d_t,
            self.velocity(t),
            self.acceleration(t),
        ]
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    /// ∫₀ᵀ jerk² dt.
    pub fn jerk_cost(&self, t: f64) -> f64 {
        let c = &self.coeffs;
        integral_of_square(&[6.0 * c[3], 24.0 * c[4], 60.0 * c[5]], t)
    }
}

impl Quartic {
    pub fn boundary_residual(&self, s0: f64, v0: f64, a0: f64, v_t: f64, t: f64) -> f64 {
        [
            self.value(0.0) - s0,
            self.velocity(0.0) - v0,
            self.acceleration(0.0) - a0,
            self.velocity(t) - v_t,
            self.acceleration(t),
        ]
        .iter()
        .fold(0.0_f64, |m, r| m.max(r.abs()))
    }

    pub fn jerk_cost(&self, t: f64) -> f64 {
        let c = &self.coeffs;
        integral_of_square(&[6.0 * c[3], 24.0 * c[4]], t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_boundaries_give_zero_polynomial() {
        let q = solve_quintic(0.0, 0.0, 0.0, 0.0, 3.0).unwrap();
        assert_eq!(q.coeffs, [0.0; 6]);
    }

    #[test]
    fn horizon_must_be_positive() {
        assert!(solve_quintic(0.0, 0.0, 0.0, 1.0, 0.0).is_err());
        assert!(solve_quartic_velocity_keeping(0.0, 0.0, 0.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn constant_velocity_quartic() {
        let q = solve_quartic_velocity_keeping(3.0, 10.0, 0.0, 10.0, 4.0).unwrap();
        for k in 0..=40 {
            let t = k as f64 * 0.1;
            assert!((q.value(t) - (3.0 + 10.0 * t)).abs() < 1e-12);
        }
    }

    #[test]
    fn derivative_evaluation() {
        let q = Quintic {
            coeffs: [1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        };
        let t = 0.7_f64;
        let p = 1.0 + 2.0 * t + 3.0 * t * t + 4.0 * t.powi(3) + 5.0 * t.powi(4) + 6.0 * t.powi(5);
        assert!((q.value(t) - p).abs() < 1e-12);
        let dp = 2.0 + 6.0 * t + 12.0 * t * t + 20.0 * t.powi(3) + 30.0 * t.powi(4);
        assert!((q.velocity(t) - dp).abs() < 1e-12);
        let j = 24.0 + 120.0 * t + 360.0 * t * t;
        assert!((q.jerk(t) - j).abs() < 1e-12);
    }
}
