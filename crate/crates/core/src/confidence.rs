//! Anytime and fixed-time confidence radii.
//!
//! The anytime radius is an iterated-logarithm envelope
//!
//! ```text
//! U(t, δ) = sqrt( (c σ² / t) · ( log(1/δ) + β · log(1 + log2(max(t, 2))) ) )
//! ```
//!
//! with `c = lil_constant` and `β = lil_log_inflation`. With the defaults
//! (`c = 2`, `β = 2`) a union bound over doubling epochs keeps the crossing
//! probability of a 1-sub-Gaussian running mean below `δ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceSchedule {
    pub sigma2: f64,
    pub lil_constant: f64,
    pub lil_log_inflation: f64,
}

impl Default for ConfidenceSchedule {
    fn default() -> Self {
        ConfidenceSchedule {
            sigma2: 1.0,
            lil_constant: 2.0,
            lil_log_inflation: 2.0,
        }
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")))
    }
}

fn check_t(t: u64) -> Result<()> {
    if t >= 1 {
        Ok(())
    } else {
        Err(Error::invalid("pull count must be at least 1"))
    }
}

impl ConfidenceSchedule {
    pub fn new(sigma2: f64, lil_constant: f64, lil_log_inflation: f64) -> Result<Self> {
        for (name, v) in [
            ("sigma2", sigma2),
            ("lil_constant", lil_constant),
            ("lil_log_inflation", lil_log_inflation),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(ConfidenceSchedule {
            sigma2,
            lil_constant,
            lil_log_inflation,
        })
    }

    /// Anytime radius `U(t, δ)`.
    pub fn u_bound(&self, t: u64, delta: f64) -> Result<f64> {
        check_t(t)?;
        check_delta(delta)?;
        Ok(self.anytime_radius(t, (1.0 / delta).ln()))
    }

    /// Fixed-time sub-Gaussian radius `sqrt(2 σ² log(1/δ) / t)`.
    pub fn fixed_bound(&self, t: u64, delta: f64) -> Result<f64> {
        check_t(t)?;
        check_delta(delta)?;
        Ok((2.0 * self.sigma2 * (1.0 / delta).ln() / t as f64).sqrt())
    }

    /// Unchecked anytime radius with `log(1/δ)` precomputed; used in the
    /// samplers' inner loops.
    #[inline]
    pub fn anytime_radius(&self, t: u64, log_inv_delta: f64) -> f64 {
        let tt = t.max(2) as f64;
        let iterated = (1.0 + tt.log2()).ln();
        (self.lil_constant * self.sigma2 / t as f64 * (log_inv_delta + self.lil_log_inflation * iterated))
            .sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u_bound_at_one_pull() {
        let s = ConfidenceSchedule::default();
        let expected = (2.0 * (20f64.ln() + 2.0 * 2f64.ln())).sqrt();
        let got = s.u_bound(1, 0.05).unwrap();
        assert!((got - expected).abs() < 1e-12);
        assert!((got - 2.9604).abs() < 5e-5);
    }

    #[test]
    fn u_bound_delta_to_one_limit() {
        let s = ConfidenceSchedule::default();
        let t = 64u64;
        let limit = (2.0 / t as f64 * 2.0 * (1.0 + (t as f64).log2()).ln()).sqrt();
        let near = s.u_bound(t, 1.0 - 1e-12).unwrap();
        assert!((near - limit).abs() < 1e-6);
        assert!(limit > 0.0);
    }

    #[test]
    fn fixed_bound_examples() {
        let s = ConfidenceSchedule::default();
        let got = s.fixed_bound(100, 0.05).unwrap();
        assert!((got - (2.0 * 20f64.ln() / 100.0).sqrt()).abs() < 1e-12);
        assert!((got - 0.2448).abs() < 5e-5);

        // t = 8 log(1/δ)/ε² inverts to ε/2.
        let (eps, delta) = (0.25f64, 0.01f64);
        let t = 8.0 * (1.0 / delta).ln() / (eps * eps);
        let r = (2.0 * (1.0 / delta).ln() / t).sqrt();
        assert!((r - eps / 2.0).abs() < 1e-12);
    }

    #[test]
    fn argument_validation() {
        let s = ConfidenceSchedule::default();
        assert!(s.u_bound(0, 0.1).is_err());
        assert!(s.u_bound(1, 0.0).is_err());
        assert!(s.u_bound(1, 1.0).is_err());
        assert!(s.fixed_bound(0, 0.1).is_err());
        assert!(s.fixed_bound(3, 1.5).is_err());
        assert!(ConfidenceSchedule::new(0.0, 2.0, 2.0).is_err());
        assert!(ConfidenceSchedule::new(1.0, -1.0, 2.0).is_err());
    }

    #[test]
    fn monotone_in_t_and_delta() {
        let s = ConfidenceSchedule::default();
        for t in 2..5000u64 {
            assert!(s.u_bound(t + 1, 0.1).unwrap() <= s.u_bound(t, 0.1).unwrap());
        }
        assert!(s.u_bound(10, 0.01).unwrap() > s.u_bound(10, 0.05).unwrap());
    }

    #[test]
    fn anytime_dominates_fixed() {
        let s = ConfidenceSchedule::default();
        for t in [1u64, 2, 3, 10, 100, 10_000, 1_000_000] {
            for d in [0.5, 0.1, 0.01, 1e-6] {
                assert!(s.u_bound(t, d).unwrap() >= s.fixed_bound(t, d).unwrap());
            }
        }
    }

    #[test]
    fn scales_with_sigma() {
        let s1 = ConfidenceSchedule::default();
        let s4 = ConfidenceSchedule::new(4.0, 2.0, 2.0).unwrap();
        let r = s4.u_bound(50, 0.1).unwrap() / s1.u_bound(50, 0.1).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        let r = s4.fixed_bound(50, 0.1).unwrap() / s1.fixed_bound(50, 0.1).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
    }
}
