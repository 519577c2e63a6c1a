//! Exponents fixing the short and long logarithmic times.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NumerologyProfile {
    pub lambda0: f64,
    pub lambda1: f64,
    pub beta: f64,
    pub frak_b: f64,
    pub delta0: f64,
    pub tau: f64,
    pub delta2: f64,
    /// 𝔟 + δ₀ < 1, 𝔟 < τ < 1, δ₀λ₀/λ₁ + τ > 1.
    pub checks: [bool; 3],
}

impl NumerologyProfile {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|&c| c)
    }

    /// N₀(h) = ⌈(δ₀/λ₁)|log h|⌉.
    pub fn n0(&self, h: f64) -> u64 {
        ceil_int(self.delta0 / self.lambda1 * h.ln().abs())
    }

    /// N₁(h) = ⌈|log h|/λ₀⌉.
    pub fn n1(&self, h: f64) -> u64 {
        ceil_int(h.ln().abs() / self.lambda0)
    }
}

fn ceil_int(v: f64) -> u64 {
    (v - 1e-9).ceil().max(0.0) as u64
}

pub fn numerology(lambda0: f64, lambda1: f64, beta: f64) -> Result<NumerologyProfile> {
    if !(lambda0 > 0.0 && lambda0 <= lambda1 && lambda1.is_finite()) || !(beta > 0.0 && beta.is_finite()) {
        return Err(LabError::Invalid(format!(
            "need 0 < lambda0 <= lambda1 and beta > 0 (got {lambda0}, {lambda1}, {beta})"
        )));
    }
    let r = lambda0 / lambda1;
    let frak_b = 1.0 / (1.0 + beta);
    let delta0 = (1.0 - frak_b) / 2.0;
    let tau = 1.0 - r * (1.0 - frak_b) / 4.0;
    let delta2 = delta0 * r;
    let checks = [frak_b + delta0 < 1.0, frak_b < tau && tau < 1.0, delta2 + tau > 1.0];
    Ok(NumerologyProfile {
        lambda0,
        lambda1,
        beta,
        frak_b,
        delta0,
        tau,
        delta2,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_exponents() {
        let p = numerology(2f64.ln(), 2f64.ln(), 1.0).unwrap();
        assert_eq!((p.frak_b, p.delta0, p.tau), (0.5, 0.25, 0.875));
        assert!((p.delta2 + p.tau - 9.0 / 8.0).abs() < 1e-15);
        assert!(p.all_hold());
        assert_eq!(p.n1(2f64.powi(-10)), 10);
    }

    #[test]
    fn half_ratio() {
        let p = numerology(1.0, 2.0, 1.0).unwrap();
        assert_eq!(p.tau, 15.0 / 16.0);
        assert_eq!(p.delta2, 1.0 / 8.0);
        assert!(p.all_hold());
    }

    #[test]
    fn rejects_bad_exponents() {
        assert!(numerology(2.0, 1.0, 1.0).is_err());
        assert!(numerology(1.0, 1.0, 0.0).is_err());
    }
}
