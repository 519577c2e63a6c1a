//! Porosity certificates and the explicit porosity/dimension conversions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::IntervalSet;
use crate::error::{LabError, Result};

/// Relative slack accepted when comparing a gap with ν|I|.
const GAP_SLACK: f64 = 1e-9;

/// A gap J inside an interval I at one scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub scale: f64,
    pub interval: (f64, f64),
    pub gap: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PorosityCertificate {
    pub nu: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub scales: Vec<f64>,
    /// The tightest witness found at each scale.
    pub witness_gaps: Vec<Witness>,
    /// Left endpoints of I were scanned on a grid of this spacing at the smallest scale.
    pub checked_resolution: f64,
    pub intervals_checked: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PorosityRefutation {
    pub nu: f64,
    pub scale: f64,
    pub interval: (f64, f64),
    pub best_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PorosityOutcome {
    Certified(PorosityCertificate),
    Refuted(PorosityRefutation),
}

impl PorosityOutcome {
    pub fn is_certified(&self) -> bool {
        matches!(self, PorosityOutcome::Certified(_))
    }

    pub fn certificate(&self) -> Option<&PorosityCertificate> {
        match self {
            PorosityOutcome::Certified(c) => Some(c),
            PorosityOutcome::Refuted(_) => None,
        }
    }
}

/// Scan parameters: scales alpha1·ratio^{-k} >= alpha0 and left endpoints spaced ν|I|/4.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PorosityScan {
    pub nu: f64,
    pub alpha0: f64,
    pub alpha1: f64,
    pub scale_ratio: f64,
}

impl PorosityScan {
    pub fn new(nu: f64, alpha0: f64, alpha1: f64) -> Self {
        Self {
            nu,
            alpha0,
            alpha1,
            scale_ratio: 2.0,
        }
    }

    pub fn with_ratio(mut self, r: f64) -> Self {
        self.scale_ratio = r;
        self
    }

    pub fn scales(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut l = self.alpha1;
        while l >= self.alpha0 * (1.0 - 1e-12) {
            out.push(l);
            l /= self.scale_ratio;
        }
        out
    }
}

/// Builds a closed superset-at-resolution of a membership predicate sampled on [lo, hi].
pub fn sample_membership(contains: &(dyn Fn(f64) -> bool + Sync), lo: f64, hi: f64, resolution: f64) -> IntervalSet {
    let n = ((hi - lo) / resolution).ceil() as usize + 1;
    let raw: Vec<(f64, f64)> = (0..n)
        .into_par_iter()
        .map(|k| lo + k as f64 * resolution)
        .filter(|&x| contains(x))
        .map(|x| (x - resolution, x + resolution))
        .collect();
    IntervalSet::new(raw)
}

/// Checks ν-porosity of a bounded set on the scales of `scan`, largest scale first.
pub fn check_porosity(set: &IntervalSet, scan: &PorosityScan) -> Result<PorosityOutcome> {
    let PorosityScan {
        nu,
        alpha0,
        alpha1,
        scale_ratio,
    } = *scan;
    if !(nu > 0.0 && nu < 1.0) || !(alpha0 > 0.0 && alpha0 <= alpha1) || scale_ratio <= 1.0 {
        return Err(LabError::Invalid(format!(
            "porosity scan needs 0 < nu < 1, 0 < alpha0 <= alpha1, ratio > 1 (got {nu}, {alpha0}, {alpha1}, {scale_ratio})"
        )));
    }
    let scales = scan.scales();
    let Some((lo, hi)) = set.hull() else {
        let witness_gaps = scales
            .iter()
            .map(|&l| Witness {
                scale: l,
                interval: (0.0, l),
                gap: (0.0, nu * l),
            })
            .collect();
        return Ok(PorosityOutcome::Certified(PorosityCertificate {
            nu,
            alpha0,
            alpha1,
            checked_resolution: nu * scales.last().copied().unwrap_or(alpha0) / 4.0,
            scales,
            witness_gaps,
            intervals_checked: 0,
        }));
    };
    let mut witness_gaps = Vec::with_capacity(scales.len());
    let mut checked = 0usize;
    for &l in &scales {
        let step = nu * l / 4.0;
        let count = ((hi - lo + l) / step).ceil() as usize + 1;
        checked += count;
        // (margin, y, gap) of the tightest interval at this scale
        let worst = (0..count)
            .into_par_iter()
            .map(|k| {
                let y = lo - l + k as f64 * step;
                let gap = set.largest_gap(y, y + l);
                ((gap.1 - gap.0) - nu * l, k, gap)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .expect("at least one interval");
        let y = lo - l + worst.1 as f64 * step;
        if worst.0 < -GAP_SLACK * l {
            return Ok(PorosityOutcome::Refuted(PorosityRefutation {
                nu,
                scale: l,
                interval: (y, y + l),
                best_gap: worst.2 .1 - worst.2 .0,
            }));
        }
        witness_gaps.push(Witness {
            scale: l,
            interval: (y, y + l),
            gap: (worst.2 .0, worst.2 .0 + nu * l),
        });
    }
    Ok(PorosityOutcome::Certified(PorosityCertificate {
        nu,
        alpha0,
        alpha1,
        checked_resolution: nu * scales.last().copied().unwrap_or(alpha0) / 4.0,
        scales,
        witness_gaps,
        intervals_checked: checked,
    }))
}

/// Porosity guaranteed for X(α2) when X is ν-porous on scales α0 to α1: (ν/3, max(α0, 3α2/ν), α1).
pub fn fattened_porosity(nu: f64, alpha0: f64, alpha1: f64, alpha2: f64) -> Result<(f64, f64, f64)> {
    if !(alpha2 > 0.0 && alpha2 <= nu * alpha1 / 3.0 * (1.0 + 1e-12)) {
        return Err(LabError::Invalid(format!("fattening needs 0 < alpha2 <= nu*alpha1/3, got {alpha2}")));
    }
    Ok((nu / 3.0, alpha0.max(3.0 * alpha2 / nu), alpha1))
}

/// ν = 1/(3T), T = ⌊max(1/(6ε₀), (6^δ C)^{1/(1−δ)})⌋ + 1.
pub fn porosity_from_dimension(c: f64, delta: f64, eps0: f64) -> Result<f64> {
    if !(delta >= 0.0 && delta < 1.0) || c <= 0.0 || eps0 <= 0.0 {
        return Err(LabError::Invalid(format!(
            "need 0 <= delta < 1, C > 0, eps0 > 0 (got {c}, {delta}, {eps0})"
        )));
    }
    let t = (1.0 / (6.0 * eps0)).max((6f64.powf(delta) * c).powf(1.0 / (1.0 - delta))).floor() + 1.0;
    Ok(1.0 / (3.0 * t))
}

/// (C, δ) with N(ε) <= C ε^{-δ} for a ν-porous subset of [-M, M] on scales 0 to α1.
///
/// L = ⌈2/ν⌉, δ = log(L−1)/log L, C = 4M (L/(L−1))^{k₀} (L−1)^{1−log 2/log L}
/// with L^{−k₀} <= α1 < L^{−k₀+1}.
pub fn dimension_from_porosity(nu: f64, alpha1: f64, m: f64) -> Result<(f64, f64)> {
    if !(nu > 0.0 && nu < 1.0) || alpha1 <= 0.0 || m <= 0.0 {
        return Err(LabError::Invalid(format!("need 0 < nu < 1, alpha1 > 0, M > 0 (got {nu}, {alpha1}, {m})")));
    }
    let l = ((2.0 / nu) - 1e-9).ceil().max(2.0);
    let delta = (l - 1.0).ln() / l.ln();
    let mut k0 = (-alpha1.ln() / l.ln()).ceil();
    // enforce L^{-k0} <= alpha1 < L^{-k0+1} against rounding
    while l.powf(-k0) > alpha1 {
        k0 += 1.0;
    }
    while l.powf(-k0 + 1.0) <= alpha1 {
        k0 -= 1.0;
    }
    let c = 4.0 * m * (l / (l - 1.0)).powf(k0) * (l - 1.0).powf(1.0 - 2f64.ln() / l.ln());
    Ok((c, delta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cantor() -> IntervalSet {
        IntervalSet::cantor(3, &[0, 2], 12)
    }

    #[test]
    fn cantor_is_third_porous_on_triadic_scales() {
        let scan = PorosityScan::new(1.0 / 3.0, 3f64.powi(-8), 1.0).with_ratio(3.0);
        let out = check_porosity(&cantor(), &scan).unwrap();
        let cert = out.certificate().unwrap();
        assert_eq!(cert.scales.len(), 9);
        for w in &cert.witness_gaps {
            assert!(w.gap.0 >= w.interval.0 - 1e-12 && w.gap.1 <= w.interval.1 + 1e-12);
            assert!((w.gap.1 - w.gap.0 - w.scale / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cantor_fails_third_porosity_between_triadic_scales() {
        let scan = PorosityScan::new(1.0 / 3.0, 3f64.powi(-8), 1.0).with_ratio(2.0);
        assert!(!check_porosity(&cantor(), &scan).unwrap().is_certified());
    }

    #[test]
    fn full_interval_is_refuted_at_the_top_scale() {
        let set = IntervalSet::new(vec![(0.0, 1.0)]);
        let out = check_porosity(&set, &PorosityScan::new(0.1, 0.01, 1.0)).unwrap();
        match out {
            PorosityOutcome::Refuted(r) => {
                assert_eq!(r.scale, 1.0);
                assert!((r.interval.0 - 0.0).abs() < 1e-12 && (r.interval.1 - 1.0).abs() < 1e-12);
            }
            PorosityOutcome::Certified(_) => panic!("interval certified"),
        }
    }

    #[test]
    fn cantor_is_ninth_porous_on_all_scales() {
        let scan = PorosityScan::new(1.0 / 9.0, 3f64.powi(-8), 1.0).with_ratio(1.1);
        assert!(check_porosity(&cantor(), &scan).unwrap().is_certified());
    }

    #[test]
    fn fattened_cantor_keeps_a_third_of_the_porosity() {
        let nu = 1.0 / 9.0;
        let alpha2 = 3f64.powi(-6);
        let (nu2, a0, a1) = fattened_porosity(nu, 3f64.powi(-8), 1.0, alpha2).unwrap();
        assert!((a0 - 3f64.powi(-3)).abs() < 1e-15 && a1 == 1.0);
        let fat = cantor().fatten(alpha2);
        let scan = PorosityScan::new(nu2, a0, a1).with_ratio(1.1);
        assert!(check_porosity(&fat, &scan).unwrap().is_certified());
    }

    #[test]
    fn fattening_at_the_largest_radius() {
        let nu = 1.0 / 3.0;
        let alpha2 = nu / 3.0;
        let (nu2, a0, a1) = fattened_porosity(nu, 3f64.powi(-8), 1.0, alpha2).unwrap();
        assert!((a0 - 1.0).abs() < 1e-12 && a1 == 1.0);
        let fat = cantor().fatten(alpha2);
        let scan = PorosityScan::new(nu2, a1, a1);
        assert!(check_porosity(&fat, &scan).unwrap().is_certified());
        assert!(fattened_porosity(nu, 0.0, 1.0, 0.2).is_err());
    }

    #[test]
    fn porosity_from_dimension_examples() {
        let d = 2f64.ln() / 3f64.ln();
        assert!((porosity_from_dimension(1.0, d, 1.0 / 6.0).unwrap() - 1.0 / 66.0).abs() < 1e-15);
        assert!((porosity_from_dimension(1.0, 0.0, 1.0 / 6.0).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn dimension_from_porosity_examples() {
        let (c, d) = dimension_from_porosity(1.0 / 3.0, 1.0, 1.0).unwrap();
        assert!((d - 5f64.ln() / 6f64.ln()).abs() < 1e-12);
        let expect = 4.0 * 5f64.powf(1.0 - 2f64.ln() / 6f64.ln());
        assert!((c - expect).abs() < 1e-12);
        let (_, d) = dimension_from_porosity(1.0 - 1e-12, 1.0, 1.0).unwrap();
        assert_eq!(d, 0.0);
    }
}
