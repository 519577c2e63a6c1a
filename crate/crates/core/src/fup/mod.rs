//! Fractal uncertainty norms on the discrete torus.

mod omega;
mod sets;

use faer::c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{top_singular_value, zeros};

pub use omega::{build_omega_sets, omega_norm, CloudParams, OmegaSets, WordCloud};
pub use sets::{realize_intervals, FractalSetSpec};

/// ||1_{minus} F 1_{plus}|| for the unitary DFT on Z_N, F_{jk} = N^{-1/2} e^{-2 pi i jk/N}.
pub fn fup_norm(n: usize, minus: &[usize], plus: &[usize]) -> Result<f64> {
    if minus.is_empty() || plus.is_empty() {
        return Ok(0.0);
    }
    if minus.iter().chain(plus).any(|&j| j >= n) {
        return Err(LabError::Invalid(format!("index outside Z_{n}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let mut block = zeros(minus.len(), plus.len());
    for (r, &j) in minus.iter().enumerate() {
        for (c, &k) in plus.iter().enumerate() {
            let phase = ((j as u128 * k as u128) % n as u128) as f64 / n as f64;
            let t = -2.0 * std::f64::consts::PI * phase;
            block[(r, c)] = c64::new(t.cos() * scale, t.sin() * scale);
        }
    }
    top_singular_value(&block)
}

/// min(1, sqrt(|minus| |plus| / N)).
pub fn trivial_bound(n: usize, minus: usize, plus: usize) -> f64 {
    ((minus as f64 * plus as f64) / n as f64).sqrt().min(1.0)
}

/// One measured scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FupPoint {
    pub k: usize,
    pub n: usize,
    pub h: f64,
    pub size_minus: usize,
    pub size_plus: usize,
    pub norm: f64,
    pub trivial_bound: f64,
}

/// Norms over a family of torus sizes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FupExperiment {
    pub set_minus: FractalSetSpec,
    pub set_plus: FractalSetSpec,
    pub points: Vec<FupPoint>,
    pub gamma: Option<GateExponents>,
    pub fit: Option<FupFit>,
}

impl FupExperiment {
    /// Measures both sets on Z_N for each `(k, N)`; scales run in parallel.
    pub fn run(set_minus: FractalSetSpec, set_plus: FractalSetSpec, sizes: &[(usize, usize)]) -> Result<Self> {
        let points = sizes
            .par_iter()
            .map(|&(k, n)| {
                let a = set_minus.realize(n)?;
                let b = set_plus.realize(n)?;
                let norm = fup_norm(n, &a, &b)?;
                Ok(FupPoint {
                    k,
                    n,
                    h: 1.0 / n as f64,
                    size_minus: a.len(),
                    size_plus: b.len(),
                    norm,
                    trivial_bound: trivial_bound(n, a.len(), b.len()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            set_minus,
            set_plus,
            points,
            gamma: None,
            fit: None,
        })
    }

    pub fn fit(&mut self) -> Result<FupFit> {
        let fit = fit_fup_exponent(&self.points)?;
        self.fit = Some(fit);
        Ok(fit)
    }
}

/// Full-depth Cantor set `alphabet` in base L on Z_{L^k}, for each k in `ks`.
pub fn cantor_fup_experiment(base: usize, alphabet: &[usize], ks: &[usize]) -> Result<FupExperiment> {
    let sizes: Vec<(usize, usize)> = ks.iter().map(|&k| (k, base.pow(k as u32))).collect();
    let mut points = Vec::with_capacity(ks.len());
    for &(k, n) in &sizes {
        let spec = FractalSetSpec::cantor(base, alphabet, k);
        let exp = FupExperiment::run(spec.clone(), spec, &[(k, n)])?;
        points.extend(exp.points);
    }
    let spec = FractalSetSpec::cantor(base, alphabet, 0);
    Ok(FupExperiment {
        set_minus: spec.clone(),
        set_plus: spec,
        points,
        gamma: None,
        fit: None,
    })
}

/// Fitted decay `norm ~ C h^beta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FupFit {
    pub beta: f64,
    pub log_c: f64,
    /// Two standard errors of the slope.
    pub band: f64,
    pub points_used: usize,
}

/// Fits `beta` after discarding the two coarsest scales, keeping at least three points.
pub fn fit_fup_exponent(points: &[FupPoint]) -> Result<FupFit> {
    if points.len() < 4 {
        return Err(LabError::InsufficientScales {
            needed: 4,
            got: points.len(),
        });
    }
    let mut pts: Vec<&FupPoint> = points.iter().collect();
    pts.sort_by(|a, b| b.h.total_cmp(&a.h));
    let drop = 2.min(pts.len() - 3);
    let hs: Vec<f64> = pts[drop..].iter().map(|p| p.h).collect();
    let norms: Vec<f64> = pts[drop..].iter().map(|p| p.norm).collect();
    fit_exponent(&hs, &norms)
}

/// Least-squares slope of log norm against log h.
pub fn fit_exponent(hs: &[f64], norms: &[f64]) -> Result<FupFit> {
    if hs.len() != norms.len() {
        return Err(LabError::Invalid("scale and norm lists differ in length".into()));
    }
    let pts: Vec<(f64, f64)> = hs
        .iter()
        .zip(norms)
        .filter(|(h, v)| **h > 0.0 && **v > 0.0)
        .map(|(h, v)| (h.ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(LabError::InsufficientScales {
            needed: 3,
            got: pts.len(),
        });
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx <= 0.0 {
        return Err(LabError::Invalid("all scales coincide".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let beta = sxy / sxx;
    let log_c = my - beta * mx;
    let ssr: f64 = pts.iter().map(|p| (p.1 - log_c - beta * p.0).powi(2)).sum();
    let se = (ssr / (m - 2.0) / sxx).sqrt();
    Ok(FupFit {
        beta,
        log_c,
        band: 2.0 * se,
        points_used: pts.len(),
    })
}

/// Scale exponents of the two sets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateExponents {
    pub gamma0_plus: f64,
    pub gamma0_minus: f64,
    pub gamma1_plus: f64,
    pub gamma1_minus: f64,
}

/// gamma = min(g0+, 1 - g1-) - max(g1+, 1 - g0-), provided g1+ + g1- < 1 < g0+ + g0-.
pub fn scale_gate(g: GateExponents) -> Result<f64> {
    let ok = |lo: f64, hi: f64| (0.0..=1.0).contains(&lo) && (0.0..=1.0).contains(&hi) && lo < hi;
    if !ok(g.gamma1_plus, g.gamma0_plus) || !ok(g.gamma1_minus, g.gamma0_minus) {
        return Err(LabError::Invalid(format!("need 0 <= gamma1 < gamma0 <= 1, got {g:?}")));
    }
    let upper = g.gamma1_plus + g.gamma1_minus;
    if upper >= 1.0 {
        return Err(LabError::ScaleGate(format!("upper condition gamma1+ + gamma1- = {upper} is not < 1")));
    }
    let lower = g.gamma0_plus + g.gamma0_minus;
    if lower <= 1.0 {
        return Err(LabError::ScaleGate(format!("lower condition gamma0+ + gamma0- = {lower} is not > 1")));
    }
    Ok(g.gamma0_plus.min(1.0 - g.gamma1_minus) - g.gamma1_plus.max(1.0 - g.gamma0_minus))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gate(g0p: f64, g0m: f64, g1p: f64, g1m: f64) -> Result<f64> {
        scale_gate(GateExponents {
            gamma0_plus: g0p,
            gamma0_minus: g0m,
            gamma1_plus: g1p,
            gamma1_minus: g1m,
        })
    }

    #[test]
    fn full_torus_has_norm_one() {
        let all: Vec<usize> = (0..64).collect();
        assert!((fup_norm(64, &all, &all).unwrap() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn singletons_give_inverse_root() {
        let v = fup_norm(81, &[5], &[17]).unwrap();
        assert!((v - 1.0 / 9.0).abs() < 1e-12);
    }

    #[test]
    fn empty_set_gives_zero() {
        assert_eq!(fup_norm(16, &[], &[1, 2]).unwrap(), 0.0);
    }

    #[test]
    fn cantor_norms_decay() {
        let exp = cantor_fup_experiment(3, &[0, 2], &[3, 4, 5, 6, 7]).unwrap();
        for p in &exp.points {
            assert!(p.norm <= p.trivial_bound + 1e-12);
            if p.k >= 4 {
                assert!(p.norm < p.trivial_bound);
            }
        }
        let fit = fit_fup_exponent(&exp.points).unwrap();
        assert!(fit.beta > 0.01, "beta {}", fit.beta);
    }

    #[test]
    fn critical_intervals_have_no_gain() {
        let pts: Vec<FupPoint> = [64usize, 256, 1024, 4096]
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let r = 0.5 / (n as f64).sqrt();
                let spec = FractalSetSpec::Intervals {
                    intervals: vec![(-r, r)],
                };
                let exp = FupExperiment::run(spec.clone(), spec, &[(k, n)]).unwrap();
                exp.points[0]
            })
            .collect();
        let hs: Vec<f64> = pts.iter().map(|p| p.h).collect();
        let ns: Vec<f64> = pts.iter().map(|p| p.norm).collect();
        let fit = fit_exponent(&hs, &ns).unwrap();
        assert!(fit.beta.abs() < 0.05, "beta {}", fit.beta);
    }

    #[test]
    fn fit_requires_four_scales() {
        let exp = cantor_fup_experiment(3, &[0, 2], &[2, 3, 4]).unwrap();
        assert!(matches!(
            fit_fup_exponent(&exp.points),
            Err(LabError::InsufficientScales { needed: 4, got: 3 })
        ));
    }

    #[test]
    fn gate_examples() {
        assert!((gate(0.875, 0.25, 0.0, 0.0).unwrap() - 0.125).abs() < 1e-15);
        match gate(0.5, 0.5, 0.0, 0.0) {
            Err(LabError::ScaleGate(m)) => assert!(m.contains("lower")),
            other => panic!("{other:?}"),
        }
        match gate(0.9, 0.9, 0.6, 0.6) {
            Err(LabError::ScaleGate(m)) => assert!(m.contains("upper")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(gate(0.3, 0.9, 0.4, 0.0), Err(LabError::Invalid(_))));
    }
}
