//! Box counting and the unstable Cantor trace of disk billiards.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{least_squares, DimensionMethod, DimensionReport, IntervalSet};
use crate::classical::orbits::forward_depth;
use crate::classical::OpenMapSystem;
use crate::error::{LabError, Result};
use crate::phase::{normalize, PhasePoint};

/// A bounded subset of the line to be box counted.
pub enum BoxInput<'a> {
    Intervals(&'a IntervalSet),
    Points(&'a [f64]),
    /// Membership sampled on a grid of spacing `resolution` over [lo, hi].
    Membership {
        contains: &'a (dyn Fn(f64) -> bool + Sync),
        lo: f64,
        hi: f64,
        resolution: f64,
    },
}

impl BoxInput<'_> {
    /// Number of half-open boxes [kε, (k+1)ε) meeting the set.
    pub fn count(&self, eps: f64) -> usize {
        match self {
            BoxInput::Intervals(set) => set.box_count(eps),
            BoxInput::Points(pts) => count_points(pts.iter().copied(), eps),
            BoxInput::Membership {
                contains,
                lo,
                hi,
                resolution,
            } => {
                let n = ((hi - lo) / resolution).ceil() as usize + 1;
                let pts: Vec<f64> = (0..n)
                    .into_par_iter()
                    .map(|k| lo + k as f64 * resolution)
                    .filter(|&x| contains(x))
                    .collect();
                count_points(pts.into_iter(), eps)
            }
        }
    }
}

fn count_points(pts: impl Iterator<Item = f64>, eps: f64) -> usize {
    pts.map(|x| (x / eps + 1e-9).floor() as i64).collect::<BTreeSet<_>>().len()
}

/// Box dimension over dyadic scales eps_max·2^{-k} >= eps_min.
pub fn box_dimension(input: &BoxInput, eps_min: f64, eps_max: f64) -> Result<DimensionReport> {
    box_dimension_base(input, eps_min, eps_max, 2.0)
}

/// Least-squares slope of log N(ε) against -log ε over ε = eps_max·base^{-k} >= eps_min.
pub fn box_dimension_base(input: &BoxInput, eps_min: f64, eps_max: f64, base: f64) -> Result<DimensionReport> {
    if !(eps_min > 0.0 && eps_min < eps_max) || base <= 1.0 {
        return Err(LabError::Invalid(format!(
            "need 0 < eps_min < eps_max and base > 1, got {eps_min}, {eps_max}, {base}"
        )));
    }
    let mut scales = Vec::new();
    let mut eps = eps_max;
    while eps >= eps_min * (1.0 - 1e-12) {
        scales.push(eps);
        eps /= base;
    }
    if scales.len() < 4 {
        return Err(LabError::InsufficientScales {
            needed: 4,
            got: scales.len(),
        });
    }
    let counts: Vec<usize> = scales.iter().map(|&e| input.count(e)).collect();
    if counts.iter().any(|&c| c == 0) {
        return Err(LabError::Invalid("empty set at some scale".into()));
    }
    let pts: Vec<(f64, f64)> = scales
        .iter()
        .zip(&counts)
        .map(|(e, c)| (-e.ln(), (*c as f64).ln()))
        .collect();
    let (slope, _) = least_squares(&pts);
    let delta = slope.clamp(0.0, 1.0);
    let constant_c = scales
        .iter()
        .zip(&counts)
        .map(|(e, c)| *c as f64 * e.powf(delta))
        .fold(0.0, f64::max);
    Ok(DimensionReport {
        delta,
        constant_c,
        epsilon0: eps_max,
        method: DimensionMethod::BoxCount,
        scales,
        counts,
        trapped_dimension: None,
    })
}

/// Parameters of the forward-trapped trace on a line of fixed arclength.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceConfig {
    pub disk: usize,
    /// Local arclength; `None` faces the centroid of the other disks.
    pub s_local: Option<f64>,
    pub depth: usize,
    pub samples: usize,
}

impl Default for TraceConfig {
    fn default() -> Self {
        Self {
            disk: 0,
            s_local: None,
            depth: 10,
            samples: 512,
        }
    }
}

/// Values of η on the line s = const whose orbits survive `depth` bounces.
///
/// Refines level by level: each surviving interval is sampled and the
/// endpoints of surviving runs are located by bisection.
pub fn unstable_trace(sys: &OpenMapSystem, cfg: &TraceConfig) -> Result<IntervalSet> {
    let geom = sys
        .disks
        .as_ref()
        .ok_or_else(|| LabError::Invalid("unstable trace needs a disk system".into()))?;
    if cfg.disk >= geom.len() || cfg.samples < 8 || cfg.depth == 0 {
        return Err(LabError::Invalid("bad trace configuration".into()));
    }
    let j = cfg.disk;
    let s_local = match cfg.s_local {
        Some(s) => s,
        None => {
            let k = geom.len() as f64 - 1.0;
            let mut c = [0.0, 0.0];
            for (i, ci) in geom.centers.iter().enumerate() {
                if i != j {
                    c[0] += ci[0] / k;
                    c[1] += ci[1] / k;
                }
            }
            let cj = geom.centers[j];
            geom.arclength_of(j, normalize([c[0] - cj[0], c[1] - cj[1]]))
        }
    };
    let x = geom.offsets[j] + s_local;
    let survives = |eta: f64, n: usize| forward_depth(sys, &PhasePoint::new(x, eta), n) >= n;
    let mut level = vec![(-1.0 + 1e-12, 1.0 - 1e-12)];
    for n in 1..=cfg.depth {
        level = level
            .par_iter()
            .flat_map_iter(|&(a, b)| refine(a, b, n, cfg.samples, &survives))
            .collect();
        if level.is_empty() {
            break;
        }
    }
    Ok(IntervalSet::new(level))
}

fn refine(a: f64, b: f64, n: usize, samples: usize, survives: &(impl Fn(f64, usize) -> bool + Sync)) -> Vec<(f64, f64)> {
    let pts: Vec<f64> = (0..samples).map(|k| a + (b - a) * k as f64 / (samples - 1) as f64).collect();
    let ok: Vec<bool> = pts.iter().map(|&e| survives(e, n)).collect();
    let edge = |mut good: f64, mut bad: f64| {
        for _ in 0..60 {
            let mid = 0.5 * (good + bad);
            if survives(mid, n) {
                good = mid;
            } else {
                bad = mid;
            }
        }
        good
    };
    let mut out = Vec::new();
    let mut k = 0;
    while k < samples {
        if !ok[k] {
            k += 1;
            continue;
        }
        let start = k;
        while k + 1 < samples && ok[k + 1] {
            k += 1;
        }
        let lo = if start == 0 { pts[0] } else { edge(pts[start], pts[start - 1]) };
        let hi = if k == samples - 1 { pts[k] } else { edge(pts[k], pts[k + 1]) };
        out.push((lo, hi));
        k += 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_triadic_counts_are_exact() {
        let set = IntervalSet::cantor(3, &[0, 2], 10);
        let r = box_dimension_base(&BoxInput::Intervals(&set), 3f64.powi(-8), 1.0 / 3.0, 3.0).unwrap();
        for (k, c) in r.counts.iter().enumerate() {
            assert_eq!(*c, 1 << (k + 1));
        }
        assert!((r.delta - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
    }

    #[test]
    fn single_interval_has_slope_one() {
        let set = IntervalSet::new(vec![(0.0, 1.0)]);
        let r = box_dimension(&BoxInput::Intervals(&set), 1e-4, 0.1).unwrap();
        assert!((r.delta - 1.0).abs() < 0.02);
        let inside = |x: f64| (0.0..=1.0).contains(&x);
        let r = box_dimension(
            &BoxInput::Membership {
                contains: &inside,
                lo: -0.5,
                hi: 1.5,
                resolution: 1e-5,
            },
            1e-3,
            0.1,
        )
        .unwrap();
        assert!((r.delta - 1.0).abs() < 0.02);
    }

    #[test]
    fn too_few_scales() {
        let set = IntervalSet::new(vec![(0.0, 1.0)]);
        let err = box_dimension(&BoxInput::Intervals(&set), 0.05, 0.1).unwrap_err();
        assert!(matches!(err, LabError::InsufficientScales { needed: 4, got: 2 }));
    }

    #[test]
    fn points_box_count() {
        let pts = [0.0, 0.01, 0.5, 0.99];
        assert_eq!(BoxInput::Points(&pts).count(0.1), 3);
    }
}
