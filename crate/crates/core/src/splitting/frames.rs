//! Frames (v_u, v_s) and cutoffs χ for the graph transform.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::grid::SplitGrid;
use crate::classical::{orbits, OpenMapSystem, PieceKind};
use crate::cutoff::{Plateau, Profile};
use crate::error::{LabError, Result};
use crate::phase::{normalize, Mat2, PhasePoint};

/// Unit vector fields v_u, v_s approximating the unstable and stable directions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum FrameField {
    Constant { vu: [f64; 2], vs: [f64; 2] },
    Sampled { grid: SplitGrid, vu: Vec<[f64; 2]>, vs: Vec<[f64; 2]> },
}

impl FrameField {
    /// v_u along x, v_s along xi.
    pub fn canonical() -> Self {
        FrameField::Constant { vu: [1.0, 0.0], vs: [0.0, 1.0] }
    }

    pub fn constant(vu: [f64; 2], vs: [f64; 2]) -> Self {
        FrameField::Constant {
            vu: normalize(vu),
            vs: normalize(vs),
        }
    }

    /// Constant frame from `depth` steps of power iteration of dF at p.
    pub fn power_iteration(sys: &OpenMapSystem, p: &PhasePoint, depth: usize) -> Result<Self> {
        let d = sys.differential(p).ok_or(LabError::Escaped { step: 0 })?;
        let inv = d.inverse().ok_or_else(|| LabError::Numerical("singular differential".into()))?;
        let mut vu = [1.0, 0.0];
        let mut vs = [0.0, 1.0];
        for _ in 0..depth {
            vu = normalize(d.apply(vu));
            vs = normalize(inv.apply(vs));
        }
        Ok(Self::constant(vu, vs))
    }

    /// Frames interpolated from E_u, E_s at the nearest trapped sample, then box-mollified.
    pub fn from_trapped_samples(
        sys: &OpenMapSystem,
        grid: SplitGrid,
        samples: &[PhasePoint],
        smoothing_passes: usize,
    ) -> Result<Self> {
        let dirs: Vec<(PhasePoint, [f64; 2], [f64; 2])> = samples
            .iter()
            .filter_map(|p| {
                let u = orbits::unstable_direction(sys, p).ok()?;
                let s = orbits::stable_direction(sys, p).ok()?;
                Some((*p, u, s))
            })
            .collect();
        let Some(&(_, ref_u, ref_s)) = dirs.first() else {
            return Err(LabError::Numerical("no trapped samples with invariant directions".into()));
        };
        let orient = |v: [f64; 2], r: [f64; 2]| {
            if v[0] * r[0] + v[1] * r[1] < 0.0 {
                [-v[0], -v[1]]
            } else {
                v
            }
        };
        let mut vu = Vec::with_capacity(grid.len());
        let mut vs = Vec::with_capacity(grid.len());
        for k in 0..grid.len() {
            let p = grid.node(k);
            let dist = |q: &PhasePoint| {
                let d = sys.displacement(q, &p);
                d[0].hypot(d[1])
            };
            let (_, u, s) = dirs.iter().min_by(|a, b| dist(&a.0).total_cmp(&dist(&b.0))).unwrap();
            vu.push(orient(*u, ref_u));
            vs.push(orient(*s, ref_s));
        }
        for _ in 0..smoothing_passes {
            vu = mollify(&grid, &vu);
            vs = mollify(&grid, &vs);
        }
        Ok(FrameField::Sampled { grid, vu, vs })
    }

    /// (v_u, v_s) at p.
    pub fn at(&self, p: &PhasePoint) -> Option<([f64; 2], [f64; 2])> {
        match self {
            FrameField::Constant { vu, vs } => Some((*vu, *vs)),
            FrameField::Sampled { grid, vu, vs } => {
                let u = grid.interpolate2(vu, p)?;
                let s = grid.interpolate2(vs, p)?;
                Some((normalize(u), normalize(s)))
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, FrameField::Constant { .. })
    }

    /// Change of basis P(p) = [v_u | v_s].
    pub fn basis(&self, p: &PhasePoint) -> Option<Mat2> {
        let (u, s) = self.at(p)?;
        Some(Mat2::from_cols(u, s))
    }
}

fn mollify(grid: &SplitGrid, v: &[[f64; 2]]) -> Vec<[f64; 2]> {
    (0..grid.len())
        .map(|k| {
            let (b, i, j) = grid.unravel(k);
            let g = &grid.blocks[b];
            let mut acc = [0.0; 2];
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ii, jj) = (i as i64 + di, j as i64 + dj);
                    let (ii, jj) = if g.periodic {
                        (ii.rem_euclid(g.nx as i64), jj.rem_euclid(g.nxi as i64))
                    } else {
                        (ii.clamp(0, g.nx as i64 - 1), jj.clamp(0, g.nxi as i64 - 1))
                    };
                    let w = v[grid.index(b, ii as usize, jj as usize)];
                    acc[0] += w[0];
                    acc[1] += w[1];
                }
            }
            normalize(acc)
        })
        .collect()
}

/// Smooth cutoff χ equal to 1 near the trapped set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SplitCutoff {
    One,
    /// χ(x, xi) = f(x) g(xi).
    Product { x: Profile, xi: Profile },
    /// χ(x, xi) = f(x) g(xi - shear * sin(2 pi x) / (2 pi)), g periodic.
    Sheared { x: Profile, rows: Profile, shear: f64 },
    /// 1 - Π(1 - b_k) with b_k = 1 on the ε₀ sup-ball around sample k and 0 outside the 2ε₀ ball.
    Samples { centers: Vec<PhasePoint>, eps0: f64 },
}

impl SplitCutoff {
    /// Default cutoff for a system with partition radius ε₀.
    pub fn default_for(sys: &OpenMapSystem, samples: &[PhasePoint]) -> Self {
        let eps0 = sys.meta.epsilon0;
        match sys.pieces.first().map(|p| &p.kind) {
            Some(PieceKind::TorusLinear { .. }) => SplitCutoff::One,
            Some(PieceKind::Linear { .. }) => SplitCutoff::Product {
                x: Profile::new(vec![Plateau::centered(0.0, eps0, 2.0 * eps0)], false),
                xi: Profile::new(vec![Plateau::centered(0.0, eps0, 2.0 * eps0)], false),
            },
            Some(PieceKind::Baker { shear, .. }) => {
                let (base, branches) = sys.baker_branches().expect("baker system");
                let l = base as f64;
                let c = 1.0 / (12.0 * l);
                let rows = branches
                    .iter()
                    .map(|&j| Plateau::new(j as f64 / l + 2.0 * c, (j + 1) as f64 / l - 2.0 * c, c))
                    .collect();
                SplitCutoff::Sheared {
                    x: Profile::new(vec![Plateau::new(2.0 * c, 1.0 - 2.0 * c, c)], false),
                    rows: Profile::new(rows, true),
                    shear: *shear,
                }
            }
            _ => {
                let mut centers = samples.to_vec();
                centers.sort_by(|a, b| a.x.total_cmp(&b.x));
                SplitCutoff::Samples { centers, eps0 }
            }
        }
    }

    /// Value and gradient of χ at p.
    pub fn eval(&self, p: &PhasePoint) -> (f64, [f64; 2]) {
        match self {
            SplitCutoff::One => (1.0, [0.0, 0.0]),
            SplitCutoff::Product { x, xi } => {
                let (fx, gx) = (x.value(p.x), xi.value(p.xi));
                (fx * gx, [x.deriv(p.x) * gx, fx * xi.deriv(p.xi)])
            }
            SplitCutoff::Sheared { x, rows, shear } => {
                let psi = (2.0 * PI * p.x).sin() / (2.0 * PI);
                let dpsi = (2.0 * PI * p.x).cos();
                let t = (p.xi - shear * psi).rem_euclid(1.0);
                let (fx, gt) = (x.value(p.x), rows.value(t));
                let dgt = rows.deriv(t);
                (fx * gt, [x.deriv(p.x) * gt - fx * dgt * shear * dpsi, fx * dgt])
            }
            SplitCutoff::Samples { centers, eps0 } => {
                let lo = centers.partition_point(|c| c.x < p.x - 2.0 * eps0);
                let mut prod = 1.0;
                let mut terms: Vec<(f64, [f64; 2])> = Vec::new();
                for c in &centers[lo..] {
                    if c.x > p.x + 2.0 * eps0 {
                        break;
                    }
                    if (c.xi - p.xi).abs() >= 2.0 * eps0 {
                        continue;
                    }
                    let px = Plateau::centered(c.x, *eps0, 2.0 * eps0);
                    let pxi = Plateau::centered(c.xi, *eps0, 2.0 * eps0);
                    let (bx, bxi) = (px.value(p.x), pxi.value(p.xi));
                    let b = bx * bxi;
                    if b > 0.0 {
                        terms.push((b, [px.deriv(p.x) * bxi, bx * pxi.deriv(p.xi)]));
                        prod *= 1.0 - b;
                    }
                }
                if prod == 0.0 {
                    return (1.0, [0.0, 0.0]);
                }
                // d(1 - Π(1 - b_k)) = Σ db_k Π_{m≠k}(1 - b_m)
                let mut g = [0.0; 2];
                for (b, db) in &terms {
                    let rest = prod / (1.0 - b);
                    g[0] += db[0] * rest;
                    g[1] += db[1] * rest;
                }
                (1.0 - prod, g)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_frames_for_cat_map() {
        let sys = OpenMapSystem::cat_map([[2, 1], [1, 1]]).unwrap();
        let f = FrameField::power_iteration(&sys, &PhasePoint::new(0.0, 0.0), 3).unwrap();
        let (u, s) = f.at(&PhasePoint::new(0.3, 0.3)).unwrap();
        assert!((u[1] / u[0] - 8.0 / 13.0).abs() < 1e-12);
        assert!((s[1] / s[0] + 13.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn sample_cutoff_gradient_matches_differences() {
        let centers = vec![PhasePoint::new(0.0, 0.0), PhasePoint::new(0.15, 0.05)];
        let c = SplitCutoff::Samples { centers, eps0: 0.1 };
        assert_eq!(c.eval(&PhasePoint::new(0.05, 0.0)).0, 1.0);
        assert_eq!(c.eval(&PhasePoint::new(0.6, 0.0)).0, 0.0);
        let p = PhasePoint::new(0.27, 0.17);
        let h = 1e-6;
        let (_, g) = c.eval(&p);
        let fx = (c.eval(&p.add([h, 0.0])).0 - c.eval(&p.add([-h, 0.0])).0) / (2.0 * h);
        let fxi = (c.eval(&p.add([0.0, h])).0 - c.eval(&p.add([0.0, -h])).0) / (2.0 * h);
        assert!((g[0] - fx).abs() < 1e-5 && (g[1] - fxi).abs() < 1e-5);
    }

    #[test]
    fn sheared_cutoff_gradient_matches_differences() {
        let sys = OpenMapSystem::sheared_baker(3, &[0, 2], 0.1).unwrap();
        let c = SplitCutoff::default_for(&sys, &[]);
        let h = 1e-6;
        for p in [PhasePoint::new(0.05, 0.04), PhasePoint::new(0.5, 0.3), PhasePoint::new(0.97, 0.69)] {
            let (_, g) = c.eval(&p);
            let fx = (c.eval(&p.add([h, 0.0])).0 - c.eval(&p.add([-h, 0.0])).0) / (2.0 * h);
            let fxi = (c.eval(&p.add([0.0, h])).0 - c.eval(&p.add([0.0, -h])).0) / (2.0 * h);
            assert!((g[0] - fx).abs() < 1e-4 && (g[1] - fxi).abs() < 1e-4, "{p:?}");
        }
    }
}
