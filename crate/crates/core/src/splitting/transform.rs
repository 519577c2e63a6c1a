//! The graph transform T on slope fields and its fiber companion G_λ.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frames::{FrameField, SplitCutoff};
use super::grid::{CovectorField, SlopeField, SplitGrid};
use crate::classical::OpenMapSystem;
use crate::error::{LabError, Result};
use crate::phase::{Mat2, PhasePoint};

/// Which invariant direction is extended.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Uses F^{-1} to pull back, frames (v_u, v_s).
    Unstable,
    /// Runs the same machinery on F^{-1}, frames (v_s, v_u).
    Stable,
}

/// Everything T and G_λ need at one target point ρ'.
#[derive(Debug, Clone, Copy)]
pub struct LocalData {
    pub chi: f64,
    pub dchi: [f64; 2],
    /// Preimage ρ of ρ' under the map being transformed.
    pub rho: PhasePoint,
    /// Coefficients (a b; c d) of the differential in the frame.
    pub k: Mat2,
    /// Derivatives of the coefficients with respect to x and xi at ρ.
    pub dk: [Mat2; 2],
    /// Inverse differential at ρ, i.e. the differential of ρ' ↦ ρ.
    pub minv: Mat2,
}

/// Measured η-bunching of the frame coefficients over supp χ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaReport {
    pub eta_min: f64,
    pub eta_max: f64,
    pub eta: f64,
    pub kappa: f64,
    pub sup_b: f64,
    pub sup_c: f64,
    pub sup_d: f64,
    pub inf_a: f64,
    /// Nodes where χ > 0 but the inverse map is undefined; χ is set to 0 there.
    pub clipped: usize,
}

/// Convergence diagnostics of a fixed-point iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub factors: Vec<f64>,
    pub residual: f64,
    pub kappa: f64,
    pub eta: f64,
    /// M = 2 C₁ / (1 - ν₁) for derivative solves.
    pub derivative_bound: Option<f64>,
}

/// κ_η = (1 - 3η)/(1 + η) + η(1 - η)/(1 + η)².
pub fn kappa_eta(eta: f64) -> f64 {
    (1.0 - 3.0 * eta) / (1.0 + eta) + eta * (1.0 - eta) / ((1.0 + eta) * (1.0 + eta))
}

/// t(ρ, λ) = (c + λd)/(a + λb).
pub fn slope_map(k: &Mat2, lam: f64) -> f64 {
    let [[a, b], [c, d]] = k.0;
    (c + lam * d) / (a + lam * b)
}

/// ∂_λ t(ρ, λ).
pub fn slope_map_dlambda(k: &Mat2, lam: f64) -> f64 {
    let [[a, b], [c, d]] = k.0;
    let den = a + lam * b;
    d / den - b * (lam * d + c) / (den * den)
}

/// d_ρ t(ρ, λ) at fixed λ.
pub fn slope_map_drho(k: &Mat2, dk: &[Mat2; 2], lam: f64) -> [f64; 2] {
    let [[a, b], [c, d]] = k.0;
    let num = c + lam * d;
    let den = a + lam * b;
    let mut out = [0.0; 2];
    for (o, m) in out.iter_mut().zip(dk) {
        let [[da, db], [dc, dd]] = m.0;
        *o = ((dc + lam * dd) * den - num * (da + lam * db)) / (den * den);
    }
    out
}

/// Graph-transform setup: grid, frames, cutoff and per-node pullback data.
pub struct SplittingProblem<'a> {
    pub sys: &'a OpenMapSystem,
    pub grid: SplitGrid,
    pub frames: FrameField,
    pub cutoff: SplitCutoff,
    pub direction: Direction,
    pub eta: EtaReport,
    nodes: Vec<Option<LocalData>>,
    chi: Vec<f64>,
}

impl<'a> SplittingProblem<'a> {
    /// Precomputes node data and checks the η-bunching bounds.
    pub fn new(
        sys: &'a OpenMapSystem,
        grid: SplitGrid,
        frames: FrameField,
        cutoff: SplitCutoff,
        direction: Direction,
    ) -> Result<Self> {
        let mut prob = SplittingProblem {
            sys,
            grid,
            frames,
            cutoff,
            direction,
            eta: EtaReport {
                eta_min: 0.0,
                eta_max: 0.0,
                eta: 0.0,
                kappa: 1.0,
                sup_b: 0.0,
                sup_c: 0.0,
                sup_d: 0.0,
                inf_a: f64::INFINITY,
                clipped: 0,
            },
            nodes: Vec::new(),
            chi: Vec::new(),
        };
        let pts = prob.grid.nodes();
        let raw: Vec<(f64, Option<LocalData>)> = pts
            .par_iter()
            .map(|p| {
                let chi = prob.cutoff.eval(p).0;
                (chi, prob.local_data(p))
            })
            .collect();
        let mut worst = (0.0f64, PhasePoint::new(0.0, 0.0));
        let mut rep = prob.eta;
        for (k, (chi, data)) in raw.iter().enumerate() {
            match data {
                None if *chi > 0.0 => rep.clipped += 1,
                Some(d) if d.chi > 0.0 => {
                    let [[a, b], [c, dd]] = d.k.0;
                    rep.sup_b = rep.sup_b.max(b.abs());
                    rep.sup_c = rep.sup_c.max(c.abs());
                    rep.sup_d = rep.sup_d.max(dd.abs());
                    rep.inf_a = rep.inf_a.min(a.abs());
                    if b.abs().max(c.abs()) > worst.0 {
                        worst = (b.abs().max(c.abs()), pts[k]);
                    }
                }
                _ => {}
            }
        }
        if rep.inf_a.is_infinite() {
            return Err(LabError::Config("cutoff χ vanishes on every grid node".into()));
        }
        rep.eta_min = rep.sup_b.max(rep.sup_c) / 2.0;
        rep.eta_max = ((1.0 - rep.sup_d) / 3.0).min((rep.inf_a - 1.0) / 3.0);
        if rep.eta_min > rep.eta_max || rep.eta_max <= 0.0 {
            return Err(LabError::EtaBunching {
                eta_min: rep.eta_min,
                eta_max: rep.eta_max,
                x: worst.1.x,
                xi: worst.1.xi,
            });
        }
        rep.eta = rep.eta_max;
        rep.kappa = kappa_eta(rep.eta_max);
        prob.eta = rep;
        prob.chi = raw.iter().map(|(_, d)| d.map_or(0.0, |d| d.chi)).collect();
        prob.nodes = raw.into_iter().map(|(_, d)| d.filter(|d| d.chi > 0.0 || d.dchi != [0.0, 0.0])).collect();
        Ok(prob)
    }

    fn basis(&self, p: &PhasePoint) -> Option<Mat2> {
        let (u, s) = self.frames.at(p)?;
        Some(match self.direction {
            Direction::Unstable => Mat2::from_cols(u, s),
            Direction::Stable => Mat2::from_cols(s, u),
        })
    }

    /// Image of ρ under the transformed map and its differential there.
    fn push(&self, rho: &PhasePoint) -> Option<(PhasePoint, Mat2)> {
        match self.direction {
            Direction::Unstable => {
                let (i, img) = self.sys.forward(rho)?;
                Some((img, self.sys.piece_differential(i, rho)?))
            }
            Direction::Stable => {
                let (i, pre) = self.sys.backward(rho)?;
                Some((pre, self.sys.piece_differential(i, &pre)?.inverse()?))
            }
        }
    }

    /// Frame coefficients K(ρ) = P(image)^{-1} M(ρ) P(ρ).
    pub fn coefficients(&self, rho: &PhasePoint) -> Option<Mat2> {
        let (img, m) = self.push(rho)?;
        let p_img = self.basis(&img)?.inverse()?;
        Some(p_img.mul(&m).mul(&self.basis(rho)?))
    }

    fn coefficient_derivative(&self, rho: &PhasePoint) -> [Mat2; 2] {
        if self.frames.is_constant() && self.direction == Direction::Unstable {
            if let (Some((i, _)), Some(p)) = (self.sys.forward(rho), self.basis(rho)) {
                if let (Some(dm), Some(pinv)) = (self.sys.piece_differential_derivative(i, rho), p.inverse()) {
                    return [pinv.mul(&dm[0]).mul(&p), pinv.mul(&dm[1]).mul(&p)];
                }
            }
        }
        let h = 1e-6;
        let zero = Mat2::new(0.0, 0.0, 0.0, 0.0);
        let mut out = [zero; 2];
        for (axis, o) in out.iter_mut().enumerate() {
            let mut e = [0.0; 2];
            e[axis] = h;
            let plus = self.coefficients(&rho.add(e));
            let minus = self.coefficients(&rho.add([-e[0], -e[1]]));
            let here = self.coefficients(rho);
            *o = match (plus, minus, here) {
                (Some(p), Some(m), _) => p.sub(&m).scale(0.5 / h),
                (Some(p), None, Some(c)) => p.sub(&c).scale(1.0 / h),
                (None, Some(m), Some(c)) => c.sub(&m).scale(1.0 / h),
                _ => zero,
            };
        }
        out
    }

    /// Pullback data at an arbitrary target point; `None` where χ is clipped or F^{-1} undefined.
    pub fn local_data(&self, p: &PhasePoint) -> Option<LocalData> {
        let (chi, dchi) = self.cutoff.eval(p);
        if chi == 0.0 && dchi == [0.0, 0.0] {
            return None;
        }
        let rho = match self.direction {
            Direction::Unstable => self.sys.backward(p)?.1,
            Direction::Stable => self.sys.forward(p)?.1,
        };
        let (_, m) = self.push(&rho)?;
        let k = self.coefficients(&rho)?;
        Some(LocalData {
            chi,
            dchi,
            rho,
            k,
            dk: self.coefficient_derivative(&rho),
            minv: m.inverse()?,
        })
    }

    /// Cutoff values at the grid nodes (0 where clipped).
    pub fn cutoff_values(&self) -> &[f64] {
        &self.chi
    }

    pub fn node_data(&self, k: usize) -> Option<&LocalData> {
        self.nodes[k].as_ref()
    }

    /// λ ≡ value on supp χ, 0 elsewhere.
    pub fn initial_field(&self, value: f64) -> SlopeField {
        SlopeField {
            grid: self.grid.clone(),
            values: self.chi.iter().map(|c| if *c > 0.0 { value } else { 0.0 }).collect(),
            cutoff: self.chi.clone(),
        }
    }

    /// (Tλ)(ρ') from pullback data and a slope evaluator.
    pub fn transform_with(&self, data: &LocalData, lam: f64) -> f64 {
        data.chi * slope_map(&data.k, lam)
    }

    /// (Tλ)(p) at an arbitrary point for a slope given as a function.
    pub fn transform_at(&self, lam: &dyn Fn(&PhasePoint) -> f64, p: &PhasePoint) -> f64 {
        match self.local_data(p) {
            Some(d) => self.transform_with(&d, lam(&d.rho)),
            None => 0.0,
        }
    }

    /// (G_λ α)(p) at an arbitrary point.
    pub fn fiber_at(
        &self,
        lam: &dyn Fn(&PhasePoint) -> f64,
        alpha: &dyn Fn(&PhasePoint) -> [f64; 2],
        p: &PhasePoint,
    ) -> [f64; 2] {
        match self.local_data(p) {
            Some(d) => self.fiber_with(&d, lam(&d.rho), alpha(&d.rho)),
            None => [0.0, 0.0],
        }
    }

    fn fiber_with(&self, d: &LocalData, lam: f64, alpha: [f64; 2]) -> [f64; 2] {
        let drho = slope_map_drho(&d.k, &d.dk, lam);
        let dl = slope_map_dlambda(&d.k, lam);
        let row = [drho[0] + dl * alpha[0], drho[1] + dl * alpha[1]];
        let pulled = d.minv.left_apply(row);
        let t = slope_map(&d.k, lam);
        [d.chi * pulled[0] + t * d.dchi[0], d.chi * pulled[1] + t * d.dchi[1]]
    }

    /// One application of T to a grid field.
    pub fn graph_transform_step(&self, lam: &SlopeField) -> Result<SlopeField> {
        if lam.sup_norm() > 1.0 + 1e-12 {
            return Err(LabError::Invalid(format!("slope field has sup norm {} > 1", lam.sup_norm())));
        }
        let values = self
            .nodes
            .par_iter()
            .map(|d| match d {
                Some(d) => self.transform_with(d, lam.eval(&d.rho).unwrap_or(0.0)),
                None => 0.0,
            })
            .collect();
        Ok(SlopeField {
            grid: self.grid.clone(),
            values,
            cutoff: self.chi.clone(),
        })
    }

    /// One application of G_λ to a grid covector field.
    pub fn fiber_derivative_step(&self, alpha: &CovectorField, lam: &SlopeField) -> CovectorField {
        let values = self
            .nodes
            .par_iter()
            .map(|d| match d {
                Some(d) => {
                    let l = lam.eval(&d.rho).unwrap_or(0.0);
                    let a = alpha.eval(&d.rho).unwrap_or([0.0, 0.0]);
                    self.fiber_with(d, l, a)
                }
                None => [0.0, 0.0],
            })
            .collect();
        CovectorField {
            grid: self.grid.clone(),
            values,
        }
    }

    /// Iterates T from λ ≡ 0 until ‖Tλ - λ‖_∞ ≤ tol.
    pub fn solve_slope(&self, tol: f64, max_iter: usize) -> Result<(SlopeField, SolveReport)> {
        let mut lam = self.initial_field(0.0);
        let mut factors = Vec::new();
        let mut prev_step: Option<f64> = None;
        let mut bad = 0;
        for it in 1..=max_iter {
            let next = self.graph_transform_step(&lam)?;
            let step = next.distance(&lam);
            if let Some(ps) = prev_step {
                if ps > 0.0 {
                    let f = step / ps;
                    factors.push(f);
                    bad = if f >= 1.0 { bad + 1 } else { 0 };
                    if bad >= 3 {
                        return Err(LabError::NonContraction { iteration: it, factors });
                    }
                }
            }
            lam = next;
            if step <= tol {
                return Ok((
                    lam,
                    SolveReport {
                        iterations: it,
                        factors,
                        residual: step,
                        kappa: self.eta.kappa,
                        eta: self.eta.eta,
                        derivative_bound: None,
                    },
                ));
            }
            prev_step = Some(step);
        }
        Err(LabError::Numerical(format!(
            "graph transform did not reach tolerance {tol} in {max_iter} iterations"
        )))
    }

    /// Iterates G_{λ_u} from α ≡ 0 until the update is below tol.
    pub fn solve_derivative(&self, lam: &SlopeField, tol: f64, max_iter: usize) -> Result<(CovectorField, SolveReport)> {
        let mut alpha = CovectorField::zeros(self.grid.clone());
        let mut factors = Vec::new();
        let mut prev_step: Option<f64> = None;
        let mut bad = 0;
        let mut c1 = 0.0;
        for it in 1..=max_iter {
            let next = self.fiber_derivative_step(&alpha, lam);
            if it == 1 {
                c1 = next.sup_norm();
            }
            let step = next.distance(&alpha);
            if let Some(ps) = prev_step {
                if ps > 0.0 {
                    let f = step / ps;
                    factors.push(f);
                    bad = if f >= 1.0 { bad + 1 } else { 0 };
                    if bad >= 3 {
                        return Err(LabError::NonContraction { iteration: it, factors });
                    }
                }
            }
            alpha = next;
            if step <= tol {
                let nu1 = factors.iter().cloned().fold(0.0f64, f64::max);
                return Ok((
                    alpha,
                    SolveReport {
                        iterations: it,
                        factors,
                        residual: step,
                        kappa: self.eta.kappa,
                        eta: self.eta.eta,
                        derivative_bound: (nu1 < 1.0).then(|| 2.0 * c1 / (1.0 - nu1)),
                    },
                ));
            }
            prev_step = Some(step);
        }
        Err(LabError::Numerical(format!(
            "fiber iteration did not reach tolerance {tol} in {max_iter} iterations"
        )))
    }

    /// Unit vector v_u + λ v_s (or v_s + λ v_u for the stable direction) at p.
    pub fn direction_at(&self, lam: f64, p: &PhasePoint) -> Option<[f64; 2]> {
        let b = self.basis(p)?;
        let v = b.apply([1.0, lam]);
        Some(crate::phase::normalize(v))
    }
}
