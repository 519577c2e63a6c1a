//! Fourier transforms, quantizations and the model and baker maps.

use std::f64::consts::PI;

use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::grid::{GridKind, GridSpec};
use super::operator::DenseOperator;
use crate::cutoff::{smooth_step, Plateau};
use crate::error::{LabError, Result};
use crate::linalg::{c64, top_singular_value, unitarity_defect, CMat};

/// Tolerance on the duality relation Δx Δξ N = 2πh.
const DUALITY_TOL: f64 = 1e-12;

fn cis(theta: f64) -> c64 {
    c64::new(theta.cos(), theta.sin())
}

fn exact_grid(grid: &GridSpec) -> bool {
    grid.duality_defect() <= DUALITY_TOL
}

/// F[k, j]: sample x_j to dual sample ξ_k.
pub fn fourier_entry(grid: &GridSpec, k: usize, j: usize) -> c64 {
    let n = grid.n;
    if exact_grid(grid) {
        let c = grid.center() as i128;
        let p = ((j as i128 - c) * (k as i128 - c)).rem_euclid(n as i128);
        cis(-2.0 * PI * p as f64 / n as f64) / (n as f64).sqrt()
    } else {
        let amp = (grid.dx * grid.dxi / (2.0 * PI * grid.h)).sqrt();
        cis(-grid.x(j) * grid.xi(k) / grid.h) * amp
    }
}

/// F_h u(ξ) = (2πh)^{-1/2} ∫ e^{-ixξ/h} u(x) dx on the grid; the DFT on the torus.
pub fn semiclassical_fourier(grid: &GridSpec) -> Result<DenseOperator> {
    let n = grid.n;
    let m = CMat::from_fn(n, n, |k, j| fourier_entry(grid, k, j));
    let label = match grid.kind {
        GridKind::Interval => format!("F_h(N={n}, h={:e})", grid.h),
        GridKind::Torus => format!("DFT(N={n})"),
    };
    let op = DenseOperator::new(m, *grid, label)?;
    if !exact_grid(grid) {
        let defect = unitarity_defect(&op.entries)?;
        if defect > super::operator::UNITARY_TOL {
            return Err(LabError::NonUnitary { defect });
        }
    }
    op.into_unitary()
}

/// v(x) -> sqrt(2) v(2x), linearly interpolated and zero outside the open box (-X, X).
pub fn scaling_operator(grid: &GridSpec) -> Result<DenseOperator> {
    if grid.kind != GridKind::Interval {
        return Err(LabError::Invalid("scaling operator needs an interval grid".into()));
    }
    let n = grid.n;
    let c = grid.center() as f64;
    let mut m = CMat::zeros(n, n);
    let s2 = 2f64.sqrt();
    for j in 0..n {
        let t = 2.0 * grid.x(j) / grid.dx + c;
        if t <= 0.0 || t > (n - 1) as f64 {
            continue;
        }
        let lo = t.floor();
        let w = t - lo;
        let lo = lo as usize;
        m[(j, lo)] += c64::new(s2 * (1.0 - w), 0.0);
        if w > 0.0 {
            m[(j, lo + 1)] += c64::new(s2 * w, 0.0);
        }
    }
    DenseOperator::new(m, *grid, "U")
}

/// F* 1(|ξ| < fraction · Ξ) F, the sharp low-pass projector.
pub fn low_pass(grid: &GridSpec, fraction: f64) -> Result<DenseOperator> {
    if !exact_grid(grid) {
        return Err(LabError::Invalid("low-pass needs a dual grid".into()));
    }
    let n = grid.n;
    let c = grid.center();
    let limit = fraction * grid.xi_half_width();
    let kept: Vec<i64> = (0..n)
        .filter(|&k| grid.xi(k).abs() < limit)
        .map(|k| k as i64 - c as i64)
        .collect();
    let kernel: Vec<c64> = (0..n)
        .into_par_iter()
        .map(|d| {
            let s: c64 = kept
                .iter()
                .map(|&m| cis(2.0 * PI * ((d as i64 * m).rem_euclid(n as i64)) as f64 / n as f64))
                .sum();
            s / n as f64
        })
        .collect();
    let m = CMat::from_fn(n, n, |a, b| kernel[(a + n - b) % n]);
    DenseOperator::new(m, *grid, format!("lowpass({fraction})"))
}

/// U after the half-band low-pass, so that doubling momenta does not alias.
pub fn anti_aliased_scaling(grid: &GridSpec) -> Result<DenseOperator> {
    let u = scaling_operator(grid)?;
    let p = low_pass(grid, 0.5)?;
    let n = grid.n;
    let mut m = CMat::zeros(n, n);
    // U has at most two entries per row
    for j in 0..n {
        for l in 0..n {
            let w = u.entries[(j, l)];
            if w != c64::new(0.0, 0.0) {
                for k in 0..n {
                    m[(j, k)] += w * p.entries[(l, k)];
                }
            }
        }
    }
    DenseOperator::new(m, *grid, "U_aa")
}

/// Left quantization K[j,l] = Δξ/(2πh) Σ_k χ(x_j, ξ_k) e^{i(x_j − x_l)ξ_k/h} Δx.
pub fn quantize_left(symbol: &(dyn Fn(f64, f64) -> f64 + Sync), grid: &GridSpec) -> Result<DenseOperator> {
    if !exact_grid(grid) {
        return Err(LabError::Invalid("left quantization needs a dual grid".into()));
    }
    let n = grid.n;
    let c = grid.center();
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let rows: Vec<Vec<c64>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let x = grid.x(j);
            let mut buf: Vec<c64> = (0..n).map(|k| c64::new(symbol(x, grid.xi(k)), 0.0)).collect();
            fft.process(&mut buf);
            (0..n)
                .map(|l| {
                    let d = (j + n - l) % n;
                    let phase = cis(-2.0 * PI * ((d * c) % n) as f64 / n as f64);
                    buf[d] * phase / n as f64
                })
                .collect()
        })
        .collect();
    let m = CMat::from_fn(n, n, |j, l| rows[j][l]);
    let mut op = DenseOperator::new(m, *grid, "Op(chi)")?;
    let last = n - 1;
    let touches = (0..n).any(|k| {
        let (x0, xl, xk) = (grid.x(0), grid.x(last), grid.xi(k));
        symbol(x0, xk) != 0.0 || symbol(xl, xk) != 0.0 || symbol(grid.x(k), grid.xi(0)) != 0.0 || symbol(grid.x(k), grid.xi(last)) != 0.0
    });
    if touches {
        op.warnings.push("symbol support touches the grid boundary (aliasing)".into());
    }
    Ok(op)
}

/// Cutoff of the model map.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum ModelCutoff {
    /// χ₁(x)χ₁(ξ) with χ₁ = 1 on [-inner, inner], 0 outside [-outer, outer].
    Product { inner: f64, outer: f64 },
    /// 1 on |ρ| <= inner, 0 on |ρ| >= outer.
    Radial { inner: f64, outer: f64 },
}

impl Default for ModelCutoff {
    fn default() -> Self {
        ModelCutoff::Product { inner: 0.5, outer: 0.58 }
    }
}

impl ModelCutoff {
    pub fn eval(&self, x: f64, xi: f64) -> f64 {
        match *self {
            ModelCutoff::Product { inner, outer } => {
                let p = Plateau::centered(0.0, inner, outer);
                p.value(x) * p.value(xi)
            }
            ModelCutoff::Radial { inner, outer } => smooth_step((x.hypot(xi) - inner) / (outer - inner)),
        }
    }

    /// Half-width of the square containing the support.
    pub fn outer(&self) -> f64 {
        match *self {
            ModelCutoff::Product { outer, .. } | ModelCutoff::Radial { outer, .. } => outer,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (inner, outer) = match *self {
            ModelCutoff::Product { inner, outer } | ModelCutoff::Radial { inner, outer } => (inner, outer),
        };
        if !(inner > 0.0 && inner < outer) {
            return Err(LabError::Config(format!("cutoff needs 0 < inner < outer, got {inner}, {outer}")));
        }
        Ok(())
    }
}

/// Margin between the cutoff support and the grid edge.
pub const MODEL_MARGIN: f64 = 0.04;

/// M = Op(χ) U_aa on the model grid for h.
pub fn model_open_map(h: f64, cutoff: &ModelCutoff) -> Result<DenseOperator> {
    cutoff.validate()?;
    let grid = GridSpec::for_model(h, cutoff.outer() + MODEL_MARGIN)?;
    let chi = |x: f64, xi: f64| cutoff.eval(x, xi);
    let op = quantize_left(&chi, &grid)?;
    let mut m = op.compose(&anti_aliased_scaling(&grid)?)?;
    m.label = format!("M(h={h:e}, N={}, {cutoff:?})", grid.n);
    Ok(m)
}

/// 2n + 1 with n = ⌈(3/4)|log h| / log 2⌉.
pub fn model_power(h: f64) -> usize {
    let n = (0.75 * h.ln().abs() / 2f64.ln() - 1e-9).ceil() as usize;
    2 * n + 1
}

/// B = F_N^{-1} blockdiag(F_m, ...) with the blocks of dropped branches zeroed.
pub fn open_baker_operator(n: usize, base: usize, kept: &[usize]) -> Result<DenseOperator> {
    if base < 2 || n == 0 || n % base != 0 {
        return Err(LabError::Invalid(format!("N = {n} must be a positive multiple of L = {base}")));
    }
    if kept.iter().any(|&b| b >= base) {
        return Err(LabError::Invalid(format!("kept branches {kept:?} outside 0..{base}")));
    }
    let m = n / base;
    let grid = GridSpec::torus(n)?;
    let fft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let inv_m = 1.0 / (m as f64).sqrt();
    let inv_n = 1.0 / (n as f64).sqrt();
    let mut cols: Vec<(usize, Vec<c64>)> = Vec::new();
    for &b in kept {
        let block: Vec<(usize, Vec<c64>)> = (0..m)
            .into_par_iter()
            .map(|q| {
                let mut w = vec![c64::new(0.0, 0.0); n];
                for p in 0..m {
                    w[b * m + p] = cis(-2.0 * PI * ((p * q) % m) as f64 / m as f64) * inv_m;
                }
                fft.process(&mut w);
                w.iter_mut().for_each(|z| *z *= inv_n);
                (b * m + q, w)
            })
            .collect();
        cols.extend(block);
    }
    let mut mat = CMat::zeros(n, n);
    for (j, col) in cols {
        for (i, z) in col.into_iter().enumerate() {
            mat[(i, j)] = z;
        }
    }
    let mut kept_sorted = kept.to_vec();
    kept_sorted.sort_unstable();
    kept_sorted.dedup();
    let op = DenseOperator::new(mat, grid, format!("B(N={n}, L={base}, kept={kept_sorted:?})"))?;
    if kept_sorted.len() == base {
        op.into_unitary()
    } else {
        Ok(op)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProjectorSide {
    Position,
    Momentum,
}

/// 1_S(x) or F* 1_S F for an index set S.
pub fn projector(grid: &GridSpec, indices: &[usize], side: ProjectorSide) -> Result<DenseOperator> {
    let n = grid.n;
    if indices.iter().any(|&i| i >= n) {
        return Err(LabError::Invalid("projector index outside the grid".into()));
    }
    let mut d = CMat::zeros(n, n);
    for &i in indices {
        d[(i, i)] = c64::new(1.0, 0.0);
    }
    let diag = DenseOperator::new(d, *grid, "1_S(x)")?;
    match side {
        ProjectorSide::Position => Ok(diag),
        ProjectorSide::Momentum => {
            let f = semiclassical_fourier(grid)?;
            let fs = DenseOperator::new(f.entries.adjoint().to_owned(), *grid, "F*")?;
            let mut p = fs.compose(&diag)?.compose(&f)?;
            p.label = "1_S(hD)".into();
            Ok(p)
        }
    }
}

/// Normalized Gaussian wavepacket centred at (x0, ξ0) with width sqrt(h).
pub fn coherent_state(grid: &GridSpec, x0: f64, xi0: f64) -> Vec<c64> {
    let h = grid.h;
    let amp = (PI * h).powf(-0.25) * grid.dx.sqrt();
    (0..grid.n)
        .map(|j| {
            let x = grid.x(j);
            cis(xi0 * x / h) * (amp * (-(x - x0) * (x - x0) / (2.0 * h)).exp())
        })
        .collect()
}

/// ‖1_{[-a,a]}(hD) 1_{[-a,a]}(x)‖ with a = h^{3/4}, using 2·`half_points` + 1 nodes per box.
pub fn box_uncertainty_norm(h: f64, half_points: usize) -> Result<f64> {
    box_uncertainty_norm_at(h, h.powf(0.75), half_points)
}

/// Norm of the kernel (2πh)^{-1/2} e^{-ixξ/h} on [-a, a]², discretized by the trapezoid rule.
pub fn box_uncertainty_norm_at(h: f64, a: f64, half_points: usize) -> Result<f64> {
    if half_points < 2 || !(a > 0.0) || !(h > 0.0) {
        return Err(LabError::Invalid("box needs a > 0, h > 0 and at least two points".into()));
    }
    let m = 2 * half_points + 1;
    let d = a / half_points as f64;
    let node = |j: usize| (j as f64 - half_points as f64) * d;
    let weight = |j: usize| if j == 0 || j == m - 1 { 0.5 * d } else { d };
    let amp = 1.0 / (2.0 * PI * h).sqrt();
    let block = CMat::from_fn(m, m, |k, j| cis(-node(j) * node(k) / h) * (amp * (weight(j) * weight(k)).sqrt()));
    top_singular_value(&block)
}
