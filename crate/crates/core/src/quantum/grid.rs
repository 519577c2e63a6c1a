//! Sampling grids for the quantizations.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{LabError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    Interval,
    Torus,
}

/// N samples in x and N dual samples in ξ.
///
/// Interval grids are centred on an integer index: x_j = (j - N/2)Δx and
/// ξ_k = (k - N/2)Δξ. Torus grids use x_j = j/N, ξ_k = k/N with h = 1/(2πN).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: GridKind,
    pub n: usize,
    pub h: f64,
    pub dx: f64,
    pub dxi: f64,
}

/// Smallest model grid size.
pub const MODEL_MIN_N: usize = 256;
/// Largest model grid size.
pub const MODEL_MAX_N: usize = 4096;

impl GridSpec {
    /// Interval grid with Δx = Δξ = sqrt(2πh/N), so that X = sqrt(πhN/2).
    pub fn interval(n: usize, h: f64) -> Result<Self> {
        check(n, h)?;
        let d = (2.0 * PI * h / n as f64).sqrt();
        Ok(Self {
            kind: GridKind::Interval,
            n,
            h,
            dx: d,
            dxi: d,
        })
    }

    /// Interval grid on [-X, X) with Δξ fixed by Δx Δξ = 2πh/N.
    pub fn interval_with_width(n: usize, h: f64, half_width: f64) -> Result<Self> {
        check(n, h)?;
        if !(half_width > 0.0) {
            return Err(LabError::Invalid(format!("half width must be positive, got {half_width}")));
        }
        let dx = 2.0 * half_width / n as f64;
        Ok(Self {
            kind: GridKind::Interval,
            n,
            h,
            dx,
            dxi: 2.0 * PI * h / (n as f64 * dx),
        })
    }

    /// Interval grid with arbitrary spacings; the Fourier builder rejects
    /// combinations that are not unitary.
    pub fn interval_raw(n: usize, h: f64, dx: f64, dxi: f64) -> Result<Self> {
        check(n, h)?;
        Ok(Self {
            kind: GridKind::Interval,
            n,
            h,
            dx,
            dxi,
        })
    }

    pub fn torus(n: usize) -> Result<Self> {
        check(n, 1.0)?;
        let nf = n as f64;
        Ok(Self {
            kind: GridKind::Torus,
            n,
            h: 1.0 / (2.0 * PI * nf),
            dx: 1.0 / nf,
            dxi: 1.0 / nf,
        })
    }

    /// Model grid: the smallest power of two N >= 256 with X >= `min_half_width`.
    pub fn for_model(h: f64, min_half_width: f64) -> Result<Self> {
        let mut n = MODEL_MIN_N;
        loop {
            let g = Self::interval(n, h)?;
            if g.half_width() >= min_half_width {
                return Ok(g);
            }
            if n >= MODEL_MAX_N {
                return Err(LabError::Invalid(format!(
                    "h = {h} needs N > {MODEL_MAX_N} to reach half width {min_half_width}"
                )));
            }
            n *= 2;
        }
    }

    pub fn center(&self) -> usize {
        match self.kind {
            GridKind::Interval => self.n / 2,
            GridKind::Torus => 0,
        }
    }

    pub fn x(&self, j: usize) -> f64 {
        (j as f64 - self.center() as f64) * self.dx
    }

    pub fn xi(&self, k: usize) -> f64 {
        (k as f64 - self.center() as f64) * self.dxi
    }

    /// X for interval grids, 1/2 for the torus.
    pub fn half_width(&self) -> f64 {
        self.n as f64 * self.dx / 2.0
    }

    pub fn xi_half_width(&self) -> f64 {
        self.n as f64 * self.dxi / 2.0
    }

    /// h for interval grids, 1/N for the torus.
    pub fn h_eff(&self) -> f64 {
        match self.kind {
            GridKind::Interval => self.h,
            GridKind::Torus => 1.0 / self.n as f64,
        }
    }

    /// |Δx Δξ N / (2πh) - 1|; zero for a unitary Fourier matrix.
    pub fn duality_defect(&self) -> f64 {
        (self.dx * self.dxi * self.n as f64 / (2.0 * PI * self.h) - 1.0).abs()
    }

    /// Reflection x -> -x on the periodic index set.
    pub fn reflection(&self) -> Vec<usize> {
        let c = self.center();
        (0..self.n).map(|j| (2 * c + self.n - j) % self.n).collect()
    }

    /// Indices with lo <= x_j <= hi.
    pub fn position_indices(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.n).filter(|&j| (lo..=hi).contains(&self.x(j))).collect()
    }

    pub fn momentum_indices(&self, lo: f64, hi: f64) -> Vec<usize> {
        (0..self.n).filter(|&k| (lo..=hi).contains(&self.xi(k))).collect()
    }
}

fn check(n: usize, h: f64) -> Result<()> {
    if n < 2 {
        return Err(LabError::Invalid(format!("grid needs N >= 2, got {n}")));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(LabError::Invalid(format!("h must be positive, got {h}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_interval_grid() {
        let g = GridSpec::interval(1024, 2f64.powi(-12)).unwrap();
        assert!(g.duality_defect() < 1e-14);
        assert_eq!(g.x(512), 0.0);
        assert!((g.half_width() - (PI * g.h * 1024.0 / 2.0).sqrt()).abs() < 1e-14);
        let r = g.reflection();
        assert_eq!(r[512], 512);
        assert_eq!(r[0], 0);
        assert_eq!(r[513], 511);
    }

    #[test]
    fn model_grid_sizes() {
        assert_eq!(GridSpec::for_model(2f64.powi(-8), 0.62).unwrap().n, 256);
        assert_eq!(GridSpec::for_model(2f64.powi(-12), 0.62).unwrap().n, 1024);
        assert_eq!(GridSpec::for_model(2f64.powi(-14), 0.62).unwrap().n, 4096);
        assert!(GridSpec::for_model(2f64.powi(-15), 0.62).is_err());
    }

    #[test]
    fn torus_convention() {
        let g = GridSpec::torus(27).unwrap();
        assert!(g.duality_defect() < 1e-14);
        assert!((g.h_eff() - 1.0 / 27.0).abs() < 1e-15);
    }
}
