//! Phase-space sampling grids and grid fields with bilinear interpolation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classical::OpenMapSystem;
use crate::error::Result;
use crate::phase::{PhasePoint, Rect};

/// Regular grid on one block; periodic grids omit the right and top edges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGrid {
    pub rect: Rect,
    pub nx: usize,
    pub nxi: usize,
    pub periodic: bool,
}

impl BlockGrid {
    pub fn dx(&self) -> f64 {
        if self.periodic {
            self.rect.width() / self.nx as f64
        } else {
            self.rect.width() / (self.nx - 1) as f64
        }
    }

    pub fn dxi(&self) -> f64 {
        if self.periodic {
            self.rect.height() / self.nxi as f64
        } else {
            self.rect.height() / (self.nxi - 1) as f64
        }
    }

    fn len(&self) -> usize {
        self.nx * self.nxi
    }
}

/// Union of block grids covering the phase space of a system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitGrid {
    pub blocks: Vec<BlockGrid>,
    offsets: Vec<usize>,
}

/// Bilinear stencil: four node indices and weights.
pub type Stencil = [(usize, f64); 4];

impl SplitGrid {
    pub fn new(blocks: Vec<BlockGrid>) -> Self {
        let mut offsets = Vec::with_capacity(blocks.len());
        let mut acc = 0;
        for b in &blocks {
            offsets.push(acc);
            acc += b.len();
        }
        Self { blocks, offsets }
    }

    /// An n x n grid on every block; periodic on torus systems.
    pub fn for_system(sys: &OpenMapSystem, n: usize) -> Self {
        let n = n.max(4);
        Self::new(
            sys.blocks
                .iter()
                .map(|r| BlockGrid {
                    rect: *r,
                    nx: n,
                    nxi: n,
                    periodic: sys.is_torus(),
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.blocks.iter().map(BlockGrid::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Largest grid spacing over all blocks and both axes.
    pub fn spacing(&self) -> f64 {
        self.blocks.iter().fold(0.0f64, |m, b| m.max(b.dx()).max(b.dxi()))
    }

    /// Block, column and row of a node index.
    pub fn unravel(&self, k: usize) -> (usize, usize, usize) {
        let b = self.offsets.partition_point(|&o| o <= k) - 1;
        let local = k - self.offsets[b];
        let g = &self.blocks[b];
        (b, local / g.nxi, local % g.nxi)
    }

    pub fn index(&self, b: usize, i: usize, j: usize) -> usize {
        self.offsets[b] + i * self.blocks[b].nxi + j
    }

    pub fn node(&self, k: usize) -> PhasePoint {
        let (b, i, j) = self.unravel(k);
        let g = &self.blocks[b];
        PhasePoint::new(g.rect.x0 + i as f64 * g.dx(), g.rect.xi0 + j as f64 * g.dxi())
    }

    pub fn nodes(&self) -> Vec<PhasePoint> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }

    /// Interpolation stencil at p, or `None` outside every block.
    pub fn stencil(&self, p: &PhasePoint) -> Option<Stencil> {
        let (b, g) = self.blocks.iter().enumerate().find(|(_, g)| {
            if g.periodic {
                true
            } else {
                p.x >= g.rect.x0 && p.x <= g.rect.x1 && p.xi >= g.rect.xi0 && p.xi <= g.rect.xi1
            }
        })?;
        let fx = (p.x - g.rect.x0) / g.dx();
        let fxi = (p.xi - g.rect.xi0) / g.dxi();
        let (i0, i1, wx) = axis(fx, g.nx, g.periodic);
        let (j0, j1, wxi) = axis(fxi, g.nxi, g.periodic);
        Some([
            (self.index(b, i0, j0), (1.0 - wx) * (1.0 - wxi)),
            (self.index(b, i1, j0), wx * (1.0 - wxi)),
            (self.index(b, i0, j1), (1.0 - wx) * wxi),
            (self.index(b, i1, j1), wx * wxi),
        ])
    }

    pub fn interpolate(&self, values: &[f64], p: &PhasePoint) -> Option<f64> {
        let s = self.stencil(p)?;
        Some(s.iter().map(|(k, w)| w * values[*k]).sum())
    }

    pub fn interpolate2(&self, values: &[[f64; 2]], p: &PhasePoint) -> Option<[f64; 2]> {
        let s = self.stencil(p)?;
        let mut out = [0.0; 2];
        for (k, w) in s {
            out[0] += w * values[k][0];
            out[1] += w * values[k][1];
        }
        Some(out)
    }
}

fn axis(f: f64, n: usize, periodic: bool) -> (usize, usize, f64) {
    if periodic {
        let f = f.rem_euclid(n as f64);
        let i0 = (f.floor() as usize).min(n - 1);
        (i0, (i0 + 1) % n, f - i0 as f64)
    } else {
        let f = f.clamp(0.0, (n - 1) as f64);
        let i0 = (f.floor() as usize).min(n - 2);
        (i0, i0 + 1, f - i0 as f64)
    }
}

/// Grid-sampled slope λ with its cutoff χ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeField {
    pub grid: SplitGrid,
    pub values: Vec<f64>,
    pub cutoff: Vec<f64>,
}

impl SlopeField {
    pub fn constant(grid: SplitGrid, cutoff: Vec<f64>, value: f64) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![value; n],
            cutoff,
        }
    }

    pub fn eval(&self, p: &PhasePoint) -> Option<f64> {
        self.grid.interpolate(&self.values, p)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Sup distance to another field on the same grid.
    pub fn distance(&self, other: &SlopeField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()))
    }

    /// CSV export: x, xi, lambda.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "xi", "lambda"])?;
        for k in 0..self.grid.len() {
            let p = self.grid.node(k);
            w.write_record([format!("{:.17e}", p.x), format!("{:.17e}", p.xi), format!("{:.17e}", self.values[k])])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Grid-sampled covector field α, representing dλ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovectorField {
    pub grid: SplitGrid,
    pub values: Vec<[f64; 2]>,
}

impl CovectorField {
    pub fn zeros(grid: SplitGrid) -> Self {
        let n = grid.len();
        Self {
            grid,
            values: vec![[0.0; 2]; n],
        }
    }

    pub fn eval(&self, p: &PhasePoint) -> Option<[f64; 2]> {
        self.grid.interpolate2(&self.values, p)
    }

    /// Sup over nodes of the Euclidean norm.
    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v[0].hypot(v[1])))
    }

    pub fn distance(&self, other: &CovectorField) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |m, (a, b)| m.max((a[0] - b[0]).hypot(a[1] - b[1])))
    }

    /// CSV export: x, xi, lambda, alpha1, alpha2.
    pub fn write_csv(&self, path: &Path, slope: &SlopeField) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "xi", "lambda", "alpha1", "alpha2"])?;
        for k in 0..self.grid.len() {
            let p = self.grid.node(k);
            w.write_record([
                format!("{:.17e}", p.x),
                format!("{:.17e}", p.xi),
                format!("{:.17e}", slope.values[k]),
                format!("{:.17e}", self.values[k][0]),
                format!("{:.17e}", self.values[k][1]),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bilinear_is_exact_on_affine_functions() {
        let g = SplitGrid::new(vec![BlockGrid {
            rect: Rect::new(-1.0, 1.0, -2.0, 2.0),
            nx: 9,
            nxi: 17,
            periodic: false,
        }]);
        let vals: Vec<f64> = g.nodes().iter().map(|p| 3.0 * p.x - 0.5 * p.xi + 1.0).collect();
        for p in [PhasePoint::new(0.13, -1.7), PhasePoint::new(1.0, 2.0), PhasePoint::new(-0.99, 0.0)] {
            let v = g.interpolate(&vals, &p).unwrap();
            assert!((v - (3.0 * p.x - 0.5 * p.xi + 1.0)).abs() < 1e-12);
        }
        assert!(g.interpolate(&vals, &PhasePoint::new(1.5, 0.0)).is_none());
    }

    #[test]
    fn periodic_wraps() {
        let g = SplitGrid::new(vec![BlockGrid {
            rect: Rect::new(0.0, 1.0, 0.0, 1.0),
            nx: 8,
            nxi: 8,
            periodic: true,
        }]);
        let vals: Vec<f64> = g.nodes().iter().map(|p| (2.0 * std::f64::consts::PI * p.x).cos()).collect();
        let a = g.interpolate(&vals, &PhasePoint::new(0.97, 0.3)).unwrap();
        let b = g.interpolate(&vals, &PhasePoint::new(-0.03, 0.3)).unwrap();
        assert!((a - b).abs() < 1e-14);
        let (blk, i, j) = g.unravel(g.index(0, 5, 3));
        assert_eq!((blk, i, j), (0, 5, 3));
    }
}
