//! Dense operators on a grid and their binary container.

use std::io::{Read, Write};

use crate::error::{LabError, Result};
use crate::linalg::{c64, unitarity_defect, CMat};

use super::grid::{GridKind, GridSpec};

/// Unitary-flagged operators must satisfy ‖A*A − I‖ within this bound.
pub const UNITARY_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct DenseOperator {
    pub entries: CMat,
    pub domain: GridSpec,
    pub range: GridSpec,
    pub label: String,
    pub unitary: bool,
    pub warnings: Vec<String>,
}

impl DenseOperator {
    pub fn new(entries: CMat, grid: GridSpec, label: impl Into<String>) -> Result<Self> {
        if entries.nrows() != grid.n || entries.ncols() != grid.n {
            return Err(LabError::Invalid(format!(
                "operator of shape {}x{} on a grid of size {}",
                entries.nrows(),
                entries.ncols(),
                grid.n
            )));
        }
        for j in 0..entries.ncols() {
            if entries.col(j).iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
                return Err(LabError::Numerical("non-finite operator entry".into()));
            }
        }
        Ok(Self {
            entries,
            domain: grid,
            range: grid,
            label: label.into(),
            unitary: false,
            warnings: Vec::new(),
        })
    }

    /// Marks the operator unitary after checking the defect.
    pub fn into_unitary(mut self) -> Result<Self> {
        let d = unitarity_defect(&self.entries)?;
        if d > UNITARY_TOL {
            return Err(LabError::NonUnitary { defect: d });
        }
        self.unitary = true;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    /// Product self · other, with a joined label.
    pub fn compose(&self, other: &DenseOperator) -> Result<DenseOperator> {
        if self.n() != other.n() {
            return Err(LabError::Invalid("composing operators of different sizes".into()));
        }
        let mut op = DenseOperator::new(&self.entries * &other.entries, self.domain, format!("{} * {}", self.label, other.label))?;
        op.warnings = self.warnings.iter().chain(&other.warnings).cloned().collect();
        Ok(op)
    }

    pub fn apply(&self, v: &[c64]) -> Vec<c64> {
        crate::linalg::matvec(&self.entries, v)
    }

    /// Writes N (u64), kind (u32), h (f64), then row-major (re, im) pairs, all little endian.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let n = self.n();
        w.write_all(&(n as u64).to_le_bytes())?;
        let kind: u32 = match self.domain.kind {
            GridKind::Interval => 0,
            GridKind::Torus => 1,
        };
        w.write_all(&kind.to_le_bytes())?;
        w.write_all(&self.domain.h.to_le_bytes())?;
        let mut buf = Vec::with_capacity(16 * n);
        for i in 0..n {
            buf.clear();
            for j in 0..n {
                let z = self.entries[(i, j)];
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    /// Reads the container written by [`DenseOperator::write_binary`].
    ///
    /// Interval grids are rebuilt with the symmetric spacing sqrt(2πh/N).
    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut b8 = [0u8; 8];
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b8)?;
        let n = u64::from_le_bytes(b8) as usize;
        r.read_exact(&mut b4)?;
        let kind = u32::from_le_bytes(b4);
        r.read_exact(&mut b8)?;
        let h = f64::from_le_bytes(b8);
        let grid = match kind {
            0 => GridSpec::interval(n, h)?,
            1 => GridSpec::torus(n)?,
            k => return Err(LabError::Invalid(format!("unknown grid kind {k}"))),
        };
        let mut row = vec![0u8; 16 * n];
        let mut m = CMat::zeros(n, n);
        for i in 0..n {
            r.read_exact(&mut row)?;
            for j in 0..n {
                let re = f64::from_le_bytes(row[16 * j..16 * j + 8].try_into().unwrap());
                let im = f64::from_le_bytes(row[16 * j + 8..16 * j + 16].try_into().unwrap());
                m[(i, j)] = c64::new(re, im);
            }
        }
        DenseOperator::new(m, grid, "read from container")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn container_round_trip() {
        let g = GridSpec::interval(8, 0.01).unwrap();
        let m = CMat::from_fn(8, 8, |i, j| c64::new(i as f64 - 0.5 * j as f64, (i * j) as f64 / 7.0));
        let op = DenseOperator::new(m, g, "test").unwrap();
        let mut bytes = Vec::new();
        op.write_binary(&mut bytes).unwrap();
        assert_eq!(bytes.len(), 8 + 4 + 8 + 16 * 64);
        assert_eq!(&bytes[0..8], &8u64.to_le_bytes());
        let back = DenseOperator::read_binary(bytes.as_slice()).unwrap();
        assert_eq!(back.entries, op.entries);
        assert_eq!(back.domain.h, 0.01);
        assert!(DenseOperator::read_binary(&bytes[..30]).is_err());
    }

    #[test]
    fn rejects_wrong_shape() {
        let g = GridSpec::interval(8, 0.01).unwrap();
        assert!(DenseOperator::new(CMat::zeros(4, 4), g, "x").is_err());
    }
}
