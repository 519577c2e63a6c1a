//! Phase-space points, 2x2 matrices and rectangles.

use serde::{Deserialize, Serialize};

/// A point (x, xi) in a two-dimensional phase-space chart.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PhasePoint {
    pub x: f64,
    pub xi: f64,
}

impl PhasePoint {
    pub const fn new(x: f64, xi: f64) -> Self {
        Self { x, xi }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.xi.is_finite()
    }

    /// Sup-metric distance.
    pub fn dist_sup(&self, other: &PhasePoint) -> f64 {
        (self.x - other.x).abs().max((self.xi - other.xi).abs())
    }

    /// Euclidean distance.
    pub fn dist(&self, other: &PhasePoint) -> f64 {
        (self.x - other.x).hypot(self.xi - other.xi)
    }

    pub fn add(&self, v: [f64; 2]) -> PhasePoint {
        PhasePoint::new(self.x + v[0], self.xi + v[1])
    }
}

/// Real 2x2 matrix stored row-major.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[1.0, 0.0], [0.0, 1.0]]);

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Mat2([[a, 0.0], [0.0, d]])
    }

    /// Matrix with the given columns.
    pub fn from_cols(c0: [f64; 2], c1: [f64; 2]) -> Self {
        Mat2([[c0[0], c1[0]], [c0[1], c1[1]]])
    }

    pub fn det(&self) -> f64 {
        let m = &self.0;
        m[0][0] * m[1][1] - m[0][1] * m[1][0]
    }

    pub fn trace(&self) -> f64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return None;
        }
        let m = &self.0;
        Some(Mat2([
            [m[1][1] / d, -m[0][1] / d],
            [-m[1][0] / d, m[0][0] / d],
        ]))
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = &self.0;
        let b = &o.0;
        let mut r = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                r[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2(r)
    }

    pub fn apply(&self, v: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    /// Row vector times matrix.
    pub fn left_apply(&self, w: [f64; 2]) -> [f64; 2] {
        let m = &self.0;
        [w[0] * m[0][0] + w[1] * m[1][0], w[0] * m[0][1] + w[1] * m[1][1]]
    }

    pub fn sub(&self, o: &Mat2) -> Mat2 {
        let mut r = self.0;
        for (i, row) in r.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v -= o.0[i][j];
            }
        }
        Mat2(r)
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        let mut r = self.0;
        for row in r.iter_mut() {
            for v in row.iter_mut() {
                *v *= s;
            }
        }
        Mat2(r)
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

pub fn norm(v: [f64; 2]) -> f64 {
    v[0].hypot(v[1])
}

pub fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = norm(v);
    [v[0] / n, v[1] / n]
}

/// Axis-aligned half-open rectangle [x0, x1) x [xi0, xi1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub xi0: f64,
    pub xi1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, xi0: f64, xi1: f64) -> Self {
        Self { x0, x1, xi0, xi1 }
    }

    /// Sup-metric ball of the given half-widths around a center.
    pub fn around(c: PhasePoint, hx: f64, hxi: f64) -> Self {
        Self::new(c.x - hx, c.x + hx, c.xi - hxi, c.xi + hxi)
    }

    pub fn contains(&self, p: &PhasePoint) -> bool {
        p.x >= self.x0 && p.x < self.x1 && p.xi >= self.xi0 && p.xi < self.xi1
    }

    /// Sup-metric distance from a point to the rectangle (zero inside).
    pub fn dist_sup(&self, p: &PhasePoint) -> f64 {
        let dx = (self.x0 - p.x).max(p.x - self.x1).max(0.0);
        let dxi = (self.xi0 - p.xi).max(p.xi - self.xi1).max(0.0);
        dx.max(dxi)
    }

    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.xi1 - self.xi0
    }

    pub fn center(&self) -> PhasePoint {
        PhasePoint::new(0.5 * (self.x0 + self.x1), 0.5 * (self.xi0 + self.xi1))
    }

    pub fn intersects(&self, o: &Rect) -> bool {
        self.x0 < o.x1 && o.x0 < self.x1 && self.xi0 < o.xi1 && o.xi0 < self.xi1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_roundtrip() {
        let m = Mat2::new(2.0, 1.0, 1.0, 1.0);
        let p = m.mul(&m.inverse().unwrap());
        assert!(p.sub(&Mat2::IDENTITY).max_abs() < 1e-15);
    }

    #[test]
    fn rect_is_half_open() {
        let r = Rect::new(0.0, 1.0, 0.0, 1.0);
        assert!(r.contains(&PhasePoint::new(0.0, 0.5)));
        assert!(!r.contains(&PhasePoint::new(1.0, 0.5)));
        assert_eq!(r.dist_sup(&PhasePoint::new(1.5, 0.5)), 0.5);
    }
}
