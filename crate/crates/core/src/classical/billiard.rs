//! Disk billiards in Birkhoff coordinates (arclength, sine of the reflection angle).
//!
//! On disk `j` the arclength origin sits on the point facing away from the
//! centroid of all centers, so trapped orbits stay far from the seam.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::solve_real;
use crate::phase::Mat2;

/// Geometry of a finite family of disjoint disks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiskGeometry {
    pub centers: Vec<[f64; 2]>,
    pub radii: Vec<f64>,
    /// Offset of each disk's arclength chart in the global x coordinate.
    pub offsets: Vec<f64>,
    /// Polar angle of the arclength origin on each disk.
    pub theta0: Vec<f64>,
    /// Smallest hull clearance over all ordered triples (infinite for two disks).
    pub clearance: f64,
}

/// Result of following one chord.
#[derive(Debug, Clone, Copy)]
pub struct Chord {
    pub s: f64,
    pub eta: f64,
    pub length: f64,
    pub cos_out: f64,
    pub cos_in: f64,
}

fn dot(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

fn sub(a: [f64; 2], b: [f64; 2]) -> [f64; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = sub(b, a);
    let t = (dot(sub(p, a), ab) / dot(ab, ab)).clamp(0.0, 1.0);
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    let d = sub(p, q);
    d[0].hypot(d[1])
}

/// Positive ray parameter of the first intersection with a circle, if any.
fn ray_circle(origin: [f64; 2], dir: [f64; 2], center: [f64; 2], radius: f64) -> Option<f64> {
    let w = sub(origin, center);
    let b = dot(dir, w);
    let c = dot(w, w) - radius * radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let tau = -b - disc.sqrt();
    (tau > 1e-12).then_some(tau)
}

impl DiskGeometry {
    /// Builds the geometry, rejecting overlapping disks and eclipsed triples.
    pub fn new(centers: Vec<[f64; 2]>, radii: Vec<f64>) -> Result<Self> {
        let k = centers.len();
        if k < 2 || radii.len() != k {
            return Err(LabError::Config(
                "disk system needs at least two disks and one radius per center".into(),
            ));
        }
        if radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(LabError::Config("disk radii must be positive".into()));
        }
        for i in 0..k {
            for j in i + 1..k {
                let d = sub(centers[i], centers[j]);
                if d[0].hypot(d[1]) <= radii[i] + radii[j] {
                    return Err(LabError::Config(format!("disks {i} and {j} overlap")));
                }
            }
        }
        let mut clearance = f64::INFINITY;
        for i in 0..k {
            for j in i + 1..k {
                for m in 0..k {
                    if m == i || m == j {
                        continue;
                    }
                    let gap = point_segment_distance(centers[m], centers[i], centers[j])
                        - radii[m]
                        - radii[i].max(radii[j]);
                    if gap <= 0.0 {
                        return Err(LabError::Eclipse(i, j, m));
                    }
                    clearance = clearance.min(gap);
                }
            }
        }
        let centroid = centers.iter().fold([0.0, 0.0], |acc, c| {
            [acc[0] + c[0] / k as f64, acc[1] + c[1] / k as f64]
        });
        let theta0 = centers
            .iter()
            .map(|c| {
                let d = sub(*c, centroid);
                if d[0] == 0.0 && d[1] == 0.0 {
                    0.0
                } else {
                    d[1].atan2(d[0])
                }
            })
            .collect();
        let mut offsets = Vec::with_capacity(k);
        let mut acc = 0.0;
        for r in &radii {
            offsets.push(acc);
            acc += 2.0 * PI * r;
        }
        Ok(Self {
            centers,
            radii,
            offsets,
            theta0,
            clearance,
        })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn perimeter(&self, j: usize) -> f64 {
        2.0 * PI * self.radii[j]
    }

    /// Boundary point, outward normal and counterclockwise tangent at arclength s.
    pub fn frame(&self, j: usize, s: f64) -> ([f64; 2], [f64; 2], [f64; 2]) {
        let th = self.theta0[j] + s / self.radii[j];
        let n = [th.cos(), th.sin()];
        let c = self.centers[j];
        let a = self.radii[j];
        ([c[0] + a * n[0], c[1] + a * n[1]], n, [-n[1], n[0]])
    }

    /// Arclength of the boundary point with outward normal n.
    pub fn arclength_of(&self, j: usize, n: [f64; 2]) -> f64 {
        let th = n[1].atan2(n[0]) - self.theta0[j];
        let th = th.rem_euclid(2.0 * PI);
        let s = self.radii[j] * th;
        if s >= self.perimeter(j) {
            0.0
        } else {
            s
        }
    }

    /// Outgoing velocity from (s, eta) on disk j.
    fn outgoing(&self, j: usize, s: f64, eta: f64) -> Option<([f64; 2], [f64; 2], f64)> {
        if !(eta.abs() < 1.0) {
            return None;
        }
        let (q, n, t) = self.frame(j, s);
        let c = (1.0 - eta * eta).sqrt();
        Some((q, [c * n[0] + eta * t[0], c * n[1] + eta * t[1]], c))
    }

    /// Follows the chord from disk `from` and reflects on disk `to`.
    pub fn forward(&self, from: usize, to: usize, s: f64, eta: f64) -> Option<Chord> {
        let (q, v, cos_out) = self.outgoing(from, s, eta)?;
        let tau = ray_circle(q, v, self.centers[to], self.radii[to])?;
        let hit = [q[0] + tau * v[0], q[1] + tau * v[1]];
        let a = self.radii[to];
        let c = self.centers[to];
        let n2 = [(hit[0] - c[0]) / a, (hit[1] - c[1]) / a];
        let vn = dot(v, n2);
        if vn >= 0.0 {
            return None;
        }
        let vr = [v[0] - 2.0 * vn * n2[0], v[1] - 2.0 * vn * n2[1]];
        let t2 = [-n2[1], n2[0]];
        Some(Chord {
            s: self.arclength_of(to, n2),
            eta: dot(vr, t2),
            length: tau,
            cos_out,
            cos_in: -vn,
        })
    }

    /// Inverse of [`forward`](Self::forward): from an outgoing state on `to`, finds the state on `from`.
    pub fn backward(&self, from: usize, to: usize, s: f64, eta: f64) -> Option<(f64, f64)> {
        let (q, v_out, _) = self.outgoing(to, s, eta)?;
        let (_, n, _) = self.frame(to, s);
        let vn = dot(v_out, n);
        let v_in = [v_out[0] - 2.0 * vn * n[0], v_out[1] - 2.0 * vn * n[1]];
        let back = [-v_in[0], -v_in[1]];
        let tau = ray_circle(q, back, self.centers[from], self.radii[from])?;
        let p = [q[0] + tau * back[0], q[1] + tau * back[1]];
        let a = self.radii[from];
        let c = self.centers[from];
        let n1 = [(p[0] - c[0]) / a, (p[1] - c[1]) / a];
        if dot(v_in, n1) <= 0.0 {
            return None;
        }
        let t1 = [-n1[1], n1[0]];
        Some((self.arclength_of(from, n1), dot(v_in, t1)))
    }

    /// Differential of the bounce map in (s, eta) coordinates.
    pub fn differential(&self, from: usize, to: usize, ch: &Chord) -> Mat2 {
        let a1 = self.radii[from];
        let a2 = self.radii[to];
        let l = ch.length;
        let (c1, c2) = (ch.cos_out, ch.cos_in);
        Mat2::new(
            -(c1 + l / a1) / c2,
            -l / (c1 * c2),
            -(c2 / a1 + c1 / a2 + l / (a1 * a2)),
            -(c2 + l / a2) / c1,
        )
    }

    /// Bounce positions of the periodic orbit with the given cyclic disk code.
    ///
    /// Solves for a critical point of the total chord length with Newton's
    /// method; returns arclengths and outgoing eta at each bounce.
    pub fn periodic_orbit(&self, code: &[usize]) -> Result<Vec<(f64, f64)>> {
        let p = code.len();
        if p < 2 {
            return Err(LabError::Invalid("periodic disk code needs length >= 2".into()));
        }
        for k in 0..p {
            if code[k] == code[(k + 1) % p] || code[k] >= self.len() {
                return Err(LabError::Invalid(format!("inadmissible disk code {code:?}")));
            }
        }
        let mut theta: Vec<f64> = (0..p)
            .map(|k| {
                let prev = self.centers[code[(k + p - 1) % p]];
                let next = self.centers[code[(k + 1) % p]];
                let c = self.centers[code[k]];
                let target = [0.5 * (prev[0] + next[0]) - c[0], 0.5 * (prev[1] + next[1]) - c[1]];
                target[1].atan2(target[0])
            })
            .collect();
        for _ in 0..100 {
            let (g, h) = self.length_derivatives(code, &theta);
            let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if gnorm < 1e-14 {
                return self.orbit_states(code, &theta);
            }
            let step = solve_real(&h, &g.iter().map(|v| -v).collect::<Vec<_>>())?;
            let smax = step.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let scale = if smax > 0.2 { 0.2 / smax } else { 1.0 };
            for k in 0..p {
                theta[k] += scale * step[k];
            }
        }
        let (g, _) = self.length_derivatives(code, &theta);
        if g.iter().all(|v| v.abs() < 1e-10) {
            return self.orbit_states(code, &theta);
        }
        Err(LabError::Numerical(format!("periodic orbit {code:?} did not converge")))
    }

    /// Gradient and Hessian of total length with respect to bounce angles.
    fn length_derivatives(&self, code: &[usize], theta: &[f64]) -> (Vec<f64>, Vec<Vec<f64>>) {
        let p = code.len();
        let mut g = vec![0.0; p];
        let mut h = vec![vec![0.0; p]; p];
        let pts: Vec<([f64; 2], [f64; 2], [f64; 2])> = (0..p)
            .map(|k| {
                let j = code[k];
                let n = [theta[k].cos(), theta[k].sin()];
                let c = self.centers[j];
                let a = self.radii[j];
                ([c[0] + a * n[0], c[1] + a * n[1]], n, [-n[1], n[0]])
            })
            .collect();
        for k in 0..p {
            let k2 = (k + 1) % p;
            let (q1, n1, t1) = pts[k];
            let (q2, n2, t2) = pts[k2];
            let a1 = self.radii[code[k]];
            let a2 = self.radii[code[k2]];
            let d = sub(q2, q1);
            let l = d[0].hypot(d[1]);
            let u = [d[0] / l, d[1] / l];
            let (ut1, ut2, un1, un2) = (dot(u, t1), dot(u, t2), dot(u, n1), dot(u, n2));
            // derivatives with respect to arclength, converted to angle by the radius
            let l_s = -ut1;
            let l_t = ut2;
            let l_ss = un1 * un1 / l + un1 / a1;
            let l_tt = un2 * un2 / l - un2 / a2;
            let l_st = -(dot(t1, t2) - ut1 * ut2) / l;
            g[k] += a1 * l_s;
            g[k2] += a2 * l_t;
            h[k][k] += a1 * a1 * l_ss;
            h[k2][k2] += a2 * a2 * l_tt;
            h[k][k2] += a1 * a2 * l_st;
            h[k2][k] += a1 * a2 * l_st;
        }
        (g, h)
    }

    fn orbit_states(&self, code: &[usize], theta: &[f64]) -> Result<Vec<(f64, f64)>> {
        let p = code.len();
        let mut out = Vec::with_capacity(p);
        for k in 0..p {
            let j = code[k];
            let j2 = code[(k + 1) % p];
            let n1 = [theta[k].cos(), theta[k].sin()];
            let n2 = [theta[(k + 1) % p].cos(), theta[(k + 1) % p].sin()];
            let c1 = self.centers[j];
            let c2 = self.centers[j2];
            let q1 = [c1[0] + self.radii[j] * n1[0], c1[1] + self.radii[j] * n1[1]];
            let q2 = [c2[0] + self.radii[j2] * n2[0], c2[1] + self.radii[j2] * n2[1]];
            let d = sub(q2, q1);
            let l = d[0].hypot(d[1]);
            let u = [d[0] / l, d[1] / l];
            if dot(u, n1) <= 0.0 {
                return Err(LabError::Numerical(format!("periodic orbit {code:?} is not admissible")));
            }
            for (m, c) in self.centers.iter().enumerate() {
                if m != j && m != j2 && point_segment_distance(*c, q1, q2) < self.radii[m] {
                    return Err(LabError::Numerical(format!("periodic orbit {code:?} is pruned")));
                }
            }
            let t1 = [-n1[1], n1[0]];
            out.push((self.arclength_of(j, n1), dot(u, t1)));
        }
        Ok(out)
    }
}

/// Centers of an equilateral triangle of the given side, centroid at the origin.
pub fn equilateral_centers(side: f64) -> Vec<[f64; 2]> {
    let r = side / 3f64.sqrt();
    (0..3)
        .map(|k| {
            let a = PI / 2.0 + 2.0 * PI * k as f64 / 3.0;
            [r * a.cos(), r * a.sin()]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eclipse_check_on_equilateral_triangles() {
        let g = DiskGeometry::new(equilateral_centers(6.0), vec![1.0; 3]).unwrap();
        assert!((g.clearance - (3.0 * 3f64.sqrt() - 2.0)).abs() < 1e-12);
        let err = DiskGeometry::new(equilateral_centers(2.2), vec![1.0; 3]).unwrap_err();
        assert!(matches!(err, LabError::Eclipse(..)));
    }

    #[test]
    fn overlapping_disks_rejected() {
        let err = DiskGeometry::new(vec![[0.0, 0.0], [1.5, 0.0]], vec![1.0, 1.0]).unwrap_err();
        assert!(matches!(err, LabError::Config(_)));
    }

    #[test]
    fn two_disk_orbit_faces_each_other() {
        let g = DiskGeometry::new(vec![[0.0, 0.0], [6.0, 0.0]], vec![1.0, 1.0]).unwrap();
        let orb = g.periodic_orbit(&[0, 1]).unwrap();
        for (k, (s, eta)) in orb.iter().enumerate() {
            assert!(eta.abs() < 1e-12);
            assert!((s - PI * g.radii[k]).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_backward_roundtrip() {
        let g = DiskGeometry::new(equilateral_centers(6.0), vec![1.0; 3]).unwrap();
        let s0 = PI;
        let mut hits = 0;
        for k in 0..200 {
            let eta0 = -0.99 + 0.01 * k as f64;
            if let Some(ch) = g.forward(0, 1, s0, eta0) {
                let (s, eta) = g.backward(0, 1, ch.s, ch.eta).unwrap();
                assert!((s - s0).abs() < 1e-10 && (eta - eta0).abs() < 1e-10);
                hits += 1;
            }
        }
        assert!(hits > 5);
    }
}
