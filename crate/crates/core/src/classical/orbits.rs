//! Trapped-set samples, invariant directions and unstable Jacobians.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::system::{OpenMapSystem, PieceKind};
use crate::error::{LabError, Result};
use crate::phase::{norm, normalize, Mat2, PhasePoint};

/// Number of backward (or forward) steps used to converge invariant directions.
const DIRECTION_DEPTH: usize = 40;

/// Grid points surviving `depth` forward and `depth` backward steps.
///
/// Each block is sampled at `resolution` x `resolution` cell centers.
pub fn trapped_set_sample(sys: &OpenMapSystem, depth: usize, resolution: usize) -> Result<Vec<PhasePoint>> {
    if depth == 0 {
        return Err(LabError::Invalid("trapped set depth must be >= 1".into()));
    }
    if resolution == 0 {
        return Err(LabError::Invalid("grid resolution must be >= 1".into()));
    }
    if sys.pieces.is_empty() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for block in &sys.blocks {
        let rows: Vec<Vec<PhasePoint>> = (0..resolution)
            .into_par_iter()
            .map(|a| {
                let x = block.x0 + (a as f64 + 0.5) / resolution as f64 * block.width();
                (0..resolution)
                    .filter_map(|b| {
                        let xi = block.xi0 + (b as f64 + 0.5) / resolution as f64 * block.height();
                        let p = PhasePoint::new(x, xi);
                        (forward_depth(sys, &p, depth) >= depth && backward_depth(sys, &p, depth) >= depth)
                            .then_some(p)
                    })
                    .collect()
            })
            .collect();
        out.extend(rows.into_iter().flatten());
    }
    Ok(out)
}

/// Number of forward steps (capped at `cap`) before p leaves the domain.
pub fn forward_depth(sys: &OpenMapSystem, p: &PhasePoint, cap: usize) -> usize {
    let mut q = *p;
    for k in 0..cap {
        match sys.forward(&q) {
            Some((_, r)) => q = r,
            None => return k,
        }
    }
    cap
}

/// Number of backward steps (capped at `cap`) before p leaves the image.
pub fn backward_depth(sys: &OpenMapSystem, p: &PhasePoint, cap: usize) -> usize {
    let mut q = *p;
    for k in 0..cap {
        match sys.backward(&q) {
            Some((_, r)) => q = r,
            None => return k,
        }
    }
    cap
}

/// Writes survivor points as CSV rows (x, xi, depth).
pub fn write_survivors_csv(path: &Path, points: &[PhasePoint], depth: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "xi", "depth"])?;
    for p in points {
        w.write_record([format!("{:.17e}", p.x), format!("{:.17e}", p.xi), depth.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn expanding_eigenvector(m: &Mat2) -> [f64; 2] {
    let tr = m.trace();
    let det = m.det();
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    let lam = if tr >= 0.0 { (tr + disc) / 2.0 } else { (tr - disc) / 2.0 };
    let [[a, b], [c, d]] = m.0;
    let v1 = [b, lam - a];
    let v2 = [lam - d, c];
    let v = if norm(v1) >= norm(v2) { v1 } else { v2 };
    if norm(v) < 1e-300 {
        if a.abs() >= d.abs() {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    } else {
        normalize(v)
    }
}

/// Unit vector spanning E_u at p, pushed forward from up to 40 steps in the past.
pub fn unstable_direction(sys: &OpenMapSystem, p: &PhasePoint) -> Result<[f64; 2]> {
    let mut past = vec![*p];
    for _ in 0..DIRECTION_DEPTH {
        match sys.backward(past.last().unwrap()) {
            Some((_, q)) => past.push(q),
            None => break,
        }
    }
    let start = *past.last().unwrap();
    let d0 = sys
        .differential(&start)
        .ok_or(LabError::Escaped { step: 0 })?;
    let mut v = expanding_eigenvector(&d0);
    for k in (0..past.len() - 1).rev() {
        let d = sys.differential(&past[k + 1]).ok_or(LabError::Escaped { step: 0 })?;
        v = normalize(d.apply(v));
    }
    Ok(v)
}

/// Unit vector spanning E_s at p, pulled back from up to 40 steps in the future.
pub fn stable_direction(sys: &OpenMapSystem, p: &PhasePoint) -> Result<[f64; 2]> {
    let mut future = vec![*p];
    for _ in 0..DIRECTION_DEPTH {
        match sys.forward(future.last().unwrap()) {
            Some((_, q)) => future.push(q),
            None => break,
        }
    }
    let mut v = None;
    for q in future.iter().rev().skip(1) {
        let d = sys.differential(q).ok_or(LabError::Escaped { step: 0 })?;
        let inv = d.inverse().ok_or_else(|| LabError::Numerical("singular differential".into()))?;
        let w = match v {
            None => expanding_eigenvector(&inv),
            Some(w) => w,
        };
        v = Some(normalize(inv.apply(w)));
    }
    match v {
        Some(v) => Ok(v),
        None => Err(LabError::Escaped { step: 0 }),
    }
}

/// Norm growth of a unit vector under the n-step differential (n may be negative).
pub fn vector_growth(sys: &OpenMapSystem, p: &PhasePoint, v: [f64; 2], n: i64) -> Result<f64> {
    let mut q = *p;
    let mut v = normalize(v);
    let mut log_growth = 0.0;
    if n >= 0 {
        for k in 0..n as usize {
            let (i, r) = sys.forward(&q).ok_or(LabError::Escaped { step: k })?;
            let d = sys.piece_differential(i, &q).ok_or(LabError::Escaped { step: k })?;
            let w = d.apply(v);
            let l = norm(w);
            log_growth += l.ln();
            v = [w[0] / l, w[1] / l];
            q = r;
        }
    } else {
        for k in 0..(-n) as usize {
            let (i, r) = sys.backward(&q).ok_or(LabError::Escaped { step: k })?;
            let d = sys.piece_differential(i, &r).ok_or(LabError::Escaped { step: k })?;
            let inv = d.inverse().ok_or_else(|| LabError::Numerical("singular differential".into()))?;
            let w = inv.apply(v);
            let l = norm(w);
            log_growth += l.ln();
            v = [w[0] / l, w[1] / l];
            q = r;
        }
    }
    Ok(log_growth.exp())
}

/// J^u_n(p): expansion of the differential of F^n along E_u.
pub fn unstable_jacobian(sys: &OpenMapSystem, p: &PhasePoint, n: i64) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let v = unstable_direction(sys, p)?;
    vector_growth(sys, p, v, n)
}

/// J^s_n(p): growth of the differential of F^n along E_s.
pub fn stable_jacobian(sys: &OpenMapSystem, p: &PhasePoint, n: i64) -> Result<f64> {
    if n == 0 {
        return Ok(1.0);
    }
    let v = stable_direction(sys, p)?;
    vector_growth(sys, p, v, n)
}

/// Trapped points with precomputed itineraries and cumulative Jacobians.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrappedPool {
    pub points: Vec<PhasePoint>,
    /// Cell of F^i p for i = 0..len.
    pub forward_codes: Vec<Vec<usize>>,
    /// Cell of F^{-i} p for i = 1..=len.
    pub backward_codes: Vec<Vec<usize>>,
    /// log J^u_n(p) for n = 0..=len of the forward code.
    pub log_ju: Vec<Vec<f64>>,
    /// log J^s_{-n}(p) for n = 0..=len of the backward code.
    pub log_js: Vec<Vec<f64>>,
    pub depth: usize,
    pub source: String,
}

impl TrappedPool {
    /// Builds a pool whose itineraries reach at least `depth` steps where possible.
    ///
    /// Baker and disk systems use periodic orbits; other systems use a survivor grid.
    pub fn build(sys: &OpenMapSystem, depth: usize) -> Result<Self> {
        let (points, source) = pool_points(sys, depth)?;
        let rows: Vec<_> = points
            .par_iter()
            .map(|p| itinerary(sys, p, 2 * depth + 2))
            .collect::<Result<Vec<_>>>()?;
        let mut pool = TrappedPool {
            points: Vec::with_capacity(rows.len()),
            forward_codes: Vec::new(),
            backward_codes: Vec::new(),
            log_ju: Vec::new(),
            log_js: Vec::new(),
            depth,
            source,
        };
        for (p, row) in points.into_iter().zip(rows) {
            if let Some((fc, bc, ju, js)) = row {
                pool.points.push(p);
                pool.forward_codes.push(fc);
                pool.backward_codes.push(bc);
                pool.log_ju.push(ju);
                pool.log_js.push(js);
            }
        }
        Ok(pool)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

type Itinerary = (Vec<usize>, Vec<usize>, Vec<f64>, Vec<f64>);

fn itinerary(sys: &OpenMapSystem, p: &PhasePoint, depth: usize) -> Result<Option<Itinerary>> {
    let Some(c0) = sys.cell_of(p) else {
        return Ok(None);
    };
    let (Ok(vu), Ok(vs)) = (unstable_direction(sys, p), stable_direction(sys, p)) else {
        return Ok(None);
    };
    let mut fc = vec![c0];
    let mut ju = vec![0.0];
    let mut q = *p;
    let mut v = vu;
    for _ in 0..depth {
        let Some((i, r)) = sys.forward(&q) else { break };
        let Some(d) = sys.piece_differential(i, &q) else { break };
        let w = d.apply(v);
        let l = norm(w);
        let Some(c) = sys.cell_of(&r) else { break };
        ju.push(ju.last().unwrap() + l.ln());
        v = [w[0] / l, w[1] / l];
        fc.push(c);
        q = r;
    }
    let mut bc = Vec::new();
    let mut js = vec![0.0];
    let mut q = *p;
    let mut v = vs;
    for _ in 0..depth {
        let Some((i, r)) = sys.backward(&q) else { break };
        let Some(d) = sys.piece_differential(i, &r) else { break };
        let Some(inv) = d.inverse() else { break };
        let w = inv.apply(v);
        let l = norm(w);
        let Some(c) = sys.cell_of(&r) else { break };
        js.push(js.last().unwrap() + l.ln());
        v = [w[0] / l, w[1] / l];
        bc.push(c);
        q = r;
    }
    Ok(Some((fc, bc, ju, js)))
}

fn pool_points(sys: &OpenMapSystem, depth: usize) -> Result<(Vec<PhasePoint>, String)> {
    let Some(first) = sys.pieces.first() else {
        return Ok((Vec::new(), "empty".into()));
    };
    match &first.kind {
        PieceKind::Linear { .. } => Ok((vec![PhasePoint::new(0.0, 0.0)], "fixed point".into())),
        PieceKind::TorusLinear { .. } => {
            let n = 48;
            let pts = (0..n * n)
                .map(|k| PhasePoint::new((k / n) as f64 / n as f64 + 0.5 / n as f64, (k % n) as f64 / n as f64 + 0.5 / n as f64))
                .collect();
            Ok((pts, "torus grid 48x48".into()))
        }
        PieceKind::Baker { shear, .. } if *shear == 0.0 => {
            let (base, branches) = sys.baker_branches()?;
            let period = depth.clamp(1, 12);
            Ok((baker_periodic_points(base, &branches, period), format!("baker periodic orbits of period {period}")))
        }
        PieceKind::Billiard { .. } => {
            let pts = disk_periodic_points(sys, &[depth.max(2), depth.max(2) + 1])?;
            Ok((pts, format!("disk periodic orbits of periods {} and {}", depth.max(2), depth.max(2) + 1)))
        }
        PieceKind::Baker { .. } => {
            let d = depth.clamp(1, 8);
            Ok((trapped_set_sample(sys, d, 729)?, format!("survivor grid depth {d} resolution 729")))
        }
    }
}

/// Periodic points of period `period` of the unsheared open baker.
///
/// The point with future branch sequence b_0 b_1 ... has base-L digits b_i in x
/// and past digits b_{-1} b_{-2} ... in xi.
pub fn baker_periodic_points(base: usize, branches: &[usize], period: usize) -> Vec<PhasePoint> {
    let l = base as f64;
    let denom = l.powi(period as i32) - 1.0;
    let count = branches.len().pow(period as u32);
    let mut out = Vec::with_capacity(count);
    for mut code in 0..count {
        let mut word = Vec::with_capacity(period);
        for _ in 0..period {
            word.push(branches[code % branches.len()]);
            code /= branches.len();
        }
        let mut x = 0.0;
        for &b in &word {
            x = x * l + b as f64;
        }
        let mut xi = 0.0;
        for &b in word.iter().rev() {
            xi = xi * l + b as f64;
        }
        let p = PhasePoint::new(x / denom, xi / denom);
        if p.x < 1.0 && p.xi < 1.0 {
            out.push(p);
        }
    }
    out
}

/// Cyclic disk codes of the given length with distinct neighbours, up to rotation.
pub fn disk_codes(disks: usize, length: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut code = vec![0usize; length];
    fn rec(k: usize, code: &mut Vec<usize>, disks: usize, out: &mut Vec<Vec<usize>>) {
        let n = code.len();
        if k == n {
            if code[n - 1] != code[0] {
                let canonical = (0..n).all(|r| {
                    let rot: Vec<usize> = (0..n).map(|i| code[(i + r) % n]).collect();
                    rot >= *code
                });
                if canonical {
                    out.push(code.clone());
                }
            }
            return;
        }
        for d in 0..disks {
            if k > 0 && code[k - 1] == d {
                continue;
            }
            code[k] = d;
            rec(k + 1, code, disks, out);
        }
    }
    if length >= 2 {
        rec(0, &mut code, disks, &mut out);
    }
    out
}

/// All points of the disk periodic orbits with the given periods.
pub fn disk_periodic_points(sys: &OpenMapSystem, periods: &[usize]) -> Result<Vec<PhasePoint>> {
    let g = sys
        .disks
        .as_ref()
        .ok_or_else(|| LabError::Invalid("not a disk system".into()))?;
    let codes: Vec<Vec<usize>> = periods.iter().flat_map(|&p| disk_codes(g.len(), p)).collect();
    let orbits: Vec<Vec<PhasePoint>> = codes
        .par_iter()
        .filter_map(|code| {
            let orbit = g.periodic_orbit(code).ok()?;
            Some(
                orbit
                    .iter()
                    .zip(code)
                    .map(|((s, eta), &j)| PhasePoint::new(g.offsets[j] + s, *eta))
                    .collect(),
            )
        })
        .collect();
    let mut pts: Vec<PhasePoint> = orbits.into_iter().flatten().collect();
    pts.dedup_by(|a, b| a.dist_sup(b) < 1e-12);
    Ok(pts)
}

/// Per-step expansion bounds from disk periodic orbits up to `max_period`, widened by `margin`.
pub fn estimate_lambda_bounds(sys: &OpenMapSystem, max_period: usize, margin: f64) -> Result<(f64, f64)> {
    let periods: Vec<usize> = (2..=max_period).collect();
    let pts = disk_periodic_points(sys, &periods)?;
    let logs: Vec<f64> = pts
        .par_iter()
        .filter_map(|p| unstable_jacobian(sys, p, 1).ok().map(f64::ln))
        .collect();
    if logs.is_empty() {
        return Err(LabError::Numerical("no periodic orbits for expansion bounds".into()));
    }
    let lo = logs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo * (1.0 - margin), hi * (1.0 + margin)))
}

/// Writes a small CSV line per pool point: x, xi and the pool depth.
pub fn write_pool_csv<W: Write>(out: W, pool: &TrappedPool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "xi", "forward_depth", "backward_depth"])?;
    for k in 0..pool.len() {
        w.write_record([
            format!("{:.17e}", pool.points[k].x),
            format!("{:.17e}", pool.points[k].xi),
            (pool.forward_codes[k].len() - 1).to_string(),
            pool.backward_codes[k].len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
