//! Open maps as finite families of invertible pieces between rectangular blocks.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::billiard::DiskGeometry;
use crate::error::{LabError, Result};
use crate::phase::{Mat2, PhasePoint, Rect};

/// The concrete formula behind a map piece.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PieceKind {
    /// Linear map on an open chart; the domain is the block intersected with the preimage of the block.
    Linear { matrix: Mat2 },
    /// Integer matrix acting on the torus, followed by xi += shear * sin(2 pi x) / (2 pi).
    TorusLinear { matrix: [[i64; 2]; 2], shear: f64 },
    /// Branch `branch` of the base-L baker, followed by the shear xi += shear * sin(2 pi x) / (2 pi).
    Baker { base: usize, branch: usize, shear: f64 },
    /// Bounce from one disk to another.
    Billiard { from_disk: usize, to_disk: usize },
}

/// One invertible piece F_ij from block j to block i.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MapPiece {
    pub from_block: usize,
    pub to_block: usize,
    /// Bounding rectangle of the domain.
    pub domain: Rect,
    pub kind: PieceKind,
}

/// A macroscopic neighborhood V_q of the partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    /// Half-open sup-metric ball (a rectangle).
    Box(Rect),
    /// The domain of a map piece.
    Piece(usize),
}

/// Descriptive data recorded at construction.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct SystemMetadata {
    pub kind: String,
    pub epsilon0: f64,
    pub torus: bool,
    pub has_hole: bool,
    pub warnings: Vec<String>,
    pub eclipse_clearance: Option<f64>,
}

/// A symbolic word over the partition alphabet.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SymbolicWord(pub Vec<usize>);

impl SymbolicWord {
    /// Validates the letters against an alphabet of size `q`.
    pub fn new(letters: Vec<usize>, q: usize) -> Result<Self> {
        if letters.is_empty() {
            return Err(LabError::Invalid("empty word".into()));
        }
        if let Some(l) = letters.iter().find(|l| **l >= q) {
            return Err(LabError::Invalid(format!("letter {l} outside alphabet of size {q}")));
        }
        Ok(Self(letters))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn concat(&self, other: &SymbolicWord) -> SymbolicWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        SymbolicWord(v)
    }
}

/// Open hyperbolic map F as a disjoint union of pieces.
#[derive(Debug, Serialize, Deserialize)]
pub struct OpenMapSystem {
    pub blocks: Vec<Rect>,
    pub pieces: Vec<MapPiece>,
    pub partition: Vec<Cell>,
    pub lambda_bounds: (f64, f64),
    pub disks: Option<DiskGeometry>,
    pub meta: SystemMetadata,
    #[serde(skip)]
    transitions: OnceLock<Vec<Vec<bool>>>,
}

impl Clone for OpenMapSystem {
    fn clone(&self) -> Self {
        Self {
            blocks: self.blocks.clone(),
            pieces: self.pieces.clone(),
            partition: self.partition.clone(),
            lambda_bounds: self.lambda_bounds,
            disks: self.disks.clone(),
            meta: self.meta.clone(),
            transitions: OnceLock::new(),
        }
    }
}

fn psi(x: f64) -> f64 {
    (2.0 * PI * x).sin() / (2.0 * PI)
}

fn dpsi(x: f64) -> f64 {
    (2.0 * PI * x).cos()
}

fn ddpsi(x: f64) -> f64 {
    -2.0 * PI * (2.0 * PI * x).sin()
}

fn wrap_unit(v: f64) -> f64 {
    let w = v.rem_euclid(1.0);
    if w >= 1.0 {
        0.0
    } else {
        w
    }
}

fn torus_matrix(m: &[[i64; 2]; 2]) -> Mat2 {
    Mat2::new(m[0][0] as f64, m[0][1] as f64, m[1][0] as f64, m[1][1] as f64)
}

fn eigen_lambda(m: &Mat2) -> Option<f64> {
    let tr = m.trace();
    let det = m.det();
    let disc = tr * tr - 4.0 * det;
    if disc <= 0.0 {
        return None;
    }
    let l = (tr.abs() + disc.sqrt()) / 2.0;
    (l > 1.0).then(|| l.ln())
}

impl OpenMapSystem {
    fn assemble(
        blocks: Vec<Rect>,
        pieces: Vec<MapPiece>,
        partition: Vec<Cell>,
        lambda_bounds: (f64, f64),
        disks: Option<DiskGeometry>,
        meta: SystemMetadata,
    ) -> Result<Self> {
        let sys = Self {
            blocks,
            pieces,
            partition,
            lambda_bounds,
            disks,
            meta,
            transitions: OnceLock::new(),
        };
        sys.check_partition()?;
        Ok(sys)
    }

    /// The model map (x, xi) -> (x/2, 2 xi) on the box [-hx, hx) x [-hxi, hxi).
    pub fn linear_model(hx: f64, hxi: f64) -> Result<Self> {
        Self::linear_chart(Mat2::diag(0.5, 2.0), hx, hxi)
    }

    /// A hyperbolic linear map on an open box chart centered at its fixed point.
    pub fn linear_chart(matrix: Mat2, hx: f64, hxi: f64) -> Result<Self> {
        if !(hx > 0.0 && hxi > 0.0) {
            return Err(LabError::Config("box half-widths must be positive".into()));
        }
        if (matrix.det() - 1.0).abs() > 1e-12 {
            return Err(LabError::Config("linear chart matrix must have determinant 1".into()));
        }
        let lam = eigen_lambda(&matrix)
            .ok_or_else(|| LabError::Config("linear chart matrix is not hyperbolic".into()))?;
        let block = Rect::new(-hx, hx, -hxi, hxi);
        let inv = matrix.inverse().expect("det 1");
        // bounding box of block ∩ A^{-1}(block)
        let rx = (inv.0[0][0].abs() * hx + inv.0[0][1].abs() * hxi).min(hx);
        let rxi = (inv.0[1][0].abs() * hx + inv.0[1][1].abs() * hxi).min(hxi);
        let piece = MapPiece {
            from_block: 0,
            to_block: 0,
            domain: Rect::new(-rx, rx, -rxi, rxi),
            kind: PieceKind::Linear { matrix },
        };
        let eps0 = rx.min(rxi) / 4.0;
        let cell = Cell::Box(Rect::around(PhasePoint::new(0.0, 0.0), 2.0 * eps0 * (rx / rx.min(rxi)).min(1.0), 2.0 * eps0));
        let meta = SystemMetadata {
            kind: "linear".into(),
            epsilon0: eps0,
            torus: false,
            has_hole: true,
            ..Default::default()
        };
        Self::assemble(vec![block], vec![piece], vec![cell], (lam, lam), None, meta)
    }

    /// Hyperbolic automorphism of the torus given by an integer matrix of determinant 1.
    pub fn cat_map(matrix: [[i64; 2]; 2]) -> Result<Self> {
        Self::perturbed_cat_map(matrix, 0.0)
    }

    /// Torus automorphism followed by the shear xi -> xi + shear * sin(2 pi x) / (2 pi).
    pub fn perturbed_cat_map(matrix: [[i64; 2]; 2], shear: f64) -> Result<Self> {
        let m = Mat2::new(
            matrix[0][0] as f64,
            matrix[0][1] as f64,
            matrix[1][0] as f64,
            matrix[1][1] as f64,
        );
        if matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0] != 1 {
            return Err(LabError::Config("torus matrix must have determinant 1".into()));
        }
        let lam = eigen_lambda(&m).ok_or_else(|| LabError::Config("torus matrix is not hyperbolic".into()))?;
        let sheared = Mat2::new(1.0, 0.0, shear.abs(), 1.0).mul(&m);
        let lam_hi = eigen_lambda(&sheared).map_or(lam, |l| l.max(lam)) + shear.abs();
        let lam_lo = (lam - shear.abs() * 2.0).max(0.0);
        let block = Rect::new(0.0, 1.0, 0.0, 1.0);
        let piece = MapPiece {
            from_block: 0,
            to_block: 0,
            domain: block,
            kind: PieceKind::TorusLinear { matrix, shear },
        };
        let meta = SystemMetadata {
            kind: "cat".into(),
            epsilon0: 0.25,
            torus: true,
            has_hole: false,
            warnings: vec!["closed system: (Fractal) fails, P(phi_u) >= 0".into()],
            ..Default::default()
        };
        Self::assemble(vec![block], vec![piece], vec![Cell::Box(block)], (lam_lo, lam_hi), None, meta)
    }

    /// Open baker map of base L keeping the listed branches.
    pub fn open_baker(base: usize, kept: &[usize]) -> Result<Self> {
        Self::sheared_baker(base, kept, 0.0)
    }

    /// Open baker followed by the symplectic shear xi -> xi + shear * sin(2 pi x) / (2 pi).
    pub fn sheared_baker(base: usize, kept: &[usize], shear: f64) -> Result<Self> {
        if base < 2 {
            return Err(LabError::Config("baker base must be at least 2".into()));
        }
        let mut kept: Vec<usize> = kept.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if kept.iter().any(|b| *b >= base) {
            return Err(LabError::Config(format!("kept branches {kept:?} outside 0..{base}")));
        }
        let l = base as f64;
        let block = Rect::new(0.0, 1.0, 0.0, 1.0);
        let pieces: Vec<MapPiece> = kept
            .iter()
            .map(|&b| MapPiece {
                from_block: 0,
                to_block: 0,
                domain: Rect::new(b as f64 / l, (b + 1) as f64 / l, 0.0, 1.0),
                kind: PieceKind::Baker { base, branch: b, shear },
            })
            .collect();
        let partition = (0..pieces.len()).map(Cell::Piece).collect();
        let mut warnings = Vec::new();
        let has_hole = kept.len() < base;
        if !has_hole {
            warnings.push("closed system: (Fractal) fails, P(phi_u) >= 0".into());
        }
        if kept.is_empty() {
            warnings.push("no branches kept: empty map".into());
        }
        let slope = 9.0 * shear.abs() / 8.0;
        let lo = (l / (1.0 + slope * slope).sqrt()).ln();
        let hi = (l * l + (slope / l + l * shear.abs()).powi(2)).sqrt().ln();
        let meta = SystemMetadata {
            kind: "baker".into(),
            epsilon0: 0.25 / l,
            torus: true,
            has_hole,
            warnings,
            ..Default::default()
        };
        Self::assemble(vec![block], pieces, partition, (lo, hi), None, meta)
    }

    /// Billiard map between disjoint disks satisfying the non-eclipse condition.
    pub fn disks(centers: Vec<[f64; 2]>, radii: Vec<f64>) -> Result<Self> {
        let geom = DiskGeometry::new(centers, radii)?;
        let k = geom.len();
        let blocks: Vec<Rect> = (0..k)
            .map(|j| Rect::new(geom.offsets[j], geom.offsets[j] + geom.perimeter(j), -1.0, 1.0))
            .collect();
        let mut pieces = Vec::new();
        for j in 0..k {
            for i in 0..k {
                if i != j {
                    pieces.push(MapPiece {
                        from_block: j,
                        to_block: i,
                        domain: blocks[j],
                        kind: PieceKind::Billiard { from_disk: j, to_disk: i },
                    });
                }
            }
        }
        let partition = (0..pieces.len()).map(Cell::Piece).collect();
        let clearance = geom.clearance;
        let min_r = geom.radii.iter().cloned().fold(f64::INFINITY, f64::min);
        let meta = SystemMetadata {
            kind: "disks".into(),
            epsilon0: 0.05 * min_r,
            torus: false,
            has_hole: true,
            eclipse_clearance: clearance.is_finite().then_some(clearance),
            warnings: Vec::new(),
        };
        let mut sys = Self::assemble(blocks, pieces, partition, (0.0, f64::INFINITY), Some(geom), meta)?;
        sys.lambda_bounds = super::orbits::estimate_lambda_bounds(&sys, if k == 2 { 2 } else { 7 }, 0.05)?;
        Ok(sys)
    }

    /// Three-disk billiard.
    pub fn three_disk(centers: Vec<[f64; 2]>, radii: Vec<f64>) -> Result<Self> {
        if centers.len() != 3 || radii.len() != 3 {
            return Err(LabError::Config("three_disk needs exactly three centers and radii".into()));
        }
        Self::disks(centers, radii)
    }

    /// Replaces the partition, checking that it is valid for this system.
    pub fn with_partition(mut self, partition: Vec<Cell>) -> Result<Self> {
        self.partition = partition;
        self.transitions = OnceLock::new();
        self.check_partition()?;
        Ok(self)
    }

    /// Markov partition of the baker into the squares {a} x {b} of kept branches.
    pub fn baker_square_partition(&self) -> Result<Vec<Cell>> {
        let (base, branches) = self.baker_branches()?;
        let l = base as f64;
        let mut cells = Vec::new();
        for &a in &branches {
            for &b in &branches {
                cells.push(Cell::Box(Rect::new(
                    a as f64 / l,
                    (a + 1) as f64 / l,
                    b as f64 / l,
                    (b + 1) as f64 / l,
                )));
            }
        }
        Ok(cells)
    }

    /// Base and kept branch digits of a baker system.
    pub fn baker_branches(&self) -> Result<(usize, Vec<usize>)> {
        let mut base = 0;
        let mut out = Vec::new();
        for p in &self.pieces {
            match p.kind {
                PieceKind::Baker { base: l, branch, .. } => {
                    base = l;
                    out.push(branch);
                }
                _ => return Err(LabError::Invalid("not a baker system".into())),
            }
        }
        if out.is_empty() {
            return Err(LabError::Invalid("baker system without branches".into()));
        }
        Ok((base, out))
    }

    fn check_partition(&self) -> Result<()> {
        for (q, c) in self.partition.iter().enumerate() {
            match c {
                Cell::Piece(i) if *i >= self.pieces.len() => {
                    return Err(LabError::Config(format!("partition cell {q} names missing piece {i}")));
                }
                Cell::Box(r) if !(r.width() > 0.0 && r.height() > 0.0) => {
                    return Err(LabError::Config(format!("partition cell {q} is degenerate")));
                }
                _ => {}
            }
        }
        for a in 0..self.partition.len() {
            for b in a + 1..self.partition.len() {
                if let (Cell::Box(r1), Cell::Box(r2)) = (&self.partition[a], &self.partition[b]) {
                    if r1.intersects(r2) {
                        return Err(LabError::Config(format!("partition cells {a} and {b} overlap")));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn is_torus(&self) -> bool {
        self.meta.torus
    }

    /// Size of the partition alphabet.
    pub fn alphabet_size(&self) -> usize {
        self.partition.len()
    }

    /// Reduces a point to the fundamental domain on the torus.
    pub fn wrap(&self, p: PhasePoint) -> PhasePoint {
        if self.meta.torus {
            PhasePoint::new(wrap_unit(p.x), wrap_unit(p.xi))
        } else {
            p
        }
    }

    /// Chart displacement from `a` to `b` (shortest representative on the torus).
    pub fn displacement(&self, a: &PhasePoint, b: &PhasePoint) -> [f64; 2] {
        let mut d = [b.x - a.x, b.xi - a.xi];
        if self.meta.torus {
            for v in d.iter_mut() {
                *v -= v.round();
            }
        }
        d
    }

    pub fn block_of(&self, p: &PhasePoint) -> Option<usize> {
        let p = self.wrap(*p);
        self.blocks.iter().position(|b| b.contains(&p))
    }

    fn disk_local(&self, disk: usize, p: &PhasePoint) -> Option<(f64, f64)> {
        let g = self.disks.as_ref()?;
        let s = p.x - g.offsets[disk];
        (s >= 0.0 && s < g.perimeter(disk) && p.xi.abs() < 1.0).then_some((s, p.xi))
    }

    /// Whether p lies in the domain of piece i.
    pub fn piece_contains(&self, i: usize, p: &PhasePoint) -> bool {
        self.piece_forward(i, p).is_some()
    }

    /// F_i(p) when p lies in the domain of piece i.
    pub fn piece_forward(&self, i: usize, p: &PhasePoint) -> Option<PhasePoint> {
        let piece = &self.pieces[i];
        match &piece.kind {
            PieceKind::Linear { matrix } => {
                let block = &self.blocks[piece.from_block];
                if !block.contains(p) {
                    return None;
                }
                let v = matrix.apply([p.x, p.xi]);
                let q = PhasePoint::new(v[0], v[1]);
                block.contains(&q).then_some(q)
            }
            PieceKind::TorusLinear { matrix, shear } => {
                let p = self.wrap(*p);
                let x = wrap_unit(matrix[0][0] as f64 * p.x + matrix[0][1] as f64 * p.xi);
                let xi = matrix[1][0] as f64 * p.x + matrix[1][1] as f64 * p.xi + shear * psi(x);
                Some(self.wrap(PhasePoint::new(x, xi)))
            }
            PieceKind::Baker { base, branch, shear } => {
                let p = self.wrap(*p);
                let l = *base as f64;
                let b = *branch as f64;
                if !(p.x >= b / l && p.x < (b + 1.0) / l) {
                    return None;
                }
                let x = (l * p.x - b).clamp(0.0, 1.0 - f64::EPSILON);
                let xi = (p.xi + b) / l + shear * psi(x);
                Some(PhasePoint::new(x, wrap_unit(xi)))
            }
            PieceKind::Billiard { from_disk, to_disk } => {
                let (s, eta) = self.disk_local(*from_disk, p)?;
                let g = self.disks.as_ref()?;
                let ch = g.forward(*from_disk, *to_disk, s, eta)?;
                Some(PhasePoint::new(g.offsets[*to_disk] + ch.s, ch.eta))
            }
        }
    }

    /// F_i^{-1}(p) when p lies in the image of piece i.
    pub fn piece_inverse(&self, i: usize, p: &PhasePoint) -> Option<PhasePoint> {
        let piece = &self.pieces[i];
        match &piece.kind {
            PieceKind::Linear { matrix } => {
                let block = &self.blocks[piece.to_block];
                if !block.contains(p) {
                    return None;
                }
                let v = matrix.inverse()?.apply([p.x, p.xi]);
                let q = PhasePoint::new(v[0], v[1]);
                block.contains(&q).then_some(q)
            }
            PieceKind::TorusLinear { matrix, shear } => {
                let p = self.wrap(*p);
                let p = PhasePoint::new(p.x, p.xi - shear * psi(p.x));
                let [[a, b], [c, d]] = *matrix;
                let x = d as f64 * p.x - b as f64 * p.xi;
                let xi = -(c as f64) * p.x + a as f64 * p.xi;
                Some(self.wrap(PhasePoint::new(x, xi)))
            }
            PieceKind::Baker { base, branch, shear } => {
                let p = self.wrap(*p);
                let l = *base as f64;
                let xi1 = wrap_unit(p.xi - shear * psi(p.x));
                let j = ((l * xi1).floor() as usize).min(base - 1);
                if j != *branch {
                    return None;
                }
                let x = (p.x + j as f64) / l;
                let xi = (l * xi1 - j as f64).clamp(0.0, 1.0 - f64::EPSILON);
                Some(PhasePoint::new(x, xi))
            }
            PieceKind::Billiard { from_disk, to_disk } => {
                let (s, eta) = self.disk_local(*to_disk, p)?;
                let g = self.disks.as_ref()?;
                let (s0, eta0) = g.backward(*from_disk, *to_disk, s, eta)?;
                Some(PhasePoint::new(g.offsets[*from_disk] + s0, eta0))
            }
        }
    }

    /// Differential of piece i at a domain point.
    pub fn piece_differential(&self, i: usize, p: &PhasePoint) -> Option<Mat2> {
        let piece = &self.pieces[i];
        match &piece.kind {
            PieceKind::Linear { matrix } => Some(*matrix),
            PieceKind::TorusLinear { matrix, shear } => {
                let m = torus_matrix(matrix);
                let p = self.wrap(*p);
                let x = m.0[0][0] * p.x + m.0[0][1] * p.xi;
                Some(Mat2::new(1.0, 0.0, shear * dpsi(x), 1.0).mul(&m))
            }
            PieceKind::Baker { base, branch, shear } => {
                let p = self.wrap(*p);
                let l = *base as f64;
                let x = l * p.x - *branch as f64;
                Some(Mat2::new(l, 0.0, shear * dpsi(x) * l, 1.0 / l))
            }
            PieceKind::Billiard { from_disk, to_disk } => {
                let (s, eta) = self.disk_local(*from_disk, p)?;
                let g = self.disks.as_ref()?;
                let ch = g.forward(*from_disk, *to_disk, s, eta)?;
                Some(g.differential(*from_disk, *to_disk, &ch))
            }
        }
    }

    /// Partial derivatives of the differential with respect to x and xi.
    ///
    /// Billiard pieces difference the closed-form differential.
    pub fn piece_differential_derivative(&self, i: usize, p: &PhasePoint) -> Option<[Mat2; 2]> {
        let piece = &self.pieces[i];
        let zero = Mat2::new(0.0, 0.0, 0.0, 0.0);
        match &piece.kind {
            PieceKind::Linear { .. } => Some([zero, zero]),
            PieceKind::TorusLinear { matrix, shear } => {
                let m = torus_matrix(matrix);
                let p = self.wrap(*p);
                let x = m.0[0][0] * p.x + m.0[0][1] * p.xi;
                let s = shear * ddpsi(x);
                Some([
                    Mat2::new(0.0, 0.0, s * m.0[0][0], 0.0).mul(&m),
                    Mat2::new(0.0, 0.0, s * m.0[0][1], 0.0).mul(&m),
                ])
            }
            PieceKind::Baker { base, branch, shear } => {
                let p = self.wrap(*p);
                let l = *base as f64;
                let x = l * p.x - *branch as f64;
                Some([Mat2::new(0.0, 0.0, shear * ddpsi(x) * l * l, 0.0), zero])
            }
            PieceKind::Billiard { .. } => {
                let h = 1e-6;
                let dx = self
                    .piece_differential(i, &p.add([h, 0.0]))?
                    .sub(&self.piece_differential(i, &p.add([-h, 0.0]))?)
                    .scale(0.5 / h);
                let dxi = self
                    .piece_differential(i, &p.add([0.0, h]))?
                    .sub(&self.piece_differential(i, &p.add([0.0, -h]))?)
                    .scale(0.5 / h);
                Some([dx, dxi])
            }
        }
    }

    /// One step of F: the piece used and the image, or `None` in the hole.
    pub fn step(&self, p: &PhasePoint) -> Result<Option<(usize, PhasePoint)>> {
        if !p.is_finite() {
            return Err(LabError::Invalid("non-finite phase point".into()));
        }
        let Some(block) = self.block_of(p) else {
            return Ok(None);
        };
        let mut found = None;
        for (i, piece) in self.pieces.iter().enumerate() {
            if piece.from_block != block {
                continue;
            }
            if let Some(q) = self.piece_forward(i, p) {
                if found.is_some() {
                    return Err(LabError::Config(format!("overlapping piece domains at ({}, {})", p.x, p.xi)));
                }
                found = Some((i, q));
            }
        }
        Ok(found)
    }

    /// One step of F^{-1}.
    pub fn step_back(&self, p: &PhasePoint) -> Result<Option<(usize, PhasePoint)>> {
        if !p.is_finite() {
            return Err(LabError::Invalid("non-finite phase point".into()));
        }
        let Some(block) = self.block_of(p) else {
            return Ok(None);
        };
        let mut found = None;
        for (i, piece) in self.pieces.iter().enumerate() {
            if piece.to_block != block {
                continue;
            }
            if let Some(q) = self.piece_inverse(i, p) {
                if found.is_some() {
                    return Err(LabError::Config(format!("overlapping piece images at ({}, {})", p.x, p.xi)));
                }
                found = Some((i, q));
            }
        }
        Ok(found)
    }

    /// Infallible variant of [`step`](Self::step) for hot loops on validated systems.
    pub fn forward(&self, p: &PhasePoint) -> Option<(usize, PhasePoint)> {
        self.step(p).ok().flatten()
    }

    /// Infallible variant of [`step_back`](Self::step_back).
    pub fn backward(&self, p: &PhasePoint) -> Option<(usize, PhasePoint)> {
        self.step_back(p).ok().flatten()
    }

    /// Differential of F at p.
    pub fn differential(&self, p: &PhasePoint) -> Option<Mat2> {
        let (i, _) = self.forward(p)?;
        self.piece_differential(i, p)
    }

    /// Whether p lies in cell q of the partition.
    pub fn cell_contains(&self, q: usize, p: &PhasePoint) -> bool {
        match &self.partition[q] {
            Cell::Box(r) => r.contains(&self.wrap(*p)),
            Cell::Piece(i) => self.piece_contains(*i, p),
        }
    }

    /// Sup-distance from p to cell q; piece cells report 0 inside and 1 outside.
    pub fn cell_distance(&self, q: usize, p: &PhasePoint) -> f64 {
        match &self.partition[q] {
            Cell::Box(r) => r.dist_sup(&self.wrap(*p)),
            Cell::Piece(i) => {
                if self.piece_contains(*i, p) {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// First partition cell containing p.
    pub fn cell_of(&self, p: &PhasePoint) -> Option<usize> {
        (0..self.partition.len()).find(|&q| self.cell_contains(q, p))
    }

    /// Bounding rectangle of a partition cell.
    pub fn cell_bounds(&self, q: usize) -> Rect {
        match &self.partition[q] {
            Cell::Box(r) => *r,
            Cell::Piece(i) => self.pieces[*i].domain,
        }
    }

    /// Cell transitions q -> r with F(V_q) ∩ V_r non-empty, detected on a sampling grid.
    pub fn transition_matrix(&self) -> &Vec<Vec<bool>> {
        self.transitions.get_or_init(|| {
            let q = self.partition.len();
            let mut t = vec![vec![false; q]; q];
            let res = 400;
            for (a, row) in t.iter_mut().enumerate() {
                if let Cell::Piece(i) = self.partition[a] {
                    // piece cells: successors are the pieces leaving the target block
                    let to = self.pieces[i].to_block;
                    for (b, cell) in self.partition.iter().enumerate() {
                        if let Cell::Piece(j) = cell {
                            row[b] = self.pieces[*j].from_block == to && self.piece_images_meet(i, *j, res);
                        } else {
                            row[b] = self.cell_images_meet(a, b, res);
                        }
                    }
                } else {
                    for (b, v) in row.iter_mut().enumerate() {
                        *v = self.cell_images_meet(a, b, res);
                    }
                }
            }
            t
        })
    }

    fn piece_images_meet(&self, i: usize, j: usize, res: usize) -> bool {
        let r = self.pieces[i].domain;
        (0..res).any(|a| {
            (0..res).any(|b| {
                let p = PhasePoint::new(
                    r.x0 + (a as f64 + 0.5) / res as f64 * r.width(),
                    r.xi0 + (b as f64 + 0.5) / res as f64 * r.height(),
                );
                self.piece_forward(i, &p).is_some_and(|q| self.piece_contains(j, &q))
            })
        })
    }

    fn cell_images_meet(&self, a: usize, b: usize, res: usize) -> bool {
        let r = self.cell_bounds(a);
        (0..res).any(|u| {
            (0..res).any(|v| {
                let p = PhasePoint::new(
                    r.x0 + (u as f64 + 0.5) / res as f64 * r.width(),
                    r.xi0 + (v as f64 + 0.5) / res as f64 * r.height(),
                );
                self.cell_contains(a, &p)
                    && self.forward(&p).is_some_and(|(_, q)| self.cell_contains(b, &q))
            })
        })
    }

    /// Piece transition matrix: i -> j when F_i's image meets F_j's domain.
    pub fn piece_transitions(&self) -> Vec<Vec<bool>> {
        let n = self.pieces.len();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        self.pieces[j].from_block == self.pieces[i].to_block && self.piece_images_meet(i, j, 200)
                    })
                    .collect()
            })
            .collect()
    }
}
