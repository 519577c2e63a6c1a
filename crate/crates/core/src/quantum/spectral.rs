//! Spectral radius, power norms and their reductions.

use serde::{Deserialize, Serialize};

use super::operator::DenseOperator;
use crate::error::{LabError, Result};
use crate::linalg::{c64, eigenvalues, matrix_power, top_singular_value, CMat};

/// Number of leading eigenvalues kept in a report.
pub const REPORTED_EIGENVALUES: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub spectral_radius: f64,
    /// Leading eigenvalues as (re, im), by decreasing modulus.
    pub eigenvalues: Vec<(f64, f64)>,
    pub power_norms: Vec<(usize, f64)>,
    pub top_singular: f64,
    /// Size of the matrix after removing zero rows and columns.
    pub core_dim: usize,
    pub parity_split: bool,
}

/// Removes indices whose row or column vanishes; the dropped part contributes only zero eigenvalues.
pub fn nonzero_core(a: &CMat) -> (CMat, Vec<usize>) {
    let mut idx: Vec<usize> = (0..a.nrows()).collect();
    loop {
        let keep: Vec<usize> = idx
            .iter()
            .copied()
            .filter(|&i| {
                let row = idx.iter().any(|&j| a[(i, j)] != c64::new(0.0, 0.0));
                let col = idx.iter().any(|&j| a[(j, i)] != c64::new(0.0, 0.0));
                row && col
            })
            .collect();
        if keep.len() == idx.len() {
            break;
        }
        idx = keep;
    }
    let m = CMat::from_fn(idx.len(), idx.len(), |p, q| a[(idx[p], idx[q])]);
    (m, idx)
}

/// Even and odd blocks of `a` under an index involution, if `a` commutes with it.
///
/// Returns `None` when the coupling between the blocks exceeds `tol` relative to the largest entry.
pub fn parity_blocks(a: &CMat, sigma: &[usize], tol: f64) -> Option<(CMat, CMat)> {
    let n = a.nrows();
    if sigma.len() != n || sigma.iter().enumerate().any(|(i, &s)| s >= n || sigma[s] != i) {
        return None;
    }
    let scale = (0..n)
        .flat_map(|j| a.col(j).iter().map(|z| z.norm()).collect::<Vec<_>>())
        .fold(0.0, f64::max);
    for i in 0..n {
        for j in 0..n {
            if (a[(sigma[i], sigma[j])] - a[(i, j)]).norm() > tol * scale.max(f64::MIN_POSITIVE) {
                return None;
            }
        }
    }
    let r = std::f64::consts::FRAC_1_SQRT_2;
    // even basis: fixed points, then (e_i + e_σi)/√2; odd basis: (e_i − e_σi)/√2
    let mut even: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut odd: Vec<Vec<(usize, f64)>> = Vec::new();
    for i in 0..n {
        let s = sigma[i];
        if s == i {
            even.push(vec![(i, 1.0)]);
        } else if i < s {
            even.push(vec![(i, r), (s, r)]);
            odd.push(vec![(i, r), (s, -r)]);
        }
    }
    let block = |basis: &[Vec<(usize, f64)>]| {
        CMat::from_fn(basis.len(), basis.len(), |p, q| {
            let mut z = c64::new(0.0, 0.0);
            for &(i, wi) in &basis[p] {
                for &(j, wj) in &basis[q] {
                    z += a[(i, j)] * (wi * wj);
                }
            }
            z
        })
    };
    Some((block(&even), block(&odd)))
}

/// Blocks to work on: the parity blocks when available, else the matrix itself.
fn working_blocks(a: &CMat, sigma: Option<&[usize]>) -> (Vec<CMat>, bool) {
    if let Some(s) = sigma {
        if let Some((e, o)) = parity_blocks(a, s, 1e-12) {
            return (vec![e, o], true);
        }
    }
    (vec![a.clone()], false)
}

/// Spectral radius and leading eigenvalues.
pub fn eigen_summary(a: &CMat, sigma: Option<&[usize]>) -> Result<(f64, Vec<c64>, usize, bool)> {
    let (core, idx) = nonzero_core(a);
    let sub_sigma: Option<Vec<usize>> = sigma.and_then(|s| {
        let pos: std::collections::HashMap<usize, usize> = idx.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        idx.iter().map(|&i| pos.get(&s[i]).copied()).collect()
    });
    let (blocks, split) = working_blocks(&core, sub_sigma.as_deref());
    let mut eigs = Vec::new();
    for b in &blocks {
        eigs.extend(eigenvalues(b)?);
    }
    if eigs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(LabError::Numerical("non-finite eigenvalue".into()));
    }
    eigs.sort_by(|x, y| y.norm().total_cmp(&x.norm()).then(y.re.total_cmp(&x.re)).then(y.im.total_cmp(&x.im)));
    let rho = eigs.first().map_or(0.0, |z| z.norm());
    Ok((rho, eigs, core.nrows(), split))
}

/// ‖A^k‖ for each k, by repeated squaring on the parity blocks when they exist.
pub fn power_norms(a: &CMat, powers: &[usize], sigma: Option<&[usize]>) -> Result<Vec<(usize, f64)>> {
    let (blocks, _) = working_blocks(a, sigma);
    powers
        .iter()
        .map(|&k| {
            let mut best = 0.0f64;
            for b in &blocks {
                if b.nrows() > 0 {
                    best = best.max(top_singular_value(&matrix_power(b, k))?);
                }
            }
            Ok((k, best))
        })
        .collect()
}

/// Eigenvalues, top singular value and ‖A^n‖ for n = 1..=n_max.
pub fn spectral_report(op: &DenseOperator, n_max: usize) -> Result<SpectralReport> {
    if n_max == 0 {
        return Err(LabError::Invalid("n_max must be >= 1".into()));
    }
    let sigma = op.domain.reflection();
    let (rho, eigs, core_dim, split) = eigen_summary(&op.entries, Some(&sigma))?;
    let (blocks, _) = working_blocks(&op.entries, Some(&sigma));
    let mut power_norms = Vec::with_capacity(n_max);
    let mut pows: Vec<CMat> = blocks.clone();
    for n in 1..=n_max {
        if n > 1 {
            for (p, b) in pows.iter_mut().zip(&blocks) {
                *p = &*p * b;
            }
        }
        let mut best = 0.0f64;
        for p in &pows {
            best = best.max(top_singular_value(p)?);
        }
        power_norms.push((n, best));
    }
    Ok(SpectralReport {
        spectral_radius: rho,
        eigenvalues: eigs.iter().take(REPORTED_EIGENVALUES).map(|z| (z.re, z.im)).collect(),
        top_singular: power_norms[0].1,
        power_norms,
        core_dim,
        parity_split: split,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::{open_baker_operator, semiclassical_fourier, GridSpec};

    #[test]
    fn unitary_report() {
        let f = semiclassical_fourier(&GridSpec::torus(16).unwrap()).unwrap();
        let r = spectral_report(&f, 4).unwrap();
        assert!((r.spectral_radius - 1.0).abs() < 1e-10);
        for (_, v) in r.power_norms {
            assert!((v - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn nilpotent_two_by_two() {
        let mut a = CMat::zeros(2, 2);
        a[(0, 1)] = c64::new(1.0, 0.0);
        let (rho, _, core, _) = eigen_summary(&a, None).unwrap();
        assert_eq!(rho, 0.0);
        assert_eq!(core, 0);
        let norms = power_norms(&a, &[1, 2], None).unwrap();
        assert!((norms[0].1 - 1.0).abs() < 1e-14 && norms[1].1 == 0.0);
    }

    #[test]
    fn core_reduction_keeps_spectrum() {
        let b = open_baker_operator(27, 3, &[0, 2]).unwrap();
        let (rho, eigs, core, _) = eigen_summary(&b.entries, None).unwrap();
        let full = eigenvalues(&b.entries).unwrap();
        let full_rho = full.iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert_eq!(core, 18);
        assert!((rho - full_rho).abs() < 1e-10);
        assert!(rho < 1.0);
        assert_eq!(eigs.len(), 18);
    }

    #[test]
    fn parity_blocks_match_full_spectrum() {
        let n = 9;
        let sigma: Vec<usize> = (0..n).map(|j| (n - j) % n).collect();
        let a = CMat::from_fn(n, n, |i, j| {
            let d = (i as i64 - j as i64).rem_euclid(n as i64) as f64;
            let s = ((i as i64 - 4).abs() + (j as i64 - 4).abs()) as f64;
            c64::new((d * 0.7).cos() + 0.1 * s.sin(), 0.2 * (d * 1.3).cos())
        });
        let a = CMat::from_fn(n, n, |i, j| (a[(i, j)] + a[(sigma[i], sigma[j])]) * 0.5);
        let (e, o) = parity_blocks(&a, &sigma, 1e-12).unwrap();
        assert_eq!(e.nrows() + o.nrows(), n);
        let mut split: Vec<f64> = eigenvalues(&e).unwrap().into_iter().chain(eigenvalues(&o).unwrap()).map(|z| z.norm()).collect();
        let mut full: Vec<f64> = eigenvalues(&a).unwrap().into_iter().map(|z| z.norm()).collect();
        split.sort_by(f64::total_cmp);
        full.sort_by(f64::total_cmp);
        for (x, y) in split.iter().zip(&full) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
