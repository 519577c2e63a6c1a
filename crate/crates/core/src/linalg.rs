//! Thin helpers over `faer` for the dense complex work in this crate.

use faer::linalg::solvers::Solve;
use faer::Mat;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{LabError, Result};

pub use faer::c64;

/// Dense complex matrix.
pub type CMat = Mat<c64>;

/// Below this dimension singular values come from a full SVD.
const DENSE_SVD_LIMIT: usize = 640;

pub fn zeros(n: usize, m: usize) -> CMat {
    Mat::zeros(n, m)
}

pub fn identity(n: usize) -> CMat {
    Mat::from_fn(n, n, |i, j| if i == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) })
}

pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    a * b
}

pub fn adjoint(a: &CMat) -> CMat {
    a.adjoint().to_owned()
}

/// y = A x for a column given as a slice.
pub fn matvec(a: &CMat, x: &[c64]) -> Vec<c64> {
    let n = a.nrows();
    let mut y = vec![c64::new(0.0, 0.0); n];
    for (j, xj) in x.iter().enumerate() {
        if xj.re == 0.0 && xj.im == 0.0 {
            continue;
        }
        let col = a.col(j);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += col[i] * xj;
        }
    }
    y
}

/// y = A^* x.
pub fn adjoint_matvec(a: &CMat, x: &[c64]) -> Vec<c64> {
    (0..a.ncols())
        .map(|j| {
            let col = a.col(j);
            let mut s = c64::new(0.0, 0.0);
            for (i, xi) in x.iter().enumerate() {
                s += col[i].conj() * xi;
            }
            s
        })
        .collect()
}

pub fn vec_norm(v: &[c64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm.
pub fn frobenius(a: &CMat) -> f64 {
    let mut s = 0.0;
    for j in 0..a.ncols() {
        for z in a.col(j).iter() {
            s += z.norm_sqr();
        }
    }
    s.sqrt()
}

/// Largest singular value.
///
/// Small matrices use the full SVD. Larger ones use power iteration on
/// `A^*A`, which is deterministic for a fixed start vector and converges in
/// value even when the top singular values cluster.
pub fn top_singular_value(a: &CMat) -> Result<f64> {
    let (n, m) = (a.nrows(), a.ncols());
    if n == 0 || m == 0 {
        return Ok(0.0);
    }
    if n.min(m) <= DENSE_SVD_LIMIT {
        let s = a
            .singular_values()
            .map_err(|e| LabError::Numerical(format!("svd: {e:?}")))?;
        return Ok(s.into_iter().fold(0.0, f64::max));
    }
    Ok(power_top_singular(a, 2000, 1e-13))
}

fn power_top_singular(a: &CMat, max_iter: usize, tol: f64) -> f64 {
    let m = a.ncols();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<c64> = (0..m)
        .map(|_| c64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    let nv = vec_norm(&v);
    v.iter_mut().for_each(|z| *z /= nv);
    let mut sigma = 0.0;
    let mut stable = 0;
    for _ in 0..max_iter {
        let w = matvec(a, &v);
        let s_new = vec_norm(&w);
        if s_new == 0.0 {
            return 0.0;
        }
        let mut u = adjoint_matvec(a, &w);
        let nu = vec_norm(&u);
        if nu == 0.0 {
            return s_new;
        }
        u.iter_mut().for_each(|z| *z /= nu);
        v = u;
        if (s_new - sigma).abs() <= tol * s_new {
            stable += 1;
            if stable >= 3 {
                return s_new;
            }
        } else {
            stable = 0;
        }
        sigma = s_new;
    }
    sigma
}

/// All eigenvalues of a square matrix.
pub fn eigenvalues(a: &CMat) -> Result<Vec<c64>> {
    if a.nrows() != a.ncols() {
        return Err(LabError::Invalid("eigenvalues of a non-square matrix".into()));
    }
    if a.nrows() == 0 {
        return Ok(Vec::new());
    }
    a.eigenvalues()
        .map_err(|e| LabError::Numerical(format!("eigensolver: {e:?}")))
}

/// A^k by repeated squaring.
pub fn matrix_power(a: &CMat, k: usize) -> CMat {
    let mut result: Option<CMat> = None;
    let mut base = a.clone();
    let mut e = k;
    if e == 0 {
        return identity(a.nrows());
    }
    loop {
        if e & 1 == 1 {
            result = Some(match result {
                None => base.clone(),
                Some(r) => &r * &base,
            });
        }
        e >>= 1;
        if e == 0 {
            break;
        }
        base = &base * &base;
    }
    result.expect("k > 0")
}

/// Spectral norm of A^*A - I.
pub fn unitarity_defect(a: &CMat) -> Result<f64> {
    let mut g = a.adjoint() * a;
    for i in 0..g.nrows() {
        g[(i, i)] -= c64::new(1.0, 0.0);
    }
    top_singular_value(&g)
}

/// Solves a small real linear system.
pub fn solve_real(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    if a.len() != n || a.iter().any(|r| r.len() != n) {
        return Err(LabError::Invalid("solve_real: shape mismatch".into()));
    }
    let m = Mat::<f64>::from_fn(n, n, |i, j| a[i][j]);
    let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
    let x = m.partial_piv_lu().solve(&rhs);
    let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(LabError::Numerical("singular linear system".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn power_iteration_matches_svd() {
        let n = 700;
        let a = Mat::<c64>::from_fn(n, n, |i, j| {
            c64::new(((i * 7 + j * 13) % 17) as f64 / 17.0 - 0.5, ((i * 3 + j) % 11) as f64 / 11.0)
        });
        let dense = a.singular_values().unwrap().into_iter().fold(0.0, f64::max);
        let power = top_singular_value(&a).unwrap();
        assert!((dense - power).abs() < 1e-9 * dense, "{dense} vs {power}");
    }

    #[test]
    fn matrix_power_of_shift() {
        let n = 4;
        let a = Mat::<c64>::from_fn(n, n, |i, j| {
            if i + 1 == j { c64::new(1.0, 0.0) } else { c64::new(0.0, 0.0) }
        });
        assert!(frobenius(&matrix_power(&a, 4)) == 0.0);
        assert!((frobenius(&matrix_power(&a, 3)) - 1.0).abs() < 1e-15);
        assert!((frobenius(&matrix_power(&a, 0)) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn small_real_solve() {
        let x = solve_real(&[vec![2.0, 1.0], vec![1.0, 3.0]], &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-14 && (x[1] - 1.4).abs() < 1e-14);
    }
}
