//! Fractal subsets of the discrete torus Z_N.

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::thermo::IntervalSet;

/// A subset of Z_N, described symbolically and realized as sorted indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum FractalSetSpec {
    /// j whose leading `depth` base-L digits lie in `alphabet`; needs N = L^k with k >= depth.
    Cantor { base: usize, alphabet: Vec<usize>, depth: usize },
    /// base + [-radius, radius] in the torus coordinate j/N.
    Fattened { base: Box<FractalSetSpec>, radius: f64 },
    /// j with j/N in a union of intervals, taken mod 1.
    Intervals { intervals: Vec<(f64, f64)> },
    Explicit { indices: Vec<usize> },
}

impl FractalSetSpec {
    pub fn cantor(base: usize, alphabet: &[usize], depth: usize) -> Self {
        FractalSetSpec::Cantor {
            base,
            alphabet: alphabet.to_vec(),
            depth,
        }
    }

    pub fn fattened(self, radius: f64) -> Self {
        FractalSetSpec::Fattened {
            base: Box::new(self),
            radius,
        }
    }

    /// Replaces Cantor depth 0 by `k`, the full depth on Z_{L^k}.
    pub fn at_depth(&self, k: usize) -> Self {
        match self {
            FractalSetSpec::Cantor { base, alphabet, depth: 0 } => FractalSetSpec::Cantor {
                base: *base,
                alphabet: alphabet.clone(),
                depth: k,
            },
            FractalSetSpec::Fattened { base, radius } => FractalSetSpec::Fattened {
                base: Box::new(base.at_depth(k)),
                radius: *radius,
            },
            other => other.clone(),
        }
    }

    /// The set as a union of intervals in [0, 1]; explicit index sets have no such form.
    pub fn interval_set(&self) -> Result<IntervalSet> {
        match self {
            FractalSetSpec::Cantor { base, alphabet, depth } => Ok(IntervalSet::cantor(*base, alphabet, *depth)),
            FractalSetSpec::Fattened { base, radius } => Ok(base.interval_set()?.fatten(*radius)),
            FractalSetSpec::Intervals { intervals } => Ok(IntervalSet::new(intervals.clone())),
            FractalSetSpec::Explicit { .. } => Err(LabError::Invalid("explicit index sets have no interval form".into())),
        }
    }

    pub fn realize(&self, n: usize) -> Result<Vec<usize>> {
        if n == 0 {
            return Err(LabError::Invalid("empty torus".into()));
        }
        match self {
            FractalSetSpec::Cantor { base, alphabet, depth } => {
                let k = exact_log(n, *base).ok_or_else(|| {
                    LabError::Invalid(format!("Cantor set in Z_{n} needs N to be a power of {base}"))
                })?;
                if *depth > k {
                    return Err(LabError::Invalid(format!("depth {depth} exceeds log_L N = {k}")));
                }
                if alphabet.iter().any(|&d| d >= *base) {
                    return Err(LabError::Invalid(format!("alphabet {alphabet:?} outside base {base}")));
                }
                let mut allowed = vec![false; *base];
                for &d in alphabet {
                    allowed[d] = true;
                }
                let tail = base.pow((k - depth) as u32);
                Ok((0..n)
                    .filter(|&j| {
                        let mut lead = j / tail;
                        (0..*depth).all(|_| {
                            let d = lead % base;
                            lead /= base;
                            allowed[d]
                        })
                    })
                    .collect())
            }
            FractalSetSpec::Fattened { base, radius } => {
                let inner = base.realize(n)?;
                let r = (radius * n as f64 + 1e-9).floor() as i64;
                let mut mark = vec![false; n];
                for &j in &inner {
                    for d in -r..=r {
                        mark[(j as i64 + d).rem_euclid(n as i64) as usize] = true;
                    }
                }
                Ok((0..n).filter(|&j| mark[j]).collect())
            }
            FractalSetSpec::Intervals { intervals } => {
                let set = IntervalSet::new(intervals.clone());
                Ok(realize_intervals(&set, n))
            }
            FractalSetSpec::Explicit { indices } => {
                if let Some(&j) = indices.iter().find(|&&j| j >= n) {
                    return Err(LabError::Invalid(format!("index {j} outside Z_{n}")));
                }
                let mut v = indices.clone();
                v.sort_unstable();
                v.dedup();
                Ok(v)
            }
        }
    }
}

/// Indices j with j/N in the set, reading the set mod 1.
pub fn realize_intervals(set: &IntervalSet, n: usize) -> Vec<usize> {
    let nf = n as f64;
    (0..n)
        .filter(|&j| {
            let x = j as f64 / nf;
            (-2..=2).any(|s| set.contains(x + s as f64))
        })
        .collect()
}

fn exact_log(n: usize, base: usize) -> Option<usize> {
    if base < 2 {
        return None;
    }
    let mut k = 0;
    let mut m = 1usize;
    while m < n {
        m = m.checked_mul(base)?;
        k += 1;
    }
    (m == n).then_some(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cantor_realization() {
        let c = FractalSetSpec::cantor(3, &[0, 2], 2).realize(9).unwrap();
        assert_eq!(c, vec![0, 2, 6, 8]);
        let c = FractalSetSpec::cantor(3, &[0, 2], 1).realize(9).unwrap();
        assert_eq!(c, vec![0, 1, 2, 6, 7, 8]);
        assert!(FractalSetSpec::cantor(3, &[0, 2], 2).realize(10).is_err());
    }

    #[test]
    fn fattening_wraps() {
        let s = FractalSetSpec::Explicit { indices: vec![0] }.fattened(1.0 / 9.0);
        assert_eq!(s.realize(9).unwrap(), vec![0, 1, 8]);
    }

    #[test]
    fn intervals_mod_one() {
        let s = FractalSetSpec::Intervals {
            intervals: vec![(-0.1, 0.1)],
        };
        assert_eq!(s.realize(10).unwrap(), vec![0, 1, 9]);
    }
}
