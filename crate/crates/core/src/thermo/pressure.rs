//! Topological pressure from word sums, Bowen roots and escape rates.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DimensionReport;
use crate::classical::orbits::TrappedPool;
use crate::classical::words::{admissible_words, local_word_jacobian};
use crate::classical::{OpenMapSystem, SymbolicWord};
use crate::error::{LabError, Result};
use crate::phase::PhasePoint;

/// Default cap on the number of words enumerated at one length.
pub const DEFAULT_WORD_BUDGET: usize = 1 << 18;

/// Pressure estimates at one value of s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureEntry {
    pub s: f64,
    /// (n, (1/n) log c_n(s)).
    pub estimates: Vec<(usize, f64)>,
    /// (n, log c_n(s) - log c_{n-1}(s)).
    pub ratios: Vec<(usize, f64)>,
    /// Aitken Δ² limit of the ratio sequence.
    pub extrapolated: f64,
    /// Ratio at the two largest n.
    pub two_point: f64,
}

impl PressureEntry {
    pub fn value(&self, est: Estimator) -> f64 {
        match est {
            Estimator::Aitken => self.extrapolated,
            Estimator::TwoPoint => self.two_point,
        }
    }
}

/// Which limit of the word sums to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Aitken,
    TwoPoint,
}

/// Pressure estimates over a grid of s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PressureCurve {
    pub entries: Vec<PressureEntry>,
}

impl PressureCurve {
    pub fn s_values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.s).collect()
    }
}

/// Word Jacobians log J_q^- for every admissible word of each length 1..=n_max.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WordSums {
    pub n_max: usize,
    pub log_jacobians: Vec<Vec<f64>>,
    /// Words per length whose J came from a shadowing orbit.
    pub shadowed: Vec<usize>,
}

impl WordSums {
    /// Enumerates admissible words up to `n_max`, failing if a length exceeds `budget` words.
    pub fn build(sys: &OpenMapSystem, pool: &TrappedPool, n_max: usize, budget: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(LabError::Invalid("n_max must be >= 1".into()));
        }
        let mut log_jacobians = Vec::with_capacity(n_max);
        let mut shadowed = Vec::with_capacity(n_max);
        let t = sys.transition_matrix();
        let q = sys.alphabet_size();
        // count words per length before enumerating
        let mut counts = vec![1u128; q];
        for n in 1..=n_max {
            if n > 1 {
                let mut next = vec![0u128; q];
                for a in 0..q {
                    for b in 0..q {
                        if t[a][b] {
                            next[b] = next[b].saturating_add(counts[a]);
                        }
                    }
                }
                counts = next;
            }
            let total: u128 = counts.iter().sum();
            if total > budget as u128 {
                return Err(LabError::Budget { max_n: n - 1 });
            }
        }
        for n in 1..=n_max {
            let table = prefix_table(pool, n);
            let mut logs = Vec::new();
            let mut shadow = 0;
            for w in admissible_words(sys, n) {
                match table.get(&w.0) {
                    Some(v) => logs.push(*v),
                    None => match local_word_jacobian(sys, pool, &w) {
                        Ok(j) => {
                            shadow += 1;
                            logs.push(j.j_minus.ln());
                        }
                        Err(LabError::EmptyNeighborhood { .. }) => {}
                        Err(e) => return Err(e),
                    },
                }
            }
            log_jacobians.push(logs);
            shadowed.push(shadow);
        }
        Ok(Self {
            n_max,
            log_jacobians,
            shadowed,
        })
    }

    /// log c_n(s) = log Σ_q J_q^{-s}.
    pub fn log_cn(&self, n: usize, s: f64) -> f64 {
        let logs = &self.log_jacobians[n - 1];
        if logs.is_empty() {
            return f64::NEG_INFINITY;
        }
        let m = logs.iter().map(|l| -s * l).fold(f64::NEG_INFINITY, f64::max);
        m + logs.iter().map(|l| (-s * l - m).exp()).sum::<f64>().ln()
    }

    /// Raw sequence, ratio sequence and Aitken-extrapolated limit at s.
    pub fn pressure(&self, s: f64) -> PressureEntry {
        let lc: Vec<f64> = (1..=self.n_max).map(|n| self.log_cn(n, s)).collect();
        let estimates = (1..=self.n_max).map(|n| (n, lc[n - 1] / n as f64)).collect();
        let ratios: Vec<(usize, f64)> = (2..=self.n_max).map(|n| (n, lc[n - 1] - lc[n - 2])).collect();
        let last = lc[self.n_max - 1] / self.n_max as f64;
        let extrapolated = extrapolate(&ratios.iter().map(|r| r.1).collect::<Vec<_>>()).unwrap_or(last);
        let two_point = ratios.last().map_or(last, |r| r.1);
        PressureEntry {
            s,
            estimates,
            ratios,
            extrapolated,
            two_point,
        }
    }
}

/// Minimal log J^u_n over pool points, keyed by their length-n forward code.
fn prefix_table(pool: &TrappedPool, n: usize) -> HashMap<Vec<usize>, f64> {
    let mut table: HashMap<Vec<usize>, f64> = HashMap::new();
    for k in 0..pool.len() {
        let fc = &pool.forward_codes[k];
        if fc.len() >= n && pool.log_ju[k].len() > n {
            let v = pool.log_ju[k][n];
            table
                .entry(fc[..n].to_vec())
                .and_modify(|m| *m = m.min(v))
                .or_insert(v);
        }
    }
    table
}

/// Aitken Δ² on the last three terms, falling back to the last term.
pub fn extrapolate(seq: &[f64]) -> Option<f64> {
    let n = seq.len();
    if n == 0 {
        return None;
    }
    if n < 3 {
        return Some(seq[n - 1]);
    }
    let (a, b, c) = (seq[n - 3], seq[n - 2], seq[n - 1]);
    let den = c - 2.0 * b + a;
    let scale = a.abs().max(b.abs()).max(c.abs()).max(1.0);
    if den.abs() <= 1e-12 * scale {
        return Some(c);
    }
    let acc = c - (c - b) * (c - b) / den;
    // reject extrapolations that leave the bracket of the last two terms by more than their spread
    let spread = (c - b).abs().max((b - a).abs());
    if (acc - c).abs() > 4.0 * spread {
        Some(c)
    } else {
        Some(acc)
    }
}

/// Pressure solver with cached word Jacobians.
#[derive(Debug, Clone)]
pub struct PressureSolver {
    pub sums: WordSums,
}

impl PressureSolver {
    pub fn new(sys: &OpenMapSystem, n_max: usize) -> Result<Self> {
        Self::with_budget(sys, n_max, DEFAULT_WORD_BUDGET)
    }

    pub fn with_budget(sys: &OpenMapSystem, n_max: usize, budget: usize) -> Result<Self> {
        let pool = TrappedPool::build(sys, n_max)?;
        if pool.is_empty() {
            return Err(LabError::Invalid("trapped set sample is empty, pressure is -inf".into()));
        }
        Ok(Self {
            sums: WordSums::build(sys, &pool, n_max, budget)?,
        })
    }

    pub fn pressure(&self, s: f64) -> Result<PressureEntry> {
        if !(0.0..=2.0).contains(&s) {
            return Err(LabError::Invalid(format!("s = {s} outside [0, 2]")));
        }
        Ok(self.sums.pressure(s))
    }

    /// Pressure curve over a grid of s, checking monotonicity.
    pub fn curve(&self, s_values: &[f64]) -> Result<PressureCurve> {
        let entries = s_values.iter().map(|&s| self.pressure(s)).collect::<Result<Vec<_>>>()?;
        for w in entries.windows(2) {
            if w[0].s < w[1].s && w[1].extrapolated > w[0].extrapolated + 1e-12 {
                return Err(LabError::Numerical(format!(
                    "pressure increased between s = {} and s = {}",
                    w[0].s, w[1].s
                )));
            }
        }
        Ok(PressureCurve { entries })
    }

    /// Root of the extrapolated pressure in [0, 1] by bisection.
    pub fn bowen_root(&self, tol: f64) -> Result<DimensionReport> {
        self.bowen_root_with(tol, Estimator::Aitken)
    }

    pub fn bowen_root_with(&self, tol: f64, est: Estimator) -> Result<DimensionReport> {
        let p = |s: f64| self.sums.pressure(s).value(est);
        let p0 = p(0.0);
        let p1 = p(1.0);
        if p1 >= 0.0 {
            return Err(LabError::NoGapRegime { p1 });
        }
        let report = |delta: f64| DimensionReport {
            delta,
            constant_c: 1.0,
            epsilon0: 1.0,
            method: super::DimensionMethod::PressureRoot,
            scales: Vec::new(),
            counts: Vec::new(),
            trapped_dimension: Some(2.0 * delta),
        };
        if p0.abs() <= tol {
            return Ok(report(0.0));
        }
        if p0 < 0.0 {
            return Err(LabError::Numerical(format!("P(0) = {p0} < 0: no admissible words")));
        }
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        while hi - lo > tol {
            let mid = 0.5 * (lo + hi);
            if p(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(report(0.5 * (lo + hi)))
    }

    /// γ_cl = -P(1).
    pub fn classical_decay_rate(&self) -> f64 {
        -self.sums.pressure(1.0).extrapolated
    }
}

/// Spectral radius of a 0/1 transition matrix by power iteration (log scale).
pub fn topological_entropy(t: &[Vec<bool>]) -> f64 {
    let q = t.len();
    if q == 0 {
        return f64::NEG_INFINITY;
    }
    let mut v = vec![1.0; q];
    let mut log_growth = 0.0;
    let steps = 2000;
    for k in 0..steps {
        let mut w = vec![0.0; q];
        for a in 0..q {
            for b in 0..q {
                if t[a][b] {
                    w[b] += v[a];
                }
            }
        }
        let s: f64 = w.iter().sum();
        if s == 0.0 {
            return f64::NEG_INFINITY;
        }
        for x in w.iter_mut() {
            *x /= s;
        }
        v = w;
        if k >= steps / 2 {
            log_growth += s.ln();
        }
    }
    log_growth / (steps - steps / 2) as f64
}

/// Monte-Carlo survivor fractions for m = 1..=m_max and the fitted decay rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    pub samples: usize,
    pub seed: u64,
    pub fractions: Vec<(usize, f64)>,
    pub rate: f64,
}

/// Fits the exponential decay of the fraction of uniform points surviving m steps.
pub fn monte_carlo_escape(sys: &OpenMapSystem, samples: usize, m_max: usize, seed: u64) -> Result<EscapeReport> {
    if samples == 0 || m_max < 2 {
        return Err(LabError::Invalid("need samples > 0 and m_max >= 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let areas: Vec<f64> = sys.blocks.iter().map(|b| b.width() * b.height()).collect();
    let total: f64 = areas.iter().sum();
    let mut survive = vec![0usize; m_max + 1];
    for _ in 0..samples {
        let mut u = rng.gen::<f64>() * total;
        let mut bi = 0;
        while bi + 1 < areas.len() && u >= areas[bi] {
            u -= areas[bi];
            bi += 1;
        }
        let b = sys.blocks[bi];
        let mut p = PhasePoint::new(b.x0 + rng.gen::<f64>() * b.width(), b.xi0 + rng.gen::<f64>() * b.height());
        for count in survive.iter_mut().skip(1) {
            match sys.forward(&p) {
                Some((_, q)) => {
                    *count += 1;
                    p = q;
                }
                None => break,
            }
        }
    }
    let fractions: Vec<(usize, f64)> = (1..=m_max).map(|m| (m, survive[m] as f64 / samples as f64)).collect();
    let pts: Vec<(f64, f64)> = fractions
        .iter()
        .filter(|(_, f)| *f > 0.0)
        .map(|(m, f)| (*m as f64, f.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(LabError::Numerical("too few surviving samples to fit a decay rate".into()));
    }
    let (slope, _) = super::least_squares(&pts);
    Ok(EscapeReport {
        samples,
        seed,
        fractions,
        rate: -slope,
    })
}

/// Pressure of a word list given directly (used for closed-form checks).
pub fn word_pressure(sys: &OpenMapSystem, pool: &TrappedPool, words: &[SymbolicWord], s: f64) -> Result<f64> {
    let n = words.first().map_or(1, |w| w.len());
    let mut acc = 0.0;
    for w in words {
        acc += local_word_jacobian(sys, pool, w)?.j_minus.powf(-s);
    }
    Ok(acc.ln() / n as f64)
}
