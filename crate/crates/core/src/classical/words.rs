//! Refined word neighborhoods V_q^± and local word Jacobians J_q^±.

use serde::{Deserialize, Serialize};

use super::orbits::TrappedPool;
use super::system::{OpenMapSystem, SymbolicWord};
use crate::error::{LabError, Result};
use crate::phase::PhasePoint;

/// Orientation of a refined neighborhood.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sign {
    /// V_q^-: F^i p ∈ V_{q_i} for i = 0..n-1.
    Minus,
    /// V_q^+: F^{-i} p ∈ V_{q_{n-i}} for i = 1..n.
    Plus,
}

/// Local word Jacobians with the points realizing them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JacobianPair {
    pub j_minus: f64,
    pub j_plus: f64,
    pub witness: PhasePoint,
    pub witness_plus: PhasePoint,
    /// Whether a shadowing orbit replaced an empty intersection with the pool.
    pub shadowed: bool,
    /// Number of itinerary mismatches of the shadowing orbit (0 when exact).
    pub witness_distance: usize,
    /// Smallest C with e^{λ₀ n}/C ≤ J ≤ C e^{λ₁ n} for both Jacobians.
    pub constant: f64,
}

/// Whether p belongs to the refined neighborhood V_word^sign.
pub fn word_neighborhood_contains(sys: &OpenMapSystem, word: &SymbolicWord, sign: Sign, p: &PhasePoint) -> bool {
    let q = word.letters();
    let n = q.len();
    match sign {
        Sign::Minus => {
            let mut r = *p;
            for (i, &letter) in q.iter().enumerate() {
                if !sys.cell_contains(letter, &r) {
                    return false;
                }
                if i + 1 < n {
                    match sys.forward(&r) {
                        Some((_, s)) => r = s,
                        None => return false,
                    }
                }
            }
            true
        }
        Sign::Plus => {
            let mut r = *p;
            for i in 1..=n {
                match sys.backward(&r) {
                    Some((_, s)) => r = s,
                    None => return false,
                }
                if !sys.cell_contains(q[n - i], &r) {
                    return false;
                }
            }
            true
        }
    }
}

/// Whether consecutive letters are allowed by the sampled cell transitions.
pub fn is_admissible(sys: &OpenMapSystem, word: &SymbolicWord) -> bool {
    let t = sys.transition_matrix();
    word.letters().windows(2).all(|w| t[w[0]][w[1]])
}

fn mismatches(code: &[usize], target: &[usize]) -> usize {
    target
        .iter()
        .enumerate()
        .filter(|(i, l)| code.get(*i) != Some(l))
        .count()
}

/// Local word Jacobians J_q^- and J_q^+ over a trapped pool.
///
/// When no pool point lies in V_q^±, the pool point with the closest itinerary
/// is used as a shadowing orbit, provided the word is admissible.
pub fn local_word_jacobian(sys: &OpenMapSystem, pool: &TrappedPool, word: &SymbolicWord) -> Result<JacobianPair> {
    let q = word.letters();
    let n = q.len();
    if q.iter().any(|&l| l >= sys.alphabet_size()) {
        return Err(LabError::Invalid(format!("word {q:?} outside the alphabet")));
    }
    let empty = || LabError::EmptyNeighborhood { word: q.to_vec() };
    if pool.is_empty() {
        return Err(empty());
    }
    let plus_target: Vec<usize> = (1..=n).map(|i| q[n - i]).collect();
    let mut minus: Option<(f64, usize)> = None;
    let mut plus: Option<(f64, usize)> = None;
    for k in 0..pool.len() {
        let fc = &pool.forward_codes[k];
        if fc.len() >= n && &fc[..n] == q && pool.log_ju[k].len() > n {
            let v = pool.log_ju[k][n];
            if minus.is_none_or(|(m, _)| v < m) {
                minus = Some((v, k));
            }
        }
        let bc = &pool.backward_codes[k];
        if bc.len() >= n && bc[..n] == plus_target[..] && pool.log_js[k].len() > n {
            let v = pool.log_js[k][n];
            if plus.is_none_or(|(m, _)| v < m) {
                plus = Some((v, k));
            }
        }
    }
    let mut shadowed = false;
    let mut distance = 0;
    if minus.is_none() || plus.is_none() {
        if !is_admissible(sys, word) {
            return Err(empty());
        }
        shadowed = true;
        if minus.is_none() {
            let (d, k) = (0..pool.len())
                .filter(|&k| pool.log_ju[k].len() > n)
                .map(|k| (mismatches(&pool.forward_codes[k], q), k))
                .min()
                .ok_or_else(empty)?;
            distance = distance.max(d);
            minus = Some((pool.log_ju[k][n], k));
        }
        if plus.is_none() {
            let (d, k) = (0..pool.len())
                .filter(|&k| pool.log_js[k].len() > n)
                .map(|k| (mismatches(&pool.backward_codes[k], &plus_target), k))
                .min()
                .ok_or_else(empty)?;
            distance = distance.max(d);
            plus = Some((pool.log_js[k][n], k));
        }
    }
    let (lm, km) = minus.ok_or_else(empty)?;
    let (lp, kp) = plus.ok_or_else(empty)?;
    let (l0, l1) = sys.lambda_bounds;
    let nf = n as f64;
    let c_of = |lj: f64| (l0 * nf - lj).max(lj - l1 * nf).max(0.0).exp();
    Ok(JacobianPair {
        j_minus: lm.exp(),
        j_plus: lp.exp(),
        witness: pool.points[km],
        witness_plus: pool.points[kp],
        shadowed,
        witness_distance: distance,
        constant: c_of(lm).max(c_of(lp)),
    })
}

/// All admissible words of the given length, in lexicographic order.
pub fn admissible_words(sys: &OpenMapSystem, length: usize) -> Vec<SymbolicWord> {
    let t = sys.transition_matrix();
    let q = sys.alphabet_size();
    let mut out = Vec::new();
    let mut stack: Vec<Vec<usize>> = (0..q).rev().map(|a| vec![a]).collect();
    while let Some(w) = stack.pop() {
        if w.len() == length {
            out.push(SymbolicWord(w));
            continue;
        }
        let last = *w.last().unwrap();
        for b in (0..q).rev() {
            if t[last][b] {
                let mut v = w.clone();
                v.push(b);
                stack.push(v);
            }
        }
    }
    out
}

/// Spread max J^u_n / min J^u_n over pool points sharing the forward word.
pub fn comparability_ratio(pool: &TrappedPool, word: &SymbolicWord) -> Option<f64> {
    let q = word.letters();
    let n = q.len();
    let vals: Vec<f64> = (0..pool.len())
        .filter(|&k| pool.forward_codes[k].len() >= n && &pool.forward_codes[k][..n] == q && pool.log_ju[k].len() > n)
        .map(|k| pool.log_ju[k][n])
        .collect();
    if vals.is_empty() {
        return None;
    }
    let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Some((hi - lo).exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baker() -> OpenMapSystem {
        OpenMapSystem::open_baker(3, &[0, 2]).unwrap()
    }

    #[test]
    fn single_letter_is_membership() {
        let sys = baker();
        let w = SymbolicWord::new(vec![1], 2).unwrap();
        let p = PhasePoint::new(0.8, 0.4);
        assert!(word_neighborhood_contains(&sys, &w, Sign::Minus, &p));
        assert!(!word_neighborhood_contains(&sys, &w, Sign::Minus, &PhasePoint::new(0.1, 0.4)));
    }

    #[test]
    fn baker_two_letter_cylinders() {
        // letters 0,1 are branches 0,2; cylinder [b0 b1] = x in 0.b0 b1 (base 3)
        let sys = baker();
        let w = SymbolicWord::new(vec![1, 0], 2).unwrap();
        for k in 0..300 {
            let x = (k as f64 + 0.5) / 300.0;
            let p = PhasePoint::new(x, 0.1);
            let inside = (6.0 / 9.0..7.0 / 9.0).contains(&x);
            assert_eq!(word_neighborhood_contains(&sys, &w, Sign::Minus, &p), inside, "x={x}");
        }
    }

    #[test]
    fn baker_square_partition_forbids_mismatched_letters() {
        let sys = baker();
        let cells = sys.baker_square_partition().unwrap();
        let sys = sys.with_partition(cells).unwrap();
        // cell index of (a, b) is 2*(a/2) + b/2; (0,0) -> (2,2) needs b' = a, forbidden
        let w = SymbolicWord::new(vec![0, 3], 4).unwrap();
        for k in 0..200 {
            let p = PhasePoint::new((k as f64 + 0.5) / 200.0, ((k * 37) % 200) as f64 / 200.0);
            assert!(!word_neighborhood_contains(&sys, &w, Sign::Minus, &p));
        }
        assert!(!is_admissible(&sys, &w));
        let pool = TrappedPool::build(&sys, 6).unwrap();
        assert!(matches!(local_word_jacobian(&sys, &pool, &w), Err(LabError::EmptyNeighborhood { .. })));
    }

    #[test]
    fn baker_word_jacobian_is_power_of_three() {
        let sys = baker();
        let pool = TrappedPool::build(&sys, 8).unwrap();
        for n in 1..=10 {
            for w in admissible_words(&sys, n).iter().take(16) {
                let j = local_word_jacobian(&sys, &pool, w).unwrap();
                let exact = 3f64.powi(n as i32);
                assert!((j.j_minus / exact - 1.0).abs() < 1e-12);
                assert!((j.j_plus / exact - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_fixed_point_word() {
        let sys = OpenMapSystem::linear_model(1.0, 1.0).unwrap();
        let pool = TrappedPool::build(&sys, 10).unwrap();
        let w = SymbolicWord::new(vec![0; 5], 1).unwrap();
        assert!(word_neighborhood_contains(&sys, &w, Sign::Minus, &PhasePoint::new(0.0, 0.0)));
        assert!(word_neighborhood_contains(&sys, &w, Sign::Plus, &PhasePoint::new(0.0, 0.0)));
        let j = local_word_jacobian(&sys, &pool, &w).unwrap();
        assert!((j.j_minus - 32.0).abs() < 1e-9);
        assert!(!j.shadowed);
    }
}
