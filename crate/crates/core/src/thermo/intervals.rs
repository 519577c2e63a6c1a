//! Finite unions of closed intervals on the line.

use serde::{Deserialize, Serialize};

/// Sorted, pairwise disjoint closed intervals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    intervals: Vec<(f64, f64)>,
}

impl IntervalSet {
    /// Sorts and merges overlapping or touching intervals.
    pub fn new(mut raw: Vec<(f64, f64)>) -> Self {
        raw.retain(|(a, b)| a.is_finite() && b.is_finite() && a <= b);
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut out: Vec<(f64, f64)> = Vec::with_capacity(raw.len());
        for (a, b) in raw {
            match out.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => out.push((a, b)),
            }
        }
        Self { intervals: out }
    }

    pub fn empty() -> Self {
        Self { intervals: Vec::new() }
    }

    /// Level-`depth` approximation of the Cantor set with the given base-L digits, inside [0, 1].
    pub fn cantor(base: usize, digits: &[usize], depth: usize) -> Self {
        let mut cur = vec![(0.0f64, 1.0f64)];
        let l = base as f64;
        for _ in 0..depth {
            let mut next = Vec::with_capacity(cur.len() * digits.len());
            for (a, b) in &cur {
                let w = (b - a) / l;
                for &d in digits {
                    next.push((a + d as f64 * w, a + (d + 1) as f64 * w));
                }
            }
            cur = next;
        }
        Self::new(cur)
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn len(&self) -> usize {
        self.intervals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn hull(&self) -> Option<(f64, f64)> {
        Some((self.intervals.first()?.0, self.intervals.last()?.1))
    }

    /// Total length.
    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn max_width(&self) -> f64 {
        self.intervals.iter().fold(0.0f64, |m, (a, b)| m.max(b - a))
    }

    pub fn contains(&self, x: f64) -> bool {
        let k = self.intervals.partition_point(|(_, b)| *b < x);
        k < self.intervals.len() && self.intervals[k].0 <= x
    }

    /// X + [-c, c].
    pub fn fatten(&self, c: f64) -> Self {
        Self::new(self.intervals.iter().map(|(a, b)| (a - c, b + c)).collect())
    }

    /// Affine image x -> scale * x + shift (scale > 0).
    pub fn affine(&self, scale: f64, shift: f64) -> Self {
        Self::new(self.intervals.iter().map(|(a, b)| (scale * a + shift, scale * b + shift)).collect())
    }

    /// Length of the longest open subinterval of [lo, hi] missing the set.
    pub fn max_gap_in(&self, lo: f64, hi: f64) -> f64 {
        let (a, b) = self.largest_gap(lo, hi);
        b - a
    }

    /// Longest open subinterval of [lo, hi] missing the set.
    pub fn largest_gap(&self, lo: f64, hi: f64) -> (f64, f64) {
        let mut k = self.intervals.partition_point(|(_, b)| *b < lo);
        let mut cursor = lo;
        let mut best = (lo, lo);
        while k < self.intervals.len() && self.intervals[k].0 <= hi {
            let (a, b) = self.intervals[k];
            if a - cursor > best.1 - best.0 {
                best = (cursor, a);
            }
            cursor = cursor.max(b);
            k += 1;
        }
        if hi - cursor > best.1 - best.0 {
            best = (cursor, hi);
        }
        best
    }

    /// Number of half-open boxes [kε, (k+1)ε) meeting the set.
    ///
    /// Endpoints within a relative 1e-9 of a box edge are snapped to it so that
    /// exactly self-similar sets give exact counts.
    pub fn box_count(&self, eps: f64) -> usize {
        let snap = 1e-9;
        let mut count = 0usize;
        let mut last: Option<i64> = None;
        for (a, b) in &self.intervals {
            let fa = a / eps;
            let fb = b / eps;
            let mut first = fa.floor();
            if (fa - fa.round()).abs() < snap {
                first = fa.round();
            }
            let mut end = fb.ceil();
            if (fb - fb.round()).abs() < snap {
                end = fb.round();
            }
            // a degenerate interval still meets one box
            let mut lo = first as i64;
            let hi = (end as i64 - 1).max(lo);
            if let Some(l) = last {
                lo = lo.max(l + 1);
            }
            if hi >= lo {
                count += (hi - lo + 1) as usize;
                last = Some(hi);
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merge_and_gap() {
        let s = IntervalSet::new(vec![(0.5, 0.7), (0.0, 0.2), (0.1, 0.3)]);
        assert_eq!(s.intervals(), &[(0.0, 0.3), (0.5, 0.7)]);
        assert!((s.max_gap_in(0.0, 1.0) - 0.3).abs() < 1e-15);
        assert!((s.max_gap_in(0.25, 0.55) - 0.2).abs() < 1e-15);
        assert!(s.contains(0.6) && !s.contains(0.4));
    }

    #[test]
    fn cantor_counts_are_powers_of_two() {
        let c = IntervalSet::cantor(3, &[0, 2], 10);
        for k in 1..=8 {
            assert_eq!(c.box_count(3f64.powi(-k)), 1 << k, "k={k}");
        }
        assert!((c.measure() - (2.0f64 / 3.0).powi(10)).abs() < 1e-12);
    }

    #[test]
    fn interval_box_count() {
        let s = IntervalSet::new(vec![(0.0, 1.0)]);
        assert_eq!(s.box_count(0.125), 8);
        assert_eq!(s.fatten(0.125).box_count(0.125), 10);
    }
}
