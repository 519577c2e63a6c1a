//! Smooth one-dimensional cutoff profiles.

use serde::{Deserialize, Serialize};

fn f(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp()
    }
}

fn df(u: f64) -> f64 {
    if u <= 0.0 {
        0.0
    } else {
        (-1.0 / u).exp() / (u * u)
    }
}

/// C^∞ step: 1 for s ≤ 0, 0 for s ≥ 1.
pub fn smooth_step(s: f64) -> f64 {
    if s <= 0.0 {
        1.0
    } else if s >= 1.0 {
        0.0
    } else {
        let a = f(1.0 - s);
        a / (a + f(s))
    }
}

/// Derivative of [`smooth_step`].
pub fn smooth_step_deriv(s: f64) -> f64 {
    if s <= 0.0 || s >= 1.0 {
        return 0.0;
    }
    let a = f(1.0 - s);
    let b = f(s);
    let da = -df(1.0 - s);
    let db = df(s);
    (da * (a + b) - a * (da + db)) / ((a + b) * (a + b))
}

/// Equal to 1 on [lo, hi] and 0 outside [lo - margin, hi + margin].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plateau {
    pub lo: f64,
    pub hi: f64,
    pub margin: f64,
}

impl Plateau {
    pub fn new(lo: f64, hi: f64, margin: f64) -> Self {
        Self { lo, hi, margin }
    }

    /// Symmetric plateau of half-width `inner` vanishing beyond `outer`.
    pub fn centered(c: f64, inner: f64, outer: f64) -> Self {
        Self::new(c - inner, c + inner, outer - inner)
    }

    pub fn value(&self, t: f64) -> f64 {
        if t < self.lo {
            smooth_step((self.lo - t) / self.margin)
        } else if t > self.hi {
            smooth_step((t - self.hi) / self.margin)
        } else {
            1.0
        }
    }

    pub fn deriv(&self, t: f64) -> f64 {
        if t < self.lo {
            -smooth_step_deriv((self.lo - t) / self.margin) / self.margin
        } else if t > self.hi {
            smooth_step_deriv((t - self.hi) / self.margin) / self.margin
        } else {
            0.0
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.lo - self.margin, self.hi + self.margin)
    }
}

/// Sum of plateaus with disjoint supports, optionally 1-periodic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub parts: Vec<Plateau>,
    pub periodic: bool,
}

impl Profile {
    pub fn new(parts: Vec<Plateau>, periodic: bool) -> Self {
        Self { parts, periodic }
    }

    fn shifts(&self) -> &'static [f64] {
        if self.periodic {
            &[-1.0, 0.0, 1.0]
        } else {
            &[0.0]
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        let mut v = 0.0;
        for s in self.shifts() {
            for p in &self.parts {
                v += p.value(t + s);
            }
        }
        v.min(1.0)
    }

    pub fn deriv(&self, t: f64) -> f64 {
        let mut v = 0.0;
        for s in self.shifts() {
            for p in &self.parts {
                v += p.deriv(t + s);
            }
        }
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_endpoints_and_symmetry() {
        assert_eq!(smooth_step(-0.1), 1.0);
        assert_eq!(smooth_step(1.2), 0.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        for k in 1..100 {
            let s = k as f64 / 100.0;
            assert!((smooth_step(s) + smooth_step(1.0 - s) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn step_derivative_matches_differences() {
        for k in 1..50 {
            let s = k as f64 / 50.0;
            let h = 1e-6;
            let fd = (smooth_step(s + h) - smooth_step(s - h)) / (2.0 * h);
            assert!((fd - smooth_step_deriv(s)).abs() < 1e-7);
        }
    }

    #[test]
    fn plateau_shape() {
        let p = Plateau::centered(0.0, 0.5, 0.58);
        assert_eq!(p.value(0.3), 1.0);
        assert_eq!(p.value(-0.5), 1.0);
        assert_eq!(p.value(0.59), 0.0);
        assert!(p.value(0.54) > 0.0 && p.value(0.54) < 1.0);
        let h = 1e-6;
        let fd = (p.value(0.55 + h) - p.value(0.55 - h)) / (2.0 * h);
        assert!((fd - p.deriv(0.55)).abs() < 1e-5);
    }
}
