//! Momentum and position sets built from clouds of words on the open baker.

use serde::{Deserialize, Serialize};

use super::{fup_norm, realize_intervals};
use crate::classical::{Cell, OpenMapSystem, PieceKind};
use crate::error::{LabError, Result};
use crate::thermo::IntervalSet;

/// Words indexing the plus and minus neighborhoods.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct WordCloud {
    pub plus_words: Vec<Vec<usize>>,
    pub minus_words: Vec<Vec<usize>>,
    /// Plus words must end with this letter and minus words start with it.
    #[serde(default)]
    pub target: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CloudParams {
    pub h: f64,
    pub tau: f64,
    pub delta0: f64,
    pub frak_b: f64,
    pub cloud_constant: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OmegaSets {
    /// Position projection fattened by h^delta0.
    pub minus: IntervalSet,
    /// Momentum projection fattened by h^tau.
    pub plus: IntervalSet,
    /// Momentum of the reference unstable leaf.
    pub leaf: Option<f64>,
}

fn cylinder(base: usize, kept: &[usize], letters: impl Iterator<Item = usize>) -> (f64, f64) {
    let l = base as f64;
    let mut lo = 0.0;
    let mut w = 1.0;
    for q in letters {
        w /= l;
        lo += kept[q] as f64 * w;
    }
    (lo, lo + w)
}

/// Projects the word neighborhoods of an unsheared baker onto the axes.
pub fn build_omega_sets(sys: &OpenMapSystem, cloud: &WordCloud, params: &CloudParams) -> Result<OmegaSets> {
    let (base, kept) = sys.baker_branches()?;
    if sys
        .pieces
        .iter()
        .any(|p| matches!(p.kind, PieceKind::Baker { shear, .. } if shear != 0.0))
    {
        return Err(LabError::Invalid("axis charts need an unsheared baker".into()));
    }
    if sys.partition.iter().enumerate().any(|(q, c)| *c != Cell::Piece(q)) {
        return Err(LabError::Invalid("axis charts need the piece partition".into()));
    }
    if !(params.h > 0.0 && params.h < 1.0) {
        return Err(LabError::Invalid(format!("h = {} outside (0, 1)", params.h)));
    }
    let q = kept.len();
    let check = |w: &Vec<usize>| -> Result<()> {
        if w.is_empty() || w.iter().any(|&l| l >= q) {
            return Err(LabError::Invalid(format!("word {w:?} outside the alphabet of size {q}")));
        }
        Ok(())
    };
    for w in cloud.plus_words.iter().chain(&cloud.minus_words) {
        check(w)?;
    }
    if let Some(a) = cloud.target {
        if let Some(w) = cloud.plus_words.iter().find(|w| w.last() != Some(&a)) {
            return Err(LabError::Invalid(format!("plus word {w:?} does not end with {a}")));
        }
        if let Some(w) = cloud.minus_words.iter().find(|w| w.first() != Some(&a)) {
            return Err(LabError::Invalid(format!("minus word {w:?} does not start with {a}")));
        }
    }

    let plus_strips: Vec<(f64, f64)> = cloud
        .plus_words
        .iter()
        .map(|w| cylinder(base, &kept, w.iter().rev().copied()))
        .collect();
    let leaf = plus_strips.first().map(|(a, b)| 0.5 * (a + b));
    if let Some(xi0) = leaf {
        let bound = params.cloud_constant * params.h.powf(params.frak_b);
        for (w, &(a, b)) in cloud.plus_words.iter().zip(&plus_strips) {
            let distance = (a - xi0).abs().max((b - xi0).abs());
            if distance > bound {
                return Err(LabError::Cloud {
                    first: cloud.plus_words[0].clone(),
                    second: w.clone(),
                    distance,
                    bound,
                });
            }
        }
    }
    let minus_strips: Vec<(f64, f64)> = cloud
        .minus_words
        .iter()
        .map(|w| cylinder(base, &kept, w.iter().copied()))
        .collect();
    Ok(OmegaSets {
        minus: IntervalSet::new(minus_strips).fatten(params.h.powf(params.delta0)),
        plus: IntervalSet::new(plus_strips).fatten(params.h.powf(params.tau)),
        leaf,
    })
}

/// Restricted DFT norm of the realized sets on Z_N.
pub fn omega_norm(sets: &OmegaSets, n: usize) -> Result<f64> {
    let minus = realize_intervals(&sets.minus, n);
    let plus = realize_intervals(&sets.plus, n);
    fup_norm(n, &minus, &plus)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::{local_word_jacobian, SymbolicWord, TrappedPool};
    use crate::thermo::{check_porosity, PorosityScan};

    fn params(h: f64) -> CloudParams {
        CloudParams {
            h,
            tau: 0.875,
            delta0: 0.25,
            frak_b: 0.5,
            cloud_constant: 1.0,
        }
    }

    fn all_words(q: usize, n: usize) -> Vec<Vec<usize>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            out = out
                .into_iter()
                .flat_map(|w| {
                    (0..q).map(move |l| {
                        let mut v = w.clone();
                        v.push(l);
                        v
                    })
                })
                .collect();
        }
        out
    }

    #[test]
    fn single_word_width_matches_jacobian() {
        let sys = OpenMapSystem::open_baker(3, &[0, 2]).unwrap();
        let pool = TrappedPool::build(&sys, 8).unwrap();
        let word = vec![0, 1, 1, 0];
        let jac = local_word_jacobian(&sys, &pool, &SymbolicWord(word.clone())).unwrap();
        let h = 1e-3;
        let cloud = WordCloud {
            plus_words: vec![word],
            ..Default::default()
        };
        let sets = build_omega_sets(&sys, &cloud, &params(h)).unwrap();
        assert_eq!(sets.plus.len(), 1);
        let expect = 1.0 / jac.j_plus + 2.0 * h.powf(0.875);
        assert!((sets.plus.measure() - expect).abs() < 1e-12);
    }

    #[test]
    fn empty_cloud_gives_empty_sets() {
        let sys = OpenMapSystem::open_baker(3, &[0, 2]).unwrap();
        let sets = build_omega_sets(&sys, &WordCloud::default(), &params(1e-3)).unwrap();
        assert!(sets.plus.is_empty() && sets.minus.is_empty());
        assert_eq!(omega_norm(&sets, 243).unwrap(), 0.0);
    }

    #[test]
    fn far_words_break_the_cloud() {
        let sys = OpenMapSystem::open_baker(3, &[0, 2]).unwrap();
        let cloud = WordCloud {
            plus_words: vec![vec![0, 0, 0], vec![0, 0, 1]],
            ..Default::default()
        };
        match build_omega_sets(&sys, &cloud, &params(1e-3)) {
            Err(LabError::Cloud { first, second, .. }) => {
                assert_eq!(first, vec![0, 0, 0]);
                assert_eq!(second, vec![0, 0, 1]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn target_letter_enforced() {
        let sys = OpenMapSystem::open_baker(3, &[0, 2]).unwrap();
        let cloud = WordCloud {
            plus_words: vec![vec![0, 1]],
            minus_words: vec![],
            target: Some(0),
        };
        assert!(matches!(
            build_omega_sets(&sys, &cloud, &params(1e-3)),
            Err(LabError::Invalid(_))
        ));
    }

    #[test]
    fn sheared_baker_rejected() {
        let sys = OpenMapSystem::sheared_baker(3, &[0, 2], 0.1).unwrap();
        assert!(build_omega_sets(&sys, &WordCloud::default(), &params(1e-3)).is_err());
    }

    #[test]
    fn cloud_sets_are_porous() {
        let sys = OpenMapSystem::open_baker(3, &[0, 2]).unwrap();
        let h = 3f64.powi(-8);
        let mut p = params(h);
        p.cloud_constant = 10.0;
        // Plus words share their last two letters, so the strips sit inside one depth-2 cylinder.
        let plus_words: Vec<Vec<usize>> = all_words(2, 6)
            .into_iter()
            .map(|mut w| {
                w.extend([1, 0]);
                w
            })
            .collect();
        let cloud = WordCloud {
            plus_words,
            minus_words: all_words(2, 6),
            target: None,
        };
        let sets = build_omega_sets(&sys, &cloud, &p).unwrap();
        let nu = 1.0 / 9.0;
        let fat = h.powf(p.tau);
        let scan = PorosityScan::new(nu / 3.0, 3.0 * fat / nu, 1.0).with_ratio(1.1);
        assert!(check_porosity(&sets.plus, &scan).unwrap().is_certified());
    }

    #[test]
    fn porous_clouds_decay() {
        let sys = OpenMapSystem::open_baker(3, &[0, 2]).unwrap();
        let mut hs = Vec::new();
        let mut norms = Vec::new();
        for k in 5..=8usize {
            let n = 3usize.pow(k as u32);
            let h = 1.0 / n as f64;
            let depth = (0.875 * k as f64).round() as usize;
            let cloud = WordCloud {
                plus_words: all_words(2, depth),
                minus_words: all_words(2, depth),
                target: None,
            };
            let mut p = params(h);
            p.cloud_constant = 2.0 / h.powf(p.frak_b);
            p.delta0 = 0.875;
            let sets = build_omega_sets(&sys, &cloud, &p).unwrap();
            hs.push(h);
            norms.push(omega_norm(&sets, n).unwrap());
        }
        let fit = super::super::fit_exponent(&hs, &norms).unwrap();
        assert!(fit.beta > 0.0, "beta {} norms {norms:?}", fit.beta);
    }
}
