//! Pairwise ROC analysis: different-vs-similar and better-vs-worse.

use serde::{Deserialize, Serialize};

use super::stats::average_ranks;
use crate::error::{Error, Result};

pub const Z_CRIT: f64 = 1.96;

/// Direction in which an objective score indicates better quality.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Orientation {
    HigherIsBetter,
    LowerIsBetter,
}

impl Orientation {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "higher" => Some(Self::HigherIsBetter),
            "lower" => Some(Self::LowerIsBetter),
            _ => None,
        }
    }
}

/// Source of the "significantly different" label for each unordered pair.
#[derive(Debug, Clone, Copy)]
pub enum PairSignificance<'a> {
    /// Per-video standard error of the DMOS; z-test on the difference.
    StdErr(&'a [f64]),
    /// Explicit `(i, j, different)` labels; unlisted pairs are skipped.
    Labels(&'a [(usize, usize, bool)]),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KrasulaAuc {
    /// `None` when either class of the different/similar task is empty.
    pub ds: Option<f64>,
    pub bw: f64,
}

/// Mann-Whitney estimate of P(pos > neg) with ties counted as one half.
pub fn auc(pos: &[f64], neg: &[f64]) -> Option<f64> {
    if pos.is_empty() || neg.is_empty() {
        return None;
    }
    let all: Vec<f64> = pos.iter().chain(neg).copied().collect();
    let ranks = average_ranks(&all);
    let rsum: f64 = ranks[..pos.len()].iter().sum();
    let (np, nn) = (pos.len() as f64, neg.len() as f64);
    Some((rsum - np * (np + 1.0) / 2.0) / (np * nn))
}

pub fn krasula_auc(
    objective: &[f64],
    dmos: &[f64],
    significance: PairSignificance<'_>,
    orientation: Orientation,
) -> Result<KrasulaAuc> {
    if objective.len() != dmos.len() {
        return Err(Error::LengthMismatch(objective.len(), dmos.len()));
    }
    if objective.len() < 2 {
        return Err(Error::InsufficientData);
    }
    // Align the score so that larger means larger DMOS (worse quality).
    let s: Vec<f64> = match orientation {
        Orientation::LowerIsBetter => objective.to_vec(),
        Orientation::HigherIsBetter => objective.iter().map(|v| -v).collect(),
    };

    let mut pairs: Vec<(usize, usize, bool)> = Vec::new();
    match significance {
        PairSignificance::StdErr(se) => {
            if se.len() != dmos.len() {
                return Err(Error::LengthMismatch(se.len(), dmos.len()));
            }
            for i in 0..dmos.len() {
                for j in i + 1..dmos.len() {
                    let diff = (dmos[i] - dmos[j]).abs();
                    let sd = (se[i] * se[i] + se[j] * se[j]).sqrt();
                    let different = if sd > 0.0 { diff / sd >= Z_CRIT } else { diff > 0.0 };
                    pairs.push((i, j, different));
                }
            }
        }
        PairSignificance::Labels(l) => {
            for &(i, j, d) in l {
                if i >= dmos.len() || j >= dmos.len() || i == j {
                    return Err(Error::InvalidParams(format!("pair label ({i}, {j}) out of range")));
                }
                pairs.push((i, j, d));
            }
        }
    }

    let (mut diff, mut sim) = (Vec::new(), Vec::new());
    let (mut better, mut worse) = (Vec::new(), Vec::new());
    for &(i, j, different) in &pairs {
        let gap = (s[i] - s[j]).abs();
        if different {
            diff.push(gap);
            if dmos[i] == dmos[j] {
                continue;
            }
            let (hi, lo) = if dmos[i] > dmos[j] { (i, j) } else { (j, i) };
            let d = s[hi] - s[lo];
            better.push(d);
            worse.push(-d);
        } else {
            sim.push(gap);
        }
    }
    let bw = auc(&better, &worse).ok_or(Error::NoDiscriminablePairs)?;
    Ok(KrasulaAuc { ds: auc(&diff, &sim), bw })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mann_whitney_ties() {
        assert_eq!(auc(&[2.0, 3.0], &[1.0]), Some(1.0));
        assert_eq!(auc(&[1.0], &[1.0]), Some(0.5));
        assert_eq!(auc(&[], &[1.0]), None);
    }

    #[test]
    fn single_pair() {
        let r = krasula_auc(&[1.0, 2.0], &[1.0, 3.0], PairSignificance::StdErr(&[0.1, 0.1]), Orientation::LowerIsBetter)
            .unwrap();
        assert_eq!(r.bw, 1.0);
        assert_eq!(r.ds, None);
    }

    #[test]
    fn orientation_flips() {
        let dmos = [1.0, 2.0, 3.0, 4.0];
        let se = [0.1; 4];
        let q: Vec<f64> = dmos.iter().map(|d| 10.0 - d).collect();
        let r = krasula_auc(&q, &dmos, PairSignificance::StdErr(&se), Orientation::HigherIsBetter).unwrap();
        assert_eq!(r.bw, 1.0);
        let r = krasula_auc(&q, &dmos, PairSignificance::StdErr(&se), Orientation::LowerIsBetter).unwrap();
        assert_eq!(r.bw, 0.0);
    }

    #[test]
    fn no_significant_pairs() {
        let r = krasula_auc(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0], PairSignificance::StdErr(&[0.5; 3]), Orientation::LowerIsBetter);
        assert!(matches!(r, Err(Error::NoDiscriminablePairs)));
    }
}
