//! Group ranking and pairwise significance of fold correlation distributions.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, StudentsT};

use super::krasula::Orientation;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroupStatistic {
    #[default]
    Mean,
    /// Lower median; preserved by any strictly increasing transform.
    Median,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRank {
    pub group: String,
    pub value: f64,
    pub count: usize,
}

/// Groups ordered best first. Equal values keep lexical group order.
pub fn rank_groups(
    records: &[(String, f64)],
    orientation: Orientation,
    statistic: GroupStatistic,
) -> Result<Vec<GroupRank>> {
    if records.is_empty() {
        return Err(Error::EmptyGroup);
    }
    let mut groups: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for (g, v) in records {
        if g.is_empty() {
            return Err(Error::EmptyGroup);
        }
        groups.entry(g.as_str()).or_default().push(*v);
    }
    let mut out: Vec<GroupRank> = groups
        .into_iter()
        .map(|(g, mut v)| {
            let value = match statistic {
                GroupStatistic::Mean => v.iter().sum::<f64>() / v.len() as f64,
                GroupStatistic::Median => {
                    v.sort_by(f64::total_cmp);
                    v[(v.len() - 1) / 2]
                }
            };
            GroupRank {
                group: g.to_string(),
                value,
                count: v.len(),
            }
        })
        .collect();
    out.sort_by(|a, b| {
        let ord = match orientation {
            Orientation::HigherIsBetter => b.value.total_cmp(&a.value),
            Orientation::LowerIsBetter => a.value.total_cmp(&b.value),
        };
        ord.then_with(|| a.group.cmp(&b.group))
    });
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TTest {
    #[default]
    Welch,
    Pooled,
}

fn moments(v: &[f64]) -> (f64, f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = if v.len() > 1 {
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    (n, m, var)
}

/// Sign of a significant mean difference between two samples, or 0.
pub fn t_test_sign(a: &[f64], b: &[f64], alpha: f64, variant: TTest) -> i8 {
    let a: Vec<f64> = a.iter().copied().filter(|v| v.is_finite()).collect();
    let b: Vec<f64> = b.iter().copied().filter(|v| v.is_finite()).collect();
    if a.len() < 2 || b.len() < 2 {
        return 0;
    }
    let (na, ma, va) = moments(&a);
    let (nb, mb, vb) = moments(&b);
    let sign = if ma > mb { 1 } else if ma < mb { -1 } else { 0 };
    let (se, df) = match variant {
        TTest::Welch => {
            let (sa, sb) = (va / na, vb / nb);
            let se = (sa + sb).sqrt();
            let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
            (se, df)
        }
        TTest::Pooled => {
            let df = na + nb - 2.0;
            let sp = ((na - 1.0) * va + (nb - 1.0) * vb) / df;
            ((sp * (1.0 / na + 1.0 / nb)).sqrt(), df)
        }
    };
    if se == 0.0 || !df.is_finite() {
        return sign;
    }
    let t = (ma - mb) / se;
    let Ok(dist) = StudentsT::new(0.0, 1.0, df) else {
        return 0;
    };
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    if p < alpha {
        sign
    } else {
        0
    }
}

/// Antisymmetric matrix of pairwise t-test outcomes on per-fold PCC lists.
pub fn significance_matrix(lists: &[Vec<f64>], alpha: f64, variant: TTest) -> Result<Vec<Vec<i8>>> {
    if lists.len() < 2 {
        return Err(Error::InvalidParams("significance needs at least two metrics".into()));
    }
    let n = lists[0].len();
    if let Some(l) = lists.iter().find(|l| l.len() != n) {
        return Err(Error::LengthMismatch(n, l.len()));
    }
    let k = lists.len();
    let mut m = vec![vec![0i8; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let s = t_test_sign(&lists[i], &lists[j], alpha, variant);
            m[i][j] = s;
            m[j][i] = -s;
        }
    }
    Ok(m)
}
