//! Correlation statistics and the logistic objective-to-DMOS mapping.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Median of a slice; NaN for an empty one.
pub fn median(v: &[f64]) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn pearson(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&i, &j| v[i].total_cmp(&v[j]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = 0.5 * ((i + 1) + (j + 1)) as f64;
        for k in i..=j {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

pub fn rmse(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    Ok((a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>() / a.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub pcc: f64,
    pub scc: f64,
    pub rmse: f64,
}

pub fn correlation_stats(pred: &[f64], dmos: &[f64]) -> Result<Correlation> {
    if pred.len() != dmos.len() {
        return Err(Error::LengthMismatch(pred.len(), dmos.len()));
    }
    if pred.len() < 3 {
        return Err(Error::InsufficientData);
    }
    Ok(Correlation {
        pcc: pearson(pred, dmos)?,
        scc: spearman(pred, dmos)?,
        rmse: rmse(pred, dmos)?,
    })
}

/// `beta1 / (1 + exp(-beta2 * (x - beta3)))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticFit {
    pub beta1: f64,
    pub beta2: f64,
    pub beta3: f64,
}

impl LogisticFit {
    pub fn apply(&self, x: f64) -> f64 {
        self.beta1 / (1.0 + (-self.beta2 * (x - self.beta3)).exp())
    }

    pub fn sse(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).map(|(a, b)| (self.apply(*a) - b).powi(2)).sum()
    }

    fn jacobian_row(&self, x: f64) -> [f64; 3] {
        let e = (-self.beta2 * (x - self.beta3)).exp();
        let s = 1.0 / (1.0 + e);
        let ds = if e.is_finite() { s * s * e } else { 0.0 };
        [s, self.beta1 * ds * (x - self.beta3), -self.beta1 * ds * self.beta2]
    }
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut m = [[0.0; 4]; 3];
    for i in 0..3 {
        m[i][..3].copy_from_slice(&a[i]);
        m[i][3] = b[i];
    }
    for col in 0..3 {
        let piv = (col..3).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-300 {
            return None;
        }
        m.swap(col, piv);
        for r in 0..3 {
            if r != col {
                let f = m[r][col] / m[col][col];
                for c in col..4 {
                    m[r][c] -= f * m[col][c];
                }
            }
        }
    }
    Some([m[0][3] / m[0][0], m[1][3] / m[1][1], m[2][3] / m[2][2]])
}

pub const LOGISTIC_MAX_ITER: usize = 500;

/// Least-squares logistic fit by Levenberg-Marquardt.
pub fn fit_logistic(objective: &[f64], dmos: &[f64]) -> Result<LogisticFit> {
    if objective.len() != dmos.len() {
        return Err(Error::LengthMismatch(objective.len(), dmos.len()));
    }
    if objective.len() < 4 {
        return Err(Error::InsufficientData);
    }
    let lo = objective.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = objective.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::DegenerateFit);
    }
    let dmax = dmos.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let dmin = dmos.iter().copied().fold(f64::INFINITY, f64::min);
    if dmax == dmin {
        // Saturated curve: exactly constant over the observed range.
        return Ok(LogisticFit {
            beta1: dmax,
            beta2: 1.0,
            beta3: lo - 1000.0,
        });
    }

    let mut fit = LogisticFit {
        beta1: dmax,
        beta2: 1.0,
        beta3: median(objective),
    };
    let mut sse = fit.sse(objective, dmos);
    let mut lambda = 1e-3;
    for _ in 0..LOGISTIC_MAX_ITER {
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for (&x, &y) in objective.iter().zip(dmos) {
            let j = fit.jacobian_row(x);
            let r = y - fit.apply(x);
            for a in 0..3 {
                jtr[a] += j[a] * r;
                for b in 0..3 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let mut m = jtj;
            for a in 0..3 {
                m[a][a] += lambda * jtj[a][a].max(1e-12);
            }
            let Some(step) = solve3(m, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let cand = LogisticFit {
                beta1: fit.beta1 + step[0],
                beta2: fit.beta2 + step[1],
                beta3: fit.beta3 + step[2],
            };
            let cs = cand.sse(objective, dmos);
            if cs.is_finite() && cs <= sse {
                let rel = (sse - cs) / sse.max(1e-300);
                fit = cand;
                sse = cs;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel < 1e-9 {
                    return Ok(fit);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    Ok(fit)
}
