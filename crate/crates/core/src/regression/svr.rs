//! Linear epsilon-insensitive SVR trained by dual coordinate descent.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const MIN_TRAIN: usize = 5;
const CLAMP_LO: f64 = -0.5;
const CLAMP_HI: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrParams {
    pub c: f64,
    pub epsilon: f64,
    pub tol: f64,
    pub max_epochs: usize,
}

impl Default for SvrParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.1,
            tol: 1e-6,
            max_epochs: 10_000,
        }
    }
}

/// Per-dimension min-max scaling recorded at training time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinMax {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl MinMax {
    pub fn fit(rows: &[Vec<f64>]) -> Self {
        let d = rows[0].len();
        let mut min = vec![f64::INFINITY; d];
        let mut max = vec![f64::NEG_INFINITY; d];
        for r in rows {
            for k in 0..d {
                min[k] = min[k].min(r[k]);
                max[k] = max[k].max(r[k]);
            }
        }
        Self { min, max }
    }

    /// Scaled copy of `x`; degenerate dimensions map to 0. With `clamp`,
    /// values are limited to [-0.5, 1.5].
    pub fn apply(&self, x: &[f64], clamp: bool) -> Vec<f64> {
        x.iter()
            .enumerate()
            .map(|(k, &v)| {
                let span = self.max[k] - self.min[k];
                if !(span > 0.0) || !span.is_finite() {
                    return 0.0;
                }
                let s = (v - self.min[k]) / span;
                if clamp {
                    s.clamp(CLAMP_LO, CLAMP_HI)
                } else {
                    s
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub epsilon: f64,
    pub scaling: MinMax,
}

/// Optimizer diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    /// Dual objective after each epoch (minimization form).
    pub dual_objective: Vec<f64>,
    pub epochs: usize,
    pub duality_gap: f64,
}

impl SvrModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.weights.len() {
            return Err(Error::LengthMismatch(x.len(), self.weights.len()));
        }
        let s = self.scaling.apply(x, true);
        Ok(dot(&self.weights, &s) + self.bias)
    }

    /// A model that ignores its input and returns `bias`.
    pub fn constant(dim: usize, bias: f64) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias,
            c: 0.0,
            epsilon: 0.0,
            scaling: MinMax {
                min: vec![0.0; dim],
                max: vec![0.0; dim],
            },
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn svr_train(features: &[Vec<f64>], targets: &[f64], params: &SvrParams) -> Result<SvrModel> {
    svr_train_logged(features, targets, params).map(|(m, _)| m)
}

/// Train and return the per-epoch dual objective trace.
///
/// Targets are centered on their mean and the bias is learnt through an
/// appended constant feature, so the model is exact for constant targets.
pub fn svr_train_logged(features: &[Vec<f64>], targets: &[f64], params: &SvrParams) -> Result<(SvrModel, TrainLog)> {
    if features.len() != targets.len() {
        return Err(Error::LengthMismatch(features.len(), targets.len()));
    }
    if features.len() < MIN_TRAIN {
        return Err(Error::InsufficientData);
    }
    if !(params.c > 0.0) || !(params.epsilon >= 0.0) {
        return Err(Error::InvalidParams("SVR needs C > 0 and epsilon >= 0".into()));
    }
    let d = features[0].len();
    if features.iter().any(|f| f.len() != d) {
        return Err(Error::LengthMismatch(d, features.iter().map(Vec::len).find(|&l| l != d).unwrap()));
    }
    let scaling = MinMax::fit(features);
    let x: Vec<Vec<f64>> = features
        .iter()
        .map(|f| {
            let mut s = scaling.apply(f, false);
            s.push(1.0);
            s
        })
        .collect();
    let n = x.len();
    let mean = targets.iter().sum::<f64>() / n as f64;
    let y: Vec<f64> = targets.iter().map(|t| t - mean).collect();
    let qd: Vec<f64> = x.iter().map(|r| dot(r, r)).collect();

    let (c, eps) = (params.c, params.epsilon);
    let mut beta = vec![0.0; n];
    let mut w = vec![0.0; d + 1];
    let mut log = TrainLog::default();

    let dual = |w: &[f64], beta: &[f64]| -> f64 {
        0.5 * dot(w, w) - dot(&y, beta) + eps * beta.iter().map(|b| b.abs()).sum::<f64>()
    };
    let primal = |w: &[f64]| -> f64 {
        let loss: f64 = x
            .iter()
            .zip(&y)
            .map(|(r, t)| ((dot(w, r) - t).abs() - eps).max(0.0))
            .sum();
        0.5 * dot(w, w) + c * loss
    };

    for epoch in 0..params.max_epochs {
        for i in 0..n {
            if qd[i] <= 0.0 {
                continue;
            }
            let g = dot(&w, &x[i]) - y[i];
            let gp = g + eps;
            let gn = g - eps;
            let b = beta[i];
            let next = if gp < qd[i] * b {
                b - gp / qd[i]
            } else if gn > qd[i] * b {
                b - gn / qd[i]
            } else {
                0.0
            };
            let next = next.clamp(-c, c);
            let delta = next - b;
            if delta != 0.0 {
                beta[i] = next;
                for (wk, xk) in w.iter_mut().zip(&x[i]) {
                    *wk += delta * xk;
                }
            }
        }
        let dv = dual(&w, &beta);
        let pv = primal(&w);
        log.dual_objective.push(dv);
        log.epochs = epoch + 1;
        log.duality_gap = pv + dv;
        if log.duality_gap <= params.tol * pv.abs().max(dv.abs()).max(1e-12) {
            break;
        }
    }

    let bias = w.pop().unwrap() + mean;
    Ok((
        SvrModel {
            weights: w,
            bias,
            c,
            epsilon: eps,
            scaling,
        },
        log,
    ))
}

/// Candidate grid for hyperparameter selection.
pub const GRID_C: [f64; 3] = [0.1, 1.0, 10.0];
pub const GRID_EPS: [f64; 2] = [0.01, 0.1];

/// Pick (C, epsilon) from the grid by 5-fold CV RMSE on the given training
/// data only. Ties keep the earlier grid entry.
pub fn grid_search(features: &[Vec<f64>], targets: &[f64], base: &SvrParams) -> Result<SvrParams> {
    const K: usize = 5;
    let n = features.len();
    if n < 2 * K {
        return Ok(*base);
    }
    let mut best = (*base, f64::INFINITY);
    for &c in &GRID_C {
        for &epsilon in &GRID_EPS {
            let p = SvrParams { c, epsilon, ..*base };
            let mut sse = 0.0;
            for k in 0..K {
                let (mut trx, mut tr_y, mut tex, mut te_y) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
                for i in 0..n {
                    if i % K == k {
                        tex.push(features[i].clone());
                        te_y.push(targets[i]);
                    } else {
                        trx.push(features[i].clone());
                        tr_y.push(targets[i]);
                    }
                }
                let m = svr_train(&trx, &tr_y, &p)?;
                for (f, t) in tex.iter().zip(&te_y) {
                    sse += (m.predict(f)? - t).powi(2);
                }
            }
            if sse < best.1 {
                best = (p, sse);
            }
        }
    }
    Ok(best.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn linear_data(n: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let xs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.random_range(0.0..1.0)).collect()).collect();
        let ys = xs.iter().map(|x| dot(&w, x) + 2.0).collect();
        (xs, ys)
    }

    #[test]
    fn constant_targets() {
        let (xs, _) = linear_data(20, 6, 1);
        let m = svr_train(&xs, &[3.5; 20], &SvrParams::default()).unwrap();
        for x in &xs {
            assert!((m.predict(x).unwrap() - 3.5).abs() <= 0.1 + 1e-6);
        }
    }

    #[test]
    fn too_few_samples() {
        let (xs, ys) = linear_data(4, 3, 2);
        assert!(matches!(svr_train(&xs, &ys, &SvrParams::default()), Err(Error::InsufficientData)));
    }

    #[test]
    fn dual_objective_never_increases() {
        let (xs, ys) = linear_data(60, 10, 3);
        let (_, log) = svr_train_logged(&xs, &ys, &SvrParams::default()).unwrap();
        assert!(log.epochs > 1);
        for w in log.dual_objective.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn fits_training_points() {
        let (xs, ys) = linear_data(80, 5, 4);
        let m = svr_train(&xs, &ys, &SvrParams { c: 10.0, ..Default::default() }).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((m.predict(x).unwrap() - y).abs() <= 0.1 + 0.01);
        }
    }

    #[test]
    fn zero_weights_bias_only() {
        let m = SvrModel::constant(4, 3.0);
        assert_eq!(m.predict(&[1.0, 5.0, -2.0, 9.0]).unwrap(), 3.0);
        assert!(m.predict(&[1.0]).is_err());
    }

    #[test]
    fn clamps_far_inputs() {
        let (xs, ys) = linear_data(30, 3, 5);
        let m = svr_train(&xs, &ys, &SvrParams::default()).unwrap();
        let p = m.predict(&[10.0, -10.0, 1e300]).unwrap();
        assert!(p.is_finite());
    }

    #[test]
    fn rerun_is_deterministic() {
        let (xs, ys) = linear_data(50, 8, 6);
        let a = svr_train(&xs, &ys, &SvrParams::default()).unwrap();
        let b = svr_train(&xs, &ys, &SvrParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
