//! Repeated random 80/20 cross-validation.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::{correlation_stats, fit_logistic, mean, median};
use super::svr::{grid_search, svr_train, SvrParams, MIN_TRAIN};
use crate::error::{Error, Result};

pub const MIN_RECORDS: usize = 10;

/// One video: its subjective score and the inputs the fold model sees.
#[derive(Debug, Clone, PartialEq)]
pub struct CvRecord {
    pub id: String,
    pub group: String,
    pub dmos: f64,
    pub features: Vec<f64>,
}

/// How each fold turns training records into test predictions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FoldModel {
    Svr { params: SvrParams, grid_search: bool },
    /// Use `features[0]` as the prediction, optionally through a logistic
    /// mapping fitted on the training split.
    Objective { logistic: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvConfig {
    pub folds: usize,
    pub train_frac: f64,
    pub seed: u64,
    pub model: FoldModel,
}

impl Default for CvConfig {
    fn default() -> Self {
        Self {
            folds: 1000,
            train_frac: 0.8,
            seed: 0,
            model: FoldModel::Svr {
                params: SvrParams::default(),
                grid_search: false,
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    /// NaN when a correlation is undefined on this fold.
    pub pcc: f64,
    pub scc: f64,
    pub rmse: f64,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    #[serde(skip)]
    pub predictions: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub pcc_median: f64,
    pub pcc_mean: f64,
    pub scc_median: f64,
    pub scc_mean: f64,
    pub rmse_median: f64,
    pub rmse_mean: f64,
    pub folds: usize,
    pub undefined_folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome {
    pub folds: Vec<FoldResult>,
    pub summary: Summary,
}

impl CvOutcome {
    /// Mean out-of-fold prediction per record (NaN if never tested).
    pub fn out_of_fold(&self, records: &[CvRecord]) -> Vec<f64> {
        let index: std::collections::HashMap<&str, usize> =
            records.iter().enumerate().map(|(i, r)| (r.id.as_str(), i)).collect();
        let mut sum = vec![0.0; records.len()];
        let mut cnt = vec![0usize; records.len()];
        for f in &self.folds {
            for (id, p) in f.test_ids.iter().zip(&f.predictions) {
                let i = index[id.as_str()];
                sum[i] += p;
                cnt[i] += 1;
            }
        }
        sum.iter()
            .zip(&cnt)
            .map(|(s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
            .collect()
    }

    pub fn fold_pccs(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.pcc).collect()
    }
}

fn test_size(n: usize, train_frac: f64) -> usize {
    ((1.0 - train_frac) * n as f64).round().clamp(1.0, (n - 1) as f64) as usize
}

/// Random train/test split for one fold. Each fold draws from its own
/// stream of a generator keyed by `seed`, so folds are independent of
/// evaluation order.
pub fn split(n: usize, train_frac: f64, seed: u64, fold: usize) -> (Vec<usize>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(fold as u64);
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng);
    let n_test = test_size(n, train_frac);
    let mut test = idx[..n_test].to_vec();
    let mut train = idx[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}

fn predict_fold(records: &[CvRecord], train: &[usize], test: &[usize], model: &FoldModel) -> Result<Vec<f64>> {
    match model {
        FoldModel::Svr { params, grid_search: gs } => {
            let x: Vec<Vec<f64>> = train.iter().map(|&i| records[i].features.clone()).collect();
            let y: Vec<f64> = train.iter().map(|&i| records[i].dmos).collect();
            let p = if *gs { grid_search(&x, &y, params)? } else { *params };
            let m = svr_train(&x, &y, &p)?;
            test.iter().map(|&i| m.predict(&records[i].features)).collect()
        }
        FoldModel::Objective { logistic } => {
            let obj = |i: usize| records[i].features.first().copied().unwrap_or(f64::NAN);
            if *logistic {
                let x: Vec<f64> = train.iter().map(|&i| obj(i)).collect();
                let y: Vec<f64> = train.iter().map(|&i| records[i].dmos).collect();
                let fit = fit_logistic(&x, &y)?;
                Ok(test.iter().map(|&i| fit.apply(obj(i))).collect())
            } else {
                Ok(test.iter().map(|&i| obj(i)).collect())
            }
        }
    }
}

pub fn cross_validate(records: &[CvRecord], cfg: &CvConfig) -> Result<CvOutcome> {
    if records.len() < MIN_RECORDS {
        return Err(Error::InsufficientData);
    }
    if cfg.folds == 0 || !(cfg.train_frac > 0.0 && cfg.train_frac < 1.0) {
        return Err(Error::InvalidParams("folds must be positive and train_frac in (0, 1)".into()));
    }
    // Correlations need three test records; the SVR needs its own minimum.
    let n_test = test_size(records.len(), cfg.train_frac);
    if n_test < 3 || records.len() - n_test < MIN_TRAIN {
        return Err(Error::InsufficientData);
    }
    let folds = (0..cfg.folds)
        .into_par_iter()
        .map(|fold| -> Result<FoldResult> {
            let (train, test) = split(records.len(), cfg.train_frac, cfg.seed, fold);
            let pred = predict_fold(records, &train, &test, &cfg.model)?;
            let truth: Vec<f64> = test.iter().map(|&i| records[i].dmos).collect();
            let (pcc, scc, rmse) = match correlation_stats(&pred, &truth) {
                Ok(c) => (c.pcc, c.scc, c.rmse),
                Err(Error::ZeroVariance) => (f64::NAN, f64::NAN, super::stats::rmse(&pred, &truth)?),
                Err(e) => return Err(e),
            };
            Ok(FoldResult {
                fold,
                pcc,
                scc,
                rmse,
                train_ids: train.iter().map(|&i| records[i].id.clone()).collect(),
                test_ids: test.iter().map(|&i| records[i].id.clone()).collect(),
                predictions: pred,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summary = summarize(&folds);
    Ok(CvOutcome { folds, summary })
}

pub fn summarize(folds: &[FoldResult]) -> Summary {
    let finite = |f: fn(&FoldResult) -> f64| -> Vec<f64> { folds.iter().map(f).filter(|v| v.is_finite()).collect() };
    let pcc = finite(|f| f.pcc);
    let scc = finite(|f| f.scc);
    let rmse = finite(|f| f.rmse);
    let m = |v: &[f64]| if v.is_empty() { f64::NAN } else { mean(v) };
    Summary {
        pcc_median: median(&pcc),
        pcc_mean: m(&pcc),
        scc_median: median(&scc),
        scc_mean: m(&scc),
        rmse_median: median(&rmse),
        rmse_mean: m(&rmse),
        folds: folds.len(),
        undefined_folds: folds.iter().filter(|f| !f.pcc.is_finite()).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_disjoint_and_sized() {
        for fold in 0..20 {
            let (tr, te) = split(50, 0.8, 3, fold);
            assert_eq!(te.len(), 10);
            assert_eq!(tr.len(), 40);
            assert!(tr.iter().all(|i| !te.contains(i)));
        }
        assert_eq!(split(50, 0.8, 3, 7), split(50, 0.8, 3, 7));
        assert_ne!(split(50, 0.8, 3, 7), split(50, 0.8, 3, 8));
    }

    #[test]
    fn too_few_records() {
        let r: Vec<CvRecord> = (0..15)
            .map(|i| CvRecord {
                id: i.to_string(),
                group: "g".into(),
                dmos: i as f64,
                features: vec![i as f64],
            })
            .collect();
        let cfg = CvConfig {
            folds: 3,
            ..CvConfig::default()
        };
        assert!(matches!(cross_validate(&r[..9], &cfg), Err(Error::InsufficientData)));
        // 10 records leave a two-record test split at 80/20.
        assert!(matches!(cross_validate(&r[..10], &cfg), Err(Error::InsufficientData)));
        assert!(cross_validate(&r, &cfg).is_ok());
    }
}
