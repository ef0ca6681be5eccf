//! Result files: fold CSV, summary JSON, scatter CSV, score tables,
//! significance and ranking CSVs, and the trained model file.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::regression::{FoldResult, GroupRank, KrasulaAuc, LogisticFit, SvrModel, Summary};

/// Fixed-precision float for text outputs; NaN stays `NaN`.
fn num(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.12}")
    } else {
        "NaN".into()
    }
}

pub fn write_folds_csv(path: &Path, folds: &[FoldResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["fold", "pcc", "scc", "rmse"])?;
    for f in folds {
        w.write_record([f.fold.to_string(), num(f.pcc), num(f.scc), num(f.rmse)])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub seed: u64,
    pub records: usize,
    pub summary: Summary,
    /// Fold whose model is used for the scatter and pairwise analysis.
    pub median_fold: usize,
    pub krasula: Option<KrasulaAuc>,
    pub logistic: Option<LogisticFit>,
    /// Cross-validated summaries of baseline metrics under a logistic mapping.
    pub baselines: BTreeMap<String, Summary>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    fs::write(path, s)?;
    Ok(())
}

/// `(video_id, group, dmos, predicted)` rows.
pub fn write_scatter_csv(path: &Path, rows: &[(String, String, f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["video_id", "group", "dmos", "predicted"])?;
    for (id, g, d, p) in rows {
        w.write_record([id.clone(), g.clone(), num(*d), num(*p)])?;
    }
    w.flush()?;
    Ok(())
}

/// Objective scores per video: a `video_id` column plus one column per metric.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    pub metrics: Vec<String>,
    pub rows: HashMap<String, Vec<f64>>,
}

impl ScoreTable {
    pub fn load(path: &Path) -> Result<ScoreTable> {
        if !path.is_file() {
            return Err(Error::MissingPath(path.to_path_buf()));
        }
        let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.len() < 2 || &headers[0] != "video_id" {
            return Err(Error::Malformed("score table needs `video_id` then metric columns".into()));
        }
        let metrics: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
        let mut rows = HashMap::new();
        for rec in r.records() {
            let rec = rec?;
            let vals = rec
                .iter()
                .skip(1)
                .map(|v| v.parse::<f64>().map_err(|_| Error::Malformed(format!("bad score {v:?}"))))
                .collect::<Result<Vec<f64>>>()?;
            if vals.len() != metrics.len() {
                return Err(Error::Malformed(format!("row {} has {} scores", &rec[0], vals.len())));
            }
            if rows.insert(rec[0].to_string(), vals).is_some() {
                return Err(Error::Malformed(format!("duplicate video_id {}", &rec[0])));
            }
        }
        Ok(ScoreTable { metrics, rows })
    }

    pub fn save(&self, path: &Path, order: &[&str]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut head = vec!["video_id".to_string()];
        head.extend(self.metrics.iter().cloned());
        w.write_record(&head)?;
        for id in order {
            if let Some(v) = self.rows.get(*id) {
                let mut rec = vec![id.to_string()];
                rec.extend(v.iter().map(|x| num(*x)));
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.metrics.iter().position(|m| m == name)
    }

    pub fn score(&self, id: &str, column: usize) -> Result<f64> {
        self.rows
            .get(id)
            .map(|v| v[column])
            .ok_or_else(|| Error::Malformed(format!("no score for {id}")))
    }
}

pub fn write_significance_csv(path: &Path, names: &[String], m: &[Vec<i8>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut head = vec!["metric".to_string()];
    head.extend(names.iter().cloned());
    w.write_record(&head)?;
    for (name, row) in names.iter().zip(m) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// `source,rank,group,value,count` rows, one block per source.
pub fn write_ranking_csv<W: std::io::Write>(out: W, blocks: &[(&str, &[GroupRank])]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["source", "rank", "group", "value", "count"])?;
    for (source, ranks) in blocks {
        for (i, g) in ranks.iter().enumerate() {
            w.write_record([
                source.to_string(),
                (i + 1).to_string(),
                g.group.clone(),
                num(g.value),
                g.count.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Trained aggregator with the extraction digest it expects.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    /// Hex SHA-256 of the extraction settings used for training features.
    pub config_digest: String,
    pub seed: u64,
    pub model: SvrModel,
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<ModelFile> {
        if !path.is_file() {
            return Err(Error::MissingPath(path.to_path_buf()));
        }
        Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
