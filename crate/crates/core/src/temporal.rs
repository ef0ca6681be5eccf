//! Per-scale trajectory deformation and descriptor dissimilarity, and the
//! assembled feature vector.

use crate::curve::{elastic_distance, Curve, ElasticParams};
use crate::descriptors::TrajectoryDescriptors;
use crate::error::{Error, Result};
use crate::motion::Trajectory;

pub const N_SCALES: usize = 7;
pub const N_DESCRIPTORS: usize = 4;
pub const N_DISTANCES: usize = 4;
pub const PER_SCALE: usize = 1 + N_DESCRIPTORS * N_DISTANCES;
pub const FEATURE_LEN: usize = N_SCALES * PER_SCALE + 1;
pub const JSD_EPS: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HistDistance {
    Jsd,
    Euclidean,
    Cosine,
    Minkowski,
}

impl HistDistance {
    pub const ALL: [HistDistance; N_DISTANCES] = [
        HistDistance::Jsd,
        HistDistance::Euclidean,
        HistDistance::Cosine,
        HistDistance::Minkowski,
    ];
}

pub fn histogram_distance(h1: &[f64], h2: &[f64], kind: HistDistance, p: f64) -> Result<f64> {
    if h1.len() != h2.len() {
        return Err(Error::LengthMismatch(h1.len(), h2.len()));
    }
    if h1 == h2 {
        return Ok(0.0);
    }
    Ok(match kind {
        HistDistance::Jsd => jsd(h1, h2),
        HistDistance::Euclidean => h1.iter().zip(h2).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt(),
        HistDistance::Cosine => {
            let na = h1.iter().map(|v| v * v).sum::<f64>().sqrt();
            let nb = h2.iter().map(|v| v * v).sum::<f64>().sqrt();
            if na == 0.0 && nb == 0.0 {
                0.0
            } else if na == 0.0 || nb == 0.0 {
                1.0
            } else {
                let dot: f64 = h1.iter().zip(h2).map(|(a, b)| a * b).sum();
                (1.0 - dot / (na * nb)).max(0.0)
            }
        }
        HistDistance::Minkowski => h1
            .iter()
            .zip(h2)
            .map(|(a, b)| (a - b).abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p),
    })
}

/// Sum-normalized copy; an all-zero histogram becomes uniform.
fn to_distribution(h: &[f64]) -> Vec<f64> {
    let total: f64 = h.iter().map(|v| v.max(0.0)).sum();
    if total > 0.0 {
        h.iter().map(|v| v.max(0.0) / total).collect()
    } else {
        vec![1.0 / h.len() as f64; h.len()]
    }
}

fn jsd(h1: &[f64], h2: &[f64]) -> f64 {
    if h1.is_empty() {
        return 0.0;
    }
    let p = to_distribution(h1);
    let q = to_distribution(h2);
    let mut acc = 0.0;
    for (a, b) in p.iter().zip(&q) {
        let m = 0.5 * (a + b);
        acc += 0.5 * a * ((a + JSD_EPS) / (m + JSD_EPS)).ln() + 0.5 * b * ((b + JSD_EPS) / (m + JSD_EPS)).ln();
    }
    acc.clamp(0.0, std::f64::consts::LN_2)
}

/// Mean elastic distance between matched trajectories viewed as open curves.
/// Pairs whose curves cannot be put in SRV form are skipped. `None` when no
/// pair contributes.
pub fn t_em_scale(pairs: &[(&Trajectory, &Trajectory)], params: &ElasticParams) -> Result<Option<f64>> {
    let mut open = *params;
    open.cyclic_align = false;
    let mut total = 0.0;
    let mut count = 0usize;
    for (a, b) in pairs {
        let (Ok(ca), Ok(cb)) = (Curve::open(a.points.clone()), Curve::open(b.points.clone())) else {
            continue;
        };
        match elastic_distance(&ca, &cb, &open) {
            Ok(d) => {
                total += d;
                count += 1;
            }
            Err(Error::StationarySegment | Error::DegenerateCurve) => {}
            Err(e) => return Err(e),
        }
    }
    Ok((count > 0).then(|| total / count as f64))
}

/// Mean histogram distance over matched descriptor pairs for one channel
/// (0 HOG, 1 HOF, 2 MBHx, 3 MBHy).
pub fn t_sl(
    pairs: &[(&TrajectoryDescriptors, &TrajectoryDescriptors)],
    channel: usize,
    kind: HistDistance,
    p: f64,
) -> Result<Option<f64>> {
    if pairs.is_empty() {
        return Ok(None);
    }
    let mut total = 0.0;
    for (a, b) in pairs {
        total += histogram_distance(a.channels()[channel], b.channels()[channel], kind, p)?;
    }
    Ok(Some(total / pairs.len() as f64))
}

/// All 16 structural losses of one scale, descriptor-major.
pub fn t_sl_table(
    pairs: &[(&TrajectoryDescriptors, &TrajectoryDescriptors)],
    p: f64,
) -> Result<Option<[[f64; N_DISTANCES]; N_DESCRIPTORS]>> {
    if pairs.is_empty() {
        return Ok(None);
    }
    let mut out = [[0.0; N_DISTANCES]; N_DESCRIPTORS];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, kind) in HistDistance::ALL.iter().enumerate() {
            row[j] = t_sl(pairs, i, *kind, p)?.unwrap_or(0.0);
        }
    }
    Ok(Some(out))
}

/// Measurements of one scale; `None` entries mean no matched evidence.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScaleFeatures {
    pub t_em: Option<f64>,
    pub t_sl: Option<[[f64; N_DISTANCES]; N_DESCRIPTORS]>,
}

impl ScaleFeatures {
    pub fn is_valid(&self) -> bool {
        self.t_em.is_some() || self.t_sl.is_some()
    }
}

/// The 120-entry per-video descriptor with a validity flag per scale.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub valid: [bool; N_SCALES],
}

impl FeatureVector {
    pub fn zeros() -> Self {
        Self {
            values: vec![0.0; FEATURE_LEN],
            valid: [false; N_SCALES],
        }
    }

    pub fn t_em(&self, scale: usize) -> f64 {
        self.values[t_em_index(scale)]
    }

    pub fn t_sl(&self, scale: usize, descriptor: usize, distance: usize) -> f64 {
        self.values[t_sl_index(scale, descriptor, distance)]
    }

    pub fn em_spa(&self) -> f64 {
        self.values[FEATURE_LEN - 1]
    }
}

pub fn t_em_index(scale: usize) -> usize {
    scale * PER_SCALE
}

pub fn t_sl_index(scale: usize, descriptor: usize, distance: usize) -> usize {
    scale * PER_SCALE + 1 + descriptor * N_DISTANCES + distance
}

/// Lay out per-scale measurements and the spatial score. Missing
/// measurements are filled with 0.
pub fn assemble_features(scales: &[ScaleFeatures], em_spa: f64) -> Result<FeatureVector> {
    if scales.len() != N_SCALES {
        return Err(Error::ScaleCount {
            expected: N_SCALES,
            got: scales.len(),
        });
    }
    let mut fv = FeatureVector::zeros();
    for (s, sf) in scales.iter().enumerate() {
        fv.valid[s] = sf.is_valid();
        fv.values[t_em_index(s)] = sf.t_em.unwrap_or(0.0);
        if let Some(tab) = sf.t_sl {
            for (i, row) in tab.iter().enumerate() {
                for (j, v) in row.iter().enumerate() {
                    fv.values[t_sl_index(s, i, j)] = *v;
                }
            }
        }
    }
    fv.values[FEATURE_LEN - 1] = em_spa;
    Ok(fv)
}
