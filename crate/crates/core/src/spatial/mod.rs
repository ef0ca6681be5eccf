//! Spatial structure comparison: keypoint-selected patches, superpixel
//! contours and pooled elastic distances.

pub mod contour;
pub mod keypoints;
pub mod slic;

use rayon::prelude::*;

use crate::curve::{elastic_distance, Curve, ElasticParams};
use crate::error::{Error, Result};
use crate::image::Image;

pub use contour::{extract_contours, RegionContour};
pub use keypoints::{detect_keypoints, match_keypoints, DetectorConfig, Keypoint, MatchConfig};
pub use slic::{slic_segment, SuperpixelLabeling};

/// Contours with fewer points are too coarse for the SRV transform.
pub const MIN_CONTOUR_POINTS: usize = 8;
/// Fraction of the patch diagonal beyond which two centroids never match.
pub const CENTROID_GATE: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialConfig {
    pub patch_size: usize,
    pub slic_k: usize,
    pub compactness: f64,
    /// Upper bound on matched keypoints per frame, strongest first.
    pub max_pairs: usize,
    pub frame_stride: usize,
    pub detector: DetectorConfig,
    pub matcher: MatchConfig,
    pub elastic: ElasticParams,
}

impl Default for SpatialConfig {
    fn default() -> Self {
        Self {
            patch_size: 64,
            slic_k: 32,
            compactness: 10.0,
            max_pairs: 64,
            frame_stride: 1,
            detector: DetectorConfig::default(),
            matcher: MatchConfig::default(),
            elastic: ElasticParams::default(),
        }
    }
}

/// Two equal-size patches cut around a matched keypoint pair.
#[derive(Debug, Clone)]
pub struct PatchPair {
    pub ref_patch: Image,
    pub syn_patch: Image,
    pub center_ref: [f64; 2],
    pub center_syn: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct CurvePair {
    pub ref_contour: Curve,
    pub syn_contour: Curve,
    pub match_cost: f64,
}

/// One-to-one matched closed contours.
#[derive(Debug, Clone, Default)]
pub struct CurvePairSet {
    pub pairs: Vec<CurvePair>,
    /// Label indices of each pair, in the same order as `pairs`.
    pub labels: Vec<(u32, u32)>,
}

impl CurvePairSet {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Greedy one-to-one contour matching on centroid distance plus a relative
/// area penalty.
pub fn match_superpixels(reference: &SuperpixelLabeling, synthesized: &SuperpixelLabeling) -> Result<CurvePairSet> {
    if reference.width() != synthesized.width() || reference.height() != synthesized.height() {
        return Err(Error::FrameSizeMismatch);
    }
    let diag = ((reference.width().pow(2) + reference.height().pow(2)) as f64).sqrt();

    let usable = |lab: &SuperpixelLabeling| {
        let stats = lab.region_stats();
        extract_contours(lab)
            .into_iter()
            .filter(|c| c.points.len() >= MIN_CONTOUR_POINTS)
            .filter_map(|c| {
                let s = stats[c.label as usize];
                c.to_curve().ok().map(|curve| (c.label, s.area as f64, s.centroid, curve))
            })
            .collect::<Vec<_>>()
    };
    let rs = usable(reference);
    let ss = usable(synthesized);

    let mut cand = Vec::new();
    for (i, r) in rs.iter().enumerate() {
        for (j, s) in ss.iter().enumerate() {
            let d = ((r.2[0] - s.2[0]).powi(2) + (r.2[1] - s.2[1]).powi(2)).sqrt();
            if d > CENTROID_GATE * diag {
                continue;
            }
            let cost = d + (r.1 - s.1).abs() / r.1.max(s.1) * diag;
            cand.push((cost, i, j));
        }
    }
    cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut used_r = vec![false; rs.len()];
    let mut used_s = vec![false; ss.len()];
    let mut out = CurvePairSet::default();
    for (cost, i, j) in cand {
        if used_r[i] || used_s[j] {
            continue;
        }
        used_r[i] = true;
        used_s[j] = true;
        out.pairs.push(CurvePair {
            ref_contour: rs[i].3.clone(),
            syn_contour: ss[j].3.clone(),
            match_cost: cost,
        });
        out.labels.push((rs[i].0, ss[j].0));
    }
    Ok(out)
}

/// Cut a `size`x`size` patch around `center`, shifted to stay inside the
/// frame.
pub fn cut_patch(frame: &Image, center: [f64; 2], size: usize) -> Image {
    let size_x = size.min(frame.width());
    let size_y = size.min(frame.height());
    let x0 = origin(center[0], size_x, frame.width());
    let y0 = origin(center[1], size_y, frame.height());
    frame.crop(x0, y0, size_x, size_y)
}

fn origin(c: f64, size: usize, extent: usize) -> usize {
    let o = c.round() as isize - (size / 2) as isize;
    o.clamp(0, (extent - size) as isize) as usize
}

/// Matched patch pairs for one frame pair, strongest reference keypoints
/// first.
pub fn patch_pairs(reference: &Image, synthesized: &Image, cfg: &SpatialConfig) -> Result<Vec<PatchPair>> {
    if !reference.same_size(synthesized) {
        return Err(Error::FrameSizeMismatch);
    }
    let kr = detect_keypoints(reference, &cfg.detector)?;
    let ks = detect_keypoints(synthesized, &cfg.detector)?;
    let mut m = match_keypoints(&kr, &ks, &cfg.matcher);
    // Detection output is already ordered by response, so sorting on the
    // reference index keeps the strongest matches.
    m.sort_unstable();
    m.truncate(cfg.max_pairs);
    Ok(m
        .into_iter()
        .map(|(i, j)| PatchPair {
            ref_patch: cut_patch(reference, kr[i].position, cfg.patch_size),
            syn_patch: cut_patch(synthesized, ks[j].position, cfg.patch_size),
            center_ref: kr[i].position,
            center_syn: ks[j].position,
        })
        .collect())
}

/// Sum of elastic distances over matched contours of one patch pair.
pub fn em_spa_patch(pair: &PatchPair, cfg: &SpatialConfig) -> Result<f64> {
    let lr = slic_segment(&pair.ref_patch, cfg.slic_k, cfg.compactness)?;
    let ls = slic_segment(&pair.syn_patch, cfg.slic_k, cfg.compactness)?;
    let set = match_superpixels(&lr, &ls)?;
    let mut total = 0.0;
    for p in &set.pairs {
        // Contours that fold back on themselves can have stationary SRV
        // samples; such pairs carry no usable shape signal.
        match elastic_distance(&p.ref_contour, &p.syn_contour, &cfg.elastic) {
            Ok(d) => total += d,
            Err(Error::StationarySegment | Error::DegenerateCurve) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(total)
}

/// Pooled spatial elastic dissimilarity of one frame pair.
pub fn em_spa_frame(reference: &Image, synthesized: &Image, cfg: &SpatialConfig) -> Result<f64> {
    if !reference.same_size(synthesized) {
        return Err(Error::FrameSizeMismatch);
    }
    let pairs = patch_pairs(reference, synthesized, cfg)?;
    let mut total = 0.0;
    for p in &pairs {
        total += em_spa_patch(p, cfg)?;
    }
    Ok(total)
}

/// Frame indices visited with the given stride.
pub fn stride_frames(n: usize, stride: usize) -> Vec<usize> {
    (0..n).step_by(stride.max(1)).collect()
}

/// Mean per-frame score over the strided frames. Frames are scored in
/// parallel and summed in frame order.
pub fn em_spa_sequence(reference: &[Image], synthesized: &[Image], cfg: &SpatialConfig) -> Result<f64> {
    if reference.len() != synthesized.len() {
        return Err(Error::SequenceLengthMismatch);
    }
    if cfg.frame_stride == 0 {
        return Err(Error::InvalidParams("frame_stride must be positive".into()));
    }
    let idx = stride_frames(reference.len(), cfg.frame_stride);
    if idx.is_empty() {
        return Ok(0.0);
    }
    let scores = idx
        .par_iter()
        .map(|&f| em_spa_frame(&reference[f], &synthesized[f], cfg))
        .collect::<Result<Vec<f64>>>()?;
    Ok(mean_ordered(&scores))
}

pub(crate) fn mean_ordered(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
