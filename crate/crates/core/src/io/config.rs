//! Line-based `key = value` configuration.
//!
//! Blank lines and `#` comments are ignored. Every key has a typed parser and
//! unknown keys are rejected. [`Config::render`] writes the full file with
//! defaults and a note on where each value comes from.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest as _, Sha256};

use crate::curve::ElasticParams;
use crate::descriptors::DescriptorConfig;
use crate::error::{Error, Result};
use crate::motion::{FlowConfig, TrackConfig, DEFAULT_FACTOR, DEFAULT_LEVELS};
use crate::regression::{CvConfig, FoldModel, SvrParams, TTest};
use crate::spatial::SpatialConfig;
use crate::temporal::N_SCALES;

use super::cache::Digest;

/// Feature-extraction settings. Everything here feeds the cache digest.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractConfig {
    pub scales: usize,
    pub scale_factor: f64,
    pub track: TrackConfig,
    pub flow: FlowConfig,
    pub descriptor: DescriptorConfig,
    pub minkowski_p: f64,
    pub normalize_trajectory_length: bool,
    pub spatial: SpatialConfig,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            scales: DEFAULT_LEVELS,
            scale_factor: DEFAULT_FACTOR,
            track: TrackConfig::default(),
            flow: FlowConfig::default(),
            descriptor: DescriptorConfig::default(),
            minkowski_p: 3.0,
            normalize_trajectory_length: true,
            spatial: SpatialConfig::default(),
        }
    }
}

impl ExtractConfig {
    /// Elastic parameters for trajectories, which are open curves.
    pub fn trajectory_elastic(&self) -> ElasticParams {
        ElasticParams {
            cyclic_align: false,
            normalize_length: self.normalize_trajectory_length,
            ..self.spatial.elastic
        }
    }

    pub fn digest(&self) -> Digest {
        let mut text = String::new();
        let cfg = Config {
            extract: self.clone(),
            eval: EvalConfig::default(),
        };
        for k in KEYS.iter().filter(|k| k.extract) {
            let _ = writeln!(text, "{} = {}", k.name, cfg.get(k.name).expect("known key"));
        }
        Sha256::digest(text.as_bytes()).into()
    }
}

/// Training and evaluation settings.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub svr: SvrParams,
    pub grid_search: bool,
    pub folds: usize,
    pub train_frac: f64,
    pub alpha: f64,
    pub t_test: TTest,
    /// Parallel extraction jobs; 0 uses every core.
    pub workers: usize,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            svr: SvrParams::default(),
            grid_search: false,
            folds: 1000,
            train_frac: 0.8,
            alpha: 0.05,
            t_test: TTest::Welch,
            workers: 0,
        }
    }
}

impl EvalConfig {
    pub fn cv(&self, seed: u64) -> CvConfig {
        CvConfig {
            folds: self.folds,
            train_frac: self.train_frac,
            seed,
            model: FoldModel::Svr {
                params: self.svr,
                grid_search: self.grid_search,
            },
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Config {
    pub extract: ExtractConfig,
    pub eval: EvalConfig,
}

struct Key {
    name: &'static str,
    extract: bool,
    note: &'static str,
}

const fn key(name: &'static str, extract: bool, note: &'static str) -> Key {
    Key { name, extract, note }
}

const PAPER: &str = "paper";
const CONV: &str = "convention";

const KEYS: &[Key] = &[
    key("scales", true, PAPER),
    key("scale_factor", true, PAPER),
    key("trajectory_length", true, PAPER),
    key("sampling_step", true, "convention (dense-trajectory default)"),
    key("structure_thresh", true, "convention (dense-trajectory default)"),
    key("static_thresh", true, CONV),
    key("erratic_ratio", true, "convention (dense-trajectory default)"),
    key("match_radius", true, "convention, in units of sampling_step"),
    key("max_flow", true, CONV),
    key("flow_levels", true, CONV),
    key("flow_iterations", true, CONV),
    key("flow_window", true, CONV),
    key("flow_regularization", true, CONV),
    key("volume", true, "convention (dense-trajectory default)"),
    key("cells_xy", true, "convention (dense-trajectory default)"),
    key("cells_t", true, "convention (dense-trajectory default)"),
    key("bins", true, "convention (dense-trajectory default)"),
    key("zero_flow", true, CONV),
    key("minkowski_p", true, CONV),
    key("normalize_trajectory_length", true, CONV),
    key("elastic_a2", true, "convention (flat SRV metric)"),
    key("elastic_b2", true, "convention (flat SRV metric)"),
    key("elastic_samples", true, CONV),
    key("patch_size", true, CONV),
    key("slic_k", true, CONV),
    key("compactness", true, CONV),
    key("max_pairs", true, CONV),
    key("frame_stride", true, CONV),
    key("keypoint_octaves", true, CONV),
    key("keypoint_threshold", true, CONV),
    key("ratio", true, CONV),
    key("max_disparity", true, CONV),
    key("svr_c", false, CONV),
    key("svr_epsilon", false, CONV),
    key("grid_search", false, CONV),
    key("folds", false, PAPER),
    key("train_frac", false, PAPER),
    key("alpha", false, PAPER),
    key("t_test", false, "convention (welch or pooled)"),
    key("workers", false, "convention, 0 = all cores"),
];

fn parse<T: std::str::FromStr>(v: &str) -> std::result::Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse {v:?}"))
}

fn positive(v: &str) -> std::result::Result<usize, String> {
    match parse::<usize>(v)? {
        0 => Err("must be positive".into()),
        n => Ok(n),
    }
}

fn finite(v: &str) -> std::result::Result<f64, String> {
    let x = parse::<f64>(v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err("must be finite".into())
    }
}

impl Config {
    pub fn load(path: &Path) -> Result<Config> {
        if !path.is_file() {
            return Err(Error::MissingPath(path.to_path_buf()));
        }
        Config::parse(&std::fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Config> {
        let mut cfg = Config::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Config { line: i + 1, msg };
            let (k, v) = line.split_once('=').ok_or_else(|| err("expected `key = value`".into()))?;
            cfg.set(k.trim(), v.trim()).map_err(err)?;
        }
        Ok(cfg)
    }

    pub fn set(&mut self, key: &str, v: &str) -> std::result::Result<(), String> {
        let x = &mut self.extract;
        let e = &mut self.eval;
        match key {
            "scales" => {
                x.scales = positive(v)?;
                if x.scales > N_SCALES {
                    return Err(format!("at most {N_SCALES} scales fit the feature layout"));
                }
            }
            "scale_factor" => {
                x.scale_factor = finite(v)?;
                if !(x.scale_factor > 0.0 && x.scale_factor < 1.0) {
                    return Err("must lie in (0, 1)".into());
                }
            }
            "trajectory_length" => {
                x.track.len = parse(v)?;
                if x.track.len < 2 {
                    return Err("must be at least 2".into());
                }
            }
            "sampling_step" => x.track.step = positive(v)?,
            "structure_thresh" => x.track.structure_thresh = finite(v)?,
            "static_thresh" => x.track.static_thresh = finite(v)?,
            "erratic_ratio" => x.track.erratic_ratio = finite(v)?,
            "match_radius" => x.track.match_radius = finite(v)?,
            "max_flow" => {
                x.track.max_flow = finite(v)?;
                x.flow.max_flow = x.track.max_flow as f32;
            }
            "flow_levels" => x.flow.levels = positive(v)?,
            "flow_iterations" => x.flow.iterations = positive(v)?,
            "flow_window" => x.flow.window = positive(v)?,
            "flow_regularization" => x.flow.regularization = finite(v)?,
            "volume" => x.descriptor.volume = positive(v)?,
            "cells_xy" => x.descriptor.cells_xy = positive(v)?,
            "cells_t" => x.descriptor.cells_t = positive(v)?,
            "bins" => x.descriptor.bins = positive(v)?,
            "zero_flow" => x.descriptor.zero_flow = finite(v)?,
            "minkowski_p" => {
                x.minkowski_p = finite(v)?;
                if x.minkowski_p < 1.0 {
                    return Err("must be at least 1".into());
                }
            }
            "normalize_trajectory_length" => x.normalize_trajectory_length = parse(v)?,
            "elastic_a2" => x.spatial.elastic.a2 = finite(v)?,
            "elastic_b2" => x.spatial.elastic.b2 = finite(v)?,
            "elastic_samples" => x.spatial.elastic.n_samples = positive(v)?,
            "patch_size" => x.spatial.patch_size = positive(v)?,
            "slic_k" => x.spatial.slic_k = positive(v)?,
            "compactness" => x.spatial.compactness = finite(v)?,
            "max_pairs" => x.spatial.max_pairs = parse(v)?,
            "frame_stride" => x.spatial.frame_stride = positive(v)?,
            "keypoint_octaves" => x.spatial.detector.octaves = positive(v)?,
            "keypoint_threshold" => x.spatial.detector.rel_threshold = finite(v)?,
            "ratio" => x.spatial.matcher.ratio = finite(v)?,
            "max_disparity" => x.spatial.matcher.max_disparity = finite(v)?,
            "svr_c" => e.svr.c = finite(v)?,
            "svr_epsilon" => e.svr.epsilon = finite(v)?,
            "grid_search" => e.grid_search = parse(v)?,
            "folds" => e.folds = positive(v)?,
            "train_frac" => {
                e.train_frac = finite(v)?;
                if !(e.train_frac > 0.0 && e.train_frac < 1.0) {
                    return Err("must lie in (0, 1)".into());
                }
            }
            "alpha" => e.alpha = finite(v)?,
            "t_test" => {
                e.t_test = match v {
                    "welch" => TTest::Welch,
                    "pooled" => TTest::Pooled,
                    _ => return Err(format!("unknown t-test {v:?}")),
                }
            }
            "workers" => e.workers = parse(v)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let x = &self.extract;
        let e = &self.eval;
        Some(match key {
            "scales" => x.scales.to_string(),
            "scale_factor" => x.scale_factor.to_string(),
            "trajectory_length" => x.track.len.to_string(),
            "sampling_step" => x.track.step.to_string(),
            "structure_thresh" => x.track.structure_thresh.to_string(),
            "static_thresh" => x.track.static_thresh.to_string(),
            "erratic_ratio" => x.track.erratic_ratio.to_string(),
            "match_radius" => x.track.match_radius.to_string(),
            "max_flow" => x.track.max_flow.to_string(),
            "flow_levels" => x.flow.levels.to_string(),
            "flow_iterations" => x.flow.iterations.to_string(),
            "flow_window" => x.flow.window.to_string(),
            "flow_regularization" => x.flow.regularization.to_string(),
            "volume" => x.descriptor.volume.to_string(),
            "cells_xy" => x.descriptor.cells_xy.to_string(),
            "cells_t" => x.descriptor.cells_t.to_string(),
            "bins" => x.descriptor.bins.to_string(),
            "zero_flow" => x.descriptor.zero_flow.to_string(),
            "minkowski_p" => x.minkowski_p.to_string(),
            "normalize_trajectory_length" => x.normalize_trajectory_length.to_string(),
            "elastic_a2" => x.spatial.elastic.a2.to_string(),
            "elastic_b2" => x.spatial.elastic.b2.to_string(),
            "elastic_samples" => x.spatial.elastic.n_samples.to_string(),
            "patch_size" => x.spatial.patch_size.to_string(),
            "slic_k" => x.spatial.slic_k.to_string(),
            "compactness" => x.spatial.compactness.to_string(),
            "max_pairs" => x.spatial.max_pairs.to_string(),
            "frame_stride" => x.spatial.frame_stride.to_string(),
            "keypoint_octaves" => x.spatial.detector.octaves.to_string(),
            "keypoint_threshold" => x.spatial.detector.rel_threshold.to_string(),
            "ratio" => x.spatial.matcher.ratio.to_string(),
            "max_disparity" => x.spatial.matcher.max_disparity.to_string(),
            "svr_c" => e.svr.c.to_string(),
            "svr_epsilon" => e.svr.epsilon.to_string(),
            "grid_search" => e.grid_search.to_string(),
            "folds" => e.folds.to_string(),
            "train_frac" => e.train_frac.to_string(),
            "alpha" => e.alpha.to_string(),
            "t_test" => match e.t_test {
                TTest::Welch => "welch".into(),
                TTest::Pooled => "pooled".into(),
            },
            "workers" => e.workers.to_string(),
            _ => return None,
        })
    }

    /// Full configuration text, one commented line per key.
    pub fn render(&self) -> String {
        let mut out = String::from("# extraction (changes invalidate cached features)\n");
        for (i, k) in KEYS.iter().enumerate() {
            if i > 0 && KEYS[i - 1].extract && !k.extract {
                out.push_str("\n# training and evaluation\n");
            }
            let _ = writeln!(out, "{} = {}  # {}", k.name, self.get(k.name).expect("known key"), k.note);
        }
        out
    }

    pub fn key_names() -> impl Iterator<Item = &'static str> {
        KEYS.iter().map(|k| k.name)
    }
}
