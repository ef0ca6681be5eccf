//! Reference/synthesized feature extraction: multi-scale trajectories and
//! descriptors, temporal dissimilarities and the spatial score.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};

use rayon::prelude::*;

use crate::descriptors::{describe, FlowDerivatives, FrameGradients, TrajectoryDescriptors};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::io::cache::{Digest, FeatureCache};
use crate::io::config::ExtractConfig;
use crate::io::manifest::Manifest;
use crate::io::video::{ingest, VideoSource};
use crate::motion::{
    build_pyramid, match_trajectories, tracker::keep_trajectory, FlowEstimator, FlowRequest, Stream, Tracker,
    Trajectory,
};
use crate::spatial::em_spa_sequence;
use crate::temporal::{assemble_features, t_em_scale, t_sl_table, FeatureVector, ScaleFeatures, N_SCALES};

/// Pruned trajectories of one scale with their descriptors, index-aligned.
#[derive(Debug, Clone, Default)]
pub struct ScaleTracks {
    pub trajectories: Vec<Trajectory>,
    pub descriptors: Vec<TrajectoryDescriptors>,
}

struct ScaleState {
    tracker: Tracker,
    grads: VecDeque<(usize, FrameGradients)>,
    flows: VecDeque<(usize, FlowDerivatives)>,
    out: ScaleTracks,
}

impl ScaleState {
    fn step(
        &mut self,
        scale: usize,
        t: usize,
        cur: &Image,
        next: &Image,
        req: (&str, Stream),
        cfg: &ExtractConfig,
        est: &dyn FlowEstimator,
    ) -> Result<()> {
        let len = cfg.track.len;
        self.tracker.seed(cur, t);
        let flow = est.estimate(
            cur,
            next,
            &FlowRequest {
                video_id: req.0,
                stream: req.1,
                frame: t,
                scale,
            },
        )?;
        if flow.width() != cur.width() || flow.height() != cur.height() {
            return Err(Error::FrameSizeMismatch);
        }
        self.flows.push_back((t, FlowDerivatives::new(flow)));
        self.grads.push_back((t + 1, FrameGradients::new(next)));
        while self.flows.len() > len.saturating_sub(1).max(1) {
            self.flows.pop_front();
        }
        while self.grads.len() > len {
            self.grads.pop_front();
        }
        let done = self.tracker.advance(&self.flows.back().expect("just pushed").1.flow);
        for traj in done.into_iter().filter(|tr| keep_trajectory(tr, &cfg.track)) {
            let frames: Vec<&FrameGradients> =
                self.grads.iter().filter(|(i, _)| *i >= traj.start_frame).map(|(_, g)| g).collect();
            let flows: Vec<&FlowDerivatives> =
                self.flows.iter().filter(|(i, _)| *i >= traj.start_frame).map(|(_, f)| f).collect();
            let d = describe(&traj, &frames, &flows, len, &cfg.descriptor)?;
            self.out.trajectories.push(traj);
            self.out.descriptors.push(d);
        }
        Ok(())
    }
}

/// Track one video at every scale. Frames are visited once; each scale keeps
/// only the gradients and flows a live trajectory can still need.
pub fn track_video(
    video: &VideoSource,
    video_id: &str,
    stream: Stream,
    cfg: &ExtractConfig,
    est: &dyn FlowEstimator,
) -> Result<Vec<ScaleTracks>> {
    let Some(first) = video.frames.first() else {
        return Ok(Vec::new());
    };
    let mut prev = build_pyramid(first, cfg.scales, cfg.scale_factor)?.into_levels();
    let mut states: Vec<ScaleState> = prev
        .iter()
        .enumerate()
        .map(|(s, level)| ScaleState {
            tracker: Tracker::new(s, cfg.track),
            grads: VecDeque::from([(0, FrameGradients::new(level))]),
            flows: VecDeque::new(),
            out: ScaleTracks::default(),
        })
        .collect();
    for t in 0..video.frames.len() - 1 {
        let next = build_pyramid(&video.frames[t + 1], cfg.scales, cfg.scale_factor)?.into_levels();
        states
            .par_iter_mut()
            .enumerate()
            .try_for_each(|(s, st)| st.step(s, t, &prev[s], &next[s], (video_id, stream), cfg, est))?;
        prev = next;
    }
    Ok(states.into_iter().map(|s| s.out).collect())
}

/// Per-scale T_EM and T_SL from matched trajectories. Scales missing from
/// either side stay invalid.
pub fn temporal_features(
    reference: &[ScaleTracks],
    synthesized: &[ScaleTracks],
    cfg: &ExtractConfig,
) -> Result<Vec<ScaleFeatures>> {
    let elastic = cfg.trajectory_elastic();
    let radius = cfg.track.match_radius * cfg.track.step as f64;
    let mut out = vec![ScaleFeatures::default(); N_SCALES];
    for (s, (r, y)) in reference.iter().zip(synthesized).enumerate().take(N_SCALES) {
        let m = match_trajectories(&r.trajectories, &y.trajectories, radius);
        let tp: Vec<_> = m.iter().map(|p| (&r.trajectories[p.reference], &y.trajectories[p.synthesized])).collect();
        let dp: Vec<_> = m.iter().map(|p| (&r.descriptors[p.reference], &y.descriptors[p.synthesized])).collect();
        out[s] = ScaleFeatures {
            t_em: t_em_scale(&tp, &elastic)?,
            t_sl: t_sl_table(&dp, cfg.minkowski_p)?,
        };
    }
    Ok(out)
}

/// The 120-entry feature vector of one reference/synthesized pair.
pub fn extract_features(
    video_id: &str,
    reference: &VideoSource,
    synthesized: &VideoSource,
    cfg: &ExtractConfig,
    est: &dyn FlowEstimator,
) -> Result<FeatureVector> {
    if reference.width != synthesized.width || reference.height != synthesized.height {
        return Err(Error::FrameSizeMismatch);
    }
    if reference.frame_count() != synthesized.frame_count() {
        return Err(Error::SequenceLengthMismatch);
    }
    let (temporal, spatial) = rayon::join(
        || -> Result<Vec<ScaleFeatures>> {
            let (r, s) = rayon::join(
                || track_video(reference, video_id, Stream::Reference, cfg, est),
                || track_video(synthesized, video_id, Stream::Synthesized, cfg, est),
            );
            temporal_features(&r?, &s?, cfg)
        },
        || em_spa_sequence(&reference.frames, &synthesized.frames, &cfg.spatial),
    );
    assemble_features(&temporal?, spatial?)
}

/// Feature extraction bound to one configuration and flow source, with a
/// count of pairs actually computed.
pub struct Extractor {
    pub cfg: ExtractConfig,
    pub flow: Box<dyn FlowEstimator>,
    digest: Digest,
    computed: AtomicUsize,
}

impl Extractor {
    pub fn new(cfg: ExtractConfig, flow: Box<dyn FlowEstimator>) -> Self {
        let digest = cfg.digest();
        Self {
            cfg,
            flow,
            digest,
            computed: AtomicUsize::new(0),
        }
    }

    pub fn digest(&self) -> Digest {
        self.digest
    }

    /// Pairs extracted (not served from a cache) so far.
    pub fn computed(&self) -> usize {
        self.computed.load(Ordering::Relaxed)
    }

    pub fn extract(&self, video_id: &str, reference: &VideoSource, synthesized: &VideoSource) -> Result<FeatureVector> {
        self.computed.fetch_add(1, Ordering::Relaxed);
        extract_features(video_id, reference, synthesized, &self.cfg, self.flow.as_ref())
    }

    /// Cached features when the digest matches, else extract and store.
    pub fn extract_cached(
        &self,
        cache: &mut FeatureCache,
        video_id: &str,
        reference: &VideoSource,
        synthesized: &VideoSource,
    ) -> Result<FeatureVector> {
        if let Some(fv) = cache.get(video_id, &self.digest) {
            return Ok(fv.clone());
        }
        let fv = self.extract(video_id, reference, synthesized)?;
        cache.insert(video_id, self.digest, fv.clone());
        Ok(fv)
    }

    /// Fill `cache` for every manifest entry, `workers` videos at a time
    /// (0 = one per core). Results are inserted by the calling thread.
    pub fn extract_manifest(&self, manifest: &Manifest, cache: &mut FeatureCache, workers: usize) -> Result<()> {
        let todo: Vec<_> = manifest
            .entries
            .iter()
            .filter(|e| cache.get(&e.video_id, &self.digest).is_none())
            .collect();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .map_err(|e| Error::InvalidParams(e.to_string()))?;
        let results: Vec<Result<FeatureVector>> = pool.install(|| {
            todo.par_iter()
                .map(|e| {
                    let r = ingest(&e.ref_path, None)?;
                    let s = ingest(&e.syn_path, None)?;
                    self.extract(&e.video_id, &r, &s)
                })
                .collect()
        });
        for (e, r) in todo.iter().zip(results) {
            cache.insert(&e.video_id, self.digest, r?);
        }
        Ok(())
    }
}
