use std::collections::HashMap;

use crate::curve::Point;
use crate::image::Image;

use super::flow::FlowField;

pub const TRAJECTORY_LEN: usize = 15;

/// Tracking and pruning parameters shared by every scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackConfig {
    /// Sampling step `W`.
    pub step: usize,
    pub structure_thresh: f64,
    pub len: usize,
    pub max_flow: f64,
    pub static_thresh: f64,
    /// Largest allowed single step as a fraction of a 32-pixel neighbourhood
    /// diagonal.
    pub erratic_ratio: f64,
    /// Matching radius in units of `W`.
    pub match_radius: f64,
}

impl Default for TrackConfig {
    fn default() -> Self {
        Self {
            step: 5,
            structure_thresh: 0.001,
            len: TRAJECTORY_LEN,
            max_flow: 32.0,
            static_thresh: 0.5,
            erratic_ratio: 0.7,
            match_radius: 2.0,
        }
    }
}

impl TrackConfig {
    pub fn erratic_limit(&self) -> f64 {
        self.erratic_ratio * 32.0 * std::f64::consts::SQRT_2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub scale: usize,
    pub start_frame: usize,
    pub points: Vec<Point>,
}

impl Trajectory {
    pub fn mean_position(&self) -> Point {
        let n = self.points.len() as f64;
        let (sx, sy) = self.points.iter().fold((0.0, 0.0), |a, p| (a.0 + p[0], a.1 + p[1]));
        [sx / n, sy / n]
    }

    /// Larger of the per-axis standard deviations of the positions.
    pub fn spread(&self) -> f64 {
        let m = self.mean_position();
        let n = self.points.len() as f64;
        let (vx, vy) = self
            .points
            .iter()
            .fold((0.0, 0.0), |a, p| (a.0 + (p[0] - m[0]).powi(2), a.1 + (p[1] - m[1]).powi(2)));
        (vx / n).sqrt().max((vy / n).sqrt())
    }

    pub fn max_step(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| ((w[1][0] - w[0][0]).powi(2) + (w[1][1] - w[0][1]).powi(2)).sqrt())
            .fold(0.0, f64::max)
    }
}

/// Smaller eigenvalue of the 3x3-summed structure tensor at every pixel.
pub fn min_eigen_map(frame: &Image) -> Vec<f64> {
    let (w, h) = (frame.width(), frame.height());
    let (gx, gy) = frame.gradients();
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for dy in -1..=1isize {
                for dx in -1..=1isize {
                    let ix = f64::from(gx.get_clamped(x as isize + dx, y as isize + dy));
                    let iy = f64::from(gy.get_clamped(x as isize + dx, y as isize + dy));
                    a += ix * ix;
                    b += ix * iy;
                    c += iy * iy;
                }
            }
            let half_tr = 0.5 * (a + c);
            let disc = (0.25 * (a - c).powi(2) + b * b).sqrt();
            out[y * w + x] = (half_tr - disc).max(0.0);
        }
    }
    out
}

/// Grid positions `W/2 + i*W` in both axes.
pub fn grid_positions(width: usize, height: usize, step: usize) -> Vec<(usize, usize)> {
    let off = step / 2;
    let mut out = Vec::new();
    for y in (off..height).step_by(step.max(1)) {
        for x in (off..width).step_by(step.max(1)) {
            out.push((x, y));
        }
    }
    out
}

/// Grid points whose structure tensor has enough corner strength.
pub fn sample_points(frame: &Image, step: usize, structure_thresh: f64) -> Vec<Point> {
    let eig = min_eigen_map(frame);
    let max = eig.iter().copied().fold(0.0, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    let t = structure_thresh * max;
    grid_positions(frame.width(), frame.height(), step)
        .into_iter()
        .filter(|&(x, y)| eig[y * frame.width() + x] > t)
        .map(|(x, y)| [x as f64, y as f64])
        .collect()
}

#[derive(Debug, Clone)]
struct Active {
    start_frame: usize,
    points: Vec<Point>,
}

/// Single-scale tracker. Call [`Tracker::seed`] on each frame, then
/// [`Tracker::advance`] with the flow to the next frame.
#[derive(Debug, Clone)]
pub struct Tracker {
    scale: usize,
    cfg: TrackConfig,
    active: Vec<Active>,
}

impl Tracker {
    pub fn new(scale: usize, cfg: TrackConfig) -> Self {
        Self {
            scale,
            cfg,
            active: Vec::new(),
        }
    }

    pub fn active_count(&self) -> usize {
        self.active.len()
    }

    /// Start trajectories at structured grid points not already covered by an
    /// active trajectory head.
    pub fn seed(&mut self, frame: &Image, frame_index: usize) {
        let step = self.cfg.step.max(1);
        let radius = step as f64 / 2.0;
        let cell = |p: Point| ((p[0] / step as f64).floor() as i64, (p[1] / step as f64).floor() as i64);
        let mut buckets: HashMap<(i64, i64), Vec<Point>> = HashMap::new();
        for a in &self.active {
            let head = *a.points.last().unwrap();
            buckets.entry(cell(head)).or_default().push(head);
        }
        for p in sample_points(frame, step, self.cfg.structure_thresh) {
            let (cx, cy) = cell(p);
            let covered = (-1..=1).any(|dy| {
                (-1..=1).any(|dx| {
                    buckets.get(&(cx + dx, cy + dy)).is_some_and(|v| {
                        v.iter().any(|q| ((q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2)).sqrt() < radius)
                    })
                })
            });
            if !covered {
                self.active.push(Active {
                    start_frame: frame_index,
                    points: vec![p],
                });
            }
        }
    }

    /// Move every head along the median flow. Returns the trajectories that
    /// reached full length with this step.
    pub fn advance(&mut self, flow: &FlowField) -> Vec<Trajectory> {
        let (w, h) = (flow.width() as f64, flow.height() as f64);
        let mut done = Vec::new();
        let mut keep = Vec::with_capacity(self.active.len());
        for mut a in self.active.drain(..) {
            let p = *a.points.last().unwrap();
            let xi = (p[0].round().max(0.0) as usize).min(flow.width() - 1);
            let yi = (p[1].round().max(0.0) as usize).min(flow.height() - 1);
            let (u, v) = flow.median_at(xi, yi);
            let (u, v) = (
                f64::from(u).clamp(-self.cfg.max_flow, self.cfg.max_flow),
                f64::from(v).clamp(-self.cfg.max_flow, self.cfg.max_flow),
            );
            let q = [p[0] + u, p[1] + v];
            if q[0] < 0.0 || q[1] < 0.0 || q[0] > w - 1.0 || q[1] > h - 1.0 {
                continue;
            }
            a.points.push(q);
            if a.points.len() >= self.cfg.len {
                done.push(Trajectory {
                    scale: self.scale,
                    start_frame: a.start_frame,
                    points: a.points,
                });
            } else {
                keep.push(a);
            }
        }
        self.active = keep;
        done
    }
}

/// Whether a completed trajectory survives the static and erratic filters.
pub fn keep_trajectory(t: &Trajectory, cfg: &TrackConfig) -> bool {
    t.spread() >= cfg.static_thresh && t.max_step() <= cfg.erratic_limit()
}

pub fn prune(trajectories: Vec<Trajectory>, cfg: &TrackConfig) -> Vec<Trajectory> {
    trajectories.into_iter().filter(|t| keep_trajectory(t, cfg)).collect()
}

/// One matched pair: indices into the reference and synthesized sets and the
/// mean-position distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryMatch {
    pub reference: usize,
    pub synthesized: usize,
    pub distance: f64,
}

/// Greedy nearest matching on mean positions among trajectories that share a
/// start frame.
pub fn match_trajectories(reference: &[Trajectory], synthesized: &[Trajectory], radius: f64) -> Vec<TrajectoryMatch> {
    let mut by_start: HashMap<usize, Vec<usize>> = HashMap::new();
    for (j, t) in synthesized.iter().enumerate() {
        by_start.entry(t.start_frame).or_default().push(j);
    }
    let syn_means: Vec<Point> = synthesized.iter().map(Trajectory::mean_position).collect();
    let mut cand = Vec::new();
    for (i, t) in reference.iter().enumerate() {
        let Some(js) = by_start.get(&t.start_frame) else {
            continue;
        };
        let m = t.mean_position();
        for &j in js {
            let d = ((m[0] - syn_means[j][0]).powi(2) + (m[1] - syn_means[j][1]).powi(2)).sqrt();
            if d <= radius {
                cand.push(TrajectoryMatch {
                    reference: i,
                    synthesized: j,
                    distance: d,
                });
            }
        }
    }
    cand.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.reference.cmp(&b.reference))
            .then(a.synthesized.cmp(&b.synthesized))
    });
    let mut used_r = vec![false; reference.len()];
    let mut used_s = vec![false; synthesized.len()];
    let mut out = Vec::new();
    for c in cand {
        if !used_r[c.reference] && !used_s[c.synthesized] {
            used_r[c.reference] = true;
            used_s[c.synthesized] = true;
            out.push(c);
        }
    }
    out
}
