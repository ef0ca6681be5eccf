//! HOG / HOF / MBH histograms in a volume aligned with a trajectory.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::motion::{FlowField, Trajectory};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescriptorConfig {
    /// Side of the square cross-section in pixels.
    pub volume: usize,
    pub cells_xy: usize,
    pub cells_t: usize,
    pub bins: usize,
    /// Flow magnitudes below this go to the HOF zero bin.
    pub zero_flow: f64,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        Self {
            volume: 32,
            cells_xy: 2,
            cells_t: 3,
            bins: 8,
            zero_flow: 0.4,
        }
    }
}

impl DescriptorConfig {
    pub fn cells(&self) -> usize {
        self.cells_xy * self.cells_xy * self.cells_t
    }

    pub fn hog_len(&self) -> usize {
        self.cells() * self.bins
    }

    pub fn hof_len(&self) -> usize {
        self.cells() * (self.bins + 1)
    }
}

/// Magnitude and angle in [0, 2π) of a 2-D vector field, per pixel.
#[derive(Debug, Clone)]
pub struct PolarPlane {
    width: usize,
    height: usize,
    mag: Vec<f64>,
    angle: Vec<f64>,
}

impl PolarPlane {
    pub fn new(dx: &Image, dy: &Image) -> Self {
        let (mag, angle) = dx
            .data()
            .iter()
            .zip(dy.data())
            .map(|(&a, &b)| {
                let (a, b) = (f64::from(a), f64::from(b));
                ((a * a + b * b).sqrt(), b.atan2(a).rem_euclid(TAU))
            })
            .unzip();
        Self {
            width: dx.width(),
            height: dx.height(),
            mag,
            angle,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.mag[i], self.angle[i])
    }
}

/// Intensity gradients of one frame.
#[derive(Debug, Clone)]
pub struct FrameGradients {
    pub gradient: PolarPlane,
}

impl FrameGradients {
    pub fn new(frame: &Image) -> Self {
        let (gx, gy) = frame.gradients();
        Self {
            gradient: PolarPlane::new(&gx, &gy),
        }
    }
}

/// A flow field with the spatial derivatives of both components.
#[derive(Debug, Clone)]
pub struct FlowDerivatives {
    pub flow: FlowField,
    pub motion: PolarPlane,
    /// Gradient of the horizontal component.
    pub du: PolarPlane,
    /// Gradient of the vertical component.
    pub dv: PolarPlane,
}

impl FlowDerivatives {
    pub fn new(flow: FlowField) -> Self {
        let (ux, uy) = flow.u.gradients();
        let (vx, vy) = flow.v.gradients();
        Self {
            motion: PolarPlane::new(&flow.u, &flow.v),
            du: PolarPlane::new(&ux, &uy),
            dv: PolarPlane::new(&vx, &vy),
            flow,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryDescriptors {
    pub hog: Vec<f64>,
    pub hof: Vec<f64>,
    pub mbhx: Vec<f64>,
    pub mbhy: Vec<f64>,
}

impl TrajectoryDescriptors {
    /// Histograms in HOG, HOF, MBHx, MBHy order.
    pub fn channels(&self) -> [&[f64]; 4] {
        [&self.hog, &self.hof, &self.mbhx, &self.mbhy]
    }
}

/// Soft-assign an angle to the two nearest of `bins` orientation bins
/// centered on multiples of 2π/bins, weighted by magnitude.
#[inline]
fn vote(hist: &mut [f64], mag: f64, angle: f64, bins: usize) {
    if mag == 0.0 {
        return;
    }
    let pos = angle / (TAU / bins as f64);
    let lo = pos.floor();
    let frac = pos - lo;
    let b0 = (lo as usize) % bins;
    hist[b0] += mag * (1.0 - frac);
    hist[(b0 + 1) % bins] += mag * frac;
}

pub fn l2_normalize(h: &mut [f64]) {
    let n = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 1e-12 {
        h.iter_mut().for_each(|v| *v /= n);
    } else {
        h.iter_mut().for_each(|v| *v = 0.0);
    }
}

/// One slice of a descriptor volume: the planes to sample and where the
/// cross-section is centered.
pub struct Slice<'a> {
    pub center: [f64; 2],
    pub plane: &'a PolarPlane,
}

fn walk_volume(
    len: usize,
    cfg: &DescriptorConfig,
    centers: impl Fn(usize) -> [f64; 2],
    dims: (usize, usize),
    mut visit: impl FnMut(usize, usize, usize, usize),
) {
    let n = cfg.volume as isize;
    for i in 0..len {
        let ct = i * cfg.cells_t / len;
        let c = centers(i);
        let x0 = c[0].round() as isize - n / 2;
        let y0 = c[1].round() as isize - n / 2;
        for oy in 0..n {
            let y = y0 + oy;
            if y < 0 || y >= dims.1 as isize {
                continue;
            }
            let cy = oy as usize * cfg.cells_xy / cfg.volume;
            for ox in 0..n {
                let x = x0 + ox;
                if x < 0 || x >= dims.0 as isize {
                    continue;
                }
                let cx = ox as usize * cfg.cells_xy / cfg.volume;
                let cell = (ct * cfg.cells_xy + cy) * cfg.cells_xy + cx;
                visit(cell, i, x as usize, y as usize);
            }
        }
    }
}

/// Orientation histogram over a volume of gradient planes. Pixels outside the
/// frame contribute nothing.
pub fn oriented_histogram(slices: &[Slice<'_>], cfg: &DescriptorConfig) -> Vec<f64> {
    let mut hist = vec![0.0; cfg.hog_len()];
    if slices.is_empty() {
        return hist;
    }
    let dims = (slices[0].plane.width(), slices[0].plane.height());
    walk_volume(slices.len(), cfg, |i| slices[i].center, dims, |cell, i, x, y| {
        let (mag, angle) = slices[i].plane.at(x, y);
        let b = cell * cfg.bins;
        vote(&mut hist[b..b + cfg.bins], mag, angle, cfg.bins);
    });
    l2_normalize(&mut hist);
    hist
}

/// Flow orientation histogram with a trailing zero-motion bin per cell.
pub fn flow_histogram(slices: &[Slice<'_>], cfg: &DescriptorConfig) -> Vec<f64> {
    let mut hist = vec![0.0; cfg.hof_len()];
    if slices.is_empty() {
        return hist;
    }
    let stride = cfg.bins + 1;
    let dims = (slices[0].plane.width(), slices[0].plane.height());
    walk_volume(slices.len(), cfg, |i| slices[i].center, dims, |cell, i, x, y| {
        let (mag, angle) = slices[i].plane.at(x, y);
        let b = cell * stride;
        if mag < cfg.zero_flow {
            hist[b + cfg.bins] += 1.0;
        } else {
            vote(&mut hist[b..b + cfg.bins], mag, angle, cfg.bins);
        }
    });
    l2_normalize(&mut hist);
    hist
}

fn slices<'a>(pts: &[[f64; 2]], planes: impl Iterator<Item = &'a PolarPlane>) -> Vec<Slice<'a>> {
    planes.zip(pts).map(|(plane, &center)| Slice { center, plane }).collect()
}

/// All four histograms for a complete trajectory. `frames[i]` and `flows[i]`
/// belong to point `i`; the last point reuses the last available flow.
pub fn describe(
    trajectory: &Trajectory,
    frames: &[&FrameGradients],
    flows: &[&FlowDerivatives],
    len: usize,
    cfg: &DescriptorConfig,
) -> Result<TrajectoryDescriptors> {
    let n = trajectory.points.len();
    if n != len || frames.len() < n || flows.is_empty() {
        return Err(Error::IncompleteTrajectory);
    }
    let flow_at = |i: usize| flows[i.min(flows.len() - 1)];
    let pts = &trajectory.points;
    let hog = oriented_histogram(&slices(pts, (0..n).map(|i| &frames[i].gradient)), cfg);
    let hof = flow_histogram(&slices(pts, (0..n).map(|i| &flow_at(i).motion)), cfg);
    let mbhx = oriented_histogram(&slices(pts, (0..n).map(|i| &flow_at(i).du)), cfg);
    let mbhy = oriented_histogram(&slices(pts, (0..n).map(|i| &flow_at(i).dv)), cfg);
    Ok(TrajectoryDescriptors { hog, hof, mbhx, mbhy })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::motion::TRAJECTORY_LEN;

    fn still(at: [f64; 2]) -> Trajectory {
        Trajectory {
            scale: 0,
            start_frame: 0,
            points: vec![at; TRAJECTORY_LEN],
        }
    }

    fn run(frame: &Image, flow: FlowField) -> TrajectoryDescriptors {
        let g = FrameGradients::new(frame);
        let f = FlowDerivatives::new(flow);
        let frames = vec![&g; TRAJECTORY_LEN];
        let flows = vec![&f; TRAJECTORY_LEN - 1];
        describe(&still([32.0, 32.0]), &frames, &flows, TRAJECTORY_LEN, &DescriptorConfig::default()).unwrap()
    }

    fn norm(h: &[f64]) -> f64 {
        h.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    #[test]
    fn lengths() {
        let c = DescriptorConfig::default();
        assert_eq!((c.hog_len(), c.hof_len()), (96, 108));
    }

    #[test]
    fn ramp_concentrates_in_first_bin() {
        let d = run(&Image::from_fn(64, 64, |x, _| x as f32 * 2.0), FlowField::zeros(64, 64));
        for cell in d.hog.chunks(8) {
            let total: f64 = cell.iter().map(|v| v * v).sum();
            assert!(cell[0] * cell[0] > 0.9 * total);
        }
        assert!((norm(&d.hog) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn rotation_shifts_two_bins() {
        let a = run(&Image::from_fn(64, 64, |x, y| x as f32 * 1.5 + y as f32 * 0.5), FlowField::zeros(64, 64));
        // Rotating the gradient (1.5, 0.5) by 90 degrees gives (-0.5, 1.5).
        let b = run(&Image::from_fn(64, 64, |x, y| -(x as f32) * 0.5 + y as f32 * 1.5), FlowField::zeros(64, 64));
        for (ca, cb) in a.hog.chunks(8).zip(b.hog.chunks(8)) {
            for k in 0..8 {
                assert!((ca[k] - cb[(k + 2) % 8]).abs() <= 0.05 * ca.iter().cloned().fold(0.0, f64::max));
            }
        }
    }

    #[test]
    fn uniform_and_static_volumes() {
        let d = run(&Image::filled(64, 64, 50.0), FlowField::zeros(64, 64));
        assert!(d.hog.iter().all(|&v| v == 0.0));
        assert!(d.mbhx.iter().all(|&v| v == 0.0) && d.mbhy.iter().all(|&v| v == 0.0));
        for cell in d.hof.chunks(9) {
            assert!(cell[..8].iter().all(|&v| v == 0.0));
            assert!(cell[8] > 0.0);
        }
        assert!((norm(&d.hof) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn constant_flow() {
        let d = run(&Image::filled(64, 64, 0.0), FlowField::constant(64, 64, 3.0, 0.0));
        for cell in d.hof.chunks(9) {
            assert!(cell[1..].iter().all(|&v| v == 0.0));
        }
        assert!(d.mbhx.iter().chain(&d.mbhy).all(|&v| v == 0.0));
    }

    #[test]
    fn split_flow_two_bins() {
        let flow = FlowField {
            u: Image::from_fn(64, 64, |x, _| if x < 32 { 3.0 } else { 0.0 }),
            v: Image::from_fn(64, 64, |x, _| if x < 32 { 0.0 } else { 3.0 }),
        };
        let d = run(&Image::filled(64, 64, 0.0), flow);
        let mut per_bin = [0.0; 9];
        for cell in d.hof.chunks(9) {
            for k in 0..9 {
                per_bin[k] += cell[k] * cell[k];
            }
        }
        assert!((per_bin[0].sqrt() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
        assert!((per_bin[2].sqrt() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-9);
    }

    #[test]
    fn shear_flow_mbh() {
        let flow = FlowField {
            u: Image::from_fn(64, 64, |_, y| y as f32 * 0.1),
            v: Image::new(64, 64),
        };
        let d = run(&Image::filled(64, 64, 0.0), flow);
        // du/dy > 0: gradient points +y, i.e. bin 2.
        for cell in d.mbhx.chunks(8) {
            let total: f64 = cell.iter().map(|v| v * v).sum();
            assert!(cell[2] * cell[2] > 0.9 * total);
        }
        assert!(d.mbhy.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn incomplete_is_error() {
        let g = FrameGradients::new(&Image::new(40, 40));
        let f = FlowDerivatives::new(FlowField::zeros(40, 40));
        let mut t = still([5.0, 5.0]);
        t.points.pop();
        let r = describe(&t, &[&g; 15], &[&f; 14], TRAJECTORY_LEN, &DescriptorConfig::default());
        assert!(matches!(r, Err(Error::IncompleteTrajectory)));
    }
}
