//! Dense optical flow: a coarse-to-fine Lucas-Kanade estimator and an
//! injection path for externally computed fields.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::image::{Image, IntegralImage};

pub const FLOW_MAGIC: &[u8; 8] = b"EMVQMFLO";

/// Per-pixel displacement from one frame to the next, in pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    pub u: Image,
    pub v: Image,
}

impl FlowField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            u: Image::new(width, height),
            v: Image::new(width, height),
        }
    }

    pub fn constant(width: usize, height: usize, u: f32, v: f32) -> Self {
        Self {
            u: Image::filled(width, height, u),
            v: Image::filled(width, height, v),
        }
    }

    pub fn width(&self) -> usize {
        self.u.width()
    }

    pub fn height(&self) -> usize {
        self.u.height()
    }

    pub fn clamp(&mut self, max_flow: f32) {
        for p in self.u.data_mut().iter_mut().chain(self.v.data_mut().iter_mut()) {
            *p = if p.is_finite() { p.clamp(-max_flow, max_flow) } else { 0.0 };
        }
    }

    /// Resample to another resolution, rescaling the vectors accordingly.
    pub fn resized(&self, width: usize, height: usize) -> FlowField {
        if width == self.width() && height == self.height() {
            return self.clone();
        }
        let sx = width as f32 / self.width() as f32;
        let sy = height as f32 / self.height() as f32;
        FlowField {
            u: self.u.resize_bilinear(width, height).map(|x| x * sx),
            v: self.v.resize_bilinear(width, height).map(|x| x * sy),
        }
    }

    /// Median over the 3x3 neighbourhood of `(x, y)` for each component.
    pub fn median_at(&self, x: usize, y: usize) -> (f32, f32) {
        let mut a = [0f32; 9];
        let mut b = [0f32; 9];
        let mut k = 0;
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                a[k] = self.u.get_clamped(x as isize + dx, y as isize + dy);
                b[k] = self.v.get_clamped(x as isize + dx, y as isize + dy);
                k += 1;
            }
        }
        a.sort_unstable_by(f32::total_cmp);
        b.sort_unstable_by(f32::total_cmp);
        (a[4], b[4])
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(FLOW_MAGIC)?;
        w.write_all(&(self.width() as u32).to_le_bytes())?;
        w.write_all(&(self.height() as u32).to_le_bytes())?;
        for p in self.u.data().iter().chain(self.v.data()) {
            w.write_all(&p.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read<R: Read>(mut r: R) -> Result<FlowField> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != FLOW_MAGIC {
            return Err(Error::MalformedHeader("flow file magic".into()));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let w = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let h = u32::from_le_bytes(b4) as usize;
        if w == 0 || h == 0 {
            return Err(Error::MalformedHeader("flow file dimensions".into()));
        }
        let mut plane = || -> Result<Image> {
            let mut bytes = vec![0u8; w * h * 4];
            r.read_exact(&mut bytes)?;
            let data = bytes
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            Ok(Image::from_vec(w, h, data))
        };
        let u = plane()?;
        let v = plane()?;
        Ok(FlowField { u, v })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let f = fs::File::create(path)?;
        self.write(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<FlowField> {
        let f = fs::File::open(path).map_err(|_| Error::MissingPath(path.to_path_buf()))?;
        FlowField::read(std::io::BufReader::new(f))
    }
}

/// Which side of a comparison a frame pair belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Reference,
    Synthesized,
}

impl Stream {
    pub fn dir_name(self) -> &'static str {
        match self {
            Stream::Reference => "ref",
            Stream::Synthesized => "syn",
        }
    }
}

/// Identifies the frame pair a flow request refers to.
#[derive(Debug, Clone, Copy)]
pub struct FlowRequest<'a> {
    pub video_id: &'a str,
    pub stream: Stream,
    /// Index of the earlier frame of the pair.
    pub frame: usize,
    pub scale: usize,
}

pub trait FlowEstimator: Send + Sync {
    fn estimate(&self, prev: &Image, next: &Image, req: &FlowRequest<'_>) -> Result<FlowField>;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowConfig {
    pub levels: usize,
    pub iterations: usize,
    /// Side of the square aggregation window.
    pub window: usize,
    /// Tikhonov term added to the normal equations.
    pub regularization: f64,
    pub max_flow: f32,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            levels: 5,
            iterations: 5,
            window: 7,
            regularization: 1.0,
            max_flow: 32.0,
        }
    }
}

/// Coarse-to-fine Lucas-Kanade over a factor-2 pyramid.
#[derive(Debug, Clone, Default)]
pub struct PyramidalLk {
    pub cfg: FlowConfig,
}

impl FlowEstimator for PyramidalLk {
    fn estimate(&self, prev: &Image, next: &Image, _req: &FlowRequest<'_>) -> Result<FlowField> {
        compute_flow(prev, next, &self.cfg)
    }
}

/// Reads `<root>/<video_id>/<ref|syn>/<frame:06>.flo`, stored at full
/// resolution, and resamples it to the requested level.
#[derive(Debug, Clone)]
pub struct FileFlow {
    pub root: PathBuf,
    pub max_flow: f32,
}

impl FileFlow {
    pub fn path_for(root: &Path, video_id: &str, stream: Stream, frame: usize) -> PathBuf {
        root.join(video_id).join(stream.dir_name()).join(format!("{frame:06}.flo"))
    }
}

impl FlowEstimator for FileFlow {
    fn estimate(&self, prev: &Image, _next: &Image, req: &FlowRequest<'_>) -> Result<FlowField> {
        let path = Self::path_for(&self.root, req.video_id, req.stream, req.frame);
        let mut f = FlowField::load(&path)?.resized(prev.width(), prev.height());
        f.clamp(self.max_flow);
        Ok(f)
    }
}

fn factor2_pyramid(img: &Image, levels: usize) -> Vec<Image> {
    let mut out = vec![img.clone()];
    while out.len() < levels {
        let last = out.last().unwrap();
        let (w, h) = ((last.width() + 1) / 2, (last.height() + 1) / 2);
        if w < 8 || h < 8 {
            break;
        }
        out.push(last.gaussian_blur(1.0).resize_bilinear(w, h));
    }
    out
}

fn warp(img: &Image, u: &Image, v: &Image) -> Image {
    Image::from_fn(img.width(), img.height(), |x, y| {
        img.sample(x as f64 + f64::from(u.get(x, y)), y as f64 + f64::from(v.get(x, y))) as f32
    })
}

/// Largest flow update of one iteration, in pixels of the current level.
const MAX_STEP: f64 = 1.0;

/// Dense flow from `prev` to `next`.
pub fn compute_flow(prev: &Image, next: &Image, cfg: &FlowConfig) -> Result<FlowField> {
    if !prev.same_size(next) {
        return Err(Error::FrameSizeMismatch);
    }
    let p1 = factor2_pyramid(prev, cfg.levels.max(1));
    let p2 = factor2_pyramid(next, p1.len());
    let r = (cfg.window / 2) as isize;
    let lambda = cfg.regularization;

    let mut flow: Option<FlowField> = None;
    for lvl in (0..p1.len()).rev() {
        let (i1, i2) = (&p1[lvl], &p2[lvl]);
        let (w, h) = (i1.width(), i1.height());
        let mut f = match flow.take() {
            Some(f) => f.resized(w, h),
            None => FlowField::zeros(w, h),
        };
        let (g1x, g1y) = i1.gradients();
        let (g2x, g2y) = i2.gradients();
        for _ in 0..cfg.iterations {
            let i2w = warp(i2, &f.u, &f.v);
            // Gradients of the warped frame come from warping its gradient
            // images, so noise in the current flow does not feed back.
            let (w2x, w2y) = (warp(&g2x, &f.u, &f.v), warp(&g2y, &f.u, &f.v));
            let gx = Image::from_fn(w, h, |x, y| 0.5 * (g1x.get(x, y) + w2x.get(x, y)));
            let gy = Image::from_fn(w, h, |x, y| 0.5 * (g1y.get(x, y) + w2y.get(x, y)));
            let at = |img: &Image, x: usize, y: usize| f64::from(img.get(x, y));
            let it = |x: usize, y: usize| at(&i2w, x, y) - at(i1, x, y);
            let sxx = IntegralImage::from_values(w, h, |x, y| at(&gx, x, y).powi(2));
            let sxy = IntegralImage::from_values(w, h, |x, y| at(&gx, x, y) * at(&gy, x, y));
            let syy = IntegralImage::from_values(w, h, |x, y| at(&gy, x, y).powi(2));
            let sxt = IntegralImage::from_values(w, h, |x, y| at(&gx, x, y) * it(x, y));
            let syt = IntegralImage::from_values(w, h, |x, y| at(&gy, x, y) * it(x, y));
            for y in 0..h {
                for x in 0..w {
                    let (xi, yi) = (x as isize, y as isize);
                    let bs = |ii: &IntegralImage| ii.box_sum(xi - r, yi - r, xi + r + 1, yi + r + 1);
                    let a = bs(&sxx) + lambda;
                    let b = bs(&sxy);
                    let c = bs(&syy) + lambda;
                    let ex = -bs(&sxt);
                    let ey = -bs(&syt);
                    let det = a * c - b * b;
                    if det.abs() < 1e-12 {
                        continue;
                    }
                    let mut du = (c * ex - b * ey) / det;
                    let mut dv = (a * ey - b * ex) / det;
                    let step = du.hypot(dv);
                    if step > MAX_STEP {
                        du *= MAX_STEP / step;
                        dv *= MAX_STEP / step;
                    }
                    f.u.set(x, y, f.u.get(x, y) + du as f32);
                    f.v.set(x, y, f.v.get(x, y) + dv as f32);
                }
            }
            f.clamp(cfg.max_flow);
            f = FlowField {
                u: f.u.median3x3(),
                v: f.v.median3x3(),
            };
        }
        flow = Some(f);
    }
    let mut f = flow.expect("pyramid has at least one level");
    f.clamp(cfg.max_flow);
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texture(w: usize, h: usize, dx: f64, dy: f64) -> Image {
        Image::from_fn(w, h, |x, y| {
            let (x, y) = (x as f64 - dx, y as f64 - dy);
            (128.0 + 50.0 * (0.31 * x).sin() * (0.23 * y).cos() + 30.0 * (0.17 * x + 0.29 * y).sin()) as f32
        })
    }

    fn median(mut v: Vec<f32>) -> f32 {
        v.sort_by(f32::total_cmp);
        v[v.len() / 2]
    }

    #[test]
    fn identical_frames_zero_flow() {
        let a = texture(64, 64, 0.0, 0.0);
        let f = compute_flow(&a, &a, &FlowConfig::default()).unwrap();
        assert!(f.u.data().iter().chain(f.v.data()).all(|v| v.abs() <= 0.1));
    }

    #[test]
    fn recovers_translation() {
        let a = texture(96, 96, 0.0, 0.0);
        let b = texture(96, 96, 3.0, 0.0);
        let f = compute_flow(&a, &b, &FlowConfig::default()).unwrap();
        let mut us = Vec::new();
        let mut vs = Vec::new();
        for y in 16..80 {
            for x in 16..80 {
                us.push(f.u.get(x, y));
                vs.push(f.v.get(x, y));
            }
        }
        assert!((median(us) - 3.0).abs() <= 0.3);
        assert!(median(vs).abs() <= 0.3);
    }

    #[test]
    fn file_round_trip() {
        let f = FlowField {
            u: Image::from_fn(5, 3, |x, y| x as f32 - y as f32 * 0.5),
            v: Image::from_fn(5, 3, |x, _| -(x as f32)),
        };
        let mut buf = Vec::new();
        f.write(&mut buf).unwrap();
        assert_eq!(buf.len(), 16 + 2 * 15 * 4);
        assert_eq!(FlowField::read(buf.as_slice()).unwrap(), f);
    }

    #[test]
    fn resize_scales_vectors() {
        let f = FlowField::constant(64, 32, 2.0, -4.0).resized(32, 16);
        assert!(f.u.data().iter().all(|&v| (v - 1.0).abs() < 1e-6));
        assert!(f.v.data().iter().all(|&v| (v + 2.0).abs() < 1e-6));
    }
}
