//! Determinant-of-Hessian blob detector on box-filter scale octaves, an
//! upright 64-D gradient-sum descriptor, and ratio-test matching.

use crate::error::{Error, Result};
use crate::image::{Image, IntegralImage};

/// Smallest frame the detector accepts.
pub const MIN_FRAME: usize = 64;
pub const DESCRIPTOR_LEN: usize = 64;

#[derive(Debug, Clone, PartialEq)]
pub struct Keypoint {
    /// Sub-pixel `(x, y)` position.
    pub position: [f64; 2],
    /// Gaussian-equivalent scale in pixels.
    pub scale: f64,
    pub response: f64,
    pub descriptor: [f64; DESCRIPTOR_LEN],
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    pub octaves: usize,
    /// Responses below this fraction of the strongest response are ignored.
    pub rel_threshold: f64,
    /// Absolute floor on the scale-normalized response (intensities in [0, 1]).
    pub abs_threshold: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            octaves: 4,
            rel_threshold: 0.001,
            abs_threshold: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchConfig {
    pub ratio: f64,
    pub max_disparity: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        Self {
            ratio: 0.7,
            max_disparity: 64.0,
        }
    }
}

/// Filter side length of layer `layer` (0..4) in octave `octave`.
fn filter_size(octave: usize, layer: usize) -> usize {
    3 * ((1 << (octave + 1)) * (layer + 1) + 1)
}

struct Layer {
    size: usize,
    step: usize,
    cols: usize,
    rows: usize,
    /// |det H| on the sampling grid, zero where the filter leaves the frame.
    response: Vec<f64>,
}

impl Layer {
    #[inline]
    fn at(&self, c: usize, r: usize) -> f64 {
        self.response[r * self.cols + c]
    }
}

fn hessian_layer(ii: &IntegralImage, width: usize, height: usize, size: usize, step: usize) -> Layer {
    let cols = width.div_ceil(step);
    let rows = height.div_ceil(step);
    let lobe = (size / 3) as isize;
    let half = (size / 2) as isize;
    let border = half + 1;
    let inv_area = 1.0 / (size * size) as f64;
    let mut response = vec![0.0; cols * rows];
    for r in 0..rows {
        let y = (r * step) as isize;
        if y < border || y >= height as isize - border {
            continue;
        }
        for c in 0..cols {
            let x = (c * step) as isize;
            if x < border || x >= width as isize - border {
                continue;
            }
            // Dxx: three horizontal lobes (+1, -2, +1) of height 2*lobe-1.
            let dxx = ii.box_sum(x - half, y - lobe + 1, x + half + 1, y + lobe)
                - 3.0 * ii.box_sum(x - lobe / 2, y - lobe + 1, x - lobe / 2 + lobe, y + lobe);
            let dyy = ii.box_sum(x - lobe + 1, y - half, x + lobe, y + half + 1)
                - 3.0 * ii.box_sum(x - lobe + 1, y - lobe / 2, x + lobe, y - lobe / 2 + lobe);
            let dxy = ii.box_sum(x - lobe, y - lobe, x, y) + ii.box_sum(x + 1, y + 1, x + lobe + 1, y + lobe + 1)
                - ii.box_sum(x + 1, y - lobe, x + lobe + 1, y)
                - ii.box_sum(x - lobe, y + 1, x, y + lobe + 1);
            let (dxx, dyy, dxy) = (dxx * inv_area, dyy * inv_area, dxy * inv_area);
            let det = dxx * dyy - 0.81 * dxy * dxy;
            response[r * cols + c] = det.abs();
        }
    }
    Layer {
        size,
        step,
        cols,
        rows,
        response,
    }
}

/// Detect keypoints on a grayscale frame (intensities 0..255).
pub fn detect_keypoints(frame: &Image, cfg: &DetectorConfig) -> Result<Vec<Keypoint>> {
    let (w, h) = (frame.width(), frame.height());
    if w < MIN_FRAME || h < MIN_FRAME {
        return Err(Error::FrameTooSmall {
            width: w,
            height: h,
            min: MIN_FRAME,
        });
    }
    let ii = IntegralImage::from_values(w, h, |x, y| f64::from(frame.get(x, y)) / 255.0);

    let octaves: Vec<Vec<Layer>> = (0..cfg.octaves)
        .map(|o| {
            (0..4)
                .map(|l| hessian_layer(&ii, w, h, filter_size(o, l), 1 << o))
                .collect()
        })
        .collect();
    let max_resp = octaves
        .iter()
        .flatten()
        .flat_map(|l| l.response.iter().copied())
        .fold(0.0f64, f64::max);
    let threshold = (cfg.rel_threshold * max_resp).max(cfg.abs_threshold);
    if !(max_resp > threshold) {
        return Ok(Vec::new());
    }

    let mut keypoints = Vec::new();
    for layers in &octaves {
        for mid in 1..3 {
            let (below, layer, above) = (&layers[mid - 1], &layers[mid], &layers[mid + 1]);
            for r in 1..layer.rows.saturating_sub(1) {
                for c in 1..layer.cols.saturating_sub(1) {
                    let v = layer.at(c, r);
                    if v <= threshold || !is_extremum(below, layer, above, c, r, v) {
                        continue;
                    }
                    if let Some(kp) = refine(below, layer, above, c, r, v) {
                        if kp.position[0] >= 0.0
                            && kp.position[1] >= 0.0
                            && kp.position[0] <= (w - 1) as f64
                            && kp.position[1] <= (h - 1) as f64
                        {
                            keypoints.push(kp);
                        }
                    }
                }
            }
        }
    }

    let mut described = Vec::with_capacity(keypoints.len());
    for mut kp in keypoints {
        if describe_upright(&ii, &mut kp) {
            described.push(kp);
        }
    }
    described.sort_by(|a, b| {
        b.response
            .total_cmp(&a.response)
            .then(a.position[1].total_cmp(&b.position[1]))
            .then(a.position[0].total_cmp(&b.position[0]))
    });
    Ok(described)
}

fn is_extremum(below: &Layer, layer: &Layer, above: &Layer, c: usize, r: usize, v: f64) -> bool {
    for dr in -1isize..=1 {
        for dc in -1isize..=1 {
            let cc = (c as isize + dc) as usize;
            let rr = (r as isize + dr) as usize;
            if below.at(cc, rr) >= v || above.at(cc, rr) >= v {
                return false;
            }
            if (dr != 0 || dc != 0) && layer.at(cc, rr) >= v {
                return false;
            }
        }
    }
    true
}

/// Quadratic interpolation of the extremum in (x, y, size).
fn refine(below: &Layer, layer: &Layer, above: &Layer, c: usize, r: usize, v: f64) -> Option<Keypoint> {
    let at = |l: &Layer, dc: isize, dr: isize| l.at((c as isize + dc) as usize, (r as isize + dr) as usize);
    let dx = 0.5 * (at(layer, 1, 0) - at(layer, -1, 0));
    let dy = 0.5 * (at(layer, 0, 1) - at(layer, 0, -1));
    let ds = 0.5 * (at(above, 0, 0) - at(below, 0, 0));
    let dxx = at(layer, 1, 0) + at(layer, -1, 0) - 2.0 * v;
    let dyy = at(layer, 0, 1) + at(layer, 0, -1) - 2.0 * v;
    let dss = at(above, 0, 0) + at(below, 0, 0) - 2.0 * v;
    let dxy = 0.25 * (at(layer, 1, 1) - at(layer, -1, 1) - at(layer, 1, -1) + at(layer, -1, -1));
    let dxs = 0.25 * (at(above, 1, 0) - at(above, -1, 0) - at(below, 1, 0) + at(below, -1, 0));
    let dys = 0.25 * (at(above, 0, 1) - at(above, 0, -1) - at(below, 0, 1) + at(below, 0, -1));

    let hm = [[dxx, dxy, dxs], [dxy, dyy, dys], [dxs, dys, dss]];
    let offset = solve3(hm, [-dx, -dy, -ds]).unwrap_or([0.0; 3]);
    if offset.iter().any(|o| o.abs() > 0.5) {
        return None;
    }
    let step = layer.step as f64;
    let size_step = (above.size - layer.size) as f64;
    let size = layer.size as f64 + offset[2] * size_step;
    Some(Keypoint {
        position: [
            (c as f64 + offset[0]) * step,
            (r as f64 + offset[1]) * step,
        ],
        scale: 1.2 * size / 9.0,
        response: v,
        descriptor: [0.0; DESCRIPTOR_LEN],
    })
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    if d.abs() < 1e-300 {
        return None;
    }
    let mut out = [0.0; 3];
    for (i, o) in out.iter_mut().enumerate() {
        let mut m = a;
        for row in 0..3 {
            m[row][i] = b[row];
        }
        *o = det(m) / d;
    }
    Some(out)
}

/// Haar-wavelet sums over a 20s x 20s axis-aligned window split into 4x4
/// cells. Returns false when the window carries no gradient at all.
fn describe_upright(ii: &IntegralImage, kp: &mut Keypoint) -> bool {
    let s = kp.scale;
    let haar = ((2.0 * s).round() as isize).max(2);
    let half = haar / 2;
    let sigma = 3.3 * s;
    let (cx, cy) = (kp.position[0], kp.position[1]);
    let mut desc = [0.0f64; DESCRIPTOR_LEN];
    for cell_y in 0..4 {
        for cell_x in 0..4 {
            let (mut sdx, mut sdy, mut adx, mut ady) = (0.0, 0.0, 0.0, 0.0);
            for j in 0..5 {
                for i in 0..5 {
                    let ox = (cell_x as f64 * 5.0 + i as f64 - 9.5) * s;
                    let oy = (cell_y as f64 * 5.0 + j as f64 - 9.5) * s;
                    let x = (cx + ox).round() as isize;
                    let y = (cy + oy).round() as isize;
                    let g = (-(ox * ox + oy * oy) / (2.0 * sigma * sigma)).exp();
                    let rx = ii.box_sum(x, y - half, x + half, y + half)
                        - ii.box_sum(x - half, y - half, x, y + half);
                    let ry = ii.box_sum(x - half, y, x + half, y + half)
                        - ii.box_sum(x - half, y - half, x + half, y);
                    let (rx, ry) = (g * rx, g * ry);
                    sdx += rx;
                    sdy += ry;
                    adx += rx.abs();
                    ady += ry.abs();
                }
            }
            let base = (cell_y * 4 + cell_x) * 4;
            desc[base] = sdx;
            desc[base + 1] = sdy;
            desc[base + 2] = adx;
            desc[base + 3] = ady;
        }
    }
    let n = desc.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(n > 0.0) {
        return false;
    }
    desc.iter_mut().for_each(|v| *v /= n);
    kp.descriptor = desc;
    true
}

fn descriptor_dist2(a: &[f64; DESCRIPTOR_LEN], b: &[f64; DESCRIPTOR_LEN]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest_two(query: &Keypoint, pool: &[Keypoint]) -> Option<(usize, f64, f64)> {
    let mut best = (usize::MAX, f64::INFINITY);
    let mut second = f64::INFINITY;
    for (i, kp) in pool.iter().enumerate() {
        let d = descriptor_dist2(&query.descriptor, &kp.descriptor);
        if d < best.1 {
            second = best.1;
            best = (i, d);
        } else if d < second {
            second = d;
        }
    }
    (best.0 != usize::MAX).then_some((best.0, best.1.sqrt(), second.sqrt()))
}

/// Nearest-neighbour descriptor matching with the ratio test, a mutual-best
/// check and a displacement gate. Returns `(ref index, syn index)` pairs in
/// ref order.
pub fn match_keypoints(reference: &[Keypoint], synthesized: &[Keypoint], cfg: &MatchConfig) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    if reference.is_empty() || synthesized.is_empty() {
        return pairs;
    }
    for (i, kp) in reference.iter().enumerate() {
        let Some((j, d1, d2)) = nearest_two(kp, synthesized) else {
            continue;
        };
        if !(d1 < cfg.ratio * d2) {
            continue;
        }
        let back = nearest_two(&synthesized[j], reference).map(|b| b.0);
        if back != Some(i) {
            continue;
        }
        let other = &synthesized[j];
        let disp = (other.position[0] - kp.position[0]).hypot(other.position[1] - kp.position[1]);
        if disp <= cfg.max_disparity {
            pairs.push((i, j));
        }
    }
    pairs
}
