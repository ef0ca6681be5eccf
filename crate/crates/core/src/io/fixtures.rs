//! Deterministic synthetic ref/syn video pairs with known ground truth.

use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::curve::Curve;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::motion::FlowField;
use crate::spatial::{extract_contours, SuperpixelLabeling};

use super::manifest::{Manifest, ManifestEntry};
use super::video::{write_y4m, VideoSource};

pub const BACKGROUND: f64 = 60.0;
/// Width of the boundary band displaced by the local warp.
pub const WARP_BAND: f64 = 8.0;
/// Angular frequency of the warp along the contour.
pub const WARP_LOBES: f64 = 5.0;
/// Temporal period of the warp in frames.
pub const WARP_PERIOD: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FixtureKind {
    Identical,
    GlobalShift,
    LocalWarp,
    TranslatingSquare,
    StaticScene,
    ContourDeform,
}

impl FixtureKind {
    pub const ALL: [FixtureKind; 6] = [
        FixtureKind::Identical,
        FixtureKind::GlobalShift,
        FixtureKind::LocalWarp,
        FixtureKind::TranslatingSquare,
        FixtureKind::StaticScene,
        FixtureKind::ContourDeform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FixtureKind::Identical => "identical",
            FixtureKind::GlobalShift => "global_shift",
            FixtureKind::LocalWarp => "local_warp",
            FixtureKind::TranslatingSquare => "translating_square",
            FixtureKind::StaticScene => "static_scene",
            FixtureKind::ContourDeform => "contour_deform",
        }
    }
}

impl FromStr for FixtureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FixtureKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::UnknownFixture(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FixtureParams {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    /// Object velocity in pixels per frame.
    pub velocity: [f64; 2],
    /// Displacement of the synthesized view for `global_shift`.
    pub shift: [f64; 2],
    /// Peak boundary displacement for `local_warp`.
    pub amplitude: f64,
}

impl Default for FixtureParams {
    fn default() -> Self {
        Self {
            width: 128,
            height: 128,
            frames: 20,
            velocity: [2.0, 0.0],
            shift: [2.0, 0.0],
            amplitude: 4.0,
        }
    }
}

/// What the generator planted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub kind: FixtureKind,
    pub velocity: [f64; 2],
    pub shift: [f64; 2],
    pub amplitude: f64,
    /// Warp phase along the contour.
    pub phase: f64,
    /// Object centre (disk scenes) or top-left corner (square) at frame 0.
    pub origin: [f64; 2],
    /// Disk radius or square side.
    pub size: f64,
}

impl GroundTruth {
    pub fn origin_at(&self, frame: usize) -> [f64; 2] {
        [
            self.origin[0] + self.velocity[0] * frame as f64,
            self.origin[1] + self.velocity[1] * frame as f64,
        ]
    }

    /// Radial boundary displacement of the warp at contour angle `theta`.
    pub fn warp_offset(&self, theta: f64, frame: usize) -> f64 {
        self.amplitude * (WARP_LOBES * theta + TAU * frame as f64 / WARP_PERIOD + self.phase).sin()
    }

    /// Exact motion of the translating square from `frame` to `frame + 1`:
    /// the velocity inside the square, zero elsewhere.
    pub fn square_flow(&self, frame: usize, width: usize, height: usize) -> FlowField {
        let o = self.origin_at(frame);
        let inside = |x: usize, y: usize| {
            let (x, y) = (x as f64, y as f64);
            x >= o[0] && x < o[0] + self.size && y >= o[1] && y < o[1] + self.size
        };
        FlowField {
            u: Image::from_fn(width, height, |x, y| if inside(x, y) { self.velocity[0] as f32 } else { 0.0 }),
            v: Image::from_fn(width, height, |x, y| if inside(x, y) { self.velocity[1] as f32 } else { 0.0 }),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FixturePair {
    pub reference: VideoSource,
    pub synthesized: VideoSource,
    pub truth: GroundTruth,
}

fn texture(p: [f64; 2]) -> f64 {
    150.0 + 45.0 * (TAU * p[0] / 11.0).sin() * (TAU * p[1] / 13.0).sin() + 25.0 * (TAU * (p[0] + p[1]) / 17.0).sin()
}

fn quantize(v: f64) -> f32 {
    v.round().clamp(0.0, 255.0) as f32
}

/// Textured disk over a flat background, evaluated at a continuous point.
fn disk_scene(q: [f64; 2], center: [f64; 2], radius: f64) -> f64 {
    let p = [q[0] - center[0], q[1] - center[1]];
    if p[0].hypot(p[1]) < radius {
        texture(p)
    } else {
        BACKGROUND
    }
}

fn render(params: &FixtureParams, f: impl Fn(usize, [f64; 2]) -> f64) -> Result<VideoSource> {
    let frames = (0..params.frames)
        .map(|t| Image::from_fn(params.width, params.height, |x, y| quantize(f(t, [x as f64, y as f64]))))
        .collect();
    VideoSource::from_frames(frames)
}

fn bump(x: f64) -> f64 {
    if x.abs() >= WARP_BAND {
        0.0
    } else {
        (PI * x / (2.0 * WARP_BAND)).cos().powi(2)
    }
}

fn bump_slope(x: f64) -> f64 {
    if x.abs() >= WARP_BAND {
        0.0
    } else {
        -PI / (2.0 * WARP_BAND) * (PI * x / WARP_BAND).sin()
    }
}

/// Inverse of the radial warp `s -> s + d * bump(s - R)` of the disk scene,
/// so the boundary at `R` lands exactly at `R + d`. The forward map is
/// monotone while `|d| < 2 * WARP_BAND / PI`.
fn warped(q: [f64; 2], truth: &GroundTruth, frame: usize) -> [f64; 2] {
    let c = truth.origin_at(frame);
    let p = [q[0] - c[0], q[1] - c[1]];
    let r = p[0].hypot(p[1]);
    let d = truth.warp_offset(p[1].atan2(p[0]), frame);
    if r == 0.0 || d == 0.0 || (r - truth.size).abs() >= WARP_BAND + d.abs() {
        return q;
    }
    let mut s = r - d * bump(r - truth.size);
    for _ in 0..30 {
        let g = s + d * bump(s - truth.size) - r;
        s -= g / (1.0 + d * bump_slope(s - truth.size));
    }
    let k = s / r;
    [c[0] + p[0] * k, c[1] + p[1] * k]
}

pub fn make_fixture(kind: FixtureKind, params: &FixtureParams, seed: u64) -> Result<FixturePair> {
    if params.width < 32 || params.height < 32 {
        return Err(Error::FrameTooSmall {
            width: params.width,
            height: params.height,
            min: 32,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (params.width as f64, params.height as f64);
    let min_side = w.min(h);
    let span = |v: f64| v * (params.frames.saturating_sub(1)) as f64 / 2.0;
    let mut truth = GroundTruth {
        kind,
        velocity: params.velocity,
        shift: [0.0, 0.0],
        amplitude: 0.0,
        phase: rng.random_range(0.0..TAU),
        origin: [w / 2.0 - span(params.velocity[0]), h / 2.0 - span(params.velocity[1])],
        size: (0.22 * min_side).round(),
    };
    match kind {
        FixtureKind::Identical | FixtureKind::GlobalShift | FixtureKind::LocalWarp => {
            if kind == FixtureKind::GlobalShift {
                truth.shift = params.shift;
            }
            if kind == FixtureKind::LocalWarp {
                truth.amplitude = params.amplitude;
            }
            let t = truth;
            let reference = render(params, |f, q| disk_scene(q, t.origin_at(f), t.size))?;
            let synthesized = match kind {
                FixtureKind::Identical => reference.clone(),
                FixtureKind::GlobalShift => {
                    render(params, |f, q| disk_scene([q[0] - t.shift[0], q[1] - t.shift[1]], t.origin_at(f), t.size))?
                }
                _ => render(params, |f, q| disk_scene(warped(q, &t, f), t.origin_at(f), t.size))?,
            };
            Ok(FixturePair {
                reference,
                synthesized,
                truth,
            })
        }
        FixtureKind::TranslatingSquare => {
            truth.size = (0.25 * min_side).round();
            truth.origin = [
                ((w - truth.size) / 2.0 - span(params.velocity[0])).round(),
                ((h - truth.size) / 2.0 - span(params.velocity[1])).round(),
            ];
            let t = truth;
            let reference = render(params, |f, q| {
                let o = t.origin_at(f);
                let p = [q[0] - o[0], q[1] - o[1]];
                if p[0] >= 0.0 && p[0] < t.size && p[1] >= 0.0 && p[1] < t.size {
                    texture(p)
                } else {
                    BACKGROUND
                }
            })?;
            Ok(FixturePair {
                synthesized: reference.clone(),
                reference,
                truth,
            })
        }
        FixtureKind::StaticScene => {
            truth.velocity = [0.0, 0.0];
            truth.origin = [0.0, 0.0];
            let reference = render(params, |_, q| texture(q))?;
            Ok(FixturePair {
                synthesized: reference.clone(),
                reference,
                truth,
            })
        }
        FixtureKind::ContourDeform => {
            let inst = contour_instance(params.width, params.height, seed)?;
            let still = |img: &Image| VideoSource::from_frames(vec![img.clone(); params.frames]);
            truth.velocity = [0.0, 0.0];
            truth.origin = inst.center;
            truth.size = inst.radius;
            Ok(FixturePair {
                reference: still(&inst.reference)?,
                synthesized: still(&inst.deformed)?,
                truth,
            })
        }
    }
}

/// One seeded blob in three versions: the original, a rigidly shifted copy
/// and a ghosted copy whose silhouette is the union with an offset duplicate.
/// The shift is 1 to 3 px; the duplicate sits 0.3 to 0.4 radii away.
#[derive(Debug, Clone)]
pub struct ContourInstance {
    pub reference: Image,
    pub shifted: Image,
    pub deformed: Image,
    pub center: [f64; 2],
    pub radius: f64,
    pub shift: [f64; 2],
    pub ghost_offset: [f64; 2],
}

pub fn contour_instance(width: usize, height: usize, seed: u64) -> Result<ContourInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (width as f64, height as f64);
    let radius = 0.2 * w.min(h);
    let center = [w / 2.0, h / 2.0];
    let (p1, p2) = (rng.random_range(0.0..TAU), rng.random_range(0.0..TAU));
    let a = rng.random_range(0.0..TAU);
    let m = rng.random_range(1.0..3.0);
    let shift = [m * a.cos(), m * a.sin()];
    let a = rng.random_range(0.0..TAU);
    let m = radius * rng.random_range(0.3..0.4);
    let ghost_offset = [m * a.cos(), m * a.sin()];
    let inside = |x: usize, y: usize, o: [f64; 2]| {
        let p = [x as f64 - center[0] - o[0], y as f64 - center[1] - o[1]];
        let th = p[1].atan2(p[0]);
        let r = radius * (1.0 + 0.12 * (2.0 * th + p1).sin() + 0.08 * (3.0 * th + p2).sin());
        p[0].hypot(p[1]) < r
    };
    let paint = |f: &dyn Fn(usize, usize) -> bool| {
        Image::from_fn(width, height, |x, y| if f(x, y) { 200.0 } else { BACKGROUND as f32 })
    };
    let ghost = [ghost_offset[0] / 2.0, ghost_offset[1] / 2.0];
    let back = [-ghost[0], -ghost[1]];
    Ok(ContourInstance {
        reference: paint(&|x, y| inside(x, y, [0.0, 0.0])),
        shifted: paint(&|x, y| inside(x, y, shift)),
        deformed: paint(&|x, y| inside(x, y, ghost) || inside(x, y, back)),
        center,
        radius,
        shift,
        ghost_offset,
    })
}

/// Outer contour of the bright region containing `seed_point`.
pub fn silhouette_contour(img: &Image, seed_point: [f64; 2]) -> Result<Curve> {
    let labels = img.data().iter().map(|&v| u32::from(f64::from(v) > BACKGROUND + 1.0)).collect();
    let lab = SuperpixelLabeling::from_labels(img.width(), img.height(), labels);
    let target = lab.label(seed_point[0].round() as usize, seed_point[1].round() as usize);
    extract_contours(&lab)
        .into_iter()
        .find(|c| c.label == target)
        .ok_or(Error::DegenerateCurve)?
        .to_curve()
}

/// Write a `local_warp` dataset of `records` pairs as Y4M files plus a
/// manifest. Amplitudes are spread over [0, 4]; DMOS is a fixed increasing
/// function of amplitude plus Gaussian noise of standard deviation 0.1.
pub fn write_warp_dataset(dir: &Path, records: usize, params: &FixtureParams, seed: u64) -> Result<PathBuf> {
    if records == 0 {
        return Err(Error::InvalidParams("dataset needs at least one record".into()));
    }
    std::fs::create_dir_all(dir)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = rand_distr::Normal::new(0.0, 0.1).expect("valid normal");
    let mut entries = Vec::with_capacity(records);
    for i in 0..records {
        let amplitude = if records == 1 { 0.0 } else { 4.0 * i as f64 / (records - 1) as f64 };
        let p = FixtureParams { amplitude, ..*params };
        let pair = make_fixture(FixtureKind::LocalWarp, &p, seed.wrapping_add(i as u64 + 1))?;
        let id = format!("warp{i:03}");
        let ref_path = dir.join(format!("{id}_ref.y4m"));
        let syn_path = dir.join(format!("{id}_syn.y4m"));
        write_y4m(&ref_path, &pair.reference)?;
        write_y4m(&syn_path, &pair.synthesized)?;
        let noise: f64 = rng.sample(normal);
        entries.push(ManifestEntry {
            video_id: id,
            ref_path,
            syn_path,
            group: format!("g{}", i % 3),
            dmos: 1.0 + 0.9 * amplitude + noise,
            dmos_stderr: Some(0.1),
        });
    }
    let path = dir.join("manifest.csv");
    Manifest { entries }.save(&path)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{elastic_distance, ElasticParams};

    #[test]
    fn kinds_parse() {
        for k in FixtureKind::ALL {
            assert_eq!(k.name().parse::<FixtureKind>().unwrap(), k);
        }
        assert!(matches!("wobble".parse::<FixtureKind>(), Err(Error::UnknownFixture(_))));
    }

    #[test]
    fn identical_and_square_are_byte_identical() {
        for k in [FixtureKind::Identical, FixtureKind::TranslatingSquare, FixtureKind::StaticScene] {
            let f = make_fixture(k, &FixtureParams::default(), 3).unwrap();
            assert_eq!(f.reference.luma_planes(), f.synthesized.luma_planes());
            assert_eq!(f.reference.frame_count(), 20);
        }
    }

    #[test]
    fn deterministic() {
        let a = make_fixture(FixtureKind::LocalWarp, &FixtureParams::default(), 9).unwrap();
        let b = make_fixture(FixtureKind::LocalWarp, &FixtureParams::default(), 9).unwrap();
        assert_eq!(a.synthesized.luma_planes(), b.synthesized.luma_planes());
    }

    #[test]
    fn square_moves_at_velocity() {
        let f = make_fixture(FixtureKind::TranslatingSquare, &FixtureParams::default(), 0).unwrap();
        let o0 = f.truth.origin_at(0);
        let o5 = f.truth.origin_at(5);
        let (x0, y0) = (o0[0] as usize + 3, o0[1] as usize + 4);
        assert_eq!(f.reference.frames[0].get(x0, y0), f.reference.frames[5].get(x0 + 10, y0));
        assert_eq!(o5[0] - o0[0], 10.0);
        let flow = f.truth.square_flow(0, 128, 128);
        assert_eq!(flow.u.get(x0, y0), 2.0);
        assert_eq!(flow.u.get(1, 1), 0.0);
    }

    #[test]
    fn global_shift_moves_content() {
        let p = FixtureParams::default();
        let r = make_fixture(FixtureKind::Identical, &p, 1).unwrap();
        let s = make_fixture(FixtureKind::GlobalShift, &p, 1).unwrap();
        for y in 0..128 {
            for x in 2..128 {
                assert_eq!(s.synthesized.frames[4].get(x, y), r.reference.frames[4].get(x - 2, y));
            }
        }
    }

    #[test]
    fn warp_boundary_follows_analytic_map() {
        let p = FixtureParams::default();
        let f = make_fixture(FixtureKind::LocalWarp, &p, 5).unwrap();
        let t = f.truth;
        for frame in [0, 3, 11] {
            let img = &f.synthesized.frames[frame];
            let c = t.origin_at(frame);
            for i in 0..36 {
                let th = TAU * i as f64 / 36.0;
                // Walk outward until the background level persists.
                let mut edge = 0.0;
                let mut r = t.size - WARP_BAND;
                while r < t.size + WARP_BAND {
                    let v = img.sample(c[0] + r * th.cos(), c[1] + r * th.sin());
                    if (v - BACKGROUND).abs() > 12.0 {
                        edge = r;
                    }
                    r += 0.05;
                }
                let expect = t.size + t.warp_offset(th, frame);
                assert!((edge - expect).abs() <= 1.5, "frame {frame} angle {th}: {edge} vs {expect}");
            }
        }
    }

    #[test]
    fn zero_amplitude_warp_is_identity() {
        let p = FixtureParams {
            amplitude: 0.0,
            ..FixtureParams::default()
        };
        let f = make_fixture(FixtureKind::LocalWarp, &p, 2).unwrap();
        assert_eq!(f.reference.luma_planes(), f.synthesized.luma_planes());
    }

    #[test]
    fn contour_instance_orders() {
        let e = ElasticParams::default();
        let inst = contour_instance(96, 96, 4).unwrap();
        let c0 = silhouette_contour(&inst.reference, inst.center).unwrap();
        let c1 = silhouette_contour(&inst.shifted, [inst.center[0] + inst.shift[0], inst.center[1] + inst.shift[1]]).unwrap();
        let c2 = silhouette_contour(&inst.deformed, inst.center).unwrap();
        assert!(elastic_distance(&c0, &c1, &e).unwrap() < elastic_distance(&c0, &c2, &e).unwrap());
    }
}
