use crate::error::{Error, Result};
use crate::image::Image;

/// Smallest level side kept in a spatial pyramid.
pub const MIN_LEVEL: usize = 32;
pub const DEFAULT_LEVELS: usize = 7;
pub const DEFAULT_FACTOR: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Multi-scale copies of one frame, finest first.
#[derive(Debug, Clone)]
pub struct Pyramid {
    levels: Vec<Image>,
    factor: f64,
}

impl Pyramid {
    pub fn levels(&self) -> &[Image] {
        &self.levels
    }

    pub fn level(&self, i: usize) -> &Image {
        &self.levels[i]
    }

    pub fn count(&self) -> usize {
        self.levels.len()
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }

    pub fn into_levels(self) -> Vec<Image> {
        self.levels
    }
}

/// Dimensions of every level for a `width`x`height` input, stopping before a
/// level would drop under `min_side`.
pub fn level_sizes(width: usize, height: usize, count: usize, factor: f64, min_side: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(count);
    if width < min_side || height < min_side || count == 0 {
        return out;
    }
    out.push((width, height));
    while out.len() < count {
        let (w, h) = *out.last().unwrap();
        let nw = (w as f64 * factor).round() as usize;
        let nh = (h as f64 * factor).round() as usize;
        if nw < min_side || nh < min_side {
            break;
        }
        out.push((nw, nh));
    }
    out
}

/// Gaussian-smoothed (sigma 1) bilinear pyramid.
pub fn build_pyramid(frame: &Image, count: usize, factor: f64) -> Result<Pyramid> {
    if frame.width() < MIN_LEVEL || frame.height() < MIN_LEVEL {
        return Err(Error::FrameTooSmall {
            width: frame.width(),
            height: frame.height(),
            min: MIN_LEVEL,
        });
    }
    if !(factor > 0.0 && factor < 1.0) || count == 0 {
        return Err(Error::InvalidParams("pyramid factor must lie in (0, 1) and count be positive".into()));
    }
    let sizes = level_sizes(frame.width(), frame.height(), count, factor, MIN_LEVEL);
    let mut levels = Vec::with_capacity(sizes.len());
    levels.push(frame.clone());
    for &(w, h) in &sizes[1..] {
        let next = levels.last().unwrap().gaussian_blur(1.0).resize_bilinear(w, h);
        levels.push(next);
    }
    Ok(Pyramid { levels, factor })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn widths_for_1024() {
        let s = level_sizes(1024, 768, 7, DEFAULT_FACTOR, MIN_LEVEL);
        let w: Vec<usize> = s.iter().map(|p| p.0).collect();
        assert_eq!(w, vec![1024, 724, 512, 362, 256, 181, 128]);
    }

    #[test]
    fn small_input_stops_early() {
        let p = build_pyramid(&Image::filled(64, 64, 3.0), 7, DEFAULT_FACTOR).unwrap();
        let w: Vec<usize> = p.levels().iter().map(Image::width).collect();
        assert_eq!(w, vec![64, 45, 32]);
        for l in p.levels() {
            assert!(l.data().iter().all(|&v| (v - 3.0).abs() < 1e-4));
        }
    }

    #[test]
    fn too_small() {
        assert!(matches!(
            build_pyramid(&Image::new(31, 40), 7, DEFAULT_FACTOR),
            Err(Error::FrameTooSmall { .. })
        ));
    }
}
