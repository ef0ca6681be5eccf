//! Single-channel floating point image planes and the handful of filters the
//! analysis stages share.

/// A row-major single-channel image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Self {
        assert_eq!(data.len(), width * height, "plane size does not match dimensions");
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_luma(width: usize, height: usize, luma: &[u8]) -> Self {
        assert_eq!(luma.len(), width * height);
        Self {
            width,
            height,
            data: luma.iter().map(|&v| f32::from(v)).collect(),
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn same_size(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: f32) {
        self.data[y * self.width + x] = v;
    }

    /// Pixel access with clamp-to-edge for out of range coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let xc = x.clamp(0, self.width as isize - 1) as usize;
        let yc = y.clamp(0, self.height as isize - 1) as usize;
        self.data[yc * self.width + xc]
    }

    /// Bilinear sample at a sub-pixel position, clamped to the frame.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let xf = x.clamp(0.0, (self.width - 1) as f64);
        let yf = y.clamp(0.0, (self.height - 1) as f64);
        let x0 = xf.floor() as usize;
        let y0 = yf.floor() as usize;
        let x1 = (x0 + 1).min(self.width - 1);
        let y1 = (y0 + 1).min(self.height - 1);
        let ax = xf - x0 as f64;
        let ay = yf - y0 as f64;
        let top = f64::from(self.get(x0, y0)) * (1.0 - ax) + f64::from(self.get(x1, y0)) * ax;
        let bot = f64::from(self.get(x0, y1)) * (1.0 - ax) + f64::from(self.get(x1, y1)) * ax;
        top * (1.0 - ay) + bot * ay
    }

    /// Copy of the `w`x`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Image {
        assert!(x0 + w <= self.width && y0 + h <= self.height);
        Image::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y))
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Image {
        Image {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn max_value(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    /// Separable Gaussian blur with clamp-to-edge borders. The kernel is
    /// truncated at 3 sigma.
    pub fn gaussian_blur(&self, sigma: f64) -> Image {
        if sigma <= 0.0 {
            return self.clone();
        }
        let radius = (3.0 * sigma).ceil() as isize;
        let mut kernel: Vec<f64> = (-radius..=radius)
            .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let total: f64 = kernel.iter().sum();
        kernel.iter_mut().for_each(|k| *k /= total);

        let (w, h) = (self.width, self.height);
        let mut tmp = vec![0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0f64;
                for (k, weight) in kernel.iter().enumerate() {
                    let xx = x as isize + k as isize - radius;
                    acc += weight * f64::from(self.get_clamped(xx, y as isize));
                }
                tmp[y * w + x] = acc as f32;
            }
        }
        let tmp = Image::from_vec(w, h, tmp);
        let mut out = vec![0f32; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0f64;
                for (k, weight) in kernel.iter().enumerate() {
                    let yy = y as isize + k as isize - radius;
                    acc += weight * f64::from(tmp.get_clamped(x as isize, yy));
                }
                out[y * w + x] = acc as f32;
            }
        }
        Image::from_vec(w, h, out)
    }

    /// Bilinear resample to the given size using pixel-center alignment.
    pub fn resize_bilinear(&self, new_w: usize, new_h: usize) -> Image {
        let sx = self.width as f64 / new_w as f64;
        let sy = self.height as f64 / new_h as f64;
        Image::from_fn(new_w, new_h, |x, y| {
            let fx = (x as f64 + 0.5) * sx - 0.5;
            let fy = (y as f64 + 0.5) * sy - 0.5;
            self.sample(fx, fy) as f32
        })
    }

    /// Central-difference gradients (one-sided at the borders).
    pub fn gradients(&self) -> (Image, Image) {
        let (w, h) = (self.width, self.height);
        let mut gx = Image::new(w, h);
        let mut gy = Image::new(w, h);
        for y in 0..h {
            for x in 0..w {
                let dx = if w < 2 {
                    0.0
                } else if x == 0 {
                    self.get(1, y) - self.get(0, y)
                } else if x == w - 1 {
                    self.get(w - 1, y) - self.get(w - 2, y)
                } else {
                    0.5 * (self.get(x + 1, y) - self.get(x - 1, y))
                };
                let dy = if h < 2 {
                    0.0
                } else if y == 0 {
                    self.get(x, 1) - self.get(x, 0)
                } else if y == h - 1 {
                    self.get(x, h - 1) - self.get(x, h - 2)
                } else {
                    0.5 * (self.get(x, y + 1) - self.get(x, y - 1))
                };
                gx.set(x, y, dx);
                gy.set(x, y, dy);
            }
        }
        (gx, gy)
    }

    /// 3x3 median filter with clamp-to-edge borders.
    pub fn median3x3(&self) -> Image {
        let mut window = [0f32; 9];
        Image::from_fn(self.width, self.height, |x, y| {
            let mut k = 0;
            for dy in -1..=1 {
                for dx in -1..=1 {
                    window[k] = self.get_clamped(x as isize + dx, y as isize + dy);
                    k += 1;
                }
            }
            window.sort_unstable_by(f32::total_cmp);
            window[4]
        })
    }
}

/// Summed-area table with one row and column of zero padding.
#[derive(Debug, Clone)]
pub struct IntegralImage {
    width: usize,
    height: usize,
    sums: Vec<f64>,
}

impl IntegralImage {
    pub fn new(img: &Image) -> Self {
        Self::from_values(img.width(), img.height(), |x, y| f64::from(img.get(x, y)))
    }

    pub fn from_values(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let stride = width + 1;
        let mut sums = vec![0f64; stride * (height + 1)];
        for y in 0..height {
            let mut row = 0.0;
            for x in 0..width {
                row += f(x, y);
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Self {
            width,
            height,
            sums,
        }
    }

    /// Sum over the half-open box `[x0, x1) x [y0, y1)`, clipped to the image.
    #[inline]
    pub fn box_sum(&self, x0: isize, y0: isize, x1: isize, y1: isize) -> f64 {
        let cx = |v: isize| v.clamp(0, self.width as isize) as usize;
        let cy = |v: isize| v.clamp(0, self.height as isize) as usize;
        let (x0, x1, y0, y1) = (cx(x0), cx(x1), cy(y0), cy(y1));
        if x1 <= x0 || y1 <= y0 {
            return 0.0;
        }
        let s = self.width + 1;
        self.sums[y1 * s + x1] - self.sums[y0 * s + x1] - self.sums[y1 * s + x0]
            + self.sums[y0 * s + x0]
    }
}
