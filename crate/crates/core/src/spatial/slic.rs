//! SLIC superpixels on a single intensity channel.

use crate::error::{Error, Result};
use crate::image::Image;

const ITERATIONS: usize = 10;

/// A per-pixel partition of a patch into superpixels. Labels are contiguous
/// from zero in raster order of first appearance.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperpixelLabeling {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    pub k: usize,
    pub compactness: f64,
}

/// Area and centroid of one label.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionStats {
    pub label: u32,
    pub area: usize,
    pub centroid: [f64; 2],
}

impl SuperpixelLabeling {
    /// Wrap an existing label map. Labels are renumbered to be contiguous.
    pub fn from_labels(width: usize, height: usize, labels: Vec<u32>) -> Self {
        assert_eq!(labels.len(), width * height);
        let mut out = Self {
            width,
            height,
            labels,
            k: 0,
            compactness: 0.0,
        };
        out.relabel();
        out.k = out.label_count();
        out
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    #[inline]
    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    pub fn label_count(&self) -> usize {
        self.labels.iter().map(|&l| l as usize + 1).max().unwrap_or(0)
    }

    pub fn region_stats(&self) -> Vec<RegionStats> {
        let n = self.label_count();
        let mut area = vec![0usize; n];
        let mut sx = vec![0f64; n];
        let mut sy = vec![0f64; n];
        for y in 0..self.height {
            for x in 0..self.width {
                let l = self.label(x, y) as usize;
                area[l] += 1;
                sx[l] += x as f64;
                sy[l] += y as f64;
            }
        }
        (0..n)
            .filter(|&l| area[l] > 0)
            .map(|l| RegionStats {
                label: l as u32,
                area: area[l],
                centroid: [sx[l] / area[l] as f64, sy[l] / area[l] as f64],
            })
            .collect()
    }

    /// Number of 4-connected components of each label.
    pub fn component_counts(&self) -> Vec<usize> {
        let comps = components(self.width, self.height, &self.labels);
        let mut counts = vec![0usize; self.label_count()];
        for c in &comps.comp_label {
            counts[*c as usize] += 1;
        }
        counts
    }

    fn relabel(&mut self) {
        let mut map = std::collections::HashMap::new();
        for l in self.labels.iter_mut() {
            let next = map.len() as u32;
            *l = *map.entry(*l).or_insert(next);
        }
    }
}

struct Components {
    comp_of: Vec<usize>,
    comp_label: Vec<u32>,
    comp_size: Vec<usize>,
}

fn components(w: usize, h: usize, labels: &[u32]) -> Components {
    let mut comp_of = vec![usize::MAX; w * h];
    let mut comp_label = Vec::new();
    let mut comp_size = Vec::new();
    let mut stack = Vec::new();
    for start in 0..w * h {
        if comp_of[start] != usize::MAX {
            continue;
        }
        let id = comp_label.len();
        let lab = labels[start];
        comp_of[start] = id;
        stack.push(start);
        let mut size = 0;
        while let Some(p) = stack.pop() {
            size += 1;
            let (x, y) = (p % w, p / w);
            let mut visit = |q: usize| {
                if comp_of[q] == usize::MAX && labels[q] == lab {
                    comp_of[q] = id;
                    stack.push(q);
                }
            };
            if x > 0 {
                visit(p - 1);
            }
            if x + 1 < w {
                visit(p + 1);
            }
            if y > 0 {
                visit(p - w);
            }
            if y + 1 < h {
                visit(p + w);
            }
        }
        comp_label.push(lab);
        comp_size.push(size);
    }
    Components {
        comp_of,
        comp_label,
        comp_size,
    }
}

/// Keep the largest 4-connected component of every label and merge every
/// other component into the largest adjacent region.
fn enforce_connectivity(w: usize, h: usize, labels: &mut [u32]) {
    loop {
        let comps = components(w, h, labels);
        let n_comp = comps.comp_label.len();
        let max_label = comps.comp_label.iter().copied().max().unwrap_or(0) as usize;
        let mut keeper = vec![usize::MAX; max_label + 1];
        for c in 0..n_comp {
            let l = comps.comp_label[c] as usize;
            if keeper[l] == usize::MAX || comps.comp_size[c] > comps.comp_size[keeper[l]] {
                keeper[l] = c;
            }
        }
        let mut orphans: Vec<usize> = (0..n_comp)
            .filter(|&c| keeper[comps.comp_label[c] as usize] != c)
            .collect();
        if orphans.is_empty() {
            return;
        }
        orphans.sort_by_key(|&c| (comps.comp_size[c], c));

        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
        for y in 0..h {
            for x in 0..w {
                let a = comps.comp_of[y * w + x];
                if x + 1 < w {
                    let b = comps.comp_of[y * w + x + 1];
                    if a != b {
                        adjacency[a].push(b);
                        adjacency[b].push(a);
                    }
                }
                if y + 1 < h {
                    let b = comps.comp_of[(y + 1) * w + x];
                    if a != b {
                        adjacency[a].push(b);
                        adjacency[b].push(a);
                    }
                }
            }
        }

        let mut parent: Vec<usize> = (0..n_comp).collect();
        let mut size = comps.comp_size.clone();
        fn find(parent: &mut [usize], mut c: usize) -> usize {
            while parent[c] != c {
                parent[c] = parent[parent[c]];
                c = parent[c];
            }
            c
        }
        for &o in &orphans {
            let root_o = find(&mut parent, o);
            let mut best: Option<usize> = None;
            for &nb in &adjacency[o] {
                let r = find(&mut parent, nb);
                if r == root_o {
                    continue;
                }
                best = match best {
                    Some(b) if size[b] > size[r] || (size[b] == size[r] && b <= r) => Some(b),
                    _ => Some(r),
                };
            }
            if let Some(target) = best {
                parent[root_o] = target;
                size[target] += size[root_o];
            }
        }
        let mut changed = false;
        for p in 0..w * h {
            let c = comps.comp_of[p];
            let root = find(&mut parent, c);
            let lab = comps.comp_label[root];
            if labels[p] != lab {
                labels[p] = lab;
                changed = true;
            }
        }
        if !changed {
            return;
        }
    }
}

/// Segment `patch` into roughly `k` superpixels. Clustering runs in
/// (intensity, x, y) with the spatial term weighted by `compactness / S`,
/// `S = sqrt(area / k)`.
pub fn slic_segment(patch: &Image, k: usize, compactness: f64) -> Result<SuperpixelLabeling> {
    let (w, h) = (patch.width(), patch.height());
    let area = w * h;
    if k == 0 || !(compactness > 0.0) {
        return Err(Error::InvalidParams(
            "superpixel count and compactness must be positive".into(),
        ));
    }
    if k > area {
        return Err(Error::TooManySuperpixels);
    }
    let step = (area as f64 / k as f64).sqrt();
    let nx = ((k as f64 * w as f64 / h as f64).sqrt().round() as usize).clamp(1, w);
    let ny = ((k as f64 / nx as f64).round() as usize).clamp(1, h);

    let grad = |x: usize, y: usize| -> f32 {
        let gx = patch.get_clamped(x as isize + 1, y as isize) - patch.get_clamped(x as isize - 1, y as isize);
        let gy = patch.get_clamped(x as isize, y as isize + 1) - patch.get_clamped(x as isize, y as isize - 1);
        gx * gx + gy * gy
    };

    // Cluster centers: (intensity, x, y).
    let mut centers: Vec<[f64; 3]> = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let cx = (((i as f64 + 0.5) * w as f64 / nx as f64) as usize).min(w - 1);
            let cy = (((j as f64 + 0.5) * h as f64 / ny as f64) as usize).min(h - 1);
            let (mut bx, mut by, mut bg) = (cx, cy, grad(cx, cy));
            for dy in -1isize..=1 {
                for dx in -1isize..=1 {
                    let xx = cx as isize + dx;
                    let yy = cy as isize + dy;
                    if xx < 0 || yy < 0 || xx >= w as isize || yy >= h as isize {
                        continue;
                    }
                    let g = grad(xx as usize, yy as usize);
                    if g < bg {
                        bg = g;
                        bx = xx as usize;
                        by = yy as usize;
                    }
                }
            }
            centers.push([f64::from(patch.get(bx, by)), bx as f64, by as f64]);
        }
    }

    let spatial_weight = (compactness / step).powi(2);
    let radius = step.ceil() as isize;
    let mut labels = vec![u32::MAX; area];
    let mut dist = vec![f64::INFINITY; area];
    for _ in 0..ITERATIONS {
        labels.iter_mut().for_each(|l| *l = u32::MAX);
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        for (ci, c) in centers.iter().enumerate() {
            let x0 = (c[1].round() as isize - radius).max(0) as usize;
            let x1 = ((c[1].round() as isize + radius) as usize).min(w - 1);
            let y0 = (c[2].round() as isize - radius).max(0) as usize;
            let y1 = ((c[2].round() as isize + radius) as usize).min(h - 1);
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let dc = f64::from(patch.get(x, y)) - c[0];
                    let ds = (x as f64 - c[1]).powi(2) + (y as f64 - c[2]).powi(2);
                    let d = dc * dc + ds * spatial_weight;
                    let p = y * w + x;
                    if d < dist[p] {
                        dist[p] = d;
                        labels[p] = ci as u32;
                    }
                }
            }
        }
        // Pixels no search window reached go to the nearest center.
        for p in 0..area {
            if labels[p] != u32::MAX {
                continue;
            }
            let (x, y) = ((p % w) as f64, (p / w) as f64);
            let v = f64::from(patch.data()[p]);
            let mut best = (f64::INFINITY, 0u32);
            for (ci, c) in centers.iter().enumerate() {
                let d = (v - c[0]).powi(2) + ((x - c[1]).powi(2) + (y - c[2]).powi(2)) * spatial_weight;
                if d < best.0 {
                    best = (d, ci as u32);
                }
            }
            labels[p] = best.1;
        }
        let mut sums = vec![[0f64; 4]; centers.len()];
        for p in 0..area {
            let s = &mut sums[labels[p] as usize];
            s[0] += f64::from(patch.data()[p]);
            s[1] += (p % w) as f64;
            s[2] += (p / w) as f64;
            s[3] += 1.0;
        }
        for (c, s) in centers.iter_mut().zip(&sums) {
            if s[3] > 0.0 {
                *c = [s[0] / s[3], s[1] / s[3], s[2] / s[3]];
            }
        }
    }

    enforce_connectivity(w, h, &mut labels);
    let mut out = SuperpixelLabeling {
        width: w,
        height: h,
        labels,
        k,
        compactness,
    };
    out.relabel();
    Ok(out)
}
