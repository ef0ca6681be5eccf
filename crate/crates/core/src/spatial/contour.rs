//! Outer-boundary tracing of labelled regions (Moore neighbourhood).

use crate::curve::{Curve, Point};
use crate::error::Result;

use super::slic::SuperpixelLabeling;

/// Clockwise (as displayed, y pointing down) Moore neighbourhood starting
/// west.
const DIRS: [(isize, isize); 8] = [
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
];

fn dir_index(dx: isize, dy: isize) -> usize {
    DIRS.iter()
        .position(|&d| d == (dx, dy))
        .expect("neighbouring pixels differ by a unit step")
}

/// Closed outer contour of one label, as pixel-center coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionContour {
    pub label: u32,
    /// Counter-clockwise as displayed (y axis pointing down); the first
    /// point is the topmost-leftmost pixel of the region.
    pub points: Vec<Point>,
}

impl RegionContour {
    pub fn to_curve(&self) -> Result<Curve> {
        Curve::closed(self.points.clone())
    }
}

/// Trace the outer boundary of every label.
pub fn extract_contours(labeling: &SuperpixelLabeling) -> Vec<RegionContour> {
    let (w, h) = (labeling.width(), labeling.height());
    let n = labeling.label_count();
    let mut starts = vec![None; n];
    for y in 0..h {
        for x in 0..w {
            let l = labeling.label(x, y) as usize;
            if starts[l].is_none() {
                starts[l] = Some((x, y));
            }
        }
    }
    starts
        .iter()
        .enumerate()
        .filter_map(|(l, s)| s.map(|s| (l as u32, s)))
        .map(|(label, start)| RegionContour {
            label,
            points: trace(labeling, label, start),
        })
        .collect()
}

fn trace(labeling: &SuperpixelLabeling, label: u32, start: (usize, usize)) -> Vec<Point> {
    let (w, h) = (labeling.width() as isize, labeling.height() as isize);
    let inside = |x: isize, y: isize| x >= 0 && y >= 0 && x < w && y < h && labeling.label(x as usize, y as usize) == label;

    let s = (start.0 as isize, start.1 as isize);
    // The west neighbour of the first raster pixel is never in the region.
    let mut back = 0usize;
    let mut cur = s;
    let mut path = vec![s];
    let mut first_move: Option<(isize, isize)> = None;

    // Bounded by the number of region-pixel / entry-direction states.
    for _ in 0..(8 * (w * h) as usize + 8) {
        let mut next = None;
        for k in 1..=8 {
            let d = (back + k) % 8;
            let cand = (cur.0 + DIRS[d].0, cur.1 + DIRS[d].1);
            if inside(cand.0, cand.1) {
                let prev = (back + k - 1) % 8;
                let prev_pos = (cur.0 + DIRS[prev].0, cur.1 + DIRS[prev].1);
                next = Some((cand, dir_index(prev_pos.0 - cand.0, prev_pos.1 - cand.1)));
                break;
            }
        }
        let Some((cand, new_back)) = next else {
            break; // isolated pixel
        };
        if cur == s {
            match first_move {
                None => first_move = Some(cand),
                Some(f) if f == cand => break,
                _ => {}
            }
        }
        path.push(cand);
        cur = cand;
        back = new_back;
    }
    // The walk ends by re-entering the start; drop that duplicate.
    if path.len() > 1 && path.last() == Some(&s) {
        path.pop();
    }
    // Traced clockwise as displayed; reverse to counter-clockwise keeping the
    // start point first.
    path[1..].reverse();
    path.into_iter().map(|(x, y)| [x as f64, y as f64]).collect()
}

/// Signed shoelace area in pixel coordinates; negative for contours that run
/// counter-clockwise as displayed.
pub fn signed_area(points: &[Point]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let a = points[i];
        let b = points[(i + 1) % n];
        acc += a[0] * b[1] - b[0] * a[1];
    }
    0.5 * acc
}
