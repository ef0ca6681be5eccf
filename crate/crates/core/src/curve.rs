//! Planar curves and their square-root-velocity (SRV) representation.
//!
//! A curve `c` sampled uniformly on its parameter domain is mapped to
//! `q = c' / sqrt(|c'|)`. Under that map the elastic metric with stretch
//! weight 1/4 and bend weight 1 becomes the flat L2 metric, so the elastic
//! distance between two curves is the L2 distance between their SRV samples.
//! Other weightings are evaluated directly from the log-speed and direction
//! differences of the two curves.

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[inline]
fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

/// An ordered sequence of planar points, either open (parameter domain
/// `[0, 1]`) or closed (the circle).
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    points: Vec<Point>,
    closed: bool,
}

impl Curve {
    pub fn new(points: Vec<Point>, closed: bool) -> Result<Self> {
        let min = if closed { 3 } else { 2 };
        if points.len() < min {
            return Err(Error::InvalidCurve(if closed {
                "closed curves need at least 3 points"
            } else {
                "open curves need at least 2 points"
            }));
        }
        if points.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::InvalidCurve("non-finite coordinate"));
        }
        let curve = Self { points, closed };
        if !(curve.arc_length() > 0.0) {
            return Err(Error::DegenerateCurve);
        }
        Ok(curve)
    }

    pub fn open(points: Vec<Point>) -> Result<Self> {
        Self::new(points, false)
    }

    pub fn closed(points: Vec<Point>) -> Result<Self> {
        Self::new(points, true)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Lengths of the polyline segments, including the closing segment of a
    /// closed curve.
    fn segment_lengths(&self) -> Vec<f64> {
        let n = self.points.len();
        let segs = if self.closed { n } else { n - 1 };
        (0..segs)
            .map(|i| norm(sub(self.points[(i + 1) % n], self.points[i])))
            .collect()
    }

    pub fn arc_length(&self) -> f64 {
        self.segment_lengths().iter().sum()
    }

    pub fn translated(&self, v: Point) -> Curve {
        Curve {
            points: self.points.iter().map(|p| [p[0] + v[0], p[1] + v[1]]).collect(),
            closed: self.closed,
        }
    }

    pub fn scaled(&self, s: f64) -> Curve {
        Curve {
            points: self.points.iter().map(|p| [p[0] * s, p[1] * s]).collect(),
            closed: self.closed,
        }
    }

    /// Closed curve whose first point is the `k`-th point of this one.
    pub fn with_start(&self, k: usize) -> Curve {
        let n = self.points.len();
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            points.push(self.points[(i + k) % n]);
        }
        Curve {
            points,
            closed: self.closed,
        }
    }

    /// Same curve moved so that its first point sits at the origin and its
    /// arc length is one.
    pub fn normalized(&self) -> Result<Curve> {
        let len = self.arc_length();
        if !(len > 0.0) {
            return Err(Error::DegenerateCurve);
        }
        let origin = self.points[0];
        Ok(Curve {
            points: self
                .points
                .iter()
                .map(|p| [(p[0] - origin[0]) / len, (p[1] - origin[1]) / len])
                .collect(),
            closed: self.closed,
        })
    }
}

/// Resample `curve` to `n` points equally spaced along it. Open curves keep
/// both endpoints; closed curves keep the first point as seed.
///
/// Points are placed with a divider walk: every consecutive pair is the same
/// chord length apart, with the chord chosen so the walk lands exactly on the
/// end point (or returns to the seed). The output polygon is therefore
/// uniformly spaced in its own arc length, and resampling it again to `n`
/// points reproduces it.
pub fn resample_uniform(curve: &Curve, n: usize) -> Result<Curve> {
    let min = if curve.closed { 3 } else { 2 };
    if n < min {
        return Err(Error::InvalidParams(format!(
            "resample count {n} below minimum {min}"
        )));
    }
    let walker = Divider::new(curve);
    let total = walker.total;
    if !(total > 0.0) {
        return Err(Error::DegenerateCurve);
    }
    let steps = if curve.closed { n } else { n - 1 };

    // Solve end(h) = total: safeguarded secant inside a shrinking bracket.
    let mut h = total / steps as f64;
    let mut lo = 0.0f64;
    let mut hi = f64::INFINITY;
    let mut last: Option<(f64, f64)> = None;
    for _ in 0..200 {
        let Some(end) = walker.walk(h, steps, None) else {
            hi = h;
            last = None;
            h = 0.5 * (lo + h);
            continue;
        };
        let r = end - total;
        if r.abs() <= 1e-14 * total {
            break;
        }
        if r > 0.0 {
            hi = hi.min(h);
        } else {
            lo = lo.max(h);
        }
        if hi.is_finite() && hi - lo <= 1e-16 * total {
            break;
        }
        let proposal = match last {
            Some((hp, rp)) if rp != r => h - r * (h - hp) / (r - rp),
            _ => h * total / end,
        };
        last = Some((h, r));
        h = if proposal > lo && proposal < hi {
            proposal
        } else if hi.is_finite() {
            0.5 * (lo + hi)
        } else {
            2.0 * h
        };
    }

    let mut out = Vec::with_capacity(n);
    walker.walk(h, steps, Some(&mut out));
    out.truncate(n);
    while out.len() < n {
        // The final step can fall a rounding error short of the end.
        out.push(curve.points[if curve.closed { 0 } else { curve.points.len() - 1 }]);
    }
    if !curve.closed {
        out[n - 1] = curve.points[curve.points.len() - 1];
    }
    out[0] = curve.points[0];
    Ok(Curve {
        points: out,
        closed: curve.closed,
    })
}

struct Divider<'a> {
    points: &'a [Point],
    closed: bool,
    seg_len: Vec<f64>,
    total: f64,
}

impl<'a> Divider<'a> {
    fn new(curve: &'a Curve) -> Self {
        let seg_len = curve.segment_lengths();
        let total = seg_len.iter().sum();
        Self {
            points: &curve.points,
            closed: curve.closed,
            seg_len,
            total,
        }
    }

    fn segment(&self, k: usize) -> (Point, Point) {
        let m = self.points.len();
        let segs = self.seg_len.len();
        let k = k % segs;
        (self.points[k], self.points[(k + 1) % m])
    }

    /// Walk `steps` chords of length `h` from the first point, returning the
    /// arc position reached, or `None` when an open curve runs out. Closed
    /// curves may run into a second lap. Visited points are appended to `out`
    /// when given (the start point included).
    fn walk(&self, h: f64, steps: usize, mut out: Option<&mut Vec<Point>>) -> Option<f64> {
        let segs = self.seg_len.len();
        let max_seg = if self.closed { 2 * segs } else { segs };
        let mut k = 0usize;
        let mut t = 0.0f64;
        let mut arc_base = 0.0f64;
        let mut p = self.points[0];
        if let Some(o) = out.as_deref_mut() {
            o.push(p);
        }
        for _ in 0..steps {
            loop {
                if k >= max_seg {
                    return None;
                }
                let (a, b) = self.segment(k);
                let d = sub(b, a);
                let ap = sub(a, p);
                let dd = d[0] * d[0] + d[1] * d[1];
                let end_dist2 = {
                    let e = sub(b, p);
                    e[0] * e[0] + e[1] * e[1]
                };
                if dd > 0.0 && end_dist2 >= h * h {
                    let bq = d[0] * ap[0] + d[1] * ap[1];
                    let c = ap[0] * ap[0] + ap[1] * ap[1] - h * h;
                    let disc = (bq * bq - dd * c).max(0.0);
                    let root = ((-bq + disc.sqrt()) / dd).clamp(t, 1.0);
                    t = root;
                    p = [a[0] + t * d[0], a[1] + t * d[1]];
                    break;
                }
                arc_base += self.seg_len[k % segs];
                k += 1;
                t = 0.0;
            }
            if let Some(o) = out.as_deref_mut() {
                o.push(p);
            }
        }
        Some(arc_base + t * self.seg_len[k % segs])
    }
}

/// Square-root-velocity samples of a uniformly parameterized curve.
#[derive(Debug, Clone, PartialEq)]
pub struct SrvCurve {
    q: Vec<Point>,
    dk: f64,
    closed: bool,
}

impl SrvCurve {
    pub fn new(q: Vec<Point>, closed: bool) -> Result<Self> {
        let n = q.len();
        if n < 2 || (closed && n < 3) {
            return Err(Error::InvalidCurve("too few SRV samples"));
        }
        let dk = if closed {
            1.0 / n as f64
        } else {
            1.0 / (n - 1) as f64
        };
        Ok(Self { q, dk, closed })
    }

    pub fn q(&self) -> &[Point] {
        &self.q
    }

    pub fn dk(&self) -> f64 {
        self.dk
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Log speed `ln |c'(k)|` at every sample (`|q|^2` is the speed).
    pub fn log_speed(&self) -> Vec<f64> {
        self.q
            .iter()
            .map(|q| (q[0] * q[0] + q[1] * q[1]).ln())
            .collect()
    }

    /// Unit tangent direction at every sample.
    pub fn direction(&self) -> Vec<Point> {
        self.q
            .iter()
            .map(|q| {
                let r = norm(*q);
                [q[0] / r, q[1] / r]
            })
            .collect()
    }

    /// L2 norm over the parameter domain.
    pub fn l2_norm(&self) -> f64 {
        (self.q.iter().map(|q| q[0] * q[0] + q[1] * q[1]).sum::<f64>() * self.dk).sqrt()
    }
}

/// Resample to `n` points and take the SRV transform. Derivatives are
/// central differences; closed curves wrap around, open curves fall back to
/// one-sided differences at the endpoints.
pub fn to_srv(curve: &Curve, n: usize) -> Result<SrvCurve> {
    let c = resample_uniform(curve, n)?;
    let pts = &c.points;
    let dk = if c.closed {
        1.0 / n as f64
    } else {
        1.0 / (n - 1) as f64
    };
    let scale = curve.arc_length();
    let mut q = Vec::with_capacity(n);
    for i in 0..n {
        let d = if c.closed {
            let next = pts[(i + 1) % n];
            let prev = pts[(i + n - 1) % n];
            let s = sub(next, prev);
            [s[0] / (2.0 * dk), s[1] / (2.0 * dk)]
        } else if i == 0 {
            let s = sub(pts[1], pts[0]);
            [s[0] / dk, s[1] / dk]
        } else if i == n - 1 {
            let s = sub(pts[n - 1], pts[n - 2]);
            [s[0] / dk, s[1] / dk]
        } else {
            let s = sub(pts[i + 1], pts[i - 1]);
            [s[0] / (2.0 * dk), s[1] / (2.0 * dk)]
        };
        let speed = norm(d);
        if !(speed > scale * 1e-12) {
            return Err(Error::StationarySegment);
        }
        let r = speed.sqrt();
        q.push([d[0] / r, d[1] / r]);
    }
    Ok(SrvCurve {
        q,
        dk,
        closed: c.closed,
    })
}

/// Reconstruct a curve (starting at the origin) whose SRV transform is
/// `srv`. This inverts the central-difference operator used by [`to_srv`]
/// exactly: open curves by a leapfrog recursion seeded with the forward
/// difference, closed curves by stepping two nodes at a time around the
/// loop. For an even number of closed samples the offset between the even
/// and odd node chains is not fixed by the differences alone; it is chosen so
/// that consecutive chords have equal length, which is the property of every
/// curve produced by [`to_srv`].
pub fn from_srv(srv: &SrvCurve) -> Result<Curve> {
    let n = srv.q.len();
    let dk = srv.dk;
    let vel: Vec<Point> = srv
        .q
        .iter()
        .map(|q| {
            let r = norm(*q);
            [q[0] * r, q[1] * r]
        })
        .collect();

    let mut c = vec![[0.0f64; 2]; n];
    if !srv.closed {
        c[1] = [dk * vel[0][0], dk * vel[0][1]];
        for i in 1..n - 1 {
            c[i + 1] = [
                c[i - 1][0] + 2.0 * dk * vel[i][0],
                c[i - 1][1] + 2.0 * dk * vel[i][1],
            ];
        }
    } else {
        let step = |c: &mut [Point], from: usize| {
            let mid = (from + 1) % n;
            let to = (from + 2) % n;
            c[to] = [
                c[from][0] + 2.0 * dk * vel[mid][0],
                c[from][1] + 2.0 * dk * vel[mid][1],
            ];
        };
        if n % 2 == 1 {
            let mut node = 0;
            for _ in 0..n - 1 {
                step(&mut c, node);
                node = (node + 2) % n;
            }
        } else {
            // Two independent chains; the odd one starts at a trapezoid
            // estimate of c[1] and is then shifted rigidly.
            c[1] = [
                0.5 * dk * (vel[0][0] + vel[1][0]),
                0.5 * dk * (vel[0][1] + vel[1][1]),
            ];
            let mut even = 0;
            let mut odd = 1;
            for _ in 0..n / 2 - 1 {
                step(&mut c, even);
                step(&mut c, odd);
                even += 2;
                odd += 2;
            }
            equalize_chain_offset(&mut c);
        }
    }
    Curve::new(c, srv.closed)
}

/// Gauss-Newton on the 2-D offset of the odd-indexed nodes so that all
/// consecutive chords of the closed polygon have the same length.
fn equalize_chain_offset(c: &mut [Point]) {
    let n = c.len();
    let scale: f64 = (0..n).map(|i| norm(sub(c[(i + 1) % n], c[i]))).sum::<f64>() / n as f64;
    if !(scale > 0.0) {
        return;
    }
    for _ in 0..50 {
        let chords: Vec<Point> = (0..n).map(|i| sub(c[(i + 1) % n], c[i])).collect();
        // d|chord_i|^2 / d(offset) is +2 chord_i for even i (even -> odd
        // node) and -2 chord_i for odd i.
        let grad = |i: usize| -> Point {
            let s = if i % 2 == 0 { 2.0 } else { -2.0 };
            [s * chords[i][0], s * chords[i][1]]
        };
        let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in 0..n {
            let j = (i + 1) % n;
            let r = chords[i][0].powi(2) + chords[i][1].powi(2)
                - chords[j][0].powi(2)
                - chords[j][1].powi(2);
            let gi = grad(i);
            let gj = grad(j);
            let jac = [gi[0] - gj[0], gi[1] - gj[1]];
            a11 += jac[0] * jac[0];
            a12 += jac[0] * jac[1];
            a22 += jac[1] * jac[1];
            b1 += jac[0] * r;
            b2 += jac[1] * r;
        }
        let det = a11 * a22 - a12 * a12;
        if !(det.abs() > f64::EPSILON * (a11 * a22).abs().max(f64::MIN_POSITIVE)) {
            return;
        }
        let dx = -(a22 * b1 - a12 * b2) / det;
        let dy = -(a11 * b2 - a12 * b1) / det;
        for p in c.iter_mut().skip(1).step_by(2) {
            p[0] += dx;
            p[1] += dy;
        }
        if dx.hypot(dy) <= 1e-15 * scale {
            return;
        }
    }
}

/// Weights and discretization of the elastic metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElasticParams {
    /// Stretch (log-speed variation) penalty.
    pub a2: f64,
    /// Bend (direction variation) penalty.
    pub b2: f64,
    pub n_samples: usize,
    /// For closed curves, minimize over all cyclic seed shifts of the second
    /// curve.
    pub cyclic_align: bool,
    /// Scale both curves to unit arc length before comparing.
    pub normalize_length: bool,
}

impl Default for ElasticParams {
    fn default() -> Self {
        Self {
            a2: 0.25,
            b2: 1.0,
            n_samples: 128,
            cyclic_align: true,
            normalize_length: true,
        }
    }
}

impl ElasticParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.a2 >= 0.0 && self.b2 >= 0.0) || (self.a2 == 0.0 && self.b2 == 0.0) {
            return Err(Error::InvalidParams(
                "elastic weights must be non-negative and not both zero".into(),
            ));
        }
        if self.n_samples < 8 {
            return Err(Error::InvalidParams("n_samples must be at least 8".into()));
        }
        Ok(())
    }

    /// Weights under which the elastic metric is the flat L2 metric on SRV
    /// space.
    pub fn is_flat(&self) -> bool {
        self.a2 == 0.25 && self.b2 == 1.0
    }
}

/// Elastic dissimilarity between two curves of the same kind.
pub fn elastic_distance(c1: &Curve, c2: &Curve, params: &ElasticParams) -> Result<f64> {
    if c1.closed != c2.closed {
        return Err(Error::CurveKindMismatch);
    }
    params.validate()?;
    let (s1, s2) = if params.normalize_length {
        (
            to_srv(&c1.normalized()?, params.n_samples)?,
            to_srv(&c2.normalized()?, params.n_samples)?,
        )
    } else {
        (to_srv(c1, params.n_samples)?, to_srv(c2, params.n_samples)?)
    };
    Ok(srv_distance(&s1, &s2, params))
}

/// Distance between two SRV curves with equal sample counts.
pub fn srv_distance(s1: &SrvCurve, s2: &SrvCurve, params: &ElasticParams) -> f64 {
    let n = s1.q.len();
    assert_eq!(n, s2.q.len(), "SRV sample counts differ");
    let dk = s1.dk;

    let shifts = if s1.closed && params.cyclic_align { n } else { 1 };
    let best = if params.is_flat() {
        (0..shifts)
            .map(|s| {
                let rotated = s2.q[s..].iter().chain(&s2.q[..s]);
                s1.q.iter()
                    .zip(rotated)
                    .map(|(a, b)| (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2))
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min)
    } else {
        let phi1 = s1.log_speed();
        let phi2 = s2.log_speed();
        let ang1: Vec<f64> = s1.q.iter().map(|q| q[1].atan2(q[0])).collect();
        let ang2: Vec<f64> = s2.q.iter().map(|q| q[1].atan2(q[0])).collect();
        (0..shifts)
            .map(|s| {
                let mut acc = 0.0;
                for i in 0..n {
                    let j = (i + s) % n;
                    let u = phi1[i] - phi2[j];
                    let v = wrap_angle(ang1[i] - ang2[j]);
                    let w = (0.5 * (phi1[i] + phi2[j])).exp();
                    acc += (params.a2 * u * u + params.b2 * v * v) * w;
                }
                acc
            })
            .fold(f64::INFINITY, f64::min)
    };
    (best * dk).max(0.0).sqrt()
}

fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut a = a % (2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    } else if a <= -PI {
        a += 2.0 * PI;
    }
    a
}
