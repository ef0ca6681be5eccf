//! Minimal scatter-plot SVG: axes, ticks, points and an optional logistic
//! curve.

use std::fmt::Write as _;

use crate::regression::LogisticFit;

const W: f64 = 480.0;
const H: f64 = 360.0;
const MARGIN: f64 = 48.0;

fn range(v: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = v
        .filter(|x| x.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-12 {
        return (lo - 0.5, hi + 0.5);
    }
    let pad = 0.05 * (hi - lo);
    (lo - pad, hi + pad)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Points are `(x, y)`; non-finite points are skipped.
pub fn scatter_svg(points: &[(f64, f64)], curve: Option<&LogisticFit>, x_label: &str, y_label: &str) -> String {
    let (x0, x1) = range(points.iter().map(|p| p.0));
    let (y0, y1) = range(points.iter().map(|p| p.1));
    let px = |x: f64| MARGIN + (x - x0) / (x1 - x0) * (W - 2.0 * MARGIN);
    let py = |y: f64| H - MARGIN - (y - y0) / (y1 - y0) * (H - 2.0 * MARGIN);

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}" font-family="sans-serif" font-size="11">"#
    );
    let _ = writeln!(s, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let (l, r, t, b) = (MARGIN, W - MARGIN, MARGIN, H - MARGIN);
    let _ = writeln!(s, r#"<path d="M{l} {t} L{l} {b} L{r} {b}" stroke="black" fill="none"/>"#);
    for i in 0..=4 {
        let f = i as f64 / 4.0;
        let (xv, yv) = (x0 + f * (x1 - x0), y0 + f * (y1 - y0));
        let (xp, yp) = (px(xv), py(yv));
        let _ = writeln!(s, r#"<line x1="{xp:.1}" y1="{b}" x2="{xp:.1}" y2="{:.1}" stroke="black"/>"#, b + 4.0);
        let _ = writeln!(s, r#"<text x="{xp:.1}" y="{:.1}" text-anchor="middle">{xv:.3}</text>"#, b + 16.0);
        let _ = writeln!(s, r#"<line x1="{:.1}" y1="{yp:.1}" x2="{l}" y2="{yp:.1}" stroke="black"/>"#, l - 4.0);
        let _ = writeln!(s, r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{yv:.2}</text>"#, l - 6.0, yp + 4.0);
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{}</text>"#,
        W / 2.0,
        H - 8.0,
        escape(x_label)
    );
    let _ = writeln!(
        s,
        r#"<text x="14" y="{:.1}" text-anchor="middle" transform="rotate(-90 14 {:.1})">{}</text>"#,
        H / 2.0,
        H / 2.0,
        escape(y_label)
    );
    for &(x, y) in points.iter().filter(|p| p.0.is_finite() && p.1.is_finite()) {
        let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue"/>"#, px(x), py(y));
    }
    if let Some(fit) = curve {
        let mut d = String::new();
        for i in 0..=100 {
            let x = x0 + (x1 - x0) * i as f64 / 100.0;
            let y = fit.apply(x);
            if !y.is_finite() {
                continue;
            }
            let yp = py(y).clamp(t, b);
            let _ = write!(d, "{}{:.2} {:.2} ", if d.is_empty() { "M" } else { "L" }, px(x), yp);
        }
        if !d.is_empty() {
            let _ = writeln!(s, r#"<path d="{}" stroke="crimson" fill="none" stroke-width="1.5"/>"#, d.trim_end());
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn emits_points_and_curve() {
        let pts = [(0.0, 1.0), (1.0, 2.0), (2.0, f64::NAN)];
        let fit = LogisticFit {
            beta1: 3.0,
            beta2: 1.0,
            beta3: 1.0,
        };
        let s = scatter_svg(&pts, Some(&fit), "predicted", "DMOS <x>");
        assert!(s.starts_with("<svg"));
        assert!(s.trim_end().ends_with("</svg>"));
        assert_eq!(s.matches("<circle").count(), 2);
        assert!(s.contains("stroke=\"crimson\""));
        assert!(s.contains("DMOS &lt;x&gt;"));
        assert!(!scatter_svg(&[], None, "x", "y").contains("<circle"));
    }
}
