//! Static SVG rendering of RD curves.

use std::fmt::Write as _;

use crate::bd::{Metric, RdCurve};
use crate::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 440.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 170.0;
const MARGIN_TOP: f64 = 30.0;
const MARGIN_BOTTOM: f64 = 55.0;

const PALETTE: [&str; 10] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Tick positions covering `[lo, hi]` with a 1-2-5 step.
fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let span = (hi - lo).max(1e-12);
    let raw = span / 6.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0]
        .iter()
        .map(|m| m * mag)
        .find(|s| *s >= raw)
        .unwrap_or(10.0 * mag);
    let first = (lo / step).ceil() as i64;
    let last = (hi / step).floor() as i64;
    (first..=last).map(|k| k as f64 * step).collect()
}

fn padded_range(values: impl Iterator<Item = f64>, floor_zero: bool) -> (f64, f64) {
    let (mut lo, mut hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi - lo < 1e-9 {
        lo -= 0.5;
        hi += 0.5;
    }
    let pad = (hi - lo) * 0.05;
    let lo = if floor_zero { 0.0 } else { lo - pad };
    (lo, hi + pad)
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

/// Renders curves of one metric: rate on x, quality on y, one legend entry
/// per curve. Each point is a `<circle class="marker">` tagged with its
/// series index.
pub fn render_svg(curves: &[&RdCurve], title: Option<&str>) -> Result<String> {
    let first = curves.first().ok_or_else(|| Error::Empty("no curves to plot".into()))?;
    let metric: Metric = first.metric;
    if let Some(c) = curves.iter().find(|c| c.metric != metric) {
        return Err(Error::Curve(format!("cannot mix {metric} and {} on one plot", c.metric)));
    }
    let points = || curves.iter().flat_map(|c| c.points().iter());
    let (x0, x1) = padded_range(points().map(|p| p.rate), true);
    let (y0, y1) = padded_range(points().map(|p| p.distortion), false);
    let (pw, ph) = (WIDTH - MARGIN_LEFT - MARGIN_RIGHT, HEIGHT - MARGIN_TOP - MARGIN_BOTTOM);
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    if let Some(t) = title {
        let _ = writeln!(
            s,
            r#"<text class="title" x="{:.1}" y="18" text-anchor="middle" font-size="14">{}</text>"#,
            MARGIN_LEFT + pw / 2.0,
            escape(t)
        );
    }
    let _ = writeln!(s, r##"<g class="grid" stroke="#dddddd" stroke-width="1">"##);
    for t in ticks(x0, x1) {
        let _ = writeln!(s, r#"<line x1="{0:.2}" y1="{1:.2}" x2="{0:.2}" y2="{2:.2}"/>"#, sx(t), MARGIN_TOP, MARGIN_TOP + ph);
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(s, r#"<line x1="{1:.2}" y1="{0:.2}" x2="{2:.2}" y2="{0:.2}"/>"#, sy(t), MARGIN_LEFT, MARGIN_LEFT + pw);
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<rect class="frame" x="{MARGIN_LEFT}" y="{MARGIN_TOP}" width="{pw}" height="{ph}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(s, r#"<g class="ticks">"#);
    for t in ticks(x0, x1) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
            sx(t),
            MARGIN_TOP + ph + 16.0,
            fmt_tick(t)
        );
    }
    for t in ticks(y0, y1) {
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 6.0,
            sy(t) + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(s, "</g>");
    let _ = writeln!(
        s,
        r#"<text class="xlabel" x="{:.1}" y="{:.1}" text-anchor="middle">Rate [bpp]</text>"#,
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 15.0
    );
    let _ = writeln!(
        s,
        r#"<text class="ylabel" x="18" y="{0:.1}" text-anchor="middle" transform="rotate(-90 18 {0:.1})">{1}</text>"#,
        MARGIN_TOP + ph / 2.0,
        escape(metric.axis_label())
    );

    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts: Vec<String> = c
            .points()
            .iter()
            .map(|p| format!("{:.2},{:.2}", sx(p.rate), sy(p.distortion)))
            .collect();
        let _ = writeln!(
            s,
            r#"<g class="series" data-series="{i}" data-codec="{}">"#,
            escape(&c.codec)
        );
        let _ = writeln!(
            s,
            r#"<polyline class="curve" points="{}" fill="none" stroke="{color}" stroke-width="1.5"/>"#,
            pts.join(" ")
        );
        for p in c.points() {
            let _ = writeln!(
                s,
                r#"<circle class="marker" data-series="{i}" cx="{:.2}" cy="{:.2}" r="3.5" fill="{color}"/>"#,
                sx(p.rate),
                sy(p.distortion)
            );
        }
        let _ = writeln!(s, "</g>");
        let ly = MARGIN_TOP + 10.0 + 18.0 * i as f64;
        let lx = MARGIN_LEFT + pw + 12.0;
        let _ = writeln!(
            s,
            r#"<g class="legend-entry" data-series="{i}"><line x1="{lx:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text class="legend" x="{:.1}" y="{:.1}">{}</text></g>"#,
            lx + 20.0,
            lx + 26.0,
            ly + 4.0,
            escape(&c.codec)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(name: &str, metric: Metric) -> RdCurve {
        RdCurve::from_pairs(name, metric, &[(0.1, 1.2), (0.3, 2.1), (0.5, 2.6), (0.8, 3.0)]).unwrap()
    }

    #[test]
    fn structure() {
        let c = curve("a<b", Metric::CiedeQuality);
        let svg = render_svg(&[&c], Some("test")).unwrap();
        assert_eq!(svg.matches(r#"<circle class="marker" data-series="0""#).count(), 4);
        assert!(svg.contains("5.0 − ΔE00"));
        assert!(svg.contains("Rate [bpp]"));
        assert!(svg.contains("a&lt;b"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn identical_curves_get_distinct_legends() {
        let (a, b) = (curve("x", Metric::Psnr), curve("y", Metric::Psnr));
        let svg = render_svg(&[&a, &b], None).unwrap();
        assert_eq!(svg.matches(r#"class="legend""#).count(), 2);
        let polylines: Vec<&str> = svg.lines().filter(|l| l.contains("polyline")).collect();
        let coords = |l: &str| l.split("points=\"").nth(1).unwrap().split('"').next().unwrap().to_string();
        assert_eq!(coords(polylines[0]), coords(polylines[1]));
        assert!(svg.contains("PSNR [dB]"));
    }

    #[test]
    fn errors() {
        assert!(matches!(render_svg(&[], None), Err(Error::Empty(_))));
        let (a, b) = (curve("x", Metric::Psnr), curve("y", Metric::MsssimDb));
        assert!(render_svg(&[&a, &b], None).is_err());
    }

    #[test]
    fn tick_steps() {
        assert_eq!(ticks(0.0, 1.0), vec![0.0, 0.2, 0.4, 0.6000000000000001, 0.8, 1.0]);
        assert!(ticks(26.0, 38.0).len() >= 4);
    }
}
