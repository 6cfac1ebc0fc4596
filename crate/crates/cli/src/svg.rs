//! Minimal standalone SVG plots.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_RIGHT: f64 = 20.0;
const MARGIN_TOP: f64 = 40.0;
const MARGIN_BOTTOM: f64 = 55.0;
const COLORS: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Line,
    Scatter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub kind: PlotKind,
    pub series: Vec<Series>,
}

/// Config hash and seed, written into the file as a comment.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Axis range padded by 5%, or by one unit when degenerate.
fn range(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if hi - lo < 1e-12 {
        (lo - 1.0, hi + 1.0)
    } else {
        let pad = 0.05 * (hi - lo);
        (lo - pad, hi + pad)
    }
}

fn ticks(lo: f64, hi: f64) -> Vec<f64> {
    let raw = (hi - lo) / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(10.0 * mag);
    let mut t = (lo / step).ceil() * step;
    let mut out = Vec::new();
    while t <= hi + 1e-9 * step {
        out.push(if t.abs() < 1e-12 * step { 0.0 } else { t });
        t += step;
    }
    out
}

fn fmt_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.to_string() }
}

/// Renders `plot` as an SVG document. Fails on an empty plot.
pub fn render(plot: &Plot, provenance: &Provenance) -> io::Result<String> {
    let finite = |s: &Series| s.points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect::<Vec<_>>();
    let all: Vec<(f64, f64)> = plot.series.iter().flat_map(finite).collect();
    if all.is_empty() {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, "nothing to plot"));
    }
    let (x0, x1) = range(all.iter().map(|p| p.0));
    let (y0, y1) = range(all.iter().map(|p| p.1));
    let pw = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let ph = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| MARGIN_TOP + (1.0 - (y - y0) / (y1 - y0)) * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, "<!-- config_hash={} seed={} -->", provenance.config_hash, provenance.seed);
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-family="sans-serif" font-size="15">{}</text>"#,
        WIDTH / 2.0,
        escape(&plot.title)
    );
    // axes
    let (bx, by) = (MARGIN_LEFT, MARGIN_TOP + ph);
    let _ = writeln!(
        s,
        r#"<path class="axes" d="M{bx:.2},{:.2} L{bx:.2},{by:.2} L{:.2},{by:.2}" stroke="black" fill="none"/>"#,
        MARGIN_TOP,
        MARGIN_LEFT + pw
    );
    for t in ticks(x0, x1) {
        let x = sx(t);
        let _ = writeln!(s, r#"<line x1="{x:.2}" y1="{by:.2}" x2="{x:.2}" y2="{:.2}" stroke="black"/>"#, by + 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">{}</text>"#,
            by + 18.0,
            fmt_tick(t)
        );
    }
    for t in ticks(y0, y1) {
        let y = sy(t);
        let _ = writeln!(s, r#"<line x1="{:.2}" y1="{y:.2}" x2="{bx:.2}" y2="{y:.2}" stroke="black"/>"#, bx - 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" text-anchor="end" font-family="sans-serif" font-size="11">{}</text>"#,
            bx - 8.0,
            y + 4.0,
            fmt_tick(t)
        );
    }
    let _ = writeln!(
        s,
        r#"<text class="x-label" x="{:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13">{}</text>"#,
        MARGIN_LEFT + pw / 2.0,
        HEIGHT - 12.0,
        escape(&plot.x_label)
    );
    let _ = writeln!(
        s,
        r#"<text class="y-label" x="18" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 18 {:.2})">{}</text>"#,
        MARGIN_TOP + ph / 2.0,
        MARGIN_TOP + ph / 2.0,
        escape(&plot.y_label)
    );

    for (i, series) in plot.series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts = finite(series);
        if pts.is_empty() {
            continue;
        }
        match plot.kind {
            PlotKind::Line => {
                let mut d = String::new();
                for (k, (x, y)) in pts.iter().enumerate() {
                    let _ = write!(d, "{}{:.2},{:.2}", if k == 0 { "M" } else { " L" }, sx(*x), sy(*y));
                }
                let _ = writeln!(s, r#"<path class="series" d="{d}" stroke="{color}" stroke-width="1.5" fill="none"/>"#);
            }
            PlotKind::Scatter => {
                for (x, y) in &pts {
                    let _ = writeln!(s, r#"<circle class="marker" cx="{:.2}" cy="{:.2}" r="3" fill="{color}"/>"#, sx(*x), sy(*y));
                }
            }
        }
    }
    if plot.series.len() > 1 {
        let _ = writeln!(s, r#"<g class="legend">"#);
        for (i, series) in plot.series.iter().enumerate() {
            let y = MARGIN_TOP + 12.0 + 16.0 * i as f64;
            let x = MARGIN_LEFT + pw - 140.0;
            let _ = writeln!(
                s,
                r#"<rect x="{x:.2}" y="{:.2}" width="10" height="10" fill="{}"/><text x="{:.2}" y="{:.2}" font-family="sans-serif" font-size="11">{}</text>"#,
                y - 9.0,
                COLORS[i % COLORS.len()],
                x + 15.0,
                y,
                escape(&series.label)
            );
        }
        let _ = writeln!(s, "</g>");
    }
    s.push_str("</svg>\n");
    Ok(s)
}

pub fn emit_plot(plot: &Plot, provenance: &Provenance, path: &Path) -> io::Result<()> {
    std::fs::write(path, render(plot, provenance)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prov() -> Provenance {
        Provenance {
            config_hash: "abc123".into(),
            seed: 7,
        }
    }

    fn plot(kind: PlotKind, series: Vec<Series>) -> Plot {
        Plot {
            title: "t".into(),
            x_label: "n".into(),
            y_label: "P_n".into(),
            kind,
            series,
        }
    }

    #[test]
    fn single_point_gets_one_marker() {
        let svg = render(&plot(PlotKind::Scatter, vec![Series::new("a", vec![(2.0, 3.0)])]), &prov()).unwrap();
        assert_eq!(svg.matches("<circle").count(), 1);
        assert!(svg.contains("config_hash=abc123 seed=7"));
        assert!(!svg.contains("legend"));
    }

    #[test]
    fn empty_plot_is_an_error() {
        assert!(render(&plot(PlotKind::Line, vec![Series::new("a", vec![])]), &prov()).is_err());
    }

    #[test]
    fn staircase_path_follows_the_values() {
        let values = [1.0, 1.0, 2.0, 3.0, 3.0];
        let pts: Vec<(f64, f64)> = values.iter().enumerate().map(|(n, v)| (n as f64, *v)).collect();
        let svg = render(&plot(PlotKind::Line, vec![Series::new("P_n", pts)]), &prov()).unwrap();
        let d = svg.split("class=\"series\" d=\"").nth(1).unwrap().split('"').next().unwrap();
        let ys: Vec<f64> = d
            .split(['M', 'L'])
            .filter(|s| !s.trim().is_empty())
            .map(|p| p.trim().split(',').nth(1).unwrap().parse().unwrap())
            .collect();
        assert_eq!(ys.len(), 5);
        // screen y grows downward: equal values share a row, growth moves up
        assert!((ys[0] - ys[1]).abs() < 1e-9 && (ys[3] - ys[4]).abs() < 1e-9);
        assert!(ys[2] < ys[1] && ys[3] < ys[2]);
        let step = (ys[1] - ys[2], ys[2] - ys[3]);
        assert!((step.0 - step.1).abs() < 0.02);
    }

    #[test]
    fn overlay_has_a_legend() {
        let svg = render(
            &plot(
                PlotKind::Line,
                vec![Series::new("P_n", vec![(0.0, 1.0), (1.0, 2.0)]), Series::new("P'_n", vec![(0.0, 1.0), (1.0, 1.0)])],
            ),
            &prov(),
        )
        .unwrap();
        assert!(svg.contains("class=\"legend\""));
        assert!(svg.contains("P&apos;_n") || svg.contains("P'_n"));
        assert_eq!(svg.matches("class=\"series\"").count(), 2);
    }
}
