use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

use super::csv::format_float;
use super::run::ReportRow;

const WIDTH: f64 = 800.0;
const HEIGHT: f64 = 600.0;
const LEFT: f64 = 90.0;
const RIGHT: f64 = 170.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 70.0;
const PALETTE: [&str; 6] = [
    "#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b",
];

/// Quantity on the logarithmic y-axis.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Metric {
    /// `log10(marginal_error)`.
    #[default]
    Marginal,
    /// `log10(|duality_gap|)`.
    DualityGap,
}

impl Metric {
    fn value(self, r: &ReportRow) -> f64 {
        match self {
            Metric::Marginal => r.marginal_error,
            Metric::DualityGap => r.duality_gap.abs(),
        }
    }

    fn label(self) -> &'static str {
        match self {
            Metric::Marginal => "log10 marginal error",
            Metric::DualityGap => "log10 |duality gap|",
        }
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "marginal" => Ok(Metric::Marginal),
            "dgap" => Ok(Metric::DualityGap),
            other => Err(Error::Parse(format!("unknown metric {other:?}"))),
        }
    }
}

struct Series<'a> {
    algo: &'a str,
    /// (seconds, log10 value)
    points: Vec<(f64, f64)>,
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Short tick label with up to three significant digits.
fn tick_label(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s.is_empty() || s == "-0" {
        "0".to_string()
    } else {
        s.to_string()
    }
}

/// Renders report rows as an SVG plot of the chosen metric against wall
/// time, one polyline per algorithm. Rows whose metric is not a positive
/// finite number (failed cells, exact zeros) are skipped.
pub fn render_svg(rows: &[ReportRow], metric: Metric) -> Result<String> {
    let mut series: Vec<Series> = Vec::new();
    for r in rows {
        let idx = match series.iter().position(|s| s.algo == r.algo) {
            Some(i) => i,
            None => {
                series.push(Series {
                    algo: &r.algo,
                    points: Vec::new(),
                });
                series.len() - 1
            }
        };
        let v = metric.value(r);
        if v > 0.0 && v.is_finite() && r.wall_ms.is_finite() {
            series[idx].points.push((r.wall_ms / 1e3, v.log10()));
        }
    }
    series.retain(|s| !s.points.is_empty());
    if series.is_empty() {
        return Err(Error::Plot(
            "no plottable points: every cell failed or is zero".into(),
        ));
    }
    for s in &mut series {
        s.points.sort_by(|a, b| a.0.total_cmp(&b.0));
    }

    let all = series.iter().flat_map(|s| s.points.iter());
    let x_max = all.clone().fold(0.0f64, |m, p| m.max(p.0));
    let x_max = if x_max > 0.0 { x_max } else { 1.0 };
    let y_lo = all.clone().fold(f64::INFINITY, |m, p| m.min(p.1)).floor();
    let mut y_hi = all.fold(f64::NEG_INFINITY, |m, p| m.max(p.1)).ceil();
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;
    let px = |x: f64| LEFT + x / x_max * plot_w;
    let py = |y: f64| TOP + (y_hi - y) / (y_hi - y_lo) * plot_h;

    let mut svg = String::new();
    let w = &mut svg;
    // writing to a String cannot fail
    let _ = writeln!(
        w,
        r#"<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {WIDTH} {HEIGHT}" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        w,
        r#"<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        w,
        r#"<rect class="frame" x="{LEFT}" y="{TOP}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );

    // y ticks at integer powers of ten
    let span = (y_hi - y_lo) as i64;
    let step = (span / 10 + 1).max(1);
    let mut e = y_lo as i64;
    while e <= y_hi as i64 {
        let y = py(e as f64);
        let _ = writeln!(
            w,
            r##"<g class="ytick" data-log10="{e}"><line x1="{LEFT}" y1="{y:.3}" x2="{:.3}" y2="{y:.3}" stroke="#dddddd"/><text x="{:.3}" y="{:.3}" text-anchor="end">1e{e}</text></g>"##,
            LEFT + plot_w,
            LEFT - 6.0,
            y + 4.0
        );
        e += step;
    }
    // x ticks, linear in seconds
    for k in 0..=5 {
        let xv = x_max * k as f64 / 5.0;
        let x = px(xv);
        let _ = writeln!(
            w,
            r#"<g class="xtick"><line x1="{x:.3}" y1="{:.3}" x2="{x:.3}" y2="{:.3}" stroke="black"/><text x="{x:.3}" y="{:.3}" text-anchor="middle">{}</text></g>"#,
            TOP + plot_h,
            TOP + plot_h + 5.0,
            TOP + plot_h + 20.0,
            tick_label(xv)
        );
    }
    let _ = writeln!(
        w,
        r#"<text class="xlabel" x="{:.3}" y="{:.3}" text-anchor="middle">wall time (s)</text>"#,
        LEFT + plot_w / 2.0,
        HEIGHT - 20.0
    );
    let _ = writeln!(
        w,
        r#"<text class="ylabel" x="20" y="{:.3}" text-anchor="middle" transform="rotate(-90 20 {:.3})">{}</text>"#,
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0,
        metric.label()
    );

    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let algo = escape(s.algo);
        let pts: Vec<String> = s
            .points
            .iter()
            .map(|&(x, y)| format!("{:.3},{:.3}", px(x), py(y)))
            .collect();
        let _ = writeln!(
            w,
            r#"<polyline class="series" data-algo="{algo}" points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts.join(" ")
        );
        for &(x, y) in &s.points {
            let _ = writeln!(
                w,
                r#"<circle class="marker" data-algo="{algo}" data-x="{}" data-y="{}" cx="{:.3}" cy="{:.3}" r="3" fill="{color}"/>"#,
                format_float(x),
                format_float(y),
                px(x),
                py(y)
            );
        }
        let ly = TOP + 10.0 + 20.0 * k as f64;
        let lx = WIDTH - RIGHT + 15.0;
        let _ = writeln!(
            w,
            r#"<g class="legend" data-algo="{algo}"><line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"/><text x="{}" y="{}">{algo}</text></g>"#,
            lx + 25.0,
            lx + 32.0,
            ly + 4.0
        );
    }
    let _ = writeln!(w, "</svg>");
    Ok(svg)
}

/// Writes [`render_svg`] output to `path`.
pub fn emit_svg_plot(rows: &[ReportRow], metric: Metric, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let svg = render_svg(rows, metric)?;
    fs::write(path, svg).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(algo: &str, iter: usize, wall_ms: f64, err: f64, gap: f64) -> ReportRow {
        ReportRow {
            algo: algo.into(),
            iter,
            wall_ms,
            f: 0.0,
            marginal_error: err,
            duality_gap: gap,
        }
    }

    #[test]
    fn single_point_gives_one_marker() {
        let svg = render_svg(&[row("sinkhorn", 10, 3.0, 1e-3, 1e-5)], Metric::Marginal).unwrap();
        assert_eq!(svg.matches("class=\"marker\"").count(), 1);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert!(svg.contains("viewBox=\"0 0 800 600\""));
    }

    #[test]
    fn two_algorithms_two_polylines() {
        let rows = vec![
            row("sinkhorn", 10, 1.0, 1e-2, 1e-3),
            row("sinkhorn", 50, 5.0, 1e-4, 1e-5),
            row("splr", 10, 2.0, 1e-3, -1e-4),
            row("splr", 50, 9.0, 1e-9, 1e-10),
        ];
        let svg = render_svg(&rows, Metric::DualityGap).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert_eq!(
            svg.matches("class=\"legend\" data-algo=\"sinkhorn\"")
                .count(),
            1
        );
        assert_eq!(
            svg.matches("class=\"legend\" data-algo=\"splr\"").count(),
            1
        );
        assert!(svg.contains("data-y=\"-4.0000000000000000e0\""));
        // y ticks span -10 ..= -3
        assert!(svg.contains("data-log10=\"-10\"") && svg.contains("data-log10=\"-3\""));
    }

    #[test]
    fn failed_and_zero_points_are_skipped() {
        let rows = vec![
            row("splr", 10, f64::NAN, f64::NAN, f64::NAN),
            row("splr", 50, 4.0, 0.0, 0.0),
            row("sinkhorn", 50, 4.0, 0.5, 0.1),
        ];
        let svg = render_svg(&rows, Metric::Marginal).unwrap();
        assert_eq!(svg.matches("class=\"marker\"").count(), 1);
        assert!(!svg.contains("data-algo=\"splr\""));
    }

    #[test]
    fn all_failed_is_an_error() {
        let rows = vec![row("splr", 10, f64::NAN, f64::NAN, f64::NAN)];
        assert!(matches!(
            render_svg(&rows, Metric::Marginal),
            Err(Error::Plot(_))
        ));
        assert!(matches!(
            render_svg(&[], Metric::Marginal),
            Err(Error::Plot(_))
        ));
    }

    #[test]
    fn names_are_escaped() {
        let svg = render_svg(&[row("a<b&c", 1, 1.0, 0.1, 0.1)], Metric::Marginal).unwrap();
        assert!(svg.contains("a&lt;b&amp;c"));
    }

    #[test]
    fn metric_names() {
        assert_eq!("marginal".parse::<Metric>().unwrap(), Metric::Marginal);
        assert_eq!("dgap".parse::<Metric>().unwrap(), Metric::DualityGap);
        assert!("gap".parse::<Metric>().is_err());
        assert_eq!(tick_label(0.0), "0");
        assert_eq!(tick_label(0.25), "0.25");
        assert_eq!(tick_label(2.0), "2");
    }
}
