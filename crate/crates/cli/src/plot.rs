//! Standalone SVG line plots. Output depends only on the input data, so
//! identical runs produce identical bytes.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliError;

const WIDTH: f64 = 720.0;
const HEIGHT: f64 = 480.0;
const LEFT: f64 = 84.0;
const RIGHT: f64 = 180.0;
const TOP: f64 = 44.0;
const BOTTOM: f64 = 64.0;
const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    /// Draw without markers and dashed, e.g. for reference levels.
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            points,
            dashed: false,
        }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Axes {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub x_log: bool,
    pub y_log: bool,
}

struct Scale {
    log: bool,
    lo: f64,
    hi: f64,
}

impl Scale {
    fn fit(values: impl Iterator<Item = f64>, log: bool) -> Scale {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            let v = if log { v.log10() } else { v };
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if hi - lo <= 1e-12 * lo.abs().max(1.0) {
            let pad = if log { 0.5 } else { 0.5 * lo.abs().max(1.0) };
            lo -= pad;
            hi += pad;
        }
        Scale { log, lo, hi }
    }

    fn unit(&self, v: f64) -> f64 {
        let v = if self.log { v.log10() } else { v };
        (v - self.lo) / (self.hi - self.lo)
    }

    /// Tick positions in data coordinates.
    fn ticks(&self) -> Vec<f64> {
        if self.log {
            let (first, last) = (self.lo.ceil() as i32, self.hi.floor() as i32);
            let stride = ((last - first) / 8 + 1).max(1);
            let start = first + (-first).rem_euclid(stride);
            let mut ticks: Vec<f64> = (start..=last).step_by(stride as usize).map(|k| 10f64.powi(k)).collect();
            if ticks.is_empty() {
                ticks.push(10f64.powf(0.5 * (self.lo + self.hi)));
            }
            ticks
        } else {
            let raw = (self.hi - self.lo) / 5.0;
            let magnitude = 10f64.powf(raw.log10().floor());
            let step = [1.0, 2.0, 5.0, 10.0]
                .iter()
                .map(|m| m * magnitude)
                .find(|s| *s >= raw)
                .unwrap_or(10.0 * magnitude);
            let start = (self.lo / step).ceil() as i64;
            let stop = (self.hi / step).floor() as i64;
            (start..=stop).map(|i| i as f64 * step).collect()
        }
    }
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        let exponent = v.log10().round();
        if (v.log10() - exponent).abs() < 1e-9 {
            return format!("1e{exponent}");
        }
    }
    if v == 0.0 {
        "0".into()
    } else if v.abs() >= 1e4 || v.abs() < 1e-3 {
        format!("{v:.1e}")
    } else {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    }
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Renders the plot; points that cannot be shown (non-finite, or
/// nonpositive on a log axis) are dropped.
pub fn render_svg(series: &[Series], axes: &Axes) -> Result<String, CliError> {
    let visible: Vec<(&Series, Vec<(f64, f64)>)> = series
        .iter()
        .map(|s| {
            let points = s
                .points
                .iter()
                .copied()
                .filter(|&(x, y)| {
                    x.is_finite() && y.is_finite() && (!axes.x_log || x > 0.0) && (!axes.y_log || y > 0.0)
                })
                .collect();
            (s, points)
        })
        .collect();
    if visible.iter().all(|(_, p): &(&Series, Vec<(f64, f64)>)| p.is_empty()) {
        return Err(CliError::Plot(format!("nothing to plot for '{}': empty series", axes.title)));
    }
    let xs = Scale::fit(visible.iter().flat_map(|(_, p)| p.iter().map(|q| q.0)), axes.x_log);
    let ys = Scale::fit(visible.iter().flat_map(|(_, p)| p.iter().map(|q| q.1)), axes.y_log);
    let (pw, ph) = (WIDTH - LEFT - RIGHT, HEIGHT - TOP - BOTTOM);
    let px = |x: f64| LEFT + xs.unit(x) * pw;
    let py = |y: f64| TOP + (1.0 - ys.unit(y)) * ph;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="24" text-anchor="middle" font-size="15">{}</text>"#,
        LEFT + 0.5 * pw,
        escape(&axes.title)
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{LEFT}" y="{TOP}" width="{pw:.2}" height="{ph:.2}" fill="none" stroke="#333"/>"##
    );
    for t in xs.ticks() {
        let x = px(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{x:.2}" y1="{TOP}" x2="{x:.2}" y2="{:.2}" stroke="#ddd"/><text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"##,
            TOP + ph,
            TOP + ph + 18.0,
            tick_label(t, axes.x_log)
        );
    }
    for t in ys.ticks() {
        let y = py(t);
        let _ = writeln!(
            svg,
            r##"<line x1="{LEFT}" y1="{y:.2}" x2="{:.2}" y2="{y:.2}" stroke="#ddd"/><text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"##,
            LEFT + pw,
            LEFT - 6.0,
            y + 4.0,
            tick_label(t, axes.y_log)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
        LEFT + 0.5 * pw,
        HEIGHT - 18.0,
        escape(&axes.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text transform="translate(20 {:.2}) rotate(-90)" text-anchor="middle">{}</text>"#,
        TOP + 0.5 * ph,
        escape(&axes.y_label)
    );

    for (i, (s, points)) in visible.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = points.iter().map(|&(x, y)| format!("{:.2},{:.2}", px(x), py(y))).collect();
        let dash = if s.dashed { r#" stroke-dasharray="6 4""# } else { "" };
        let _ = writeln!(
            svg,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="1.6"{dash}/>"#,
            path.join(" ")
        );
        if !s.dashed && points.len() <= 80 {
            for &(x, y) in points {
                let _ = writeln!(svg, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, px(x), py(y));
            }
        }
        let ly = TOP + 16.0 + 20.0 * i as f64;
        let lx = LEFT + pw + 14.0;
        let _ = writeln!(
            svg,
            r#"<line x1="{lx:.2}" y1="{ly:.2}" x2="{:.2}" y2="{ly:.2}" stroke="{color}" stroke-width="2"{dash}/><text x="{:.2}" y="{:.2}">{}</text>"#,
            lx + 22.0,
            lx + 28.0,
            ly + 4.0,
            escape(&s.label)
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Writes [`render_svg`] output to `path`.
pub fn emit_svg_plot(series: &[Series], axes: &Axes, path: &Path) -> Result<(), CliError> {
    let svg = render_svg(series, axes)?;
    std::fs::write(path, svg).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn axes(x_log: bool, y_log: bool) -> Axes {
        Axes {
            title: "decay <test>".into(),
            x_label: "t".into(),
            y_label: "norm".into(),
            x_log,
            y_log,
        }
    }

    #[test]
    fn empty_series_is_an_error() {
        assert!(matches!(render_svg(&[], &axes(false, false)), Err(CliError::Plot(_))));
        let nonpositive = Series::new("zero", vec![(1.0, 0.0), (2.0, -1.0)]);
        assert!(render_svg(&[nonpositive], &axes(false, true)).is_err());
    }

    #[test]
    fn output_is_deterministic_and_escaped() {
        let series = vec![
            Series::new("a", (1..20).map(|i| (i as f64, (-0.3 * i as f64).exp())).collect()),
            Series::new("ref", vec![(1.0, 0.5), (19.0, 0.5)]).dashed(),
        ];
        let first = render_svg(&series, &axes(false, true)).unwrap();
        let second = render_svg(&series, &axes(false, true)).unwrap();
        assert_eq!(first, second);
        assert!(first.starts_with("<svg") && first.ends_with("</svg>\n"));
        assert!(first.contains("decay &lt;test&gt;"));
        assert!(first.contains("stroke-dasharray"));
    }

    #[test]
    fn ticks_cover_range() {
        let linear = Scale::fit([0.0, 9.3].into_iter(), false);
        let ticks = linear.ticks();
        assert_eq!(ticks.first().copied(), Some(0.0));
        assert!(ticks.len() >= 4 && *ticks.last().unwrap() <= 9.3);
        let log = Scale::fit([1e-3, 1e6].into_iter(), true);
        assert!(log.ticks().contains(&1.0));
        let single = Scale::fit([2.0].into_iter(), false);
        assert!(single.hi > single.lo);
        assert_eq!(tick_label(1e3, true), "1e3");
        assert_eq!(tick_label(0.25, false), "0.25");
    }
}
