//! Minimal SVG line charts for experiment artifacts: polyline series over
//! numeric axes, optional dashed threshold lines, and a small legend. No
//! plotting dependency — the files are written directly.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

const WIDTH: f64 = 960.0;
const HEIGHT: f64 = 540.0;
const MARGIN_LEFT: f64 = 78.0;
const MARGIN_RIGHT: f64 = 24.0;
const MARGIN_TOP: f64 = 48.0;
const MARGIN_BOTTOM: f64 = 64.0;

/// Default line palette, cycled when a series has no explicit color.
const PALETTE: [&str; 8] = [
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
];

#[derive(Debug, Clone)]
pub struct Series {
    pub label: String,
    /// CSS color; empty string picks from the palette.
    pub color: String,
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Series {
            label: label.into(),
            color: String::new(),
            points,
        }
    }

    pub fn from_values(label: impl Into<String>, values: &[f64]) -> Self {
        Series::new(
            label,
            values.iter().enumerate().map(|(i, &v)| (i as f64, v)).collect(),
        )
    }
}

/// A dashed horizontal reference line (e.g. a power threshold).
#[derive(Debug, Clone)]
pub struct Threshold {
    pub label: String,
    pub value: f64,
    pub color: String,
}

#[derive(Debug, Clone, Default)]
pub struct Chart {
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub series: Vec<Series>,
    pub thresholds: Vec<Threshold>,
}

impl Chart {
    pub fn new(
        title: impl Into<String>,
        x_label: impl Into<String>,
        y_label: impl Into<String>,
    ) -> Self {
        Chart {
            title: title.into(),
            x_label: x_label.into(),
            y_label: y_label.into(),
            series: Vec::new(),
            thresholds: Vec::new(),
        }
    }

    pub fn with_series(mut self, series: Series) -> Self {
        self.series.push(series);
        self
    }

    pub fn with_threshold(mut self, label: impl Into<String>, value: f64) -> Self {
        self.thresholds.push(Threshold {
            label: label.into(),
            value,
            color: "#d62728".into(),
        });
        self
    }
}

fn escape_xml(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

/// Round tick step: 1/2/5 × 10^k giving roughly `target` intervals.
fn nice_step(span: f64, target: f64) -> f64 {
    if !(span.is_finite() && span > 0.0) {
        return 1.0;
    }
    let raw = span / target;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let factor = if norm <= 1.0 {
        1.0
    } else if norm <= 2.0 {
        2.0
    } else if norm <= 5.0 {
        5.0
    } else {
        10.0
    };
    factor * mag
}

fn format_tick(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if !(0.001..100_000.0).contains(&a) {
        format!("{v:.2e}")
    } else if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 1.0 {
        let s = format!("{v:.2}");
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        format!("{v:.3}")
    }
}

struct Bounds {
    x_min: f64,
    x_max: f64,
    y_min: f64,
    y_max: f64,
}

fn data_bounds(chart: &Chart) -> Bounds {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut y_min = f64::INFINITY;
    let mut y_max = f64::NEG_INFINITY;
    for s in &chart.series {
        for &(x, y) in &s.points {
            if x.is_finite() && y.is_finite() {
                x_min = x_min.min(x);
                x_max = x_max.max(x);
                y_min = y_min.min(y);
                y_max = y_max.max(y);
            }
        }
    }
    for t in &chart.thresholds {
        if t.value.is_finite() {
            y_min = y_min.min(t.value);
            y_max = y_max.max(t.value);
        }
    }
    if !x_min.is_finite() {
        x_min = 0.0;
        x_max = 1.0;
    }
    if !y_min.is_finite() {
        y_min = 0.0;
        y_max = 1.0;
    }
    if x_max - x_min < 1e-12 {
        x_max = x_min + 1.0;
    }
    if y_max - y_min < 1e-12 {
        y_max = y_min + 1.0;
    }
    // Headroom so lines don't hug the frame.
    let pad = 0.05 * (y_max - y_min);
    Bounds {
        x_min,
        x_max,
        y_min: y_min - pad,
        y_max: y_max + pad,
    }
}

/// Renders the chart as a standalone SVG document.
pub fn render(chart: &Chart) -> String {
    let b = data_bounds(chart);
    let plot_w = WIDTH - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let sx = |x: f64| MARGIN_LEFT + (x - b.x_min) / (b.x_max - b.x_min) * plot_w;
    let sy = |y: f64| MARGIN_TOP + (b.y_max - y) / (b.y_max - b.y_min) * plot_h;

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(
        svg,
        r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="26" font-family="sans-serif" font-size="17" text-anchor="middle" font-weight="bold">{}</text>"#,
        WIDTH / 2.0,
        escape_xml(&chart.title)
    );

    // Gridlines and ticks.
    let x_step = nice_step(b.x_max - b.x_min, 8.0);
    let y_step = nice_step(b.y_max - b.y_min, 6.0);
    let mut tx = (b.x_min / x_step).ceil() * x_step;
    while tx <= b.x_max + 1e-9 * x_step {
        let px = sx(tx);
        let _ = writeln!(
            svg,
            r##"<line x1="{px:.2}" y1="{}" x2="{px:.2}" y2="{}" stroke="#e0e0e0" stroke-width="1"/>"##,
            MARGIN_TOP,
            MARGIN_TOP + plot_h
        );
        let _ = writeln!(
            svg,
            r#"<text x="{px:.2}" y="{}" font-family="sans-serif" font-size="12" text-anchor="middle">{}</text>"#,
            MARGIN_TOP + plot_h + 20.0,
            format_tick(tx)
        );
        tx += x_step;
    }
    let mut ty = (b.y_min / y_step).ceil() * y_step;
    while ty <= b.y_max + 1e-9 * y_step {
        let py = sy(ty);
        let _ = writeln!(
            svg,
            r##"<line x1="{}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="#e0e0e0" stroke-width="1"/>"##,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12" text-anchor="end">{}</text>"#,
            MARGIN_LEFT - 8.0,
            py + 4.0,
            format_tick(ty)
        );
        ty += y_step;
    }

    // Frame.
    let _ = writeln!(
        svg,
        r##"<rect x="{}" y="{}" width="{plot_w}" height="{plot_h}" fill="none" stroke="#404040" stroke-width="1"/>"##,
        MARGIN_LEFT, MARGIN_TOP
    );
    // Axis labels.
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle">{}</text>"#,
        MARGIN_LEFT + plot_w / 2.0,
        HEIGHT - 16.0,
        escape_xml(&chart.x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{}" font-family="sans-serif" font-size="14" text-anchor="middle" transform="rotate(-90 20 {})">{}</text>"#,
        MARGIN_TOP + plot_h / 2.0,
        MARGIN_TOP + plot_h / 2.0,
        escape_xml(&chart.y_label)
    );

    // Threshold lines.
    for t in &chart.thresholds {
        if !t.value.is_finite() {
            continue;
        }
        let py = sy(t.value);
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{py:.2}" x2="{}" y2="{py:.2}" stroke="{}" stroke-width="1.6" stroke-dasharray="8 5"/>"#,
            MARGIN_LEFT,
            MARGIN_LEFT + plot_w,
            t.color
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12" fill="{}" text-anchor="end">{}</text>"#,
            MARGIN_LEFT + plot_w - 6.0,
            py - 6.0,
            t.color,
            escape_xml(&t.label)
        );
    }

    // Series polylines.
    for (i, s) in chart.series.iter().enumerate() {
        let color = if s.color.is_empty() {
            PALETTE[i % PALETTE.len()]
        } else {
            &s.color
        };
        let pts: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| x.is_finite() && y.is_finite())
            .map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y)))
            .collect();
        if pts.len() >= 2 {
            let _ = writeln!(
                svg,
                r#"<polyline fill="none" stroke="{color}" stroke-width="1.8" points="{}"/>"#,
                pts.join(" ")
            );
        } else if pts.len() == 1 {
            let coord: Vec<&str> = pts[0].split(',').collect();
            let _ = writeln!(
                svg,
                r#"<circle cx="{}" cy="{}" r="3" fill="{color}"/>"#,
                coord[0], coord[1]
            );
        }
    }

    // Legend (top-left inside the frame).
    for (i, s) in chart.series.iter().enumerate() {
        let color = if s.color.is_empty() {
            PALETTE[i % PALETTE.len()]
        } else {
            &s.color
        };
        let y = MARGIN_TOP + 18.0 + 18.0 * i as f64;
        let _ = writeln!(
            svg,
            r#"<line x1="{}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="{color}" stroke-width="3"/>"#,
            MARGIN_LEFT + 10.0,
            MARGIN_LEFT + 34.0
        );
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{:.2}" font-family="sans-serif" font-size="12">{}</text>"#,
            MARGIN_LEFT + 40.0,
            y + 4.0,
            escape_xml(&s.label)
        );
    }

    svg.push_str("</svg>\n");
    svg
}

/// Renders and writes the chart; returns the path written.
pub fn write_svg(path: &Path, chart: &Chart) -> std::io::Result<PathBuf> {
    std::fs::write(path, render(chart))?;
    Ok(path.to_path_buf())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_chart() -> Chart {
        Chart::new("Aggregate power", "step", "W")
            .with_series(Series::from_values("cluster", &[1.0, 3.0, 2.0, 5.0]))
            .with_series(Series::new(
                "other",
                vec![(0.0, 2.0), (1.0, 2.5), (2.0, 1.5), (3.0, 4.0)],
            ))
            .with_threshold("limit", 4.5)
    }

    #[test]
    fn renders_polylines_and_threshold() {
        let svg = render(&sample_chart());
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("stroke-dasharray"));
        assert!(svg.contains("limit"));
        assert!(svg.contains("Aggregate power"));
    }

    #[test]
    fn escapes_markup_in_labels() {
        let chart = Chart::new("a < b & c", "x", "y")
            .with_series(Series::from_values("T<sub>", &[1.0, 2.0]));
        let svg = render(&chart);
        assert!(svg.contains("a &lt; b &amp; c"));
        assert!(svg.contains("T&lt;sub&gt;"));
        assert!(!svg.contains("<sub>"));
    }

    #[test]
    fn skips_non_finite_points() {
        let chart = Chart::new("t", "x", "y").with_series(Series::new(
            "s",
            vec![(0.0, 1.0), (1.0, f64::NAN), (2.0, 2.0), (3.0, f64::INFINITY)],
        ));
        let svg = render(&chart);
        assert!(!svg.contains("NaN"));
        assert!(!svg.contains("inf"));
        // Two finite points still form a polyline.
        assert_eq!(svg.matches("<polyline").count(), 1);
    }

    #[test]
    fn empty_chart_still_renders_axes() {
        let svg = render(&Chart::new("empty", "x", "y"));
        assert!(svg.contains("<rect"));
        assert_eq!(svg.matches("<polyline").count(), 0);
    }

    #[test]
    fn tick_steps_are_round_numbers() {
        assert_eq!(nice_step(10.0, 5.0), 2.0);
        assert_eq!(nice_step(100.0, 5.0), 20.0);
        assert_eq!(nice_step(7.0, 7.0), 1.0);
        assert_eq!(nice_step(0.5, 5.0), 0.1);
        // A degenerate span still yields something positive.
        assert!(nice_step(0.0, 5.0) > 0.0);
    }

    #[test]
    fn writes_file(){
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("chart.svg");
        let written = write_svg(&path, &sample_chart()).unwrap();
        assert_eq!(written, path);
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("</svg>"));
    }
}
