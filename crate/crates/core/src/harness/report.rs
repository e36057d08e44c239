//! SVG charts plus CSV tables rendered from evaluation reports.
//!
//! Chart kinds live in a [`Registry`] and are picked by name:
//!
//! | name                | input                          | output stem          |
//! |---------------------|--------------------------------|----------------------|
//! | `confusion-heatmap` | any reports, one chart each    | `confusion[-<i>]`    |
//! | `axis-line-chart`   | reports of one sweep axis      | `accuracy-vs-<axis>` |
//!
//! Output depends only on the report contents, so identical reports give
//! byte-identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use super::train::EvalReport;
use crate::error::{Error, Result};
use crate::registry::{no_argument, Registry};

#[derive(Clone, Debug, PartialEq)]
pub struct RenderedChart {
    pub stem: String,
    pub svg: String,
    pub csv: String,
}

pub trait ChartKind: Send + Sync {
    fn name(&self) -> &'static str;
    fn render(&self, reports: &[EvalReport]) -> Result<Vec<RenderedChart>>;
}

pub fn charts() -> Registry<dyn ChartKind> {
    let mut r: Registry<dyn ChartKind> = Registry::new("chart kind");
    r.register("confusion-heatmap", |arg| {
        no_argument("confusion-heatmap", arg)?;
        Ok(Box::new(ConfusionHeatmap))
    })
    .register("axis-line-chart", |arg| {
        no_argument("axis-line-chart", arg)?;
        Ok(Box::new(AxisLineChart))
    });
    r
}

/// Renders `kind` and writes `<stem>.svg` and `<stem>.csv` into `dir`.
pub fn write_charts(kind: &str, reports: &[EvalReport], dir: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(Error::Parameter("no reports to chart".into()));
    }
    let chart = charts().create(kind)?;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for c in chart.render(reports)? {
        for (ext, body) in [("svg", &c.svg), ("csv", &c.csv)] {
            let path = dir.join(format!("{}.{ext}", c.stem));
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            written.push(path);
        }
    }
    Ok(written)
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
        .replace('"', "&quot;")
}

fn csv_field(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub struct ConfusionHeatmap;

const CELL: usize = 44;
const LABEL_MARGIN: usize = 170;

impl ConfusionHeatmap {
    fn render_one(report: &EvalReport, stem: String) -> Result<RenderedChart> {
        let c = report.classes.len();
        if report.confusion.len() != c || report.confusion.iter().any(|r| r.len() != c) {
            return Err(Error::Shape(format!(
                "confusion matrix does not match {c} classes"
            )));
        }
        // Shade by each actual class's column total, i.e. per-class recall.
        let col_total: Vec<u64> = (0..c)
            .map(|l| (0..c).map(|p| report.confusion[p][l]).sum())
            .collect();
        let size = LABEL_MARGIN + c * CELL + 20;
        let top = LABEL_MARGIN + 30;

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{}" font-family="sans-serif" font-size="12">"#,
            top + c * CELL + 30
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="18" text-anchor="middle" font-size="14">Confusion matrix (accuracy {:.3})</text>"#,
            size / 2,
            report.accuracy
        );
        for (i, name) in report.classes.iter().enumerate() {
            let name = escape(name);
            let mid = LABEL_MARGIN + i * CELL + CELL / 2;
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{}" text-anchor="end" dominant-baseline="middle">{name}</text>"#,
                LABEL_MARGIN - 6,
                top + i * CELL + CELL / 2
            );
            let _ = writeln!(
                svg,
                r#"<text transform="translate({mid},{}) rotate(-60)" text-anchor="start">{name}</text>"#,
                top - 6
            );
        }
        for (p, row) in report.confusion.iter().enumerate() {
            for (l, &n) in row.iter().enumerate() {
                let frac = if col_total[l] == 0 {
                    0.0
                } else {
                    n as f64 / col_total[l] as f64
                };
                let shade = |full: f64| (255.0 - (255.0 - full) * frac).round() as u8;
                let (x, y) = (LABEL_MARGIN + l * CELL, top + p * CELL);
                let _ = writeln!(
                    svg,
                    r##"<rect x="{x}" y="{y}" width="{CELL}" height="{CELL}" fill="#{:02x}{:02x}{:02x}" stroke="#999"/>"##,
                    shade(33.0),
                    shade(102.0),
                    shade(172.0)
                );
                let ink = if frac > 0.5 { "white" } else { "black" };
                let _ = writeln!(
                    svg,
                    r#"<text x="{}" y="{}" text-anchor="middle" dominant-baseline="middle" fill="{ink}">{n}</text>"#,
                    x + CELL / 2,
                    y + CELL / 2
                );
            }
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">actual</text>"#,
            LABEL_MARGIN + c * CELL / 2,
            top + c * CELL + 20
        );
        let _ = writeln!(
            svg,
            r#"<text transform="translate(14,{}) rotate(-90)" text-anchor="middle">predicted</text>"#,
            top + c * CELL / 2
        );
        svg.push_str("</svg>\n");

        let mut csv = String::from("predicted\\actual");
        for name in &report.classes {
            csv.push(',');
            csv.push_str(&csv_field(name));
        }
        csv.push('\n');
        for (p, row) in report.confusion.iter().enumerate() {
            csv.push_str(&csv_field(&report.classes[p]));
            for n in row {
                let _ = write!(csv, ",{n}");
            }
            csv.push('\n');
        }
        Ok(RenderedChart { stem, svg, csv })
    }
}

impl ChartKind for ConfusionHeatmap {
    fn name(&self) -> &'static str {
        "confusion-heatmap"
    }

    fn render(&self, reports: &[EvalReport]) -> Result<Vec<RenderedChart>> {
        reports
            .iter()
            .enumerate()
            .map(|(i, r)| {
                let stem = if reports.len() == 1 {
                    "confusion".to_string()
                } else {
                    format!("confusion-{i}")
                };
                Self::render_one(r, stem)
            })
            .collect()
    }
}

/// Accuracy of each sweep point against the swept value.
pub struct AxisLineChart;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const LEFT: f64 = 60.0;
const RIGHT: f64 = 20.0;
const TOP: f64 = 40.0;
const BOTTOM: f64 = 50.0;

pub fn axis_title(axis: &str) -> String {
    match axis {
        "stride" => "Stride Length".into(),
        "sigma" => "Noise σ".into(),
        other => other.to_string(),
    }
}

impl ChartKind for AxisLineChart {
    fn name(&self) -> &'static str {
        "axis-line-chart"
    }

    fn render(&self, reports: &[EvalReport]) -> Result<Vec<RenderedChart>> {
        let mut points = Vec::with_capacity(reports.len());
        for r in reports {
            let p = r.sweep.as_ref().ok_or_else(|| {
                Error::Config("axis-line-chart needs reports produced by a sweep".into())
            })?;
            points.push((p.axis.as_str(), p.value, r.accuracy, r.fm));
        }
        let axis = points[0].0;
        if points.iter().any(|p| p.0 != axis) {
            return Err(Error::Config(
                "axis-line-chart reports come from different sweep axes".into(),
            ));
        }
        points.sort_by(|a, b| a.1.total_cmp(&b.1));

        let lo = points[0].1;
        let hi = points[points.len() - 1].1;
        let span = if hi > lo { hi - lo } else { 1.0 };
        let px = |v: f64| {
            if points.len() == 1 {
                LEFT + (WIDTH - LEFT - RIGHT) / 2.0
            } else {
                LEFT + (v - lo) / span * (WIDTH - LEFT - RIGHT)
            }
        };
        let py = |a: f64| TOP + (1.0 - a) * (HEIGHT - TOP - BOTTOM);
        let title = escape(&format!("Accuracy vs {}", axis_title(axis)));

        let mut svg = String::new();
        let _ = writeln!(
            svg,
            r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" font-family="sans-serif" font-size="12">"#
        );
        let _ = writeln!(svg, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{title}</text>"#,
            WIDTH / 2.0
        );
        let (x0, x1, y0, y1) = (LEFT, WIDTH - RIGHT, py(0.0), py(1.0));
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{y0}" x2="{x1}" y2="{y0}" stroke="black"/>"#
        );
        let _ = writeln!(
            svg,
            r#"<line x1="{x0}" y1="{y0}" x2="{x0}" y2="{y1}" stroke="black"/>"#
        );
        for k in 0..=5 {
            let a = k as f64 / 5.0;
            let y = py(a);
            let _ = writeln!(
                svg,
                r##"<line x1="{x0}" y1="{y:.2}" x2="{x1}" y2="{y:.2}" stroke="#ddd"/>"##
            );
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{y:.2}" text-anchor="end" dominant-baseline="middle">{a:.1}</text>"#,
                x0 - 6.0
            );
        }
        for &(_, v, _, _) in &points {
            let _ = writeln!(
                svg,
                r#"<text x="{:.2}" y="{}" text-anchor="middle">{v}</text>"#,
                px(v),
                y0 + 18.0
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#,
            WIDTH / 2.0,
            HEIGHT - 8.0,
            escape(&axis_title(axis))
        );
        let _ = writeln!(
            svg,
            r#"<text transform="translate(16,{}) rotate(-90)" text-anchor="middle">accuracy</text>"#,
            (y0 + y1) / 2.0
        );
        let path: Vec<String> = points
            .iter()
            .map(|&(_, v, a, _)| format!("{:.2},{:.2}", px(v), py(a)))
            .collect();
        let _ = writeln!(
            svg,
            r##"<polyline points="{}" fill="none" stroke="#2166ac" stroke-width="2"/>"##,
            path.join(" ")
        );
        for &(_, v, a, _) in &points {
            let _ = writeln!(
                svg,
                r##"<circle cx="{:.2}" cy="{:.2}" r="4" fill="#2166ac"><title>{v}: {a:.4}</title></circle>"##,
                px(v),
                py(a)
            );
        }
        svg.push_str("</svg>\n");

        let mut csv = format!("{axis},accuracy,fm\n");
        for &(_, v, a, f) in &points {
            let _ = writeln!(csv, "{v},{a},{f}");
        }
        Ok(vec![RenderedChart {
            stem: format!("accuracy-vs-{axis}"),
            svg,
            csv,
        }])
    }
}
