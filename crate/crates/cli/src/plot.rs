//! Static SVG line charts.

use std::collections::BTreeMap;
use std::fmt::Write;

use prunability::{Error, Result};

pub const WIDTH: f64 = 640.0;
pub const HEIGHT: f64 = 400.0;
pub const MARGIN: f64 = 60.0;

const COLORS: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    DoubleDescent,
    PruneVsPerturb,
    PrunabilityCurve,
}

impl PlotKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "double-descent" => Ok(PlotKind::DoubleDescent),
            "prune-vs-perturb" => Ok(PlotKind::PruneVsPerturb),
            "prunability-curve" => Ok(PlotKind::PrunabilityCurve),
            _ => Err(Error::Config(format!("unknown plot kind {s:?}"))),
        }
    }

    /// `(x column, y columns, y-axis label)`.
    pub fn columns(self) -> (&'static str, &'static [&'static str], &'static str) {
        match self {
            PlotKind::DoubleDescent => ("width", &["test_ce", "prunability"], "value"),
            PlotKind::PruneVsPerturb => {
                ("fraction", &["d_train_prune", "d_test_prune", "d_train_perturb", "d_test_perturb"], "loss change")
            }
            PlotKind::PrunabilityCurve => ("kept_fraction", &["train_ce"], "train cross-entropy"),
        }
    }
}

/// A named polyline in data coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

/// Extracts one series per y column (and per `model_id` when that column exists).
pub fn series_from_csv(text: &str, kind: PlotKind) -> Result<Vec<Series>> {
    let (x_col, y_cols, _) = kind.columns();
    let schema = |location: String, message: String| Error::Schema { location, message };
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: Vec<&str> = lines.next().ok_or_else(|| schema("row 1".into(), "empty table".into()))?.split(',').collect();
    let col = |name: &str| {
        header.iter().position(|h| *h == name).ok_or_else(|| schema("row 1".into(), format!("missing column {name:?}")))
    };
    let xi = col(x_col)?;
    let yis: Vec<usize> = y_cols.iter().map(|c| col(c)).collect::<Result<_>>()?;
    let group = header.iter().position(|h| *h == "model_id");
    let mut series: BTreeMap<(String, usize), Vec<(f64, f64)>> = BTreeMap::new();
    for (row, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(schema(format!("row {}", row + 2), format!("expected {} columns", header.len())));
        }
        let Ok(x) = fields[xi].parse::<f64>() else {
            return Err(schema(format!("row {} column {x_col}", row + 2), format!("not a number: {:?}", fields[xi])));
        };
        let prefix = group.map(|g| format!("{} ", fields[g])).unwrap_or_default();
        for (k, &yi) in yis.iter().enumerate() {
            // empty cells are undefined values and simply skipped
            if let Ok(y) = fields[yi].parse::<f64>() {
                series.entry((prefix.clone(), k)).or_default().push((x, y));
            }
        }
    }
    if series.is_empty() {
        return Err(schema("row 2".into(), "no plottable rows".into()));
    }
    Ok(series
        .into_iter()
        .map(|((prefix, k), points)| Series { name: format!("{prefix}{}", y_cols[k]), points })
        .collect())
}

/// Data bounds, widened when degenerate.
pub fn bounds(series: &[Series]) -> (f64, f64, f64, f64) {
    let pts = series.iter().flat_map(|s| s.points.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in pts {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if x1 <= x0 {
        x0 -= 0.5;
        x1 += 0.5;
    }
    if y1 <= y0 {
        y0 -= 0.5;
        y1 += 0.5;
    }
    (x0, x1, y0, y1)
}

/// Affine map from data to pixel coordinates (y grows downwards).
pub fn to_pixels(x: f64, y: f64, b: (f64, f64, f64, f64)) -> (f64, f64) {
    let (x0, x1, y0, y1) = b;
    let w = WIDTH - 2.0 * MARGIN;
    let h = HEIGHT - 2.0 * MARGIN;
    (MARGIN + (x - x0) / (x1 - x0) * w, MARGIN + h - (y - y0) / (y1 - y0) * h)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn render_svg(series: &[Series], x_label: &str, y_label: &str, title: &str) -> String {
    let b = bounds(series);
    let (x0, x1, y0, y1) = b;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">"#
    );
    let _ = writeln!(s, r#"<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="30" text-anchor="middle" font-size="16">{}</text>"#, WIDTH / 2.0, escape(title));
    let (left, right, top, bottom) = (MARGIN, WIDTH - MARGIN, MARGIN, HEIGHT - MARGIN);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<line x1="{left}" y1="{top}" x2="{left}" y2="{bottom}" stroke="black"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="12">{}</text>"#, WIDTH / 2.0, HEIGHT - 20.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="18" y="{}" text-anchor="middle" font-size="12" transform="rotate(-90 18 {})">{}</text>"#,
        HEIGHT / 2.0,
        HEIGHT / 2.0,
        escape(y_label)
    );
    for (v, x, anchor) in [(x0, left, "start"), (x1, right, "end")] {
        let _ = writeln!(s, r#"<text x="{x:.4}" y="{:.4}" text-anchor="{anchor}" font-size="10">{v:.4}</text>"#, bottom + 14.0);
    }
    for (v, y) in [(y0, bottom), (y1, top)] {
        let _ = writeln!(s, r#"<text x="{:.4}" y="{y:.4}" text-anchor="end" font-size="10">{v:.4}</text>"#, left - 4.0);
    }
    for (i, ser) in series.iter().enumerate() {
        let color = COLORS[i % COLORS.len()];
        let pts: Vec<String> = ser
            .points
            .iter()
            .map(|&(x, y)| {
                let (px, py) = to_pixels(x, y, b);
                format!("{px:.4},{py:.4}")
            })
            .collect();
        let _ = writeln!(
            s,
            r#"<polyline data-series="{}" fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#,
            escape(&ser.name),
            pts.join(" ")
        );
        if series.len() <= 12 {
            let ly = top + 14.0 * i as f64;
            let _ = writeln!(
                s,
                r#"<text x="{:.4}" y="{ly:.4}" font-size="10" fill="{color}">{}</text>"#,
                right - 150.0,
                escape(&ser.name)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

pub fn plot_csv(text: &str, kind: PlotKind) -> Result<String> {
    let series = series_from_csv(text, kind)?;
    let (x, _, y) = kind.columns();
    let title = match kind {
        PlotKind::DoubleDescent => "Test loss and prunability across widths",
        PlotKind::PruneVsPerturb => "Pruning versus matched perturbation",
        PlotKind::PrunabilityCurve => "Train loss along the pruning grid",
    };
    Ok(render_svg(&series, x, y, title))
}
