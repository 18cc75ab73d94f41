//! Standalone SVG rendering. Coordinates are written with three decimals so
//! output is byte-stable.

use std::fmt::Write as _;

use multifi_core::evaluation::HeatmapTable;
use multifi_core::geometry::Point2;
use multifi_core::scenario::Lanelet;

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"];

pub fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Doc {
    body: String,
    width: f64,
    height: f64,
}

impl Doc {
    fn new(width: f64, height: f64) -> Self {
        let mut body = String::new();
        let _ = writeln!(
            body,
            r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#
        );
        Self { body, width, height }
    }

    fn polyline(&mut self, pts: impl IntoIterator<Item = (f64, f64)>, stroke: &str, width: f64, dash: Option<&str>) {
        let mut p = String::new();
        for (x, y) in pts {
            let _ = write!(p, "{x:.3},{y:.3} ");
        }
        let dash = dash.map(|d| format!(r#" stroke-dasharray="{d}""#)).unwrap_or_default();
        let _ = writeln!(
            self.body,
            r#"<polyline points="{}" fill="none" stroke="{stroke}" stroke-width="{width}"{dash}/>"#,
            p.trim_end()
        );
    }

    fn text(&mut self, x: f64, y: f64, anchor: &str, size: f64, s: &str) {
        let _ = writeln!(
            self.body,
            r#"<text x="{x:.3}" y="{y:.3}" text-anchor="{anchor}" font-family="sans-serif" font-size="{size}">{}</text>"#,
            escape(s)
        );
    }

    fn legend(&mut self, x: f64, y: f64, entries: &[(&str, &str)]) {
        for (i, (label, stroke)) in entries.iter().enumerate() {
            let yy = y + 16.0 * i as f64;
            self.polyline([(x, yy), (x + 20.0, yy)], stroke, 2.0, None);
            self.text(x + 26.0, yy + 4.0, "start", 12.0, label);
        }
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n{}</svg>\n",
            self.body,
            w = self.width,
            h = self.height
        )
    }
}

/// Round tick spacing giving roughly five intervals over `span`.
fn tick_step(span: f64) -> f64 {
    if !(span > 0.0) {
        return 1.0;
    }
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let n = raw / mag;
    let m = if n < 1.5 {
        1.0
    } else if n < 3.5 {
        2.0
    } else if n < 7.5 {
        5.0
    } else {
        10.0
    };
    m * mag
}

fn bounds(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    if hi - lo < 1e-9 {
        let pad = if lo.abs() > 1e-9 { lo.abs() * 0.1 } else { 1.0 };
        return (lo - pad, hi + pad);
    }
    (lo, hi)
}

/// A named series of `(x, y)` samples.
pub struct Series<'a> {
    pub label: &'a str,
    pub points: &'a [(f64, f64)],
}

/// Line chart with axes, ticks and a legend.
pub fn line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series<'_>]) -> String {
    let (w, h) = (720.0, 420.0);
    let (left, right, top, bottom) = (70.0, 170.0, 40.0, 55.0);
    let (x0, x1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (y0, y1) = bounds(series.iter().flat_map(|s| s.points.iter().map(|p| p.1)));
    let pw = w - left - right;
    let ph = h - top - bottom;
    let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
    let sy = |y: f64| top + ph - (y - y0) / (y1 - y0) * ph;
    let mut doc = Doc::new(w, h);
    doc.text(w / 2.0, 22.0, "middle", 15.0, title);
    doc.polyline(
        [(left, top), (left, top + ph), (left + pw, top + ph)],
        "black",
        1.0,
        None,
    );
    let step = tick_step(x1 - x0);
    let mut t = (x0 / step).ceil() * step;
    while t <= x1 + 1e-9 * step {
        doc.polyline([(sx(t), top + ph), (sx(t), top + ph + 5.0)], "black", 1.0, None);
        doc.text(sx(t), top + ph + 18.0, "middle", 11.0, &fmt_tick(t, step));
        t += step;
    }
    let step = tick_step(y1 - y0);
    let mut t = (y0 / step).ceil() * step;
    while t <= y1 + 1e-9 * step {
        doc.polyline([(left - 5.0, sy(t)), (left + pw, sy(t))], "#dddddd", 1.0, None);
        doc.text(left - 8.0, sy(t) + 4.0, "end", 11.0, &fmt_tick(t, step));
        t += step;
    }
    doc.text(left + pw / 2.0, h - 12.0, "middle", 13.0, x_label);
    let _ = writeln!(
        doc.body,
        r#"<text x="16" y="{:.3}" text-anchor="middle" font-family="sans-serif" font-size="13" transform="rotate(-90 16 {:.3})">{}</text>"#,
        top + ph / 2.0,
        top + ph / 2.0,
        escape(y_label)
    );
    let mut legend = Vec::new();
    for (i, s) in series.iter().enumerate() {
        doc.polyline(s.points.iter().map(|p| (sx(p.0), sy(p.1))), color(i), 1.5, None);
        legend.push((s.label, color(i)));
    }
    doc.legend(left + pw + 15.0, top + 10.0, &legend);
    doc.finish()
}

fn fmt_tick(v: f64, step: f64) -> String {
    let decimals = if step >= 1.0 {
        0
    } else {
        (-step.log10().floor()) as usize
    };
    let v = if v.abs() < step * 1e-9 { 0.0 } else { v };
    format!("{v:.decimals$}")
}

/// Top-down view of the road network with trajectories drawn on top.
pub fn scenario_plot(title: &str, lanelets: &[Lanelet], trajectories: &[(&str, &[Point2])]) -> String {
    let all = lanelets
        .iter()
        .flat_map(|l| l.left_boundary.iter().chain(&l.right_boundary).copied())
        .chain(trajectories.iter().flat_map(|t| t.1.iter().copied()));
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for p in all {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    if !xmin.is_finite() {
        (xmin, xmax, ymin, ymax) = (0.0, 1.0, 0.0, 1.0);
    }
    let margin = 20.0;
    let plot = 640.0;
    let span = (xmax - xmin).max(ymax - ymin).max(1e-6);
    let scale = plot / span;
    let w = (xmax - xmin) * scale + 2.0 * margin + 170.0;
    let h = (ymax - ymin) * scale + 2.0 * margin + 30.0;
    let tx = |p: &Point2| (margin + (p.x - xmin) * scale, 30.0 + margin + (ymax - p.y) * scale);
    let mut doc = Doc::new(w.round(), h.round());
    doc.text(margin, 20.0, "start", 15.0, title);
    for l in lanelets {
        doc.polyline(l.left_boundary.iter().map(tx), "#444444", 1.5, None);
        doc.polyline(l.right_boundary.iter().map(tx), "#444444", 1.5, None);
        doc.polyline(
            l.centerline.samples().iter().map(|s| tx(&s.position())),
            "#aaaaaa",
            1.0,
            Some("6 4"),
        );
    }
    let mut legend = Vec::new();
    for (i, (label, pts)) in trajectories.iter().enumerate() {
        doc.polyline(pts.iter().map(tx), color(i), 2.0, None);
        legend.push((*label, color(i)));
    }
    doc.legend(w.round() - 160.0, 40.0, &legend);
    doc.finish()
}

/// Linear white-to-dark-red ramp.
fn heat(v: f64, lo: f64, hi: f64) -> String {
    let u = if hi > lo {
        ((v - lo) / (hi - lo)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let stops = [(255.0, 255.0, 204.0), (253.0, 141.0, 60.0), (189.0, 0.0, 38.0)];
    let (a, b, f) = if u < 0.5 {
        (stops[0], stops[1], u * 2.0)
    } else {
        (stops[1], stops[2], u * 2.0 - 1.0)
    };
    let c = |x: f64, y: f64| (x + (y - x) * f).round() as u8;
    format!("#{:02x}{:02x}{:02x}", c(a.0, b.0), c(a.1, b.1), c(a.2, b.2))
}

/// Cells coloured by value and labelled in metres; missing cells are grey
/// and labelled NA.
pub fn heatmap(title: &str, table: &HeatmapTable) -> String {
    let values: Vec<f64> = table
        .cells
        .iter()
        .flatten()
        .chain(std::iter::once(&table.straight))
        .filter_map(|c| c.flatten())
        .collect();
    let (lo, hi) = bounds(values.iter().copied());
    let (cw, ch) = (70.0, 40.0);
    let (left, top) = (90.0, 50.0);
    let rows = table.radii.len() + usize::from(table.straight.is_some());
    let w = left + cw * table.angles.len().max(1) as f64 + 20.0;
    let h = top + ch * rows as f64 + 50.0;
    let mut doc = Doc::new(w, h);
    doc.text(w / 2.0, 22.0, "middle", 15.0, title);
    for (j, a) in table.angles.iter().enumerate() {
        doc.text(
            left + cw * (j as f64 + 0.5),
            top - 8.0,
            "middle",
            12.0,
            &format!("{a}°"),
        );
    }
    let cell = |doc: &mut Doc, i: usize, j: usize, v: Option<f64>| {
        let (x, y) = (left + cw * j as f64, top + ch * i as f64);
        let fill = v.map_or_else(|| "#cccccc".to_string(), |v| heat(v, lo, hi));
        let _ = writeln!(
            doc.body,
            r##"<rect x="{x:.3}" y="{y:.3}" width="{cw}" height="{ch}" fill="{fill}" stroke="white"/>"##
        );
        let label = v.map_or_else(|| "NA".to_string(), |v| format!("{v:.3}"));
        doc.text(x + cw / 2.0, y + ch / 2.0 + 4.0, "middle", 11.0, &label);
    };
    for (i, (r, row)) in table.radii.iter().zip(&table.cells).enumerate() {
        doc.text(
            left - 8.0,
            top + ch * (i as f64 + 0.5) + 4.0,
            "end",
            12.0,
            &format!("r = {r} m"),
        );
        for (j, c) in row.iter().enumerate() {
            if let Some(v) = c {
                cell(&mut doc, i, j, *v);
            }
        }
    }
    if let Some(v) = table.straight {
        let i = table.radii.len();
        doc.text(left - 8.0, top + ch * (i as f64 + 0.5) + 4.0, "end", 12.0, "straight");
        cell(&mut doc, i, 0, v);
    }
    let metric = match table.metric {
        multifi_core::evaluation::HeatmapMetric::Max => "max",
        multifi_core::evaluation::HeatmapMetric::Mean => "mean",
    };
    doc.text(left, h - 15.0, "start", 12.0, &format!("{metric} |d| [m]"));
    doc.finish()
}
