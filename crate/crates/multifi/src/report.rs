//! Report artifacts: CSVs of every plotted series plus their SVG renderings.

use std::path::{Path, PathBuf};

use multifi_core::evaluation::{DisplacementSample, ErrorMetrics, HeatmapTable, MetricAggregates};
use multifi_core::geometry::Point2;
use multifi_core::scenario::Lanelet;
use serde::{Deserialize, Serialize};

use crate::formats::write_text;
use crate::svg::{self, Series};
use crate::{Error, Result};

fn csv_string<T: Serialize>(rows: impl IntoIterator<Item = T>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

fn fmt_value(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

/// Header row of angles in degrees, one row per radius in metres, `NA` for
/// cells without a result. A straight scenario adds a final `straight` row
/// with its value in the first column.
pub fn heatmap_csv(table: &HeatmapTable) -> String {
    let mut w = csv::WriterBuilder::new().flexible(true).from_writer(Vec::new());
    let mut header = vec!["radius_m".to_string()];
    header.extend(table.angles.iter().map(|a| a.to_string()));
    w.write_record(&header).expect("in-memory csv");
    for (r, row) in table.radii.iter().zip(&table.cells) {
        let mut rec = vec![r.to_string()];
        // Cells outside the grid stay empty; cells without a result are NA.
        rec.extend(row.iter().map(|c| c.map(fmt_value).unwrap_or_default()));
        w.write_record(&rec).expect("in-memory csv");
    }
    if let Some(v) = table.straight {
        w.write_record(["straight".to_string(), fmt_value(v)])
            .expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

#[derive(Serialize, Deserialize)]
struct DisplacementRow {
    s_m: f64,
    d_m: f64,
}

#[derive(Serialize, Deserialize)]
struct VelocityRow {
    t_s: f64,
    v_ref_mps: f64,
    v_cmp_mps: f64,
}

#[derive(Serialize, Deserialize)]
struct MetricRow {
    t_s: f64,
    s_m: f64,
    d_m: f64,
    position_error_m: f64,
    orientation_error_rad: f64,
    v_ref_mps: f64,
    v_cmp_mps: f64,
}

pub fn displacement_csv(m: &ErrorMetrics) -> String {
    csv_string(
        m.lateral_displacement
            .iter()
            .map(|x| DisplacementRow { s_m: x.s, d_m: x.d }),
    )
}

pub fn velocity_csv(m: &ErrorMetrics) -> String {
    csv_string(
        m.t.iter()
            .zip(&m.v_reference)
            .zip(&m.v_comparison)
            .map(|((t, r), c)| VelocityRow {
                t_s: *t,
                v_ref_mps: *r,
                v_cmp_mps: *c,
            }),
    )
}

/// Every series of a comparison, one row per aligned step.
pub fn metrics_csv(m: &ErrorMetrics) -> String {
    csv_string((0..m.t.len()).map(|i| MetricRow {
        t_s: m.t[i],
        s_m: m.lateral_displacement[i].s,
        d_m: m.lateral_displacement[i].d,
        position_error_m: m.position_error[i],
        orientation_error_rad: m.orientation_error[i],
        v_ref_mps: m.v_reference[i],
        v_cmp_mps: m.v_comparison[i],
    }))
}

/// Rebuilds the error series from [`metrics_csv`] output.
pub fn metrics_from_csv(text: &str) -> Result<ErrorMetrics> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let mut m = ErrorMetrics {
        t: Vec::new(),
        lateral_displacement: Vec::new(),
        position_error: Vec::new(),
        orientation_error: Vec::new(),
        v_reference: Vec::new(),
        v_comparison: Vec::new(),
        aggregates: MetricAggregates::default(),
    };
    for row in r.deserialize() {
        let row: MetricRow = row.map_err(|e| Error::parse("metrics.csv", e.to_string()))?;
        m.t.push(row.t_s);
        m.lateral_displacement
            .push(DisplacementSample { s: row.s_m, d: row.d_m });
        m.position_error.push(row.position_error_m);
        m.orientation_error.push(row.orientation_error_rad);
        m.v_reference.push(row.v_ref_mps);
        m.v_comparison.push(row.v_cmp_mps);
    }
    m.aggregates = m.recompute_aggregates();
    Ok(m)
}

fn displacement_points(m: &ErrorMetrics) -> Vec<(f64, f64)> {
    m.lateral_displacement.iter().map(|x| (x.s, x.d)).collect()
}

fn velocity_points(m: &ErrorMetrics) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
    let r = m.t.iter().zip(&m.v_reference).map(|(t, v)| (*t, *v)).collect();
    let c = m.t.iter().zip(&m.v_comparison).map(|(t, v)| (*t, *v)).collect();
    (r, c)
}

/// Inputs of one per-scenario comparison report.
pub struct Comparison<'a> {
    /// `<scenario_id>__<backend>` of the comparison run.
    pub stem: &'a str,
    pub lanelets: &'a [Lanelet],
    pub reference_label: &'a str,
    pub comparison_label: &'a str,
    pub reference_path: &'a [Point2],
    pub comparison_path: &'a [Point2],
    pub metrics: &'a ErrorMetrics,
}

/// Writes `<stem>.{plot.svg, displacement.csv, displacement.svg,
/// velocity.csv, velocity.svg, metrics.csv}` into `dir`.
pub fn write_comparison(dir: &Path, c: &Comparison<'_>) -> Result<Vec<PathBuf>> {
    let m = c.metrics;
    let file = |kind: &str| dir.join(format!("{}.{kind}", c.stem));
    let plot = svg::scenario_plot(
        c.stem,
        c.lanelets,
        &[
            (c.reference_label, c.reference_path),
            (c.comparison_label, c.comparison_path),
        ],
    );
    let d = displacement_points(m);
    let (vr, vc) = velocity_points(m);
    let files = [
        (file("plot.svg"), plot),
        (file("displacement.csv"), displacement_csv(m)),
        (
            file("displacement.svg"),
            svg::line_plot(
                &format!("{}: lateral displacement", c.stem),
                "s [m]",
                "d [m]",
                &[Series {
                    label: c.comparison_label,
                    points: &d,
                }],
            ),
        ),
        (file("velocity.csv"), velocity_csv(m)),
        (
            file("velocity.svg"),
            svg::line_plot(
                &format!("{}: velocity", c.stem),
                "t [s]",
                "v [m/s]",
                &[
                    Series {
                        label: c.reference_label,
                        points: &vr,
                    },
                    Series {
                        label: c.comparison_label,
                        points: &vc,
                    },
                ],
            ),
        ),
        (file("metrics.csv"), metrics_csv(m)),
    ];
    let mut written = Vec::new();
    for (path, contents) in files {
        write_text(&path, &contents)?;
        written.push(path);
    }
    Ok(written)
}

/// `heatmap[_<suffix>].{csv,svg}` for one table.
pub fn write_heatmap(dir: &Path, name: &str, table: &HeatmapTable) -> Result<()> {
    write_text(&dir.join(format!("{name}.csv")), &heatmap_csv(table))?;
    write_text(&dir.join(format!("{name}.svg")), &svg::heatmap(name, table))
}

/// Multi-series CSV in long form: `label` column first.
pub fn labelled_displacement_csv(series: &[(&str, &ErrorMetrics)]) -> String {
    #[derive(Serialize)]
    struct Row<'a> {
        model: &'a str,
        s_m: f64,
        d_m: f64,
    }
    csv_string(series.iter().flat_map(|(label, m)| {
        m.lateral_displacement.iter().map(move |x| Row {
            model: label,
            s_m: x.s,
            d_m: x.d,
        })
    }))
}

pub fn labelled_velocity_csv(series: &[(&str, &ErrorMetrics)]) -> String {
    #[derive(Serialize)]
    struct Row<'a> {
        model: &'a str,
        t_s: f64,
        v_ref_mps: f64,
        v_cmp_mps: f64,
    }
    csv_string(series.iter().flat_map(|(label, m)| {
        (0..m.t.len()).map(move |i| Row {
            model: label,
            t_s: m.t[i],
            v_ref_mps: m.v_reference[i],
            v_cmp_mps: m.v_comparison[i],
        })
    }))
}

/// Overlaid d-over-s and v-over-t plots for several labelled comparisons.
pub fn multi_series_plots(title: &str, series: &[(&str, &ErrorMetrics)]) -> (String, String) {
    let d: Vec<Vec<(f64, f64)>> = series.iter().map(|(_, m)| displacement_points(m)).collect();
    let v: Vec<Vec<(f64, f64)>> = series.iter().map(|(_, m)| velocity_points(m).1).collect();
    let mut vs: Vec<Series<'_>> = Vec::new();
    let reference = series.first().map(|(_, m)| velocity_points(m).0).unwrap_or_default();
    vs.push(Series {
        label: "planned (low-fidelity)",
        points: &reference,
    });
    vs.extend(series.iter().zip(&v).map(|((l, _), p)| Series { label: l, points: p }));
    let ds: Vec<Series<'_>> = series
        .iter()
        .zip(&d)
        .map(|((l, _), p)| Series { label: l, points: p })
        .collect();
    (
        svg::line_plot(&format!("{title}: lateral displacement"), "s [m]", "d [m]", &ds),
        svg::line_plot(&format!("{title}: velocity"), "t [s]", "v [m/s]", &vs),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use multifi_core::evaluation::{aggregate_grid, GridKey, HeatmapMetric};
    use multifi_core::scenario::Angle;

    #[test]
    fn heatmap_csv_layout() {
        let a = |v: f64| {
            Some(MetricAggregates {
                max_abs_d: v,
                ..MetricAggregates::default()
            })
        };
        let k = |r: Option<f64>, g: f64| GridKey {
            radius: r,
            angle: Angle::from_degrees(g),
        };
        let rows = [
            (k(Some(10.0), 90.0), a(0.5)),
            (k(Some(10.0), 30.0), None),
            (k(None, 0.0), a(0.01)),
        ];
        let t = aggregate_grid(&rows, HeatmapMetric::Max, false).unwrap();
        assert_eq!(heatmap_csv(&t.main), "radius_m,30,90\n10,NA,0.5\nstraight,0.01\n");
    }
}
