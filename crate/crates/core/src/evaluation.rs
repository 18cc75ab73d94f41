//! Cross-fidelity trajectory comparison and grid aggregation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::backends::VehicleState;
use crate::cosim::RunLog;
use crate::geometry::{Point2, Polyline};
use crate::math::wrap_angle;
#[allow(unused_imports)]
use crate::math::Float;
use crate::scenario::Angle;
use crate::{Error, Result};

/// Signed lateral offset `d` of a comparison sample, located at arclength
/// `s` along the reference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementSample {
    pub s: f64,
    pub d: f64,
}

/// Offsets of each comparison point from the reference polyline, positive to
/// the left of the reference direction of travel.
pub fn lateral_displacement(reference: &[Point2], comparison: &[Point2]) -> Result<Vec<DisplacementSample>> {
    let line = Polyline::new(reference.iter().copied())
        .ok_or_else(|| Error::Comparison("reference needs at least two distinct points".into()))?;
    Ok(comparison
        .iter()
        .map(|p| {
            let pr = line.project(*p);
            DisplacementSample { s: pr.s, d: pr.d }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignedSample {
    pub step_index: u32,
    pub t: f64,
    pub reference: VehicleState,
    pub comparison: VehicleState,
}

/// Two executions of one agent paired by step index, truncated to the
/// shorter run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignedSeries {
    pub agent_id: u32,
    pub samples: Vec<AlignedSample>,
}

impl AlignedSeries {
    pub fn new(reference: &RunLog, comparison: &RunLog, agent_id: u32) -> Result<Self> {
        if reference.scenario_id != comparison.scenario_id {
            return Err(Error::Comparison(format!(
                "scenario ids differ: `{}` vs `{}`",
                reference.scenario_id, comparison.scenario_id
            )));
        }
        if reference.dt_plan != comparison.dt_plan {
            return Err(Error::Comparison(format!(
                "planning steps differ: {} vs {}",
                reference.dt_plan, comparison.dt_plan
            )));
        }
        let cmp: BTreeMap<u32, VehicleState> = comparison.executed(agent_id).into_iter().collect();
        let mut samples = Vec::new();
        for (step, r) in reference.executed(agent_id) {
            let Some(c) = cmp.get(&step) else { break };
            if r.t != c.t {
                return Err(Error::Comparison(format!("timestamps differ at step {step}")));
            }
            samples.push(AlignedSample {
                step_index: step,
                t: r.t,
                reference: r,
                comparison: *c,
            });
        }
        if samples.is_empty() {
            return Err(Error::Comparison(format!("agent {agent_id} has no common steps")));
        }
        Ok(Self { agent_id, samples })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MetricAggregates {
    pub max_abs_d: f64,
    pub mean_abs_d: f64,
    pub rmse_pos: f64,
    pub rmse_v: f64,
    pub max_abs_orientation: f64,
}

/// Error series between a reference and a comparison execution, one entry
/// per aligned step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    pub t: Vec<f64>,
    pub lateral_displacement: Vec<DisplacementSample>,
    pub position_error: Vec<f64>,
    /// Wrapped to (−π, π], comparison minus reference.
    pub orientation_error: Vec<f64>,
    pub v_reference: Vec<f64>,
    pub v_comparison: Vec<f64>,
    pub aggregates: MetricAggregates,
}

impl ErrorMetrics {
    /// Comparison minus reference speed.
    pub fn velocity_error(&self) -> Vec<f64> {
        self.v_comparison
            .iter()
            .zip(&self.v_reference)
            .map(|(c, r)| c - r)
            .collect()
    }

    fn from_pairs(t: Vec<f64>, reference: &[VehicleState], comparison: &[VehicleState]) -> Result<Self> {
        let ref_pts: Vec<Point2> = reference.iter().map(|s| Point2::new(s.x, s.y)).collect();
        let cmp_pts: Vec<Point2> = comparison.iter().map(|s| Point2::new(s.x, s.y)).collect();
        let lateral = lateral_displacement(&ref_pts, &cmp_pts)?;
        let position_error: Vec<f64> = ref_pts.iter().zip(&cmp_pts).map(|(a, b)| a.distance(*b)).collect();
        let orientation_error: Vec<f64> = reference
            .iter()
            .zip(comparison)
            .map(|(r, c)| wrap_angle(c.heading - r.heading))
            .collect();
        let v_reference: Vec<f64> = reference.iter().map(|s| s.v).collect();
        let v_comparison: Vec<f64> = comparison.iter().map(|s| s.v).collect();
        let mut m = Self {
            t,
            lateral_displacement: lateral,
            position_error,
            orientation_error,
            v_reference,
            v_comparison,
            aggregates: MetricAggregates::default(),
        };
        m.aggregates = m.recompute_aggregates();
        Ok(m)
    }

    /// Aggregates computed from the series alone.
    pub fn recompute_aggregates(&self) -> MetricAggregates {
        let n = self.t.len().max(1) as f64;
        let abs_d = self.lateral_displacement.iter().map(|x| x.d.abs());
        let v_sq: f64 = self.velocity_error().iter().map(|e| e * e).sum();
        MetricAggregates {
            max_abs_d: abs_d.clone().fold(0.0, f64::max),
            mean_abs_d: abs_d.sum::<f64>() / n,
            rmse_pos: (self.position_error.iter().map(|e| e * e).sum::<f64>() / n).sqrt(),
            rmse_v: (v_sq / n).sqrt(),
            max_abs_orientation: self.orientation_error.iter().fold(0.0, |m, e| m.max(e.abs())),
        }
    }
}

/// Errors of `comparison` against `reference` for one agent. The reference
/// path for `d` is the reference run's executed polyline.
pub fn compare_runs(reference: &RunLog, comparison: &RunLog, agent_id: u32) -> Result<ErrorMetrics> {
    let aligned = AlignedSeries::new(reference, comparison, agent_id)?;
    let t = aligned.samples.iter().map(|s| s.t).collect();
    let r: Vec<VehicleState> = aligned.samples.iter().map(|s| s.reference).collect();
    let c: Vec<VehicleState> = aligned.samples.iter().map(|s| s.comparison).collect();
    ErrorMetrics::from_pairs(t, &r, &c)
}

/// Errors of a run's executed states against the states it planned one step
/// earlier. The reference polyline is the sequence of planned states.
pub fn compare_planned_executed(log: &RunLog, agent_id: u32) -> Result<ErrorMetrics> {
    let pairs = log.planned_vs_executed(agent_id);
    if pairs.len() < 2 {
        return Err(Error::Comparison(format!(
            "agent {agent_id} has fewer than two planned steps"
        )));
    }
    let t = pairs.iter().map(|(_, _, s)| s.t).collect();
    let r: Vec<VehicleState> = pairs
        .iter()
        .map(|(_, p, s)| VehicleState {
            x: p.x,
            y: p.y,
            heading: p.heading,
            v: p.v,
            a: p.a,
            steer: 0.0,
            curvature: p.curvature,
            t: s.t,
        })
        .collect();
    let c: Vec<VehicleState> = pairs.iter().map(|(_, _, s)| *s).collect();
    ErrorMetrics::from_pairs(t, &r, &c)
}

/// Position of a scenario in the turn-geometry grid. `radius` is `None` for
/// the single straight scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridKey {
    pub radius: Option<f64>,
    pub angle: Angle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeatmapMetric {
    #[default]
    Max,
    Mean,
}

impl HeatmapMetric {
    pub fn pick(self, a: &MetricAggregates) -> f64 {
        match self {
            HeatmapMetric::Max => a.max_abs_d,
            HeatmapMetric::Mean => a.mean_abs_d,
        }
    }
}

impl core::str::FromStr for HeatmapMetric {
    type Err = alloc::string::String;
    fn from_str(s: &str) -> core::result::Result<Self, Self::Err> {
        match s {
            "max" => Ok(HeatmapMetric::Max),
            "mean" => Ok(HeatmapMetric::Mean),
            other => Err(format!("unknown metric `{other}` (expected max or mean)")),
        }
    }
}

/// |d| per (radius, angle) cell. `None` marks a scenario without a result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeatmapTable {
    pub metric: HeatmapMetric,
    /// Ascending.
    pub radii: Vec<f64>,
    /// Ascending, degrees.
    pub angles: Vec<f64>,
    /// `cells[row][col]` for `radii[row]`, `angles[col]`; `None` where the
    /// grid has no scenario.
    pub cells: Vec<Vec<Option<Option<f64>>>>,
    /// The straight scenario, when present.
    pub straight: Option<Option<f64>>,
}

impl HeatmapTable {
    pub fn get(&self, radius: f64, angle_deg: f64) -> Option<f64> {
        let r = self.radii.iter().position(|x| *x == radius)?;
        let c = self.angles.iter().position(|x| *x == angle_deg)?;
        self.cells[r][c].flatten()
    }

    /// Cells that exist in the grid but have no value.
    pub fn missing(&self) -> Vec<(Option<f64>, f64)> {
        let mut out = Vec::new();
        if self.straight == Some(None) {
            out.push((None, 0.0));
        }
        for (r, row) in self.radii.iter().zip(&self.cells) {
            for (a, cell) in self.angles.iter().zip(row) {
                if *cell == Some(None) {
                    out.push((Some(*r), *a));
                }
            }
        }
        out
    }

    /// Largest cell as `(radius, angle, value)`, first in row-major order on
    /// ties. The straight cell is not included.
    pub fn argmax(&self) -> Option<(f64, f64, f64)> {
        let mut best: Option<(f64, f64, f64)> = None;
        for (r, row) in self.radii.iter().zip(&self.cells) {
            for (a, cell) in self.angles.iter().zip(row) {
                if let Some(Some(v)) = cell {
                    if best.is_none_or(|b| *v > b.2) {
                        best = Some((*r, *a, *v));
                    }
                }
            }
        }
        best
    }

    /// Smallest value over all cells, straight included.
    pub fn min_value(&self) -> Option<f64> {
        self.cells
            .iter()
            .flatten()
            .chain(core::iter::once(&self.straight))
            .filter_map(|c| c.flatten())
            .reduce(f64::min)
    }
}

/// Heatmaps built from grid results. With `fold_negative`, negative angles go
/// to a second table indexed by |γ|; the two are never merged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridHeatmaps {
    pub main: HeatmapTable,
    pub negative: Option<HeatmapTable>,
}

fn build_table(metric: HeatmapMetric, entries: &[(GridKey, Option<f64>)]) -> HeatmapTable {
    let radii: BTreeSet<u64> = entries.iter().filter_map(|(k, _)| k.radius.map(f64::to_bits)).collect();
    let angles: BTreeSet<u64> = entries
        .iter()
        .filter(|(k, _)| k.radius.is_some())
        .map(|(k, _)| k.angle.degrees().to_bits())
        .collect();
    let mut radii: Vec<f64> = radii.into_iter().map(f64::from_bits).collect();
    let mut angles: Vec<f64> = angles.into_iter().map(f64::from_bits).collect();
    radii.sort_by(f64::total_cmp);
    angles.sort_by(f64::total_cmp);
    let mut cells = alloc::vec![alloc::vec![None; angles.len()]; radii.len()];
    let mut straight = None;
    for (k, v) in entries {
        match k.radius {
            None => straight = Some(*v),
            Some(r) => {
                let row = radii.iter().position(|x| *x == r).expect("radius collected");
                let col = angles
                    .iter()
                    .position(|x| *x == k.angle.degrees())
                    .expect("angle collected");
                cells[row][col] = Some(*v);
            }
        }
    }
    HeatmapTable {
        metric,
        radii,
        angles,
        cells,
        straight,
    }
}

/// Aggregates per-scenario results into heatmaps. A `None` aggregate marks a
/// scenario whose comparison failed.
pub fn aggregate_grid(
    results: &[(GridKey, Option<MetricAggregates>)],
    metric: HeatmapMetric,
    fold_negative: bool,
) -> Result<GridHeatmaps> {
    let mut seen = BTreeSet::new();
    for (k, _) in results {
        if let Some(r) = k.radius {
            if !(r.is_finite() && r > 0.0) {
                return Err(Error::Aggregation(format!("invalid radius {r}")));
            }
        }
        let key = (k.radius.map(f64::to_bits), k.angle.degrees().to_bits());
        if !seen.insert(key) {
            return Err(Error::Aggregation(format!(
                "duplicate cell (r = {:?}, γ = {}°)",
                k.radius,
                k.angle.degrees()
            )));
        }
    }
    let values: Vec<(GridKey, Option<f64>)> = results.iter().map(|(k, a)| (*k, a.map(|a| metric.pick(&a)))).collect();
    if !fold_negative {
        return Ok(GridHeatmaps {
            main: build_table(metric, &values),
            negative: None,
        });
    }
    let (neg, pos): (Vec<_>, Vec<_>) = values.into_iter().partition(|(k, _)| k.angle.degrees() < 0.0);
    let neg: Vec<_> = neg
        .into_iter()
        .map(|(k, v)| {
            (
                GridKey {
                    radius: k.radius,
                    angle: -k.angle,
                },
                v,
            )
        })
        .collect();
    Ok(GridHeatmaps {
        main: build_table(metric, &pos),
        negative: (!neg.is_empty()).then(|| build_table(metric, &neg)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RuntimeStats {
    pub count: usize,
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation; zero for a single run.
    pub std: f64,
    pub single_sample: bool,
}

/// Summary statistics of wall-clock durations in seconds.
pub fn runtime_stats(seconds: &[f64]) -> Result<RuntimeStats> {
    if seconds.is_empty() {
        return Err(Error::Stats("no completed runs".into()));
    }
    if seconds.iter().any(|x| !x.is_finite()) {
        return Err(Error::Stats("non-finite duration".into()));
    }
    let mut v = seconds.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let mean = v.iter().sum::<f64>() / n as f64;
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    };
    let std = if n > 1 {
        (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(RuntimeStats {
        count: n,
        min: v[0],
        max: v[n - 1],
        mean,
        median,
        std,
        single_sample: n == 1,
    })
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|a, b| x[*a].total_cmp(&x[*b]));
    let mut r = alloc::vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for k in i..=j {
            r[idx[k]] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::Stats(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Stats("need at least two pairs".into()));
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Stats("constant input has no rank correlation".into()));
    }
    Ok(sxy / (sxx * syy).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn runtime_stats_table() {
        let s = runtime_stats(&[3.0, 1.0, 2.0]).unwrap();
        assert_eq!((s.min, s.max, s.mean, s.median), (1.0, 3.0, 2.0, 2.0));
        assert!((s.std - 1.0).abs() < 1e-12);
        let one = runtime_stats(&[4.2]).unwrap();
        assert!(one.single_sample && one.std == 0.0);
        assert!(runtime_stats(&[]).is_err());
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        // Textbook value with one adjacent swap out of four: 1 − 6·2/60.
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap() - 0.8).abs() < 1e-12);
        assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn shifted_straight_line() {
        let r: Vec<Point2> = (0..20).map(|i| Point2::new(i as f64, 0.0)).collect();
        let c: Vec<Point2> = (0..20).map(|i| Point2::new(i as f64 + 0.3, 0.5)).collect();
        let d = lateral_displacement(&r, &c).unwrap();
        for (i, x) in d.iter().enumerate() {
            assert!((x.d - 0.5).abs() < 1e-12);
            assert!((x.s - (i as f64 + 0.3)).abs() < 1e-12);
        }
        assert!(lateral_displacement(&r[..1], &c).is_err());
    }

    #[test]
    fn grid_table_flags_missing_and_rejects_duplicates() {
        let a = |v: f64| {
            Some(MetricAggregates {
                max_abs_d: v,
                ..MetricAggregates::default()
            })
        };
        let key = |r: f64, g: f64| GridKey {
            radius: Some(r),
            angle: Angle::from_degrees(g),
        };
        let rows = [
            (key(10.0, 90.0), a(2.0)),
            (key(10.0, -90.0), a(2.1)),
            (key(20.0, 90.0), None),
            (
                GridKey {
                    radius: None,
                    angle: Angle::ZERO,
                },
                a(0.1),
            ),
        ];
        let t = aggregate_grid(&rows, HeatmapMetric::Max, true).unwrap();
        assert_eq!(t.main.angles, [90.0]);
        assert_eq!(t.main.get(10.0, 90.0), Some(2.0));
        assert_eq!(t.main.missing(), [(Some(20.0), 90.0)]);
        assert_eq!(t.negative.as_ref().unwrap().get(10.0, 90.0), Some(2.1));
        assert_eq!(t.main.min_value(), Some(0.1));
        let dup = [rows[0], rows[0]];
        assert!(matches!(
            aggregate_grid(&dup, HeatmapMetric::Max, false),
            Err(Error::Aggregation(_))
        ));
    }
}
