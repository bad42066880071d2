//! Stride-averaged biomechanical metrics: mean trajectories with +/-2 SD
//! bands over gait percentage, RMSE against references, peaks, and
//! gait-percentage estimation error.
//!
//! Peaks are reported in the conventional plantarflexion-positive sense:
//! peak plantarflexion angle is `max(-theta)` and peak torque is
//! `max(-tau)` under the crate's dorsiflexion-positive convention.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::impedance::ReferenceTrajectories;
use crate::replay::TelemetryRecord;

/// Gait-percentage grid for band trajectories.
pub const REPORT_GRID_POINTS: usize = 101;

/// Circular-aware absolute gait-percentage difference (distance modulo 100).
pub fn circular_pct_error(a: f64, b: f64) -> f64 {
    ((a - b + 50.0).rem_euclid(100.0) - 50.0).abs()
}

/// Which trajectory a band row describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BandMetric {
    /// Ankle angle, degrees.
    Angle,
    /// Commanded torque, Nm/kg.
    Torque,
    /// Ankle power, W/kg.
    Power,
    /// Volitional intent.
    Intent,
}

pub const BAND_METRICS: [BandMetric; 4] = [
    BandMetric::Angle,
    BandMetric::Torque,
    BandMetric::Power,
    BandMetric::Intent,
];

/// Mean +/- 2 SD band sample at one gait percentage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub metric: BandMetric,
    pub s: f64,
    pub mean: f64,
    pub sd: f64,
    pub lo: f64,
    pub hi: f64,
}

/// Per-stride metrics row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrideMetrics {
    pub stride: usize,
    pub n_frames: usize,
    pub duration_s: f64,
    pub angle_rmse_deg: f64,
    pub torque_rmse_nm_per_kg: f64,
    pub power_rmse_w_per_kg: f64,
    pub peak_plantarflexion_deg: f64,
    pub peak_torque_nm_per_kg: f64,
    pub peak_power_w_per_kg: f64,
    pub est_err_mean_pct: f64,
    pub est_err_max_pct: f64,
    /// Ground-truth percentage where this stride's maximum error occurred.
    pub est_err_argmax_gt_pct: f64,
}

/// Aggregate metrics, all recomputable from the per-stride rows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateMetrics {
    pub n_strides: usize,
    pub n_frames: usize,
    /// Frame-weighted means of the per-stride RMSE values.
    pub angle_rmse_deg: f64,
    pub torque_rmse_nm_per_kg: f64,
    pub power_rmse_w_per_kg: f64,
    /// Means of the per-stride peaks.
    pub peak_plantarflexion_deg: f64,
    pub peak_torque_nm_per_kg: f64,
    pub peak_power_w_per_kg: f64,
    /// Absolute peak torque for the configured body mass, Nm.
    pub peak_torque_nm_absolute: f64,
    /// Frame-weighted mean absolute estimation error.
    pub est_err_mean_pct: f64,
    /// Pooled maximum over all strides, with its ground-truth location.
    pub est_err_max_pooled_pct: f64,
    pub est_err_max_pooled_at_gt_pct: f64,
    /// Mean of the per-stride maxima.
    pub est_err_max_stride_mean_pct: f64,
    /// Safety-clamp engagements over the run.
    pub clamp_events: usize,
}

/// Full stride report: per-stride rows, aggregates, and band trajectories.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrideReport {
    pub strides: Vec<StrideMetrics>,
    pub aggregate: AggregateMetrics,
    pub bands: Vec<BandRow>,
}

/// Builds the stride report from telemetry.
///
/// Every complete stride is included; none are dropped as outliers.
pub fn compute_report(
    telemetry: &[TelemetryRecord],
    refs: &ReferenceTrajectories,
    body_mass_kg: f64,
) -> Result<StrideReport> {
    let n_strides = telemetry
        .iter()
        .filter_map(|r| r.stride)
        .max()
        .map(|m| m + 1)
        .unwrap_or(0);
    if n_strides == 0 {
        return Err(Error::InsufficientStrides {
            required: 1,
            available: 0,
        });
    }

    let mut strides = Vec::with_capacity(n_strides);
    // per stride per metric: resampled trajectories on the report grid
    let mut grids: Vec<[Vec<f64>; 4]> = Vec::with_capacity(n_strides);

    for stride in 0..n_strides {
        let rows: Vec<&TelemetryRecord> = telemetry
            .iter()
            .filter(|r| r.stride == Some(stride))
            .collect();
        if rows.len() < 2 {
            return Err(Error::DegenerateStride {
                t_start: rows.first().map(|r| r.t).unwrap_or(0.0),
                t_end: rows.last().map(|r| r.t).unwrap_or(0.0),
            });
        }
        let gt: Vec<f64> = rows.iter().map(|r| r.s_gt.expect("stride row")).collect();
        let angle = resample(&gt, rows.iter().map(|r| r.theta_ankle));
        let torque = resample(&gt, rows.iter().map(|r| r.tau_total));
        let power = resample(&gt, rows.iter().map(|r| r.power));
        let intent = resample(&gt, rows.iter().map(|r| r.u));

        let mut angle_sq = 0.0;
        let mut torque_sq = 0.0;
        let mut power_sq = 0.0;
        for i in 0..REPORT_GRID_POINTS {
            let (theta_ref, tau_ref, power_ref) = refs.sample(i as f64);
            angle_sq += (angle[i] - theta_ref).powi(2);
            torque_sq += (torque[i] - tau_ref).powi(2);
            power_sq += (power[i] - power_ref).powi(2);
        }
        let n_grid = REPORT_GRID_POINTS as f64;

        let mut est_sum = 0.0;
        let mut est_max = f64::NEG_INFINITY;
        let mut est_argmax = 0.0;
        for r in &rows {
            let err = circular_pct_error(r.s_est, r.s_gt.expect("stride row"));
            est_sum += err;
            if err > est_max {
                est_max = err;
                est_argmax = r.s_gt.expect("stride row");
            }
        }

        strides.push(StrideMetrics {
            stride,
            n_frames: rows.len(),
            duration_s: rows.last().unwrap().t - rows.first().unwrap().t,
            angle_rmse_deg: (angle_sq / n_grid).sqrt(),
            torque_rmse_nm_per_kg: (torque_sq / n_grid).sqrt(),
            power_rmse_w_per_kg: (power_sq / n_grid).sqrt(),
            peak_plantarflexion_deg: rows.iter().map(|r| -r.theta_ankle).fold(f64::MIN, f64::max),
            peak_torque_nm_per_kg: rows.iter().map(|r| -r.tau_total).fold(f64::MIN, f64::max),
            peak_power_w_per_kg: rows.iter().map(|r| r.power).fold(f64::MIN, f64::max),
            est_err_mean_pct: est_sum / rows.len() as f64,
            est_err_max_pct: est_max,
            est_err_argmax_gt_pct: est_argmax,
        });
        grids.push([angle, torque, power, intent]);
    }

    let bands = compute_bands(&grids);
    let aggregate = aggregate_from_strides(&strides, telemetry, body_mass_kg);
    Ok(StrideReport {
        strides,
        aggregate,
        bands,
    })
}

fn aggregate_from_strides(
    strides: &[StrideMetrics],
    telemetry: &[TelemetryRecord],
    body_mass_kg: f64,
) -> AggregateMetrics {
    let n_frames: usize = strides.iter().map(|s| s.n_frames).sum();
    let weight = |f: fn(&StrideMetrics) -> f64| {
        strides
            .iter()
            .map(|s| f(s) * s.n_frames as f64)
            .sum::<f64>()
            / n_frames as f64
    };
    let mean = |f: fn(&StrideMetrics) -> f64| {
        strides.iter().map(f).sum::<f64>() / strides.len() as f64
    };
    let (pooled_max, pooled_at) = strides
        .iter()
        .map(|s| (s.est_err_max_pct, s.est_err_argmax_gt_pct))
        .fold((f64::MIN, 0.0), |acc, v| if v.0 > acc.0 { v } else { acc });
    let peak_torque = mean(|s| s.peak_torque_nm_per_kg);
    AggregateMetrics {
        n_strides: strides.len(),
        n_frames,
        angle_rmse_deg: weight(|s| s.angle_rmse_deg),
        torque_rmse_nm_per_kg: weight(|s| s.torque_rmse_nm_per_kg),
        power_rmse_w_per_kg: weight(|s| s.power_rmse_w_per_kg),
        peak_plantarflexion_deg: mean(|s| s.peak_plantarflexion_deg),
        peak_torque_nm_per_kg: peak_torque,
        peak_power_w_per_kg: mean(|s| s.peak_power_w_per_kg),
        peak_torque_nm_absolute: peak_torque * body_mass_kg,
        est_err_mean_pct: weight(|s| s.est_err_mean_pct),
        est_err_max_pooled_pct: pooled_max,
        est_err_max_pooled_at_gt_pct: pooled_at,
        est_err_max_stride_mean_pct: mean(|s| s.est_err_max_pct),
        clamp_events: telemetry.iter().filter(|r| r.clamped).count(),
    }
}

fn compute_bands(grids: &[[Vec<f64>; 4]]) -> Vec<BandRow> {
    let n = grids.len() as f64;
    let mut bands = Vec::with_capacity(4 * REPORT_GRID_POINTS);
    for (m, metric) in BAND_METRICS.iter().enumerate() {
        for i in 0..REPORT_GRID_POINTS {
            let values: Vec<f64> = grids.iter().map(|g| g[m][i]).collect();
            let mean = values.iter().sum::<f64>() / n;
            let sd = if values.len() > 1 {
                (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
            } else {
                0.0
            };
            bands.push(BandRow {
                metric: *metric,
                s: i as f64,
                mean,
                sd,
                lo: mean - 2.0 * sd,
                hi: mean + 2.0 * sd,
            });
        }
    }
    bands
}

/// Resamples a stride trajectory onto the report grid by linear interpolation
/// against ground-truth percentage, extrapolating the end segments.
fn resample<I: Iterator<Item = f64>>(gt: &[f64], values: I) -> Vec<f64> {
    let pts: Vec<(f64, f64)> = gt.iter().cloned().zip(values).collect();
    let n = pts.len();
    (0..REPORT_GRID_POINTS)
        .map(|i| {
            let x = i as f64;
            let (a, b) = if x <= pts[0].0 {
                (pts[0], pts[1])
            } else if x >= pts[n - 1].0 {
                (pts[n - 2], pts[n - 1])
            } else {
                let idx = pts.partition_point(|p| p.0 < x);
                (pts[idx - 1], pts[idx])
            };
            let t = (x - a.0) / (b.0 - a.0);
            a.1 + t * (b.1 - a.1)
        })
        .collect()
}

pub fn write_strides_to<W: Write>(writer: W, strides: &[StrideMetrics]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for s in strides {
        wtr.serialize(s)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_bands_to<W: Write>(writer: W, bands: &[BandRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    for b in bands {
        wtr.serialize(b)?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ControllerConfig, ControllerKind};
    use crate::design;
    use crate::impedance::passive_profile;
    use crate::plant::GaitSynthParams;
    use crate::replay::run_replay;
    use crate::signals::DEFAULT_HEEL_THRESHOLD;

    fn passive_cfg() -> ControllerConfig {
        ControllerConfig {
            kind: ControllerKind::Passive,
            profile: passive_profile(),
            phase: None,
            volitional: None,
            body_mass_kg: 75.0,
            torque_limit: 2.5,
            rate_hz: 220.0,
        }
    }

    fn sample_report() -> StrideReport {
        let frames = crate::plant::synth_gait(&GaitSynthParams::default()).unwrap();
        let out = run_replay(passive_cfg(), &frames, DEFAULT_HEEL_THRESHOLD).unwrap();
        compute_report(&out.telemetry, &design::default_references(), 75.0).unwrap()
    }

    #[test]
    fn circular_error_handles_the_seam() {
        assert_eq!(circular_pct_error(99.5, 0.5), 1.0);
        assert_eq!(circular_pct_error(0.5, 99.5), 1.0);
        assert_eq!(circular_pct_error(50.0, 40.0), 10.0);
        assert_eq!(circular_pct_error(10.0, 10.0), 0.0);
    }

    #[test]
    fn aggregate_is_recomputable_from_stride_rows() {
        let report = sample_report();
        let agg = &report.aggregate;
        assert_eq!(agg.n_strides, report.strides.len());
        let n_frames: usize = report.strides.iter().map(|s| s.n_frames).sum();
        assert_eq!(agg.n_frames, n_frames);

        let weighted_rmse: f64 = report
            .strides
            .iter()
            .map(|s| s.angle_rmse_deg * s.n_frames as f64)
            .sum::<f64>()
            / n_frames as f64;
        assert!((agg.angle_rmse_deg - weighted_rmse).abs() < 1e-12);

        let mean_peak: f64 = report
            .strides
            .iter()
            .map(|s| s.peak_plantarflexion_deg)
            .sum::<f64>()
            / report.strides.len() as f64;
        assert!((agg.peak_plantarflexion_deg - mean_peak).abs() < 1e-12);

        let pooled = report
            .strides
            .iter()
            .map(|s| s.est_err_max_pct)
            .fold(f64::MIN, f64::max);
        assert_eq!(agg.est_err_max_pooled_pct, pooled);
    }

    #[test]
    fn bands_cover_grid_for_all_metrics() {
        let report = sample_report();
        assert_eq!(report.bands.len(), 4 * REPORT_GRID_POINTS);
        for band in &report.bands {
            assert!(band.lo <= band.mean && band.mean <= band.hi);
            assert!(band.sd >= 0.0);
        }
    }

    #[test]
    fn report_round_trips_as_json() {
        let report = sample_report();
        let json = serde_json::to_string_pretty(&report).unwrap();
        let back: StrideReport = serde_json::from_str(&json).unwrap();
        assert_eq!(report, back);
    }

    #[test]
    fn report_requires_at_least_one_stride() {
        let refs = design::default_references();
        assert!(matches!(
            compute_report(&[], &refs, 75.0),
            Err(Error::InsufficientStrides { .. })
        ));
    }
}
