//! Rolling-origin forecast evaluation against a persistence baseline.
//!
//! Each segment is split chronologically; forecasts are launched from
//! origins spaced through the held-out portion, integrated over the
//! configured horizon with the recorded controls, and scored against the
//! observed glucose. The persistence baseline repeats the last observed
//! value, the standard no-skill reference for CGM forecasting.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math;
use crate::series::{AlignedDataset, UniformSeries};
use crate::sim::{simulate, ForecastStatus, SimConfig};
use crate::stlsq::SparseModel;

/// Rolling evaluation windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    /// Forecast horizon in grid steps (72 steps = 6 h on the 5-minute grid).
    pub horizon: usize,
    /// Spacing between consecutive origins in grid steps.
    pub origin_stride: usize,
    /// Fraction of each segment reserved for training; origins only start
    /// after it.
    pub split: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { horizon: 72, origin_stride: 12, split: 0.75 }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizon < 1 {
            return Err(Error::InvalidEvalConfig("horizon must be >= 1".into()));
        }
        if self.origin_stride < 1 {
            return Err(Error::InvalidEvalConfig("origin_stride must be >= 1".into()));
        }
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(Error::InvalidEvalConfig("split must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Root-mean-square error between two series on the same grid.
pub fn rmse(pred: &UniformSeries, truth: &UniformSeries) -> Result<f64> {
    let mut sq = 0.0f64;
    for (p, t) in paired(pred, truth)? {
        let e = p - t;
        sq += e * e;
    }
    Ok(math::sqrt(sq / pred.len() as f64))
}

/// Mean absolute error between two series on the same grid.
pub fn mae(pred: &UniformSeries, truth: &UniformSeries) -> Result<f64> {
    let mut acc = 0.0f64;
    for (p, t) in paired(pred, truth)? {
        acc += math::abs(p - t);
    }
    Ok(acc / pred.len() as f64)
}

fn paired<'a>(
    pred: &'a UniformSeries,
    truth: &'a UniformSeries,
) -> Result<impl Iterator<Item = (f64, f64)> + 'a> {
    if pred.len() != truth.len() {
        return Err(Error::MetricLengthMismatch(pred.len(), truth.len()));
    }
    if pred.dt() != truth.dt() || pred.t0() != truth.t0() {
        return Err(Error::MetricGridMismatch);
    }
    Ok(pred.values().iter().copied().zip(truth.values().iter().copied()))
}

/// Constant forecast repeating the last observed value over `horizon` steps
/// after the origin time.
pub fn persistence_baseline(
    truth_at_origin: f64,
    horizon: usize,
    origin_time: f64,
    dt: f64,
) -> Result<UniformSeries> {
    if !truth_at_origin.is_finite() {
        return Err(Error::NonFiniteValue(truth_at_origin));
    }
    UniformSeries::new(origin_time + dt, dt, alloc::vec![truth_at_origin; horizon], "mg/dL")
}

/// Scores for one forecast origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OriginEntry {
    pub origin_index: usize,
    /// Seconds since the epoch.
    pub origin_time: f64,
    /// Horizon steps actually scored (the full horizon unless the forecast
    /// diverged part-way).
    pub steps: usize,
    pub diverged: bool,
    pub rmse: f64,
    pub mae: f64,
    pub baseline_rmse: f64,
    pub baseline_mae: f64,
}

/// Aggregated rolling-origin evaluation.
///
/// `aggregate_*` are means over the included per-origin entries and are
/// `None` when every forecast was excluded. Baseline aggregates cover all
/// attempted origins: the persistence forecast always completes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_origin: Vec<OriginEntry>,
    pub aggregate_rmse: Option<f64>,
    pub aggregate_mae: Option<f64>,
    pub baseline_rmse: f64,
    pub baseline_mae: f64,
    /// Origins attempted, including excluded diverged ones.
    pub n_origins: usize,
    /// Forecasts that stopped before the full horizon.
    pub n_diverged: usize,
}

/// Evaluate `model` over rolling origins in the held-out part of every
/// segment.
///
/// The evaluated state is the model's first state channel. Diverged
/// forecasts are scored on the completed prefix when at least half the
/// horizon completed and are otherwise excluded from the model aggregates
/// (but still counted and still scored for the baseline).
pub fn rolling_evaluate(
    model: &SparseModel,
    dataset: &AlignedDataset,
    config: &EvalConfig,
    sim_config: &SimConfig,
) -> Result<EvalReport> {
    config.validate()?;
    let state_name = model
        .state_names
        .first()
        .ok_or(Error::LengthMismatch { what: "model states", expected: 1, got: 0 })?;
    let truth = dataset
        .state(state_name)
        .ok_or_else(|| Error::UnknownChannel(state_name.clone()))?;

    let mut per_origin = Vec::new();
    let mut baseline_rmse_sum = 0.0f64;
    let mut baseline_mae_sum = 0.0f64;
    let mut n_origins = 0usize;
    let mut n_diverged = 0usize;

    for seg in dataset.segments() {
        let seg_len = seg.end - seg.start;
        let train_len = math::floor(seg_len as f64 * config.split) as usize;
        let mut origin = seg.start + train_len;
        while origin + config.horizon < seg.end {
            n_origins += 1;
            let x0: Vec<f64> = model
                .state_names
                .iter()
                .map(|name| {
                    dataset
                        .state(name)
                        .ok_or_else(|| Error::UnknownChannel(name.clone()))
                        .map(|s| s.values()[origin])
                })
                .collect::<Result<Vec<_>>>()?;

            let truth_window = truth.slice(origin + 1..origin + config.horizon + 1)?;
            let baseline = persistence_baseline(
                truth.values()[origin],
                config.horizon,
                dataset.time(origin),
                dataset.dt(),
            )?;
            let b_rmse = rmse(&baseline, &truth_window)?;
            let b_mae = mae(&baseline, &truth_window)?;
            baseline_rmse_sum += b_rmse;
            baseline_mae_sum += b_mae;

            let forecast = simulate(model, &x0, dataset, origin, config.horizon, sim_config)?;
            let (steps, diverged) = match forecast.status() {
                ForecastStatus::Completed => (config.horizon, false),
                ForecastStatus::Diverged { index } => (index.saturating_sub(1), true),
            };
            if diverged {
                n_diverged += 1;
            }
            // Score only when at least half the horizon completed.
            if steps * 2 >= config.horizon && steps > 0 {
                let pred = forecast.series()[0].slice(1..steps + 1)?;
                let obs = truth.slice(origin + 1..origin + steps + 1)?;
                per_origin.push(OriginEntry {
                    origin_index: origin,
                    origin_time: dataset.time(origin),
                    steps,
                    diverged,
                    rmse: rmse(&pred, &obs)?,
                    mae: mae(&pred, &obs)?,
                    baseline_rmse: b_rmse,
                    baseline_mae: b_mae,
                });
            }
            origin += config.origin_stride;
        }
    }

    if n_origins == 0 {
        return Err(Error::NoValidOrigins);
    }
    let mean = |f: fn(&OriginEntry) -> f64| -> Option<f64> {
        if per_origin.is_empty() {
            None
        } else {
            Some(per_origin.iter().map(f).sum::<f64>() / per_origin.len() as f64)
        }
    };
    Ok(EvalReport {
        aggregate_rmse: mean(|e| e.rmse),
        aggregate_mae: mean(|e| e.mae),
        baseline_rmse: baseline_rmse_sum / n_origins as f64,
        baseline_mae: baseline_mae_sum / n_origins as f64,
        n_origins,
        n_diverged,
        per_origin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::TermDescriptor;
    use crate::stlsq::{Diagnostics, SparseModel, StlsqConfig};
    use alloc::collections::BTreeMap;
    use alloc::vec;
    use approx::assert_abs_diff_eq;

    fn series(values: Vec<f64>) -> UniformSeries {
        UniformSeries::new(0.0, 300.0, values, "mg/dL").unwrap()
    }

    #[test]
    fn identical_series_score_zero() {
        let a = series(vec![1.0, 2.0, 3.0]);
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_eq!(mae(&a, &a).unwrap(), 0.0);
    }

    #[test]
    fn constant_offset_scores_the_offset() {
        let truth = series(vec![10.0, 20.0, 30.0]);
        let pred = series(vec![13.0, 23.0, 33.0]);
        assert_abs_diff_eq!(rmse(&pred, &truth).unwrap(), 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(mae(&pred, &truth).unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn hand_computed_metrics() {
        let pred = series(vec![0.0, 0.0]);
        let truth = series(vec![3.0, 4.0]);
        assert_abs_diff_eq!(rmse(&pred, &truth).unwrap(), 12.5f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(mae(&pred, &truth).unwrap(), 3.5, epsilon = 1e-12);
    }

    #[test]
    fn metric_length_mismatch() {
        let a = series(vec![1.0, 2.0]);
        let b = series(vec![1.0, 2.0, 3.0]);
        assert!(matches!(rmse(&a, &b), Err(Error::MetricLengthMismatch(2, 3))));
    }

    #[test]
    fn baseline_is_constant() {
        let b = persistence_baseline(120.0, 3, 0.0, 300.0).unwrap();
        assert_eq!(b.values(), &[120.0, 120.0, 120.0]);
        assert_eq!(b.t0(), 300.0);
        let truth = UniformSeries::new(300.0, 300.0, vec![120.0; 3], "mg/dL").unwrap();
        assert_eq!(rmse(&b, &truth).unwrap(), 0.0);
    }

    #[test]
    fn baseline_against_rising_truth() {
        let b = persistence_baseline(120.0, 3, 0.0, 300.0).unwrap();
        let truth = UniformSeries::new(300.0, 300.0, vec![121.0, 122.0, 123.0], "mg/dL").unwrap();
        assert_abs_diff_eq!(
            rmse(&b, &truth).unwrap(),
            ((1.0 + 4.0 + 9.0) / 3.0f64).sqrt(),
            epsilon = 1e-12
        );
    }

    fn glucose_dataset(values: Vec<f64>) -> AlignedDataset {
        let n = values.len();
        let mut states = BTreeMap::new();
        states.insert("G".to_string(), series(values));
        AlignedDataset::new(0.0, 300.0, n, states, BTreeMap::new(), vec![0..n]).unwrap()
    }

    fn zero_dynamics_model() -> SparseModel {
        SparseModel {
            xi: vec![vec![0.0]],
            terms: vec![TermDescriptor::Constant],
            state_names: vec!["G".into()],
            control_names: vec![],
            config: StlsqConfig::default(),
            diagnostics: Diagnostics::default(),
        }
    }

    /// dG/dt = 0 forecasts exactly the persistence baseline; the two scoring
    /// paths must agree to numerical identity.
    #[test]
    fn zero_dynamics_model_ties_the_baseline() {
        let values: Vec<f64> = (0..120).map(|i| 110.0 + 20.0 * (i as f64 * 0.21).sin()).collect();
        let ds = glucose_dataset(values);
        let config = EvalConfig { horizon: 12, origin_stride: 4, split: 0.5 };
        let report =
            rolling_evaluate(&zero_dynamics_model(), &ds, &config, &SimConfig::default()).unwrap();
        assert!(report.n_origins > 1);
        assert_eq!(report.n_diverged, 0);
        assert!((report.aggregate_rmse.unwrap() - report.baseline_rmse).abs() < 1e-9);
        assert!((report.aggregate_mae.unwrap() - report.baseline_mae).abs() < 1e-9);
    }

    #[test]
    fn single_origin_dataset() {
        // Split 0.5 of 28 samples -> first origin at 14; horizon 12 fits
        // once, the next origin (14 + stride) does not.
        let values: Vec<f64> = (0..28).map(|i| 100.0 + i as f64).collect();
        let ds = glucose_dataset(values);
        let config = EvalConfig { horizon: 12, origin_stride: 16, split: 0.5 };
        let report =
            rolling_evaluate(&zero_dynamics_model(), &ds, &config, &SimConfig::default()).unwrap();
        assert_eq!(report.n_origins, 1);
        assert_eq!(report.per_origin.len(), 1);
        assert_eq!(report.per_origin[0].origin_index, 14);
    }

    #[test]
    fn no_valid_origins_is_an_error() {
        let ds = glucose_dataset(vec![100.0; 10]);
        let config = EvalConfig { horizon: 50, origin_stride: 1, split: 0.5 };
        assert!(matches!(
            rolling_evaluate(&zero_dynamics_model(), &ds, &config, &SimConfig::default()),
            Err(Error::NoValidOrigins)
        ));
    }

    #[test]
    fn aggregates_recompute_from_entries() {
        let values: Vec<f64> = (0..90).map(|i| 100.0 + (i as f64 * 0.4).cos() * 15.0).collect();
        let ds = glucose_dataset(values);
        let config = EvalConfig { horizon: 8, origin_stride: 3, split: 0.4 };
        let report =
            rolling_evaluate(&zero_dynamics_model(), &ds, &config, &SimConfig::default()).unwrap();
        let mean_rmse: f64 =
            report.per_origin.iter().map(|e| e.rmse).sum::<f64>() / report.per_origin.len() as f64;
        assert_abs_diff_eq!(report.aggregate_rmse.unwrap(), mean_rmse, epsilon = 1e-15);
    }
}
