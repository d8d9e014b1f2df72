//! Forward integration of an identified model under recorded control signals.
//!
//! The integrator is classical fixed-step RK4 running `substeps` internal
//! steps per grid interval (time unit: minutes, matching the derivative
//! convention). Control values at stage times come from the gridded control
//! channels by zero-order hold or linear interpolation, configurable per
//! channel. Divergence is a reported status, not an error: identified models
//! can be unstable and the evaluator wants the completed prefix.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::library::{compile_terms, CompiledTerm};
use crate::math;
use crate::series::{AlignedDataset, UniformSeries};
use crate::stlsq::SparseModel;

/// How control samples are read between grid points.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlInterp {
    /// Value of the grid point at or before the stage time.
    Hold,
    /// Linear interpolation between the surrounding grid points.
    Linear,
}

/// Integrator configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Internal RK4 steps per grid interval.
    pub substeps: usize,
    /// Interpolation for channels not listed in `channel_interp`.
    pub control_interp: ControlInterp,
    /// Per-channel overrides; step signals such as the basal rate should
    /// hold rather than interpolate.
    pub channel_interp: BTreeMap<String, ControlInterp>,
    /// Optional state clipping bounds. States are clipped into
    /// `[clamp_min, clamp_max]` after each internal step; exceeding the wider
    /// of the bounds tenfold stops the integration as diverged.
    pub clamp_min: Option<f64>,
    pub clamp_max: Option<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        let mut channel_interp = BTreeMap::new();
        channel_interp.insert(String::from(crate::events::CH_BASAL), ControlInterp::Hold);
        Self {
            substeps: 5,
            control_interp: ControlInterp::Linear,
            channel_interp,
            clamp_min: None,
            clamp_max: None,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.substeps < 1 {
            return Err(Error::InvalidSimConfig("substeps must be >= 1".into()));
        }
        if let (Some(lo), Some(hi)) = (self.clamp_min, self.clamp_max) {
            if !(lo < hi) {
                return Err(Error::InvalidSimConfig("clamp_min must be below clamp_max".into()));
            }
        }
        Ok(())
    }

    fn interp_for(&self, channel: &str) -> ControlInterp {
        self.channel_interp.get(channel).copied().unwrap_or(self.control_interp)
    }
}

/// Outcome of an integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForecastStatus {
    Completed,
    /// Integration stopped before producing grid index `index`; the forecast
    /// series hold exactly `index` finite values.
    Diverged { index: usize },
}

/// Forecast trajectories on the grid, one series per model state.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    state_names: Vec<String>,
    series: Vec<UniformSeries>,
    status: ForecastStatus,
}

impl Forecast {
    pub fn state_names(&self) -> &[String] {
        &self.state_names
    }

    pub fn series(&self) -> &[UniformSeries] {
        &self.series
    }

    pub fn state(&self, name: &str) -> Option<&UniformSeries> {
        self.state_names.iter().position(|n| n == name).map(|i| &self.series[i])
    }

    pub fn status(&self) -> ForecastStatus {
        self.status
    }

    /// Number of grid points produced (origin included).
    pub fn len(&self) -> usize {
        self.series.first().map_or(0, |s| s.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Evaluate the model right-hand side `Xi^T phi(state, controls)`.
///
/// `state` follows `model.state_names`, `controls` follows
/// `model.control_names`; the result is one derivative per state in units
/// per minute.
pub fn rhs_eval(model: &SparseModel, state: &[f64], controls: &[f64]) -> Result<Vec<f64>> {
    if state.len() != model.state_names.len() {
        return Err(Error::LengthMismatch {
            what: "state values",
            expected: model.state_names.len(),
            got: state.len(),
        });
    }
    if controls.len() != model.control_names.len() {
        return Err(Error::LengthMismatch {
            what: "control values",
            expected: model.control_names.len(),
            got: controls.len(),
        });
    }
    let compiled = compile_terms(&model.terms, &model.channel_names())?;
    let mut values = Vec::with_capacity(state.len() + controls.len());
    values.extend_from_slice(state);
    values.extend_from_slice(controls);
    Ok(eval_rhs_compiled(model, &compiled, &values))
}

fn eval_rhs_compiled(model: &SparseModel, compiled: &[CompiledTerm], values: &[f64]) -> Vec<f64> {
    let n_states = model.state_names.len();
    let mut out = vec![0.0f64; n_states];
    for (t, term) in compiled.iter().enumerate() {
        let row = &model.xi[t];
        if row.iter().all(|&c| c == 0.0) {
            continue;
        }
        let phi = term.eval(values);
        for (o, &c) in out.iter_mut().zip(row) {
            *o += c * phi;
        }
    }
    out
}

/// Integrate `model` forward `horizon` grid steps from `x0` at grid index
/// `origin` of `dataset`.
///
/// Every channel named in `model.control_names` must be a control channel of
/// the dataset, and the dataset must cover indices `origin ..= origin +
/// horizon`. The forecast is reported on the dataset grid, origin included.
pub fn simulate(
    model: &SparseModel,
    x0: &[f64],
    dataset: &AlignedDataset,
    origin: usize,
    horizon: usize,
    config: &SimConfig,
) -> Result<Forecast> {
    config.validate()?;
    model.validate()?;
    if x0.len() != model.state_names.len() {
        return Err(Error::LengthMismatch {
            what: "initial state values",
            expected: model.state_names.len(),
            got: x0.len(),
        });
    }
    if x0.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInitialState);
    }

    let needed = origin + horizon + 1;
    if dataset.len() < needed {
        return Err(Error::ControlCoverage {
            name: String::from("(grid)"),
            len: dataset.len(),
            needed,
        });
    }
    let control_values: Vec<(&[f64], ControlInterp)> = model
        .control_names
        .iter()
        .map(|name| {
            let series = dataset
                .control(name)
                .ok_or_else(|| Error::UnknownChannel(name.clone()))?;
            Ok((series.values(), config.interp_for(name)))
        })
        .collect::<Result<Vec<_>>>()?;

    let grid_dt = dataset.dt();
    let dt_min = grid_dt / 60.0;
    let h = dt_min / config.substeps as f64;

    let compiled = compile_terms(&model.terms, &model.channel_names())?;
    let n_states = model.state_names.len();
    let n_controls = model.control_names.len();

    // Control values at a fractional grid offset from the origin.
    let controls_at = |pos: f64, out: &mut [f64]| {
        for (slot, (values, interp)) in out.iter_mut().zip(&control_values) {
            let base = math::floor(pos);
            let k = origin + base as usize;
            let frac = pos - base;
            *slot = match interp {
                ControlInterp::Hold => values[k],
                ControlInterp::Linear => {
                    if frac == 0.0 {
                        values[k]
                    } else {
                        values[k] + (values[k + 1] - values[k]) * frac
                    }
                }
            };
        }
    };

    let diverge_bound = match (config.clamp_min, config.clamp_max) {
        (None, None) => f64::INFINITY,
        (lo, hi) => 10.0 * math::abs(lo.unwrap_or(0.0)).max(math::abs(hi.unwrap_or(0.0))),
    };

    let mut x = x0.to_vec();
    let mut outputs: Vec<Vec<f64>> = x0.iter().map(|&v| vec![v]).collect();
    let mut status = ForecastStatus::Completed;
    let mut values = vec![0.0f64; n_states + n_controls];
    let mut u = vec![0.0f64; n_controls];

    let eval = |x: &[f64], pos: f64, values: &mut [f64], u: &mut [f64]| -> Vec<f64> {
        controls_at(pos, u);
        values[..n_states].copy_from_slice(x);
        values[n_states..].copy_from_slice(u);
        eval_rhs_compiled(model, &compiled, values)
    };

    'steps: for step in 0..horizon {
        for sub in 0..config.substeps {
            let base = (step * config.substeps + sub) as f64;
            let s = config.substeps as f64;
            let p0 = base / s;
            let p_half = (base + 0.5) / s;
            let p1 = (base + 1.0) / s;

            let k1 = eval(&x, p0, &mut values, &mut u);
            let x2: Vec<f64> = x.iter().zip(&k1).map(|(xi, ki)| xi + 0.5 * h * ki).collect();
            let k2 = eval(&x2, p_half, &mut values, &mut u);
            let x3: Vec<f64> = x.iter().zip(&k2).map(|(xi, ki)| xi + 0.5 * h * ki).collect();
            let k3 = eval(&x3, p_half, &mut values, &mut u);
            let x4: Vec<f64> = x.iter().zip(&k3).map(|(xi, ki)| xi + h * ki).collect();
            let k4 = eval(&x4, p1, &mut values, &mut u);

            for (i, xi) in x.iter_mut().enumerate() {
                *xi += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }

            if x.iter().any(|v| !v.is_finite() || math::abs(*v) > diverge_bound) {
                status = ForecastStatus::Diverged { index: step + 1 };
                break 'steps;
            }
            if config.clamp_min.is_some() || config.clamp_max.is_some() {
                for v in x.iter_mut() {
                    if let Some(lo) = config.clamp_min {
                        *v = v.max(lo);
                    }
                    if let Some(hi) = config.clamp_max {
                        *v = v.min(hi);
                    }
                }
            }
        }
        for (out, &xi) in outputs.iter_mut().zip(&x) {
            out.push(xi);
        }
    }

    let t0 = dataset.time(origin);
    let series = outputs
        .into_iter()
        .map(|values| UniformSeries::new(t0, grid_dt, values, "mg/dL"))
        .collect::<Result<Vec<_>>>()?;
    Ok(Forecast { state_names: model.state_names.clone(), series, status })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{Exponents, TermDescriptor};
    use crate::stlsq::{Diagnostics, StlsqConfig};
    use approx::assert_abs_diff_eq;

    fn linear_model(
        states: &[&str],
        controls: &[&str],
        rows: Vec<(TermDescriptor, Vec<f64>)>,
    ) -> SparseModel {
        let (terms, xi): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
        SparseModel {
            xi,
            terms,
            state_names: states.iter().map(|s| s.to_string()).collect(),
            control_names: controls.iter().map(|s| s.to_string()).collect(),
            config: StlsqConfig::default(),
            diagnostics: Diagnostics::default(),
        }
    }

    fn monomial(name: &str) -> TermDescriptor {
        TermDescriptor::Monomial { exponents: Exponents(vec![(name.into(), 1)]) }
    }

    /// dx/dt = -x (per minute).
    fn decay_model() -> SparseModel {
        linear_model(
            &["x"],
            &[],
            vec![(TermDescriptor::Constant, vec![0.0]), (monomial("x"), vec![-1.0])],
        )
    }

    /// Channel-free dataset that only supplies the grid.
    fn bare_grid(dt_s: f64, n: usize) -> AlignedDataset {
        AlignedDataset::new(0.0, dt_s, n, BTreeMap::new(), BTreeMap::new(), vec![]).unwrap()
    }

    fn control_dataset(dt_s: f64, channels: &[(&str, Vec<f64>)]) -> AlignedDataset {
        let n = channels[0].1.len();
        let mut controls = BTreeMap::new();
        for (name, values) in channels {
            controls.insert(
                name.to_string(),
                UniformSeries::new(0.0, dt_s, values.clone(), "U").unwrap(),
            );
        }
        AlignedDataset::new(0.0, dt_s, n, BTreeMap::new(), controls, vec![]).unwrap()
    }

    #[test]
    fn zero_model_holds_state() {
        let model = linear_model(&["G"], &[], vec![(TermDescriptor::Constant, vec![0.0])]);
        let grid = bare_grid(300.0, 13);
        let f = simulate(&model, &[100.0], &grid, 0, 12, &SimConfig::default()).unwrap();
        assert_eq!(f.status(), ForecastStatus::Completed);
        assert!(f.state("G").unwrap().values().iter().all(|&v| v == 100.0));
    }

    #[test]
    fn rhs_eval_matches_direct_evaluation() {
        let model = linear_model(
            &["x"],
            &[],
            vec![(TermDescriptor::Constant, vec![0.0]), (monomial("x"), vec![-0.5])],
        );
        assert_eq!(rhs_eval(&model, &[2.0], &[]).unwrap(), vec![-1.0]);
        let zero = linear_model(&["x"], &[], vec![(TermDescriptor::Constant, vec![0.0])]);
        assert_eq!(rhs_eval(&zero, &[3.0], &[]).unwrap(), vec![0.0]);
    }

    #[test]
    fn rhs_eval_checks_lengths() {
        let model = decay_model();
        assert!(matches!(rhs_eval(&model, &[1.0, 2.0], &[]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(rhs_eval(&model, &[1.0], &[3.0]), Err(Error::LengthMismatch { .. })));
    }

    /// Oscillator model recovered in the stlsq tests: at (x, y) = (0, 1) the
    /// right-hand side is (1, 0).
    #[test]
    fn rhs_eval_oscillator_point() {
        let model = linear_model(
            &["x", "y"],
            &[],
            vec![
                (TermDescriptor::Constant, vec![0.0, 0.0]),
                (monomial("x"), vec![0.0, -1.0]),
                (monomial("y"), vec![1.0, 0.0]),
            ],
        );
        assert_eq!(rhs_eval(&model, &[0.0, 1.0], &[]).unwrap(), vec![1.0, 0.0]);
    }

    /// Analytic solution oracle: x(t) = e^(-t). Halving the internal step
    /// must cut the max error ~16x (fourth order).
    #[test]
    fn rk4_is_fourth_order_on_decay() {
        let model = decay_model();
        let horizon = 20usize;
        // 6 s grid; substeps=1 is then a 0.1-minute internal step, far into
        // the asymptotic regime for a unit decay rate.
        let grid = bare_grid(6.0, horizon + 1);
        let max_err = |substeps: usize| -> f64 {
            let config = SimConfig { substeps, ..SimConfig::default() };
            let f = simulate(&model, &[1.0], &grid, 0, horizon, &config).unwrap();
            let dt_min = f.series()[0].dt_minutes();
            f.series()[0]
                .values()
                .iter()
                .enumerate()
                .map(|(i, &v)| (v - (-(i as f64) * dt_min).exp()).abs())
                .fold(0.0, f64::max)
        };
        let errors: Vec<f64> = [1, 2, 4, 8].iter().map(|&s| max_err(s)).collect();
        for w in errors.windows(2) {
            let ratio = w[0] / w[1];
            assert!((14.0..=18.0).contains(&ratio), "ratio {ratio}, errors {errors:?}");
        }
    }

    #[test]
    fn determinism_bitwise() {
        let model = decay_model();
        let grid = bare_grid(300.0, 25);
        let a = simulate(&model, &[1.0], &grid, 0, 24, &SimConfig::default()).unwrap();
        let b = simulate(&model, &[1.0], &grid, 0, 24, &SimConfig::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn divergence_is_a_status_with_partial_trajectory() {
        // dx/dt = x^2 from x0 = 1 blows up in finite time.
        let model = linear_model(
            &["x"],
            &[],
            vec![(
                TermDescriptor::Monomial { exponents: Exponents(vec![("x".into(), 2)]) },
                vec![1.0],
            )],
        );
        let grid = bare_grid(300.0, 101);
        let f = simulate(&model, &[1.0], &grid, 0, 100, &SimConfig::default()).unwrap();
        match f.status() {
            ForecastStatus::Diverged { index } => {
                assert_eq!(f.len(), index);
                assert!(f.series()[0].values().iter().all(|v| v.is_finite()));
            }
            ForecastStatus::Completed => panic!("expected divergence"),
        }
    }

    #[test]
    fn clamp_overflow_stops_integration() {
        let model = linear_model(&["x"], &[], vec![(monomial("x"), vec![1.0])]);
        let config =
            SimConfig { clamp_min: Some(0.0), clamp_max: Some(2.0), ..SimConfig::default() };
        // Clipping holds x at 2; the state never reaches 10x the bound.
        let grid = bare_grid(300.0, 41);
        let f = simulate(&model, &[1.0], &grid, 0, 40, &config).unwrap();
        assert_eq!(f.status(), ForecastStatus::Completed);
        let last = *f.series()[0].values().last().unwrap();
        assert_abs_diff_eq!(last, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn control_driven_integration_uses_interpolation() {
        // dx/dt = u with u ramping linearly in time: x gains the exact
        // integral of u because RK4 is exact on polynomials.
        let model = linear_model(&["x"], &["u"], vec![(monomial("u"), vec![1.0])]);
        let ramp: Vec<f64> = (0..13).map(|i| i as f64).collect();
        let ds = control_dataset(300.0, &[("u", ramp)]);
        let f = simulate(&model, &[0.0], &ds, 0, 12, &SimConfig::default()).unwrap();
        // u(t) = t/5 per minute; integral over 60 minutes is 360.
        let last = *f.series()[0].values().last().unwrap();
        assert_abs_diff_eq!(last, 360.0, epsilon = 1e-9);
    }

    #[test]
    fn hold_integrates_less_of_a_rising_ramp_than_linear() {
        let model = linear_model(&["x"], &["u"], vec![(monomial("u"), vec![1.0])]);
        let ds = control_dataset(300.0, &[("u", vec![0.0, 10.0, 20.0])]);
        let linear = simulate(&model, &[0.0], &ds, 0, 2, &SimConfig::default()).unwrap();
        let mut config = SimConfig::default();
        config.channel_interp.insert("u".into(), ControlInterp::Hold);
        let held = simulate(&model, &[0.0], &ds, 0, 2, &config).unwrap();
        let l = *linear.series()[0].values().last().unwrap();
        let h = *held.series()[0].values().last().unwrap();
        assert_abs_diff_eq!(l, 100.0, epsilon = 1e-9);
        assert!(h < 0.75 * l, "hold {h} vs linear {l}");
    }

    #[test]
    fn missing_or_short_controls_error() {
        let model = linear_model(&["x"], &["u"], vec![(monomial("u"), vec![1.0])]);
        let bare = bare_grid(300.0, 10);
        assert!(matches!(
            simulate(&model, &[0.0], &bare, 0, 4, &SimConfig::default()),
            Err(Error::UnknownChannel(_))
        ));
        let ds = control_dataset(300.0, &[("u", vec![1.0, 1.0, 1.0])]);
        assert!(matches!(
            simulate(&model, &[0.0], &ds, 0, 4, &SimConfig::default()),
            Err(Error::ControlCoverage { .. })
        ));
    }

    #[test]
    fn non_finite_x0_is_rejected() {
        let model = decay_model();
        let grid = bare_grid(300.0, 10);
        assert!(matches!(
            simulate(&model, &[f64::NAN], &grid, 0, 4, &SimConfig::default()),
            Err(Error::NonFiniteInitialState)
        ));
    }

    #[test]
    fn equilibrium_is_preserved() {
        // dx/dt = -(x - 100) has an equilibrium at exactly 100.
        let model = linear_model(
            &["x"],
            &[],
            vec![(TermDescriptor::Constant, vec![100.0]), (monomial("x"), vec![-1.0])],
        );
        let grid = bare_grid(300.0, 51);
        let f = simulate(&model, &[100.0], &grid, 0, 50, &SimConfig::default()).unwrap();
        for &v in f.series()[0].values() {
            assert!((v - 100.0).abs() < 1e-12);
        }
    }

    #[test]
    fn autonomy_time_shift_invariance() {
        // Constant control, two different origins: same trajectory values.
        let model = linear_model(
            &["x"],
            &["u"],
            vec![(monomial("x"), vec![-0.1]), (monomial("u"), vec![0.5])],
        );
        let ds = control_dataset(300.0, &[("u", vec![2.0; 40])]);
        let a = simulate(&model, &[50.0], &ds, 0, 10, &SimConfig::default()).unwrap();
        let b = simulate(&model, &[50.0], &ds, 20, 10, &SimConfig::default()).unwrap();
        assert_eq!(a.series()[0].values(), b.series()[0].values());
    }
}
