//! Synthetic patient generator with known ground-truth dynamics.
//!
//! Real patient records are license-restricted, so end-to-end recovery is
//! verified against a generated patient whose glucose follows a known sparse
//! ODE:
//!
//! ```text
//! dG/dt = -p1 * (G - Gb) - p2 * I_act + p3 * C_act
//! ```
//!
//! with bolus and carb activities produced by the default dissolution
//! profiles. The trajectory is integrated by RK4 at a 0.1-minute internal
//! step, sampled on the 5-minute grid, and optionally corrupted by Gaussian
//! sensor noise on glucose only (pump records are exact).
//!
//! Noise comes from a seeded 64-bit counter-based generator (documented in
//! the repository README) so that datasets are reproducible byte for byte,
//! independently of platform or call order.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::events::{CH_BOLUS_ACT, CH_CARB_ACT, CH_GLUCOSE};
use crate::library::{enumerate_terms, LibrarySpec};
use crate::math;
use crate::pk::{events_to_activity, ActionProfile};
use crate::series::{AlignedDataset, UniformSeries};
use crate::sim::{simulate, ControlInterp, ForecastStatus, SimConfig};
use crate::stlsq::{Diagnostics, SparseModel, StlsqConfig};

/// Grid anchor for generated datasets: 2024-01-01T00:00:00Z.
pub const SYNTH_EPOCH: f64 = 1_704_067_200.0;

/// Grid step of generated datasets, seconds.
pub const SYNTH_DT: f64 = 300.0;

/// One scheduled meal or bolus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduleEvent {
    /// Minutes after the start of the dataset.
    pub at_min: f64,
    /// Grams for meals, units for boluses.
    pub amount: f64,
}

impl ScheduleEvent {
    pub fn new(at_min: f64, amount: f64) -> Self {
        Self { at_min, amount }
    }
}

/// Ground-truth parameters and schedule for one synthetic patient.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub duration_hours: f64,
    pub seed: u64,
    /// Gaussian sensor noise on glucose, mg/dL.
    pub noise_sd: f64,
    /// Return rate towards basal glucose, 1/min.
    pub p1: f64,
    /// Insulin effect, mg/dL per unit of bolus activity per min.
    pub p2: f64,
    /// Carb effect, mg/dL per gram of carb activity per min.
    pub p3: f64,
    /// Basal glucose, mg/dL.
    pub gb: f64,
    /// Starting glucose; defaults to `gb`.
    pub g0: Option<f64>,
    pub meals: Vec<ScheduleEvent>,
    pub boluses: Vec<ScheduleEvent>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        // Two days of three meals plus a snack and correction boluses.
        // Boluses lag the meals and the insulin-to-carb ratios vary, so
        // glucose swings tens of mg/dL both ways and the two activity
        // signals stay distinguishable to the regression.
        let daily_meals = [(60.0, 60.0), (360.0, 340.0), (810.0, 220.0), (1200.0, 320.0)];
        let daily_boluses =
            [(180.0, 3.0), (480.0, 16.0), (690.0, 4.0), (900.0, 12.0), (1320.0, 15.0)];
        let mut meals = Vec::new();
        let mut boluses = Vec::new();
        for day in 0..2 {
            let offset = day as f64 * 1440.0;
            meals.extend(daily_meals.iter().map(|&(t, g)| ScheduleEvent::new(t + offset, g)));
            boluses.extend(daily_boluses.iter().map(|&(t, u)| ScheduleEvent::new(t + offset, u)));
        }
        Self {
            duration_hours: 48.0,
            seed: 1,
            noise_sd: 0.0,
            p1: 0.02,
            p2: 1.5,
            p3: 0.05,
            gb: 110.0,
            g0: None,
            meals,
            boluses,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_hours >= 4.0) {
            return Err(Error::InvalidSynthConfig("duration must be at least 4 hours".into()));
        }
        if !(self.noise_sd >= 0.0) || !self.noise_sd.is_finite() {
            return Err(Error::InvalidSynthConfig("noise_sd must be >= 0".into()));
        }
        if !(self.p1 > 0.0) {
            return Err(Error::InvalidSynthConfig("p1 must be > 0".into()));
        }
        if !(self.gb > 50.0 && self.gb < 200.0) {
            return Err(Error::InvalidSynthConfig("gb must lie in (50, 200) mg/dL".into()));
        }
        let duration_min = self.duration_hours * 60.0;
        for ev in self.meals.iter().chain(self.boluses.iter()) {
            if !(ev.at_min >= 0.0 && ev.at_min <= duration_min) {
                return Err(Error::ScheduleOutOfRange(ev.at_min));
            }
            if !(ev.amount >= 0.0) || !ev.amount.is_finite() {
                return Err(Error::InvalidSynthConfig("schedule amounts must be >= 0".into()));
            }
        }
        Ok(())
    }
}

/// A generated dataset together with the exact model that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthDataset {
    pub dataset: AlignedDataset,
    pub truth: SparseModel,
}

/// Generate a synthetic patient. Deterministic for a fixed config.
pub fn generate(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let dt_min = SYNTH_DT / 60.0;
    let n = math::round(config.duration_hours * 60.0 / dt_min) as usize + 1;

    let bin_doses = |schedule: &[ScheduleEvent]| -> Vec<f64> {
        let mut bins = vec![0.0f64; n];
        for ev in schedule {
            let idx = math::round(ev.at_min / dt_min) as usize;
            if idx < n {
                bins[idx] += ev.amount;
            }
        }
        bins
    };
    let bolus_series =
        UniformSeries::new(SYNTH_EPOCH, SYNTH_DT, bin_doses(&config.boluses), "U")?;
    let carb_series = UniformSeries::new(SYNTH_EPOCH, SYNTH_DT, bin_doses(&config.meals), "g")?;
    let i_act = events_to_activity(&bolus_series, &ActionProfile::bolus_default())?;
    let c_act = events_to_activity(&carb_series, &ActionProfile::carb_default())?;

    let truth = truth_model(config)?;

    let mut controls = BTreeMap::new();
    controls.insert(String::from(CH_BOLUS_ACT), i_act);
    controls.insert(String::from(CH_CARB_ACT), c_act);
    let control_ds =
        AlignedDataset::new(SYNTH_EPOCH, SYNTH_DT, n, BTreeMap::new(), controls, vec![])?;

    let sim_config = SimConfig {
        substeps: 50, // 0.1-minute internal step
        control_interp: ControlInterp::Linear,
        channel_interp: BTreeMap::new(),
        clamp_min: None,
        clamp_max: None,
    };
    let g0 = config.g0.unwrap_or(config.gb);
    let forecast = simulate(&truth, &[g0], &control_ds, 0, n - 1, &sim_config)?;
    if forecast.status() != ForecastStatus::Completed {
        return Err(Error::InvalidSynthConfig("true dynamics diverged; check parameters".into()));
    }

    let mut glucose = forecast.series()[0].values().to_vec();
    if config.noise_sd > 0.0 {
        for (i, g) in glucose.iter_mut().enumerate() {
            *g += config.noise_sd * gaussian(config.seed, i as u64);
        }
    }
    for (index, &value) in glucose.iter().enumerate() {
        if !(value > 20.0 && value < 600.0) {
            return Err(Error::SynthGlucoseOutOfRange { index, value });
        }
    }

    let mut states = BTreeMap::new();
    states.insert(
        String::from(CH_GLUCOSE),
        UniformSeries::new(SYNTH_EPOCH, SYNTH_DT, glucose, "mg/dL")?,
    );
    let dataset = AlignedDataset::new(
        SYNTH_EPOCH,
        SYNTH_DT,
        n,
        states,
        control_ds.controls().clone(),
        vec![0..n],
    )?;
    Ok(SynthDataset { dataset, truth })
}

/// The exact sparse model implementing the generator dynamics, expressed over
/// the degree-1 terms of the default library ordering.
fn truth_model(config: &SynthConfig) -> Result<SparseModel> {
    let channels: Vec<String> = vec![
        String::from(CH_GLUCOSE),
        String::from(CH_CARB_ACT),
        String::from(CH_BOLUS_ACT),
    ];
    let spec = LibrarySpec {
        poly_degree: 1,
        include_trig: false,
        trig_frequencies: vec![],
        channels,
    };
    // Terms: [1, G, C_act, I_act]
    let terms = enumerate_terms(&spec)?;
    let xi = vec![
        vec![config.p1 * config.gb],
        vec![-config.p1],
        vec![config.p3],
        vec![-config.p2],
    ];
    Ok(SparseModel {
        xi,
        terms,
        state_names: vec![String::from(CH_GLUCOSE)],
        control_names: vec![String::from(CH_CARB_ACT), String::from(CH_BOLUS_ACT)],
        config: StlsqConfig::default(),
        diagnostics: Diagnostics::default(),
    })
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    z
}

/// Uniform draw in (0, 1] from a seed and counter; stateless, so sample `i`
/// never depends on how many samples were drawn before it.
fn uniform(seed: u64, counter: u64) -> f64 {
    let z = mix64(
        seed.wrapping_add(counter.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
    );
    ((z >> 11) + 1) as f64 * (1.0 / 9_007_199_254_740_992.0) // 2^-53
}

/// Standard normal draw `i` by the Box-Muller transform over counters
/// `2i` and `2i + 1`.
fn gaussian(seed: u64, i: u64) -> f64 {
    let u1 = uniform(seed, 2 * i);
    let u2 = uniform(seed, 2 * i + 1);
    math::sqrt(-2.0 * math::ln(u1)) * math::cos(2.0 * core::f64::consts::PI * u2)
}
