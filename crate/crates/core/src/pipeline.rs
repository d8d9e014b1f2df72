//! Composition of the identification pipeline: activity transforms, segment
//! stacking, differentiation and the sparse regression, producing a fitted
//! model from an aligned dataset.

use alloc::string::String;
use alloc::vec::Vec;

use crate::diff::{differentiate, DerivativeSpec};
use crate::error::{Error, Result};
use crate::events::{CH_BOLUS, CH_BOLUS_ACT, CH_CARBS, CH_CARB_ACT};
use crate::library::{build_matrix, FeatureMatrix, LibrarySpec};
use crate::pk::{events_to_activity, ActionProfile};
use crate::series::AlignedDataset;
use crate::stlsq::{stlsq, SparseModel, StlsqConfig};

/// Dissolution profiles for the two impulse channels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityProfiles {
    pub bolus: ActionProfile,
    pub carbs: ActionProfile,
}

impl Default for ActivityProfiles {
    fn default() -> Self {
        Self { bolus: ActionProfile::bolus_default(), carbs: ActionProfile::carb_default() }
    }
}

/// Replace the impulse channels by their continuous activity transforms:
/// `I_bolus -> I_act` and `C_carbs -> C_act`. Channels that are absent are
/// skipped, so datasets that already carry activities pass through
/// unchanged. The basal rate channel is left alone by design.
pub fn attach_activities(
    dataset: &AlignedDataset,
    profiles: &ActivityProfiles,
) -> Result<AlignedDataset> {
    let mut controls = dataset.controls().clone();
    if let Some(bolus) = controls.remove(CH_BOLUS) {
        controls.insert(
            String::from(CH_BOLUS_ACT),
            events_to_activity(&bolus, &profiles.bolus)?,
        );
    }
    if let Some(carbs) = controls.remove(CH_CARBS) {
        controls.insert(
            String::from(CH_CARB_ACT),
            events_to_activity(&carbs, &profiles.carbs)?,
        );
    }
    dataset.with_controls(controls)
}

/// Everything `fit` needs besides the dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub derivative: DerivativeSpec,
    /// Library recipe. An empty channel list means "all dataset channels,
    /// states first then controls".
    pub library: LibrarySpec,
    pub stlsq: StlsqConfig,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            derivative: DerivativeSpec::default_smoothed(),
            library: LibrarySpec {
                poly_degree: 2,
                include_trig: false,
                trig_frequencies: Vec::new(),
                channels: Vec::new(),
            },
            stlsq: StlsqConfig::default(),
        }
    }
}

/// Fit a sparse model to a dataset whose activity transforms have already
/// been attached.
///
/// Segments shorter than the differentiation stencil are skipped; the
/// remaining segments are differentiated independently (no stencil crosses a
/// gap) and stacked into one regression problem.
pub fn fit(dataset: &AlignedDataset, options: &FitOptions) -> Result<SparseModel> {
    options.derivative.validate()?;
    let mut spec = options.library.clone();
    if spec.channels.is_empty() {
        spec.channels = dataset
            .state_names()
            .into_iter()
            .chain(dataset.control_names())
            .collect();
    }
    spec.validate()?;

    let min_len = options.derivative.min_len().max(2);
    let usable: Vec<_> =
        dataset.segments().iter().filter(|s| s.end - s.start >= min_len).cloned().collect();
    if usable.is_empty() {
        return Err(Error::NoUsableSegments);
    }

    let mut theta: Option<FeatureMatrix> = None;
    for seg in &usable {
        let part = build_matrix(dataset, &spec, seg.clone())?;
        match theta.as_mut() {
            None => theta = Some(part),
            Some(acc) => acc.stack(&part)?,
        }
    }
    let theta = theta.expect("at least one usable segment");

    let state_names = dataset.state_names();
    let mut dxdt: Vec<Vec<f64>> = Vec::with_capacity(state_names.len());
    for name in &state_names {
        let series = dataset.state(name).ok_or_else(|| Error::UnknownChannel(name.clone()))?;
        let mut column = Vec::with_capacity(theta.n_rows());
        for seg in &usable {
            let d = differentiate(&series.slice(seg.clone())?, &options.derivative)?;
            column.extend_from_slice(d.values());
        }
        dxdt.push(column);
    }

    let control_names: Vec<String> = spec
        .channels
        .iter()
        .filter(|c| dataset.control(c).is_some())
        .cloned()
        .collect();
    stlsq(&theta, &dxdt, &state_names, &control_names, &options.stlsq)
}

/// `attach_activities` followed by `fit`: the full identification path from
/// an aligned event dataset.
pub fn fit_events(
    dataset: &AlignedDataset,
    profiles: &ActivityProfiles,
    options: &FitOptions,
) -> Result<SparseModel> {
    fit(&attach_activities(dataset, profiles)?, options)
}
