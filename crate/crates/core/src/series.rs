//! Uniform-grid time series and the aligned multi-channel dataset.
//!
//! A [`UniformSeries`] stores one channel of values on a fixed-step grid; the
//! time of sample `i` is always `t0 + i * dt` and is never stored per sample.
//! An [`AlignedDataset`] groups named state and control channels that share
//! one grid, together with the gap-free segments usable for fitting.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};

/// One channel of values on a fixed-step time grid.
///
/// Values are immutable after construction; instances are cheap to clone and
/// safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    t0: f64,
    dt: f64,
    values: Vec<f64>,
    units: String,
}

impl UniformSeries {
    /// Build a series from a start time (seconds since the Unix epoch, UTC),
    /// a step (seconds, > 0) and at least one value. `units` is an advisory
    /// label such as `"mg/dL"`; it is carried along but never interpreted.
    pub fn new(t0: f64, dt: f64, values: Vec<f64>, units: impl Into<String>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::NonPositiveDt(dt));
        }
        if values.is_empty() {
            return Err(Error::EmptySeries);
        }
        Ok(Self { t0, dt, values, units: units.into() })
    }

    /// Start time in seconds since the Unix epoch.
    pub fn t0(&self) -> f64 {
        self.t0
    }

    /// Grid step in seconds.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Grid step in minutes.
    pub fn dt_minutes(&self) -> f64 {
        self.dt / 60.0
    }

    /// Advisory units label.
    pub fn units(&self) -> &str {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    /// Always false: construction rejects empty value vectors.
    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Time of sample `i` in seconds since the epoch, `t0 + i * dt`.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    /// Copy of the samples in `range`, with `t0` shifted by `range.start * dt`.
    pub fn slice(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.values.len() {
            return Err(Error::SliceOutOfBounds {
                start: range.start,
                end: range.end,
                len: self.values.len(),
            });
        }
        Ok(Self {
            t0: self.t0 + range.start as f64 * self.dt,
            dt: self.dt,
            values: self.values[range].to_vec(),
            units: self.units.clone(),
        })
    }

    /// New series on the same grid with different values and units label.
    /// Fails if `values` is empty or has a different length.
    pub fn with_values(&self, values: Vec<f64>, units: impl Into<String>) -> Result<Self> {
        if values.len() != self.values.len() {
            return Err(Error::LengthMismatch {
                what: "values on the shared grid",
                expected: self.values.len(),
                got: values.len(),
            });
        }
        Self::new(self.t0, self.dt, values, units)
    }
}

/// Named state and control channels on one shared grid, plus the half-open
/// index ranges (`segments`) that are free of gaps.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedDataset {
    t0: f64,
    dt: f64,
    n: usize,
    states: BTreeMap<String, UniformSeries>,
    controls: BTreeMap<String, UniformSeries>,
    segments: Vec<Range<usize>>,
}

impl AlignedDataset {
    /// Validating constructor. Every channel must sit exactly on the
    /// `(t0, dt, n)` grid; segments must be sorted, disjoint, in bounds and at
    /// least 2 samples long.
    pub fn new(
        t0: f64,
        dt: f64,
        n: usize,
        states: BTreeMap<String, UniformSeries>,
        controls: BTreeMap<String, UniformSeries>,
        segments: Vec<Range<usize>>,
    ) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::NonPositiveDt(dt));
        }
        if n == 0 {
            return Err(Error::EmptySeries);
        }
        for (name, series) in states.iter().chain(controls.iter()) {
            if series.len() != n {
                return Err(Error::ChannelLengthMismatch {
                    name: name.clone(),
                    got: series.len(),
                    expected: n,
                });
            }
            if series.t0() != t0 || series.dt() != dt {
                return Err(Error::ChannelGridMismatch(name.clone()));
            }
        }
        let mut prev_end = 0usize;
        for (i, seg) in segments.iter().enumerate() {
            if seg.end > n || seg.end - seg.start < 2 || (i > 0 && seg.start < prev_end) {
                return Err(Error::InvalidSegments);
            }
            prev_end = seg.end;
        }
        Ok(Self { t0, dt, n, states, controls, segments })
    }

    /// Shared grid as `(t0 seconds, dt seconds, sample count)`.
    pub fn grid(&self) -> (f64, f64, usize) {
        (self.t0, self.dt, self.n)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Time of grid index `i` in seconds since the epoch.
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn states(&self) -> &BTreeMap<String, UniformSeries> {
        &self.states
    }

    pub fn controls(&self) -> &BTreeMap<String, UniformSeries> {
        &self.controls
    }

    pub fn state(&self, name: &str) -> Option<&UniformSeries> {
        self.states.get(name)
    }

    pub fn control(&self, name: &str) -> Option<&UniformSeries> {
        self.controls.get(name)
    }

    /// Look a channel up among states first, then controls.
    pub fn channel(&self, name: &str) -> Option<&UniformSeries> {
        self.states.get(name).or_else(|| self.controls.get(name))
    }

    /// State names in deterministic (sorted) order.
    pub fn state_names(&self) -> Vec<String> {
        self.states.keys().cloned().collect()
    }

    /// Control names in deterministic (sorted) order.
    pub fn control_names(&self) -> Vec<String> {
        self.controls.keys().cloned().collect()
    }

    /// Gap-free index ranges, sorted and disjoint, each of length >= 2.
    pub fn segments(&self) -> &[Range<usize>] {
        &self.segments
    }

    /// Complement of the segments within `0..n`: the grid ranges where no
    /// trustworthy glucose signal exists.
    pub fn gaps(&self) -> Vec<Range<usize>> {
        let mut gaps = Vec::new();
        let mut cursor = 0usize;
        for seg in &self.segments {
            if seg.start > cursor {
                gaps.push(cursor..seg.start);
            }
            cursor = seg.end;
        }
        if cursor < self.n {
            gaps.push(cursor..self.n);
        }
        gaps
    }

    /// Restrict the dataset to `range`, slicing every channel and clipping
    /// segments against the window. Segments shorter than 2 samples after
    /// clipping are dropped.
    pub fn slice_range(&self, range: Range<usize>) -> Result<Self> {
        if range.start >= range.end || range.end > self.n {
            return Err(Error::SliceOutOfBounds {
                start: range.start,
                end: range.end,
                len: self.n,
            });
        }
        let slice_map = |chs: &BTreeMap<String, UniformSeries>| -> Result<BTreeMap<String, UniformSeries>> {
            chs.iter()
                .map(|(k, v)| Ok((k.clone(), v.slice(range.clone())?)))
                .collect()
        };
        let segments = self
            .segments
            .iter()
            .filter_map(|seg| {
                let start = seg.start.max(range.start);
                let end = seg.end.min(range.end);
                (end > start && end - start >= 2).then(|| start - range.start..end - range.start)
            })
            .collect();
        Self::new(
            self.time(range.start),
            self.dt,
            range.end - range.start,
            slice_map(&self.states)?,
            slice_map(&self.controls)?,
            segments,
        )
    }

    /// Same grid and segments with a different control map. Used when impulse
    /// channels are replaced by their activity transforms.
    pub fn with_controls(&self, controls: BTreeMap<String, UniformSeries>) -> Result<Self> {
        Self::new(self.t0, self.dt, self.n, self.states.clone(), controls, self.segments.clone())
    }
}
