//! Event-level patient records and their alignment onto the uniform grid.
//!
//! Raw records arrive as timestamped events of four kinds: glucose readings
//! (mg/dL), basal rate changes (U/hr), bolus doses (U) and carb intakes (g).
//! [`align`] snaps them onto a fixed-step grid anchored at multiples of `dt`
//! since the epoch:
//!
//! * glucose readings snap to the nearest grid point (collisions keep the
//!   latest reading); holes up to `max_gap` are filled by linear
//!   interpolation, longer holes split the data into separate segments;
//! * basal is a zero-order-hold step signal sampled at the grid times;
//! * boluses and carbs are accumulated as impulse totals per grid bin.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::Range;

use crate::error::{Error, Result};
use crate::math;
use crate::series::{AlignedDataset, UniformSeries};

/// Glucose state channel name.
pub const CH_GLUCOSE: &str = "G";
/// Basal insulin rate channel name (zero-order hold, U/hr).
pub const CH_BASAL: &str = "I_basal";
/// Bolus impulse channel name (U per bin).
pub const CH_BOLUS: &str = "I_bolus";
/// Carb impulse channel name (g per bin).
pub const CH_CARBS: &str = "C_carbs";
/// Bolus activity channel name after the dissolution transform.
pub const CH_BOLUS_ACT: &str = "I_act";
/// Carb activity channel name after the absorption transform.
pub const CH_CARB_ACT: &str = "C_act";

/// What an [`EventRecord`] measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Glucose,
    Basal,
    Bolus,
    Carbs,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Glucose => "glucose",
            EventKind::Basal => "basal",
            EventKind::Bolus => "bolus",
            EventKind::Carbs => "carbs",
        }
    }
}

/// One timestamped record: a glucose reading, a basal rate change, a bolus
/// dose or a carb intake.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: f64,
    pub kind: EventKind,
    /// mg/dL for glucose, U/hr for basal, U for bolus, g for carbs.
    pub value: f64,
}

impl EventRecord {
    pub fn new(timestamp: f64, kind: EventKind, value: f64) -> Self {
        Self { timestamp, kind, value }
    }

    /// Range check used by ingestion: glucose in (0, 1000), doses and rates
    /// non-negative, everything finite.
    pub fn is_valid(&self) -> bool {
        if !self.timestamp.is_finite() || !self.value.is_finite() {
            return false;
        }
        match self.kind {
            EventKind::Glucose => self.value > 0.0 && self.value < 1000.0,
            _ => self.value >= 0.0,
        }
    }
}

/// Grid step and gap tolerance for [`align`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AlignOptions {
    /// Grid step in seconds.
    pub dt: f64,
    /// Longest stretch between two glucose readings that is still bridged by
    /// linear interpolation, in seconds. Wider holes split segments.
    pub max_gap: f64,
}

impl Default for AlignOptions {
    fn default() -> Self {
        // 5-minute CGM grid; interpolation is not trusted past 30 minutes.
        Self { dt: 300.0, max_gap: 1800.0 }
    }
}

fn grid_index(ts: f64, dt: f64) -> i64 {
    math::round(ts / dt) as i64
}

/// Align event records onto the uniform grid.
///
/// The grid is anchored at integer multiples of `dt` since the epoch and
/// spans the glucose readings; doses outside that span have no grid bin and
/// are ignored. The glucose channel holds NaN inside gaps; every returned
/// segment is NaN-free. Requires at least two glucose records and at least
/// one surviving segment of two or more samples.
pub fn align(events: &[EventRecord], opts: &AlignOptions) -> Result<AlignedDataset> {
    if !(opts.dt > 0.0) || !opts.dt.is_finite() {
        return Err(Error::NonPositiveDt(opts.dt));
    }
    let mut sorted: Vec<EventRecord> = events.to_vec();
    sorted.sort_by(|a, b| a.timestamp.total_cmp(&b.timestamp));

    let glucose: Vec<&EventRecord> =
        sorted.iter().filter(|e| e.kind == EventKind::Glucose).collect();
    if glucose.len() < 2 {
        return Err(Error::TooFewGlucoseRecords(glucose.len()));
    }

    let i_first = grid_index(glucose[0].timestamp, opts.dt);
    let i_last = grid_index(glucose[glucose.len() - 1].timestamp, opts.dt);
    let n = (i_last - i_first) as usize + 1;
    let t0 = i_first as f64 * opts.dt;

    // Latest reading wins on collisions; input is sorted so later overwrites.
    let mut slots: Vec<Option<f64>> = vec![None; n];
    for ev in &glucose {
        let idx = (grid_index(ev.timestamp, opts.dt) - i_first) as usize;
        slots[idx] = Some(ev.value);
    }

    let mut values = vec![f64::NAN; n];
    let mut segments: Vec<Range<usize>> = Vec::new();
    let known: Vec<usize> =
        slots.iter().enumerate().filter_map(|(i, v)| v.map(|_| i)).collect();
    for &k in &known {
        values[k] = slots[k].unwrap();
    }
    let mut seg_start = known[0];
    for pair in known.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let span = (b - a) as f64 * opts.dt;
        if b == a + 1 {
            continue;
        }
        if span <= opts.max_gap {
            let (va, vb) = (values[a], values[b]);
            for i in a + 1..b {
                let w = (i - a) as f64 / (b - a) as f64;
                values[i] = va + (vb - va) * w;
            }
        } else {
            if a + 1 > seg_start + 1 {
                segments.push(seg_start..a + 1);
            }
            seg_start = b;
        }
    }
    let last_known = known[known.len() - 1];
    if last_known + 1 > seg_start + 1 {
        segments.push(seg_start..last_known + 1);
    }
    if segments.is_empty() {
        return Err(Error::AllSegmentsTooShort);
    }

    // Basal: rate of the latest change at or before each grid time, 0 before
    // the first change.
    let basal_events: Vec<&EventRecord> =
        sorted.iter().filter(|e| e.kind == EventKind::Basal).collect();
    let mut basal = vec![0.0f64; n];
    let mut cursor = 0usize;
    let mut rate = 0.0f64;
    for (i, b) in basal.iter_mut().enumerate() {
        let t = t0 + i as f64 * opts.dt;
        while cursor < basal_events.len() && basal_events[cursor].timestamp <= t {
            rate = basal_events[cursor].value;
            cursor += 1;
        }
        *b = rate;
    }

    let mut bolus = vec![0.0f64; n];
    let mut carbs = vec![0.0f64; n];
    for ev in &sorted {
        let target = match ev.kind {
            EventKind::Bolus => &mut bolus,
            EventKind::Carbs => &mut carbs,
            _ => continue,
        };
        let idx = grid_index(ev.timestamp, opts.dt) - i_first;
        if (0..n as i64).contains(&idx) {
            target[idx as usize] += ev.value;
        }
    }

    let mut states = BTreeMap::new();
    states.insert(
        String::from(CH_GLUCOSE),
        UniformSeries::new(t0, opts.dt, values, "mg/dL")?,
    );
    let mut controls = BTreeMap::new();
    controls.insert(String::from(CH_BASAL), UniformSeries::new(t0, opts.dt, basal, "U/hr")?);
    controls.insert(String::from(CH_BOLUS), UniformSeries::new(t0, opts.dt, bolus, "U")?);
    controls.insert(String::from(CH_CARBS), UniformSeries::new(t0, opts.dt, carbs, "g")?);

    AlignedDataset::new(t0, opts.dt, n, states, controls, segments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn gl(ts: f64, v: f64) -> EventRecord {
        EventRecord::new(ts, EventKind::Glucose, v)
    }

    #[test]
    fn on_grid_readings_pass_through() {
        let ds = align(
            &[gl(0.0, 100.0), gl(300.0, 110.0), gl(600.0, 120.0)],
            &AlignOptions::default(),
        )
        .unwrap();
        assert_eq!(ds.segments(), &[0..3]);
        assert_eq!(ds.state(CH_GLUCOSE).unwrap().values(), &[100.0, 110.0, 120.0]);
    }

    #[test]
    fn midpoint_interpolation() {
        let ds = align(
            &[gl(0.0, 100.0), gl(600.0, 120.0)],
            &AlignOptions { dt: 300.0, max_gap: 600.0 },
        )
        .unwrap();
        let g = ds.state(CH_GLUCOSE).unwrap().values();
        assert_eq!(g.len(), 3);
        assert_abs_diff_eq!(g[1], 110.0);
        assert_eq!(ds.segments(), &[0..3]);
    }

    #[test]
    fn wide_hole_splits_segments() {
        let mut events = vec![gl(0.0, 100.0), gl(300.0, 105.0)];
        // 2400 s hole > default 1800 s tolerance.
        events.push(gl(2700.0, 140.0));
        events.push(gl(3000.0, 150.0));
        let ds = align(&events, &AlignOptions::default()).unwrap();
        assert_eq!(ds.segments(), &[0..2, 9..11]);
        let g = ds.state(CH_GLUCOSE).unwrap().values();
        assert!(g[4].is_nan());
        for seg in ds.segments() {
            assert!(g[seg.clone()].iter().all(|v| v.is_finite()));
        }
    }

    #[test]
    fn bolus_doses_accumulate_per_bin() {
        let events = vec![
            gl(0.0, 100.0),
            gl(300.0, 100.0),
            gl(600.0, 100.0),
            EventRecord::new(290.0, EventKind::Bolus, 2.0),
            EventRecord::new(310.0, EventKind::Bolus, 3.0),
        ];
        let ds = align(&events, &AlignOptions::default()).unwrap();
        assert_eq!(ds.control(CH_BOLUS).unwrap().values(), &[0.0, 5.0, 0.0]);
    }

    #[test]
    fn basal_is_zero_order_hold() {
        let events = vec![
            gl(0.0, 100.0),
            gl(300.0, 100.0),
            gl(600.0, 100.0),
            gl(900.0, 100.0),
            EventRecord::new(310.0, EventKind::Basal, 1.2),
            EventRecord::new(900.0, EventKind::Basal, 0.4),
        ];
        let ds = align(&events, &AlignOptions::default()).unwrap();
        assert_eq!(ds.control(CH_BASAL).unwrap().values(), &[0.0, 0.0, 1.2, 0.4]);
    }

    #[test]
    fn collisions_keep_latest_reading() {
        let ds = align(
            &[gl(0.0, 100.0), gl(290.0, 105.0), gl(310.0, 108.0), gl(600.0, 112.0)],
            &AlignOptions::default(),
        )
        .unwrap();
        assert_eq!(ds.state(CH_GLUCOSE).unwrap().values()[1], 108.0);
    }

    #[test]
    fn too_few_glucose_records() {
        assert_eq!(
            align(&[gl(0.0, 100.0)], &AlignOptions::default()).unwrap_err(),
            Error::TooFewGlucoseRecords(1)
        );
    }

    #[test]
    fn isolated_reading_forms_no_segment() {
        // Two readings separated by a hole wider than max_gap on both sides
        // of a lone middle point: only pairs can form segments.
        let events = vec![gl(0.0, 100.0), gl(3000.0, 120.0)];
        assert_eq!(
            align(&events, &AlignOptions::default()).unwrap_err(),
            Error::AllSegmentsTooShort
        );
    }

    #[test]
    fn align_is_idempotent_on_gridded_data() {
        let events = vec![gl(0.0, 100.0), gl(300.0, 104.0), gl(600.0, 96.0)];
        let once = align(&events, &AlignOptions::default()).unwrap();
        let replayed: Vec<EventRecord> = once
            .state(CH_GLUCOSE)
            .unwrap()
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| gl(once.time(i), v))
            .collect();
        let twice = align(&replayed, &AlignOptions::default()).unwrap();
        assert_eq!(once.state(CH_GLUCOSE), twice.state(CH_GLUCOSE));
        assert_eq!(once.segments(), twice.segments());
    }

    proptest::proptest! {
        #[test]
        fn dose_conservation(doses in proptest::collection::vec((0u32..20, 0.0f64..15.0), 0..12)) {
            // Glucose spans bins 0..20 so every dose lands inside the grid.
            let mut events = vec![gl(0.0, 100.0), gl(19.0 * 300.0, 100.0)];
            let mut total = 0.0;
            for (bin, units) in &doses {
                events.push(EventRecord::new(*bin as f64 * 300.0 + 13.0, EventKind::Bolus, *units));
                total += *units;
            }
            let ds = align(&events, &AlignOptions { dt: 300.0, max_gap: f64::INFINITY }).unwrap();
            let sum: f64 = ds.control(CH_BOLUS).unwrap().values().iter().sum();
            proptest::prop_assert!((sum - total).abs() < 1e-9 * total.max(1.0));
        }
    }
}
