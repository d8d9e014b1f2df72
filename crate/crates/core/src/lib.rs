//! Sparse identification of glucose dynamics from uniformly sampled records.
//!
//! This crate implements the algorithmic pipeline for discovering sparse
//! ordinary differential equations from continuous glucose monitor traces with
//! exogenous insulin and carbohydrate inputs, and for simulating the identified
//! equations forward to produce multi-hour forecasts:
//!
//! * [`series`] — values on a fixed-step time grid, the substrate of all other
//!   modules.
//! * [`events`] — event records (glucose readings, basal rates, bolus doses,
//!   carb intakes) and their alignment onto the 5-minute grid with gap
//!   tracking.
//! * [`pk`] — the bolus-dissolution model: a two-compartment impulse response
//!   turning dose events into continuous activity signals.
//! * [`diff`] — numerical differentiation (forward, central, and local
//!   polynomial smoothing).
//! * [`library`] — candidate-term enumeration and feature matrix construction
//!   (constants, monomials, trigonometric terms).
//! * [`stlsq`] — sequentially thresholded least squares, the sparse regression
//!   that selects the relevant terms.
//! * [`sim`] — fixed-step RK4 integration of an identified model driven by
//!   recorded control signals.
//! * [`eval`] — rolling-origin forecast evaluation against a persistence
//!   baseline.
//! * [`synth`] — a seeded synthetic patient generator with known ground-truth
//!   dynamics, used to verify recovery end to end.
//! * [`pipeline`] — glue composing the above into fit-ready datasets and
//!   models.
//!
//! The crate is `no_std`-compatible (with `alloc`); enable the `libm` feature
//! instead of `std` for freestanding builds. File formats, CSV/JSON I/O and
//! the command-line driver live in the companion `bgsindy` crate.
#![cfg_attr(not(feature = "std"), no_std)]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod diff;
pub mod error;
pub mod eval;
pub mod events;
pub mod library;
mod linalg;
mod math;
pub mod pipeline;
pub mod pk;
pub mod series;
pub mod sim;
pub mod stlsq;
pub mod synth;

pub use error::{Error, Result};
pub use series::{AlignedDataset, UniformSeries};
