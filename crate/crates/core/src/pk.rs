//! Dissolution of impulsive doses into continuous activity signals.
//!
//! Substances distribute through the body with a delay, so a bolus recorded
//! as a single event acts on glucose as a smooth, lagged curve. The model is
//! the two-compartment linear response
//!
//! ```text
//! h(t) = (exp(-t/tau1) - exp(-t/tau2)) / (tau1 - tau2)        tau1 != tau2
//! h(t) = (t/tau^2) * exp(-t/tau)                              tau1 == tau2
//! ```
//!
//! which starts at zero, peaks after a delay, integrates to exactly one, and
//! has closed forms for both the response and its cumulative mass. Dose
//! series are convolved with a sampled kernel truncated once 99.99% of the
//! mass is covered. Basal insulin never passes through this model; it enters
//! the dataset directly as a zero-order-hold rate channel.

use alloc::format;
use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::series::UniformSeries;

/// Fraction of the kernel mass kept by the truncated convolution.
pub const KERNEL_MASS_CUTOFF: f64 = 0.9999;

/// Relative tau gap below which the equal-time-constant limit form is used.
const EQUAL_TAU_REL: f64 = 1e-9;

/// Time constants (minutes) of the two-compartment response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionProfile {
    tau1_min: f64,
    tau2_min: f64,
}

impl ActionProfile {
    pub fn new(tau1_min: f64, tau2_min: f64) -> Result<Self> {
        if !(tau1_min > 0.0) || !(tau2_min > 0.0) || !tau1_min.is_finite() || !tau2_min.is_finite()
        {
            return Err(Error::InvalidActionProfile);
        }
        Ok(Self { tau1_min, tau2_min })
    }

    /// Default bolus insulin profile (rapid-acting analog scale).
    pub fn bolus_default() -> Self {
        Self { tau1_min: 55.0, tau2_min: 70.0 }
    }

    /// Default carbohydrate absorption profile.
    pub fn carb_default() -> Self {
        Self { tau1_min: 20.0, tau2_min: 40.0 }
    }

    pub fn tau1_min(&self) -> f64 {
        self.tau1_min
    }

    pub fn tau2_min(&self) -> f64 {
        self.tau2_min
    }

    fn is_equal_tau(&self) -> bool {
        math::abs(self.tau1_min - self.tau2_min) < EQUAL_TAU_REL * self.tau1_min
    }

    /// Response to a unit impulse, `t` in minutes, result in 1/min.
    /// `h(0) = 0` and `h(t) >= 0` everywhere.
    pub fn impulse_response(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        Ok(if self.is_equal_tau() {
            let tau = self.tau1_min;
            (t / (tau * tau)) * math::exp(-t / tau)
        } else {
            (math::exp(-t / self.tau1_min) - math::exp(-t / self.tau2_min))
                / (self.tau1_min - self.tau2_min)
        })
    }

    /// Closed-form integral of the response over `[0, t]`; tends to 1.
    pub fn cumulative_mass(&self, t: f64) -> Result<f64> {
        if t < 0.0 {
            return Err(Error::NegativeTime(t));
        }
        Ok(if self.is_equal_tau() {
            let tau = self.tau1_min;
            1.0 - math::exp(-t / tau) * (1.0 + t / tau)
        } else {
            1.0 - (self.tau1_min * math::exp(-t / self.tau1_min)
                - self.tau2_min * math::exp(-t / self.tau2_min))
                / (self.tau1_min - self.tau2_min)
        })
    }
}

/// Convolve per-bin dose totals with the sampled impulse response:
///
/// `activity[i] = sum_k dose[k] * h((i - k) * dt) * dt` for `k <= i`.
///
/// The result is causal, non-negative, and sums to the dosed amount up to
/// the truncation tolerance. Units follow the dose series (a unit dose
/// spreads into bins summing to one).
pub fn events_to_activity(
    dose_series: &UniformSeries,
    profile: &ActionProfile,
) -> Result<UniformSeries> {
    for (index, &value) in dose_series.values().iter().enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeDose { index, value });
        }
    }
    let dt_min = dose_series.dt_minutes();
    let kernel = sampled_kernel(profile, dt_min)?;
    let doses = dose_series.values();
    let n = doses.len();
    let mut activity = vec![0.0f64; n];
    for (k, &dose) in doses.iter().enumerate() {
        if dose == 0.0 {
            continue;
        }
        for (j, &kj) in kernel.iter().enumerate() {
            let i = k + j;
            if i >= n {
                break;
            }
            activity[i] += dose * kj;
        }
    }
    let units = if dose_series.units().is_empty() {
        "activity".to_string()
    } else {
        format!("{} (activity)", dose_series.units())
    };
    dose_series.with_values(activity, units)
}

/// Kernel samples `h(j * dt) * dt` up to the first lag whose closed-form
/// cumulative mass exceeds [`KERNEL_MASS_CUTOFF`].
fn sampled_kernel(profile: &ActionProfile, dt_min: f64) -> Result<Vec<f64>> {
    let mut kernel = Vec::new();
    let mut j = 0usize;
    loop {
        let t = j as f64 * dt_min;
        kernel.push(profile.impulse_response(t)? * dt_min);
        if profile.cumulative_mass(t)? > KERNEL_MASS_CUTOFF {
            break;
        }
        j += 1;
    }
    Ok(kernel)
}
