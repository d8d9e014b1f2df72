//! Sequentially thresholded least squares: iteratively solve a ridge-stabilized
//! least-squares problem, zero every coefficient whose magnitude falls below
//! the threshold, and re-solve on the surviving support until it stops
//! changing. Only a few library terms carry real dynamics; this is the step
//! that discards the rest.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::library::{FeatureMatrix, TermDescriptor};
use crate::linalg;
use crate::math;

/// Tuning knobs for [`stlsq`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StlsqConfig {
    /// Coefficients with magnitude below this are zeroed. Interpreted on the
    /// column-normalized scale when `normalize_columns` is set.
    pub threshold: f64,
    /// Ridge weight guarding against collinear library columns.
    pub ridge: f64,
    /// Upper bound on solve-threshold rounds; the support shrinks
    /// monotonically, so convergence needs at most one round per term.
    pub max_iter: usize,
    /// Scale each library column to unit root-mean-square before solving.
    /// Channel scales differ by orders of magnitude here, so this defaults
    /// to true.
    pub normalize_columns: bool,
}

impl Default for StlsqConfig {
    fn default() -> Self {
        Self { threshold: 0.05, ridge: 1e-6, max_iter: 20, normalize_columns: true }
    }
}

impl StlsqConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.threshold >= 0.0) || !self.threshold.is_finite() {
            return Err(Error::InvalidStlsqConfig(format!(
                "threshold must be >= 0, got {}",
                self.threshold
            )));
        }
        if !(self.ridge >= 0.0) || !self.ridge.is_finite() {
            return Err(Error::InvalidStlsqConfig(format!(
                "ridge must be >= 0, got {}",
                self.ridge
            )));
        }
        if self.max_iter < 1 {
            return Err(Error::InvalidStlsqConfig("max_iter must be >= 1".into()));
        }
        Ok(())
    }
}

/// Per-state fit diagnostics.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Diagnostics {
    /// Root-mean-square residual of `theta . xi - dxdt`, per state, in
    /// derivative units.
    pub residual_rms: Vec<f64>,
    /// Solve-threshold rounds used per state.
    pub iterations: Vec<usize>,
    /// Surviving term count per state.
    pub active_terms: Vec<usize>,
}

/// An identified sparse model: the coefficient matrix together with the term
/// descriptors it indexes, channel names and the config that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseModel {
    /// `xi[term][state]`; row count equals `terms.len()`.
    pub xi: Vec<Vec<f64>>,
    pub terms: Vec<TermDescriptor>,
    pub state_names: Vec<String>,
    pub control_names: Vec<String>,
    pub config: StlsqConfig,
    pub diagnostics: Diagnostics,
}

impl SparseModel {
    pub fn n_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn n_states(&self) -> usize {
        self.state_names.len()
    }

    /// States followed by controls: the value-vector order used by term
    /// evaluation.
    pub fn channel_names(&self) -> Vec<String> {
        self.state_names.iter().chain(self.control_names.iter()).cloned().collect()
    }

    /// Indices of terms with nonzero coefficient for one state equation.
    pub fn support(&self, state: usize) -> Vec<usize> {
        self.xi
            .iter()
            .enumerate()
            .filter_map(|(t, row)| (row[state] != 0.0).then_some(t))
            .collect()
    }

    /// True when no state equation kept any term.
    pub fn is_empty(&self) -> bool {
        self.xi.iter().all(|row| row.iter().all(|&c| c == 0.0))
    }

    /// Structural consistency check used by loaders.
    pub fn validate(&self) -> Result<()> {
        if self.xi.len() != self.terms.len() {
            return Err(Error::LengthMismatch {
                what: "xi rows (one per term)",
                expected: self.terms.len(),
                got: self.xi.len(),
            });
        }
        let n_states = self.state_names.len();
        for row in &self.xi {
            if row.len() != n_states {
                return Err(Error::LengthMismatch {
                    what: "xi columns (one per state)",
                    expected: n_states,
                    got: row.len(),
                });
            }
        }
        Ok(())
    }
}

/// Fit one sparse model per state column of `dxdt`.
///
/// `dxdt` holds one derivative vector per state, each as long as the feature
/// matrix is tall. States are independent subproblems solved in a fixed
/// order, so the result is deterministic for identical inputs. A state whose
/// support empties out is returned flagged through the diagnostics rather
/// than as an error: a constant-zero right-hand side can be legitimate.
pub fn stlsq(
    theta: &FeatureMatrix,
    dxdt: &[Vec<f64>],
    state_names: &[String],
    control_names: &[String],
    config: &StlsqConfig,
) -> Result<SparseModel> {
    config.validate()?;
    if dxdt.len() != state_names.len() {
        return Err(Error::LengthMismatch {
            what: "derivative columns (one per state)",
            expected: state_names.len(),
            got: dxdt.len(),
        });
    }
    let n = theta.n_rows();
    let n_terms = theta.n_cols();
    for col in dxdt {
        if col.len() != n {
            return Err(Error::RowCountMismatch { theta_rows: n, dxdt_rows: col.len() });
        }
    }
    if n < n_terms {
        log::warn!(
            "underdetermined regression: {n} samples for {n_terms} candidate terms"
        );
    }

    // Column RMS scales; zero columns keep scale 1 so they stay zero and are
    // thresholded away instead of poisoning the solve.
    let scales: Vec<f64> = (0..n_terms)
        .map(|j| {
            if !config.normalize_columns {
                return 1.0;
            }
            let rms = math::sqrt(theta.column(j).iter().map(|v| v * v).sum::<f64>() / n as f64);
            if rms > 0.0 && rms.is_finite() {
                rms
            } else {
                1.0
            }
        })
        .collect();
    let normalized: Vec<Vec<f64>> = (0..n_terms)
        .map(|j| theta.column(j).iter().map(|v| v / scales[j]).collect())
        .collect();

    let mut xi = vec![vec![0.0f64; state_names.len()]; n_terms];
    let mut diagnostics = Diagnostics::default();

    for (s, target) in dxdt.iter().enumerate() {
        let mut active: Vec<usize> = (0..n_terms).collect();
        let mut coeffs: Vec<f64> = Vec::new();
        let mut rounds = 0usize;
        while rounds < config.max_iter {
            rounds += 1;
            let cols: Vec<&[f64]> = active.iter().map(|&j| normalized[j].as_slice()).collect();
            coeffs = linalg::ridge_lstsq(&cols, target, config.ridge);
            let kept: Vec<usize> = active
                .iter()
                .zip(&coeffs)
                .filter(|(_, c)| math::abs(**c) >= config.threshold)
                .map(|(&j, _)| j)
                .collect();
            if kept.len() == active.len() {
                break;
            }
            active = kept;
            if active.is_empty() {
                coeffs.clear();
                break;
            }
        }
        for (&j, &c) in active.iter().zip(&coeffs) {
            xi[j][s] = c / scales[j];
        }
        let mut sq_sum = 0.0f64;
        for (i, &d) in target.iter().enumerate() {
            let fit: f64 = active.iter().map(|&j| theta.column(j)[i] * xi[j][s]).sum();
            let r = fit - d;
            sq_sum += r * r;
        }
        diagnostics.residual_rms.push(math::sqrt(sq_sum / n as f64));
        diagnostics.iterations.push(rounds);
        diagnostics.active_terms.push(active.len());
    }

    Ok(SparseModel {
        xi,
        terms: theta.terms().to_vec(),
        state_names: state_names.to_vec(),
        control_names: control_names.to_vec(),
        config: *config,
        diagnostics,
    })
}

/// One human-readable ODE string per state, zero-coefficient terms omitted
/// and coefficients printed with 4 significant digits.
pub fn model_to_equations(model: &SparseModel) -> Vec<String> {
    model
        .state_names
        .iter()
        .enumerate()
        .map(|(s, name)| {
            let mut rhs = String::new();
            for (t, term) in model.terms.iter().enumerate() {
                let c = model.xi[t][s];
                if c == 0.0 {
                    continue;
                }
                if rhs.is_empty() {
                    if c < 0.0 {
                        rhs.push('-');
                    }
                } else if c < 0.0 {
                    rhs.push_str(" - ");
                } else {
                    rhs.push_str(" + ");
                }
                rhs.push_str(&format_sig4(math::abs(c)));
                rhs.push('\u{b7}');
                rhs.push_str(&term.render());
            }
            if rhs.is_empty() {
                rhs.push('0');
            }
            format!("d{name}/dt = {rhs}")
        })
        .collect()
}

/// Format a positive value with 4 significant digits, falling back to
/// scientific notation outside a comfortable range.
fn format_sig4(m: f64) -> String {
    if m == 0.0 {
        return "0".to_string();
    }
    let mut e = math::floor(math::ln(m) / core::f64::consts::LN_10) as i32;
    let pow10 = |k: i32| -> f64 {
        if k >= 0 {
            math::powi(10.0, k as u32)
        } else {
            1.0 / math::powi(10.0, (-k) as u32)
        }
    };
    while m < pow10(e) {
        e -= 1;
    }
    while m >= pow10(e + 1) {
        e += 1;
    }
    if !(-5..=3).contains(&e) {
        format!("{m:.3e}")
    } else {
        let decimals = (3 - e).max(0) as usize;
        format!("{m:.decimals$}")
    }
}
