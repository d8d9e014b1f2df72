//! Candidate-term library: the matrix whose columns are nonlinear functions
//! of the state and control channels, each column a candidate right-hand-side
//! term of the differential equation.
//!
//! Terms are enumerated deterministically — constant first, then monomials in
//! graded lexicographic order over the channel list, then trigonometric terms
//! per channel per frequency with sin before cos — so that coefficient
//! matrices keep a stable layout across runs and serializations.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use serde::de::{MapAccess, Visitor};
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::math;
use crate::series::AlignedDataset;

/// Sine or cosine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigKind {
    Sin,
    Cos,
}

/// Channel exponents of a monomial, in library channel order. Serialized as a
/// JSON map from channel name to exponent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Exponents(pub Vec<(String, u32)>);

impl Serialize for Exponents {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (name, exp) in &self.0 {
            map.serialize_entry(name, exp)?;
        }
        map.end()
    }
}

impl<'de> Deserialize<'de> for Exponents {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        struct ExpVisitor;
        impl<'de> Visitor<'de> for ExpVisitor {
            type Value = Exponents;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a map from channel name to exponent")
            }
            fn visit_map<A: MapAccess<'de>>(
                self,
                mut access: A,
            ) -> core::result::Result<Self::Value, A::Error> {
                let mut pairs = Vec::new();
                while let Some((k, v)) = access.next_entry::<String, u32>()? {
                    pairs.push((k, v));
                }
                Ok(Exponents(pairs))
            }
        }
        deserializer.deserialize_map(ExpVisitor)
    }
}

/// Symbolic description of one candidate library column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TermDescriptor {
    /// The all-ones column.
    Constant,
    /// Product of channel powers with total degree >= 1.
    Monomial { exponents: Exponents },
    /// `sin(frequency * channel)` or `cos(frequency * channel)`.
    Trig { trig: TrigKind, frequency: f64, channel: String },
}

impl TermDescriptor {
    /// Total polynomial degree; trig terms report 0.
    pub fn total_degree(&self) -> u32 {
        match self {
            TermDescriptor::Monomial { exponents } => exponents.0.iter().map(|(_, e)| e).sum(),
            _ => 0,
        }
    }

    /// Canonical rendering, e.g. `1`, `G^2·I_bolus`, `sin(0.5·G)`.
    pub fn render(&self) -> String {
        match self {
            TermDescriptor::Constant => "1".to_string(),
            TermDescriptor::Monomial { exponents } => {
                let parts: Vec<String> = exponents
                    .0
                    .iter()
                    .filter(|(_, e)| *e > 0)
                    .map(|(name, e)| {
                        if *e == 1 {
                            name.clone()
                        } else {
                            format!("{name}^{e}")
                        }
                    })
                    .collect();
                parts.join("\u{b7}")
            }
            TermDescriptor::Trig { trig, frequency, channel } => {
                let f = if math::fract(*frequency) == 0.0 && math::abs(*frequency) < 1e15 {
                    format!("{frequency:.1}")
                } else {
                    format!("{frequency}")
                };
                let name = match trig {
                    TrigKind::Sin => "sin",
                    TrigKind::Cos => "cos",
                };
                format!("{name}({f}\u{b7}{channel})")
            }
        }
    }
}

impl fmt::Display for TermDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Recipe for the full candidate library.
#[derive(Debug, Clone, PartialEq)]
pub struct LibrarySpec {
    /// Maximum total degree of the monomials; 0 keeps only the constant.
    pub poly_degree: u32,
    pub include_trig: bool,
    /// Angular frequencies for the trig terms, all > 0.
    pub trig_frequencies: Vec<f64>,
    /// Channel names, states first then controls. Cross terms between states
    /// and controls are included up to `poly_degree`.
    pub channels: Vec<String>,
}

impl LibrarySpec {
    /// Default glucose library: degree-2 polynomials over the given channels,
    /// no trig terms.
    pub fn degree2(channels: Vec<String>) -> Self {
        Self { poly_degree: 2, include_trig: false, trig_frequencies: Vec::new(), channels }
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::InvalidLibrarySpec("channel list is empty".into()));
        }
        for (i, a) in self.channels.iter().enumerate() {
            if self.channels[i + 1..].contains(a) {
                return Err(Error::InvalidLibrarySpec(format!("duplicate channel {a:?}")));
            }
        }
        if self.include_trig {
            if self.trig_frequencies.is_empty() {
                return Err(Error::InvalidLibrarySpec(
                    "include_trig set but trig_frequencies is empty".into(),
                ));
            }
            if self.trig_frequencies.iter().any(|f| !(*f > 0.0) || !f.is_finite()) {
                return Err(Error::InvalidLibrarySpec(
                    "trig frequencies must be positive and finite".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Enumerate the library terms for `spec` in the deterministic canonical
/// order: constant, monomials in graded lex order, then trig terms.
pub fn enumerate_terms(spec: &LibrarySpec) -> Result<Vec<TermDescriptor>> {
    spec.validate()?;
    let mut terms = vec![TermDescriptor::Constant];
    let c = spec.channels.len();
    for degree in 1..=spec.poly_degree {
        let mut exps = vec![0u32; c];
        grlex_recurse(&mut exps, 0, degree, spec, &mut terms);
    }
    if spec.include_trig {
        for channel in &spec.channels {
            for &frequency in &spec.trig_frequencies {
                for trig in [TrigKind::Sin, TrigKind::Cos] {
                    terms.push(TermDescriptor::Trig {
                        trig,
                        frequency,
                        channel: channel.clone(),
                    });
                }
            }
        }
    }
    Ok(terms)
}

fn grlex_recurse(
    exps: &mut Vec<u32>,
    pos: usize,
    remaining: u32,
    spec: &LibrarySpec,
    out: &mut Vec<TermDescriptor>,
) {
    if pos == exps.len() - 1 {
        exps[pos] = remaining;
        let exponents = Exponents(
            spec.channels
                .iter()
                .zip(exps.iter())
                .filter(|(_, &e)| e > 0)
                .map(|(n, &e)| (n.clone(), e))
                .collect(),
        );
        out.push(TermDescriptor::Monomial { exponents });
        exps[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        exps[pos] = e;
        grlex_recurse(exps, pos + 1, remaining - e, spec, out);
        exps[pos] = 0;
    }
}

/// The evaluated library: `n_samples x n_terms`, stored per column.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_rows: usize,
    terms: Vec<TermDescriptor>,
    columns: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn terms(&self) -> &[TermDescriptor] {
        &self.terms
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.columns[j]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.columns[col][row]
    }

    /// Append the rows of `other`; term lists must match exactly. Used to
    /// stack per-segment matrices into one regression problem.
    pub fn stack(&mut self, other: &FeatureMatrix) -> Result<()> {
        if self.terms != other.terms {
            return Err(Error::InvalidLibrarySpec("cannot stack matrices with different terms".into()));
        }
        for (mine, theirs) in self.columns.iter_mut().zip(&other.columns) {
            mine.extend_from_slice(theirs);
        }
        self.n_rows += other.n_rows;
        Ok(())
    }
}

/// Term evaluators with channel names resolved to value-vector positions.
#[derive(Debug, Clone)]
pub(crate) enum CompiledTerm {
    Constant,
    Monomial(Vec<(usize, u32)>),
    Trig { kind: TrigKind, frequency: f64, index: usize },
}

impl CompiledTerm {
    pub(crate) fn eval(&self, values: &[f64]) -> f64 {
        match self {
            CompiledTerm::Constant => 1.0,
            CompiledTerm::Monomial(factors) => factors
                .iter()
                .map(|&(idx, exp)| math::powi(values[idx], exp))
                .product(),
            CompiledTerm::Trig { kind, frequency, index } => {
                let arg = frequency * values[*index];
                match kind {
                    TrigKind::Sin => math::sin(arg),
                    TrigKind::Cos => math::cos(arg),
                }
            }
        }
    }
}

/// Resolve term channel names against an ordered channel list.
pub(crate) fn compile_terms(
    terms: &[TermDescriptor],
    channels: &[String],
) -> Result<Vec<CompiledTerm>> {
    let index_of = |name: &str| -> Result<usize> {
        channels
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::UnknownChannel(name.into()))
    };
    terms
        .iter()
        .map(|t| {
            Ok(match t {
                TermDescriptor::Constant => CompiledTerm::Constant,
                TermDescriptor::Monomial { exponents } => CompiledTerm::Monomial(
                    exponents
                        .0
                        .iter()
                        .filter(|(_, e)| *e > 0)
                        .map(|(n, e)| Ok((index_of(n)?, *e)))
                        .collect::<Result<Vec<_>>>()?,
                ),
                TermDescriptor::Trig { trig, frequency, channel } => CompiledTerm::Trig {
                    kind: *trig,
                    frequency: *frequency,
                    index: index_of(channel)?,
                },
            })
        })
        .collect()
}

/// Evaluate the library over `segment` of the dataset. Row `i` of the result
/// is every term evaluated on the channel values at grid index
/// `segment.start + i`.
pub fn build_matrix(
    dataset: &AlignedDataset,
    spec: &LibrarySpec,
    segment: Range<usize>,
) -> Result<FeatureMatrix> {
    let terms = enumerate_terms(spec)?;
    if segment.start >= segment.end || segment.end > dataset.len() {
        return Err(Error::SegmentOutOfBounds {
            start: segment.start,
            end: segment.end,
            len: dataset.len(),
        });
    }
    let channel_values: Vec<&[f64]> = spec
        .channels
        .iter()
        .map(|name| {
            dataset
                .channel(name)
                .map(|s| s.values())
                .ok_or_else(|| Error::UnknownChannel(name.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    let compiled = compile_terms(&terms, &spec.channels)?;

    let n_rows = segment.end - segment.start;
    let mut sample = vec![0.0f64; spec.channels.len()];
    let mut columns = vec![Vec::with_capacity(n_rows); terms.len()];
    for i in segment.clone() {
        for (slot, ch) in sample.iter_mut().zip(&channel_values) {
            *slot = ch[i];
        }
        for (col, term) in columns.iter_mut().zip(&compiled) {
            col.push(term.eval(&sample));
        }
    }
    Ok(FeatureMatrix { n_rows, terms, columns })
}

/// Spec-facing name for [`TermDescriptor::render`].
pub fn term_to_string(term: &TermDescriptor) -> String {
    term.render()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::UniformSeries;
    use alloc::collections::BTreeMap;

    fn spec(degree: u32, channels: &[&str]) -> LibrarySpec {
        LibrarySpec {
            poly_degree: degree,
            include_trig: false,
            trig_frequencies: vec![],
            channels: channels.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn renders(terms: &[TermDescriptor]) -> Vec<String> {
        terms.iter().map(|t| t.render()).collect()
    }

    #[test]
    fn degree_one_basis() {
        let terms = enumerate_terms(&spec(1, &["G", "I"])).unwrap();
        assert_eq!(renders(&terms), ["1", "G", "I"]);
    }

    #[test]
    fn graded_lex_degree_two() {
        let terms = enumerate_terms(&spec(2, &["G", "I"])).unwrap();
        assert_eq!(renders(&terms), ["1", "G", "I", "G^2", "G\u{b7}I", "I^2"]);
    }

    #[test]
    fn trig_ordering_sin_before_cos() {
        let mut s = spec(0, &["G"]);
        s.include_trig = true;
        s.trig_frequencies = vec![1.0];
        let terms = enumerate_terms(&s).unwrap();
        assert_eq!(renders(&terms), ["1", "sin(1.0\u{b7}G)", "cos(1.0\u{b7}G)"]);
    }

    #[test]
    fn rejects_bad_specs() {
        assert!(enumerate_terms(&spec(2, &[])).is_err());
        assert!(enumerate_terms(&spec(2, &["G", "G"])).is_err());
        let mut s = spec(1, &["G"]);
        s.include_trig = true;
        assert!(enumerate_terms(&s).is_err());
        s.trig_frequencies = vec![-1.0];
        assert!(enumerate_terms(&s).is_err());
    }

    fn tiny_dataset(g: Vec<f64>, i: Vec<f64>) -> AlignedDataset {
        let n = g.len();
        let mut states = BTreeMap::new();
        states.insert("G".to_string(), UniformSeries::new(0.0, 300.0, g, "mg/dL").unwrap());
        let mut controls = BTreeMap::new();
        controls.insert("I".to_string(), UniformSeries::new(0.0, 300.0, i, "U").unwrap());
        let segments = if n >= 2 { vec![0..n] } else { vec![] };
        AlignedDataset::new(0.0, 300.0, n, states, controls, segments).unwrap()
    }

    #[test]
    fn matrix_row_matches_direct_evaluation() {
        let ds = tiny_dataset(vec![2.0, 0.0], vec![3.0, 0.0]);
        let m = build_matrix(&ds, &spec(2, &["G", "I"]), 0..2).unwrap();
        let row0: Vec<f64> = (0..m.n_cols()).map(|j| m.value(0, j)).collect();
        assert_eq!(row0, vec![1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
        // All-zero sample: constant survives, polynomials vanish.
        let row1: Vec<f64> = (0..m.n_cols()).map(|j| m.value(1, j)).collect();
        assert_eq!(row1, vec![1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn trig_columns_at_zero() {
        let ds = tiny_dataset(vec![0.0, 0.0], vec![0.0, 0.0]);
        let mut s = spec(0, &["G"]);
        s.include_trig = true;
        s.trig_frequencies = vec![1.0];
        let m = build_matrix(&ds, &s, 0..2).unwrap();
        assert_eq!(m.value(0, 1), 0.0);
        assert_eq!(m.value(0, 2), 1.0);
    }

    #[test]
    fn unknown_channel_is_an_error() {
        let ds = tiny_dataset(vec![1.0, 2.0], vec![0.0, 0.0]);
        assert!(matches!(
            build_matrix(&ds, &spec(1, &["G", "missing"]), 0..2),
            Err(Error::UnknownChannel(_))
        ));
    }

    #[test]
    fn segment_bounds_are_checked() {
        let ds = tiny_dataset(vec![1.0, 2.0], vec![0.0, 0.0]);
        assert!(matches!(
            build_matrix(&ds, &spec(1, &["G"]), 0..3),
            Err(Error::SegmentOutOfBounds { .. })
        ));
    }

    #[test]
    fn term_rendering() {
        assert_eq!(TermDescriptor::Constant.render(), "1");
        assert_eq!(
            TermDescriptor::Monomial { exponents: Exponents(vec![("G".into(), 2)]) }.render(),
            "G^2"
        );
        assert_eq!(
            TermDescriptor::Trig { trig: TrigKind::Sin, frequency: 0.5, channel: "G".into() }
                .render(),
            "sin(0.5\u{b7}G)"
        );
    }

    /// Counting oracle: over c channels at degree d there are binomial(c+d, d)
    /// polynomial terms including the constant.
    #[test]
    fn polynomial_term_count_matches_binomial() {
        fn binomial(n: u32, k: u32) -> usize {
            let mut acc = 1usize;
            for i in 0..k {
                acc = acc * (n - i) as usize / (i + 1) as usize;
            }
            acc
        }
        let names = ["a", "b", "c", "d"];
        for c in 1..=4usize {
            for d in 0..=3u32 {
                let terms = enumerate_terms(&spec(d, &names[..c])).unwrap();
                assert_eq!(terms.len(), binomial(c as u32 + d, d), "c={c} d={d}");
            }
        }
    }

    #[test]
    fn enumeration_is_deterministic() {
        let s = spec(3, &["G", "I", "C"]);
        assert_eq!(enumerate_terms(&s).unwrap(), enumerate_terms(&s).unwrap());
    }
}
