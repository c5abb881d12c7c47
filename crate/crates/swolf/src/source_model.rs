//! Finite-alphabet correlated source pairs and their entropic statistics.
//!
//! A source pair is a joint probability table `P(x1, x2)` over
//! `|X1| x |X2|` symbols. Everything downstream (regions, bounds, oracles,
//! simulation) is a function of this table. All entropies are in nats; the
//! dispersion matrix is in nats^2.

use serde::Deserialize;
use thiserror::Error;

use crate::linalg::sym3_eigenvalues;

/// Input-sum slack accepted before a pmf is refused (no silent renormalization
/// beyond this).
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Smallest eigenvalue of the dispersion matrix above which it is treated as
/// positive-definite.
pub const POSITIVE_DEFINITE_EIGENVALUE_MIN: f64 = 1e-10;

#[derive(Debug, Error, PartialEq)]
pub enum SourceError {
    #[error("probability entry at ({row}, {col}) is negative")]
    NegativeEntry { row: usize, col: usize },
    #[error("probability entry at ({row}, {col}) is not finite")]
    NonFiniteEntry { row: usize, col: usize },
    #[error("probabilities sum to {sum}, more than {SUM_TOLERANCE} away from 1")]
    SumNotOne { sum: f64 },
    #[error("symbol {index} of source {side} has zero marginal probability")]
    ZeroMarginal { side: u8, index: usize },
    #[error("each alphabet needs at least two symbols (got {rows} x {cols})")]
    AlphabetTooSmall { rows: usize, cols: usize },
    #[error("input matrix is empty or ragged")]
    MalformedMatrix,
    #[error("mixture weights sum to {sum}, more than {SUM_TOLERANCE} away from 1")]
    WeightSumNotOne { sum: f64 },
    #[error("mixture component {index} has non-positive weight {weight}")]
    NonPositiveWeight { index: usize, weight: f64 },
    #[error(
        "mixture component {index} is {rows} x {cols}, expected {expected_rows} x {expected_cols}"
    )]
    DimensionMismatch {
        index: usize,
        rows: usize,
        cols: usize,
        expected_rows: usize,
        expected_cols: usize,
    },
    #[error("mixture has no components")]
    EmptyMixture,
    #[error("malformed source file: {0}")]
    Parse(String),
}

/// Joint probability table of one source pair.
///
/// Rows index `x1`, columns index `x2`; `p(x1, x2) = P(X1 = x1, X2 = x2)`.
/// Construction guarantees: entries nonnegative, total mass 1 (renormalized
/// from inputs within [`SUM_TOLERANCE`]), and every row/column marginal
/// strictly positive. Immutable afterwards, so values may be shared freely
/// across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPmf {
    rows: usize,
    cols: usize,
    p: Vec<f64>,
}

impl JointPmf {
    /// Validates and normalizes a probability matrix.
    pub fn new(matrix: &[Vec<f64>]) -> Result<Self, SourceError> {
        let rows = matrix.len();
        if rows == 0 {
            return Err(SourceError::MalformedMatrix);
        }
        let cols = matrix[0].len();
        if cols == 0 || matrix.iter().any(|r| r.len() != cols) {
            return Err(SourceError::MalformedMatrix);
        }
        if rows < 2 || cols < 2 {
            return Err(SourceError::AlphabetTooSmall { rows, cols });
        }
        let mut p = Vec::with_capacity(rows * cols);
        for (i, r) in matrix.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if !v.is_finite() {
                    return Err(SourceError::NonFiniteEntry { row: i, col: j });
                }
                if v < 0.0 {
                    return Err(SourceError::NegativeEntry { row: i, col: j });
                }
                p.push(v);
            }
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(SourceError::SumNotOne { sum });
        }
        for v in &mut p {
            *v /= sum;
        }
        let pmf = Self { rows, cols, p };
        for x1 in 0..rows {
            if pmf.marginal1(x1) == 0.0 {
                return Err(SourceError::ZeroMarginal { side: 1, index: x1 });
            }
        }
        for x2 in 0..cols {
            if pmf.marginal2(x2) == 0.0 {
                return Err(SourceError::ZeroMarginal { side: 2, index: x2 });
            }
        }
        Ok(pmf)
    }

    /// Parses the `{"p": [[...], ...]}` JSON form.
    pub fn from_json_str(s: &str) -> Result<Self, SourceError> {
        let file: PmfFile =
            serde_json::from_str(s).map_err(|e| SourceError::Parse(e.to_string()))?;
        Self::new(&file.p)
    }

    /// Number of `X1` symbols.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Number of `X2` symbols.
    pub fn cols(&self) -> usize {
        self.cols
    }

    /// `P(X1 = x1, X2 = x2)`.
    pub fn joint(&self, x1: usize, x2: usize) -> f64 {
        self.p[x1 * self.cols + x2]
    }

    /// `P(X1 = x1)`.
    pub fn marginal1(&self, x1: usize) -> f64 {
        self.p[x1 * self.cols..(x1 + 1) * self.cols].iter().sum()
    }

    /// `P(X2 = x2)`.
    pub fn marginal2(&self, x2: usize) -> f64 {
        (0..self.rows).map(|x1| self.joint(x1, x2)).sum()
    }

    /// Flat row-major view of the table.
    pub fn cells(&self) -> &[f64] {
        &self.p
    }

    /// Entropies and dispersion matrix of the self-information triple.
    ///
    /// With `z1 = -ln P(x1|x2) - H(X1|X2)`, `z2 = -ln P(x2|x1) - H(X2|X1)`,
    /// `z3 = -ln P(x1,x2) - H(X1 X2)`, the dispersion matrix is
    /// `sigma[i][j] = E[z_i z_j]`. Cells with zero joint probability
    /// contribute nothing (the convention `0 ln 0 = 0`).
    pub fn stats(&self) -> SourceStats {
        let m1: Vec<f64> = (0..self.rows).map(|i| self.marginal1(i)).collect();
        let m2: Vec<f64> = (0..self.cols).map(|j| self.marginal2(j)).collect();

        let h1: f64 = m1
            .iter()
            .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
            .sum();
        let h2: f64 = m2
            .iter()
            .map(|&p| if p > 0.0 { -p * p.ln() } else { 0.0 })
            .sum();

        // Expectations of the three self-informations, each summed directly.
        let mut h12 = 0.0;
        let mut h1_given_2 = 0.0;
        let mut h2_given_1 = 0.0;
        let mut mutual = 0.0;
        for x1 in 0..self.rows {
            for x2 in 0..self.cols {
                let p = self.joint(x1, x2);
                if p == 0.0 {
                    continue;
                }
                let lp = p.ln();
                h12 -= p * lp;
                h1_given_2 -= p * (lp - m2[x2].ln());
                h2_given_1 -= p * (lp - m1[x1].ln());
                mutual += p * (lp - m1[x1].ln() - m2[x2].ln());
            }
        }
        if mutual < 0.0 && mutual > -1e-12 {
            mutual = 0.0; // rounding of an exactly independent table
        }

        let mut sigma = [[0.0f64; 3]; 3];
        for x1 in 0..self.rows {
            for x2 in 0..self.cols {
                let p = self.joint(x1, x2);
                if p == 0.0 {
                    continue;
                }
                let lp = p.ln();
                let z = [
                    -(lp - m2[x2].ln()) - h1_given_2,
                    -(lp - m1[x1].ln()) - h2_given_1,
                    -lp - h12,
                ];
                for i in 0..3 {
                    for j in 0..3 {
                        sigma[i][j] += p * z[i] * z[j];
                    }
                }
            }
        }

        let min_eig = sym3_eigenvalues(&sigma)[0];
        SourceStats {
            h1_given_2,
            h2_given_1,
            h12,
            h1,
            h2,
            mutual_info: mutual,
            sigma,
            sigma_positive_definite: min_eig > POSITIVE_DEFINITE_EIGENVALUE_MIN,
        }
    }
}

#[derive(Deserialize)]
struct PmfFile {
    p: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct MixtureComponentFile {
    w: f64,
    p: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
struct MixtureFile {
    components: Vec<MixtureComponentFile>,
}

/// Entropic statistics of one [`JointPmf`], all in nats / nats^2.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceStats {
    /// `H(X1|X2)`.
    pub h1_given_2: f64,
    /// `H(X2|X1)`.
    pub h2_given_1: f64,
    /// `H(X1 X2)`.
    pub h12: f64,
    /// `H(X1)`.
    pub h1: f64,
    /// `H(X2)`.
    pub h2: f64,
    /// `I(X1; X2)`, nonnegative.
    pub mutual_info: f64,
    /// Dispersion matrix of `(z1, z2, z3)`.
    pub sigma: [[f64; 3]; 3],
    /// Whether the smallest eigenvalue of `sigma` exceeds
    /// [`POSITIVE_DEFINITE_EIGENVALUE_MIN`]. Region operations that need the
    /// full trivariate law refuse sources where this is false.
    pub sigma_positive_definite: bool,
}

impl SourceStats {
    /// Variance of coordinate `i` (0-based) of the self-information triple.
    pub fn var(&self, i: usize) -> f64 {
        self.sigma[i][i]
    }

    /// 2x2 principal submatrix on coordinates `(i, j)` (0-based).
    pub fn sigma2(&self, i: usize, j: usize) -> [[f64; 2]; 2] {
        [
            [self.sigma[i][i], self.sigma[i][j]],
            [self.sigma[j][i], self.sigma[j][j]],
        ]
    }
}

/// Finite mixture of i.i.d. source pairs sharing one alphabet pair.
///
/// Weights are strictly positive and renormalized to total mass 1 (inputs off
/// by more than [`SUM_TOLERANCE`] are refused).
#[derive(Debug, Clone, PartialEq)]
pub struct MixedSource {
    components: Vec<(f64, JointPmf)>,
}

impl MixedSource {
    pub fn new(components: Vec<(f64, JointPmf)>) -> Result<Self, SourceError> {
        if components.is_empty() {
            return Err(SourceError::EmptyMixture);
        }
        let (r0, c0) = (components[0].1.rows(), components[0].1.cols());
        for (index, (w, pmf)) in components.iter().enumerate() {
            if *w <= 0.0 || w.is_nan() {
                return Err(SourceError::NonPositiveWeight { index, weight: *w });
            }
            if pmf.rows() != r0 || pmf.cols() != c0 {
                return Err(SourceError::DimensionMismatch {
                    index,
                    rows: pmf.rows(),
                    cols: pmf.cols(),
                    expected_rows: r0,
                    expected_cols: c0,
                });
            }
        }
        let sum: f64 = components.iter().map(|(w, _)| w).sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(SourceError::WeightSumNotOne { sum });
        }
        let components = components
            .into_iter()
            .map(|(w, pmf)| (w / sum, pmf))
            .collect();
        Ok(Self { components })
    }

    /// Parses the `{"components": [{"w": ..., "p": [[...]]}, ...]}` JSON form.
    pub fn from_json_str(s: &str) -> Result<Self, SourceError> {
        let file: MixtureFile =
            serde_json::from_str(s).map_err(|e| SourceError::Parse(e.to_string()))?;
        let mut components = Vec::with_capacity(file.components.len());
        for c in &file.components {
            components.push((c.w, JointPmf::new(&c.p)?));
        }
        Self::new(components)
    }

    pub fn components(&self) -> &[(f64, JointPmf)] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }
}

/// The running binary example table used throughout the test suites:
/// `P(0,0) = 0.5, P(0,1) = 0.25, P(1,0) = 0.15, P(1,1) = 0.1`
/// (marginals `P(X1) = (0.75, 0.25)`, `P(X2) = (0.65, 0.35)`).
pub fn example_table() -> JointPmf {
    JointPmf::new(&[vec![0.5, 0.25], vec![0.15, 0.1]]).expect("static table is valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::{nats2_to_bits2, nats_to_bits};

    #[test]
    fn accepts_transposed_layout_matrix() {
        // Same cell multiset as the example table, transposed orientation.
        let pmf = JointPmf::new(&[vec![0.5, 0.15], vec![0.25, 0.1]]).unwrap();
        assert_eq!(pmf.rows(), 2);
        assert!((pmf.joint(0, 1) - 0.15).abs() < 1e-15);
    }

    #[test]
    fn accepts_independent_uniform() {
        let pmf = JointPmf::new(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        assert!((pmf.marginal1(0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_zero_marginal() {
        let err = JointPmf::new(&[vec![0.5, 0.5], vec![0.0, 0.0]]).unwrap_err();
        assert_eq!(err, SourceError::ZeroMarginal { side: 1, index: 1 });
        let err = JointPmf::new(&[vec![0.5, 0.0], vec![0.5, 0.0]]).unwrap_err();
        assert_eq!(err, SourceError::ZeroMarginal { side: 2, index: 1 });
    }

    #[test]
    fn rejects_negative_and_bad_sum() {
        assert!(matches!(
            JointPmf::new(&[vec![0.6, -0.1], vec![0.3, 0.2]]),
            Err(SourceError::NegativeEntry { .. })
        ));
        assert!(matches!(
            JointPmf::new(&[vec![0.5, 0.25], vec![0.15, 0.2]]),
            Err(SourceError::SumNotOne { .. })
        ));
        // Within 1e-9 of 1: accepted and renormalized.
        let pmf = JointPmf::new(&[vec![0.5, 0.25], vec![0.15, 0.1 + 4e-10]]).unwrap();
        let total: f64 = pmf.cells().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_small_or_ragged() {
        assert!(matches!(
            JointPmf::new(&[vec![1.0]]),
            Err(SourceError::AlphabetTooSmall { .. })
        ));
        assert!(matches!(
            JointPmf::new(&[vec![0.5, 0.5], vec![1.0]]),
            Err(SourceError::MalformedMatrix)
        ));
        assert!(matches!(
            JointPmf::new(&[]),
            Err(SourceError::MalformedMatrix)
        ));
    }

    #[test]
    fn example_table_entropies_in_bits() {
        let s = example_table().stats();
        assert!((nats_to_bits(s.h1_given_2) - 0.809).abs() < 1e-3);
        assert!((nats_to_bits(s.h2) - 0.934).abs() < 1e-3);
        assert!((nats_to_bits(s.h12) - 1.743).abs() < 1e-3);
    }

    #[test]
    fn example_table_dispersion_in_bits2() {
        let s = example_table().stats();
        assert!((nats2_to_bits2(s.sigma[0][0]) - 0.475).abs() < 1e-3);
        assert!((nats2_to_bits2(s.sigma[0][2]) - 0.492).abs() < 1e-3);
        assert!((nats2_to_bits2(s.sigma[2][2]) - 0.690).abs() < 1e-3);
        assert!(s.sigma_positive_definite);
    }

    #[test]
    fn chain_rule_and_symmetry() {
        let s = example_table().stats();
        assert!((s.h1_given_2 + s.h2 - s.h12).abs() < 1e-12);
        assert!((s.h2_given_1 + s.h1 - s.h12).abs() < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                assert!((s.sigma[i][j] - s.sigma[j][i]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn independent_uniform_has_zero_dispersion() {
        let pmf = JointPmf::new(&[vec![0.25, 0.25], vec![0.25, 0.25]]).unwrap();
        let s = pmf.stats();
        assert!(s.mutual_info < 1e-12);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(s.sigma[i][j], 0.0);
            }
        }
        assert!(!s.sigma_positive_definite);
    }

    #[test]
    fn mixture_construction() {
        let t = example_table();
        let m = MixedSource::new(vec![(1.0, t.clone())]).unwrap();
        assert_eq!(m.len(), 1);

        let other = JointPmf::new(&[vec![0.7, 0.1], vec![0.1, 0.1]]).unwrap();
        let m = MixedSource::new(vec![(0.5, t.clone()), (0.5, other)]).unwrap();
        assert_eq!(m.len(), 2);

        let three_by_two =
            JointPmf::new(&[vec![0.2, 0.2], vec![0.2, 0.2], vec![0.1, 0.1]]).unwrap();
        assert!(matches!(
            MixedSource::new(vec![(0.5, t.clone()), (0.5, three_by_two)]),
            Err(SourceError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            MixedSource::new(vec![(0.6, t.clone()), (0.6, t.clone())]),
            Err(SourceError::WeightSumNotOne { .. })
        ));
        assert!(matches!(
            MixedSource::new(vec![(1.0, t.clone()), (0.0, t.clone())]),
            Err(SourceError::NonPositiveWeight { .. })
        ));
        assert!(matches!(
            MixedSource::new(vec![]),
            Err(SourceError::EmptyMixture)
        ));
    }

    #[test]
    fn json_forms() {
        let pmf = JointPmf::from_json_str(r#"{"p": [[0.5, 0.25], [0.15, 0.1]]}"#).unwrap();
        assert_eq!(pmf, example_table());
        let mix = MixedSource::from_json_str(
            r#"{"components": [{"w": 0.5, "p": [[0.5, 0.25], [0.15, 0.1]]},
                               {"w": 0.5, "p": [[0.25, 0.25], [0.25, 0.25]]}]}"#,
        )
        .unwrap();
        assert_eq!(mix.len(), 2);
        assert!(JointPmf::from_json_str("not json").is_err());
    }
}
