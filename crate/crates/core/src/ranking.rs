//! Domain types and closed-form ranking metrics: SUCRA from rank
//! probabilities, expected ranks and P-scores (full and subset).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{flatten, to_rows};
use crate::scalar::Scalar;
use crate::treatments::TreatmentSet;

/// Hard tolerance on rank-probability row sums.
pub const ROW_SUM_TOLERANCE: f64 = 1e-8;
/// Soft tolerance on column sums; violations are warnings.
pub const COLUMN_SUM_TOLERANCE: f64 = 1e-6;
/// Tolerance for antisymmetry/symmetry checks on effects and covariances.
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// n×n matrix of `p[i][k]`, the probability that treatment `i` takes rank
/// `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankProbabilityMatrix<T> {
    probs: Vec<T>,
    treatments: TreatmentSet,
}

impl<T: Scalar> RankProbabilityMatrix<T> {
    /// Validates entries in `[0, 1]` and row sums within
    /// [`ROW_SUM_TOLERANCE`]. Column sums are not enforced here; see
    /// [`Self::column_sum_violation`].
    pub fn new(rows: Vec<Vec<T>>, treatments: TreatmentSet) -> Result<Self> {
        let n = treatments.len();
        let probs = flatten(rows, n, n, "rank probabilities")?;
        Self::from_flat(probs, treatments)
    }

    pub(crate) fn from_flat(probs: Vec<T>, treatments: TreatmentSet) -> Result<Self> {
        let n = treatments.len();
        if probs.len() != n * n {
            return Err(Error::Dimension {
                what: "rank probabilities",
                expected: n * n,
                got: probs.len(),
            });
        }
        let tol = T::tolerance(ROW_SUM_TOLERANCE);
        for (i, row) in probs.chunks(n).enumerate() {
            for (k, &p) in row.iter().enumerate() {
                if !p.is_finite() {
                    return Err(Error::NonFinite {
                        what: "rank probabilities",
                        row: i,
                        col: k,
                    });
                }
                if p < T::zero() || p > T::one() {
                    return Err(Error::ProbabilityRange {
                        row: i,
                        col: k,
                        value: p.to_f64_lossy(),
                    });
                }
            }
            let sum: T = row.iter().copied().sum();
            if (sum - T::one()).abs() > tol {
                return Err(Error::RowSum {
                    row: i,
                    treatment: treatments.label(i).to_owned(),
                    sum: sum.to_f64_lossy(),
                });
            }
        }
        Ok(Self { probs, treatments })
    }

    pub fn n(&self) -> usize {
        self.treatments.len()
    }

    pub fn treatments(&self) -> &TreatmentSet {
        &self.treatments
    }

    pub fn get(&self, treatment: usize, rank_index: usize) -> T {
        self.probs[treatment * self.n() + rank_index]
    }

    pub fn row(&self, treatment: usize) -> &[T] {
        let n = self.n();
        &self.probs[treatment * n..(treatment + 1) * n]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        to_rows(&self.probs, self.n())
    }

    pub fn column_sums(&self) -> Vec<T> {
        let n = self.n();
        (0..n)
            .map(|k| (0..n).map(|i| self.get(i, k)).sum())
            .collect()
    }

    /// First column (index, sum) whose sum misses 1 by more than `tol`.
    pub fn column_sum_violation(&self, tol: T) -> Option<(usize, T)> {
        self.column_sums()
            .into_iter()
            .enumerate()
            .find(|&(_, s)| (s - T::one()).abs() > tol)
    }

    pub fn is_doubly_stochastic(&self) -> bool {
        self.column_sum_violation(T::tolerance(COLUMN_SUM_TOLERANCE))
            .is_none()
    }

    /// Whether every row is a unit vector, i.e. the hierarchy is certain.
    pub fn is_permutation(&self) -> bool {
        self.probs
            .iter()
            .all(|&p| p == T::zero() || p == T::one())
            && self.is_doubly_stochastic()
    }
}

/// Kind of a per-treatment ranking score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Sucra,
    Pscore,
}

impl ScoreKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ScoreKind::Sucra => "sucra",
            ScoreKind::Pscore => "pscore",
        }
    }
}

/// Per-treatment SUCRA or P-score values.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector<T> {
    scores: Vec<T>,
    kind: ScoreKind,
    treatments: TreatmentSet,
}

impl<T: Scalar> ScoreVector<T> {
    pub fn new(scores: Vec<T>, kind: ScoreKind, treatments: TreatmentSet) -> Result<Self> {
        if scores.len() != treatments.len() {
            return Err(Error::Dimension {
                what: "scores",
                expected: treatments.len(),
                got: scores.len(),
            });
        }
        for (i, &s) in scores.iter().enumerate() {
            if !s.is_finite() {
                return Err(Error::NonFinite {
                    what: "scores",
                    row: i,
                    col: 0,
                });
            }
            if s < T::zero() || s > T::one() {
                return Err(Error::ScoreRange {
                    treatment: treatments.label(i).to_owned(),
                    value: s.to_f64_lossy(),
                });
            }
        }
        Ok(Self {
            scores,
            kind,
            treatments,
        })
    }

    pub fn values(&self) -> &[T] {
        &self.scores
    }

    pub fn kind(&self) -> ScoreKind {
        self.kind
    }

    pub fn treatments(&self) -> &TreatmentSet {
        &self.treatments
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn get(&self, label: &str) -> Option<T> {
        self.treatments.index_of(label).map(|i| self.scores[i])
    }

    pub fn mean(&self) -> T {
        self.scores.iter().copied().sum::<T>() / T::from_count(self.len())
    }
}

/// Relative effects of every non-reference treatment against a common
/// reference, with their covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceEffects<T> {
    effects: Vec<T>,
    covariance: Vec<T>,
    reference: usize,
    treatments: TreatmentSet,
}

impl<T: Scalar> ReferenceEffects<T> {
    /// `effects` and `covariance` are indexed by the non-reference
    /// treatments in treatment-set order.
    pub fn new(
        effects: Vec<T>,
        covariance: Vec<Vec<T>>,
        reference: &str,
        treatments: TreatmentSet,
    ) -> Result<Self> {
        let reference = treatments
            .index_of(reference)
            .ok_or_else(|| Error::UnknownReference(reference.to_owned()))?;
        let m = treatments.len() - 1;
        if effects.len() != m {
            return Err(Error::Dimension {
                what: "reference effects",
                expected: m,
                got: effects.len(),
            });
        }
        if let Some(col) = effects.iter().position(|e| !e.is_finite()) {
            return Err(Error::NonFinite {
                what: "reference effects",
                row: 0,
                col,
            });
        }
        let covariance = flatten(covariance, m, m, "covariance")?;
        let tol = T::tolerance(SYMMETRY_TOLERANCE);
        for r in 0..m {
            let d = covariance[r * m + r];
            if d < T::zero() {
                return Err(Error::NegativeVariance {
                    index: r,
                    value: d.to_f64_lossy(),
                });
            }
            for c in (r + 1)..m {
                if (covariance[r * m + c] - covariance[c * m + r]).abs() > tol {
                    return Err(Error::AsymmetricCovariance { row: r, col: c });
                }
            }
        }
        Ok(Self {
            effects,
            covariance,
            reference,
            treatments,
        })
    }

    /// Diagonal covariance from per-contrast standard errors.
    pub fn from_standard_errors(
        effects: Vec<T>,
        standard_errors: &[T],
        reference: &str,
        treatments: TreatmentSet,
    ) -> Result<Self> {
        let m = standard_errors.len();
        let covariance = (0..m)
            .map(|r| {
                (0..m)
                    .map(|c| {
                        if r == c {
                            standard_errors[r] * standard_errors[r]
                        } else {
                            T::zero()
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(effects, covariance, reference, treatments)
    }

    pub fn treatments(&self) -> &TreatmentSet {
        &self.treatments
    }

    pub fn reference(&self) -> &str {
        self.treatments.label(self.reference)
    }

    pub fn reference_index(&self) -> usize {
        self.reference
    }

    pub fn effects(&self) -> &[T] {
        &self.effects
    }

    pub fn covariance_rows(&self) -> Vec<Vec<T>> {
        to_rows(&self.covariance, self.effects.len())
    }

    pub(crate) fn covariance_flat(&self) -> &[T] {
        &self.covariance
    }

    /// Treatment indices of the effects, in order.
    pub fn non_reference_indices(&self) -> Vec<usize> {
        (0..self.treatments.len())
            .filter(|&i| i != self.reference)
            .collect()
    }

    /// Effects for all n treatments, with the reference pinned at zero.
    pub fn full_effects(&self) -> Vec<T> {
        let mut full = vec![T::zero(); self.treatments.len()];
        for (slot, &e) in self.non_reference_indices().into_iter().zip(&self.effects) {
            full[slot] = e;
        }
        full
    }

    /// n×n covariance with an all-zero reference row and column.
    pub fn full_covariance(&self) -> Vec<T> {
        let n = self.treatments.len();
        let m = n - 1;
        let idx = self.non_reference_indices();
        let mut full = vec![T::zero(); n * n];
        for r in 0..m {
            for c in 0..m {
                full[idx[r] * n + idx[c]] = self.covariance[r * m + c];
            }
        }
        full
    }
}

/// Relative effects and standard errors for every ordered pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseEffects<T> {
    theta: Vec<T>,
    se: Vec<T>,
    treatments: TreatmentSet,
}

impl<T: Scalar> PairwiseEffects<T> {
    /// `theta[i][j]` is the effect of `i` versus `j`. The diagonal of `se`
    /// is ignored.
    pub fn new(theta: Vec<Vec<T>>, se: Vec<Vec<T>>, treatments: TreatmentSet) -> Result<Self> {
        let n = treatments.len();
        let mut theta = flatten(theta, n, n, "relative effects")?;
        let mut se = flatten(se, n, n, "standard errors")?;
        let tol = T::tolerance(SYMMETRY_TOLERANCE);
        for i in 0..n {
            if theta[i * n + i].abs() > tol {
                return Err(Error::NotAntisymmetric {
                    a: treatments.label(i).to_owned(),
                    b: treatments.label(i).to_owned(),
                });
            }
            theta[i * n + i] = T::zero();
            se[i * n + i] = T::zero();
            for j in (i + 1)..n {
                let (a, b) = (treatments.label(i), treatments.label(j));
                if (theta[i * n + j] + theta[j * n + i]).abs() > tol {
                    return Err(Error::NotAntisymmetric {
                        a: a.to_owned(),
                        b: b.to_owned(),
                    });
                }
                let s = se[i * n + j];
                if (s - se[j * n + i]).abs() > tol {
                    return Err(Error::AsymmetricStandardError {
                        a: a.to_owned(),
                        b: b.to_owned(),
                    });
                }
                if s <= T::zero() {
                    return Err(Error::NonPositiveStandardError {
                        a: a.to_owned(),
                        b: b.to_owned(),
                        value: s.to_f64_lossy(),
                    });
                }
            }
        }
        Ok(Self {
            theta,
            se,
            treatments,
        })
    }

    pub fn n(&self) -> usize {
        self.treatments.len()
    }

    pub fn treatments(&self) -> &TreatmentSet {
        &self.treatments
    }

    pub fn theta(&self, i: usize, j: usize) -> T {
        self.theta[i * self.n() + j]
    }

    pub fn se(&self, i: usize, j: usize) -> T {
        self.se[i * self.n() + j]
    }

    pub fn theta_rows(&self) -> Vec<Vec<T>> {
        to_rows(&self.theta, self.n())
    }

    pub fn se_rows(&self) -> Vec<Vec<T>> {
        to_rows(&self.se, self.n())
    }

    /// Oriented z-statistic of `i` versus `j`: positive favours `i`.
    pub fn z(&self, i: usize, j: usize) -> T {
        self.treatments.direction().orient(self.theta(i, j)) / self.se(i, j)
    }

    /// The same effects read with the opposite outcome direction.
    pub fn with_direction(&self, direction: crate::Direction) -> Self {
        Self {
            theta: self.theta.clone(),
            se: self.se.clone(),
            treatments: self.treatments.with_direction(direction),
        }
    }
}

fn check_row_stochastic<T: Scalar>(m: &RankProbabilityMatrix<T>) -> Result<()> {
    // Constructors enforce this; re-checked for matrices built from flat data.
    let tol = T::tolerance(ROW_SUM_TOLERANCE);
    for i in 0..m.n() {
        let sum: T = m.row(i).iter().copied().sum();
        if (sum - T::one()).abs() > tol {
            return Err(Error::RowSum {
                row: i,
                treatment: m.treatments().label(i).to_owned(),
                sum: sum.to_f64_lossy(),
            });
        }
    }
    Ok(())
}

/// SUCRA(i): the normalised area under treatment i's cumulative ranking
/// curve, `Σ_{r<n} Σ_{k≤r} p_ik / (n-1)`.
pub fn sucra_from_rank_probs<T: Scalar>(m: &RankProbabilityMatrix<T>) -> Result<ScoreVector<T>> {
    check_row_stochastic(m)?;
    let n = m.n();
    let denom = T::from_count(n - 1);
    let scores = (0..n)
        .map(|i| {
            let row = m.row(i);
            let mut cumulative = T::zero();
            let mut area = T::zero();
            for &p in &row[..n - 1] {
                cumulative = cumulative + p;
                area = area + cumulative;
            }
            clamp_unit(area / denom)
        })
        .collect();
    ScoreVector::new(scores, ScoreKind::Sucra, m.treatments().clone())
}

/// Mean rank per treatment, `Σ_k k·p_ik` with ranks numbered from 1.
pub fn expected_rank<T: Scalar>(m: &RankProbabilityMatrix<T>) -> Result<Vec<T>> {
    check_row_stochastic(m)?;
    let n = m.n();
    Ok((0..n)
        .map(|i| {
            m.row(i)
                .iter()
                .enumerate()
                .map(|(k, &p)| T::from_count(k + 1) * p)
                .sum()
        })
        .collect())
}

/// SUCRA recovered linearly from expected ranks: `(n - E(rank)) / (n - 1)`.
pub fn sucra_from_expected_rank<T: Scalar>(
    expected_ranks: &[T],
    treatments: &TreatmentSet,
) -> Result<ScoreVector<T>> {
    let n = treatments.len();
    if expected_ranks.len() != n {
        return Err(Error::Dimension {
            what: "expected ranks",
            expected: n,
            got: expected_ranks.len(),
        });
    }
    check_expected_ranks(expected_ranks, treatments)?;
    let nf = T::from_count(n);
    let denom = T::from_count(n - 1);
    let scores = expected_ranks
        .iter()
        .map(|&e| clamp_unit((nf - e) / denom))
        .collect();
    ScoreVector::new(scores, ScoreKind::Sucra, treatments.clone())
}

pub(crate) fn check_expected_ranks<T: Scalar>(
    expected_ranks: &[T],
    treatments: &TreatmentSet,
) -> Result<()> {
    let n = treatments.len();
    let tol = T::tolerance(ROW_SUM_TOLERANCE) * T::from_count(n);
    let hi = T::from_count(n);
    for (i, &e) in expected_ranks.iter().enumerate() {
        if !e.is_finite() || e < T::one() - tol || e > hi + tol {
            return Err(Error::ExpectedRankRange {
                treatment: treatments
                    .labels()
                    .get(i)
                    .cloned()
                    .unwrap_or_else(|| i.to_string()),
                value: e.to_f64_lossy(),
                n,
            });
        }
    }
    Ok(())
}

/// Rounding can push an exact 0 or 1 a few ulps outside the unit interval.
fn clamp_unit<T: Scalar>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}

/// Contrast algebra from reference-based effects:
/// `θ_ij = θ_i − θ_j`, `Var = V_ii + V_jj − 2 V_ij`, reference fixed at 0.
pub fn pairwise_from_reference<T: Scalar>(r: &ReferenceEffects<T>) -> Result<PairwiseEffects<T>> {
    let treatments = r.treatments().clone();
    let n = treatments.len();
    let effects = r.full_effects();
    let cov = r.full_covariance();
    let mut theta = vec![vec![T::zero(); n]; n];
    let mut se = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let variance = cov[i * n + i] + cov[j * n + j] - T::lit(2.0) * cov[i * n + j];
            if variance <= T::zero() {
                return Err(Error::DegenerateContrast {
                    a: treatments.label(i).to_owned(),
                    b: treatments.label(j).to_owned(),
                    variance: variance.to_f64_lossy(),
                });
            }
            let d = effects[i] - effects[j];
            let s = variance.sqrt();
            theta[i][j] = d;
            theta[j][i] = -d;
            se[i][j] = s;
            se[j][i] = s;
        }
    }
    PairwiseEffects::new(theta, se, treatments)
}

/// P-scores restricted to `indices` (sorted treatment indices).
pub(crate) fn pscores_over<T: Scalar>(p: &PairwiseEffects<T>, indices: &[usize]) -> Vec<T> {
    let denom = T::from_count(indices.len() - 1);
    indices
        .iter()
        .map(|&i| {
            let total: T = indices
                .iter()
                .filter(|&&j| j != i)
                .map(|&j| p.z(i, j).std_normal_cdf())
                .sum();
            clamp_unit(total / denom)
        })
        .collect()
}

/// P(i) = mean over competitors j of Φ(θ_ij / SE_ij), with θ oriented so
/// that larger is better.
pub fn pscore_from_pairwise<T: Scalar>(p: &PairwiseEffects<T>) -> Result<ScoreVector<T>> {
    let all: Vec<usize> = (0..p.n()).collect();
    ScoreVector::new(pscores_over(p, &all), ScoreKind::Pscore, p.treatments().clone())
}

/// P-scores with the competing set narrowed to `subset`. Scores come back
/// in network order regardless of the order of `subset`.
pub fn subset_pscore<T: Scalar, S: AsRef<str>>(
    p: &PairwiseEffects<T>,
    subset: &[S],
) -> Result<ScoreVector<T>> {
    let indices = p.treatments().resolve_subset(subset)?;
    let treatments = p.treatments().restrict(&indices)?;
    ScoreVector::new(pscores_over(p, &indices), ScoreKind::Pscore, treatments)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treatments::Direction;

    fn abc(direction: Direction) -> TreatmentSet {
        TreatmentSet::new(["A", "B", "C"], direction).unwrap()
    }

    fn mat(rows: Vec<Vec<f64>>) -> RankProbabilityMatrix<f64> {
        RankProbabilityMatrix::new(rows, abc(Direction::LargerIsBetter)).unwrap()
    }

    fn identity() -> RankProbabilityMatrix<f64> {
        mat(vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
    }

    fn uniform() -> RankProbabilityMatrix<f64> {
        let t = 1.0 / 3.0;
        mat(vec![vec![t; 3]; 3])
    }

    fn cluster() -> RankProbabilityMatrix<f64> {
        mat(vec![
            vec![0.5, 0.5, 0.0],
            vec![0.5, 0.5, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
    }

    fn assert_close(got: &[f64], want: &[f64], tol: f64) {
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(want) {
            assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
        }
    }

    #[test]
    fn sucra_examples() {
        assert_close(sucra_from_rank_probs(&identity()).unwrap().values(), &[1.0, 0.5, 0.0], 1e-15);
        assert_close(sucra_from_rank_probs(&uniform()).unwrap().values(), &[0.5; 3], 1e-15);
        assert_close(sucra_from_rank_probs(&cluster()).unwrap().values(), &[0.75, 0.75, 0.0], 1e-15);
    }

    #[test]
    fn expected_rank_examples() {
        assert_close(&expected_rank(&identity()).unwrap(), &[1.0, 2.0, 3.0], 1e-15);
        assert_close(&expected_rank(&uniform()).unwrap(), &[2.0; 3], 1e-15);
        assert_close(&expected_rank(&cluster()).unwrap(), &[1.5, 1.5, 3.0], 1e-15);
    }

    #[test]
    fn sucra_from_expected_rank_examples() {
        let t = abc(Direction::LargerIsBetter);
        let s = |e: &[f64]| sucra_from_expected_rank(e, &t).unwrap().values().to_vec();
        assert_close(&s(&[1.0, 2.0, 3.0]), &[1.0, 0.5, 0.0], 0.0);
        assert_close(&s(&[2.0, 2.0, 2.0]), &[0.5; 3], 0.0);
        assert_close(&s(&[1.5, 1.5, 3.0]), &[0.75, 0.75, 0.0], 0.0);
        assert!(matches!(
            sucra_from_expected_rank(&[0.5, 2.0, 3.0], &t),
            Err(Error::ExpectedRankRange { .. })
        ));
        assert!(matches!(
            sucra_from_expected_rank(&[1.0, 2.0], &t),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn row_sum_validation() {
        let bad = RankProbabilityMatrix::new(
            vec![vec![0.5, 0.4, 0.0], vec![0.5, 0.5, 0.0], vec![0.0, 0.1, 1.0]],
            abc(Direction::LargerIsBetter),
        );
        match bad {
            Err(Error::RowSum { row, treatment, .. }) => {
                assert_eq!(row, 0);
                assert_eq!(treatment, "A");
            }
            other => panic!("expected row-sum error, got {other:?}"),
        }
        let edge = 0.999_999_999;
        assert!(RankProbabilityMatrix::new(
            vec![vec![edge, 0.0], vec![0.0, 1.0]],
            TreatmentSet::new(["A", "B"], Direction::LargerIsBetter).unwrap()
        )
        .is_ok());
        assert!(matches!(
            RankProbabilityMatrix::new(vec![vec![1.0, 0.0]], abc(Direction::LargerIsBetter)),
            Err(Error::Dimension { .. })
        ));
        assert!(matches!(
            RankProbabilityMatrix::new(
                vec![vec![1.5, -0.5], vec![0.0, 1.0]],
                TreatmentSet::new(["A", "B"], Direction::LargerIsBetter).unwrap()
            ),
            Err(Error::ProbabilityRange { .. })
        ));
    }

    #[test]
    fn column_violation_is_reported_not_rejected() {
        let m = mat(vec![
            vec![1.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ]);
        assert!(!m.is_doubly_stochastic());
        assert_eq!(m.column_sum_violation(1e-6).unwrap().0, 0);
        assert!(sucra_from_rank_probs(&m).is_ok());
    }

    #[test]
    fn pairwise_from_reference_examples() {
        let t = TreatmentSet::new(["ref", "A"], Direction::LargerIsBetter).unwrap();
        let r = ReferenceEffects::new(vec![1.0], vec![vec![0.25]], "ref", t).unwrap();
        let p = pairwise_from_reference(&r).unwrap();
        assert_eq!(p.theta(1, 0), 1.0);
        assert_eq!(p.theta(0, 1), -1.0);
        assert_eq!(p.se(1, 0), 0.5);

        let t3 = TreatmentSet::new(["1", "2", "3"], Direction::LargerIsBetter).unwrap();
        let r = ReferenceEffects::new(
            vec![1.0, 2.0],
            vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            "1",
            t3.clone(),
        )
        .unwrap();
        let p = pairwise_from_reference(&r).unwrap();
        assert_eq!(p.theta(1, 2), -1.0);
        assert!((p.se(1, 2) - 2f64.sqrt()).abs() < 1e-15);

        let r = ReferenceEffects::new(
            vec![1.0, 2.0],
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            "1",
            t3,
        )
        .unwrap();
        match pairwise_from_reference(&r) {
            Err(Error::DegenerateContrast { a, b, .. }) => assert_eq!((a.as_str(), b.as_str()), ("2", "3")),
            other => panic!("expected degenerate contrast, got {other:?}"),
        }
    }

    #[test]
    fn reference_effects_validation() {
        let t = TreatmentSet::new(["ref", "A", "B"], Direction::LargerIsBetter).unwrap();
        assert!(matches!(
            ReferenceEffects::new(vec![0.0, 0.0], vec![vec![1.0, 0.5], vec![0.4, 1.0]], "ref", t.clone()),
            Err(Error::AsymmetricCovariance { .. })
        ));
        assert!(matches!(
            ReferenceEffects::new(vec![0.0, 0.0], vec![vec![-1.0, 0.0], vec![0.0, 1.0]], "ref", t.clone()),
            Err(Error::NegativeVariance { .. })
        ));
        assert!(matches!(
            ReferenceEffects::new(vec![0.0, 0.0], vec![vec![1.0, 0.0], vec![0.0, 1.0]], "X", t.clone()),
            Err(Error::UnknownReference(_))
        ));
        let r = ReferenceEffects::new(vec![3.0, 4.0], vec![vec![1.0, 0.2], vec![0.2, 2.0]], "A", t).unwrap();
        assert_eq!(r.full_effects(), vec![3.0, 0.0, 4.0]);
        assert_eq!(r.non_reference_indices(), vec![0, 2]);
        let full = r.full_covariance();
        assert_eq!(full[2], 0.2);
        assert_eq!(full[4], 0.0);
    }

    fn three_arm(direction: Direction) -> PairwiseEffects<f64> {
        let t = TreatmentSet::new(["t1", "t2", "t3"], direction).unwrap();
        let mu = [0.0, 1.0, 2.0];
        let theta = (0..3).map(|i| (0..3).map(|j| mu[i] - mu[j]).collect()).collect();
        let se = vec![vec![1.0; 3]; 3];
        PairwiseEffects::new(theta, se, t).unwrap()
    }

    #[test]
    fn pscore_examples() {
        let t = TreatmentSet::new(["a", "b"], Direction::LargerIsBetter).unwrap();
        let p = PairwiseEffects::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]], vec![vec![0.0, 3.0], vec![3.0, 0.0]], t.clone()).unwrap();
        assert_eq!(pscore_from_pairwise(&p).unwrap().values(), &[0.5, 0.5]);

        let p = PairwiseEffects::new(vec![vec![0.0, 1.96], vec![-1.96, 0.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]], t).unwrap();
        assert_close(pscore_from_pairwise(&p).unwrap().values(), &[0.97500, 0.02500], 1e-4);

        let s = pscore_from_pairwise(&three_arm(Direction::LargerIsBetter)).unwrap();
        assert_close(s.values(), &[0.09070, 0.5, 0.90930], 1e-4);
        assert!((s.mean() - 0.5).abs() < 1e-10);
    }

    #[test]
    fn pscore_direction_flip() {
        let up = pscore_from_pairwise(&three_arm(Direction::LargerIsBetter)).unwrap();
        let down = pscore_from_pairwise(&three_arm(Direction::SmallerIsBetter)).unwrap();
        for (u, d) in up.values().iter().zip(down.values()) {
            assert!((u + d - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn subset_pscore_examples() {
        let p = three_arm(Direction::LargerIsBetter);
        let full = pscore_from_pairwise(&p).unwrap();
        let all = subset_pscore(&p, &["t3", "t1", "t2"]).unwrap();
        assert_eq!(full.values(), all.values());

        let s = subset_pscore(&p, &["t1", "t3"]).unwrap();
        assert_close(s.values(), &[0.02275, 0.97725], 1e-4);
        assert_eq!(s.treatments().labels(), &["t1", "t3"]);

        assert!(matches!(subset_pscore(&p, &["t1"]), Err(Error::SubsetTooSmall(1))));
        assert!(matches!(subset_pscore(&p, &["t1", "zz"]), Err(Error::UnknownTreatment(_))));

        let t = TreatmentSet::new(["a", "b", "c", "d"], Direction::LargerIsBetter).unwrap();
        let flat = PairwiseEffects::new(vec![vec![0.0; 4]; 4], vec![vec![0.7; 4]; 4], t).unwrap();
        assert_eq!(subset_pscore(&flat, &["b", "d", "a"]).unwrap().values(), &[0.5; 3]);
    }

    #[test]
    fn pairwise_validation() {
        let t = TreatmentSet::new(["a", "b"], Direction::LargerIsBetter).unwrap();
        assert!(matches!(
            PairwiseEffects::new(vec![vec![0.0, 1.0], vec![1.0, 0.0]], vec![vec![0.0, 1.0], vec![1.0, 0.0]], t.clone()),
            Err(Error::NotAntisymmetric { .. })
        ));
        assert!(matches!(
            PairwiseEffects::new(vec![vec![0.0, 1.0], vec![-1.0, 0.0]], vec![vec![0.0, 0.0], vec![0.0, 0.0]], t.clone()),
            Err(Error::NonPositiveStandardError { .. })
        ));
        assert!(matches!(
            PairwiseEffects::new(vec![vec![0.0, 1.0], vec![-1.0, 0.0]], vec![vec![0.0, 1.0], vec![2.0, 0.0]], t),
            Err(Error::AsymmetricStandardError { .. })
        ));
    }

    #[test]
    fn works_in_single_precision() {
        let t = TreatmentSet::new(["A", "B", "C"], Direction::LargerIsBetter).unwrap();
        let m = RankProbabilityMatrix::<f32>::new(
            vec![vec![0.5, 0.5, 0.0], vec![0.5, 0.5, 0.0], vec![0.0, 0.0, 1.0]],
            t,
        )
        .unwrap();
        assert_eq!(sucra_from_rank_probs(&m).unwrap().values(), &[0.75f32, 0.75, 0.0]);
    }
}
