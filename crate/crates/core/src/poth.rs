//! The POTH family: score variance and its maximum, global POTH by three
//! equivalent routes, subset POTH, leave-one-out residuals and cumulative
//! POTH over the best-k treatments.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::ranking::{
    check_expected_ranks, expected_rank, pscores_over, sucra_from_rank_probs, PairwiseEffects,
    RankProbabilityMatrix, ScoreKind, ScoreVector, COLUMN_SUM_TOLERANCE,
};
use crate::resampling::{rank_tally, DrawsMatrix};
use crate::scalar::Scalar;
use crate::treatments::TreatmentSet;

/// Rounding slack tolerated at either end of [0, 1] before a POTH value is
/// treated as an error.
pub const POTH_CLAMP_SLACK: f64 = 1e-12;

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::TooFewTreatments { min: 2, got: n });
    }
    Ok(())
}

/// S²(n): mean squared deviation of the scores from 0.5.
pub fn score_variance<T: Scalar>(s: &ScoreVector<T>) -> Result<T> {
    check_n(s.len())?;
    let half = T::lit(0.5);
    let ss: T = s.values().iter().map(|&v| (v - half) * (v - half)).sum();
    Ok(ss / T::from_count(s.len()))
}

/// S²(n) computed from expected ranks instead of scores.
pub fn variance_from_expected_ranks<T: Scalar>(
    expected_ranks: &[T],
    treatments: &TreatmentSet,
) -> Result<T> {
    let n = treatments.len();
    check_n(n)?;
    if expected_ranks.len() != n {
        return Err(Error::Dimension {
            what: "expected ranks",
            expected: n,
            got: expected_ranks.len(),
        });
    }
    check_expected_ranks(expected_ranks, treatments)?;
    let centre = T::from_count(n + 1) / T::lit(2.0);
    let ss: T = expected_ranks
        .iter()
        .map(|&e| (e - centre) * (e - centre))
        .sum();
    let nm1 = T::from_count(n - 1);
    Ok(ss / (T::from_count(n) * nm1 * nm1))
}

/// Largest attainable S²(n), reached by a fully certain hierarchy:
/// `(n + 1) / (12 (n − 1))`.
pub fn max_variance<T: Scalar>(n: usize) -> Result<T> {
    check_n(n)?;
    Ok(T::from_count(n + 1) / (T::lit(12.0) * T::from_count(n - 1)))
}

/// Applies the clamping rule: values within [`POTH_CLAMP_SLACK`] outside
/// [0, 1] snap to the bound, anything further out is an error.
fn clamp_poth<T: Scalar>(value: T) -> Result<T> {
    let slack = T::tolerance(POTH_CLAMP_SLACK);
    if !value.is_finite() || value < -slack || value > T::one() + slack {
        return Err(Error::PothOutOfRange(value.to_f64_lossy()));
    }
    Ok(value.max(T::zero()).min(T::one()))
}

fn poth_from_variance<T: Scalar>(variance: T, n: usize) -> Result<T> {
    let max = max_variance::<T>(n)?;
    let poth = variance / max;
    if poth > T::one() + T::tolerance(POTH_CLAMP_SLACK) {
        return Err(Error::InconsistentScores {
            variance: variance.to_f64_lossy(),
            max: max.to_f64_lossy(),
            n,
        });
    }
    clamp_poth(poth)
}

/// POTH = S²(n) / S²max(n) = 12 (n − 1) / (n + 1) · S²(n).
pub fn poth_from_scores<T: Scalar>(s: &ScoreVector<T>) -> Result<T> {
    poth_from_variance(score_variance(s)?, s.len())
}

/// POTH through the expected-rank variance.
pub fn poth_from_expected_ranks<T: Scalar>(
    expected_ranks: &[T],
    treatments: &TreatmentSet,
) -> Result<T> {
    poth_from_variance(
        variance_from_expected_ranks(expected_ranks, treatments)?,
        treatments.len(),
    )
}

/// V(n): the average over treatments of the variance of each treatment's
/// rank distribution.
pub fn avg_rank_variance<T: Scalar>(m: &RankProbabilityMatrix<T>) -> Result<T> {
    let eranks = expected_rank(m)?;
    let n = m.n();
    let total: T = (0..n)
        .map(|i| {
            m.row(i)
                .iter()
                .enumerate()
                .map(|(k, &p)| {
                    let d = T::from_count(k + 1) - eranks[i];
                    d * d * p
                })
                .sum::<T>()
        })
        .sum();
    Ok(total / T::from_count(n))
}

/// POTH = 1 − 12 V(n) / ((n + 1)(n − 1)). Only valid for doubly stochastic
/// matrices, which are required here.
pub fn poth_from_rank_probs<T: Scalar>(m: &RankProbabilityMatrix<T>) -> Result<T> {
    if let Some((col, sum)) = m.column_sum_violation(T::tolerance(COLUMN_SUM_TOLERANCE)) {
        return Err(Error::NotDoublyStochastic {
            col,
            sum: sum.to_f64_lossy(),
        });
    }
    let n = m.n();
    let v = avg_rank_variance(m)?;
    let denom = T::from_count(n + 1) * T::from_count(n - 1);
    clamp_poth(T::one() - T::lit(12.0) * v / denom)
}

/// How a subset was chosen.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SubsetKind {
    Explicit,
    LeaveOneOut(String),
    BestK(usize),
}

impl SubsetKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SubsetKind::Explicit => "explicit",
            SubsetKind::LeaveOneOut(_) => "leave-one-out",
            SubsetKind::BestK(_) => "best-k",
        }
    }
}

/// A subset of competing treatments.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubsetSpec {
    pub ids: Vec<String>,
    pub kind: SubsetKind,
}

impl SubsetSpec {
    pub fn explicit<I, S>(ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            ids: ids.into_iter().map(Into::into).collect(),
            kind: SubsetKind::Explicit,
        }
    }

    /// Every treatment except `left_out`.
    pub fn leave_one_out(treatments: &TreatmentSet, left_out: usize) -> Self {
        Self {
            ids: treatments
                .labels()
                .iter()
                .enumerate()
                .filter(|&(i, _)| i != left_out)
                .map(|(_, l)| l.clone())
                .collect(),
            kind: SubsetKind::LeaveOneOut(treatments.label(left_out).to_owned()),
        }
    }
}

/// Input from which ranking scores can be computed. Only the joint sources
/// ([`ScoreSource::Pairwise`], [`ScoreSource::Draws`]) can be re-scored over
/// subsets.
#[derive(Debug, Clone, Copy)]
pub enum ScoreSource<'a, T> {
    Pairwise(&'a PairwiseEffects<T>),
    Draws(&'a DrawsMatrix<T>),
    RankProbs(&'a RankProbabilityMatrix<T>),
    Scores(&'a ScoreVector<T>),
}

impl<'a, T: Scalar> ScoreSource<'a, T> {
    pub fn treatments(&self) -> &'a TreatmentSet {
        match *self {
            ScoreSource::Pairwise(p) => p.treatments(),
            ScoreSource::Draws(d) => d.treatments(),
            ScoreSource::RankProbs(m) => m.treatments(),
            ScoreSource::Scores(s) => s.treatments(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            ScoreSource::Pairwise(_) => "pairwise",
            ScoreSource::Draws(_) => "draws",
            ScoreSource::RankProbs(_) => "rank-probability",
            ScoreSource::Scores(_) => "scores-only",
        }
    }

    pub fn supports_subsets(&self) -> bool {
        matches!(self, ScoreSource::Pairwise(_) | ScoreSource::Draws(_))
    }

    fn require_joint(&self, operation: &'static str) -> Result<()> {
        if self.supports_subsets() {
            Ok(())
        } else {
            Err(Error::UnsupportedSource {
                operation,
                source_kind: self.kind_name(),
            })
        }
    }

    pub fn global_scores(&self) -> Result<ScoreVector<T>> {
        Ok(self.global_scored()?.0)
    }

    /// Scores with the competing set narrowed to `indices` (sorted).
    fn scores_over(&self, indices: &[usize]) -> Result<ScoreVector<T>> {
        Ok(self.scored_over(indices)?.0)
    }

    /// Scores and POTH over `indices` (sorted). Draws are reduced to a rank
    /// matrix and POTH taken from its average rank variance, which is exact
    /// for a certain hierarchy; the score route can miss 1 by an ulp.
    fn scored_over(&self, indices: &[usize]) -> Result<(ScoreVector<T>, T)> {
        let treatments = self.treatments().restrict(indices)?;
        match *self {
            ScoreSource::Pairwise(p) => {
                let s = ScoreVector::new(pscores_over(p, indices), ScoreKind::Pscore, treatments)?;
                let poth = poth_from_scores(&s)?;
                Ok((s, poth))
            }
            ScoreSource::Draws(d) => {
                let m = rank_tally(d, indices)?.to_probabilities(treatments)?;
                Ok((sucra_from_rank_probs(&m)?, poth_from_rank_probs(&m)?))
            }
            _ => Err(Error::UnsupportedSource {
                operation: "subset scoring",
                source_kind: self.kind_name(),
            }),
        }
    }

    /// Global scores together with their POTH. Every POTH this module
    /// reports for a source goes through here or [`Self::subset_scored`],
    /// so the full subset, the last cumulative value and the global value
    /// agree bit-for-bit.
    pub fn global_scored(&self) -> Result<(ScoreVector<T>, T)> {
        match *self {
            ScoreSource::RankProbs(m) => {
                let s = sucra_from_rank_probs(m)?;
                let poth = if m.is_doubly_stochastic() {
                    poth_from_rank_probs(m)?
                } else {
                    poth_from_scores(&s)?
                };
                Ok((s, poth))
            }
            ScoreSource::Scores(s) => Ok((s.clone(), poth_from_scores(s)?)),
            _ => {
                let all: Vec<usize> = (0..self.treatments().len()).collect();
                self.scored_over(&all)
            }
        }
    }

    /// POTH of the whole network.
    pub fn poth(&self) -> Result<T> {
        Ok(self.global_scored()?.1)
    }

    pub fn subset_scored<S: AsRef<str>>(&self, ids: &[S]) -> Result<(ScoreVector<T>, T)> {
        self.require_joint("subset scoring")?;
        let indices = self.treatments().resolve_subset(ids)?;
        self.scored_over(&indices)
    }

    pub fn subset_scores<S: AsRef<str>>(&self, ids: &[S]) -> Result<ScoreVector<T>> {
        self.require_joint("subset scoring")?;
        let indices = self.treatments().resolve_subset(ids)?;
        self.scores_over(&indices)
    }
}

/// POTH of the hierarchy restricted to `subset`.
pub fn subset_poth<T: Scalar>(source: ScoreSource<'_, T>, subset: &SubsetSpec) -> Result<T> {
    source.require_joint("subset POTH")?;
    Ok(source.subset_scored(&subset.ids)?.1)
}

fn subset_poth_indices<T: Scalar>(source: ScoreSource<'_, T>, indices: &[usize]) -> Result<T> {
    Ok(source.scored_over(indices)?.1)
}

/// Leave-one-out residuals `POTH − POTH(without j)`, in network order.
/// Positive values mark treatments that sharpen the hierarchy.
pub fn poth_residuals<T: Scalar>(source: ScoreSource<'_, T>) -> Result<Vec<T>> {
    source.require_joint("POTH residuals")?;
    let n = source.treatments().len();
    if n < 3 {
        return Err(Error::TooFewTreatments { min: 3, got: n });
    }
    let global = source.poth()?;
    (0..n)
        .into_par_iter()
        .map(|j| {
            let rest: Vec<usize> = (0..n).filter(|&i| i != j).collect();
            Ok(global - subset_poth_indices(source, &rest)?)
        })
        .collect()
}

/// Treatment indices sorted best-first; equal scores keep index order.
pub fn best_first_order<T: Scalar>(scores: &ScoreVector<T>) -> Vec<usize> {
    let values = scores.values();
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite scores"));
    order
}

/// Cumulative POTH for the best `k = 2..=n` treatments.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativePoth<T> {
    /// `values[k - 2]` is cPOTH_k.
    pub values: Vec<T>,
    /// Treatment indices, best first, used to grow the sets.
    pub order: Vec<usize>,
    /// Values of `k` whose best-k set was decided by an index tie-break.
    pub boundary_ties: Vec<usize>,
}

impl<T: Scalar> CumulativePoth<T> {
    pub fn get(&self, k: usize) -> Option<T> {
        k.checked_sub(2).and_then(|i| self.values.get(i)).copied()
    }
}

pub fn cumulative_poth<T: Scalar>(source: ScoreSource<'_, T>) -> Result<CumulativePoth<T>> {
    source.require_joint("cumulative POTH")?;
    let scores = source.global_scores()?;
    let n = scores.len();
    let order = best_first_order(&scores);
    let values = scores.values();
    let boundary_ties = (2..n)
        .filter(|&k| values[order[k - 1]] == values[order[k]])
        .collect();
    let cumulative = (2..=n)
        .into_par_iter()
        .map(|k| {
            let mut best: Vec<usize> = order[..k].to_vec();
            best.sort_unstable();
            subset_poth_indices(source, &best)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(CumulativePoth {
        values: cumulative,
        order,
        boundary_ties,
    })
}
