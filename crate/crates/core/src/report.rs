//! The hierarchy report: every metric for one network plus provenance.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::poth::{
    cumulative_poth, poth_residuals, ScoreSource, SubsetKind, SubsetSpec,
};
use crate::ranking::{ScoreKind, ScoreVector, COLUMN_SUM_TOLERANCE};
use crate::resampling::{rank_tally, DrawSource};
use crate::scalar::Scalar;
use crate::treatments::Direction;

/// How the scores behind a report were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Pscore,
    Draws,
    RankMatrix,
    Scores,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportMetadata {
    pub method: Method,
    pub n_draws: Option<u64>,
    pub seed: Option<u64>,
    pub direction: Direction,
    pub tie_count: u64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetResult {
    pub ids: Vec<String>,
    pub kind: String,
    /// Treatment left out or `k`, depending on `kind`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
    pub poth: f64,
    pub scores: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HierarchyReport {
    pub poth: f64,
    /// Treatment labels in network order.
    pub treatments: Vec<String>,
    pub kind: ScoreKind,
    pub scores: BTreeMap<String, f64>,
    /// Leave-one-out residuals; absent for n = 2 or non-joint sources.
    pub residuals: Option<BTreeMap<String, f64>>,
    /// `cumulative[k - 2]` is the POTH of the best k treatments.
    pub cumulative: Option<Vec<f64>>,
    pub subsets: Vec<SubsetResult>,
    pub metadata: ReportMetadata,
}

/// What to compute beyond the global POTH.
#[derive(Debug, Clone, Default)]
pub struct ReportOptions {
    pub residuals: bool,
    pub cumulative: bool,
    pub subsets: Vec<SubsetSpec>,
    /// Warnings carried over from ingestion.
    pub warnings: Vec<String>,
}

impl ReportOptions {
    /// Residuals and cumulative series whenever the source allows them.
    pub fn full() -> Self {
        Self {
            residuals: true,
            cumulative: true,
            ..Self::default()
        }
    }
}

fn score_map<T: Scalar>(s: &ScoreVector<T>) -> BTreeMap<String, f64> {
    s.treatments()
        .labels()
        .iter()
        .cloned()
        .zip(s.values().iter().map(|v| v.to_f64_lossy()))
        .collect()
}

impl HierarchyReport {
    /// Computes the report for `source`. Residuals and the cumulative series
    /// are skipped (and noted in the warnings) when the source cannot be
    /// re-ranked over subsets; explicit subsets on such sources are errors.
    pub fn build<T: Scalar>(source: ScoreSource<'_, T>, options: &ReportOptions) -> Result<Self> {
        let treatments = source.treatments();
        let n = treatments.len();
        let mut warnings = options.warnings.clone();
        let mut tie_count = 0u64;

        let (method, n_draws, seed) = match source {
            ScoreSource::Pairwise(_) => (Method::Pscore, None, None),
            ScoreSource::Draws(d) => {
                let all: Vec<usize> = (0..n).collect();
                let tally = rank_tally(d, &all)?;
                tie_count = tally.tied_draws as u64;
                if tie_count > 0 {
                    warnings.push(format!(
                        "{tie_count} draw(s) contained tied values; ties broken by treatment order"
                    ));
                }
                let seed = match d.source() {
                    DrawSource::Sampled => d.seed(),
                    DrawSource::Supplied => None,
                };
                (Method::Draws, Some(d.n_draws() as u64), seed)
            }
            ScoreSource::RankProbs(m) => {
                if let Some((col, sum)) =
                    m.column_sum_violation(T::tolerance(COLUMN_SUM_TOLERANCE))
                {
                    warnings.push(format!(
                        "rank probability column {} sums to {}; matrix is not doubly stochastic",
                        col + 1,
                        sum
                    ));
                }
                (Method::RankMatrix, None, None)
            }
            ScoreSource::Scores(s) => {
                let mean = s.mean().to_f64_lossy();
                if (mean - 0.5).abs() > 1e-8 {
                    warnings.push(format!("supplied scores have mean {mean}, not 0.5"));
                }
                (Method::Scores, None, None)
            }
        };

        let (scores, poth) = source.global_scored()?;
        let poth = poth.to_f64_lossy();

        let residuals = if options.residuals && source.supports_subsets() && n >= 3 {
            let r = poth_residuals(source)?;
            Some(
                treatments
                    .labels()
                    .iter()
                    .cloned()
                    .zip(r.into_iter().map(|v| v.to_f64_lossy()))
                    .collect(),
            )
        } else {
            if options.residuals {
                if !source.supports_subsets() {
                    warnings.push(format!(
                        "residuals unavailable for {} input",
                        source.kind_name()
                    ));
                } else {
                    warnings.push("residuals undefined for two treatments".to_owned());
                }
            }
            None
        };

        let cumulative = if options.cumulative && source.supports_subsets() {
            let c = cumulative_poth(source)?;
            for k in &c.boundary_ties {
                warnings.push(format!(
                    "best-{k} set decided by tie-break on equal scores"
                ));
            }
            Some(c.values.iter().map(|v| v.to_f64_lossy()).collect())
        } else {
            if options.cumulative {
                warnings.push(format!(
                    "cumulative POTH unavailable for {} input",
                    source.kind_name()
                ));
            }
            None
        };

        let subsets = options
            .subsets
            .par_iter()
            .map(|spec| {
                let (s, poth) = source.subset_scored(&spec.ids)?;
                Ok(SubsetResult {
                    ids: s.treatments().labels().to_vec(),
                    kind: spec.kind.as_str().to_owned(),
                    detail: match &spec.kind {
                        SubsetKind::Explicit => None,
                        SubsetKind::LeaveOneOut(j) => Some(j.clone()),
                        SubsetKind::BestK(k) => Some(k.to_string()),
                    },
                    poth: poth.to_f64_lossy(),
                    scores: score_map(&s),
                })
            })
            .collect::<Result<Vec<_>>>()?;

        Ok(Self {
            poth,
            treatments: treatments.labels().to_vec(),
            kind: scores.kind(),
            scores: score_map(&scores),
            residuals,
            cumulative,
            subsets,
            metadata: ReportMetadata {
                method,
                n_draws,
                seed,
                direction: treatments.direction(),
                tie_count,
                warnings,
            },
        })
    }

    /// Residuals in network order, if present.
    pub fn residual_series(&self) -> Option<Vec<(String, f64)>> {
        let r = self.residuals.as_ref()?;
        Some(
            self.treatments
                .iter()
                .filter_map(|t| r.get(t).map(|v| (t.clone(), *v)))
                .collect(),
        )
    }

    /// Scores in network order.
    pub fn score_series(&self) -> Vec<(String, f64)> {
        self.treatments
            .iter()
            .filter_map(|t| self.scores.get(t).map(|v| (t.clone(), *v)))
            .collect()
    }
}
