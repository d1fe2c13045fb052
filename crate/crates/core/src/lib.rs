//! Certainty of treatment hierarchies from network meta-analysis.
//!
//! The crate computes SUCRAs and P-scores, the Precision of Treatment
//! Hierarchy (POTH) and its subset, leave-one-out residual and cumulative
//! variants, from relative effects, sampled or supplied draws, or rank
//! probability matrices. Numerical code is generic over [`Scalar`]
//! (`f32`/`f64`); the `*64` aliases below fix the common double-precision
//! case.

pub mod batch;
pub mod error;
pub mod io;
mod matrix;
pub mod plot;
pub mod poth;
pub mod ranking;
pub mod report;
pub mod resampling;
pub mod scalar;
pub mod treatments;

pub use error::{Error, ErrorCategory, Result};
pub use poth::{
    avg_rank_variance, cumulative_poth, max_variance, poth_from_expected_ranks,
    poth_from_rank_probs, poth_from_scores, poth_residuals, score_variance, subset_poth,
    variance_from_expected_ranks, CumulativePoth, ScoreSource, SubsetKind, SubsetSpec,
};
pub use ranking::{
    expected_rank, pairwise_from_reference, pscore_from_pairwise, subset_pscore,
    sucra_from_expected_rank, sucra_from_rank_probs, PairwiseEffects, RankProbabilityMatrix,
    ReferenceEffects, ScoreKind, ScoreVector,
};
pub use report::{HierarchyReport, Method, ReportMetadata, ReportOptions, SubsetResult};
pub use resampling::{
    rank_probs_from_draws, sample_mvn, subset_rank_probs_from_draws, sucra_from_draws, DrawSource,
    DrawsMatrix, DEFAULT_N_DRAWS,
};
pub use scalar::Scalar;
pub use treatments::{Direction, TreatmentSet};

pub type RankProbabilityMatrix64 = RankProbabilityMatrix<f64>;
pub type RankProbabilityMatrix32 = RankProbabilityMatrix<f32>;
pub type ScoreVector64 = ScoreVector<f64>;
pub type ScoreVector32 = ScoreVector<f32>;
pub type ReferenceEffects64 = ReferenceEffects<f64>;
pub type ReferenceEffects32 = ReferenceEffects<f32>;
pub type PairwiseEffects64 = PairwiseEffects<f64>;
pub type PairwiseEffects32 = PairwiseEffects<f32>;
pub type DrawsMatrix64 = DrawsMatrix<f64>;
pub type DrawsMatrix32 = DrawsMatrix<f32>;
