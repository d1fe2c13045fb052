//! Monte Carlo machinery: multivariate normal draws of relative effects and
//! their conversion into (subset) rank probabilities.
//!
//! Sampling is split into fixed-size chunks of [`CHUNK_DRAWS`] draws. Chunk
//! `c` draws from a ChaCha8 stream seeded with the user seed and stream id
//! `c`, so the output depends only on `(inputs, seed, n_draws)` and never on
//! how rayon schedules the chunks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{flatten, to_rows};
use crate::ranking::{sucra_from_rank_probs, RankProbabilityMatrix, ReferenceEffects, ScoreVector};
use crate::scalar::Scalar;
use crate::treatments::TreatmentSet;

pub const DEFAULT_N_DRAWS: usize = 10_000;
pub const CHUNK_DRAWS: usize = 1024;

const JITTER_START: f64 = 1e-10;
const JITTER_LIMIT: f64 = 1e-6;

/// Where the rows of a [`DrawsMatrix`] came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrawSource {
    Sampled,
    Supplied,
}

/// N×n matrix of relative effects, one row per draw.
#[derive(Debug, Clone, PartialEq)]
pub struct DrawsMatrix<T> {
    draws: Vec<T>,
    treatments: TreatmentSet,
    seed: Option<u64>,
    source: DrawSource,
}

impl<T: Scalar> DrawsMatrix<T> {
    /// User-supplied draws, e.g. from an MCMC posterior.
    pub fn supplied(rows: Vec<Vec<T>>, treatments: TreatmentSet) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptyDraws);
        }
        let n_rows = rows.len();
        let draws = flatten(rows, n_rows, treatments.len(), "draws")?;
        Ok(Self {
            draws,
            treatments,
            seed: None,
            source: DrawSource::Supplied,
        })
    }

    pub fn n_draws(&self) -> usize {
        self.draws.len() / self.treatments.len()
    }

    pub fn n_treatments(&self) -> usize {
        self.treatments.len()
    }

    pub fn treatments(&self) -> &TreatmentSet {
        &self.treatments
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn source(&self) -> DrawSource {
        self.source
    }

    pub fn draw(&self, index: usize) -> &[T] {
        let n = self.n_treatments();
        &self.draws[index * n..(index + 1) * n]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        to_rows(&self.draws, self.n_treatments())
    }

    /// Same draws read with a different treatment set (for example the
    /// opposite outcome direction). Labels must have the same count.
    pub fn with_treatments(&self, treatments: TreatmentSet) -> Result<Self> {
        if treatments.len() != self.n_treatments() {
            return Err(Error::Dimension {
                what: "draws columns",
                expected: self.n_treatments(),
                got: treatments.len(),
            });
        }
        Ok(Self {
            treatments,
            ..self.clone()
        })
    }
}

/// Lower-triangular factor `L` with `L Lᵀ = a` for a symmetric positive
/// semidefinite `a` (row-major, `m`×`m`). Zero pivots are accepted when the
/// rest of their column vanishes, so rank-deficient covariances factor
/// without jitter.
fn cholesky_semidefinite<T: Scalar>(a: &[T], m: usize) -> Option<Vec<T>> {
    let scale = (0..m).map(|i| a[i * m + i]).fold(T::zero(), T::max);
    let tol = scale * T::epsilon() * T::from_count(16 * m.max(1));
    let off_tol = (tol * scale).sqrt();
    let mut l = vec![T::zero(); m * m];
    for j in 0..m {
        let mut d = a[j * m + j];
        for k in 0..j {
            d = d - l[j * m + k] * l[j * m + k];
        }
        if d > tol {
            let pivot = d.sqrt();
            l[j * m + j] = pivot;
            for i in (j + 1)..m {
                let mut s = a[i * m + j];
                for k in 0..j {
                    s = s - l[i * m + k] * l[j * m + k];
                }
                l[i * m + j] = s / pivot;
            }
        } else if d >= -tol {
            for i in (j + 1)..m {
                let mut s = a[i * m + j];
                for k in 0..j {
                    s = s - l[i * m + k] * l[j * m + k];
                }
                if s.abs() > off_tol {
                    return None;
                }
            }
        } else {
            return None;
        }
    }
    Some(l)
}

/// Cholesky with diagonal jitter escalation: `1e-10 × mean(diag)`, growing
/// tenfold up to `1e-6 × mean(diag)`.
pub(crate) fn cholesky_with_jitter<T: Scalar>(a: &[T], m: usize) -> Result<Vec<T>> {
    if let Some(l) = cholesky_semidefinite(a, m) {
        return Ok(l);
    }
    let mean_diag = (0..m).map(|i| a[i * m + i]).sum::<T>() / T::from_count(m.max(1));
    let mut factor = JITTER_START;
    while factor <= JITTER_LIMIT * (1.0 + 1e-9) {
        let jitter = mean_diag * T::lit(factor);
        let mut shifted = a.to_vec();
        for i in 0..m {
            shifted[i * m + i] = shifted[i * m + i] + jitter;
        }
        if let Some(l) = cholesky_semidefinite(&shifted, m) {
            return Ok(l);
        }
        factor *= 10.0;
    }
    Err(Error::NotPositiveSemidefinite {
        max_jitter: JITTER_LIMIT * mean_diag.to_f64_lossy(),
    })
}

fn chunk_rng(seed: u64, chunk: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk as u64);
    rng
}

/// Draws `n_draws` vectors from N(effects, covariance); the reference
/// treatment's column is identically zero.
pub fn sample_mvn<T: Scalar>(
    r: &ReferenceEffects<T>,
    n_draws: usize,
    seed: u64,
) -> Result<DrawsMatrix<T>> {
    if n_draws == 0 {
        return Err(Error::EmptyDraws);
    }
    let n = r.treatments().len();
    let m = n - 1;
    let chol = cholesky_with_jitter(r.covariance_flat(), m)?;
    let mean = r.effects();
    let slots = r.non_reference_indices();

    let mut draws = vec![T::zero(); n_draws * n];
    draws
        .par_chunks_mut(CHUNK_DRAWS * n)
        .enumerate()
        .for_each(|(chunk, out)| {
            let mut rng = chunk_rng(seed, chunk);
            let mut z = vec![T::zero(); m];
            for row in out.chunks_mut(n) {
                for zi in z.iter_mut() {
                    *zi = T::sample_standard_normal(&mut rng);
                }
                for (a, &slot) in slots.iter().enumerate() {
                    let mut x = mean[a];
                    for (b, &zb) in z.iter().enumerate().take(a + 1) {
                        x = x + chol[a * m + b] * zb;
                    }
                    row[slot] = x;
                }
            }
        });

    Ok(DrawsMatrix {
        draws,
        treatments: r.treatments().clone(),
        seed: Some(seed),
        source: DrawSource::Sampled,
    })
}

/// Integer rank counts over a set of columns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankTally {
    /// `counts[i * m + k]`: draws in which the i-th listed treatment took
    /// rank `k + 1`.
    pub counts: Vec<u64>,
    pub m: usize,
    pub n_draws: usize,
    /// Draws containing at least one exact tie among the ranked columns.
    pub tied_draws: usize,
}

/// Ranks each draw over `indices` (sorted treatment indices). Rank 1 goes
/// to the best oriented value; exact ties go to the lower treatment index.
pub fn rank_tally<T: Scalar>(d: &DrawsMatrix<T>, indices: &[usize]) -> Result<RankTally> {
    let n_draws = d.n_draws();
    if n_draws == 0 {
        return Err(Error::EmptyDraws);
    }
    let m = indices.len();
    let n = d.n_treatments();
    let direction = d.treatments().direction();

    let (counts, tied_draws) = d
        .draws
        .par_chunks(CHUNK_DRAWS * n)
        .map(|block| {
            let mut counts = vec![0u64; m * m];
            let mut tied = 0usize;
            let mut order: Vec<(T, usize)> = Vec::with_capacity(m);
            for row in block.chunks(n) {
                order.clear();
                order.extend(
                    indices
                        .iter()
                        .enumerate()
                        .map(|(pos, &col)| (direction.orient(row[col]), pos)),
                );
                // Stable: equal values keep ascending treatment order.
                order.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite draws"));
                if order.windows(2).any(|w| w[0].0 == w[1].0) {
                    tied += 1;
                }
                for (rank, &(_, pos)) in order.iter().enumerate() {
                    counts[pos * m + rank] += 1;
                }
            }
            (counts, tied)
        })
        .reduce(
            || (vec![0u64; m * m], 0),
            |(mut a, ta), (b, tb)| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                (a, ta + tb)
            },
        );

    Ok(RankTally {
        counts,
        m,
        n_draws,
        tied_draws,
    })
}

impl RankTally {
    pub fn to_probabilities<T: Scalar>(
        &self,
        treatments: TreatmentSet,
    ) -> Result<RankProbabilityMatrix<T>> {
        let total = T::from_count(self.n_draws);
        let probs = self
            .counts
            .iter()
            .map(|&c| T::from_u64(c).expect("count fits") / total)
            .collect();
        RankProbabilityMatrix::from_flat(probs, treatments)
    }
}

/// `p_ik` = fraction of draws in which treatment `i` takes rank `k`.
pub fn rank_probs_from_draws<T: Scalar>(d: &DrawsMatrix<T>) -> Result<RankProbabilityMatrix<T>> {
    let all: Vec<usize> = (0..d.n_treatments()).collect();
    rank_tally(d, &all)?.to_probabilities(d.treatments().clone())
}

/// Rank probabilities with each draw re-ranked over `subset` only. The
/// result is in network order regardless of the order of `subset`.
pub fn subset_rank_probs_from_draws<T: Scalar, S: AsRef<str>>(
    d: &DrawsMatrix<T>,
    subset: &[S],
) -> Result<RankProbabilityMatrix<T>> {
    let indices = d.treatments().resolve_subset(subset)?;
    let treatments = d.treatments().restrict(&indices)?;
    rank_tally(d, &indices)?.to_probabilities(treatments)
}

pub fn sucra_from_draws<T: Scalar>(d: &DrawsMatrix<T>) -> Result<ScoreVector<T>> {
    sucra_from_rank_probs(&rank_probs_from_draws(d)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treatments::Direction;

    fn set(labels: &[&str], direction: Direction) -> TreatmentSet {
        TreatmentSet::new(labels.iter().copied(), direction).unwrap()
    }

    #[test]
    fn zero_covariance_reproduces_point_estimates() {
        let t = set(&["ref", "A", "B"], Direction::LargerIsBetter);
        let r = ReferenceEffects::new(vec![0.3, -1.2], vec![vec![0.0; 2]; 2], "ref", t).unwrap();
        let d = sample_mvn(&r, 50, 9).unwrap();
        for i in 0..d.n_draws() {
            assert_eq!(d.draw(i), &[0.0, 0.3, -1.2]);
        }
        assert_eq!(d.seed(), Some(9));
        assert_eq!(d.source(), DrawSource::Sampled);
    }

    #[test]
    fn one_dimensional_moments() {
        let t = set(&["ref", "A"], Direction::LargerIsBetter);
        let r = ReferenceEffects::new(vec![0.0], vec![vec![1.0]], "ref", t).unwrap();
        let d = sample_mvn(&r, 100_000, 20_240_101).unwrap();
        let xs: Vec<f64> = (0..d.n_draws()).map(|i| d.draw(i)[1]).collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0).abs() < 0.03, "var {var}");
    }

    #[test]
    fn correlated_moments() {
        let t = set(&["A", "ref", "B"], Direction::LargerIsBetter);
        let cov = vec![vec![1.0, 0.6], vec![0.6, 2.0]];
        let r = ReferenceEffects::new(vec![1.0, -0.5], cov, "ref", t).unwrap();
        let d = sample_mvn(&r, 100_000, 3).unwrap();
        let n = d.n_draws() as f64;
        let (mut ma, mut mb) = (0.0, 0.0);
        for i in 0..d.n_draws() {
            let row = d.draw(i);
            assert_eq!(row[1], 0.0);
            ma += row[0];
            mb += row[2];
        }
        ma /= n;
        mb /= n;
        let mut cab = 0.0;
        let mut vb = 0.0;
        for i in 0..d.n_draws() {
            let row = d.draw(i);
            cab += (row[0] - ma) * (row[2] - mb);
            vb += (row[2] - mb).powi(2);
        }
        assert!((ma - 1.0).abs() < 0.02 && (mb + 0.5).abs() < 0.03);
        assert!((cab / n - 0.6).abs() < 0.03);
        assert!((vb / n - 2.0).abs() < 0.05);
    }

    #[test]
    fn sampling_is_deterministic() {
        let t = set(&["ref", "A", "B", "C"], Direction::LargerIsBetter);
        let cov = vec![vec![1.0, 0.2, 0.1], vec![0.2, 0.5, 0.0], vec![0.1, 0.0, 0.8]];
        let r = ReferenceEffects::new(vec![0.1, 0.2, 0.3], cov, "ref", t).unwrap();
        let a = sample_mvn(&r, 5000, 11).unwrap();
        let b = sample_mvn(&r, 5000, 11).unwrap();
        assert_eq!(a, b);
        let c = sample_mvn(&r, 5000, 12).unwrap();
        assert_ne!(a, c);
        // A prefix of draws does not depend on the total requested.
        let short = sample_mvn(&r, 3000, 11).unwrap();
        assert_eq!(short.draw(2999), a.draw(2999));
    }

    #[test]
    fn jitter_rescues_slightly_indefinite_covariance() {
        let eps = 1e-12;
        let a = [1.0, 1.0 + eps, 1.0 + eps, 1.0];
        assert!(cholesky_semidefinite(&a, 2).is_none());
        assert!(cholesky_with_jitter(&a, 2).is_ok());
        let bad = [1.0, 2.0, 2.0, 1.0];
        assert!(matches!(
            cholesky_with_jitter(&bad, 2),
            Err(Error::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn factor_reconstructs_input() {
        let a = [4.0, 2.0, 0.4, 2.0, 2.0, 0.5, 0.4, 0.5, 3.0];
        let l = cholesky_with_jitter(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| l[i * 3 + k] * l[j * 3 + k]).sum();
                assert!((v - a[i * 3 + j]).abs() < 1e-12);
            }
        }
        // rank one
        let a = [1.0, 1.0, 1.0, 1.0];
        assert!(cholesky_semidefinite(&a, 2).is_some());
    }

    #[test]
    fn identical_draws_give_permutation_matrix() {
        let t = set(&["A", "B", "C"], Direction::LargerIsBetter);
        let d = DrawsMatrix::supplied(vec![vec![2.0, 3.0, 1.0]; 7], t).unwrap();
        let m = rank_probs_from_draws(&d).unwrap();
        assert_eq!(m.rows(), vec![vec![0.0, 1.0, 0.0], vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert!(m.is_permutation());
    }

    #[test]
    fn counted_two_treatment_example() {
        let t = set(&["1", "2"], Direction::LargerIsBetter);
        let d = DrawsMatrix::<f64>::supplied(vec![vec![1.0, 0.0], vec![2.0, 0.0], vec![0.0, 1.0]], t).unwrap();
        let m = rank_probs_from_draws(&d).unwrap();
        assert!((m.get(0, 0) - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.get(0, 1) - 1.0 / 3.0).abs() < 1e-15);

        let t = set(&["1", "2"], Direction::LargerIsBetter);
        let d = DrawsMatrix::supplied(vec![vec![1.0, 0.0], vec![0.0, 1.0]], t).unwrap();
        let m = rank_probs_from_draws(&d).unwrap();
        assert_eq!(m.get(0, 0), 0.5);
        assert_eq!(m.get(1, 0), 0.5);
    }

    #[test]
    fn subset_examples() {
        let t = set(&["A", "B", "C"], Direction::SmallerIsBetter);
        let d = DrawsMatrix::supplied(vec![vec![0.0, 1.0, 2.0], vec![-1.0, 0.5, 5.0]], t).unwrap();
        let full = rank_probs_from_draws(&d).unwrap();
        assert_eq!(subset_rank_probs_from_draws(&d, &["C", "A", "B"]).unwrap(), full);
        let bc = subset_rank_probs_from_draws(&d, &["B", "C"]).unwrap();
        assert_eq!(bc.rows(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);

        // A and B exchangeable, C always last.
        let t = set(&["A", "B", "C"], Direction::LargerIsBetter);
        let d = DrawsMatrix::supplied(vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 0.0]], t).unwrap();
        let ab = subset_rank_probs_from_draws(&d, &["A", "B"]).unwrap();
        assert_eq!(ab.rows(), vec![vec![0.5, 0.5], vec![0.5, 0.5]]);
    }

    #[test]
    fn ties_break_by_index_and_are_counted() {
        let t = set(&["A", "B", "C"], Direction::LargerIsBetter);
        let d = DrawsMatrix::supplied(vec![vec![1.0, 1.0, 0.0], vec![3.0, 2.0, 1.0]], t).unwrap();
        let tally = rank_tally(&d, &[0, 1, 2]).unwrap();
        assert_eq!(tally.tied_draws, 1);
        let m = rank_probs_from_draws(&d).unwrap();
        assert_eq!(m.get(0, 0), 1.0);
    }

    #[test]
    fn errors() {
        let t = set(&["A", "B"], Direction::LargerIsBetter);
        assert!(matches!(DrawsMatrix::<f64>::supplied(vec![], t.clone()), Err(Error::EmptyDraws)));
        assert!(matches!(
            DrawsMatrix::supplied(vec![vec![1.0, f64::NAN]], t.clone()),
            Err(Error::NonFinite { row: 0, col: 1, .. })
        ));
        let r = ReferenceEffects::new(vec![0.0], vec![vec![1.0]], "A", t).unwrap();
        assert!(matches!(sample_mvn(&r, 0, 1), Err(Error::EmptyDraws)));
    }

    #[test]
    fn sucra_from_draws_composes() {
        let t = set(&["A", "B", "C"], Direction::LargerIsBetter);
        let d = DrawsMatrix::supplied(vec![vec![2.0, 1.0, 0.0], vec![1.0, 2.0, 0.0]], t).unwrap();
        let direct = sucra_from_draws(&d).unwrap();
        let composed = sucra_from_rank_probs(&rank_probs_from_draws(&d).unwrap()).unwrap();
        assert_eq!(direct, composed);
        assert_eq!(direct.values(), &[0.75, 0.75, 0.0]);
    }
}
