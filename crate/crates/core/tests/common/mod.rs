#![allow(dead_code)]

use poth::{Direction, PairwiseEffects, RankProbabilityMatrix, ReferenceEffects, TreatmentSet};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("T{i:02}")).collect()
}

pub fn treatment_set(n: usize, direction: Direction) -> TreatmentSet {
    TreatmentSet::new(labels(n), direction).unwrap()
}

pub fn random_permutation<R: Rng>(rng: &mut R, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Convex combination of `k` random permutation matrices.
pub fn random_doubly_stochastic<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<Vec<f64>> {
    let raw: Vec<f64> = (0..k).map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let mut m = vec![vec![0.0; n]; n];
    for w in raw {
        let p = random_permutation(rng, n);
        for (i, &rank) in p.iter().enumerate() {
            m[i][rank] += w / total;
            m[i][rank] = m[i][rank].min(1.0);
        }
    }
    m
}

pub fn rank_matrix(rows: Vec<Vec<f64>>) -> RankProbabilityMatrix<f64> {
    let n = rows.len();
    RankProbabilityMatrix::new(rows, treatment_set(n, Direction::LargerIsBetter)).unwrap()
}

/// Effects in (−1, 1) and a well-conditioned covariance `A Aᵀ / m + 0.05 I`.
pub fn random_reference_effects<R: Rng>(rng: &mut R, n: usize) -> ReferenceEffects<f64> {
    let m = n - 1;
    let effects: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let a: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..m).map(|_| rng.gen_range(-0.6..0.6)).collect())
        .collect();
    let cov: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| {
                    let dot: f64 = (0..m).map(|k| a[i][k] * a[j][k]).sum();
                    dot / m as f64 + if i == j { 0.05 } else { 0.0 }
                })
                .collect()
        })
        .collect();
    let t = treatment_set(n, Direction::LargerIsBetter);
    let reference = t.label(0).to_owned();
    ReferenceEffects::new(effects, cov, &reference, t).unwrap()
}

/// Pairwise effects from independent treatment means with a common SE.
pub fn pairwise_from_means(means: &[f64], se: f64, direction: Direction) -> PairwiseEffects<f64> {
    let n = means.len();
    let theta = (0..n)
        .map(|i| (0..n).map(|j| means[i] - means[j]).collect())
        .collect();
    PairwiseEffects::new(theta, vec![vec![se; n]; n], treatment_set(n, direction)).unwrap()
}

/// `rows` draws of independent normals with per-treatment means.
pub fn random_draw_rows<R: Rng>(rng: &mut R, means: &[f64], rows: usize) -> Vec<Vec<f64>> {
    use rand_distr::{Distribution, StandardNormal};
    (0..rows)
        .map(|_| {
            means
                .iter()
                .map(|m| m + <StandardNormal as Distribution<f64>>::sample(&StandardNormal, rng))
                .collect()
        })
        .collect()
}
