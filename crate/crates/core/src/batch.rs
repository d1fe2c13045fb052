//! Corpus harness: POTH for every network in a directory, plus the
//! associations between POTH and network characteristics.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::io::{parse_input, NetworkInputDocument, ParseOptions, Payload};
use crate::poth::ScoreSource;
use crate::ranking::PairwiseEffects;
use crate::resampling::{sample_mvn, DEFAULT_N_DRAWS};
use crate::scalar::Scalar;
use crate::treatments::Direction;

/// Two-sided 5% critical value of the standard normal, Φ⁻¹(0.975).
pub const Z_CRIT_95: f64 = 1.959964;

pub const SUMMARY_CSV_HEADER: [&str; 6] = [
    "network_id",
    "n_treatments",
    "poth",
    "effect_measure",
    "tau",
    "prop_significant",
];

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

/// Pearson product-moment correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::UndefinedCorrelation("fewer than two observations"));
    }
    let (mx, my) = (mean(x), mean(y));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::UndefinedCorrelation("zero variance"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut ranks = vec![0.0; x.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && x[order[j + 1]] == x[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation (Pearson on average ranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Fraction of unordered pairs whose two-sided z-test p-value is below
/// `alpha`.
pub fn prop_significant<T: Scalar>(p: &PairwiseEffects<T>, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parse(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    let n = p.n();
    let mut significant = 0usize;
    let mut pairs = 0usize;
    for i in 0..n {
        for j in (i + 1)..n {
            let se = p.se(i, j).to_f64_lossy();
            if se <= 0.0 {
                return Err(Error::NonPositiveStandardError {
                    a: p.treatments().label(i).to_owned(),
                    b: p.treatments().label(j).to_owned(),
                    value: se,
                });
            }
            let z = p.theta(i, j).to_f64_lossy().abs() / se;
            // 2(1 − Φ(|z|)) written as 2Φ(−|z|) to keep the tail accurate.
            let p_value = 2.0 * (-z).std_normal_cdf();
            if p_value < alpha {
                significant += 1;
            }
            pairs += 1;
        }
    }
    Ok(significant as f64 / pairs as f64)
}

/// Quantile with linear interpolation between order statistics
/// (Hyndman–Fan type 7). `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Stable 64-bit FNV-1a hash of a network id.
pub fn stable_hash(id: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    h
}

pub fn network_seed(seed: u64, network_id: &str) -> u64 {
    seed.wrapping_add(stable_hash(network_id))
}

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub alpha: f64,
    pub direction: Direction,
    pub seed: u64,
    pub n_draws: usize,
    /// Score reference-effects inputs by sampling draws instead of P-scores.
    pub sample_reference: bool,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            alpha: 0.05,
            direction: Direction::LargerIsBetter,
            seed: 1,
            n_draws: DEFAULT_N_DRAWS,
            sample_reference: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummaryRow {
    pub network_id: String,
    pub n_treatments: usize,
    pub poth: f64,
    pub effect_measure: Option<String>,
    pub tau_estimate: Option<f64>,
    /// Only defined for inputs carrying effects and standard errors.
    pub prop_significant: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SkippedFile {
    pub file: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchSummary {
    pub n_networks: usize,
    pub median_poth: f64,
    pub q1_poth: f64,
    pub q3_poth: f64,
    /// Spearman correlation between number of treatments and POTH.
    pub spearman_size_poth: Option<f64>,
    /// Pearson correlation between POTH and τ over networks reporting τ.
    pub pearson_poth_tau: Option<f64>,
    /// The same, per effect measure.
    pub pearson_poth_tau_by_measure: BTreeMap<String, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchResult {
    pub rows: Vec<BatchSummaryRow>,
    pub skipped: Vec<SkippedFile>,
    pub summary: BatchSummary,
}

/// Scores one parsed network.
pub fn analyze_network(
    doc: &NetworkInputDocument,
    network_id: &str,
    options: &BatchOptions,
) -> Result<BatchSummaryRow> {
    let pairwise = doc.pairwise()?;
    let poth = match (&doc.payload, &pairwise) {
        (Payload::ReferenceEffects(r), _) if options.sample_reference => {
            let draws = sample_mvn(r, options.n_draws, network_seed(options.seed, network_id))?;
            ScoreSource::Draws(&draws).poth()?
        }
        (_, Some(p)) => ScoreSource::Pairwise(p).poth()?,
        _ => doc.direct_source().expect("non-reference payload").poth()?,
    };
    let prop = pairwise
        .as_ref()
        .map(|p| prop_significant(p, options.alpha))
        .transpose()?;
    Ok(BatchSummaryRow {
        network_id: network_id.to_owned(),
        n_treatments: doc.treatments().len(),
        poth,
        effect_measure: doc.metadata.effect_measure.clone(),
        tau_estimate: doc.metadata.tau_estimate,
        prop_significant: prop,
        warnings: doc.warnings.clone(),
    })
}

fn corpus_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("json" | "csv")
                )
                && !p
                    .file_name()
                    .and_then(|n| n.to_str())
                    .is_some_and(|n| n.ends_with(".covariance.csv"))
        })
        .collect();
    files.sort();
    Ok(files)
}

/// Runs every network in `dir`. A reference-effects CSV `x.csv` picks up a
/// companion `x.covariance.csv` when present. Unparseable files are skipped
/// and listed; rows are ordered by network id.
pub fn run_batch(dir: &Path, options: &BatchOptions) -> Result<BatchResult> {
    let files = corpus_files(dir)?;
    let outcomes: Vec<(String, Result<(String, BatchSummaryRow)>)> = files
        .par_iter()
        .map(|path| {
            let name = path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            (name, process_file(path, options))
        })
        .collect();

    let mut skipped = Vec::new();
    let mut by_id: BTreeMap<String, BatchSummaryRow> = BTreeMap::new();
    for (file, outcome) in outcomes {
        match outcome {
            Ok((id, row)) => {
                if let std::collections::btree_map::Entry::Vacant(slot) = by_id.entry(id.clone()) {
                    slot.insert(row);
                } else {
                    skipped.push(SkippedFile {
                        file,
                        reason: format!("duplicate network id `{id}`"),
                    });
                }
            }
            Err(e) => skipped.push(SkippedFile {
                file,
                reason: e.to_string(),
            }),
        }
    }
    let rows: Vec<BatchSummaryRow> = by_id.into_values().collect();
    if rows.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let summary = summarize(&rows);
    Ok(BatchResult {
        rows,
        skipped,
        summary,
    })
}

fn process_file(path: &Path, options: &BatchOptions) -> Result<(String, BatchSummaryRow)> {
    let bytes = fs::read(path)?;
    let covariance_path = path.with_extension("covariance.csv");
    let covariance = if path.extension().is_some_and(|e| e == "csv") && covariance_path.is_file() {
        Some(fs::read(&covariance_path)?)
    } else {
        None
    };
    let is_json = crate::io::sniff_syntax(&bytes) == crate::io::Syntax::Json;
    let parse_options = ParseOptions {
        direction: if is_json { None } else { Some(options.direction) },
        covariance_csv: covariance.as_deref(),
    };
    let doc = parse_input(&bytes, None, &parse_options)?;
    let id = doc.metadata.network_id.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    });
    let row = analyze_network(&doc, &id, options)?;
    Ok((id, row))
}

pub fn summarize(rows: &[BatchSummaryRow]) -> BatchSummary {
    let mut poths: Vec<f64> = rows.iter().map(|r| r.poth).collect();
    poths.sort_by(f64::total_cmp);
    let sizes: Vec<f64> = rows.iter().map(|r| r.n_treatments as f64).collect();
    let unsorted: Vec<f64> = rows.iter().map(|r| r.poth).collect();

    let with_tau: Vec<&BatchSummaryRow> = rows.iter().filter(|r| r.tau_estimate.is_some()).collect();
    let tau_corr = |subset: &[&BatchSummaryRow]| {
        let p: Vec<f64> = subset.iter().map(|r| r.poth).collect();
        let t: Vec<f64> = subset.iter().map(|r| r.tau_estimate.unwrap_or_default()).collect();
        pearson(&p, &t).ok()
    };
    let mut groups: BTreeMap<String, Vec<&BatchSummaryRow>> = BTreeMap::new();
    for r in &with_tau {
        let key = r.effect_measure.clone().unwrap_or_else(|| "unspecified".to_owned());
        groups.entry(key).or_default().push(r);
    }

    BatchSummary {
        n_networks: rows.len(),
        median_poth: quantile(&poths, 0.5),
        q1_poth: quantile(&poths, 0.25),
        q3_poth: quantile(&poths, 0.75),
        spearman_size_poth: spearman(&sizes, &unsorted).ok(),
        pearson_poth_tau: tau_corr(&with_tau),
        pearson_poth_tau_by_measure: groups
            .iter()
            .map(|(k, v)| (k.clone(), tau_corr(v)))
            .collect(),
    }
}

/// Summary CSV with the fixed column order of [`SUMMARY_CSV_HEADER`].
pub fn write_summary_csv(rows: &[BatchSummaryRow]) -> Result<Vec<u8>> {
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(SUMMARY_CSV_HEADER).map_err(io)?;
    let opt = |v: Option<f64>| v.map(|x| format!("{x:?}")).unwrap_or_default();
    for r in rows {
        w.write_record([
            r.network_id.clone(),
            r.n_treatments.to_string(),
            format!("{:?}", r.poth),
            r.effect_measure.clone().unwrap_or_default(),
            opt(r.tau_estimate),
            opt(r.prop_significant),
        ])
        .map_err(io)?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
}
