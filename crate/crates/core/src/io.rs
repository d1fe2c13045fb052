//! Parsing and serialization of network inputs and hierarchy reports.
//!
//! JSON is the canonical machine format; CSV layouts are the human on-ramp:
//!
//! | format            | header                                   |
//! |-------------------|------------------------------------------|
//! | reference effects | `treatment,effect,se` (reference row has empty effect and se) |
//! | covariance        | `treatment,<label>,...` square, non-reference treatments |
//! | pairwise          | `treatment_i,treatment_j,theta,se`       |
//! | draws             | one column per treatment label           |
//! | rank probabilities| `treatment,rank1,...,rankN`              |
//! | scores            | `treatment,score` (or `sucra` / `pscore`) |
//!
//! Reports are written as canonical JSON: keys sorted, two-space indent,
//! every float printed with 17 significant digits.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};
use crate::poth::ScoreSource;
use crate::ranking::{
    pairwise_from_reference, PairwiseEffects, RankProbabilityMatrix, ReferenceEffects, ScoreKind,
    ScoreVector,
};
use crate::report::HierarchyReport;
use crate::resampling::DrawsMatrix;
use crate::treatments::{Direction, TreatmentSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InputFormat {
    ReferenceEffects,
    Pairwise,
    Draws,
    RankProbs,
    Scores,
}

impl InputFormat {
    pub fn as_str(self) -> &'static str {
        match self {
            InputFormat::ReferenceEffects => "reference-effects",
            InputFormat::Pairwise => "pairwise",
            InputFormat::Draws => "draws",
            InputFormat::RankProbs => "rank-probs",
            InputFormat::Scores => "scores",
        }
    }
}

impl FromStr for InputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "reference" | "reference-effects" => InputFormat::ReferenceEffects,
            "pairwise" => InputFormat::Pairwise,
            "draws" => InputFormat::Draws,
            "rank-probs" => InputFormat::RankProbs,
            "scores" => InputFormat::Scores,
            other => return Err(Error::Parse(format!("unknown input format `{other}`"))),
        })
    }
}

/// Optional per-network descriptors carried through to batch summaries.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkMetadata {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network_id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effect_measure: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau_estimate: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_citation: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    ReferenceEffects(ReferenceEffects<f64>),
    Pairwise(PairwiseEffects<f64>),
    Draws(DrawsMatrix<f64>),
    RankProbs(RankProbabilityMatrix<f64>),
    Scores(ScoreVector<f64>),
}

/// A validated network input: exactly one payload plus metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkInputDocument {
    pub payload: Payload,
    pub metadata: NetworkMetadata,
    /// Non-fatal issues found while parsing, in discovery order.
    pub warnings: Vec<String>,
}

impl NetworkInputDocument {
    pub fn new(payload: Payload) -> Self {
        Self {
            payload,
            metadata: NetworkMetadata::default(),
            warnings: Vec::new(),
        }
    }

    pub fn format(&self) -> InputFormat {
        match self.payload {
            Payload::ReferenceEffects(_) => InputFormat::ReferenceEffects,
            Payload::Pairwise(_) => InputFormat::Pairwise,
            Payload::Draws(_) => InputFormat::Draws,
            Payload::RankProbs(_) => InputFormat::RankProbs,
            Payload::Scores(_) => InputFormat::Scores,
        }
    }

    pub fn treatments(&self) -> &TreatmentSet {
        match &self.payload {
            Payload::ReferenceEffects(r) => r.treatments(),
            Payload::Pairwise(p) => p.treatments(),
            Payload::Draws(d) => d.treatments(),
            Payload::RankProbs(m) => m.treatments(),
            Payload::Scores(s) => s.treatments(),
        }
    }

    /// Pairwise effects, derived from reference effects when necessary.
    pub fn pairwise(&self) -> Result<Option<PairwiseEffects<f64>>> {
        match &self.payload {
            Payload::ReferenceEffects(r) => pairwise_from_reference(r).map(Some),
            Payload::Pairwise(p) => Ok(Some(p.clone())),
            _ => Ok(None),
        }
    }

    /// Score source for every payload except reference effects, which must
    /// first be turned into pairwise effects or draws.
    pub fn direct_source(&self) -> Option<ScoreSource<'_, f64>> {
        match &self.payload {
            Payload::ReferenceEffects(_) => None,
            Payload::Pairwise(p) => Some(ScoreSource::Pairwise(p)),
            Payload::Draws(d) => Some(ScoreSource::Draws(d)),
            Payload::RankProbs(m) => Some(ScoreSource::RankProbs(m)),
            Payload::Scores(s) => Some(ScoreSource::Scores(s)),
        }
    }
}

/// Knobs that CSV inputs cannot carry themselves.
#[derive(Debug, Clone, Copy, Default)]
pub struct ParseOptions<'a> {
    /// Outcome direction. CSV inputs default to larger-is-better; for JSON
    /// it must agree with the document's own `direction` if both are set.
    pub direction: Option<Direction>,
    /// Companion covariance matrix for reference-effects CSV input.
    pub covariance_csv: Option<&'a [u8]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Syntax {
    Csv,
    Json,
}

/// JSON if the first non-blank byte opens an object, CSV otherwise.
pub fn sniff_syntax(bytes: &[u8]) -> Syntax {
    match bytes.iter().find(|b| !b.is_ascii_whitespace()) {
        Some(b'{') => Syntax::Json,
        _ => Syntax::Csv,
    }
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Parses and validates a network input. `declared` may be `None` to let
/// the document (JSON) or its header (CSV) decide.
pub fn parse_input(
    bytes: &[u8],
    declared: Option<InputFormat>,
    options: &ParseOptions<'_>,
) -> Result<NetworkInputDocument> {
    match sniff_syntax(bytes) {
        Syntax::Json => parse_json(bytes, declared, options),
        Syntax::Csv => {
            let detected = detect_csv_format(bytes)?;
            let format = match declared {
                Some(f) if f != detected => {
                    return Err(parse_err(format!(
                        "line 1: header looks like {} input but {} was declared",
                        detected.as_str(),
                        f.as_str()
                    )))
                }
                _ => detected,
            };
            parse_csv(bytes, format, options)
        }
    }
}

// ---------------------------------------------------------------- CSV ----

fn csv_reader(bytes: &[u8]) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line());
    match line {
        Some(line) => parse_err(format!("line {line}: {e}")),
        None => parse_err(format!("csv: {e}")),
    }
}

fn headers(bytes: &[u8]) -> Result<Vec<String>> {
    let mut rdr = csv_reader(bytes);
    let h = rdr.headers().map_err(csv_error)?;
    if h.is_empty() || (h.len() == 1 && h[0].is_empty()) {
        return Err(parse_err("line 1: missing header"));
    }
    Ok(h.iter().map(str::to_owned).collect())
}

/// Guesses the layout of a CSV input from its header row.
pub fn detect_csv_format(bytes: &[u8]) -> Result<InputFormat> {
    let h = headers(bytes)?;
    let h: Vec<&str> = h.iter().map(String::as_str).collect();
    Ok(match h.as_slice() {
        ["treatment", "effect", "se"] => InputFormat::ReferenceEffects,
        ["treatment_i", "treatment_j", "theta", "se"] => InputFormat::Pairwise,
        ["treatment", "score" | "sucra" | "pscore"] => InputFormat::Scores,
        ["treatment", second, ..] if second.starts_with("rank") => InputFormat::RankProbs,
        _ => InputFormat::Draws,
    })
}

struct Cell<'a> {
    line: u64,
    column: &'a str,
}

fn parse_number(raw: &str, at: &Cell<'_>) -> Result<f64> {
    let v: f64 = raw.parse().map_err(|_| {
        parse_err(format!(
            "line {}, column `{}`: `{raw}` is not a number",
            at.line, at.column
        ))
    })?;
    if !v.is_finite() {
        return Err(parse_err(format!(
            "line {}, column `{}`: non-finite value `{raw}`",
            at.line, at.column
        )));
    }
    Ok(v)
}

fn expect_header(bytes: &[u8], expected: &[&str]) -> Result<()> {
    let h = headers(bytes)?;
    if h != expected {
        return Err(parse_err(format!(
            "line 1: expected header `{}`, found `{}`",
            expected.join(","),
            h.join(",")
        )));
    }
    Ok(())
}

fn with_line(line: u64, e: Error) -> Error {
    parse_err(format!("line {line}: {e}"))
}

fn parse_csv(
    bytes: &[u8],
    format: InputFormat,
    options: &ParseOptions<'_>,
) -> Result<NetworkInputDocument> {
    let direction = options.direction.unwrap_or_default();
    let mut warnings = Vec::new();
    let payload = match format {
        InputFormat::ReferenceEffects => {
            Payload::ReferenceEffects(parse_reference_csv(bytes, direction, options.covariance_csv, &mut warnings)?)
        }
        InputFormat::Pairwise => Payload::Pairwise(parse_pairwise_csv(bytes, direction)?),
        InputFormat::Draws => Payload::Draws(parse_draws_csv(bytes, direction)?),
        InputFormat::RankProbs => Payload::RankProbs(parse_rank_csv(bytes, direction)?),
        InputFormat::Scores => Payload::Scores(parse_scores_csv(bytes, direction)?),
    };
    if options.covariance_csv.is_some() && format != InputFormat::ReferenceEffects {
        return Err(parse_err("a covariance file only applies to reference-effects input"));
    }
    Ok(NetworkInputDocument {
        payload,
        metadata: NetworkMetadata::default(),
        warnings,
    })
}

fn parse_reference_csv(
    bytes: &[u8],
    direction: Direction,
    covariance_csv: Option<&[u8]>,
    warnings: &mut Vec<String>,
) -> Result<ReferenceEffects<f64>> {
    expect_header(bytes, &["treatment", "effect", "se"])?;
    let mut labels = Vec::new();
    let mut reference: Option<String> = None;
    let mut effects = Vec::new();
    let mut ses = Vec::new();
    let mut line_of = Vec::new();
    for rec in csv_reader(bytes).records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let label = rec[0].to_owned();
        let (effect, se) = (&rec[1], &rec[2]);
        if effect.is_empty() && se.is_empty() {
            if let Some(prev) = &reference {
                return Err(parse_err(format!(
                    "line {line}: second reference row `{label}` (already have `{prev}`)"
                )));
            }
            reference = Some(label.clone());
        } else {
            effects.push(parse_number(effect, &Cell { line, column: "effect" })?);
            let s = parse_number(se, &Cell { line, column: "se" })?;
            if s < 0.0 {
                return Err(parse_err(format!("line {line}, column `se`: negative standard error {s}")));
            }
            ses.push(s);
            line_of.push(line);
        }
        labels.push(label);
    }
    let reference =
        reference.ok_or_else(|| parse_err("no reference row (a row with empty effect and se)"))?;
    let treatments = TreatmentSet::new(labels, direction)?;
    let m = ses.len();
    let covariance = match covariance_csv {
        Some(cov) => {
            let non_ref: Vec<&str> = treatments
                .labels()
                .iter()
                .filter(|l| **l != reference)
                .map(String::as_str)
                .collect();
            let c = parse_covariance_csv(cov, &non_ref)?;
            for (i, &s) in ses.iter().enumerate() {
                let d = c[i][i];
                if (d - s * s).abs() > 1e-8 * d.abs().max(1.0) {
                    return Err(parse_err(format!(
                        "line {}: se {s} disagrees with covariance diagonal {d} for `{}`",
                        line_of[i], non_ref[i]
                    )));
                }
            }
            c
        }
        None => {
            if m >= 2 {
                warnings.push(
                    "covariance off-diagonals not supplied; assumed to be 0".to_owned(),
                );
            }
            (0..m)
                .map(|r| (0..m).map(|c| if r == c { ses[r] * ses[r] } else { 0.0 }).collect())
                .collect()
        }
    };
    ReferenceEffects::new(effects, covariance, &reference, treatments)
}

/// Labelled square matrix, reordered to `order`.
fn parse_covariance_csv(bytes: &[u8], order: &[&str]) -> Result<Vec<Vec<f64>>> {
    let h = headers(bytes)?;
    let cols: Vec<&str> = h.iter().skip(1).map(String::as_str).collect();
    let mut col_pos = HashMap::new();
    for (i, c) in cols.iter().enumerate() {
        if col_pos.insert(*c, i).is_some() {
            return Err(parse_err(format!("covariance line 1: duplicate column `{c}`")));
        }
    }
    if cols.len() != order.len() || order.iter().any(|l| !col_pos.contains_key(l)) {
        return Err(parse_err(format!(
            "covariance line 1: columns must be the non-reference treatments {}",
            order.join(",")
        )));
    }
    let m = order.len();
    let mut rows: Vec<Option<Vec<f64>>> = vec![None; m];
    for rec in csv_reader(bytes).records() {
        let rec = rec.map_err(|e| parse_err(format!("covariance {}", csv_error(e))))?;
        let line = rec.position().map_or(0, |p| p.line());
        let label = &rec[0];
        let r = order
            .iter()
            .position(|l| *l == label)
            .ok_or_else(|| parse_err(format!("covariance line {line}: unknown treatment `{label}`")))?;
        if rows[r].is_some() {
            return Err(parse_err(format!("covariance line {line}: duplicate row `{label}`")));
        }
        let mut row = vec![0.0; m];
        for (c, target) in order.iter().enumerate() {
            let raw = &rec[col_pos[target] + 1];
            row[c] = parse_number(raw, &Cell { line, column: target })
                .map_err(|e| parse_err(format!("covariance {e}")))?;
        }
        rows[r] = Some(row);
    }
    rows.into_iter()
        .zip(order)
        .map(|(r, l)| r.ok_or_else(|| parse_err(format!("covariance: missing row `{l}`"))))
        .collect()
}

fn parse_pairwise_csv(bytes: &[u8], direction: Direction) -> Result<PairwiseEffects<f64>> {
    expect_header(bytes, &["treatment_i", "treatment_j", "theta", "se"])?;
    let mut labels: Vec<String> = Vec::new();
    let mut entries = Vec::new();
    for rec in csv_reader(bytes).records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let mut idx = |label: &str| match labels.iter().position(|l| l == label) {
            Some(i) => i,
            None => {
                labels.push(label.to_owned());
                labels.len() - 1
            }
        };
        let (i, j) = (idx(&rec[0]), idx(&rec[1]));
        if i == j {
            return Err(parse_err(format!("line {line}: treatment `{}` compared with itself", &rec[0])));
        }
        let theta = parse_number(&rec[2], &Cell { line, column: "theta" })?;
        let se = parse_number(&rec[3], &Cell { line, column: "se" })?;
        if se <= 0.0 {
            return Err(parse_err(format!("line {line}, column `se`: non-positive standard error {se}")));
        }
        entries.push((line, i, j, theta, se));
    }
    let treatments = TreatmentSet::new(labels, direction)?;
    let n = treatments.len();
    let mut theta = vec![vec![0.0; n]; n];
    let mut se = vec![vec![0.0; n]; n];
    let mut seen = vec![vec![false; n]; n];
    for (line, i, j, t, s) in entries {
        if seen[i][j] {
            return Err(parse_err(format!(
                "line {line}: duplicate comparison `{}` vs `{}`",
                treatments.label(i),
                treatments.label(j)
            )));
        }
        seen[i][j] = true;
        seen[j][i] = true;
        theta[i][j] = t;
        theta[j][i] = -t;
        se[i][j] = s;
        se[j][i] = s;
    }
    for (i, row) in seen.iter().enumerate() {
        if let Some(j) = (i + 1..n).find(|&j| !row[j]) {
            return Err(parse_err(format!(
                "missing comparison `{}` vs `{}`",
                treatments.label(i),
                treatments.label(j)
            )));
        }
    }
    PairwiseEffects::new(theta, se, treatments)
}

fn parse_draws_csv(bytes: &[u8], direction: Direction) -> Result<DrawsMatrix<f64>> {
    let labels = headers(bytes)?;
    let treatments = TreatmentSet::new(labels.clone(), direction).map_err(|e| with_line(1, e))?;
    let mut rows = Vec::new();
    for rec in csv_reader(bytes).records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        let row = rec
            .iter()
            .zip(&labels)
            .map(|(raw, col)| parse_number(raw, &Cell { line, column: col }))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    DrawsMatrix::supplied(rows, treatments)
}

fn parse_labelled_rows(bytes: &[u8]) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let header = headers(bytes)?;
    let mut labels = Vec::new();
    let mut rows = Vec::new();
    for rec in csv_reader(bytes).records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        labels.push(rec[0].to_owned());
        let row = rec
            .iter()
            .zip(&header)
            .skip(1)
            .map(|(raw, col)| parse_number(raw, &Cell { line, column: col }))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok((labels, rows))
}

fn parse_rank_csv(bytes: &[u8], direction: Direction) -> Result<RankProbabilityMatrix<f64>> {
    let (labels, rows) = parse_labelled_rows(bytes)?;
    let expected: Vec<String> = std::iter::once("treatment".to_owned())
        .chain((1..=labels.len()).map(|k| format!("rank{k}")))
        .collect();
    let expected: Vec<&str> = expected.iter().map(String::as_str).collect();
    expect_header(bytes, &expected)?;
    let treatments = TreatmentSet::new(labels, direction)?;
    RankProbabilityMatrix::new(rows, treatments)
}

fn parse_scores_csv(bytes: &[u8], direction: Direction) -> Result<ScoreVector<f64>> {
    let h = headers(bytes)?;
    let kind = match h.get(1).map(String::as_str) {
        Some("pscore") => ScoreKind::Pscore,
        _ => ScoreKind::Sucra,
    };
    let (labels, rows) = parse_labelled_rows(bytes)?;
    let treatments = TreatmentSet::new(labels, direction)?;
    ScoreVector::new(rows.into_iter().map(|r| r[0]).collect(), kind, treatments)
}

// --------------------------------------------------------------- JSON ----

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    format: InputFormat,
    treatments: Vec<String>,
    #[serde(default)]
    direction: Option<Direction>,
    #[serde(default)]
    reference_effects: Option<RawReference>,
    #[serde(default)]
    pairwise: Option<RawPairwise>,
    #[serde(default)]
    draws: Option<Vec<Vec<Value>>>,
    #[serde(default)]
    rank_probs: Option<Vec<Vec<Value>>>,
    #[serde(default)]
    scores: Option<RawScores>,
    #[serde(default)]
    metadata: NetworkMetadata,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReference {
    reference: String,
    effects: Vec<Value>,
    #[serde(default)]
    covariance: Option<Vec<Vec<Value>>>,
    #[serde(default)]
    se: Option<Vec<Value>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPairwise {
    theta: Vec<Vec<Value>>,
    se: Vec<Vec<Value>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScores {
    kind: ScoreKind,
    values: Vec<Value>,
}

fn json_number(v: &Value, field: &str, row: usize, col: Option<usize>) -> Result<f64> {
    let at = match col {
        Some(c) => format!("{field}: row {row}, column {c}"),
        None => format!("{field}: entry {row}"),
    };
    match v {
        Value::Number(num) => num
            .as_f64()
            .filter(|x| x.is_finite())
            .ok_or_else(|| parse_err(format!("{at}: non-finite value {num}"))),
        Value::String(s) if s.parse::<f64>().is_ok_and(|x| !x.is_finite()) => {
            Err(parse_err(format!("{at}: non-finite value `{s}`")))
        }
        Value::Null => Err(parse_err(format!("{at}: non-finite value (null)"))),
        other => Err(parse_err(format!("{at}: expected a number, found {other}"))),
    }
}

fn json_vector(values: &[Value], field: &str) -> Result<Vec<f64>> {
    values
        .iter()
        .enumerate()
        .map(|(i, v)| json_number(v, field, i, None))
        .collect()
}

fn json_matrix(rows: &[Vec<Value>], field: &str) -> Result<Vec<Vec<f64>>> {
    rows.iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(|(c, v)| json_number(v, field, r, Some(c)))
                .collect()
        })
        .collect()
}

fn parse_json(
    bytes: &[u8],
    declared: Option<InputFormat>,
    options: &ParseOptions<'_>,
) -> Result<NetworkInputDocument> {
    let raw: RawDocument = serde_json::from_slice(bytes).map_err(|e| {
        parse_err(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    if let Some(d) = declared {
        if d != raw.format {
            return Err(parse_err(format!(
                "document format is {} but {} was declared",
                raw.format.as_str(),
                d.as_str()
            )));
        }
    }
    if options.covariance_csv.is_some() {
        return Err(parse_err("a covariance file only applies to CSV input"));
    }
    let direction = match (raw.direction, options.direction) {
        (Some(doc), Some(opt)) if doc != opt => {
            return Err(parse_err(format!(
                "document direction {doc} conflicts with requested {opt}"
            )))
        }
        (Some(d), _) | (None, Some(d)) => d,
        (None, None) => Direction::default(),
    };
    let present = [
        raw.reference_effects.is_some(),
        raw.pairwise.is_some(),
        raw.draws.is_some(),
        raw.rank_probs.is_some(),
        raw.scores.is_some(),
    ];
    if present.iter().filter(|p| **p).count() != 1 {
        return Err(parse_err("exactly one payload field must be present"));
    }
    let treatments = TreatmentSet::new(raw.treatments, direction)?;
    let mut warnings = Vec::new();
    let mismatch = |field: &str| {
        parse_err(format!(
            "format is {} but the payload is `{field}`",
            raw.format.as_str()
        ))
    };
    let payload = if let Some(r) = raw.reference_effects {
        if raw.format != InputFormat::ReferenceEffects {
            return Err(mismatch("reference_effects"));
        }
        let effects = json_vector(&r.effects, "reference_effects.effects")?;
        match (r.covariance, r.se) {
            (Some(cov), None) => Payload::ReferenceEffects(ReferenceEffects::new(
                effects,
                json_matrix(&cov, "reference_effects.covariance")?,
                &r.reference,
                treatments,
            )?),
            (None, Some(se)) => {
                let se = json_vector(&se, "reference_effects.se")?;
                if se.iter().any(|s| *s < 0.0) {
                    return Err(parse_err("reference_effects.se: negative standard error"));
                }
                if se.len() >= 2 {
                    warnings.push(
                        "covariance off-diagonals not supplied; assumed to be 0".to_owned(),
                    );
                }
                Payload::ReferenceEffects(ReferenceEffects::from_standard_errors(
                    effects,
                    &se,
                    &r.reference,
                    treatments,
                )?)
            }
            _ => {
                return Err(parse_err(
                    "reference_effects needs exactly one of `covariance` or `se`",
                ))
            }
        }
    } else if let Some(p) = raw.pairwise {
        if raw.format != InputFormat::Pairwise {
            return Err(mismatch("pairwise"));
        }
        Payload::Pairwise(PairwiseEffects::new(
            json_matrix(&p.theta, "pairwise.theta")?,
            json_matrix(&p.se, "pairwise.se")?,
            treatments,
        )?)
    } else if let Some(d) = raw.draws {
        if raw.format != InputFormat::Draws {
            return Err(mismatch("draws"));
        }
        Payload::Draws(DrawsMatrix::supplied(json_matrix(&d, "draws")?, treatments)?)
    } else if let Some(m) = raw.rank_probs {
        if raw.format != InputFormat::RankProbs {
            return Err(mismatch("rank_probs"));
        }
        Payload::RankProbs(RankProbabilityMatrix::new(
            json_matrix(&m, "rank_probs")?,
            treatments,
        )?)
    } else if let Some(s) = raw.scores {
        if raw.format != InputFormat::Scores {
            return Err(mismatch("scores"));
        }
        Payload::Scores(ScoreVector::new(
            json_vector(&s.values, "scores.values")?,
            s.kind,
            treatments,
        )?)
    } else {
        unreachable!("payload count checked above")
    };
    if let Some(t) = raw.metadata.tau_estimate {
        if !t.is_finite() || t < 0.0 {
            return Err(parse_err(format!("metadata.tau_estimate: invalid value {t}")));
        }
    }
    Ok(NetworkInputDocument {
        payload,
        metadata: raw.metadata,
        warnings,
    })
}

fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v).map_or(Value::Null, Value::Number)
}

fn matrix_value(rows: Vec<Vec<f64>>) -> Value {
    Value::Array(
        rows.into_iter()
            .map(|r| Value::Array(r.into_iter().map(num).collect()))
            .collect(),
    )
}

/// Canonical JSON for an input document. Parsing the result yields an equal
/// document (minus parse-time warnings).
pub fn write_input_json(doc: &NetworkInputDocument) -> Vec<u8> {
    let t = doc.treatments();
    let mut obj = Map::new();
    obj.insert("format".into(), Value::String(doc.format().as_str().into()));
    obj.insert(
        "treatments".into(),
        Value::Array(t.labels().iter().cloned().map(Value::String).collect()),
    );
    obj.insert("direction".into(), Value::String(t.direction().as_str().into()));
    let (key, value) = match &doc.payload {
        Payload::ReferenceEffects(r) => {
            let mut inner = Map::new();
            inner.insert("reference".into(), Value::String(r.reference().into()));
            inner.insert(
                "effects".into(),
                Value::Array(r.effects().iter().copied().map(num).collect()),
            );
            inner.insert("covariance".into(), matrix_value(r.covariance_rows()));
            ("reference_effects", Value::Object(inner))
        }
        Payload::Pairwise(p) => {
            let mut inner = Map::new();
            inner.insert("theta".into(), matrix_value(p.theta_rows()));
            inner.insert("se".into(), matrix_value(p.se_rows()));
            ("pairwise", Value::Object(inner))
        }
        Payload::Draws(d) => ("draws", matrix_value(d.rows())),
        Payload::RankProbs(m) => ("rank_probs", matrix_value(m.rows())),
        Payload::Scores(s) => {
            let mut inner = Map::new();
            inner.insert("kind".into(), Value::String(s.kind().as_str().into()));
            inner.insert(
                "values".into(),
                Value::Array(s.values().iter().copied().map(num).collect()),
            );
            ("scores", Value::Object(inner))
        }
    };
    obj.insert(key.into(), value);
    if doc.metadata != NetworkMetadata::default() {
        obj.insert(
            "metadata".into(),
            serde_json::to_value(&doc.metadata).expect("metadata serializes"),
        );
    }
    canonical_json(&Value::Object(obj)).into_bytes()
}

/// CSV rendering of an input document. Reference effects with non-zero
/// covariances also produce the companion covariance file.
pub struct CsvOutput {
    pub main: Vec<u8>,
    pub covariance: Option<Vec<u8>>,
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new().from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> Vec<u8> {
    w.into_inner().expect("in-memory csv writer")
}

fn fmt_f64(v: f64) -> String {
    // Shortest representation that parses back to the same value.
    format!("{v:?}")
}

pub fn write_input_csv(doc: &NetworkInputDocument) -> Result<CsvOutput> {
    let t = doc.treatments();
    let mut w = csv_writer();
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    let mut covariance = None;
    match &doc.payload {
        Payload::ReferenceEffects(r) => {
            w.write_record(["treatment", "effect", "se"]).map_err(io)?;
            let cov = r.covariance_rows();
            let mut k = 0;
            for (i, label) in t.labels().iter().enumerate() {
                if i == r.reference_index() {
                    w.write_record([label.as_str(), "", ""]).map_err(io)?;
                } else {
                    let se = cov[k][k].sqrt();
                    w.write_record([label.clone(), fmt_f64(r.effects()[k]), fmt_f64(se)])
                        .map_err(io)?;
                    k += 1;
                }
            }
            let off_diagonal = cov
                .iter()
                .enumerate()
                .any(|(i, row)| row.iter().enumerate().any(|(j, v)| i != j && *v != 0.0));
            let se_lossy = cov.iter().enumerate().any(|(i, row)| {
                let s = row[i].sqrt();
                s * s != row[i]
            });
            if off_diagonal || se_lossy {
                let labels: Vec<String> = r
                    .non_reference_indices()
                    .into_iter()
                    .map(|i| t.label(i).to_owned())
                    .collect();
                let mut cw = csv_writer();
                cw.write_record(std::iter::once("treatment".to_owned()).chain(labels.iter().cloned()))
                    .map_err(io)?;
                for (label, row) in labels.iter().zip(&cov) {
                    cw.write_record(
                        std::iter::once(label.clone()).chain(row.iter().map(|v| fmt_f64(*v))),
                    )
                    .map_err(io)?;
                }
                covariance = Some(finish(cw));
            }
        }
        Payload::Pairwise(p) => {
            w.write_record(["treatment_i", "treatment_j", "theta", "se"]).map_err(io)?;
            for i in 0..p.n() {
                for j in (i + 1)..p.n() {
                    w.write_record([
                        t.label(i).to_owned(),
                        t.label(j).to_owned(),
                        fmt_f64(p.theta(i, j)),
                        fmt_f64(p.se(i, j)),
                    ])
                    .map_err(io)?;
                }
            }
        }
        Payload::Draws(d) => {
            w.write_record(t.labels()).map_err(io)?;
            for row in d.rows() {
                w.write_record(row.iter().map(|v| fmt_f64(*v))).map_err(io)?;
            }
        }
        Payload::RankProbs(m) => {
            w.write_record(
                std::iter::once("treatment".to_owned()).chain((1..=m.n()).map(|k| format!("rank{k}"))),
            )
            .map_err(io)?;
            for (label, row) in t.labels().iter().zip(m.rows()) {
                w.write_record(std::iter::once(label.clone()).chain(row.iter().map(|v| fmt_f64(*v))))
                    .map_err(io)?;
            }
        }
        Payload::Scores(s) => {
            w.write_record(["treatment", s.kind().as_str()]).map_err(io)?;
            for (label, v) in t.labels().iter().zip(s.values()) {
                w.write_record([label.clone(), fmt_f64(*v)]).map_err(io)?;
            }
        }
    }
    Ok(CsvOutput {
        main: finish(w),
        covariance,
    })
}

// ------------------------------------------------------------ reports ----

/// Serializes `value` with sorted keys, two-space indentation and floats at
/// 17 significant digits.
pub fn canonical_json(value: &Value) -> String {
    let mut out = String::new();
    write_value(&mut out, value, 0);
    out.push('\n');
    out
}

fn write_value(out: &mut String, value: &Value, depth: usize) {
    let pad = |out: &mut String, d: usize| {
        for _ in 0..d {
            out.push_str("  ");
        }
    };
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if n.is_f64() {
                let v = n.as_f64().expect("f64 number");
                write!(out, "{v:.16e}").expect("write to string");
            } else {
                write!(out, "{n}").expect("write to string");
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string serializes")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                pad(out, depth + 1);
                write_value(out, item, depth + 1);
                if i + 1 < items.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, depth);
            out.push(']');
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            let sorted: BTreeMap<&String, &Value> = map.iter().collect();
            out.push_str("{\n");
            for (i, (k, v)) in sorted.iter().enumerate() {
                pad(out, depth + 1);
                out.push_str(&serde_json::to_string(k).expect("key serializes"));
                out.push_str(": ");
                write_value(out, v, depth + 1);
                if i + 1 < sorted.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            pad(out, depth);
            out.push('}');
        }
    }
}

pub fn write_report(report: &HierarchyReport) -> Vec<u8> {
    let value = serde_json::to_value(report).expect("report serializes");
    canonical_json(&value).into_bytes()
}

pub fn parse_report(bytes: &[u8]) -> Result<HierarchyReport> {
    serde_json::from_slice(bytes)
        .map_err(|e| parse_err(format!("report line {}, column {}: {e}", e.line(), e.column())))
}
