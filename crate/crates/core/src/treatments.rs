use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which end of the outcome scale is favourable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    #[default]
    LargerIsBetter,
    SmallerIsBetter,
}

impl Direction {
    /// Maps a raw effect onto the "larger is better" scale. This is the only
    /// place where the outcome direction touches a number.
    #[inline]
    pub fn orient<T: std::ops::Neg<Output = T>>(self, value: T) -> T {
        match self {
            Direction::LargerIsBetter => value,
            Direction::SmallerIsBetter => -value,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Direction::LargerIsBetter => Direction::SmallerIsBetter,
            Direction::SmallerIsBetter => Direction::LargerIsBetter,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Direction::LargerIsBetter => "larger-is-better",
            Direction::SmallerIsBetter => "smaller-is-better",
        }
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Direction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "larger" | "larger-is-better" => Ok(Direction::LargerIsBetter),
            "smaller" | "smaller-is-better" => Ok(Direction::SmallerIsBetter),
            other => Err(Error::Parse(format!("unknown direction `{other}`"))),
        }
    }
}

/// Ordered, labelled set of competing treatments with the outcome direction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TreatmentSet {
    labels: Vec<String>,
    direction: Direction,
}

impl TreatmentSet {
    pub fn new<I, S>(labels: I, direction: Direction) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() < 2 {
            return Err(Error::TooFewTreatments {
                min: 2,
                got: labels.len(),
            });
        }
        let mut seen = HashSet::with_capacity(labels.len());
        for (i, label) in labels.iter().enumerate() {
            if label.trim().is_empty() {
                return Err(Error::EmptyLabel(i));
            }
            if !seen.insert(label.as_str()) {
                return Err(Error::DuplicateTreatment(label.clone()));
            }
        }
        Ok(Self { labels, direction })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn direction(&self) -> Direction {
        self.direction
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn with_direction(&self, direction: Direction) -> Self {
        Self {
            labels: self.labels.clone(),
            direction,
        }
    }

    /// Resolves a subset of labels to sorted treatment indices.
    ///
    /// Subset computations always run in network order, so the same subset
    /// listed in a different order gives bit-identical results.
    pub fn resolve_subset<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        if ids.len() < 2 {
            return Err(Error::SubsetTooSmall(ids.len()));
        }
        let mut indices = Vec::with_capacity(ids.len());
        for id in ids {
            let id = id.as_ref();
            let idx = self
                .index_of(id)
                .ok_or_else(|| Error::UnknownTreatment(id.to_owned()))?;
            if indices.contains(&idx) {
                return Err(Error::DuplicateInSubset(id.to_owned()));
            }
            indices.push(idx);
        }
        indices.sort_unstable();
        Ok(indices)
    }

    /// The treatment set restricted to `indices` (assumed valid and sorted).
    pub fn restrict(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.labels[i].clone()),
            self.direction,
        )
    }
}
