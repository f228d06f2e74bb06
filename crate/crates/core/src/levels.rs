//! Score levels and the fractional-split primitive.
//!
//! A judge scale has `K` ordered categories with numeric values
//! `s_1 < s_2 < ... < s_K`. Averaged judge scores are generally fractional;
//! [`fractional_split`] maps such a score onto its two neighboring categories
//! with interpolation weights that reconstruct the score exactly.

use crate::error::{Error, Result};

/// The score scale: category count `K`, numeric value per category, and
/// optional human-readable level descriptions.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreLevels {
    values: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl ScoreLevels {
    /// `values` must be strictly increasing and non-empty; `labels`, when
    /// given, must have one entry per level.
    pub fn new(values: Vec<f64>, labels: Option<Vec<String>>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("score levels must be non-empty".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("score level values must be finite".into()));
        }
        if values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config(format!(
                "score level values must be strictly increasing, got {values:?}"
            )));
        }
        if let Some(ref l) = labels {
            if l.len() != values.len() {
                return Err(Error::Config(format!(
                    "{} labels for {} levels",
                    l.len(),
                    values.len()
                )));
            }
        }
        Ok(Self { values, labels })
    }

    /// The scale `1, 2, ..., k` with no labels.
    pub fn one_to(k: usize) -> Self {
        Self {
            values: (1..=k).map(|v| v as f64).collect(),
            labels: None,
        }
    }

    /// Number of categories `K`.
    pub fn k(&self) -> usize {
        self.values.len()
    }

    /// Numeric value `s_k` of a 0-based category index.
    pub fn value(&self, category: usize) -> f64 {
        self.values[category]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().unwrap()
    }

    /// Range check used everywhere a fractional score enters the system.
    /// `location` names the tensor position when known, e.g. " at (0, 1, 2)".
    pub fn check_range(&self, y: f64, location: &str) -> Result<()> {
        if !y.is_finite() || y < self.min_value() || y > self.max_value() {
            return Err(Error::Range {
                value: y,
                min: self.min_value(),
                max: self.max_value(),
                location: location.to_string(),
            });
        }
        Ok(())
    }
}

/// A fractional score expressed as a two-point distribution over its
/// neighboring categories. Category indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FractionalSplit {
    pub lower: usize,
    pub upper: usize,
    pub conf_lower: f64,
    pub conf_upper: f64,
}

/// Split a fractional score onto its nearest lower/upper level values with
/// linear-interpolation confidences. A score equal to a level value collapses
/// to `(lower == upper, conf_lower = 1, conf_upper = 0)`.
///
/// The weights reconstruct the score:
/// `conf_lower * s_lower + conf_upper * s_upper == y`.
pub fn fractional_split(y: f64, levels: &ScoreLevels) -> Result<FractionalSplit> {
    levels.check_range(y, "")?;
    let values = levels.values();
    // Greatest category with s <= y.
    let lower = values.partition_point(|&v| v <= y) - 1;
    if values[lower] == y {
        return Ok(FractionalSplit {
            lower,
            upper: lower,
            conf_lower: 1.0,
            conf_upper: 0.0,
        });
    }
    let upper = lower + 1;
    let conf_upper = (y - values[lower]) / (values[upper] - values[lower]);
    Ok(FractionalSplit {
        lower,
        upper,
        conf_lower: 1.0 - conf_upper,
        conf_upper,
    })
}
