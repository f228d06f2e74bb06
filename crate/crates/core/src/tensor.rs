//! Dense containers for scores, posteriors, and model parameters.

use crate::error::{Error, Result};
use crate::levels::ScoreLevels;

/// Tolerance for simplex-sum checks on posteriors and parameters.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// Fractional judge scores over (query, response, judge). Entries may be
/// missing when a judge call failed permanently.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTensor {
    num_queries: usize,
    num_responses: usize,
    num_judges: usize,
    levels: ScoreLevels,
    entries: Vec<Option<f64>>,
}

impl ScoreTensor {
    pub fn new_missing(
        num_queries: usize,
        num_responses: usize,
        num_judges: usize,
        levels: ScoreLevels,
    ) -> Self {
        Self {
            num_queries,
            num_responses,
            num_judges,
            levels,
            entries: vec![None; num_queries * num_responses * num_judges],
        }
    }

    fn idx(&self, i: usize, j: usize, judge: usize) -> usize {
        debug_assert!(i < self.num_queries && j < self.num_responses && judge < self.num_judges);
        (i * self.num_responses + j) * self.num_judges + judge
    }

    pub fn num_queries(&self) -> usize {
        self.num_queries
    }

    pub fn num_responses(&self) -> usize {
        self.num_responses
    }

    pub fn num_judges(&self) -> usize {
        self.num_judges
    }

    pub fn levels(&self) -> &ScoreLevels {
        &self.levels
    }

    pub fn get(&self, i: usize, j: usize, judge: usize) -> Option<f64> {
        self.entries[self.idx(i, j, judge)]
    }

    /// Set one entry, range-checked against the levels. The error names the
    /// offending (i, j, j') position.
    pub fn set(&mut self, i: usize, j: usize, judge: usize, y: f64) -> Result<()> {
        self.levels
            .check_range(y, &format!(" at ({i}, {j}, {judge})"))?;
        let at = self.idx(i, j, judge);
        self.entries[at] = Some(y);
        Ok(())
    }

    pub fn clear(&mut self, i: usize, j: usize, judge: usize) {
        let at = self.idx(i, j, judge);
        self.entries[at] = None;
    }

    /// All judge scores for one response, missing entries included, in judge order.
    pub fn judge_scores(&self, i: usize, j: usize) -> &[Option<f64>] {
        let base = self.idx(i, j, 0);
        &self.entries[base..base + self.num_judges]
    }

    /// Swap two judge slices across the whole tensor.
    pub fn swap_judges(&mut self, a: usize, b: usize) {
        for i in 0..self.num_queries {
            for j in 0..self.num_responses {
                let (ia, ib) = (self.idx(i, j, a), self.idx(i, j, b));
                self.entries.swap(ia, ib);
            }
        }
    }
}

/// Per-response distribution over the `K` score categories.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    num_queries: usize,
    num_responses: usize,
    k: usize,
    rows: Vec<f64>,
}

impl Posterior {
    /// Validates that every row is a probability simplex.
    pub fn new(num_queries: usize, num_responses: usize, k: usize, rows: Vec<f64>) -> Result<Self> {
        if rows.len() != num_queries * num_responses * k {
            return Err(Error::Input(format!(
                "posterior has {} entries, expected {}",
                rows.len(),
                num_queries * num_responses * k
            )));
        }
        let p = Self {
            num_queries,
            num_responses,
            k,
            rows,
        };
        for i in 0..num_queries {
            for j in 0..num_responses {
                check_simplex(p.row(i, j), &format!("posterior row ({i}, {j})"))?;
            }
        }
        Ok(p)
    }

    pub fn num_queries(&self) -> usize {
        self.num_queries
    }

    pub fn num_responses(&self) -> usize {
        self.num_responses
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn row(&self, i: usize, j: usize) -> &[f64] {
        let base = (i * self.num_responses + j) * self.k;
        &self.rows[base..base + self.k]
    }
}

/// Category prior and per-judge transition matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    alpha: Vec<f64>,
    pis: Vec<Vec<Vec<f64>>>,
}

impl ModelParams {
    /// `pis[j'][m][n]` = probability judge j' reports category n when the
    /// truth is m. Validates all simplex invariants.
    pub fn new(alpha: Vec<f64>, pis: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let k = alpha.len();
        check_simplex(&alpha, "alpha")?;
        for (jp, pi) in pis.iter().enumerate() {
            if pi.len() != k {
                return Err(Error::Input(format!(
                    "transition matrix {jp} has {} rows, expected {k}",
                    pi.len()
                )));
            }
            for (m, row) in pi.iter().enumerate() {
                if row.len() != k {
                    return Err(Error::Input(format!(
                        "transition matrix {jp} row {m} has {} entries, expected {k}",
                        row.len()
                    )));
                }
                check_simplex(row, &format!("transition matrix {jp} row {m}"))?;
            }
        }
        Ok(Self { alpha, pis })
    }

    pub fn k(&self) -> usize {
        self.alpha.len()
    }

    pub fn num_judges(&self) -> usize {
        self.pis.len()
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn pis(&self) -> &[Vec<Vec<f64>>] {
        &self.pis
    }

    pub fn pi(&self, judge: usize) -> &[Vec<f64>] {
        &self.pis[judge]
    }

    pub fn swap_judges(&mut self, a: usize, b: usize) {
        self.pis.swap(a, b);
    }
}

/// Final score matrix plus the per-query argmax choice.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    pub final_scores: Vec<Vec<f64>>,
    pub chosen: Vec<usize>,
    pub chosen_model: Vec<String>,
}

fn check_simplex(row: &[f64], what: &str) -> Result<()> {
    if row.iter().any(|&p| !(p >= 0.0)) {
        return Err(Error::Input(format!("{what} has a negative or NaN entry")));
    }
    let sum: f64 = row.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::Input(format!("{what} sums to {sum}, expected 1")));
    }
    Ok(())
}
