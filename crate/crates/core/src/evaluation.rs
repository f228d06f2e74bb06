//! Scoring the ensemble against correctness labels, plus transition-matrix
//! diagnostics.

use std::fmt;

use crate::error::{Error, Result};
use crate::tensor::{ModelParams, SelectionResult};

/// Per-(query, response) correctness indicators. Ingested, never computed:
/// answer matching and preference grading happen upstream.
#[derive(Debug, Clone)]
pub struct CorrectnessLabels {
    per_query: Vec<Vec<bool>>,
}

impl CorrectnessLabels {
    pub fn new(per_query: Vec<Vec<bool>>) -> Result<Self> {
        if let Some(first) = per_query.first() {
            let j = first.len();
            if per_query.iter().any(|row| row.len() != j) {
                return Err(Error::Data("ragged label rows".into()));
            }
        }
        Ok(Self { per_query })
    }

    pub fn num_queries(&self) -> usize {
        self.per_query.len()
    }

    pub fn num_responses(&self) -> usize {
        self.per_query.first().map_or(0, Vec::len)
    }

    pub fn rows(&self) -> &[Vec<bool>] {
        &self.per_query
    }

    /// Correctness column for one model.
    pub fn model_column(&self, j: usize) -> Vec<bool> {
        self.per_query.iter().map(|row| row[j]).collect()
    }
}

/// Fraction of queries whose chosen response is labeled correct.
pub fn ensemble_accuracy(result: &SelectionResult, labels: &CorrectnessLabels) -> Result<f64> {
    if result.chosen.len() != labels.num_queries() {
        return Err(Error::Data(format!(
            "{} selections for {} label rows",
            result.chosen.len(),
            labels.num_queries()
        )));
    }
    if labels.num_queries() == 0 {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (row, &c) in labels.rows().iter().zip(&result.chosen) {
        let label = row
            .get(c)
            .ok_or_else(|| Error::Data(format!("missing label for response {c}")))?;
        if *label {
            correct += 1;
        }
    }
    Ok(correct as f64 / labels.num_queries() as f64)
}

/// Mean of per-model accuracies: the expected accuracy of uniform-random
/// selection.
pub fn theoretical_average(labels: &CorrectnessLabels) -> f64 {
    let (i_n, j_n) = (labels.num_queries(), labels.num_responses());
    if i_n == 0 || j_n == 0 {
        return 0.0;
    }
    let total: usize = labels.rows().iter().flatten().filter(|&&b| b).count();
    total as f64 / (i_n * j_n) as f64
}

/// Fraction of queries with at least one correct response: an upper bound on
/// any selector's accuracy.
pub fn oracle_upper_bound(labels: &CorrectnessLabels) -> f64 {
    if labels.num_queries() == 0 {
        return 0.0;
    }
    let hits = labels.rows().iter().filter(|row| row.iter().any(|&b| b)).count();
    hits as f64 / labels.num_queries() as f64
}

/// Per-query win/tie/loss counts for model A against model B.
pub fn win_tie_loss(a: &[bool], b: &[bool]) -> Result<(usize, usize, usize)> {
    if a.len() != b.len() {
        return Err(Error::Data(format!(
            "column lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    let mut wins = 0;
    let mut ties = 0;
    let mut losses = 0;
    for (&x, &y) in a.iter().zip(b) {
        match (x, y) {
            (true, false) => wins += 1,
            (false, true) => losses += 1,
            _ => ties += 1,
        }
    }
    Ok((wins, ties, losses))
}

/// One judge's transition matrix with its diagonal statistics.
#[derive(Debug, Clone)]
pub struct JudgeDiagnostics {
    pub judge_index: usize,
    pub matrix: Vec<Vec<f64>>,
    /// Sum of all diagonal entries.
    pub diagonal_sum: f64,
    /// The extreme-values statistic: first plus last diagonal entry.
    pub extreme_sum: f64,
}

/// Diagnostic summary of all transition matrices.
#[derive(Debug, Clone)]
pub struct TransitionReport {
    pub per_judge: Vec<JudgeDiagnostics>,
}

impl TransitionReport {
    /// Judge indices ordered by decreasing diagonal sum.
    pub fn ranking_by_diagonal(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.per_judge.len()).collect();
        order.sort_by(|&a, &b| {
            self.per_judge[b]
                .diagonal_sum
                .partial_cmp(&self.per_judge[a].diagonal_sum)
                .unwrap()
        });
        order
    }
}

pub fn transition_report(params: &ModelParams) -> TransitionReport {
    let k = params.k();
    let per_judge = (0..params.num_judges())
        .map(|jp| {
            let matrix = params.pi(jp).to_vec();
            let diagonal_sum: f64 = (0..k).map(|m| matrix[m][m]).sum();
            let extreme_sum = matrix[0][0] + matrix[k - 1][k - 1];
            JudgeDiagnostics {
                judge_index: jp,
                matrix,
                diagonal_sum,
                extreme_sum,
            }
        })
        .collect();
    TransitionReport { per_judge }
}

impl fmt::Display for TransitionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.per_judge {
            writeln!(
                f,
                "judge {}: diagonal sum {:.4}, extremes {:.4}",
                d.judge_index, d.diagonal_sum, d.extreme_sum
            )?;
            for row in &d.matrix {
                let cells: Vec<String> = row.iter().map(|v| format!("{v:.3}")).collect();
                writeln!(f, "  [{}]", cells.join(", "))?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulation::SyntheticSpec;
    use crate::tensor::SelectionResult;

    fn labels(rows: &[&[bool]]) -> CorrectnessLabels {
        CorrectnessLabels::new(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn selection(chosen: &[usize], j: usize) -> SelectionResult {
        SelectionResult {
            final_scores: chosen.iter().map(|_| vec![0.0; j]).collect(),
            chosen: chosen.to_vec(),
            chosen_model: chosen.iter().map(|c| format!("m{c}")).collect(),
        }
    }

    #[test]
    fn accuracy_counts() {
        let l = labels(&[
            &[true, false],
            &[false, true],
            &[true, true],
            &[false, false],
        ]);
        let all = selection(&[0, 1, 0, 0], 2);
        assert_eq!(ensemble_accuracy(&all, &l).unwrap(), 0.75);
        let worst = selection(&[1, 0, 0, 1], 2);
        assert_eq!(ensemble_accuracy(&worst, &l).unwrap(), 0.25);
    }

    #[test]
    fn accuracy_bounds() {
        let l = labels(&[&[true, true], &[true, false]]);
        assert_eq!(ensemble_accuracy(&selection(&[0, 0], 2), &l).unwrap(), 1.0);
        assert_eq!(ensemble_accuracy(&selection(&[1, 1], 2), &l).unwrap(), 0.5);
    }

    #[test]
    fn theoretical_average_examples() {
        // per-model accuracies (1.0, 0.0) -> 0.5
        let l = labels(&[&[true, false], &[true, false]]);
        assert_eq!(theoretical_average(&l), 0.5);
        // identical columns -> that accuracy
        let l = labels(&[&[true, true], &[false, false]]);
        assert_eq!(theoretical_average(&l), 0.5);
        // lies between min and max model accuracy
        let l = labels(&[&[true, false], &[true, true], &[false, false]]);
        let ta = theoretical_average(&l);
        assert!(ta >= 1.0 / 3.0 && ta <= 2.0 / 3.0);
    }

    #[test]
    fn theoretical_average_equals_random_selector_enumeration() {
        // Exhaustively average accuracy over all J^I selection functions.
        let l = labels(&[&[true, false], &[false, true], &[true, true]]);
        let (i_n, j_n) = (3usize, 2usize);
        let mut total = 0.0;
        let combos = j_n.pow(i_n as u32);
        for c in 0..combos {
            let mut acc = 0usize;
            let mut rest = c;
            for i in 0..i_n {
                let pick = rest % j_n;
                rest /= j_n;
                if l.rows()[i][pick] {
                    acc += 1;
                }
            }
            total += acc as f64 / i_n as f64;
        }
        let enumerated = total / combos as f64;
        assert!((theoretical_average(&l) - enumerated).abs() < 1e-12);
    }

    #[test]
    fn win_tie_loss_examples() {
        let a = vec![true, true, false, true, false];
        assert_eq!(win_tie_loss(&a, &a).unwrap(), (0, 5, 0));
        let b = vec![false, false, false, false, false];
        assert_eq!(win_tie_loss(&a, &b).unwrap(), (3, 2, 0));
        let c = vec![false, true, true, false, false];
        // hand-counted: wins q0,q3; tie q1,q4; loss q2
        assert_eq!(win_tie_loss(&a, &c).unwrap(), (2, 2, 1));
    }

    #[test]
    fn oracle_bound_dominates_any_selection() {
        let l = labels(&[&[true, false], &[false, false], &[false, true]]);
        let bound = oracle_upper_bound(&l);
        assert!((bound - 2.0 / 3.0).abs() < 1e-12);
        for chosen in [[0, 0, 0], [1, 1, 1], [0, 1, 0]] {
            let acc = ensemble_accuracy(&selection(&chosen, 2), &l).unwrap();
            assert!(acc <= bound + 1e-12);
        }
    }

    #[test]
    fn transition_report_statistics() {
        let identity = SyntheticSpec::diagonal_params(5, &[1.0]).unwrap();
        let r = transition_report(&identity);
        assert_eq!(r.per_judge[0].diagonal_sum, 5.0);
        assert_eq!(r.per_judge[0].extreme_sum, 2.0);

        let uniform = SyntheticSpec::diagonal_params(5, &[0.2]).unwrap();
        let r = transition_report(&uniform);
        assert!((r.per_judge[0].diagonal_sum - 1.0).abs() < 1e-12);
        assert!((r.per_judge[0].extreme_sum - 0.4).abs() < 1e-12);
    }

    #[test]
    fn ranking_orders_by_diagonal() {
        let params = SyntheticSpec::diagonal_params(3, &[0.3, 0.9, 0.6]).unwrap();
        let r = transition_report(&params);
        assert_eq!(r.ranking_by_diagonal(), vec![1, 2, 0]);
    }
}
