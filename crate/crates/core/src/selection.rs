//! Pick the ensemble response per query from the final score matrix.

use crate::dataset::ResponseSet;
use crate::error::{Error, Result};
use crate::tensor::SelectionResult;

/// Argmax per row, ties broken by lowest response index. NaN scores are
/// rejected rather than silently ranked.
pub fn select_best(
    final_scores: &[Vec<f64>],
    response_sets: &[ResponseSet],
) -> Result<SelectionResult> {
    if final_scores.len() != response_sets.len() {
        return Err(Error::Input(format!(
            "{} score rows but {} response sets",
            final_scores.len(),
            response_sets.len()
        )));
    }
    let mut chosen = Vec::with_capacity(final_scores.len());
    let mut chosen_model = Vec::with_capacity(final_scores.len());
    for (i, (row, rs)) in final_scores.iter().zip(response_sets).enumerate() {
        if row.len() != rs.responses.len() {
            return Err(Error::Input(format!(
                "query {:?} has {} scores for {} responses",
                rs.query_id,
                row.len(),
                rs.responses.len()
            )));
        }
        if let Some(j) = row.iter().position(|s| s.is_nan()) {
            return Err(Error::Inference(format!("NaN score at ({i}, {j})")));
        }
        let mut best = 0;
        for (j, &s) in row.iter().enumerate() {
            if s > row[best] {
                best = j;
            }
        }
        chosen.push(best);
        chosen_model.push(rs.responses[best].model_id.clone());
    }
    Ok(SelectionResult {
        final_scores: final_scores.to_vec(),
        chosen,
        chosen_model,
    })
}
