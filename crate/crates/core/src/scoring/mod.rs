//! Judge scheduling and score collection.
//!
//! A strategy turns each query's `J` responses into scoring windows, each
//! window is rendered into a prompt and sent to every judge, and the parsed
//! per-window scores are averaged into one fractional score per
//! (query, response, judge).

mod prompt;
mod schedule;

pub use prompt::{render_prompt, Template, TemplateSet};
pub use schedule::build_schedule;

mod parse;
pub use parse::{ordinal, parse_judge_output, render_score_mapping};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::levels::ScoreLevels;
use crate::tensor::ScoreTensor;

/// Scoring strategy: how many responses each judge sees per prompt and which
/// windows are enumerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// One response per prompt, one window per response.
    Single,
    /// All ordered response pairs.
    Double,
    /// Circular triples over a shuffled order plus each triple's reversal;
    /// every response collects six scores per judge.
    FlippedTriple,
    /// All ordered quadruples, keeping one of each {sequence, reversal} pair.
    QuadrupleHalf,
}

impl Strategy {
    /// Smallest response count the strategy supports.
    pub fn min_responses(self) -> usize {
        match self {
            Strategy::Single => 1,
            Strategy::Double => 2,
            Strategy::FlippedTriple => 3,
            Strategy::QuadrupleHalf => 4,
        }
    }

    /// Responses presented together in one prompt.
    pub fn window_size(self) -> usize {
        match self {
            Strategy::Single => 1,
            Strategy::Double => 2,
            Strategy::FlippedTriple => 3,
            Strategy::QuadrupleHalf => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Single => "single",
            Strategy::Double => "double",
            Strategy::FlippedTriple => "flipped-triple",
            Strategy::QuadrupleHalf => "quadruple-half",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single" => Ok(Strategy::Single),
            "double" => Ok(Strategy::Double),
            "flipped-triple" | "flipped_triple" => Ok(Strategy::FlippedTriple),
            "quadruple-half" | "quadruple_half" => Ok(Strategy::QuadrupleHalf),
            other => Err(Error::Config(format!("unknown strategy {other:?}"))),
        }
    }
}

/// One scoring call: a window of response indices rendered into a prompt for
/// one judge.
#[derive(Debug, Clone)]
pub struct WorkItem {
    pub query_id: String,
    pub judge_index: usize,
    pub window: Vec<usize>,
    pub prompt_text: String,
}

/// Integer category scores (0-based) collected per (query, response, judge)
/// across all windows containing that response.
#[derive(Debug, Clone)]
pub struct RawScores {
    num_responses: usize,
    num_judges: usize,
    per: Vec<Vec<usize>>, // indexed (i * J + j) * J' + j'
}

impl RawScores {
    pub fn new(num_queries: usize, num_responses: usize, num_judges: usize) -> Self {
        Self {
            num_responses,
            num_judges,
            per: vec![Vec::new(); num_queries * num_responses * num_judges],
        }
    }

    fn idx(&self, i: usize, j: usize, judge: usize) -> usize {
        (i * self.num_responses + j) * self.num_judges + judge
    }

    pub fn push(&mut self, i: usize, j: usize, judge: usize, category: usize) {
        let at = self.idx(i, j, judge);
        self.per[at].push(category);
    }

    pub fn get(&self, i: usize, j: usize, judge: usize) -> &[usize] {
        &self.per[self.idx(i, j, judge)]
    }
}

/// Average raw category scores into one fractional score, or `None` when no
/// scores were collected (the tensor entry stays missing).
pub fn aggregate_judge_scores(raw: &[usize], levels: &ScoreLevels) -> Option<f64> {
    if raw.is_empty() {
        return None;
    }
    let sum: f64 = raw.iter().map(|&c| levels.value(c)).sum();
    Some(sum / raw.len() as f64)
}

/// A scoring backend: takes a rendered prompt, returns raw completion text.
/// Implementations handle their own retries; a returned error means the call
/// failed permanently and the affected window is dropped.
pub trait Judge: Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
}

/// Per-query schedule seed, derived so each query gets an independent shuffle
/// that is stable across runs and judges.
pub fn query_seed(seed: u64, query_index: usize) -> u64 {
    seed ^ (query_index as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Render the full work list for one judge over the dataset.
pub fn build_work_items(
    dataset: &Dataset,
    judge_index: usize,
    strategy: Strategy,
    templates: &TemplateSet,
    seed: u64,
) -> Result<Vec<WorkItem>> {
    let template = templates.for_window(strategy.window_size())?;
    let mut items = Vec::new();
    for (i, (query, rs)) in dataset
        .queries()
        .iter()
        .zip(dataset.response_sets())
        .enumerate()
    {
        let windows = build_schedule(dataset.num_responses(), strategy, query_seed(seed, i))?;
        for window in windows {
            let texts: Vec<&str> = window
                .iter()
                .map(|&j| rs.responses[j].text.as_str())
                .collect();
            let prompt_text = render_prompt(template, query, &texts)?;
            items.push(WorkItem {
                query_id: query.id.clone(),
                judge_index,
                window,
                prompt_text,
            });
        }
    }
    Ok(items)
}

/// Score the whole dataset with every judge and reduce to the score tensor.
///
/// Deterministic given the seed and the judges' responses: windows are keyed
/// by (query, judge, window) so dispatch order cannot change the result.
/// Parse and call failures drop the affected window (logged); entries with no
/// surviving scores stay missing. Configuration problems abort.
pub fn score_dataset(
    dataset: &Dataset,
    judges: &[&dyn Judge],
    strategy: Strategy,
    templates: &TemplateSet,
    levels: &ScoreLevels,
    seed: u64,
) -> Result<ScoreTensor> {
    let (i_n, j_n) = (dataset.num_queries(), dataset.num_responses());
    if i_n > 0 && j_n < strategy.min_responses() {
        return Err(Error::Config(format!(
            "strategy {} needs at least {} responses, dataset has {j_n}",
            strategy.name(),
            strategy.min_responses()
        )));
    }
    // Validate the template up front even when the dataset is empty.
    templates.for_window(strategy.window_size())?;

    let mut raw = RawScores::new(i_n, j_n, judges.len());
    // One thread per judge; each writes to a disjoint slice of results.
    let per_judge: Vec<Result<Vec<(usize, Vec<usize>, Vec<usize>)>>> = std::thread::scope(|s| {
        let handles: Vec<_> = (0..judges.len())
            .map(|jp| {
                let judge = judges[jp];
                s.spawn(move || score_one_judge(dataset, judge, jp, strategy, templates, levels, seed))
            })
            .collect();
        handles.into_iter().map(|h| h.join().unwrap()).collect()
    });

    for (jp, result) in per_judge.into_iter().enumerate() {
        for (i, window, cats) in result? {
            for (&j, &cat) in window.iter().zip(&cats) {
                raw.push(i, j, jp, cat);
            }
        }
    }

    let mut tensor = ScoreTensor::new_missing(i_n, j_n, judges.len(), levels.clone());
    for i in 0..i_n {
        for j in 0..j_n {
            for jp in 0..judges.len() {
                if let Some(y) = aggregate_judge_scores(raw.get(i, j, jp), levels) {
                    tensor.set(i, j, jp, y)?;
                }
            }
        }
    }
    Ok(tensor)
}

/// Scored windows for one judge: (query index, window, parsed categories).
/// Windows whose call or parse failed are omitted.
fn score_one_judge(
    dataset: &Dataset,
    judge: &dyn Judge,
    judge_index: usize,
    strategy: Strategy,
    templates: &TemplateSet,
    levels: &ScoreLevels,
    seed: u64,
) -> Result<Vec<(usize, Vec<usize>, Vec<usize>)>> {
    let template = templates.for_window(strategy.window_size())?;
    let mut scored = Vec::new();
    for (i, (query, rs)) in dataset
        .queries()
        .iter()
        .zip(dataset.response_sets())
        .enumerate()
    {
        let windows = build_schedule(dataset.num_responses(), strategy, query_seed(seed, i))?;
        for window in windows {
            let texts: Vec<&str> = window
                .iter()
                .map(|&j| rs.responses[j].text.as_str())
                .collect();
            let prompt = render_prompt(template, query, &texts)?;
            let completion = match judge.complete(&prompt) {
                Ok(text) => text,
                Err(e) => {
                    log::warn!(
                        "judge {judge_index} call failed for query {:?} window {window:?}: {e}",
                        query.id
                    );
                    continue;
                }
            };
            match parse_judge_output(&completion, window.len(), levels) {
                Ok(cats) => scored.push((i, window, cats)),
                Err(e) => {
                    log::warn!(
                        "judge {judge_index} output unparseable for query {:?} window {window:?}: {e}",
                        query.id
                    );
                }
            }
        }
    }
    Ok(scored)
}

/// Seed the shuffle RNG for a single schedule.
pub(crate) fn schedule_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
