//! Pipeline stages behind the subcommands. Each stage reads and writes
//! record files under the configured output directory, so stages can be run
//! independently or chained.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use ensemble_client::{HttpJudge, ScoreCache};
use ensemble_core::evaluation::{
    ensemble_accuracy, oracle_upper_bound, theoretical_average, transition_report,
    CorrectnessLabels,
};
use ensemble_core::inference::{average_aggregate, final_scores, run_em};
use ensemble_core::scoring::{score_dataset, Judge, Strategy};
use ensemble_core::selection::select_best;
use ensemble_core::simulation::{sample_synthetic, SyntheticSpec};
use ensemble_core::{Error, ModelParams, Result, SelectionResult};
use serde::Serialize;

use crate::config::PipelineConfig;
use crate::records::{
    self, final_score_records, params_records, read_dataset, read_final_scores, read_tensor,
    tensor_records, LabelRecord, SelectionRecord, SelectionSchema, TensorRecord, TraceRecord,
    TruthRecord, TruthSchema,
};

/// Per-invocation overrides of config values.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub strategy: Option<Strategy>,
    pub out: Option<PathBuf>,
}

impl Overrides {
    fn out_dir(&self, cfg: &PipelineConfig) -> PathBuf {
        self.out.clone().unwrap_or_else(|| cfg.out.clone())
    }

    fn seed(&self, cfg: &PipelineConfig) -> u64 {
        self.seed.unwrap_or(cfg.seed)
    }
}

pub fn scores_path(out: &Path) -> PathBuf {
    out.join("scores.jsonl")
}

pub fn final_scores_path(out: &Path) -> PathBuf {
    out.join("final_scores.jsonl")
}

pub fn params_path(out: &Path) -> PathBuf {
    out.join("params.jsonl")
}

pub fn trace_path(out: &Path) -> PathBuf {
    out.join("trace.jsonl")
}

pub fn selections_path(out: &Path) -> PathBuf {
    out.join("selections.jsonl")
}

pub fn truth_path(out: &Path) -> PathBuf {
    out.join("truth.jsonl")
}

pub fn report_path(out: &Path) -> PathBuf {
    out.join("report.json")
}

/// Score the dataset with the configured judge endpoints and write the score
/// tensor. Completions are cached on disk, so a rerun with a warm cache makes
/// no network calls and reproduces the file exactly.
pub fn cmd_score(cfg: &PipelineConfig, overrides: &Overrides) -> Result<PathBuf> {
    let dataset_path = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("no dataset configured".into()))?;
    if cfg.judges.is_empty() {
        return Err(Error::Config("no judge endpoints configured".into()));
    }
    let dataset = read_dataset(dataset_path)?;
    let levels = cfg.score_levels()?;
    let templates = cfg.template_set()?;
    let strategy = match overrides.strategy {
        Some(s) => s,
        None => cfg.parsed_strategy()?,
    };
    let cache = Arc::new(ScoreCache::open(cfg.cache_dir())?);
    let judges: Vec<HttpJudge> = cfg
        .judges
        .iter()
        .map(|spec| HttpJudge::new(spec.clone(), Some(cache.clone())))
        .collect::<std::result::Result<_, _>>()?;
    let judge_refs: Vec<&dyn Judge> = judges.iter().map(|j| j as &dyn Judge).collect();
    let tensor = score_dataset(
        &dataset,
        &judge_refs,
        strategy,
        &templates,
        &levels,
        overrides.seed(cfg),
    )?;
    let names: Vec<String> = cfg.judges.iter().map(|j| j.model_name.clone()).collect();
    let out = overrides.out_dir(cfg);
    let path = scores_path(&out);
    records::write_records(&path, &tensor_records(&tensor, &names))?;
    Ok(path)
}

/// How final scores are aggregated from the tensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Average,
    Weighted,
}

impl std::str::FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "average" => Ok(Mode::Average),
            "weighted" => Ok(Mode::Weighted),
            other => Err(Error::Config(format!("unknown mode {other:?}"))),
        }
    }
}

/// Aggregate the score tensor into final per-response scores. Weighted mode
/// fits the reliability model and also writes the parameters and the
/// likelihood trace.
pub fn cmd_infer(cfg: &PipelineConfig, overrides: &Overrides, mode: Mode) -> Result<PathBuf> {
    let out = overrides.out_dir(cfg);
    let (tensor, _judges) = read_tensor(&scores_path(&out))?;
    let scores = match mode {
        Mode::Average => average_aggregate(&tensor)?,
        Mode::Weighted => {
            let (posterior, params, trace) = run_em(&tensor, &cfg.em_config())?;
            records::write_records(&params_path(&out), &params_records(&params))?;
            let mut trace_records: Vec<TraceRecord> = trace
                .log_likelihood
                .iter()
                .enumerate()
                .map(|(n, &ll)| TraceRecord::Step {
                    iteration: n + 1,
                    log_likelihood: ll,
                })
                .collect();
            trace_records.push(TraceRecord::Summary {
                iterations_run: trace.iterations_run,
                converged: trace.converged,
            });
            records::write_records(&trace_path(&out), &trace_records)?;
            final_scores(&posterior, tensor.levels())
        }
    };
    let path = final_scores_path(&out);
    records::write_records(&path, &final_score_records(&scores))?;
    Ok(path)
}

/// Pick the best response per query from the final scores.
pub fn cmd_select(cfg: &PipelineConfig, overrides: &Overrides) -> Result<PathBuf> {
    let dataset_path = cfg
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("no dataset configured".into()))?;
    let dataset = read_dataset(dataset_path)?;
    let out = overrides.out_dir(cfg);
    let scores = read_final_scores(&final_scores_path(&out))?;
    let result = select_best(&scores, dataset.response_sets())?;
    let selections: Vec<SelectionRecord> = result
        .chosen
        .iter()
        .enumerate()
        .map(|(i, &j)| SelectionRecord {
            schema: SelectionSchema::V1,
            query: i,
            query_id: dataset.queries()[i].id.clone(),
            chosen: j,
            model: result.chosen_model[i].clone(),
            text: dataset.response_sets()[i].responses[j].text.clone(),
        })
        .collect();
    let path = selections_path(&out);
    records::write_records(&path, &selections)?;
    Ok(path)
}

/// Evaluation summary written as `report.json` and printed.
#[derive(Debug, Serialize)]
pub struct Report {
    pub num_queries: usize,
    pub ensemble_accuracy: f64,
    pub theoretical_average: f64,
    pub oracle_upper_bound: f64,
    pub judge_diagnostics: Option<Vec<JudgeSummary>>,
}

#[derive(Debug, Serialize)]
pub struct JudgeSummary {
    pub judge: usize,
    pub diagonal_sum: f64,
    pub extreme_sum: f64,
}

impl std::fmt::Display for Report {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "queries:             {}", self.num_queries)?;
        writeln!(f, "ensemble accuracy:   {:.4}", self.ensemble_accuracy)?;
        writeln!(f, "theoretical average: {:.4}", self.theoretical_average)?;
        writeln!(f, "oracle upper bound:  {:.4}", self.oracle_upper_bound)?;
        if let Some(diags) = &self.judge_diagnostics {
            for d in diags {
                writeln!(
                    f,
                    "judge {}: diagonal sum {:.4}, extremes {:.4}",
                    d.judge, d.diagonal_sum, d.extreme_sum
                )?;
            }
        }
        Ok(())
    }
}

/// Compare the selections against the correctness labels. When a fitted
/// parameter file is present in the output directory, per-judge reliability
/// diagnostics are included.
pub fn cmd_eval(cfg: &PipelineConfig, overrides: &Overrides) -> Result<Report> {
    let labels_path = cfg
        .labels
        .as_ref()
        .ok_or_else(|| Error::Config("no labels configured".into()))?;
    let label_records: Vec<LabelRecord> = records::read_records(labels_path)?;
    let labels = CorrectnessLabels::new(label_records.into_iter().map(|r| r.correct).collect())?;
    let out = overrides.out_dir(cfg);
    let selections: Vec<SelectionRecord> = records::read_records(&selections_path(&out))?;
    let result = SelectionResult {
        final_scores: Vec::new(),
        chosen: selections.iter().map(|s| s.chosen).collect(),
        chosen_model: selections.into_iter().map(|s| s.model).collect(),
    };
    let judge_diagnostics = match records::read_params(&params_path(&out)) {
        Ok(params) => Some(judge_summaries(&params)),
        Err(_) => None,
    };
    let report = Report {
        num_queries: labels.num_queries(),
        ensemble_accuracy: ensemble_accuracy(&result, &labels)?,
        theoretical_average: theoretical_average(&labels),
        oracle_upper_bound: oracle_upper_bound(&labels),
        judge_diagnostics,
    };
    let json = serde_json::to_string_pretty(&report).map_err(|e| Error::Data(e.to_string()))?;
    std::fs::create_dir_all(&out)
        .map_err(|e| Error::Data(format!("cannot create {}: {e}", out.display())))?;
    std::fs::write(report_path(&out), json + "\n")
        .map_err(|e| Error::Data(e.to_string()))?;
    Ok(report)
}

pub fn judge_summaries(params: &ModelParams) -> Vec<JudgeSummary> {
    transition_report(params)
        .per_judge
        .iter()
        .map(|d| JudgeSummary {
            judge: d.judge_index,
            diagonal_sum: d.diagonal_sum,
            extreme_sum: d.extreme_sum,
        })
        .collect()
}

/// Sample a synthetic score tensor plus its ground truth. Writes the tensor
/// in the same format `score` produces, the true level per response, and
/// derived correctness labels (a response is correct when its true level is
/// the best in its query).
pub fn cmd_simulate(cfg: &PipelineConfig, overrides: &Overrides) -> Result<PathBuf> {
    let section = cfg
        .simulate
        .as_ref()
        .ok_or_else(|| Error::Config("no [simulate] section configured".into()))?;
    let levels = cfg.score_levels()?;
    let true_params = match (&section.diagonal, &section.alpha, &section.pis) {
        (Some(diag), None, None) => SyntheticSpec::diagonal_params(levels.k(), diag)?,
        (None, Some(alpha), Some(pis)) => ModelParams::new(alpha.clone(), pis.clone())?,
        _ => {
            return Err(Error::Config(
                "[simulate] needs either `diagonal` or both `alpha` and `pis`".into(),
            ))
        }
    };
    let spec = SyntheticSpec {
        num_queries: section.num_queries,
        num_responses: section.num_responses,
        levels: levels.clone(),
        true_params,
        seed: overrides.seed(cfg),
        fractional: section.fractional,
    };
    let (truths, tensor) = sample_synthetic(&spec)?;
    let out = overrides.out_dir(cfg);
    let names: Vec<String> = (0..spec.true_params.num_judges())
        .map(|jp| format!("judge-{jp}"))
        .collect();
    let path = scores_path(&out);
    records::write_records::<TensorRecord>(&path, &tensor_records(&tensor, &names))?;

    let truth_records: Vec<TruthRecord> = truths
        .iter()
        .enumerate()
        .map(|(i, row)| TruthRecord {
            schema: TruthSchema::V1,
            query: i,
            values: row.iter().map(|&t| levels.value(t)).collect(),
        })
        .collect();
    records::write_records(&truth_path(&out), &truth_records)?;

    let label_records: Vec<LabelRecord> = truths
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let best = row.iter().copied().max().unwrap();
            LabelRecord {
                schema: Default::default(),
                query_id: format!("q{i}"),
                correct: row.iter().map(|&t| t == best).collect(),
            }
        })
        .collect();
    records::write_records(&out.join("labels.jsonl"), &label_records)?;
    Ok(path)
}
