//! Line-delimited, schema-versioned record files. Every format round-trips
//! byte-identically: write, read, write again produces the same bytes.

use std::path::Path;

use ensemble_core::{
    Dataset, Error, ModelParams, Query, Response, ResponseSet, Result, ScoreLevels, ScoreTensor,
};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

pub fn read_records<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line)
            .map_err(|e| Error::Data(format!("{}:{}: {e}", path.display(), lineno + 1)))?;
        out.push(record);
    }
    Ok(out)
}

pub fn write_records<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .map_err(|e| Error::Data(format!("cannot create {}: {e}", parent.display())))?;
    }
    let mut text = String::new();
    for record in records {
        text.push_str(
            &serde_json::to_string(record).map_err(|e| Error::Data(e.to_string()))?,
        );
        text.push('\n');
    }
    std::fs::write(path, text)
        .map_err(|e| Error::Data(format!("cannot write {}: {e}", path.display())))
}

/// Unit schema markers: parsing rejects any other schema string and
/// serialization emits exactly the expected one.
macro_rules! schema_tag {
    ($name:ident, $tag:literal) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
        pub enum $name {
            #[serde(rename = $tag)]
            V1,
        }

        impl Default for $name {
            fn default() -> Self {
                Self::V1
            }
        }
    };
}

schema_tag!(QuerySchema, "query/1");
schema_tag!(LabelSchema, "labels/1");
schema_tag!(FinalScoreSchema, "final-score/1");
schema_tag!(SelectionSchema, "selection/1");
schema_tag!(TruthSchema, "truth/1");

// Dataset: one record per query with its aligned responses.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QueryRecord {
    #[serde(default)]
    pub schema: QuerySchema,
    pub id: String,
    pub text: String,
    pub responses: Vec<ResponseRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseRecord {
    pub model: String,
    pub text: String,
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let records: Vec<QueryRecord> = read_records(path)?;
    let mut queries = Vec::with_capacity(records.len());
    let mut sets = Vec::with_capacity(records.len());
    for r in records {
        queries.push(Query {
            id: r.id.clone(),
            text: r.text,
        });
        sets.push(ResponseSet {
            query_id: r.id,
            responses: r
                .responses
                .into_iter()
                .map(|x| Response {
                    model_id: x.model,
                    text: x.text,
                })
                .collect(),
        });
    }
    Dataset::new(queries, sets)
}

pub fn dataset_records(dataset: &Dataset) -> Vec<QueryRecord> {
    dataset
        .queries()
        .iter()
        .zip(dataset.response_sets())
        .map(|(q, rs)| QueryRecord {
            schema: QuerySchema::V1,
            id: q.id.clone(),
            text: q.text.clone(),
            responses: rs
                .responses
                .iter()
                .map(|r| ResponseRecord {
                    model: r.model_id.clone(),
                    text: r.text.clone(),
                })
                .collect(),
        })
        .collect()
}

// Correctness labels: one record per query, one flag per response.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LabelRecord {
    #[serde(default)]
    pub schema: LabelSchema,
    pub query_id: String,
    pub correct: Vec<bool>,
}

// Score tensor: a header carrying the shape and levels, then one record per
// present (query, response, judge) entry.

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "schema", deny_unknown_fields)]
pub enum TensorRecord {
    #[serde(rename = "levels/1")]
    Levels {
        queries: usize,
        responses: usize,
        judges: Vec<String>,
        values: Vec<f64>,
        labels: Option<Vec<String>>,
    },
    #[serde(rename = "score/1")]
    Score {
        query: usize,
        response: usize,
        judge: usize,
        score: f64,
    },
}

pub fn tensor_records(tensor: &ScoreTensor, judge_names: &[String]) -> Vec<TensorRecord> {
    let mut out = vec![TensorRecord::Levels {
        queries: tensor.num_queries(),
        responses: tensor.num_responses(),
        judges: judge_names.to_vec(),
        values: tensor.levels().values().to_vec(),
        labels: tensor.levels().labels().map(|l| l.to_vec()),
    }];
    for i in 0..tensor.num_queries() {
        for j in 0..tensor.num_responses() {
            for jp in 0..tensor.num_judges() {
                if let Some(score) = tensor.get(i, j, jp) {
                    out.push(TensorRecord::Score {
                        query: i,
                        response: j,
                        judge: jp,
                        score,
                    });
                }
            }
        }
    }
    out
}

/// Rebuild the tensor; returns the judge names alongside it.
pub fn read_tensor(path: &Path) -> Result<(ScoreTensor, Vec<String>)> {
    let records: Vec<TensorRecord> = read_records(path)?;
    let mut iter = records.into_iter();
    let Some(TensorRecord::Levels {
        queries,
        responses,
        judges,
        values,
        labels,
    }) = iter.next()
    else {
        return Err(Error::Data(format!(
            "{}: first record must carry the levels header",
            path.display()
        )));
    };
    let levels = ScoreLevels::new(values, labels)?;
    let mut tensor = ScoreTensor::new_missing(queries, responses, judges.len(), levels);
    for record in iter {
        let TensorRecord::Score {
            query,
            response,
            judge,
            score,
        } = record
        else {
            return Err(Error::Data(format!(
                "{}: duplicate levels header",
                path.display()
            )));
        };
        if query >= queries || response >= responses || judge >= judges.len() {
            return Err(Error::Data(format!(
                "{}: score index ({query}, {response}, {judge}) outside header shape",
                path.display()
            )));
        }
        tensor.set(query, response, judge, score)?;
    }
    Ok((tensor, judges))
}

// Final per-response scores, one record per query.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FinalScoreRecord {
    #[serde(default)]
    pub schema: FinalScoreSchema,
    pub query: usize,
    pub scores: Vec<f64>,
}

pub fn final_score_records(scores: &[Vec<f64>]) -> Vec<FinalScoreRecord> {
    scores
        .iter()
        .enumerate()
        .map(|(i, row)| FinalScoreRecord {
            schema: FinalScoreSchema::V1,
            query: i,
            scores: row.clone(),
        })
        .collect()
}

pub fn read_final_scores(path: &Path) -> Result<Vec<Vec<f64>>> {
    let records: Vec<FinalScoreRecord> = read_records(path)?;
    for (i, r) in records.iter().enumerate() {
        if r.query != i {
            return Err(Error::Data(format!(
                "{}: record {i} is for query {}, expected consecutive queries",
                path.display(),
                r.query
            )));
        }
    }
    Ok(records.into_iter().map(|r| r.scores).collect())
}

// Fitted model parameters: the prior, then one matrix per judge.

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "schema", deny_unknown_fields)]
pub enum ParamsRecord {
    #[serde(rename = "alpha/1")]
    Alpha { alpha: Vec<f64> },
    #[serde(rename = "pi/1")]
    Pi { judge: usize, rows: Vec<Vec<f64>> },
}

pub fn params_records(params: &ModelParams) -> Vec<ParamsRecord> {
    let mut out = vec![ParamsRecord::Alpha {
        alpha: params.alpha().to_vec(),
    }];
    for jp in 0..params.num_judges() {
        out.push(ParamsRecord::Pi {
            judge: jp,
            rows: params.pi(jp).to_vec(),
        });
    }
    out
}

pub fn read_params(path: &Path) -> Result<ModelParams> {
    let records: Vec<ParamsRecord> = read_records(path)?;
    let mut alpha = None;
    let mut pis = Vec::new();
    for record in records {
        match record {
            ParamsRecord::Alpha { alpha: a } => {
                if alpha.replace(a).is_some() {
                    return Err(Error::Data(format!(
                        "{}: duplicate prior record",
                        path.display()
                    )));
                }
            }
            ParamsRecord::Pi { judge, rows } => {
                if judge != pis.len() {
                    return Err(Error::Data(format!(
                        "{}: matrix for judge {judge} out of order",
                        path.display()
                    )));
                }
                pis.push(rows);
            }
        }
    }
    let alpha = alpha
        .ok_or_else(|| Error::Data(format!("{}: missing prior record", path.display())))?;
    ModelParams::new(alpha, pis)
}

// Fit trace: per-iteration likelihood plus a summary line.

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "schema", deny_unknown_fields)]
pub enum TraceRecord {
    #[serde(rename = "trace/1")]
    Step { iteration: usize, log_likelihood: f64 },
    #[serde(rename = "trace-summary/1")]
    Summary { iterations_run: usize, converged: bool },
}

// Per-query selection of the winning response.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionRecord {
    #[serde(default)]
    pub schema: SelectionSchema,
    pub query: usize,
    pub query_id: String,
    pub chosen: usize,
    pub model: String,
    pub text: String,
}

// Synthetic ground truth: the true level value per response.

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruthRecord {
    #[serde(default)]
    pub schema: TruthSchema,
    pub query: usize,
    pub values: Vec<f64>,
}
