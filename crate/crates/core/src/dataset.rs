//! Queries, per-query response sets, and the validated dataset container.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// A single input query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Query {
    pub id: String,
    pub text: String,
}

/// One model's response to a query.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Response {
    pub model_id: String,
    pub text: String,
}

/// The ordered responses to one query, one per model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseSet {
    pub query_id: String,
    pub responses: Vec<Response>,
}

/// Queries plus aligned response sets. Construction validates the shared
/// invariants: unique non-empty query ids, non-empty texts, the same model
/// count and model order in every response set.
#[derive(Debug, Clone)]
pub struct Dataset {
    queries: Vec<Query>,
    response_sets: Vec<ResponseSet>,
}

impl Dataset {
    pub fn new(queries: Vec<Query>, response_sets: Vec<ResponseSet>) -> Result<Self> {
        if queries.len() != response_sets.len() {
            return Err(Error::Input(format!(
                "{} queries but {} response sets",
                queries.len(),
                response_sets.len()
            )));
        }
        let mut ids = HashSet::new();
        for q in &queries {
            if q.text.is_empty() {
                return Err(Error::Input(format!("query {:?} has empty text", q.id)));
            }
            if !ids.insert(q.id.as_str()) {
                return Err(Error::Input(format!("duplicate query id {:?}", q.id)));
            }
        }
        let mut model_order: Option<Vec<&str>> = None;
        for (q, rs) in queries.iter().zip(&response_sets) {
            if rs.query_id != q.id {
                return Err(Error::Input(format!(
                    "response set for {:?} does not match query {:?}",
                    rs.query_id, q.id
                )));
            }
            if rs.responses.len() < 2 {
                return Err(Error::Input(format!(
                    "query {:?} has {} responses; at least 2 required",
                    q.id,
                    rs.responses.len()
                )));
            }
            let order: Vec<&str> = rs.responses.iter().map(|r| r.model_id.as_str()).collect();
            let distinct: HashSet<&str> = order.iter().copied().collect();
            if distinct.len() != order.len() {
                return Err(Error::Input(format!(
                    "query {:?} has duplicate model ids",
                    q.id
                )));
            }
            match &model_order {
                None => model_order = Some(order),
                Some(expected) if *expected != order => {
                    return Err(Error::Input(format!(
                        "query {:?} has model order {:?}, expected {:?}",
                        q.id, order, expected
                    )));
                }
                _ => {}
            }
        }
        Ok(Self {
            queries,
            response_sets,
        })
    }

    /// Number of queries `I`.
    pub fn num_queries(&self) -> usize {
        self.queries.len()
    }

    /// Responses per query `J` (0 for an empty dataset).
    pub fn num_responses(&self) -> usize {
        self.response_sets.first().map_or(0, |rs| rs.responses.len())
    }

    pub fn queries(&self) -> &[Query] {
        &self.queries
    }

    pub fn response_sets(&self) -> &[ResponseSet] {
        &self.response_sets
    }

    /// The shared model order.
    pub fn model_ids(&self) -> Vec<&str> {
        self.response_sets
            .first()
            .map_or_else(Vec::new, |rs| {
                rs.responses.iter().map(|r| r.model_id.as_str()).collect()
            })
    }
}
