//! Parse the judge's score mapping out of arbitrary completion text.

use regex::Regex;
use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::levels::ScoreLevels;

const ORDINALS: [&str; 4] = ["One", "Two", "Three", "Four"];

/// Spelled-out ordinal for a 1-based response slot (window sizes go up to 4).
pub fn ordinal(n: usize) -> &'static str {
    ORDINALS[n - 1]
}

/// Render a well-formed score mapping for 1-based level scores, the exact
/// output format the templates request. Used by mocks and round-trip tests.
pub fn render_score_mapping(scores: &[usize]) -> String {
    let body = scores
        .iter()
        .enumerate()
        .map(|(idx, s)| format!("\"Score for the Response {}\": {s}", ordinal(idx + 1)))
        .collect::<Vec<_>>()
        .join(", ");
    format!("{{{body}}}")
}

fn key_value_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r#"["']([^"']+)["']\s*:\s*([^,}]+)"#).unwrap())
}

/// Extract `n` integer category scores from judge output.
///
/// Locates the first brace-delimited block mentioning the score keys,
/// tolerating surrounding prose, code fences, and whitespace. The block must
/// contain exactly the keys `"Score for the Response <Ordinal>"` for ordinals
/// `One..=<n>`, each with an integer value in `[1, K]`. Returns 0-based
/// category indices in window order.
pub fn parse_judge_output(text: &str, n: usize, levels: &ScoreLevels) -> Result<Vec<usize>> {
    assert!((1..=4).contains(&n), "window size {n} unsupported");
    let block = find_mapping_block(text).ok_or_else(|| Error::Parse {
        msg: "no score mapping found".into(),
        text: text.to_string(),
    })?;

    let mut pairs: Vec<(String, String)> = Vec::new();
    for cap in key_value_re().captures_iter(block) {
        pairs.push((cap[1].to_string(), cap[2].trim().to_string()));
    }
    let expected: Vec<String> = (1..=n)
        .map(|i| format!("Score for the Response {}", ordinal(i)))
        .collect();
    let mut values: Vec<Option<&str>> = vec![None; n];
    for (key, value) in &pairs {
        match expected.iter().position(|e| e == key) {
            Some(slot) => {
                if values[slot].is_some() {
                    return Err(Error::Parse {
                        msg: format!("duplicate key {key:?}"),
                        text: text.to_string(),
                    });
                }
                values[slot] = Some(value);
            }
            None => {
                return Err(Error::Parse {
                    msg: format!("unexpected key {key:?}"),
                    text: text.to_string(),
                })
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for (slot, value) in values.iter().enumerate() {
        let raw = value.ok_or_else(|| Error::Parse {
            msg: format!("missing key {:?}", expected[slot]),
            text: text.to_string(),
        })?;
        let score: i64 = raw.trim_matches(['"', '\'']).trim().parse().map_err(|_| Error::Parse {
            msg: format!("non-integer value {raw:?} for {:?}", expected[slot]),
            text: text.to_string(),
        })?;
        if score < 1 || score as usize > levels.k() {
            return Err(Error::Range {
                value: score as f64,
                min: 1.0,
                max: levels.k() as f64,
                location: format!(" for {:?}", expected[slot]),
            });
        }
        out.push(score as usize - 1);
    }
    Ok(out)
}

/// First balanced `{...}` block that mentions the score keys.
fn find_mapping_block(text: &str) -> Option<&str> {
    let bytes = text.as_bytes();
    let mut start = None;
    let mut depth = 0usize;
    for (pos, &b) in bytes.iter().enumerate() {
        match b {
            b'{' => {
                if depth == 0 {
                    start = Some(pos);
                }
                depth += 1;
            }
            b'}' => {
                if depth > 0 {
                    depth -= 1;
                    if depth == 0 {
                        let block = &text[start.unwrap()..=pos];
                        if block.contains("Score for the Response") {
                            return Some(block);
                        }
                    }
                }
            }
            _ => {}
        }
    }
    None
}
