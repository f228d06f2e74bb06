//! Prompt templates with the `[placeholder of ...]` substitution syntax.

use std::collections::BTreeMap;

use crate::dataset::Query;
use crate::error::{Error, Result};

const QUESTION_PLACEHOLDER: &str = "[placeholder of question]";

/// Both spacing variants appear in the shipped templates.
fn response_placeholders(n: usize) -> [String; 2] {
    [
        format!("[placeholder of response{n}]"),
        format!("[placeholder of response {n}]"),
    ]
}

/// A validated prompt template: one question placeholder and a contiguous run
/// of response placeholders `1..=window_size`, each appearing exactly once.
#[derive(Debug, Clone)]
pub struct Template {
    text: String,
    window_size: usize,
}

impl Template {
    pub fn parse(text: &str) -> Result<Self> {
        if text.matches(QUESTION_PLACEHOLDER).count() != 1 {
            return Err(Error::Template(format!(
                "template must contain {QUESTION_PLACEHOLDER:?} exactly once"
            )));
        }
        let mut window_size = 0;
        for n in 1.. {
            let count: usize = response_placeholders(n)
                .iter()
                .map(|p| text.matches(p.as_str()).count())
                .sum();
            match count {
                0 => break,
                1 => window_size = n,
                _ => {
                    return Err(Error::Template(format!(
                        "response placeholder {n} appears {count} times"
                    )))
                }
            }
        }
        if window_size == 0 {
            return Err(Error::Template(
                "template declares no response placeholders".into(),
            ));
        }
        Ok(Self {
            text: text.to_string(),
            window_size,
        })
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn text(&self) -> &str {
        &self.text
    }
}

/// Templates keyed by window size.
#[derive(Debug, Clone, Default)]
pub struct TemplateSet {
    by_window: BTreeMap<usize, Template>,
}

impl TemplateSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, template: Template) {
        self.by_window.insert(template.window_size(), template);
    }

    pub fn for_window(&self, window_size: usize) -> Result<&Template> {
        self.by_window.get(&window_size).ok_or_else(|| {
            Error::Config(format!("no template configured for window size {window_size}"))
        })
    }

    /// Minimal built-in templates for window sizes 1-4, in the same output
    /// format as the shipped fixtures. Used by tests and the simulator.
    pub fn generic() -> Self {
        const ORDINALS: [&str; 4] = ["One", "Two", "Three", "Four"];
        let mut set = Self::new();
        for n in 1..=4usize {
            let mut text = String::from(
                "You are an expert evaluator. Score each Response to the Question below.\n\n",
            );
            text.push_str(
                "Output format: return only a Python dictionary in the format {",
            );
            for (idx, ord) in ORDINALS[..n].iter().enumerate() {
                if idx > 0 {
                    text.push_str(", ");
                }
                text.push_str(&format!("\"Score for the Response {ord}\": x{}", idx + 1));
            }
            text.push_str("} with integer scores. Do NOT include any additional text.\n\n");
            text.push_str("Question: [placeholder of question]\n\n");
            for (idx, ord) in ORDINALS[..n].iter().enumerate() {
                text.push_str(&format!(
                    "Response {ord}: [placeholder of response{}]\n\n",
                    idx + 1
                ));
            }
            text.push_str("Your Python dictionary containing the scores:\n");
            set.insert(Template::parse(&text).unwrap());
        }
        set
    }
}

/// Substitute the query text and window responses into the template.
/// The window length must match the template's declared response slots.
pub fn render_prompt(template: &Template, query: &Query, responses: &[&str]) -> Result<String> {
    if query.text.is_empty() {
        return Err(Error::Input(format!("query {:?} has empty text", query.id)));
    }
    if responses.len() != template.window_size() {
        return Err(Error::Template(format!(
            "template declares {} response slots, window has {}",
            template.window_size(),
            responses.len()
        )));
    }
    let mut out = template.text().replace(QUESTION_PLACEHOLDER, &query.text);
    for (idx, text) in responses.iter().enumerate() {
        for placeholder in response_placeholders(idx + 1) {
            out = out.replace(&placeholder, text);
        }
    }
    Ok(out)
}
