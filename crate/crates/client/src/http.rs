//! OpenAI-compatible chat-completion judge over HTTP.

use std::sync::{Arc, Condvar, Mutex};
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use crate::{ClientError, EndpointSpec, ScoreCache};

/// Judges run deterministically.
const TEMPERATURE: f64 = 0.0;

/// Counting semaphore bounding in-flight requests per endpoint.
struct Permits {
    available: Mutex<usize>,
    cond: Condvar,
}

impl Permits {
    fn new(count: usize) -> Self {
        Self {
            available: Mutex::new(count),
            cond: Condvar::new(),
        }
    }

    fn acquire(&self) -> PermitGuard<'_> {
        let mut available = self.available.lock().unwrap();
        while *available == 0 {
            available = self.cond.wait(available).unwrap();
        }
        *available -= 1;
        PermitGuard(self)
    }
}

struct PermitGuard<'a>(&'a Permits);

impl Drop for PermitGuard<'_> {
    fn drop(&mut self) {
        *self.0.available.lock().unwrap() += 1;
        self.0.cond.notify_one();
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: String,
}

/// A single judge endpoint. Cache-first; transport and retryable HTTP errors
/// (408/429/5xx) back off exponentially up to the retry budget.
pub struct HttpJudge {
    spec: EndpointSpec,
    api_key: String,
    client: reqwest::blocking::Client,
    cache: Option<Arc<ScoreCache>>,
    permits: Permits,
    backoff_base: Duration,
}

impl HttpJudge {
    pub fn new(spec: EndpointSpec, cache: Option<Arc<ScoreCache>>) -> Result<Self, ClientError> {
        spec.validate()?;
        let api_key = std::env::var(&spec.api_key_env).map_err(|_| {
            ClientError::Config(format!(
                "credential variable {} is not set for endpoint {}",
                spec.api_key_env, spec.model_name
            ))
        })?;
        let client = reqwest::blocking::Client::builder()
            .timeout(spec.timeout())
            .build()
            .map_err(|e| ClientError::Config(e.to_string()))?;
        let permits = Permits::new(spec.max_parallel);
        Ok(Self {
            spec,
            api_key,
            client,
            cache,
            permits,
            backoff_base: Duration::from_millis(250),
        })
    }

    /// Shrink the backoff for tests.
    pub fn with_backoff_base(mut self, base: Duration) -> Self {
        self.backoff_base = base;
        self
    }

    pub fn model_name(&self) -> &str {
        &self.spec.model_name
    }

    /// Complete a prompt: cache hit short-circuits, otherwise POST
    /// `{base_url}/chat/completions` with temperature 0 and write the result
    /// through the cache.
    pub fn complete(&self, prompt: &str) -> Result<String, ClientError> {
        let key = ScoreCache::key(&self.spec.model_name, TEMPERATURE, prompt);
        if let Some(cache) = &self.cache {
            if let Some(hit) = cache.get(&key) {
                return Ok(hit);
            }
        }
        let text = self.request_with_retries(prompt)?;
        if let Some(cache) = &self.cache {
            cache.put(&key, &text)?;
        }
        Ok(text)
    }

    fn request_with_retries(&self, prompt: &str) -> Result<String, ClientError> {
        let mut last_error = String::new();
        let attempts = self.spec.retry_budget + 1;
        for attempt in 0..attempts {
            if attempt > 0 {
                std::thread::sleep(self.backoff_base * 2u32.pow(attempt - 1));
            }
            match self.request_once(prompt) {
                Ok(text) => return Ok(text),
                Err(Retryable::No(e)) => {
                    return Err(ClientError::CallFailed {
                        attempts: attempt + 1,
                        last_error: e,
                    })
                }
                Err(Retryable::Yes(e)) => {
                    log::debug!(
                        "endpoint {} attempt {}/{attempts} failed: {e}",
                        self.spec.model_name,
                        attempt + 1
                    );
                    last_error = e;
                }
            }
        }
        Err(ClientError::CallFailed {
            attempts,
            last_error,
        })
    }

    fn request_once(&self, prompt: &str) -> Result<String, Retryable> {
        let _permit = self.permits.acquire();
        let mut messages = Vec::new();
        if let Some(system) = &self.spec.system_prompt {
            messages.push(json!({"role": "system", "content": system}));
        }
        messages.push(json!({"role": "user", "content": prompt}));
        let mut body = json!({
            "model": self.spec.model_name,
            "messages": messages,
            "temperature": TEMPERATURE,
        });
        if let Some(max_tokens) = self.spec.max_tokens {
            body["max_tokens"] = json!(max_tokens);
        }
        let url = format!("{}/chat/completions", self.spec.base_url.trim_end_matches('/'));
        let response = self
            .client
            .post(url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| Retryable::Yes(e.to_string()))?;
        let status = response.status();
        if status.is_success() {
            let parsed: ChatResponse = response
                .json()
                .map_err(|e| Retryable::No(format!("malformed response body: {e}")))?;
            parsed
                .choices
                .into_iter()
                .next()
                .map(|c| c.message.content)
                .ok_or_else(|| Retryable::No("response has no choices".into()))
        } else if status.as_u16() == 408 || status.as_u16() == 429 || status.is_server_error() {
            Err(Retryable::Yes(format!("HTTP {status}")))
        } else {
            Err(Retryable::No(format!("HTTP {status}")))
        }
    }
}

enum Retryable {
    Yes(String),
    No(String),
}

impl ensemble_core::scoring::Judge for HttpJudge {
    fn complete(&self, prompt: &str) -> ensemble_core::Result<String> {
        HttpJudge::complete(self, prompt).map_err(Into::into)
    }
}
