use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::ClientError;

/// One judge endpoint. The credential is looked up from the environment
/// variable named in `api_key_env`, never stored in config files.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EndpointSpec {
    pub base_url: String,
    pub model_name: String,
    pub api_key_env: String,
    #[serde(default = "default_max_parallel")]
    pub max_parallel: usize,
    #[serde(default = "default_timeout_secs")]
    pub timeout_secs: u64,
    #[serde(default = "default_retry_budget")]
    pub retry_budget: u32,
    /// Optional completion cap; endpoint default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_tokens: Option<u32>,
    /// Optional system prompt; none sent when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system_prompt: Option<String>,
}

fn default_max_parallel() -> usize {
    4
}

fn default_timeout_secs() -> u64 {
    120
}

fn default_retry_budget() -> u32 {
    3
}

impl EndpointSpec {
    pub fn validate(&self) -> Result<(), ClientError> {
        if self.max_parallel < 1 {
            return Err(ClientError::Config(format!(
                "endpoint {}: max_parallel must be at least 1",
                self.model_name
            )));
        }
        if self.timeout_secs == 0 {
            return Err(ClientError::Config(format!(
                "endpoint {}: timeout must be positive",
                self.model_name
            )));
        }
        if self.base_url.is_empty() {
            return Err(ClientError::Config("endpoint base_url is empty".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }
}
