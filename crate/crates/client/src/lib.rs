//! Wire-level client for chat-completion judge endpoints: bounded
//! concurrency, retries with exponential backoff, and a persistent
//! content-addressed completion cache.

mod cache;
mod endpoint;
mod http;
#[cfg(feature = "mock-server")]
pub mod mock;

pub use cache::ScoreCache;
pub use endpoint::EndpointSpec;
pub use http::HttpJudge;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("call failed after {attempts} attempt(s): {last_error}")]
    CallFailed { attempts: u32, last_error: String },

    #[error("cache error: {0}")]
    Cache(String),
}

impl From<ClientError> for ensemble_core::Error {
    fn from(e: ClientError) -> Self {
        match e {
            ClientError::Config(msg) => ensemble_core::Error::Config(msg),
            other => ensemble_core::Error::CallFailed(other.to_string()),
        }
    }
}
