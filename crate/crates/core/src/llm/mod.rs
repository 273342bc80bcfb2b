//! Chat-completion boundary.
//!
//! Every stage of the pipeline talks to a language model through the
//! [`ChatModel`] trait. Three implementations ship with the crate:
//!
//! * [`HttpProvider`] speaks the OpenAI-style `/chat/completions` protocol.
//! * [`ReplayModel`] answers from a recorded [`Transcript`] and never touches
//!   the network.
//! * [`RecordingModel`] wraps another model and appends every successful
//!   exchange to a transcript.
//!
//! [`ScriptedModel`] answers from in-memory rules and is used to author
//! transcripts and drive unit tests.

mod http;
mod scripted;
mod transcript;

use std::fmt;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use http::HttpProvider;
pub use scripted::{ScriptRule, ScriptedModel};
pub use transcript::{digest, normalize, RecordingModel, ReplayModel, Transcript, TranscriptEntry};

/// Environment variable holding the provider secret unless configured otherwise.
pub const DEFAULT_API_KEY_ENV: &str = "RTLFORGE_API_KEY";

/// Sampling temperature used for every benchmark run.
pub const BENCH_TEMPERATURE: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub endpoint_url: String,
    /// Name of the environment variable that holds the API key. The key
    /// itself is only read when a request is sent.
    pub api_key_env: String,
    pub request_timeout_secs: f64,
    pub max_retries: u32,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            model_name: "gpt-4-turbo".to_string(),
            temperature: BENCH_TEMPERATURE,
            max_output_tokens: 4096,
            endpoint_url: "https://api.openai.com/v1/chat/completions".to_string(),
            api_key_env: DEFAULT_API_KEY_ENV.to_string(),
            request_timeout_secs: 120.0,
            max_retries: 3,
        }
    }
}

impl ProviderConfig {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidConfig(format!(
                "temperature {} outside [0, 2]",
                self.temperature
            )));
        }
        if self.max_output_tokens == 0 {
            return Err(LlmError::InvalidConfig("max_output_tokens must be positive".into()));
        }
        if self.model_name.trim().is_empty() {
            return Err(LlmError::InvalidConfig("model_name is empty".into()));
        }
        if self.api_key_env.trim().is_empty() {
            return Err(LlmError::InvalidConfig("api_key_env is empty".into()));
        }
        if self.request_timeout_secs.is_nan() || self.request_timeout_secs <= 0.0 {
            return Err(LlmError::InvalidConfig("request_timeout must be positive".into()));
        }
        Ok(())
    }

    /// Benchmark runs pin the sampling temperature.
    pub fn assert_bench_temperature(&self) -> Result<(), LlmError> {
        if (self.temperature - BENCH_TEMPERATURE).abs() > f64::EPSILON {
            return Err(LlmError::InvalidConfig(format!(
                "benchmark runs require temperature {BENCH_TEMPERATURE}, got {}",
                self.temperature
            )));
        }
        Ok(())
    }

    pub fn request_timeout(&self) -> Duration {
        Duration::from_secs_f64(self.request_timeout_secs)
    }
}

/// Pipeline stage that issued a request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageTag {
    Refine,
    Generate,
    MmdConvert,
    RagFix,
    Localize,
    Correct,
}

impl StageTag {
    pub const ALL: [StageTag; 6] = [
        StageTag::Refine,
        StageTag::Generate,
        StageTag::MmdConvert,
        StageTag::RagFix,
        StageTag::Localize,
        StageTag::Correct,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            StageTag::Refine => "refine",
            StageTag::Generate => "generate",
            StageTag::MmdConvert => "mmd_convert",
            StageTag::RagFix => "rag_fix",
            StageTag::Localize => "localize",
            StageTag::Correct => "correct",
        }
    }
}

impl fmt::Display for StageTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_text: String,
    pub user_text: String,
    pub tag: StageTag,
}

impl ChatRequest {
    pub fn new(tag: StageTag, system_text: impl Into<String>, user_text: impl Into<String>) -> Self {
        Self {
            system_text: system_text.into(),
            user_text: user_text.into(),
            tag,
        }
    }

    pub fn validate(&self) -> Result<(), LlmError> {
        if self.user_text.trim().is_empty() {
            return Err(LlmError::InvalidRequest("user_text is empty".into()));
        }
        Ok(())
    }

    /// Hex SHA-256 of the normalized request.
    pub fn digest(&self) -> String {
        digest(&self.system_text, &self.user_text)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Completion {
    pub text: String,
    pub latency: Duration,
    pub retries: u32,
}

impl Completion {
    pub fn immediate(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            latency: Duration::ZERO,
            retries: 0,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("invalid provider config: {0}")]
    InvalidConfig(String),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("missing API key: environment variable {0} is not set")]
    MissingKey(String),
    #[error("transport error after {attempts} attempt(s): {diagnostic}")]
    Transport { attempts: u32, diagnostic: String },
    #[error("provider error (status {status:?}): {diagnostic}")]
    Provider { status: Option<u16>, diagnostic: String },
    #[error("replay miss for digest {digest} (nearest recorded digest: {nearest:?})")]
    ReplayMiss { digest: String, nearest: Option<String> },
    #[error("transcript error: {0}")]
    Transcript(String),
}

/// Digests of one request/response pair, as kept in pipeline traces.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub tag: StageTag,
    pub prompt_digest: String,
    pub response_digest: String,
}

impl Exchange {
    pub fn new(req: &ChatRequest, response: &str) -> Self {
        Self {
            tag: req.tag,
            prompt_digest: req.digest(),
            response_digest: digest("", response),
        }
    }
}

/// Sends `req` and returns the response text with its [`Exchange`] record.
pub fn exchange(llm: &dyn ChatModel, req: &ChatRequest) -> Result<(String, Exchange), LlmError> {
    let c = llm.complete(req)?;
    let ex = Exchange::new(req, &c.text);
    Ok((c.text, ex))
}

pub trait ChatModel: Send + Sync {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, LlmError>;
}

impl<M: ChatModel + ?Sized> ChatModel for &M {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, LlmError> {
        (**self).complete(req)
    }
}

impl<M: ChatModel + ?Sized> ChatModel for Box<M> {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, LlmError> {
        (**self).complete(req)
    }
}

impl<M: ChatModel + ?Sized> ChatModel for std::sync::Arc<M> {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, LlmError> {
        (**self).complete(req)
    }
}

/// Backoff before retry number `attempt` (0-based): 0.5 s doubling, capped at 8 s.
pub fn backoff_delay(attempt: u32) -> Duration {
    let secs = 0.5 * 2f64.powi(attempt.min(16) as i32);
    Duration::from_secs_f64(secs.min(8.0))
}
