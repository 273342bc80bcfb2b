use std::thread;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use tracing::{debug, warn};

use super::{backoff_delay, ChatModel, ChatRequest, Completion, LlmError, ProviderConfig};

#[derive(Serialize)]
struct WireMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    temperature: f64,
    max_tokens: u32,
    messages: Vec<WireMessage<'a>>,
}

#[derive(Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(Deserialize)]
struct WireChoice {
    message: WireReply,
}

#[derive(Deserialize)]
struct WireReply {
    content: Option<String>,
}

enum Attempt {
    Done(String),
    Retry(LlmError),
    Fatal(LlmError),
}

/// OpenAI-style chat-completions client.
pub struct HttpProvider {
    cfg: ProviderConfig,
    client: reqwest::blocking::Client,
}

impl HttpProvider {
    pub fn new(cfg: ProviderConfig) -> Result<Self, LlmError> {
        cfg.validate()?;
        let client = reqwest::blocking::Client::builder()
            .timeout(cfg.request_timeout())
            .build()
            .map_err(|e| LlmError::InvalidConfig(format!("http client: {e}")))?;
        Ok(Self { cfg, client })
    }

    pub fn config(&self) -> &ProviderConfig {
        &self.cfg
    }

    fn attempt(&self, req: &ChatRequest, key: &str) -> Attempt {
        let mut messages = Vec::with_capacity(2);
        if !req.system_text.is_empty() {
            messages.push(WireMessage {
                role: "system",
                content: &req.system_text,
            });
        }
        messages.push(WireMessage {
            role: "user",
            content: &req.user_text,
        });
        let body = WireRequest {
            model: &self.cfg.model_name,
            temperature: self.cfg.temperature,
            max_tokens: self.cfg.max_output_tokens,
            messages,
        };
        let resp = match self
            .client
            .post(&self.cfg.endpoint_url)
            .bearer_auth(key)
            .json(&body)
            .send()
        {
            Ok(r) => r,
            Err(e) => {
                return Attempt::Retry(LlmError::Transport {
                    attempts: 0,
                    diagnostic: e.to_string(),
                })
            }
        };
        let status = resp.status();
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => {
                return Attempt::Retry(LlmError::Transport {
                    attempts: 0,
                    diagnostic: e.to_string(),
                })
            }
        };
        if !status.is_success() {
            let err = LlmError::Provider {
                status: Some(status.as_u16()),
                diagnostic: truncate(&text, 2048),
            };
            return if status.is_server_error() || status.as_u16() == 429 {
                Attempt::Retry(err)
            } else {
                Attempt::Fatal(err)
            };
        }
        match serde_json::from_str::<WireResponse>(&text) {
            Ok(parsed) => match parsed.choices.into_iter().next().and_then(|c| c.message.content) {
                Some(content) => Attempt::Done(content),
                None => Attempt::Fatal(LlmError::Provider {
                    status: Some(status.as_u16()),
                    diagnostic: format!("response has no completion text: {}", truncate(&text, 512)),
                }),
            },
            Err(e) => Attempt::Fatal(LlmError::Provider {
                status: Some(status.as_u16()),
                diagnostic: format!("malformed payload ({e}): {}", truncate(&text, 512)),
            }),
        }
    }
}

impl ChatModel for HttpProvider {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, LlmError> {
        req.validate()?;
        let key = std::env::var(&self.cfg.api_key_env)
            .map_err(|_| LlmError::MissingKey(self.cfg.api_key_env.clone()))?;
        let start = Instant::now();
        let mut retries = 0;
        loop {
            match self.attempt(req, &key) {
                Attempt::Done(text) => {
                    debug!(tag = %req.tag, retries, "completion received");
                    return Ok(Completion {
                        text,
                        latency: start.elapsed(),
                        retries,
                    });
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(e) => {
                    if retries >= self.cfg.max_retries {
                        return Err(match e {
                            LlmError::Transport { diagnostic, .. } => LlmError::Transport {
                                attempts: retries + 1,
                                diagnostic,
                            },
                            other => other,
                        });
                    }
                    warn!(tag = %req.tag, attempt = retries + 1, error = %e, "retrying completion");
                    thread::sleep(backoff_delay(retries));
                    retries += 1;
                }
            }
        }
    }
}

fn truncate(s: &str, max: usize) -> String {
    if s.len() <= max {
        return s.to_string();
    }
    let mut end = max;
    while !s.is_char_boundary(end) {
        end -= 1;
    }
    format!("{}...", &s[..end])
}
