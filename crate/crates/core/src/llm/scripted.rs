use std::fmt;
use std::sync::Arc;

use super::{ChatModel, ChatRequest, Completion, LlmError, StageTag};

type Responder = Arc<dyn Fn(&ChatRequest) -> Option<String> + Send + Sync>;

/// One canned answer. Rules are tried in order; the first that answers wins.
#[derive(Clone)]
pub struct ScriptRule {
    label: String,
    responder: Responder,
}

impl fmt::Debug for ScriptRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScriptRule").field("label", &self.label).finish()
    }
}

impl ScriptRule {
    pub fn new(
        label: impl Into<String>,
        responder: impl Fn(&ChatRequest) -> Option<String> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            responder: Arc::new(responder),
        }
    }

    /// Answers every request with `text`.
    pub fn any(text: impl Into<String>) -> Self {
        let text = text.into();
        Self::new("any", move |_| Some(text.clone()))
    }

    /// Answers with the request's user text.
    pub fn echo() -> Self {
        Self::new("echo", |req| Some(req.user_text.clone()))
    }

    /// Answers requests from `tag`.
    pub fn tag(tag: StageTag, text: impl Into<String>) -> Self {
        let text = text.into();
        Self::new(format!("tag:{tag}"), move |req| (req.tag == tag).then(|| text.clone()))
    }

    /// Answers requests from `tag` whose user text contains `needle`.
    pub fn when(tag: StageTag, needle: impl Into<String>, text: impl Into<String>) -> Self {
        let needle = needle.into();
        let text = text.into();
        Self::new(format!("{tag}~{needle}"), move |req| {
            (req.tag == tag && req.user_text.contains(&needle)).then(|| text.clone())
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// Deterministic in-memory model used for authoring transcripts and tests.
#[derive(Debug, Clone, Default)]
pub struct ScriptedModel {
    rules: Vec<ScriptRule>,
}

impl ScriptedModel {
    pub fn new(rules: Vec<ScriptRule>) -> Self {
        Self { rules }
    }

    pub fn push(&mut self, rule: ScriptRule) {
        self.rules.push(rule);
    }
}

impl ChatModel for ScriptedModel {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, LlmError> {
        req.validate()?;
        self.rules
            .iter()
            .find_map(|r| (r.responder)(req))
            .map(Completion::immediate)
            .ok_or_else(|| LlmError::Provider {
                status: None,
                diagnostic: format!("no scripted response for {} request", req.tag),
            })
    }
}
