use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ChatModel, ChatRequest, Completion, LlmError};

/// Unify line endings, strip trailing whitespace on every line and drop
/// trailing blank lines.
pub fn normalize(text: &str) -> String {
    let unified = text.replace("\r\n", "\n").replace('\r', "\n");
    let mut lines: Vec<&str> = unified.split('\n').map(str::trim_end).collect();
    while lines.last().is_some_and(|l| l.is_empty()) {
        lines.pop();
    }
    lines.join("\n")
}

pub fn digest(system_text: &str, user_text: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(normalize(system_text).as_bytes());
    hasher.update(b"\n\x00");
    hasher.update(normalize(user_text).as_bytes());
    hex::encode(hasher.finalize())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub digest: String,
    pub response: String,
}

/// Ordered digest → response map. Lookups never consume entries.
#[derive(Debug, Clone, Default)]
pub struct Transcript {
    entries: Vec<TranscriptEntry>,
    index: HashMap<String, usize>,
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[TranscriptEntry] {
        &self.entries
    }

    pub fn get(&self, digest: &str) -> Option<&str> {
        self.index.get(digest).map(|&i| self.entries[i].response.as_str())
    }

    pub fn contains(&self, digest: &str) -> bool {
        self.index.contains_key(digest)
    }

    /// Appends unless the digest is already present. Returns whether an entry was added.
    pub fn insert(&mut self, digest: String, response: String) -> bool {
        if self.index.contains_key(&digest) {
            return false;
        }
        self.index.insert(digest.clone(), self.entries.len());
        self.entries.push(TranscriptEntry { digest, response });
        true
    }

    /// Merges `other` into `self`, keeping existing responses on conflict.
    pub fn extend_from(&mut self, other: &Transcript) {
        for e in &other.entries {
            self.insert(e.digest.clone(), e.response.clone());
        }
    }

    /// The recorded digest sharing the longest hex prefix with `digest`.
    pub fn nearest(&self, digest: &str) -> Option<&str> {
        self.entries
            .iter()
            .map(|e| {
                let common = e
                    .digest
                    .bytes()
                    .zip(digest.bytes())
                    .take_while(|(a, b)| a == b)
                    .count();
                (common, e.digest.as_str())
            })
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(a.1)))
            .map(|(_, d)| d)
    }

    pub fn lookup(&self, req: &ChatRequest) -> Result<&str, LlmError> {
        let d = req.digest();
        self.get(&d).ok_or_else(|| LlmError::ReplayMiss {
            nearest: self.nearest(&d).map(str::to_string),
            digest: d,
        })
    }

    pub fn from_jsonl(text: &str) -> Result<Self, LlmError> {
        let mut t = Transcript::new();
        for (n, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let entry: TranscriptEntry = serde_json::from_str(line)
                .map_err(|e| LlmError::Transcript(format!("line {}: {e}", n + 1)))?;
            if !t.insert(entry.digest.clone(), entry.response) {
                return Err(LlmError::Transcript(format!(
                    "line {}: duplicate digest {}",
                    n + 1,
                    entry.digest
                )));
            }
        }
        Ok(t)
    }

    pub fn load(path: &Path) -> Result<Self, LlmError> {
        let f = fs::File::open(path)
            .map_err(|e| LlmError::Transcript(format!("{}: {e}", path.display())))?;
        let mut text = String::new();
        for line in BufReader::new(f).lines() {
            let line = line.map_err(|e| LlmError::Transcript(format!("{}: {e}", path.display())))?;
            text.push_str(&line);
            text.push('\n');
        }
        Self::from_jsonl(&text)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e).expect("transcript entries serialize"));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), LlmError> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir).map_err(|e| LlmError::Transcript(e.to_string()))?;
        }
        let mut f = fs::File::create(path)
            .map_err(|e| LlmError::Transcript(format!("{}: {e}", path.display())))?;
        f.write_all(self.to_jsonl().as_bytes())
            .map_err(|e| LlmError::Transcript(e.to_string()))
    }
}

/// Answers purely from a transcript.
#[derive(Debug, Clone)]
pub struct ReplayModel {
    transcript: Transcript,
}

impl ReplayModel {
    pub fn new(transcript: Transcript) -> Self {
        Self { transcript }
    }

    pub fn transcript(&self) -> &Transcript {
        &self.transcript
    }
}

impl ChatModel for ReplayModel {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, LlmError> {
        req.validate()?;
        self.transcript.lookup(req).map(Completion::immediate)
    }
}

/// Forwards to an inner model and records each successful exchange.
///
/// A request whose digest is already in the sink is answered from the sink,
/// so recording then replaying the same request set gives identical bytes.
pub struct RecordingModel<M> {
    inner: M,
    sink: Mutex<Transcript>,
}

impl<M: ChatModel> RecordingModel<M> {
    pub fn new(inner: M) -> Self {
        Self::with_sink(inner, Transcript::new())
    }

    pub fn with_sink(inner: M, sink: Transcript) -> Self {
        Self {
            inner,
            sink: Mutex::new(sink),
        }
    }

    pub fn snapshot(&self) -> Transcript {
        self.sink.lock().expect("transcript lock poisoned").clone()
    }

    pub fn into_transcript(self) -> Transcript {
        self.sink.into_inner().expect("transcript lock poisoned")
    }
}

impl<M: ChatModel> ChatModel for RecordingModel<M> {
    fn complete(&self, req: &ChatRequest) -> Result<Completion, LlmError> {
        req.validate()?;
        let d = req.digest();
        if let Some(hit) = self.sink.lock().expect("transcript lock poisoned").get(&d) {
            return Ok(Completion::immediate(hit));
        }
        let completion = self.inner.complete(req)?;
        self.sink
            .lock()
            .expect("transcript lock poisoned")
            .insert(d, completion.text.clone());
        Ok(completion)
    }
}
