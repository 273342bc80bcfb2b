//! Circuit-design and RTL-programming knowledge base.
//!
//! Entries live one per file under `kb/<category>/<id>.entry` (TOML). An
//! optional `kb/vectors.jsonl` sidecar carries precomputed embeddings. The
//! base answers semantic queries (stored vectors, or a term-frequency cosine
//! fallback that needs no model) and keyword queries matched through each
//! entry's regular expressions.

mod keywords;
mod lexical;

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use regex::Regex;
use serde::{Deserialize, Serialize};

pub use keywords::{extract_keywords, KeywordExtractor, KeywordRule, SourceKind};
pub use lexical::{cosine_sparse, term_frequencies, tokenize};

/// Retrieval depth used at generation and correction time.
pub const DEFAULT_TOP_K: usize = 3;

/// Character budget for assembled prompt context.
pub const DEFAULT_CONTEXT_BUDGET: usize = 6000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Arithmetic,
    Memory,
    Control,
    Miscellaneous,
    RtlSyntax,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Arithmetic => "arithmetic",
            Category::Memory => "memory",
            Category::Control => "control",
            Category::Miscellaneous => "miscellaneous",
            Category::RtlSyntax => "rtl_syntax",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EntryFile {
    id: String,
    keyword: String,
    category: Category,
    description: String,
    #[serde(default)]
    example: String,
    #[serde(default)]
    patterns: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct KnowledgeEntry {
    pub id: String,
    pub keyword: String,
    pub category: Category,
    pub description: String,
    pub example_code: String,
    pub patterns: Vec<Regex>,
}

impl KnowledgeEntry {
    pub fn matches_keyword(&self, keyword: &str) -> bool {
        self.patterns.iter().any(|p| p.is_match(keyword))
    }

    /// Text used by the lexical retriever.
    pub fn search_text(&self) -> String {
        format!("{} {}", self.keyword, self.description)
    }

    pub fn render(&self) -> String {
        let mut out = format!(
            "### {} ({})\n{}\n",
            self.keyword,
            self.category,
            self.description.trim()
        );
        if !self.example_code.trim().is_empty() {
            out.push_str("Example:\n");
            out.push_str(self.example_code.trim_end());
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrievalMethod {
    Semantic,
    Keyword,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub entry_id: String,
    pub score: f64,
    pub method: RetrievalMethod,
}

#[derive(Debug, thiserror::Error)]
pub enum KbError {
    #[error("{}:{line}: {reason}", file.display())]
    Parse {
        file: PathBuf,
        line: usize,
        reason: String,
    },
    #[error("duplicate knowledge entry id {id:?} ({} and {})", first.display(), second.display())]
    DuplicateId {
        id: String,
        first: PathBuf,
        second: PathBuf,
    },
    #[error("vector sidecar: {0}")]
    Vectors(String),
    #[error("embedding dimension {got} does not match stored dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("knowledge base has no stored vectors; use the lexical retriever")]
    NoVectors,
    #[error("unknown knowledge entry id {0:?}")]
    UnknownId(String),
    #[error("io error on {}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Maps text to a dense vector. Production deployments plug in a real
/// embedding model; stored sidecar vectors must come from the same model.
pub trait Embedder: Send + Sync {
    fn embed(&self, text: &str) -> Vec<f64>;
}

impl<F> Embedder for F
where
    F: Fn(&str) -> Vec<f64> + Send + Sync,
{
    fn embed(&self, text: &str) -> Vec<f64> {
        self(text)
    }
}

#[derive(Debug, Clone, Default)]
pub struct KnowledgeBase {
    entries: Vec<KnowledgeEntry>,
    vectors: Option<BTreeMap<String, Vec<f64>>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssembledContext {
    pub text: String,
    pub truncated: bool,
    pub included: Vec<String>,
}

impl KnowledgeBase {
    pub fn from_entries(mut entries: Vec<KnowledgeEntry>) -> Result<Self, KbError> {
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        for w in entries.windows(2) {
            if w[0].id == w[1].id {
                return Err(KbError::DuplicateId {
                    id: w[0].id.clone(),
                    first: PathBuf::new(),
                    second: PathBuf::new(),
                });
            }
        }
        Ok(Self {
            entries,
            vectors: None,
        })
    }

    pub fn with_vectors(mut self, vectors: BTreeMap<String, Vec<f64>>) -> Result<Self, KbError> {
        let mut dim = None;
        let mut unit = BTreeMap::new();
        for (id, v) in vectors {
            if self.get(&id).is_none() {
                return Err(KbError::Vectors(format!("vector for unknown id {id:?}")));
            }
            match dim {
                None => dim = Some(v.len()),
                Some(d) if d != v.len() => {
                    return Err(KbError::Vectors(format!(
                        "vector for {id:?} has dimension {}, expected {d}",
                        v.len()
                    )))
                }
                _ => {}
            }
            unit.insert(id, unit_normalize(v));
        }
        if let Some(missing) = self.entries.iter().find(|e| !unit.contains_key(&e.id)) {
            return Err(KbError::Vectors(format!("no vector for entry {:?}", missing.id)));
        }
        self.vectors = Some(unit);
        Ok(self)
    }

    /// Loads every `<category>/<id>.entry` file under `dir`, plus `vectors.jsonl` if present.
    pub fn load(dir: &Path) -> Result<Self, KbError> {
        let mut files = Vec::new();
        collect_entry_files(dir, &mut files)?;
        files.sort();
        let mut entries: Vec<(KnowledgeEntry, PathBuf)> = Vec::with_capacity(files.len());
        for path in files {
            let entry = parse_entry_file(&path)?;
            if let Some((_, first)) = entries.iter().find(|(e, _)| e.id == entry.id) {
                return Err(KbError::DuplicateId {
                    id: entry.id,
                    first: first.clone(),
                    second: path,
                });
            }
            entries.push((entry, path));
        }
        let mut kb = Self::from_entries(entries.into_iter().map(|(e, _)| e).collect())?;
        let sidecar = dir.join("vectors.jsonl");
        if sidecar.is_file() {
            let text = fs::read_to_string(&sidecar).map_err(|source| KbError::Io {
                path: sidecar.clone(),
                source,
            })?;
            kb = kb.with_vectors(parse_vectors(&text)?)?;
        }
        Ok(kb)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[KnowledgeEntry] {
        &self.entries
    }

    pub fn has_vectors(&self) -> bool {
        self.vectors.is_some()
    }

    pub fn get(&self, id: &str) -> Option<&KnowledgeEntry> {
        self.entries
            .binary_search_by(|e| e.id.as_str().cmp(id))
            .ok()
            .map(|i| &self.entries[i])
    }

    /// Top-`k` entries by cosine similarity to `query`.
    ///
    /// With an embedder the stored sidecar vectors are used; without one the
    /// term-frequency cosine over each entry's keyword and description is used.
    pub fn search_semantic(
        &self,
        query: &str,
        k: usize,
        embedder: Option<&dyn Embedder>,
    ) -> Result<Vec<RetrievalHit>, KbError> {
        let mut scored: Vec<(f64, &str)> = match embedder {
            Some(embed) => {
                let vectors = self.vectors.as_ref().ok_or(KbError::NoVectors)?;
                let q = unit_normalize(embed.embed(query));
                let expected = vectors.values().next().map_or(q.len(), Vec::len);
                if q.len() != expected {
                    return Err(KbError::DimensionMismatch {
                        expected,
                        got: q.len(),
                    });
                }
                self.entries
                    .iter()
                    .map(|e| (dot(&q, &vectors[&e.id]), e.id.as_str()))
                    .collect()
            }
            None => {
                let q = term_frequencies(query);
                self.entries
                    .iter()
                    .map(|e| (cosine_sparse(&q, &term_frequencies(&e.search_text())), e.id.as_str()))
                    .collect()
            }
        };
        rank(&mut scored);
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(score, id)| RetrievalHit {
                entry_id: id.to_string(),
                score,
                method: RetrievalMethod::Semantic,
            })
            .collect())
    }

    /// Entries with at least one pattern matching at least one keyword, in id order.
    pub fn search_keyword<S: AsRef<str>>(&self, keywords: &[S]) -> Vec<RetrievalHit> {
        self.entries
            .iter()
            .filter(|e| keywords.iter().any(|k| e.matches_keyword(k.as_ref())))
            .map(|e| RetrievalHit {
                entry_id: e.id.clone(),
                score: 1.0,
                method: RetrievalMethod::Keyword,
            })
            .collect()
    }

    /// Renders hit entries in order, once each, stopping before the first
    /// entry that would push the text past `budget_chars`.
    pub fn assemble_context(
        &self,
        hits: &[RetrievalHit],
        budget_chars: usize,
    ) -> Result<AssembledContext, KbError> {
        let mut seen = HashSet::new();
        let mut text = String::new();
        let mut used = 0usize;
        let mut included = Vec::new();
        let mut truncated = false;
        for hit in hits {
            let entry = self
                .get(&hit.entry_id)
                .ok_or_else(|| KbError::UnknownId(hit.entry_id.clone()))?;
            if !seen.insert(entry.id.as_str()) || truncated {
                continue;
            }
            let block = entry.render();
            let sep = if text.is_empty() { 0 } else { 1 };
            let block_len = block.chars().count();
            if used + sep + block_len > budget_chars {
                truncated = true;
                continue;
            }
            if sep == 1 {
                text.push('\n');
            }
            text.push_str(&block);
            used += sep + block_len;
            included.push(entry.id.clone());
        }
        Ok(AssembledContext {
            text,
            truncated,
            included,
        })
    }
}

fn rank(scored: &mut [(f64, &str)]) {
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn unit_normalize(mut v: Vec<f64>) -> Vec<f64> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    v
}

fn collect_entry_files(dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), KbError> {
    let read = fs::read_dir(dir).map_err(|source| KbError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for item in read {
        let item = item.map_err(|source| KbError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let path = item.path();
        if path.is_dir() {
            collect_entry_files(&path, out)?;
        } else if path.extension().is_some_and(|e| e == "entry") {
            out.push(path);
        }
    }
    Ok(())
}

fn line_of(text: &str, byte_offset: usize) -> usize {
    text[..byte_offset.min(text.len())].matches('\n').count() + 1
}

fn parse_entry_file(path: &Path) -> Result<KnowledgeEntry, KbError> {
    let text = fs::read_to_string(path).map_err(|source| KbError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_entry(&text, path)
}

/// Parses one entry; `path` is used for diagnostics and layout checks.
pub fn parse_entry(text: &str, path: &Path) -> Result<KnowledgeEntry, KbError> {
    let perr = |line: usize, reason: String| KbError::Parse {
        file: path.to_path_buf(),
        line,
        reason,
    };
    let raw: EntryFile = toml::from_str(text).map_err(|e| {
        let line = e.span().map_or(1, |s| line_of(text, s.start));
        perr(line, e.message().to_string())
    })?;
    if raw.id.trim().is_empty() {
        return Err(perr(1, "id is empty".into()));
    }
    if raw.keyword.trim().is_empty() {
        return Err(perr(1, "keyword is empty".into()));
    }
    if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
        if !stem.is_empty() && stem != raw.id {
            return Err(perr(1, format!("file name {stem:?} does not match id {:?}", raw.id)));
        }
    }
    if let Some(dir) = path.parent().and_then(|p| p.file_name()).and_then(|s| s.to_str()) {
        let is_category_dir = ["arithmetic", "memory", "control", "miscellaneous", "rtl_syntax"].contains(&dir);
        if is_category_dir && dir != raw.category.as_str() {
            return Err(perr(
                1,
                format!("entry category {} stored under {dir}/", raw.category),
            ));
        }
    }
    let mut patterns = Vec::with_capacity(raw.patterns.len());
    for p in &raw.patterns {
        let re = Regex::new(p).map_err(|e| {
            let line = text.find(p.as_str()).map_or(1, |off| line_of(text, off));
            perr(line, format!("invalid pattern {p:?}: {e}"))
        })?;
        patterns.push(re);
    }
    Ok(KnowledgeEntry {
        id: raw.id,
        keyword: raw.keyword,
        category: raw.category,
        description: raw.description,
        example_code: raw.example,
        patterns,
    })
}

#[derive(Deserialize)]
struct VectorLine {
    id: String,
    vector: Vec<f64>,
}

fn parse_vectors(text: &str) -> Result<BTreeMap<String, Vec<f64>>, KbError> {
    let mut out = BTreeMap::new();
    for (n, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: VectorLine = serde_json::from_str(line)
            .map_err(|e| KbError::Vectors(format!("line {}: {e}", n + 1)))?;
        if out.insert(v.id.clone(), v.vector).is_some() {
            return Err(KbError::Vectors(format!("line {}: second vector for {:?}", n + 1, v.id)));
        }
    }
    Ok(out)
}

/// Path of the knowledge base shipped with this crate.
pub fn bundled_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets").join("kb")
}
