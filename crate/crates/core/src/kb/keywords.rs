use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::KbError;

const BUNDLED_LEXICON: &str = include_str!("../../assets/keywords.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceKind {
    /// Natural-language design description.
    Spec,
    /// Compiler or simulator diagnostics.
    CompilerError,
}

#[derive(Debug, Clone)]
pub struct KeywordRule {
    pub keyword: String,
    pub kind: SourceKind,
    pub patterns: Vec<Regex>,
    /// A pattern match lying inside a match of one of these is ignored.
    pub exclude: Vec<Regex>,
}

impl KeywordRule {
    /// Offset of the first accepted match in `source`.
    pub fn first_match(&self, source: &str) -> Option<usize> {
        let masked: Vec<(usize, usize)> = self
            .exclude
            .iter()
            .flat_map(|x| x.find_iter(source).map(|m| (m.start(), m.end())))
            .collect();
        self.patterns
            .iter()
            .flat_map(|p| p.find_iter(source))
            .filter(|m| !masked.iter().any(|&(s, e)| s <= m.start() && m.end() <= e))
            .map(|m| m.start())
            .min()
    }
}

#[derive(Deserialize)]
struct LexiconFile {
    #[serde(default)]
    keyword: Vec<LexiconRule>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LexiconRule {
    name: String,
    kind: SourceKind,
    patterns: Vec<String>,
    #[serde(default)]
    exclude: Vec<String>,
}

/// Maps source text to knowledge-base keywords through a regex lexicon.
#[derive(Debug, Clone)]
pub struct KeywordExtractor {
    rules: Vec<KeywordRule>,
}

impl KeywordExtractor {
    pub fn new(rules: Vec<KeywordRule>) -> Self {
        Self { rules }
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self, KbError> {
        let perr = |line: usize, reason: String| KbError::Parse {
            file: origin.to_path_buf(),
            line,
            reason,
        };
        let raw: LexiconFile = toml::from_str(text).map_err(|e| {
            let line = e.span().map_or(1, |s| super::line_of(text, s.start));
            perr(line, e.message().to_string())
        })?;
        let mut rules = Vec::with_capacity(raw.keyword.len());
        let compile = |list: &[String]| -> Result<Vec<Regex>, KbError> {
            list.iter()
                .map(|p| {
                    Regex::new(p).map_err(|e| {
                        let line = text.find(p.as_str()).map_or(1, |o| super::line_of(text, o));
                        perr(line, format!("invalid pattern {p:?}: {e}"))
                    })
                })
                .collect()
        };
        for r in raw.keyword {
            rules.push(KeywordRule {
                patterns: compile(&r.patterns)?,
                exclude: compile(&r.exclude)?,
                keyword: r.name,
                kind: r.kind,
            });
        }
        Ok(Self { rules })
    }

    /// The lexicon shipped with the crate.
    pub fn bundled() -> &'static KeywordExtractor {
        static CELL: OnceLock<KeywordExtractor> = OnceLock::new();
        CELL.get_or_init(|| {
            KeywordExtractor::parse(BUNDLED_LEXICON, Path::new("keywords.toml"))
                .expect("bundled keyword lexicon is valid")
        })
    }

    pub fn rules(&self) -> &[KeywordRule] {
        &self.rules
    }

    /// Keywords of `kind` whose patterns occur in `source`, ordered by first
    /// occurrence, each reported once.
    pub fn extract(&self, source: &str, kind: SourceKind) -> Vec<String> {
        let mut found: Vec<(usize, usize, &str)> = Vec::new();
        for (rank, rule) in self.rules.iter().enumerate().filter(|(_, r)| r.kind == kind) {
            if let Some(pos) = rule.first_match(source) {
                if !found.iter().any(|(_, _, k)| *k == rule.keyword) {
                    found.push((pos, rank, rule.keyword.as_str()));
                }
            }
        }
        found.sort();
        found.into_iter().map(|(_, _, k)| k.to_string()).collect()
    }
}

/// [`KeywordExtractor::extract`] with the bundled lexicon.
pub fn extract_keywords(source: &str, kind: SourceKind) -> Vec<String> {
    KeywordExtractor::bundled().extract(source, kind)
}
