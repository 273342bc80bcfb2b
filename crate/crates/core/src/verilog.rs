//! Minimal Verilog module-header parsing.
//!
//! Enough to read a task's interface (ANSI or non-ANSI port lists with
//! constant ranges) and to pull a module out of an LLM response.

use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Input,
    Output,
    Inout,
}

impl Direction {
    pub fn keyword(self) -> &'static str {
        match self {
            Direction::Input => "input",
            Direction::Output => "output",
            Direction::Inout => "inout",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Port {
    pub name: String,
    pub dir: Direction,
    pub msb: i64,
    pub lsb: i64,
    /// Declared with an explicit `[msb:lsb]` range.
    pub vector: bool,
    pub signed: bool,
}

impl Port {
    pub fn scalar(name: &str, dir: Direction) -> Self {
        Self {
            name: name.to_string(),
            dir,
            msb: 0,
            lsb: 0,
            vector: false,
            signed: false,
        }
    }

    pub fn vector(name: &str, dir: Direction, msb: i64, lsb: i64) -> Self {
        Self {
            name: name.to_string(),
            dir,
            msb,
            lsb,
            vector: true,
            signed: false,
        }
    }

    pub fn width(&self) -> u32 {
        ((self.msb - self.lsb).unsigned_abs() + 1) as u32
    }

    /// Index expression of the bit `k` places below the MSB.
    pub fn bit_index(&self, k: u32) -> i64 {
        if self.msb >= self.lsb {
            self.msb - k as i64
        } else {
            self.msb + k as i64
        }
    }

    pub fn range_text(&self) -> String {
        if self.vector {
            format!("[{}:{}] ", self.msb, self.lsb)
        } else {
            String::new()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModuleHeader {
    pub name: String,
    pub ports: Vec<Port>,
}

impl ModuleHeader {
    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.dir == Direction::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &Port> {
        self.ports.iter().filter(|p| p.dir == Direction::Output)
    }
}

impl fmt::Display for ModuleHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "module {}(", self.name)?;
        for (i, p) in self.ports.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{} {}{}", p.dir.keyword(), p.range_text(), p.name)?;
        }
        f.write_str(");")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HeaderError {
    #[error("no module declaration found")]
    NoModule,
    #[error("malformed port list: {0}")]
    Malformed(String),
    #[error("port {0:?} has no direction")]
    NoDirection(String),
    #[error("duplicate port {0:?}")]
    DuplicatePort(String),
}

/// Removes `//` and `/* */` comments, keeping line structure.
pub fn strip_comments(src: &str) -> String {
    let mut out = String::with_capacity(src.len());
    let b = src.as_bytes();
    let mut i = 0;
    while i < b.len() {
        if b[i] == b'/' && i + 1 < b.len() && b[i + 1] == b'/' {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
        } else if b[i] == b'/' && i + 1 < b.len() && b[i + 1] == b'*' {
            i += 2;
            while i < b.len() && !(b[i] == b'*' && i + 1 < b.len() && b[i + 1] == b'/') {
                if b[i] == b'\n' {
                    out.push('\n');
                }
                i += 1;
            }
            i = (i + 2).min(b.len());
        } else if b[i] == b'"' {
            let start = i;
            i += 1;
            while i < b.len() && b[i] != b'"' {
                if b[i] == b'\\' {
                    i += 1;
                }
                i += 1;
            }
            i = (i + 1).min(b.len());
            out.push_str(&src[start..i]);
        } else {
            let ch = src[i..].chars().next().unwrap();
            out.push(ch);
            i += ch.len_utf8();
        }
    }
    out
}

fn is_ident_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '$'
}

/// Byte offset of keyword `kw` as a whole word at or after `from`.
fn find_word(s: &str, kw: &str, from: usize) -> Option<usize> {
    let mut start = from;
    while let Some(off) = s[start..].find(kw) {
        let at = start + off;
        let before = s[..at].chars().next_back();
        let after = s[at + kw.len()..].chars().next();
        if !before.is_some_and(is_ident_char) && !after.is_some_and(is_ident_char) {
            return Some(at);
        }
        start = at + kw.len();
    }
    None
}

fn parse_range(text: &str) -> Result<(i64, i64), HeaderError> {
    let inner = text.trim().trim_start_matches('[').trim_end_matches(']');
    let (m, l) = inner
        .split_once(':')
        .ok_or_else(|| HeaderError::Malformed(format!("range {text:?}")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<i64>()
            .map_err(|_| HeaderError::Malformed(format!("non-constant range {text:?}")))
    };
    Ok((parse(m)?, parse(l)?))
}

struct Decl {
    dir: Option<Direction>,
    range: Option<(i64, i64)>,
    signed: bool,
    name: String,
}

/// Parses one comma-separated declaration item, e.g. `output reg [3:0] q`.
fn parse_decl(item: &str) -> Result<Decl, HeaderError> {
    let mut rest = item.trim();
    let mut dir = None;
    let mut range = None;
    let mut signed = false;
    loop {
        rest = rest.trim_start();
        if rest.starts_with('[') {
            let close = rest
                .find(']')
                .ok_or_else(|| HeaderError::Malformed(item.to_string()))?;
            range = Some(parse_range(&rest[..=close])?);
            rest = &rest[close + 1..];
            continue;
        }
        let word_end = rest.find(|c: char| !is_ident_char(c)).unwrap_or(rest.len());
        let word = &rest[..word_end];
        match word {
            "input" => dir = Some(Direction::Input),
            "output" => dir = Some(Direction::Output),
            "inout" => dir = Some(Direction::Inout),
            "wire" | "reg" | "logic" | "var" | "tri" | "unsigned" => {}
            "signed" => signed = true,
            "" => return Err(HeaderError::Malformed(item.to_string())),
            name => {
                let tail = rest[word_end..].trim();
                if !tail.is_empty() && !tail.starts_with('=') {
                    return Err(HeaderError::Malformed(item.to_string()));
                }
                return Ok(Decl {
                    dir,
                    range,
                    signed,
                    name: name.to_string(),
                });
            }
        }
        rest = &rest[word_end..];
    }
}

fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' | '(' | '{' => depth += 1,
            ']' | ')' | '}' => depth -= 1,
            ',' if depth == 0 => {
                parts.push(&s[start..i]);
                start = i + 1;
            }
            _ => {}
        }
    }
    parts.push(&s[start..]);
    parts
}

/// Parses the first module header in `src`.
pub fn parse_module_header(src: &str) -> Result<ModuleHeader, HeaderError> {
    let clean = strip_comments(src);
    let at = find_word(&clean, "module", 0).ok_or(HeaderError::NoModule)?;
    let after = &clean[at + "module".len()..];
    let name_start = after
        .find(|c: char| !c.is_whitespace())
        .ok_or(HeaderError::NoModule)?;
    let name_len = after[name_start..]
        .find(|c: char| !is_ident_char(c))
        .unwrap_or(after.len() - name_start);
    let name = after[name_start..name_start + name_len].to_string();
    if name.is_empty() {
        return Err(HeaderError::NoModule);
    }
    let mut rest = after[name_start + name_len..].trim_start();
    if rest.starts_with('#') {
        return Err(HeaderError::Malformed("parameterized modules are not supported".into()));
    }
    let semi = rest.find(';').ok_or_else(|| HeaderError::Malformed("missing ';'".into()))?;
    let list = if rest.starts_with('(') {
        let close = rest[..semi]
            .rfind(')')
            .ok_or_else(|| HeaderError::Malformed("unclosed port list".into()))?;
        &rest[1..close]
    } else {
        ""
    };
    rest = &rest[semi + 1..];
    let mut ports: Vec<Port> = Vec::new();
    let mut non_ansi: Vec<String> = Vec::new();
    let mut carry: Option<(Direction, Option<(i64, i64)>, bool)> = None;
    if !list.trim().is_empty() {
        for item in split_top_level(list) {
            let d = parse_decl(item)?;
            let (dir, range, signed) = match d.dir {
                Some(dir) => (dir, d.range, d.signed),
                None => match (carry, d.range) {
                    (Some((dir, r, s)), None) => (dir, r, s),
                    (Some((dir, _, s)), Some(r)) => (dir, Some(r), s),
                    (None, _) => {
                        non_ansi.push(d.name);
                        continue;
                    }
                },
            };
            carry = Some((dir, range, signed));
            ports.push(make_port(d.name, dir, range, signed));
        }
    }
    if !non_ansi.is_empty() {
        if !ports.is_empty() {
            return Err(HeaderError::Malformed("mixed ANSI and non-ANSI port list".into()));
        }
        let body_end = find_word(rest, "endmodule", 0).unwrap_or(rest.len());
        let body = &rest[..body_end];
        for stmt in body.split(';') {
            let stmt = stmt.trim();
            let first = stmt.split(|c: char| !is_ident_char(c)).next().unwrap_or("");
            if !matches!(first, "input" | "output" | "inout") {
                continue;
            }
            let mut carry: Option<(Direction, Option<(i64, i64)>, bool)> = None;
            for item in split_top_level(stmt) {
                let d = parse_decl(item)?;
                let (dir, range, signed) = match (d.dir, carry) {
                    (Some(dir), _) => (dir, d.range, d.signed),
                    (None, Some(c)) => c,
                    (None, None) => return Err(HeaderError::NoDirection(d.name)),
                };
                carry = Some((dir, range, signed));
                if non_ansi.contains(&d.name) {
                    ports.push(make_port(d.name, dir, range, signed));
                }
            }
        }
        if let Some(missing) = non_ansi.iter().find(|n| !ports.iter().any(|p| &p.name == *n)) {
            return Err(HeaderError::NoDirection(missing.clone()));
        }
        ports.sort_by_key(|p| non_ansi.iter().position(|n| *n == p.name));
    }
    for (i, p) in ports.iter().enumerate() {
        if ports[..i].iter().any(|q| q.name == p.name) {
            return Err(HeaderError::DuplicatePort(p.name.clone()));
        }
    }
    Ok(ModuleHeader { name, ports })
}

fn make_port(name: String, dir: Direction, range: Option<(i64, i64)>, signed: bool) -> Port {
    match range {
        Some((msb, lsb)) => Port {
            name,
            dir,
            msb,
            lsb,
            vector: true,
            signed,
        },
        None => Port {
            name,
            dir,
            msb: 0,
            lsb: 0,
            vector: false,
            signed,
        },
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExtractError {
    #[error("response contains no Verilog module")]
    NoModuleFound,
    #[error("response contains {0} fenced code blocks; expected one")]
    MultipleBlocks(usize),
}

/// Contents of every fenced (```) block in `text`, in order.
pub fn fenced_blocks(text: &str) -> Vec<String> {
    let mut blocks = Vec::new();
    let mut current: Option<Vec<&str>> = None;
    for line in text.lines() {
        let t = line.trim_start();
        if t.starts_with("```") {
            match current.take() {
                Some(lines) => blocks.push(lines.join("\n")),
                None => current = Some(Vec::new()),
            }
        } else if let Some(lines) = current.as_mut() {
            lines.push(line);
        }
    }
    blocks
}

/// Span from the first `module` keyword to its matching `endmodule`.
pub fn bare_module_span(text: &str) -> Option<(usize, usize)> {
    let start = find_word(text, "module", 0)?;
    let end = find_word(text, "endmodule", start)?;
    Some((start, end + "endmodule".len()))
}

/// The Verilog in an LLM response: the single fenced block, or the bare
/// `module ... endmodule` span when there is no fence.
pub fn extract_module(response: &str) -> Result<String, ExtractError> {
    let blocks = fenced_blocks(response);
    let with_module: Vec<&String> = blocks
        .iter()
        .filter(|b| find_word(b, "module", 0).is_some())
        .collect();
    match with_module.len() {
        1 => return Ok(with_module[0].trim_matches('\n').to_string() + "\n"),
        0 => {}
        n => return Err(ExtractError::MultipleBlocks(n)),
    }
    if blocks.len() == 1 && !blocks[0].trim().is_empty() {
        return Ok(blocks[0].trim_matches('\n').to_string() + "\n");
    }
    let (s, e) = bare_module_span(response).ok_or(ExtractError::NoModuleFound)?;
    Ok(response[s..e].to_string() + "\n")
}
