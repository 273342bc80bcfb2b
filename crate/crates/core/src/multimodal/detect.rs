//! Locates multimodal blocks inside free-form descriptions.

use std::ops::Range;

use super::fsm::{is_current_state_header, is_next_state_header};
use super::grid::{is_separator_row, split_row};
use super::waveform::{is_clock_name, is_time_name, is_value_token, looks_like_waveform};
use super::{convert, BlockKind, MultimodalBlock};

struct Line<'a> {
    text: &'a str,
    start: usize,
    end: usize,
}

fn lines_with_offsets(text: &str) -> Vec<Line<'_>> {
    let mut out = Vec::new();
    let mut start = 0;
    for piece in text.split_inclusive('\n') {
        let body = piece.trim_end_matches(['\n', '\r']);
        out.push(Line {
            text: body,
            start,
            end: start + body.len(),
        });
        start += piece.len();
    }
    out
}

fn is_directive(line: &str) -> bool {
    let Some((k, v)) = line.split_once(':') else { return false };
    let k = k.trim().to_ascii_lowercase();
    matches!(k.as_str(), "reset" | "clock" | "outputs" | "output" | "inputs")
        && !v.trim().is_empty()
        && !v.split_whitespace().all(is_value_token)
}

fn is_canonical_header(line: &str) -> bool {
    let t = line.trim_start().to_ascii_uppercase();
    t.starts_with("TRUTH TABLE(") || t.starts_with("TRUTH TABLE (") || t.starts_with("STATE MACHINE(") || t.starts_with("STATE MACHINE (")
}

fn classify_grid(lines: &[&str]) -> BlockKind {
    let header = lines
        .iter()
        .filter(|l| l.contains('|'))
        .map(|l| split_row(l))
        .find(|cells| !is_separator_row(cells))
        .unwrap_or_default();
    let names: Vec<String> = header.iter().map(|c| c.to_ascii_lowercase()).collect();
    if header.first().is_some_and(|c| c.contains('\\')) {
        BlockKind::Kmap
    } else if header.iter().any(|c| is_current_state_header(c)) && header.iter().any(|c| is_next_state_header(c)) {
        BlockKind::StateTable
    } else if names.iter().any(|n| is_time_name(n)) || names.iter().any(|n| is_clock_name(n)) && looks_like_waveform(lines) {
        BlockKind::Waveform
    } else {
        BlockKind::TruthTable
    }
}

fn block(text: &str, kind: BlockKind, span: Range<usize>) -> MultimodalBlock {
    MultimodalBlock {
        kind,
        raw: text[span.clone()].to_string(),
        span,
    }
}

/// Wave candidates: row-layout signal lines, bare sample lines and directives.
fn is_wave_line(line: &str) -> bool {
    let t = line.trim();
    if t.is_empty() || t.contains('|') {
        return false;
    }
    if is_directive(t) {
        return true;
    }
    let toks: Vec<&str> = t.split(|c: char| c.is_whitespace() || c == ',' || c == ':').filter(|s| !s.is_empty()).collect();
    if toks.iter().all(|s| is_value_token(s)) {
        return true;
    }
    toks.len() >= 3 && toks[1..].iter().filter(|s| !s.starts_with('(')).all(|s| is_value_token(s))
}

fn is_header_line(line: &str) -> bool {
    let toks: Vec<&str> = line.split_whitespace().collect();
    toks.len() >= 2
        && toks.iter().any(|t| is_time_name(t) || is_clock_name(t))
        && toks.iter().all(|t| t.chars().all(|c| c.is_ascii_alphanumeric() || "_[]:()".contains(c)))
}

/// Finds K-maps, truth tables, state tables and waveforms in `text`.
///
/// Spans are byte offsets covering whole lines without the final newline.
/// Blocks that fail to parse are omitted.
pub fn detect(text: &str) -> Vec<MultimodalBlock> {
    let lines = lines_with_offsets(text);
    let mut out = Vec::new();
    let mut i = 0;
    while i < lines.len() {
        let l = lines[i].text;
        if is_canonical_header(l) {
            let mut j = i + 1;
            while j < lines.len() && !lines[j].text.trim().is_empty() && !is_canonical_header(lines[j].text) {
                j += 1;
            }
            let kind = if l.trim_start().to_ascii_uppercase().starts_with("TRUTH") {
                BlockKind::TruthTable
            } else {
                BlockKind::StateTable
            };
            let b = block(text, kind, lines[i].start..lines[j - 1].end);
            if convert(&b).is_ok() {
                out.push(b);
            }
            i = j;
            continue;
        }
        if l.contains('|') {
            let mut j = i;
            while j < lines.len() && lines[j].text.contains('|') {
                j += 1;
            }
            let mut s = i;
            while s > 0 && is_directive(lines[s - 1].text) && out.last().is_none_or(|b: &MultimodalBlock| b.span.end < lines[s - 1].start) {
                s -= 1;
            }
            let raw: Vec<&str> = lines[s..j].iter().map(|l| l.text).collect();
            let kind = classify_grid(&raw);
            let b = block(text, kind, lines[s].start..lines[j - 1].end);
            if convert(&b).is_ok() {
                out.push(b);
            }
            i = j;
            continue;
        }
        if is_wave_line(l) || (is_header_line(l) && lines.get(i + 1).is_some_and(|n| is_wave_line(n.text))) {
            let mut j = i + 1;
            while j < lines.len() && is_wave_line(lines[j].text) {
                j += 1;
            }
            let raw: Vec<&str> = lines[i..j].iter().map(|l| l.text.trim()).collect();
            if looks_like_waveform(&raw) {
                let b = block(text, BlockKind::Waveform, lines[i].start..lines[j - 1].end);
                if convert(&b).is_ok() {
                    out.push(b);
                    i = j;
                    continue;
                }
            }
        }
        i += 1;
    }
    out
}
