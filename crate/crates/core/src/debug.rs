//! Two-stage repair: localize the faulty statements from a simulation
//! report, then ask for a corrected module, repeated under an iteration cap.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::kb::{KnowledgeBase, DEFAULT_CONTEXT_BUDGET};
use crate::llm::{exchange, ChatModel, ChatRequest, Exchange, LlmError, StageTag};
use crate::sim::{error_keywords, SimStatus, SimulationReport};
use crate::verilog::fenced_blocks;

/// Iteration cap used by the benchmark.
pub const DEFAULT_MAX_ITER: usize = 10;
/// Specifications longer than this are cut down to their most relevant paragraphs.
pub const LONG_SPEC_CHARS: usize = 2000;
pub const SPEC_CHUNKS: usize = 3;
const MISMATCH_LINES_IN_PROMPT: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateLine {
    pub line: usize,
    pub statement: String,
    pub rationale: String,
}

/// Suspect lines, most likely first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Localization {
    pub candidates: Vec<CandidateLine>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebugIteration {
    pub index: usize,
    pub report_before: SimulationReport,
    pub localization: Option<Localization>,
    pub revised_code: String,
    pub report_after: SimulationReport,
    pub exchanges: Vec<Exchange>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DebugOutcome {
    Fixed,
    Exhausted,
    Stagnated,
}

impl DebugOutcome {
    pub fn as_str(self) -> &'static str {
        match self {
            DebugOutcome::Fixed => "fixed",
            DebugOutcome::Exhausted => "exhausted",
            DebugOutcome::Stagnated => "stagnated",
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DebugError {
    #[error("format error: {0}")]
    Format(String),
    #[error("line {line} is outside the {lines}-line candidate")]
    LineOutOfRange { line: usize, lines: usize },
    #[error("report status {0} cannot be debugged")]
    WrongStatus(&'static str),
    #[error("max_iter must be at least 1")]
    ZeroIterations,
    #[error(transparent)]
    Llm(#[from] LlmError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DebugRun {
    pub final_code: String,
    pub iterations: Vec<DebugIteration>,
    pub outcome: DebugOutcome,
}

/// A loop stopped by an LLM or toolchain failure, with the iterations
/// completed before it.
#[derive(Debug, thiserror::Error)]
#[error("debug loop aborted after {} iteration(s): {error}", .iterations.len())]
pub struct DebugAbort {
    pub error: DebugError,
    pub iterations: Vec<DebugIteration>,
    pub last_code: String,
}

pub fn number_lines(code: &str) -> String {
    let lines: Vec<&str> = code.lines().collect();
    let w = lines.len().max(1).to_string().len();
    lines
        .iter()
        .enumerate()
        .map(|(i, l)| format!("{:>w$} | {l}\n", i + 1))
        .collect()
}

fn report_section(report: &SimulationReport) -> String {
    let mut s = format!("Simulation result: {}\n", report.summary());
    if !report.compile_messages.is_empty() {
        s.push_str("Compiler messages:\n");
        for m in &report.compile_messages {
            s.push_str(&format!("  {}\n", m.render()));
        }
    }
    if let Some(f) = &report.first_failure {
        s.push_str(&format!(
            "Earliest failing sample: time {}, signal {}, expected {}, got {}\n",
            f.time_label, f.signal, f.expected, f.got
        ));
    }
    if report.compile_messages.is_empty() {
        // only the testbench protocol lines: simulator banners carry timings
        let lines: Vec<&str> = report
            .raw_excerpt
            .lines()
            .filter(|l| l.starts_with("MISMATCH") || l.starts_with("Mismatches:"))
            .take(MISMATCH_LINES_IN_PROMPT)
            .collect();
        if !lines.is_empty() {
            s.push_str(&format!("Testbench output:\n{}\n", lines.join("\n")));
        }
    }
    s
}

const LOCALIZE_SYSTEM: &str = "You are a Verilog debugging expert. A design failed its testbench. \
Analyze the simulation result and pinpoint the statements most likely responsible for the failure.\n\
Answer with one line per suspect statement, most likely first, in the form\n\
LINE <n>: <reason>\n\
where <n> is the line number shown in the listing. Do not write any code.";

const CORRECT_SYSTEM: &str = "You are a Verilog expert repairing a design that fails its testbench. \
Reason step by step about how the suspect statements produce the failing behaviour and what the \
specification requires instead. Then give the complete corrected module in exactly one ```verilog fenced \
code block. Keep the module name and ports unchanged.";

pub fn localize_request(spec: &str, code: &str, report: &SimulationReport, kb_context: &str) -> ChatRequest {
    let mut user = format!(
        "Design specification:\n{}\n\nCandidate code:\n{}\n{}",
        spec.trim_end(),
        number_lines(code),
        report_section(report)
    );
    if !kb_context.trim().is_empty() {
        user.push_str(&format!("\nRelevant Verilog knowledge:\n{}\n", kb_context.trim_end()));
    }
    ChatRequest::new(StageTag::Localize, LOCALIZE_SYSTEM, user)
}

fn line_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^[\s*\-#>`]*LINE\s+(\d+)\s*[:\-]\s*(.*?)[\s*`]*$").unwrap())
}

/// Parses `LINE <n>: <reason>` lines against the candidate code.
pub fn parse_localization(code: &str, response: &str) -> Result<Localization, DebugError> {
    let lines: Vec<&str> = code.lines().collect();
    let mut candidates: Vec<CandidateLine> = Vec::new();
    for l in response.lines() {
        let Some(c) = line_re().captures(l) else { continue };
        let n: usize = c[1].parse().unwrap_or(0);
        if n == 0 || n > lines.len() {
            return Err(DebugError::LineOutOfRange { line: n, lines: lines.len() });
        }
        if candidates.iter().any(|k| k.line == n) {
            continue;
        }
        candidates.push(CandidateLine {
            line: n,
            statement: lines[n - 1].trim().to_string(),
            rationale: c[2].to_string(),
        });
    }
    if candidates.is_empty() {
        return Err(DebugError::Format("no LINE <n>: <reason> lines in the response".into()));
    }
    Ok(Localization { candidates })
}

pub fn localize(
    spec: &str,
    code: &str,
    report: &SimulationReport,
    kb_context: &str,
    llm: &dyn ChatModel,
) -> Result<Localization, DebugError> {
    if !matches!(report.status, SimStatus::CompileError | SimStatus::SimFailure) && !report.timed_out {
        return Err(DebugError::WrongStatus(report.status.as_str()));
    }
    let c = llm.complete(&localize_request(spec, code, report, kb_context))?;
    parse_localization(code, &c.text)
}

const VERILOG_WORDS: &[&str] = &[
    "always", "and", "assign", "begin", "case", "casez", "casex", "default", "else", "end", "endcase",
    "endmodule", "for", "if", "initial", "input", "inout", "integer", "localparam", "module", "negedge",
    "or", "output", "parameter", "posedge", "reg", "signed", "wire", "logic", "not", "the", "a", "to",
];

fn identifiers(text: &str) -> BTreeSet<String> {
    static RE: OnceLock<Regex> = OnceLock::new();
    let re = RE.get_or_init(|| Regex::new(r"[A-Za-z_][A-Za-z0-9_]*").unwrap());
    re.find_iter(text)
        .map(|m| m.as_str().to_string())
        .filter(|w| !VERILOG_WORDS.contains(&w.to_ascii_lowercase().as_str()))
        .collect()
}

/// The paragraphs of a long specification sharing the most signal names
/// with `focus`, in original order. Short specifications are returned whole.
pub fn relevant_spec(spec: &str, focus: &str) -> String {
    if spec.chars().count() <= LONG_SPEC_CHARS {
        return spec.to_string();
    }
    let chunks: Vec<&str> = spec.split("\n\n").map(str::trim).filter(|c| !c.is_empty()).collect();
    let signals = identifiers(focus);
    let mut scored: Vec<(usize, usize)> = chunks
        .iter()
        .enumerate()
        .map(|(i, c)| (identifiers(c).intersection(&signals).count(), i))
        .collect();
    scored.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut keep: Vec<usize> = scored.iter().take(SPEC_CHUNKS).map(|s| s.1).collect();
    keep.sort_unstable();
    keep.iter().map(|&i| chunks[i]).collect::<Vec<_>>().join("\n\n")
}

pub fn correct_request(
    spec: &str,
    code: &str,
    loc: Option<&Localization>,
    report: &SimulationReport,
) -> ChatRequest {
    let mut focus = String::new();
    if let Some(l) = loc {
        for c in &l.candidates {
            focus.push_str(&c.statement);
            focus.push('\n');
        }
    }
    if let Some(f) = &report.first_failure {
        focus.push_str(&f.signal);
    }
    let spec_text = relevant_spec(spec, &focus);
    let heading = if spec_text.len() < spec.len() { "Relevant parts of the design specification" } else { "Design specification" };
    let mut user = format!(
        "{heading}:\n{}\n\nCurrent code:\n```verilog\n{}\n```\n\n{}",
        spec_text.trim_end(),
        code.trim_end(),
        report_section(report)
    );
    if let Some(l) = loc {
        user.push_str("\nSuspect statements:\n");
        for c in &l.candidates {
            user.push_str(&format!("- line {}: `{}` ({})\n", c.line, c.statement, c.rationale));
        }
    }
    ChatRequest::new(StageTag::Correct, CORRECT_SYSTEM, user)
}

/// The single fenced code block of a correction reply, verbatim.
pub fn parse_correction(response: &str) -> Result<String, DebugError> {
    let blocks = fenced_blocks(response);
    match blocks.len() {
        1 if !blocks[0].trim().is_empty() => Ok(blocks[0].trim_matches('\n').to_string() + "\n"),
        1 => Err(DebugError::Format("the code block is empty".into())),
        n => Err(DebugError::Format(format!("expected exactly one fenced code block, found {n}"))),
    }
}

pub fn correct(
    spec: &str,
    code: &str,
    loc: Option<&Localization>,
    report: &SimulationReport,
    llm: &dyn ChatModel,
) -> Result<String, DebugError> {
    let c = llm.complete(&correct_request(spec, code, loc, report))?;
    parse_correction(&c.text)
}

/// Knowledge entries matching the compiler errors in `report`, rendered.
pub fn error_context(report: &SimulationReport, kb: Option<&KnowledgeBase>) -> String {
    let (Some(kb), Ok(words)) = (kb, error_keywords(report)) else { return String::new() };
    let hits = kb.search_keyword(&words);
    kb.assemble_context(&hits, DEFAULT_CONTEXT_BUDGET)
        .map(|c| c.text)
        .unwrap_or_default()
}

/// Runs localize/correct rounds until the design passes, `max_iter` rounds
/// have run, or two consecutive rounds leave both code and mismatch count
/// unchanged.
///
/// `report` is the verdict for `code`; `evaluate` simulates a revision.
pub fn debug_loop(
    spec: &str,
    code: &str,
    report: SimulationReport,
    evaluate: &dyn Fn(&str) -> SimulationReport,
    llm: &dyn ChatModel,
    kb: Option<&KnowledgeBase>,
    max_iter: usize,
) -> Result<DebugRun, DebugAbort> {
    let mut code = code.to_string();
    let mut report = report;
    let mut iterations: Vec<DebugIteration> = Vec::new();
    let abort = |error: DebugError, iterations: Vec<DebugIteration>, code: &str| DebugAbort {
        error,
        iterations,
        last_code: code.to_string(),
    };
    if max_iter == 0 {
        return Err(abort(DebugError::ZeroIterations, iterations, &code));
    }
    if report.passed() {
        return Ok(DebugRun {
            final_code: code,
            iterations,
            outcome: DebugOutcome::Fixed,
        });
    }
    let mut idle_rounds = 0;
    for index in 1..=max_iter {
        if !report.repairable() {
            return Err(abort(DebugError::WrongStatus(report.status.as_str()), iterations, &code));
        }
        let mut notes = Vec::new();
        let mut exchanges = Vec::new();
        let kb_context = error_context(&report, kb);
        let req = localize_request(spec, &code, &report, &kb_context);
        let (text, ex) = match exchange(llm, &req) {
            Ok(r) => r,
            Err(e) => return Err(abort(e.into(), iterations, &code)),
        };
        exchanges.push(ex);
        let localization = match parse_localization(&code, &text) {
            Ok(l) => Some(l),
            Err(e) => {
                notes.push(format!("localization ignored: {e}"));
                None
            }
        };
        let req = correct_request(spec, &code, localization.as_ref(), &report);
        let (text, ex) = match exchange(llm, &req) {
            Ok(r) => r,
            Err(e) => return Err(abort(e.into(), iterations, &code)),
        };
        exchanges.push(ex);
        let revised = match parse_correction(&text) {
            Ok(c) => c,
            Err(e) => {
                notes.push(format!("correction rejected, code kept: {e}"));
                code.clone()
            }
        };
        let unchanged = revised == code;
        let after = if unchanged { report.clone() } else { evaluate(&revised) };
        idle_rounds = if unchanged && after.mismatch_count == report.mismatch_count { idle_rounds + 1 } else { 0 };
        let passed = after.passed();
        iterations.push(DebugIteration {
            index,
            report_before: report,
            localization,
            revised_code: revised.clone(),
            report_after: after.clone(),
            exchanges,
            notes,
        });
        code = revised;
        report = after;
        let outcome = if passed {
            Some(DebugOutcome::Fixed)
        } else if idle_rounds >= 2 {
            Some(DebugOutcome::Stagnated)
        } else {
            None
        };
        if let Some(outcome) = outcome {
            return Ok(DebugRun {
                final_code: code,
                iterations,
                outcome,
            });
        }
    }
    Ok(DebugRun {
        final_code: code,
        iterations,
        outcome: DebugOutcome::Exhausted,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::atomic::{AtomicUsize, Ordering};

    use super::*;
    use crate::llm::{ScriptRule, ScriptedModel};
    use crate::sim::FirstFailure;

    fn failing(n: u64) -> SimulationReport {
        let mut r = crate::sim::parse_sim_output(
            &format!("MISMATCH time=40 sig=q exp=1 got=0\nMismatches: {n} in 100 samples\n"),
            true,
        );
        r.mismatch_count = n;
        r
    }

    fn passing() -> SimulationReport {
        crate::sim::parse_sim_output("Mismatches: 0 in 100 samples\n", true)
    }

    const CODE: &str = "module top_module(input clk, input d, output reg q);\n    always @(posedge clk) q <= ~d;\nendmodule\n";

    fn fenced(code: &str) -> String {
        format!("The inversion is wrong.\n```verilog\n{code}```\n")
    }

    #[test]
    fn localization_parsing() {
        let l = parse_localization(CODE, "Analysis...\nLINE 2: q takes the inverted input\n- **LINE 1: header**\n").unwrap();
        assert_eq!(l.candidates.len(), 2);
        assert_eq!(l.candidates[0].line, 2);
        assert_eq!(l.candidates[0].statement, "always @(posedge clk) q <= ~d;");
        assert_eq!(l.candidates[1].rationale, "header");
        assert!(matches!(
            parse_localization(CODE, "LINE 9999: nope"),
            Err(DebugError::LineOutOfRange { line: 9999, lines: 3 })
        ));
        assert!(matches!(parse_localization(CODE, "looks fine to me"), Err(DebugError::Format(_))));
    }

    #[test]
    fn correction_parsing() {
        assert_eq!(parse_correction(&fenced(CODE)).unwrap(), CODE);
        let two = format!("{}{}", fenced(CODE), fenced(CODE));
        assert!(matches!(parse_correction(&two), Err(DebugError::Format(_))));
        assert!(matches!(parse_correction("no code"), Err(DebugError::Format(_))));
    }

    #[test]
    fn prompts_carry_the_failure() {
        let mut r = failing(3);
        r.first_failure = Some(FirstFailure {
            time_label: "40".into(),
            signal: "q".into(),
            expected: "1".into(),
            got: "0".into(),
        });
        let req = localize_request("Build a DFF.", CODE, &r, "");
        assert!(req.user_text.contains("2 | "));
        assert!(req.user_text.contains("Earliest failing sample: time 40, signal q, expected 1, got 0"));
        let loc = parse_localization(CODE, "LINE 2: inverted").unwrap();
        let req = correct_request("Build a DFF.", CODE, Some(&loc), &r);
        assert!(req.user_text.contains("- line 2: `always @(posedge clk) q <= ~d;` (inverted)"));
        assert_eq!(req.tag, StageTag::Correct);
    }

    #[test]
    fn long_specs_are_reduced_to_relevant_paragraphs() {
        let filler = "Unrelated background text about the product roadmap. ".repeat(12);
        let spec = format!(
            "{filler}\n\nThe counter cnt increments when en is high.\n\n{filler}\n\nThe flag done rises when cnt reaches 9.\n\n{filler}\n\nOutput q mirrors d.\n\n{filler}"
        );
        assert!(spec.len() > LONG_SPEC_CHARS);
        let kept = relevant_spec(&spec, "cnt <= cnt + 1; done = (cnt == 9); q <= d;");
        assert!(kept.starts_with("The counter cnt"));
        assert!(kept.contains("The flag done"));
        assert_eq!(kept.split("\n\n").count(), SPEC_CHUNKS);
        assert_eq!(relevant_spec("short", "x"), "short");
    }

    fn fixed_code(i: usize) -> String {
        CODE.replace("~d", &format!("d ^ {i}'b0"))
    }

    #[test]
    fn fixed_on_third_iteration() {
        let calls = AtomicUsize::new(0);
        let eval = |_: &str| {
            let n = calls.fetch_add(1, Ordering::SeqCst) + 1;
            if n == 3 { passing() } else { failing(5 - n as u64) }
        };
        let mut rules = vec![ScriptRule::tag(StageTag::Localize, "LINE 2: inverted")];
        for i in 1..=3 {
            let code = if i == 1 { CODE.to_string() } else { fixed_code(i - 1) };
            rules.push(ScriptRule::when(StageTag::Correct, code.trim_end().to_string(), fenced(&fixed_code(i))));
        }
        let llm = ScriptedModel::new(rules);
        let run = debug_loop("DFF", CODE, failing(5), &eval, &llm, None, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(run.outcome, DebugOutcome::Fixed);
        assert_eq!(run.iterations.len(), 3);
        assert!(run.iterations.last().unwrap().report_after.passed());
        for w in run.iterations.windows(2) {
            assert_eq!(w[0].report_after, w[1].report_before);
            assert_eq!(w[0].index + 1, w[1].index);
        }
    }

    #[test]
    fn exhausted_at_the_cap() {
        let calls = AtomicUsize::new(0);
        let eval = |_: &str| {
            let n = calls.fetch_add(1, Ordering::SeqCst);
            failing(10 + (n % 2) as u64)
        };
        // alternate between two revisions so the code always changes
        let a = fixed_code(1);
        let b = fixed_code(2);
        let llm = ScriptedModel::new(vec![
            ScriptRule::tag(StageTag::Localize, "LINE 2: inverted"),
            ScriptRule::when(StageTag::Correct, a.trim_end().to_string(), fenced(&b)),
            ScriptRule::tag(StageTag::Correct, fenced(&a)),
        ]);
        let run = debug_loop("DFF", CODE, failing(12), &eval, &llm, None, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(run.outcome, DebugOutcome::Exhausted);
        assert_eq!(run.iterations.len(), 10);
    }

    #[test]
    fn stagnates_on_two_idle_rounds() {
        let eval = |_: &str| -> SimulationReport { panic!("unchanged code must not be re-simulated") };
        let llm = ScriptedModel::new(vec![
            ScriptRule::tag(StageTag::Localize, "no idea"),
            ScriptRule::tag(StageTag::Correct, fenced(CODE)),
        ]);
        let run = debug_loop("DFF", CODE, failing(4), &eval, &llm, None, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(run.outcome, DebugOutcome::Stagnated);
        assert_eq!(run.iterations.len(), 2);
        assert!(run.iterations[0].localization.is_none());
        assert_eq!(run.iterations[0].exchanges.len(), 2);
    }

    #[test]
    fn llm_failure_aborts_with_partial_trace() {
        let eval = |_: &str| failing(1);
        let llm = ScriptedModel::new(vec![ScriptRule::when(StageTag::Localize, "1 | module", "LINE 2: x")]);
        let err = debug_loop("DFF", CODE, failing(2), &eval, &llm, None, 3).unwrap_err();
        assert!(matches!(err.error, DebugError::Llm(_)));
        assert!(err.iterations.is_empty());
    }

    #[test]
    fn compile_errors_pull_knowledge_into_localization() {
        let kb = KnowledgeBase::load(&crate::kb::bundled_dir()).unwrap();
        let r = SimulationReport::compile_error(
            vec![crate::sim::CompileMessage {
                file: "design.v".into(),
                line: Some(2),
                text: "error: q is not a valid l-value in top_module.".into(),
            }],
            "",
        );
        let ctx = error_context(&r, Some(&kb));
        assert!(ctx.contains("### wire assigned in always block"), "{ctx}");
        let req = localize_request("DFF", CODE, &r, &ctx);
        assert!(req.user_text.contains("Relevant Verilog knowledge:\n### wire assigned"));
        assert!(req.user_text.contains("design.v:2: error: q is not a valid l-value"));
    }
}
