use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

/// Upper bound on [`SimulationReport::raw_excerpt`], in bytes.
pub const EXCERPT_LIMIT: usize = 8 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimStatus {
    Pass,
    CompileError,
    SimFailure,
    ToolError,
}

impl SimStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SimStatus::Pass => "pass",
            SimStatus::CompileError => "compile_error",
            SimStatus::SimFailure => "sim_failure",
            SimStatus::ToolError => "tool_error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompileMessage {
    pub file: String,
    pub line: Option<u32>,
    pub text: String,
}

impl CompileMessage {
    pub fn render(&self) -> String {
        match self.line {
            Some(l) => format!("{}:{}: {}", self.file, l, self.text),
            None if self.file.is_empty() => self.text.clone(),
            None => format!("{}: {}", self.file, self.text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FirstFailure {
    pub time_label: String,
    pub signal: String,
    pub expected: String,
    pub got: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub status: SimStatus,
    pub compile_messages: Vec<CompileMessage>,
    pub mismatch_count: u64,
    pub total_samples: u64,
    pub first_failure: Option<FirstFailure>,
    pub raw_excerpt: String,
    /// The run was killed at the configured timeout.
    #[serde(default)]
    pub timed_out: bool,
}

impl SimulationReport {
    pub fn tool_error(message: impl Into<String>) -> Self {
        Self {
            status: SimStatus::ToolError,
            compile_messages: Vec::new(),
            mismatch_count: 0,
            total_samples: 0,
            first_failure: None,
            raw_excerpt: excerpt(&message.into()),
            timed_out: false,
        }
    }

    pub fn timeout(secs: f64, output: &str) -> Self {
        let mut r = Self::tool_error(format!("timeout_exceeded: simulation killed after {secs:.1} s\n{output}"));
        r.timed_out = true;
        r
    }

    pub fn compile_error(messages: Vec<CompileMessage>, raw: &str) -> Self {
        Self {
            status: SimStatus::CompileError,
            compile_messages: messages,
            mismatch_count: 0,
            total_samples: 0,
            first_failure: None,
            raw_excerpt: excerpt(raw),
            timed_out: false,
        }
    }

    pub fn passed(&self) -> bool {
        self.status == SimStatus::Pass
    }

    /// A failure the debugger can act on, as opposed to a broken toolchain.
    pub fn repairable(&self) -> bool {
        matches!(self.status, SimStatus::CompileError | SimStatus::SimFailure) || self.timed_out
    }

    /// One-line description used in prompts and logs.
    pub fn summary(&self) -> String {
        match self.status {
            SimStatus::Pass => format!("pass ({} samples)", self.total_samples),
            SimStatus::CompileError => format!("compile_error ({} messages)", self.compile_messages.len()),
            SimStatus::SimFailure => {
                let mut s = format!("sim_failure ({} mismatches in {} samples)", self.mismatch_count, self.total_samples);
                if let Some(f) = &self.first_failure {
                    s.push_str(&format!(
                        "; first at time {} on {}: expected {}, got {}",
                        f.time_label, f.signal, f.expected, f.got
                    ));
                }
                s
            }
            SimStatus::ToolError if self.timed_out => "tool_error (timeout)".into(),
            SimStatus::ToolError => "tool_error".into(),
        }
    }
}

/// Truncates to [`EXCERPT_LIMIT`] bytes on a char boundary, keeping the head.
pub fn excerpt(text: &str) -> String {
    if text.len() <= EXCERPT_LIMIT {
        return text.to_string();
    }
    const MARK: &str = "\n[... truncated]";
    let mut cut = EXCERPT_LIMIT - MARK.len();
    while !text.is_char_boundary(cut) {
        cut -= 1;
    }
    format!("{}{MARK}", &text[..cut])
}

fn mismatch_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"MISMATCH\s+time=(\S+)\s+sig=(\S+)\s+exp=(\S+)\s+got=(\S+)").unwrap())
}

fn summary_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"Mismatches:\s*(\d+)\s+in\s+(\d+)\s+samples").unwrap())
}

fn time_key(label: &str) -> Option<f64> {
    let digits: String = label.chars().take_while(|c| c.is_ascii_digit() || *c == '.').collect();
    digits.parse().ok()
}

/// Parses testbench output. Never fails: output without a summary or any
/// mismatch line becomes a tool error carrying the excerpt.
pub fn parse_sim_output(stdout: &str, exit_ok: bool) -> SimulationReport {
    let mut failures: Vec<FirstFailure> = Vec::new();
    for c in mismatch_re().captures_iter(stdout) {
        failures.push(FirstFailure {
            time_label: c[1].to_string(),
            signal: c[2].to_string(),
            expected: c[3].to_string(),
            got: c[4].to_string(),
        });
    }
    // earliest by numeric time, ties and non-numeric labels by order of appearance
    let first = failures
        .iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| match (time_key(&a.time_label), time_key(&b.time_label)) {
            (Some(x), Some(y)) => x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(j)),
            _ => i.cmp(j),
        })
        .map(|(_, f)| f.clone());
    let summary = summary_re()
        .captures_iter(stdout)
        .last()
        .map(|c| (c[1].parse::<u64>().unwrap_or(u64::MAX), c[2].parse::<u64>().unwrap_or(0)));
    let mut report = SimulationReport {
        status: SimStatus::ToolError,
        compile_messages: Vec::new(),
        mismatch_count: 0,
        total_samples: 0,
        first_failure: None,
        raw_excerpt: excerpt(stdout),
        timed_out: false,
    };
    match summary {
        Some((n, m)) => {
            report.total_samples = m;
            report.mismatch_count = n.max(failures.len() as u64);
            if report.mismatch_count == 0 {
                report.status = SimStatus::Pass;
            } else {
                report.status = SimStatus::SimFailure;
                report.first_failure = first;
            }
        }
        None if !failures.is_empty() => {
            report.status = SimStatus::SimFailure;
            report.mismatch_count = failures.len() as u64;
            report.first_failure = first;
        }
        None => {
            let why = if exit_ok { "no mismatch summary in simulator output" } else { "simulator exited with an error" };
            report.raw_excerpt = excerpt(&format!("{why}\n{stdout}"));
        }
    }
    report
}

fn verilator_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^%Error(?:-[A-Z0-9_]+)?:\s*(?:([^\s:]+):(\d+):(?:(\d+):)?\s*)?(.*)$").unwrap())
}

fn gnu_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^([^\s:%]+):(\d+):(?:\d+:)?\s*(.*)$").unwrap())
}

fn base_name(path: &str) -> String {
    path.rsplit(['/', '\\']).next().unwrap_or(path).to_string()
}

/// Extracts error messages from compiler stderr. Understands Verilator's
/// `%Error[-CODE]: file:line:col: text` and the `file:line: text` form.
pub fn parse_compile_messages(stderr: &str) -> Vec<CompileMessage> {
    let mut out = Vec::new();
    for line in stderr.lines() {
        let line = line.trim_end();
        if let Some(c) = verilator_re().captures(line) {
            let text = c[4].trim().to_string();
            if text.starts_with("Exiting due to") {
                continue;
            }
            let code = line
                .strip_prefix("%Error-")
                .and_then(|r| r.split(':').next())
                .map(|c| format!("{c}: "))
                .unwrap_or_default();
            out.push(CompileMessage {
                file: c.get(1).map_or(String::new(), |m| base_name(m.as_str())),
                line: c.get(2).and_then(|m| m.as_str().parse().ok()),
                text: format!("{code}{text}"),
            });
        } else if let Some(c) = gnu_re().captures(line) {
            let text = c[3].trim();
            let lower = text.to_ascii_lowercase();
            if lower.starts_with("warning") || text.is_empty() {
                continue;
            }
            out.push(CompileMessage {
                file: base_name(&c[1]),
                line: c[2].parse().ok(),
                text: text.to_string(),
            });
        }
    }
    out
}
