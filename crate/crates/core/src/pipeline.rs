//! One task end to end: refine, generate, a single multimodal or
//! retrieval correction round, then the iterative debugger.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::debug::{debug_loop, DebugError, DebugOutcome, DEFAULT_MAX_ITER};
use crate::kb::{extract_keywords, KnowledgeBase, RetrievalHit, SourceKind, DEFAULT_CONTEXT_BUDGET, DEFAULT_TOP_K};
use crate::llm::{exchange, ChatModel, ChatRequest, Exchange, LlmError, StageTag, BENCH_TEMPERATURE};
use crate::multimodal::{bind_to_interface, convert, detect, rewrite_description};
use crate::refine::{build_system_prompt, codegen_rules, parse_refinement, refine_request};
use crate::sim::{error_keywords, SimStatus, SimulationReport, Simulator};
use crate::verilog::{extract_module, parse_module_header, ModuleHeader};

pub const DESCRIPTION_FILE: &str = "description.txt";
pub const INTERFACE_FILE: &str = "interface.v";
pub const TESTBENCH_FILE: &str = "testbench.v";
pub const GOLDEN_FILE: &str = "golden.v";
pub const TAGS_FILE: &str = "tags.txt";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignTask {
    pub id: String,
    pub description: String,
    pub interface_text: String,
    pub testbench: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub golden_ref: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tags: Vec<String>,
}

#[derive(Debug, thiserror::Error)]
pub enum TaskError {
    #[error("task {id}: {reason}")]
    Invalid { id: String, reason: String },
    #[error("io error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl DesignTask {
    pub fn header(&self) -> Result<ModuleHeader, TaskError> {
        parse_module_header(&self.interface_text).map_err(|e| self.invalid(format!("interface: {e}")))
    }

    pub fn validate(&self) -> Result<(), TaskError> {
        if self.id.trim().is_empty() {
            return Err(self.invalid("empty id".into()));
        }
        if self.description.trim().is_empty() {
            return Err(self.invalid("empty description".into()));
        }
        if self.testbench.trim().is_empty() {
            return Err(self.invalid("empty testbench".into()));
        }
        self.header().map(drop)
    }

    fn invalid(&self, reason: String) -> TaskError {
        TaskError::Invalid { id: self.id.clone(), reason }
    }
}

fn read(path: &Path) -> Result<String, TaskError> {
    fs::read_to_string(path).map_err(|source| TaskError::Io { path: path.to_path_buf(), source })
}

fn read_optional(path: &Path) -> Result<Option<String>, TaskError> {
    if path.exists() { read(path).map(Some) } else { Ok(None) }
}

/// Loads `dir/{description.txt, interface.v, testbench.v, golden.v?, tags.txt?}`;
/// the id is the directory name.
pub fn load_task(dir: &Path) -> Result<DesignTask, TaskError> {
    let id = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tags = read_optional(&dir.join(TAGS_FILE))?
        .map(|t| {
            t.split([',', '\n'])
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect()
        })
        .unwrap_or_default();
    let task = DesignTask {
        description: read(&dir.join(DESCRIPTION_FILE))?,
        interface_text: read(&dir.join(INTERFACE_FILE))?,
        testbench: read(&dir.join(TESTBENCH_FILE))?,
        golden_ref: read_optional(&dir.join(GOLDEN_FILE))?,
        tags,
        id,
    };
    task.validate()?;
    Ok(task)
}

pub fn save_task(task: &DesignTask, dir: &Path) -> Result<(), TaskError> {
    let write = |name: &str, text: &str| {
        let path = dir.join(name);
        fs::write(&path, text).map_err(|source| TaskError::Io { path, source })
    };
    fs::create_dir_all(dir).map_err(|source| TaskError::Io { path: dir.to_path_buf(), source })?;
    write(DESCRIPTION_FILE, &task.description)?;
    write(INTERFACE_FILE, &task.interface_text)?;
    write(TESTBENCH_FILE, &task.testbench)?;
    if let Some(g) = &task.golden_ref {
        write(GOLDEN_FILE, g)?;
    }
    if !task.tags.is_empty() {
        write(TAGS_FILE, &(task.tags.join("\n") + "\n"))?;
    }
    Ok(())
}

/// Simulates a candidate design against a testbench.
pub trait Evaluator: Send + Sync {
    fn evaluate(&self, design: &str, testbench: &str) -> SimulationReport;
}

impl Evaluator for Simulator {
    fn evaluate(&self, design: &str, testbench: &str) -> SimulationReport {
        self.run(design, testbench)
    }
}

impl<F> Evaluator for F
where
    F: Fn(&str, &str) -> SimulationReport + Send + Sync,
{
    fn evaluate(&self, design: &str, testbench: &str) -> SimulationReport {
        self(design, testbench)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub temperature: f64,
    pub max_iter: usize,
    pub top_k: usize,
    pub context_budget: usize,
    /// Records zero wall time so traces are byte-stable.
    pub zero_wall_time: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            temperature: BENCH_TEMPERATURE,
            max_iter: DEFAULT_MAX_ITER,
            top_k: DEFAULT_TOP_K,
            context_budget: DEFAULT_CONTEXT_BUDGET,
            zero_wall_time: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageKind {
    Refine,
    Generate,
    MmdConvert,
    RagFix,
    Debug,
}

impl StageKind {
    pub fn as_str(self) -> &'static str {
        match self {
            StageKind::Refine => "refine",
            StageKind::Generate => "generate",
            StageKind::MmdConvert => "mmd_convert",
            StageKind::RagFix => "rag_fix",
            StageKind::Debug => "debug",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub status: SimStatus,
    pub mismatch_count: u64,
    pub summary: String,
}

impl From<&SimulationReport> for Verdict {
    fn from(r: &SimulationReport) -> Self {
        Self {
            status: r.status,
            mismatch_count: r.mismatch_count,
            summary: r.summary(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub kind: StageKind,
    pub exchanges: Vec<Exchange>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FinalStatus {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineTrace {
    pub task_id: String,
    pub stages: Vec<StageRecord>,
    pub final_status: FinalStatus,
    /// Whether refinement changed the description.
    #[serde(default)]
    pub description_refined: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_code: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub debug_outcome: Option<DebugOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub temperature: f64,
    pub wall_time_ms: u64,
}

impl PipelineTrace {
    pub fn kinds(&self) -> Vec<StageKind> {
        self.stages.iter().map(|s| s.kind).collect()
    }

    /// The stage whose verdict first passed.
    pub fn first_pass(&self) -> Option<StageKind> {
        self.stages
            .iter()
            .find(|s| s.verdict.as_ref().is_some_and(|v| v.status == SimStatus::Pass))
            .map(|s| s.kind)
    }

    /// Checks the stage order the state machine permits and the pass/stop rules.
    pub fn check_shape(&self, max_iter: usize) -> Result<(), String> {
        let k = self.kinds();
        let mut i = 0;
        let expect = |kind: StageKind, i: &mut usize| -> bool {
            if k.get(*i) == Some(&kind) {
                *i += 1;
                true
            } else {
                false
            }
        };
        if !expect(StageKind::Refine, &mut i) {
            return Err(format!("trace must start with refine: {k:?}"));
        }
        if expect(StageKind::Generate, &mut i) && !expect(StageKind::MmdConvert, &mut i) {
            expect(StageKind::RagFix, &mut i);
        }
        let debug = k[i..].iter().take_while(|s| **s == StageKind::Debug).count();
        if i + debug != k.len() {
            return Err(format!("stage out of order: {k:?}"));
        }
        if debug > max_iter {
            return Err(format!("{debug} debug rounds exceed the cap of {max_iter}"));
        }
        let passes: Vec<usize> = self
            .stages
            .iter()
            .enumerate()
            .filter(|(_, s)| s.verdict.as_ref().is_some_and(|v| v.status == SimStatus::Pass))
            .map(|(i, _)| i)
            .collect();
        if let Some(&p) = passes.first() {
            if p + 1 != self.stages.len() {
                return Err(format!("stage follows a passing verdict: {k:?}"));
            }
        }
        let last_pass = self.stages.iter().rev().find_map(|s| s.verdict.as_ref()).is_some_and(|v| v.status == SimStatus::Pass);
        if (self.final_status == FinalStatus::Pass) != last_pass {
            return Err("final status disagrees with the last verdict".into());
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Task(#[from] TaskError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("refinement: {0}")]
    Refine(String),
    #[error("{stage}: {reason}")]
    Extract { stage: &'static str, reason: String },
    #[error("simulation tool failure: {0}")]
    Tool(String),
    #[error("debugger: {0}")]
    Debug(DebugError),
}

/// A run stopped by an LLM or toolchain failure. `trace` holds the stages
/// completed so far, marked failed with the error.
#[derive(Debug, thiserror::Error)]
#[error("task {}: {error}", trace.task_id)]
pub struct PipelineAbort {
    pub error: PipelineError,
    pub trace: PipelineTrace,
}

/// The basic generation prompt: role, task, interface, output instruction.
pub fn generation_request(tag: StageTag, description: &str, interface: &str, kb_context: &str, note: &str) -> ChatRequest {
    let context = if kb_context.trim().is_empty() {
        String::new()
    } else {
        format!("Relevant Verilog knowledge:\n{}", kb_context.trim_end())
    };
    let mut user = format!(
        "Implement the following design in Verilog.\n\nDesign description:\n{}\n\nModule interface:\n{}\n",
        description.trim_end(),
        interface.trim_end()
    );
    if !note.trim().is_empty() {
        user.push_str(&format!("\n{}\n", note.trim_end()));
    }
    user.push_str(
        "\nComplete the module so that it matches the interface exactly. Output the whole module, \
         starting with the module header, in one ```verilog fenced code block.\n",
    );
    ChatRequest::new(tag, build_system_prompt(codegen_rules(), &context), user)
}

struct Run<'a> {
    task: &'a DesignTask,
    cfg: &'a PipelineConfig,
    kb: Option<&'a KnowledgeBase>,
    llm: &'a dyn ChatModel,
    sim: &'a dyn Evaluator,
    trace: PipelineTrace,
    code: Option<String>,
    report: Option<SimulationReport>,
}

impl Run<'_> {
    fn context(&self, hits: &[RetrievalHit]) -> String {
        let Some(kb) = self.kb else { return String::new() };
        kb.assemble_context(hits, self.cfg.context_budget).map(|c| c.text).unwrap_or_default()
    }

    fn semantic_hits(&self, query: &str) -> Vec<RetrievalHit> {
        self.kb
            .and_then(|kb| kb.search_semantic(query, self.cfg.top_k, None).ok())
            .unwrap_or_default()
    }

    /// Sends a generation request, simulates the result and records the stage.
    fn generate(&mut self, kind: StageKind, req: ChatRequest, note: Option<String>) -> Result<bool, PipelineError> {
        let (text, ex) = exchange(self.llm, &req)?;
        let mut record = StageRecord {
            kind,
            exchanges: vec![ex],
            verdict: None,
            note,
        };
        let code = match extract_module(&text) {
            Ok(c) => c,
            Err(e) => {
                // an unusable reply still counts as a failed candidate
                let report = SimulationReport::compile_error(Vec::new(), &format!("no usable Verilog in the response: {e}"));
                record.verdict = Some(Verdict::from(&report));
                self.trace.stages.push(record);
                self.report = Some(report);
                return Ok(false);
            }
        };
        let report = self.sim.evaluate(&code, &self.task.testbench);
        record.verdict = Some(Verdict::from(&report));
        self.trace.stages.push(record);
        let passed = report.passed();
        if report.status == SimStatus::ToolError && !report.timed_out {
            return Err(PipelineError::Tool(report.raw_excerpt.clone()));
        }
        self.code = Some(code);
        self.report = Some(report);
        Ok(passed)
    }

    fn run(&mut self) -> Result<(), PipelineError> {
        let task = self.task;
        task.validate()?;
        let header = task.header()?;

        let req = refine_request(&task.description, &task.interface_text);
        let (text, ex) = exchange(self.llm, &req)?;
        let refined = parse_refinement(&task.description, &text).map_err(|e| PipelineError::Refine(e.to_string()))?;
        let note = if refined.findings.is_empty() {
            "no violations".to_string()
        } else {
            let ids: Vec<&str> = refined.findings.iter().map(|f| f.rule_id.as_str()).collect();
            format!("violations: {}", ids.join(", "))
        };
        self.trace.stages.push(StageRecord {
            kind: StageKind::Refine,
            exchanges: vec![ex],
            verdict: None,
            note: Some(note),
        });
        self.trace.description_refined = refined.changed;
        let description = refined.refined_description;

        let ctx = self.context(&self.semantic_hits(&description));
        let req = generation_request(StageTag::Generate, &description, &task.interface_text, &ctx, "");
        if self.generate(StageKind::Generate, req, None)? {
            return Ok(());
        }

        let blocks: Vec<_> = detect(&description)
            .into_iter()
            .filter_map(|b| {
                let mut ir = convert(&b).ok()?;
                bind_to_interface(&mut ir, &header);
                Some((b, ir))
            })
            .collect();
        let passed = if blocks.is_empty() {
            let report = self.report.clone().expect("generate sets a report");
            let mut hits = self.semantic_hits(&description);
            let mut words = extract_keywords(&description, SourceKind::Spec);
            if let Ok(errs) = error_keywords(&report) {
                words.extend(errs);
            }
            if let Some(kb) = self.kb {
                hits.extend(kb.search_keyword(&words));
            }
            let ctx = self.context(&hits);
            let fail = format!("A previous implementation failed: {}", report.summary());
            let req = generation_request(StageTag::RagFix, &description, &task.interface_text, &ctx, &fail);
            let note = (!words.is_empty()).then(|| format!("keywords: {}", words.join(", ")));
            self.generate(StageKind::RagFix, req, note)?
        } else {
            let rewritten = rewrite_description(&description, &blocks).map_err(|e| PipelineError::Extract {
                stage: "mmd_convert",
                reason: e.to_string(),
            })?;
            let kinds: Vec<&str> = blocks.iter().map(|(b, _)| b.kind.as_str()).collect();
            let ctx = self.context(&self.semantic_hits(&rewritten));
            let req = generation_request(StageTag::MmdConvert, &rewritten, &task.interface_text, &ctx, "");
            self.generate(StageKind::MmdConvert, req, Some(format!("converted: {}", kinds.join(", "))))?
        };
        if passed {
            return Ok(());
        }

        let report = self.report.clone().expect("generate sets a report");
        let Some(code) = self.code.clone() else {
            return Err(PipelineError::Extract {
                stage: "generate",
                reason: "no candidate code to debug".into(),
            });
        };
        let tb = &task.testbench;
        let sim = self.sim;
        let evaluate = |c: &str| sim.evaluate(c, tb);
        let result = debug_loop(&description, &code, report, &evaluate, self.llm, self.kb, self.cfg.max_iter);
        let (iterations, outcome, final_code, error) = match result {
            Ok(run) => (run.iterations, Some(run.outcome), run.final_code, None),
            Err(abort) => (abort.iterations, None, abort.last_code, Some(abort.error)),
        };
        for it in &iterations {
            self.trace.stages.push(StageRecord {
                kind: StageKind::Debug,
                exchanges: it.exchanges.clone(),
                verdict: Some(Verdict::from(&it.report_after)),
                note: (!it.notes.is_empty()).then(|| it.notes.join("; ")),
            });
        }
        if let Some(last) = iterations.last() {
            self.report = Some(last.report_after.clone());
        }
        self.code = Some(final_code);
        self.trace.debug_outcome = outcome;
        match error {
            Some(e) => Err(PipelineError::Debug(e)),
            None => Ok(()),
        }
    }
}

/// Runs the full state machine for one task.
pub fn run_task(
    task: &DesignTask,
    cfg: &PipelineConfig,
    kb: Option<&KnowledgeBase>,
    llm: &dyn ChatModel,
    sim: &dyn Evaluator,
) -> Result<PipelineTrace, PipelineAbort> {
    let start = Instant::now();
    let mut run = Run {
        task,
        cfg,
        kb,
        llm,
        sim,
        trace: PipelineTrace {
            task_id: task.id.clone(),
            stages: Vec::new(),
            final_status: FinalStatus::Fail,
            description_refined: false,
            final_code: None,
            debug_outcome: None,
            error: None,
            temperature: cfg.temperature,
            wall_time_ms: 0,
        },
        code: None,
        report: None,
    };
    let result = run.run();
    let mut trace = run.trace;
    trace.final_code = run.code;
    trace.final_status = if run.report.as_ref().is_some_and(SimulationReport::passed) {
        FinalStatus::Pass
    } else {
        FinalStatus::Fail
    };
    if !cfg.zero_wall_time {
        trace.wall_time_ms = start.elapsed().as_millis() as u64;
    }
    match result {
        Ok(()) => Ok(trace),
        Err(error) => {
            trace.final_status = FinalStatus::Fail;
            trace.error = Some(error.to_string());
            Err(PipelineAbort { error, trace })
        }
    }
}
