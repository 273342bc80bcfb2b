//! Suite runner: pass@1, per-mechanism repair counts and report files.
//!
//! A suite directory holds `tasks/<id>/` task folders and, for replay and
//! record modes, `transcripts/<id>.jsonl`.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::kb::KnowledgeBase;
use crate::llm::{ChatModel, LlmError, RecordingModel, ReplayModel, Transcript, BENCH_TEMPERATURE};
use crate::pipeline::{load_task, run_task, DesignTask, Evaluator, FinalStatus, PipelineConfig, PipelineTrace, StageKind};

pub const TASKS_DIR: &str = "tasks";
pub const TRANSCRIPTS_DIR: &str = "transcripts";
pub const TRACES_DIR: &str = "traces";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Live,
    Record,
    Replay,
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "live" => Ok(Mode::Live),
            "record" => Ok(Mode::Record),
            "replay" => Ok(Mode::Replay),
            other => Err(format!("unknown mode {other:?}; expected live, record or replay")),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("suite has no tasks")]
    EmptySuite,
    #[error("{0} mode needs a live model")]
    NoModel(&'static str),
    #[error("benchmark runs require temperature {BENCH_TEMPERATURE}, got {0}")]
    Temperature(f64),
    #[error("io error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> BenchError + '_ {
    move |source| BenchError::Io { path: path.to_path_buf(), source }
}

/// A percentage held in tenths so it prints and compares exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Percent1 {
    pub tenths: u64,
}

impl Percent1 {
    pub fn as_f64(self) -> f64 {
        self.tenths as f64 / 10.0
    }
}

impl fmt::Display for Percent1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{}", self.tenths / 10, self.tenths % 10)
    }
}

/// `100 * passed / total`, rounded half-up to one decimal.
pub fn pass_at_1(passed: usize, total: usize) -> Result<Percent1, BenchError> {
    if total == 0 {
        return Err(BenchError::EmptySuite);
    }
    let (p, t) = (passed as u128, total as u128);
    Ok(Percent1 {
        tenths: ((2000 * p + t) / (2 * t)) as u64,
    })
}

/// Which step turned a task into a pass.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Attribution {
    /// Passed at generation with an unchanged description.
    Baseline,
    /// Rule-based description refinement: passed at generation after refinement changed the description.
    Rdr,
    /// Multimodal data conversion round.
    Mdc,
    /// Retrieval-augmented correction round.
    Rag,
    /// Two-stage debugging.
    Tdm,
    Failed,
}

impl Attribution {
    pub const ALL: [Attribution; 6] = [
        Attribution::Baseline,
        Attribution::Rdr,
        Attribution::Mdc,
        Attribution::Rag,
        Attribution::Tdm,
        Attribution::Failed,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Attribution::Baseline => "generate",
            Attribution::Rdr => "RDR",
            Attribution::Mdc => "MDC",
            Attribution::Rag => "RAG",
            Attribution::Tdm => "TDM",
            Attribution::Failed => "fail",
        }
    }

    pub fn of(trace: &PipelineTrace) -> Self {
        if trace.final_status != FinalStatus::Pass {
            return Attribution::Failed;
        }
        match trace.first_pass() {
            Some(StageKind::Generate) if trace.description_refined => Attribution::Rdr,
            Some(StageKind::Generate) => Attribution::Baseline,
            Some(StageKind::MmdConvert) => Attribution::Mdc,
            Some(StageKind::RagFix) => Attribution::Rag,
            Some(StageKind::Debug) => Attribution::Tdm,
            Some(StageKind::Refine) | None => Attribution::Failed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub task_id: String,
    pub final_status: FinalStatus,
    pub attribution: Attribution,
    pub stages: Vec<StageKind>,
    pub debug_iterations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
    /// Whether the reference design passes the testbench, when checked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub golden_passes: Option<bool>,
    pub wall_time_ms: u64,
}

impl TaskResult {
    fn from_trace(trace: &PipelineTrace) -> Self {
        let stages = trace.kinds();
        Self {
            task_id: trace.task_id.clone(),
            final_status: trace.final_status,
            attribution: Attribution::of(trace),
            debug_iterations: stages.iter().filter(|k| **k == StageKind::Debug).count(),
            stages,
            reason: trace.error.clone(),
            golden_passes: None,
            wall_time_ms: trace.wall_time_ms,
        }
    }

    fn failed(task_id: String, reason: String) -> Self {
        Self {
            task_id,
            final_status: FinalStatus::Fail,
            attribution: Attribution::Failed,
            stages: Vec::new(),
            debug_iterations: 0,
            reason: Some(reason),
            golden_passes: None,
            wall_time_ms: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub tasks: Vec<TaskResult>,
    pub total: usize,
    pub passed: usize,
    pub pass_at_1: Percent1,
    pub by_attribution: BTreeMap<Attribution, usize>,
    pub total_wall_time_ms: u64,
}

impl SuiteResult {
    pub fn from_tasks(mut tasks: Vec<TaskResult>) -> Result<Self, BenchError> {
        tasks.sort_by(|a, b| a.task_id.cmp(&b.task_id));
        let passed = tasks.iter().filter(|t| t.final_status == FinalStatus::Pass).count();
        let mut by_attribution: BTreeMap<Attribution, usize> = Attribution::ALL.iter().map(|a| (*a, 0)).collect();
        for t in &tasks {
            *by_attribution.entry(t.attribution).or_default() += 1;
        }
        Ok(Self {
            pass_at_1: pass_at_1(passed, tasks.len())?,
            total: tasks.len(),
            passed,
            by_attribution,
            total_wall_time_ms: tasks.iter().map(|t| t.wall_time_ms).sum(),
            tasks,
        })
    }

    pub fn count(&self, a: Attribution) -> usize {
        self.by_attribution.get(&a).copied().unwrap_or(0)
    }

    pub fn render_report(&self) -> String {
        let w = self.tasks.iter().map(|t| t.task_id.len()).max().unwrap_or(4).max(4);
        let mut out = format!("{:<w$}  {:<6}  {:<8}  {:>5}  stages\n", "task", "status", "repaired", "debug");
        for t in &self.tasks {
            let status = match t.final_status {
                FinalStatus::Pass => "pass",
                FinalStatus::Fail => "fail",
            };
            let stages: Vec<&str> = t.stages.iter().map(|s| s.as_str()).collect();
            out.push_str(&format!(
                "{:<w$}  {:<6}  {:<8}  {:>5}  {}",
                t.task_id,
                status,
                t.attribution.as_str(),
                t.debug_iterations,
                stages.join(">")
            ));
            if let Some(g) = t.golden_passes {
                out.push_str(if g { "  [golden ok]" } else { "  [golden FAILS testbench]" });
            }
            if let Some(r) = &t.reason {
                out.push_str(&format!("  ({r})"));
            }
            out.push('\n');
        }
        out.push_str(&format!("\npass@1: {}% ({}/{})\n", self.pass_at_1, self.passed, self.total));
        if self.total_wall_time_ms > 0 {
            out.push_str(&format!(
                "wall time: {:.1} s total, {:.1} s mean per task\n",
                self.total_wall_time_ms as f64 / 1000.0,
                self.total_wall_time_ms as f64 / 1000.0 / self.total as f64
            ));
        }
        out
    }

    pub fn report_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["task_id", "final_status", "attribution", "debug_iterations", "stages", "golden_passes", "reason", "wall_time_ms"])
            .expect("in-memory write");
        for t in &self.tasks {
            let stages: Vec<&str> = t.stages.iter().map(|s| s.as_str()).collect();
            w.write_record([
                t.task_id.as_str(),
                if t.final_status == FinalStatus::Pass { "pass" } else { "fail" },
                t.attribution.as_str(),
                &t.debug_iterations.to_string(),
                &stages.join(">"),
                &t.golden_passes.map(|g| g.to_string()).unwrap_or_default(),
                t.reason.as_deref().unwrap_or(""),
                &t.wall_time_ms.to_string(),
            ])
            .expect("in-memory write");
        }
        w.write_record(["TOTAL", &format!("{}/{}", self.passed, self.total), &self.pass_at_1.to_string(), "", "", "", "", &self.total_wall_time_ms.to_string()])
            .expect("in-memory write");
        String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv is utf-8")
    }
}

/// Tasks repaired by each mechanism, plus first-pass and failure counts.
pub fn report_ablation(result: &SuiteResult) -> String {
    let mut out = String::from("mechanism  repaired\n");
    for a in [Attribution::Rdr, Attribution::Rag, Attribution::Mdc, Attribution::Tdm] {
        out.push_str(&format!("{:<9}  {:>8}\n", a.as_str(), result.count(a)));
    }
    out.push_str(&format!("{:<9}  {:>8}\n", "generate", result.count(Attribution::Baseline)));
    out.push_str(&format!("{:<9}  {:>8}\n", "fail", result.count(Attribution::Failed)));
    out.push_str(&format!("{:<9}  {:>8}\n", "total", result.total));
    out
}

pub fn ablation_csv(result: &SuiteResult) -> String {
    let mut out = String::from("mechanism,repaired\n");
    for a in [Attribution::Rdr, Attribution::Rag, Attribution::Mdc, Attribution::Tdm, Attribution::Baseline, Attribution::Failed] {
        out.push_str(&format!("{},{}\n", a.as_str(), result.count(a)));
    }
    out.push_str(&format!("total,{}\n", result.total));
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchOptions {
    pub pipeline: PipelineConfig,
    pub jobs: usize,
    /// Simulate each reference design against its testbench for the report.
    pub check_golden: bool,
    /// Restrict the run to these task ids.
    pub only: Vec<String>,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            jobs: 4,
            check_golden: false,
            only: Vec::new(),
        }
    }
}

/// Task directories under `suite/tasks`, sorted by name.
pub fn task_dirs(suite: &Path) -> Result<Vec<PathBuf>, BenchError> {
    let dir = suite.join(TASKS_DIR);
    let mut dirs: Vec<PathBuf> = fs::read_dir(&dir)
        .map_err(io_err(&dir))?
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    Ok(dirs)
}

pub fn transcript_path(suite: &Path, task_id: &str) -> PathBuf {
    suite.join(TRANSCRIPTS_DIR).join(format!("{task_id}.jsonl"))
}

pub struct SuiteRun {
    pub result: SuiteResult,
    pub traces: Vec<PipelineTrace>,
}

fn run_one(
    task: &DesignTask,
    suite: &Path,
    mode: Mode,
    live: Option<&dyn ChatModel>,
    opts: &BenchOptions,
    kb: Option<&KnowledgeBase>,
    sim: &dyn Evaluator,
) -> (TaskResult, Option<PipelineTrace>) {
    let tpath = transcript_path(suite, &task.id);
    let outcome = match mode {
        Mode::Replay => match Transcript::load(&tpath) {
            Ok(t) => run_task(task, &opts.pipeline, kb, &ReplayModel::new(t), sim),
            Err(e) => return (TaskResult::failed(task.id.clone(), e.to_string()), None),
        },
        Mode::Live => run_task(task, &opts.pipeline, kb, live.expect("checked by run_suite"), sim),
        Mode::Record => {
            let prior = if tpath.exists() { Transcript::load(&tpath).ok() } else { None };
            let rec = RecordingModel::with_sink(live.expect("checked by run_suite"), prior.unwrap_or_default());
            let out = run_task(task, &opts.pipeline, kb, &rec, sim);
            if let Err(e) = rec.snapshot().save(&tpath) {
                tracing::warn!(task = %task.id, "saving transcript failed: {e}");
            }
            out
        }
    };
    let trace = match outcome {
        Ok(t) => t,
        Err(abort) => abort.trace,
    };
    let mut result = TaskResult::from_trace(&trace);
    if opts.check_golden {
        result.golden_passes = task.golden_ref.as_ref().map(|g| sim.evaluate(g, &task.testbench).passed());
    }
    (result, Some(trace))
}

/// Runs every task in `suite` with bounded parallelism. Task-level failures
/// become failed results; only setup problems are errors.
pub fn run_suite(
    suite: &Path,
    mode: Mode,
    live: Option<&dyn ChatModel>,
    opts: &BenchOptions,
    kb: Option<&KnowledgeBase>,
    sim: &dyn Evaluator,
) -> Result<SuiteRun, BenchError> {
    if (opts.pipeline.temperature - BENCH_TEMPERATURE).abs() > f64::EPSILON {
        return Err(BenchError::Temperature(opts.pipeline.temperature));
    }
    match (mode, live) {
        (Mode::Live, None) => return Err(BenchError::NoModel("live")),
        (Mode::Record, None) => return Err(BenchError::NoModel("record")),
        _ => {}
    }
    let mut opts = opts.clone();
    if mode == Mode::Replay {
        opts.pipeline.zero_wall_time = true;
    }
    let dirs: Vec<PathBuf> = task_dirs(suite)?
        .into_iter()
        .filter(|d| opts.only.is_empty() || d.file_name().is_some_and(|n| opts.only.iter().any(|o| *o == n.to_string_lossy())))
        .collect();
    if dirs.is_empty() {
        return Err(BenchError::EmptySuite);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;
    let outcomes: Vec<(TaskResult, Option<PipelineTrace>)> = pool.install(|| {
        dirs.par_iter()
            .map(|d| match load_task(d) {
                Ok(task) => {
                    tracing::info!(task = %task.id, "running");
                    run_one(&task, suite, mode, live, &opts, kb, sim)
                }
                Err(e) => {
                    let id = d.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
                    (TaskResult::failed(id, e.to_string()), None)
                }
            })
            .collect()
    });
    let (results, traces): (Vec<_>, Vec<_>) = outcomes.into_iter().unzip();
    let mut traces: Vec<PipelineTrace> = traces.into_iter().flatten().collect();
    traces.sort_by(|a, b| a.task_id.cmp(&b.task_id));
    Ok(SuiteRun {
        result: SuiteResult::from_tasks(results)?,
        traces,
    })
}

/// Writes `traces/<id>.json`, `report.{txt,csv}` and `ablation.{txt,csv}`.
pub fn write_reports(out: &Path, run: &SuiteRun) -> Result<(), BenchError> {
    let traces = out.join(TRACES_DIR);
    fs::create_dir_all(&traces).map_err(io_err(&traces))?;
    for t in &run.traces {
        let path = traces.join(format!("{}.json", t.task_id));
        let text = serde_json::to_string_pretty(t).expect("traces serialize") + "\n";
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    let files = [
        ("report.txt", run.result.render_report()),
        ("report.csv", run.result.report_csv()),
        ("ablation.txt", report_ablation(&run.result)),
        ("ablation.csv", ablation_csv(&run.result)),
    ];
    for (name, text) in files {
        let path = out.join(name);
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{StageRecord, Verdict};
    use crate::sim::SimStatus;

    #[test]
    fn pass_rates() {
        assert_eq!(pass_at_1(142, 156).unwrap().to_string(), "91.0");
        assert_eq!(pass_at_1(91, 156).unwrap().to_string(), "58.3");
        assert_eq!(pass_at_1(0, 3).unwrap().to_string(), "0.0");
        assert_eq!(pass_at_1(3, 3).unwrap().to_string(), "100.0");
        // 1/8 = 12.5 exactly; 1/16 = 6.25 rounds half-up to 6.3
        assert_eq!(pass_at_1(1, 16).unwrap().to_string(), "6.3");
        assert!(matches!(pass_at_1(0, 0), Err(BenchError::EmptySuite)));
    }

    fn trace(id: &str, kinds: &[StageKind], pass: bool, refined: bool) -> PipelineTrace {
        let n = kinds.len();
        let stages = kinds
            .iter()
            .enumerate()
            .map(|(i, k)| StageRecord {
                kind: *k,
                exchanges: vec![],
                verdict: (*k != StageKind::Refine).then(|| Verdict {
                    status: if pass && i + 1 == n { SimStatus::Pass } else { SimStatus::SimFailure },
                    mismatch_count: 0,
                    summary: String::new(),
                }),
                note: None,
            })
            .collect();
        PipelineTrace {
            task_id: id.into(),
            stages,
            final_status: if pass { FinalStatus::Pass } else { FinalStatus::Fail },
            description_refined: refined,
            final_code: None,
            debug_outcome: None,
            error: None,
            temperature: 0.1,
            wall_time_ms: 0,
        }
    }

    use StageKind::*;

    #[test]
    fn attribution_follows_first_pass() {
        assert_eq!(Attribution::of(&trace("a", &[Refine, Generate], true, false)), Attribution::Baseline);
        assert_eq!(Attribution::of(&trace("a", &[Refine, Generate], true, true)), Attribution::Rdr);
        assert_eq!(Attribution::of(&trace("a", &[Refine, Generate, MmdConvert], true, true)), Attribution::Mdc);
        assert_eq!(Attribution::of(&trace("a", &[Refine, Generate, RagFix], true, false)), Attribution::Rag);
        assert_eq!(Attribution::of(&trace("a", &[Refine, Generate, RagFix, Debug, Debug], true, false)), Attribution::Tdm);
        let exhausted = [Refine, Generate, RagFix, Debug, Debug, Debug];
        assert_eq!(Attribution::of(&trace("a", &exhausted, false, false)), Attribution::Failed);
    }

    #[test]
    fn ablation_counts_and_totals() {
        let mut results: Vec<TaskResult> = (0..13)
            .map(|i| TaskResult::from_trace(&trace(&format!("m{i:02}"), &[Refine, Generate, MmdConvert], true, false)))
            .collect();
        results.push(TaskResult::from_trace(&trace("x", &[Refine, Generate, RagFix, Debug], false, false)));
        results.push(TaskResult::from_trace(&trace("y", &[Refine, Generate], true, false)));
        let r = SuiteResult::from_tasks(results).unwrap();
        assert_eq!(r.count(Attribution::Mdc), 13);
        assert_eq!(r.count(Attribution::Tdm), 0);
        assert_eq!(r.by_attribution.values().sum::<usize>(), r.total);
        let text = report_ablation(&r);
        assert!(text.contains("MDC              13\n"), "{text}");
        assert!(ablation_csv(&r).contains("\nMDC,13\n"));
        assert!(r.render_report().contains("pass@1: 93.3% (14/15)"));
    }

    #[test]
    fn all_first_passes_give_zero_mechanisms() {
        let results = (0..5).map(|i| TaskResult::from_trace(&trace(&format!("t{i}"), &[Refine, Generate], true, false))).collect();
        let r = SuiteResult::from_tasks(results).unwrap();
        for a in [Attribution::Rdr, Attribution::Rag, Attribution::Mdc, Attribution::Tdm] {
            assert_eq!(r.count(a), 0);
        }
        assert_eq!(r.count(Attribution::Baseline), 5);
    }

    #[test]
    fn suite_guards() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join(TASKS_DIR)).unwrap();
        let sim = |_: &str, _: &str| crate::sim::SimulationReport::tool_error("unused");
        let opts = BenchOptions::default();
        assert!(matches!(run_suite(dir.path(), Mode::Replay, None, &opts, None, &sim), Err(BenchError::EmptySuite)));
        assert!(matches!(run_suite(dir.path(), Mode::Live, None, &opts, None, &sim), Err(BenchError::NoModel("live"))));
        let mut hot = opts.clone();
        hot.pipeline.temperature = 0.7;
        assert!(matches!(run_suite(dir.path(), Mode::Replay, None, &hot, None, &sim), Err(BenchError::Temperature(_))));
    }

    #[test]
    fn modes_parse() {
        assert_eq!("replay".parse::<Mode>().unwrap(), Mode::Replay);
        assert!("offline".parse::<Mode>().is_err());
    }
}
