//! Compilation and simulation through an external Verilog toolchain.
//!
//! Icarus Verilog is preferred when `iverilog` and `vvp` are on the path;
//! Verilator (`verilator` or the `verilator-cli` wrapper) is the fallback.
//! `RTLFORGE_SIMULATOR=icarus|verilator` forces a choice. Every run gets its
//! own temporary directory.

mod report;

use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitStatus, Stdio};
use std::sync::OnceLock;
use std::thread;
use std::time::{Duration, Instant};

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::kb::{extract_keywords, SourceKind};
use crate::verilog::strip_comments;

pub use report::{
    excerpt, parse_compile_messages, parse_sim_output, CompileMessage, FirstFailure, SimStatus, SimulationReport,
    EXCERPT_LIMIT,
};

pub const DEFAULT_TIMEOUT_SECS: f64 = 20.0;
pub const DEFAULT_COMPILE_TIMEOUT_SECS: f64 = 300.0;
pub const SIMULATOR_ENV: &str = "RTLFORGE_SIMULATOR";
pub const CACHE_ENV: &str = "RTLFORGE_CACHE_DIR";

pub const DESIGN_FILE: &str = "design.v";
pub const TESTBENCH_FILE: &str = "testbench.v";

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("no Verilog simulator found (tried iverilog/vvp, verilator, verilator-cli)")]
    NotFound,
    #[error("unknown simulator {0:?} in {SIMULATOR_ENV}")]
    UnknownSimulator(String),
    #[error("tool error: {0}")]
    Tool(String),
    #[error("expected a compile_error report, got {0}")]
    WrongStatus(&'static str),
    #[error("testbench declares no module")]
    NoTestbenchModule,
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Simulator selection as written in configuration files.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum SimulatorChoice {
    #[default]
    Auto,
    Icarus,
    Verilator,
    /// Command templates with `{sources}`, `{out}`, `{exe}` and `{top}` placeholders.
    Custom { compile_cmd: String, run_cmd: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Backend {
    Icarus { iverilog: PathBuf, vvp: PathBuf },
    Verilator(VerilatorTool),
    Custom { compile_cmd: String, run_cmd: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct VerilatorTool {
    exe: PathBuf,
    root: PathBuf,
    cxxflags: Option<String>,
    cache: PathBuf,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    backend: Backend,
    pub timeout: Duration,
    pub compile_timeout: Duration,
}

/// A compiled simulation ready to run.
#[derive(Debug, Clone)]
pub struct Compiled {
    pub workdir: PathBuf,
    argv: Vec<String>,
}

#[derive(Debug, Clone)]
pub enum CompileOutcome {
    Compiled(Compiled),
    Failed(SimulationReport),
}

fn which(name: &str) -> Option<PathBuf> {
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path).map(|d| d.join(name)).find(|p| p.is_file())
}

struct Finished {
    status: Option<ExitStatus>,
    stdout: String,
    stderr: String,
}

impl Finished {
    fn ok(&self) -> bool {
        self.status.is_some_and(|s| s.success())
    }

    fn combined(&self) -> String {
        if self.stderr.is_empty() {
            self.stdout.clone()
        } else if self.stdout.is_empty() {
            self.stderr.clone()
        } else {
            format!("{}\n{}", self.stdout, self.stderr)
        }
    }
}

/// Runs `cmd` with output captured to files in `dir`; `status` is `None` on timeout.
fn run_with_timeout(cmd: &mut Command, dir: &Path, label: &str, timeout: Duration) -> io::Result<Finished> {
    let out_path = dir.join(format!("{label}.stdout"));
    let err_path = dir.join(format!("{label}.stderr"));
    let mut child = cmd
        .stdin(Stdio::null())
        .stdout(fs::File::create(&out_path)?)
        .stderr(fs::File::create(&err_path)?)
        .spawn()?;
    let start = Instant::now();
    let mut nap = Duration::from_millis(1);
    let status = loop {
        if let Some(s) = child.try_wait()? {
            break Some(s);
        }
        if start.elapsed() >= timeout {
            let _ = child.kill();
            let _ = child.wait();
            break None;
        }
        thread::sleep(nap);
        nap = (nap * 2).min(Duration::from_millis(20));
    };
    let read = |p: &Path| fs::read(p).map(|b| String::from_utf8_lossy(&b).into_owned()).unwrap_or_default();
    Ok(Finished {
        status,
        stdout: read(&out_path),
        stderr: read(&err_path),
    })
}

fn module_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\bmodule\s+([A-Za-z_]\w*)").unwrap())
}

/// The first module declared in a testbench, taken as the simulation top.
pub fn testbench_top(testbench: &str) -> Option<String> {
    module_re().captures(&strip_comments(testbench)).map(|c| c[1].to_string())
}

fn fill(template: &str, sources: &[String], out: &Path, exe: &Path, top: &str) -> Vec<String> {
    template
        .split_whitespace()
        .flat_map(|tok| {
            if tok == "{sources}" {
                sources.to_vec()
            } else {
                vec![tok
                    .replace("{out}", &out.to_string_lossy())
                    .replace("{exe}", &exe.to_string_lossy())
                    .replace("{top}", top)]
            }
        })
        .collect()
}

fn command(argv: &[String], cwd: &Path) -> Command {
    let mut c = Command::new(&argv[0]);
    c.args(&argv[1..]).current_dir(cwd);
    c
}

const RUNTIME_OBJECTS: [&str; 3] = ["verilated.o", "verilated_threads.o", "verilated_timing.o"];

impl VerilatorTool {
    fn locate(exe: PathBuf) -> Result<Self, SimError> {
        let probe = Command::new(&exe)
            .args(["--getenv", "VERILATOR_ROOT"])
            .stdin(Stdio::null())
            .output()
            .map_err(|e| SimError::Tool(format!("{}: {e}", exe.display())))?;
        let root = PathBuf::from(String::from_utf8_lossy(&probe.stdout).trim());
        if !probe.status.success() || !root.is_dir() {
            return Err(SimError::Tool(format!("{} did not report VERILATOR_ROOT", exe.display())));
        }
        // the pip wrapper builds its runtime with these flags
        let wrapper = exe.file_name().is_some_and(|n| n == "verilator-cli");
        let cxxflags = match std::env::var("CXXFLAGS") {
            Ok(v) => Some(v),
            Err(_) if wrapper => Some("--std=c++20 -DVL_TIME_CONTEXT".into()),
            Err(_) => None,
        };
        let mut h = Sha256::new();
        h.update(exe.to_string_lossy().as_bytes());
        h.update(root.to_string_lossy().as_bytes());
        h.update(cxxflags.as_deref().unwrap_or("").as_bytes());
        let key = hex::encode(&h.finalize()[..8]);
        let base = std::env::var_os(CACHE_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| std::env::temp_dir().join("rtlforge-verilator"));
        Ok(Self {
            exe,
            root,
            cxxflags,
            cache: base.join(key),
        })
    }

    fn make(&self, obj: &Path, top: &str) -> Command {
        let mut c = Command::new("make");
        c.arg("-C")
            .arg(obj)
            .arg("-f")
            .arg(format!("V{top}.mk"))
            .args(["PYTHON3=python3", "OPT_FAST=-O0", "OPT_SLOW=-O0", "OPT_GLOBAL=-O0"])
            // some packaged builds leave this empty, which breaks the
            // precompiled-header step once a model spans several files
            .arg("CFG_CXXFLAGS_PCH_I=-include")
            .env("VERILATOR_ROOT", &self.root);
        if let Some(f) = &self.cxxflags {
            c.env("CXXFLAGS", f);
        }
        c
    }

    fn restore_runtime(&self, obj: &Path) {
        for f in RUNTIME_OBJECTS {
            let src = self.cache.join(f);
            if src.is_file() {
                let _ = fs::copy(&src, obj.join(f));
            }
        }
    }

    /// Saves freshly built runtime objects; concurrent writers race benignly via rename.
    fn save_runtime(&self, obj: &Path) {
        if fs::create_dir_all(&self.cache).is_err() {
            return;
        }
        for f in RUNTIME_OBJECTS {
            let dst = self.cache.join(f);
            let src = obj.join(f);
            if dst.is_file() || !src.is_file() {
                continue;
            }
            let tmp = self.cache.join(format!(".{f}.{}.{:?}", std::process::id(), thread::current().id()));
            if fs::copy(&src, &tmp).is_ok() && fs::rename(&tmp, &dst).is_err() {
                let _ = fs::remove_file(&tmp);
            }
        }
    }
}

impl Simulator {
    /// Picks a backend from `RTLFORGE_SIMULATOR` or whatever is installed.
    pub fn detect() -> Result<Self, SimError> {
        match std::env::var(SIMULATOR_ENV) {
            Ok(v) if !v.trim().is_empty() => match v.trim().to_ascii_lowercase().as_str() {
                "icarus" | "iverilog" => Self::with_choice(&SimulatorChoice::Icarus),
                "verilator" => Self::with_choice(&SimulatorChoice::Verilator),
                "auto" => Self::auto(),
                other => Err(SimError::UnknownSimulator(other.to_string())),
            },
            _ => Self::auto(),
        }
    }

    fn auto() -> Result<Self, SimError> {
        Self::with_choice(&SimulatorChoice::Icarus).or_else(|_| Self::with_choice(&SimulatorChoice::Verilator))
    }

    pub fn with_choice(choice: &SimulatorChoice) -> Result<Self, SimError> {
        let backend = match choice {
            SimulatorChoice::Auto => return Self::detect(),
            SimulatorChoice::Icarus => match (which("iverilog"), which("vvp")) {
                (Some(iverilog), Some(vvp)) => Backend::Icarus { iverilog, vvp },
                _ => return Err(SimError::NotFound),
            },
            SimulatorChoice::Verilator => {
                let exe = which("verilator").or_else(|| which("verilator-cli")).ok_or(SimError::NotFound)?;
                Backend::Verilator(VerilatorTool::locate(exe)?)
            }
            SimulatorChoice::Custom { compile_cmd, run_cmd } => Backend::Custom {
                compile_cmd: compile_cmd.clone(),
                run_cmd: run_cmd.clone(),
            },
        };
        Ok(Self {
            backend,
            timeout: Duration::from_secs_f64(DEFAULT_TIMEOUT_SECS),
            compile_timeout: Duration::from_secs_f64(DEFAULT_COMPILE_TIMEOUT_SECS),
        })
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn name(&self) -> &'static str {
        match self.backend {
            Backend::Icarus { .. } => "icarus",
            Backend::Verilator(_) => "verilator",
            Backend::Custom { .. } => "custom",
        }
    }

    /// Writes `sources` into `workdir` and compiles them with `top` as the root.
    pub fn compile(&self, sources: &[(&str, &str)], top: &str, workdir: &Path) -> Result<CompileOutcome, SimError> {
        let mut names = Vec::with_capacity(sources.len());
        for (name, text) in sources {
            fs::write(workdir.join(name), text)?;
            names.push(name.to_string());
        }
        let exe = workdir.join("sim.out");
        let spawn_err = |what: &str, e: io::Error| SimError::Tool(format!("cannot run {what}: {e}"));
        let finished_compile = |f: Finished| -> Result<Option<CompileOutcome>, SimError> {
            if f.status.is_none() {
                return Err(SimError::Tool(format!("compiler timed out\n{}", f.combined())));
            }
            if f.ok() {
                return Ok(None);
            }
            let raw = f.combined();
            let mut messages = parse_compile_messages(&raw);
            if messages.is_empty() {
                messages.push(CompileMessage {
                    file: String::new(),
                    line: None,
                    text: raw.lines().find(|l| !l.trim().is_empty()).unwrap_or("compilation failed").to_string(),
                });
            }
            Ok(Some(CompileOutcome::Failed(SimulationReport::compile_error(messages, &raw))))
        };
        let argv = match &self.backend {
            Backend::Icarus { iverilog, vvp } => {
                let mut c = Command::new(iverilog);
                c.args(["-g2012", "-s", top, "-o"]).arg(&exe).args(&names).current_dir(workdir);
                let f = run_with_timeout(&mut c, workdir, "compile", self.compile_timeout)
                    .map_err(|e| spawn_err("iverilog", e))?;
                if let Some(failed) = finished_compile(f)? {
                    return Ok(failed);
                }
                vec![vvp.to_string_lossy().into_owned(), "-n".into(), exe.to_string_lossy().into_owned()]
            }
            Backend::Verilator(v) => {
                let obj = workdir.join("obj");
                let mut c = Command::new(&v.exe);
                c.args(["--cc", "--exe", "--main", "--timing", "-Wno-fatal", "-Wno-lint", "-Wno-style"])
                    .args(["--top-module", top, "--Mdir"])
                    .arg(&obj)
                    .arg("-o")
                    .arg(&exe)
                    .args(&names)
                    .current_dir(workdir);
                let f = run_with_timeout(&mut c, workdir, "verilate", self.compile_timeout)
                    .map_err(|e| spawn_err("verilator", e))?;
                if let Some(failed) = finished_compile(f)? {
                    return Ok(failed);
                }
                // copied after verilation so make sees the objects as up to date
                v.restore_runtime(&obj);
                let f = run_with_timeout(&mut v.make(&obj, top), workdir, "make", self.compile_timeout)
                    .map_err(|e| spawn_err("make", e))?;
                if !f.ok() {
                    return Err(SimError::Tool(format!("C++ build of the verilated model failed\n{}", excerpt(&f.combined()))));
                }
                v.save_runtime(&obj);
                vec![exe.to_string_lossy().into_owned()]
            }
            Backend::Custom { compile_cmd, run_cmd } => {
                let argv = fill(compile_cmd, &names, workdir, &exe, top);
                if argv.is_empty() {
                    return Err(SimError::Tool("empty compile command".into()));
                }
                let f = run_with_timeout(&mut command(&argv, workdir), workdir, "compile", self.compile_timeout)
                    .map_err(|e| spawn_err(&argv[0], e))?;
                if let Some(failed) = finished_compile(f)? {
                    return Ok(failed);
                }
                let run = fill(run_cmd, &names, workdir, &exe, top);
                if run.is_empty() {
                    return Err(SimError::Tool("empty run command".into()));
                }
                run
            }
        };
        Ok(CompileOutcome::Compiled(Compiled {
            workdir: workdir.to_path_buf(),
            argv,
        }))
    }

    pub fn simulate(&self, compiled: &Compiled, timeout: Duration) -> Result<SimulationReport, SimError> {
        let f = run_with_timeout(&mut command(&compiled.argv, &compiled.workdir), &compiled.workdir, "run", timeout)
            .map_err(|e| SimError::Tool(format!("cannot run {}: {e}", compiled.argv[0])))?;
        if f.status.is_none() {
            return Ok(SimulationReport::timeout(timeout.as_secs_f64(), &f.stdout));
        }
        let mut r = parse_sim_output(&f.stdout, f.ok());
        if r.status == SimStatus::ToolError && !f.stderr.is_empty() {
            r.raw_excerpt = excerpt(&format!("{}\n{}", r.raw_excerpt, f.stderr));
        }
        Ok(r)
    }

    /// Compiles and simulates a design against a testbench in a fresh
    /// directory. Toolchain failures come back as `tool_error` reports.
    pub fn run(&self, design: &str, testbench: &str) -> SimulationReport {
        match self.try_run(design, testbench) {
            Ok(r) => r,
            Err(e) => SimulationReport::tool_error(e.to_string()),
        }
    }

    fn try_run(&self, design: &str, testbench: &str) -> Result<SimulationReport, SimError> {
        let top = testbench_top(testbench).ok_or(SimError::NoTestbenchModule)?;
        let dir = tempfile::Builder::new().prefix("rtlforge-sim-").tempdir()?;
        match self.compile(&[(DESIGN_FILE, design), (TESTBENCH_FILE, testbench)], &top, dir.path())? {
            CompileOutcome::Failed(r) => Ok(r),
            CompileOutcome::Compiled(c) => self.simulate(&c, self.timeout),
        }
    }
}

/// Keywords for knowledge-base lookup from a compile-error report.
pub fn error_keywords(report: &SimulationReport) -> Result<Vec<String>, SimError> {
    if report.status != SimStatus::CompileError {
        return Err(SimError::WrongStatus(report.status.as_str()));
    }
    let text: Vec<String> = report.compile_messages.iter().map(CompileMessage::render).collect();
    Ok(extract_keywords(&text.join("\n"), SourceKind::CompilerError))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_is_first_testbench_module() {
        assert_eq!(testbench_top("// module fake;\nmodule tb;\nendmodule\nmodule helper; endmodule").as_deref(), Some("tb"));
        assert_eq!(testbench_top("nothing here"), None);
    }

    #[test]
    fn templates_expand_sources() {
        let argv = fill(
            "iverilog -g2012 -s {top} -o {exe} {sources}",
            &["a.v".into(), "b.v".into()],
            Path::new("/w"),
            Path::new("/w/sim"),
            "tb",
        );
        assert_eq!(argv, ["iverilog", "-g2012", "-s", "tb", "-o", "/w/sim", "a.v", "b.v"]);
    }

    #[test]
    fn missing_compiler_is_a_tool_error() {
        let sim = Simulator::with_choice(&SimulatorChoice::Custom {
            compile_cmd: "/nonexistent/rtlforge-compiler {sources}".into(),
            run_cmd: "true".into(),
        })
        .unwrap();
        let r = sim.run("module m; endmodule\n", "module tb; endmodule\n");
        assert_eq!(r.status, SimStatus::ToolError);
        assert!(!r.repairable());
    }

    #[test]
    fn custom_backend_runs_through_placeholders() {
        // the "simulator" echoes the bench, whose comment carries the summary
        let sim = Simulator::with_choice(&SimulatorChoice::Custom {
            compile_cmd: "true {sources}".into(),
            run_cmd: "cat {out}/testbench.v".into(),
        })
        .unwrap();
        let r = sim.run("module m; endmodule\n", "module tb; endmodule\n// Mismatches: 0 in 5 samples\n");
        assert_eq!((r.status, r.total_samples), (SimStatus::Pass, 5));
    }

    #[test]
    fn timeout_kills_the_run() {
        let sim = Simulator::with_choice(&SimulatorChoice::Custom {
            compile_cmd: "true".into(),
            run_cmd: "sleep 5".into(),
        })
        .unwrap()
        .with_timeout(Duration::from_millis(200));
        let start = Instant::now();
        let r = sim.run("module m; endmodule\n", "module tb; endmodule\n");
        assert!(start.elapsed() < Duration::from_secs(3));
        assert!(r.timed_out);
        assert!(r.repairable());
    }

    #[test]
    fn error_keywords_require_compile_errors() {
        let r = SimulationReport::compile_error(
            vec![CompileMessage {
                file: "design.v".into(),
                line: Some(4),
                text: "PROCASSWIRE: Procedural assignment to wire, perhaps intended var".into(),
            }],
            "",
        );
        assert_eq!(error_keywords(&r).unwrap(), vec!["wire_in_always"]);
        assert!(matches!(
            error_keywords(&SimulationReport::tool_error("x")),
            Err(SimError::WrongStatus("tool_error"))
        ));
    }
}
