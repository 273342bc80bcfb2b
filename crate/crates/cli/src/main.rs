use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use rtlforge::bench::{run_suite, transcript_path, write_reports, BenchOptions, Mode};
use rtlforge::config::Config;
use rtlforge::debug::debug_loop;
use rtlforge::kb::{bundled_dir, extract_keywords, KnowledgeBase, SourceKind};
use rtlforge::llm::{ChatModel, HttpProvider, RecordingModel, ReplayModel, Transcript};
use rtlforge::multimodal::{self, bind_to_interface, convert_raw, detect, emit_verilog, BlockKind, ConvertedIr};
use rtlforge::pipeline::{load_task, run_task, Evaluator};
use rtlforge::sim::Simulator;
use rtlforge::taxonomy::{aggregate, bundled_labels_path, load_labels};
use rtlforge::verilog::parse_module_header;

#[derive(Parser)]
#[command(name = "rtlforge", version, about = "Generate and repair Verilog RTL with an LLM")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunFlags {
    #[arg(long, value_enum, default_value_t = ModeArg::Live)]
    mode: ModeArg,
    /// Knowledge base directory (defaults to the bundled one).
    #[arg(long)]
    kb: Option<PathBuf>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    temperature: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Live,
    Record,
    Replay,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Live => Mode::Live,
            ModeArg::Record => Mode::Record,
            ModeArg::Replay => Mode::Replay,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline on one task directory.
    Gen {
        task: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        /// Transcript for record/replay (defaults to <task>/transcript.jsonl).
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Write the trace JSON here instead of stdout.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Debug an existing design against a task's testbench.
    Repair {
        task: PathBuf,
        /// Verilog file to repair.
        code: PathBuf,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Where to write the final code (stdout if omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a suite and write traces and reports.
    Bench {
        #[arg(long)]
        suite: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        run: RunFlags,
        #[arg(long)]
        jobs: Option<usize>,
        /// Also simulate each reference design against its testbench.
        #[arg(long)]
        golden: bool,
        /// Only run these task ids.
        #[arg(long = "only", value_delimiter = ',')]
        only: Vec<String>,
    },
    /// Query the knowledge base.
    Kb {
        #[command(subcommand)]
        command: KbCommand,
    },
    /// Convert a K-map, truth table, state table or waveform file.
    Convert {
        file: PathBuf,
        /// Format of the whole file; detected blocks are used when omitted.
        #[arg(long, value_enum)]
        kind: Option<KindArg>,
        /// Emit Verilog for this interface instead of the canonical IR text.
        #[arg(long)]
        interface: Option<PathBuf>,
    },
    /// Error-taxonomy labels.
    Labels {
        #[command(subcommand)]
        command: LabelsCommand,
    },
}

#[derive(Subcommand)]
enum KbCommand {
    Search {
        query: String,
        #[arg(short, default_value_t = 3)]
        k: usize,
        /// Match knowledge-entry patterns against keywords extracted from the query.
        #[arg(long)]
        keyword: bool,
        #[arg(long)]
        kb: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum LabelsCommand {
    Report {
        /// labels.csv (defaults to the bundled corpus).
        path: Option<PathBuf>,
        #[arg(long)]
        csv: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Kmap,
    TruthTable,
    StateTable,
    Waveform,
}

impl From<KindArg> for BlockKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Kmap => BlockKind::Kmap,
            KindArg::TruthTable => BlockKind::TruthTable,
            KindArg::StateTable => BlockKind::StateTable,
            KindArg::Waveform => BlockKind::Waveform,
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    match path {
        Some(p) => Config::load(p).with_context(|| format!("loading {}", p.display())),
        None => Ok(Config::default()),
    }
}

fn apply_flags(cfg: &mut Config, run: &RunFlags) {
    if let Some(m) = run.max_iter {
        cfg.pipeline.max_iter = m;
    }
    if let Some(t) = run.temperature {
        cfg.provider.temperature = t;
    }
    if let Some(kb) = &run.kb {
        cfg.paths.kb = Some(kb.clone());
    }
}

fn load_kb(cfg: &Config) -> Result<KnowledgeBase> {
    let dir = cfg.paths.kb.clone().unwrap_or_else(bundled_dir);
    KnowledgeBase::load(&dir).with_context(|| format!("loading knowledge base {}", dir.display()))
}

fn live_model(cfg: &Config) -> Result<HttpProvider> {
    HttpProvider::new(cfg.provider.clone()).context("configuring provider")
}

/// Runs `f` with the model selected by `mode`, saving the transcript when recording.
fn with_model<T>(cfg: &Config, mode: Mode, transcript: &Path, f: impl FnOnce(&dyn ChatModel) -> T) -> Result<T> {
    match mode {
        Mode::Live => Ok(f(&live_model(cfg)?)),
        Mode::Replay => {
            let t = Transcript::load(transcript)?;
            Ok(f(&ReplayModel::new(t)))
        }
        Mode::Record => {
            let prior = if transcript.exists() { Transcript::load(transcript)? } else { Transcript::new() };
            let rec = RecordingModel::with_sink(live_model(cfg)?, prior);
            let out = f(&rec);
            rec.snapshot().save(transcript)?;
            Ok(out)
        }
    }
}

fn simulator(cfg: &Config) -> Result<Simulator> {
    cfg.simulator.build().context("setting up the simulator")
}

fn main() -> Result<()> {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_env("RTLFORGE_LOG").unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let cli = Cli::parse();
    let mut cfg = load_config(cli.config.as_deref())?;

    match cli.command {
        Command::Gen { task, run, transcript, trace } => {
            apply_flags(&mut cfg, &run);
            let task = load_task(&task)?;
            let kb = load_kb(&cfg)?;
            let sim = simulator(&cfg)?;
            let tpath = transcript.unwrap_or_else(|| PathBuf::from(format!("{}.jsonl", task.id)));
            let mut pcfg = cfg.pipeline_config();
            pcfg.zero_wall_time = matches!(run.mode, ModeArg::Replay);
            let out = with_model(&cfg, run.mode.into(), &tpath, |llm| run_task(&task, &pcfg, Some(&kb), llm, &sim))?;
            let (t, err) = match out {
                Ok(t) => (t, None),
                Err(a) => (a.trace, Some(a.error)),
            };
            let json = serde_json::to_string_pretty(&t)? + "\n";
            match trace {
                Some(p) => fs::write(&p, json).with_context(|| format!("writing {}", p.display()))?,
                None => print!("{json}"),
            }
            let kinds: Vec<&str> = t.kinds().iter().map(|k| k.as_str()).collect();
            eprintln!("{}: {:?} after {}", t.task_id, t.final_status, kinds.join(" > "));
            if let Some(e) = err {
                bail!("run aborted: {e}");
            }
        }
        Command::Repair { task, code, run, transcript, out } => {
            apply_flags(&mut cfg, &run);
            let task = load_task(&task)?;
            let code = fs::read_to_string(&code).with_context(|| format!("reading {}", code.display()))?;
            let kb = load_kb(&cfg)?;
            let sim = simulator(&cfg)?;
            let tpath = transcript.unwrap_or_else(|| PathBuf::from(format!("{}.repair.jsonl", task.id)));
            let report = sim.evaluate(&code, &task.testbench);
            eprintln!("initial: {}", report.summary());
            let evaluate = |c: &str| sim.evaluate(c, &task.testbench);
            let result = with_model(&cfg, run.mode.into(), &tpath, |llm| {
                debug_loop(&task.description, &code, report, &evaluate, llm, Some(&kb), cfg.pipeline.max_iter)
            })?;
            let run = result.map_err(|a| anyhow::anyhow!("{a}"))?;
            for it in &run.iterations {
                eprintln!("round {}: {}", it.index, it.report_after.summary());
            }
            eprintln!("outcome: {}", run.outcome.as_str());
            match out {
                Some(p) => fs::write(&p, &run.final_code)?,
                None => print!("{}", run.final_code),
            }
        }
        Command::Bench { suite, out, run, jobs, golden, only } => {
            apply_flags(&mut cfg, &run);
            let suite = suite.or(cfg.paths.suite.clone()).context("no suite given (--suite or paths.suite)")?;
            let out = out.or(cfg.paths.out.clone()).unwrap_or_else(|| PathBuf::from("out"));
            let mode: Mode = run.mode.into();
            let kb = load_kb(&cfg)?;
            let sim = simulator(&cfg)?;
            let opts = BenchOptions {
                pipeline: cfg.pipeline_config(),
                jobs: jobs.unwrap_or(cfg.pipeline.jobs),
                check_golden: golden,
                only,
            };
            let live = match mode {
                Mode::Replay => None,
                _ => {
                    cfg.provider.assert_bench_temperature()?;
                    Some(live_model(&cfg)?)
                }
            };
            let start = Instant::now();
            let result = run_suite(&suite, mode, live.as_ref().map(|m| m as &dyn ChatModel), &opts, Some(&kb), &sim)?;
            write_reports(&out, &result)?;
            print!("{}", result.result.render_report());
            eprintln!(
                "{} tasks in {:.1} s; reports in {} (transcripts: {})",
                result.result.total,
                start.elapsed().as_secs_f64(),
                out.display(),
                transcript_path(&suite, "<id>").display()
            );
        }
        Command::Kb { command: KbCommand::Search { query, k, keyword, kb } } => {
            if kb.is_some() {
                cfg.paths.kb = kb;
            }
            let kb = load_kb(&cfg)?;
            let hits = if keyword {
                let mut words = extract_keywords(&query, SourceKind::Spec);
                words.extend(extract_keywords(&query, SourceKind::CompilerError));
                if words.is_empty() {
                    words.push(query.clone());
                }
                eprintln!("keywords: {}", words.join(", "));
                kb.search_keyword(&words)
            } else {
                kb.search_semantic(&query, k, None)?
            };
            for h in &hits {
                let e = kb.get(&h.entry_id).expect("hits name known entries");
                println!("{:.3}  {}  {}", h.score, e.id, e.keyword);
            }
            if hits.is_empty() {
                eprintln!("no matching entries");
            }
        }
        Command::Convert { file, kind, interface } => {
            let text = fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
            let mut irs: Vec<ConvertedIr> = match kind {
                Some(k) => vec![convert_raw(k.into(), &text)?],
                None => {
                    let blocks = detect(&text);
                    if blocks.is_empty() {
                        bail!("no K-map, truth table, state table or waveform found in {}", file.display());
                    }
                    blocks.iter().map(multimodal::convert).collect::<Result<_, _>>()?
                }
            };
            match interface {
                None => {
                    for ir in &irs {
                        println!("{}", ir.render().trim_end());
                    }
                }
                Some(p) => {
                    let iface_text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
                    let header = parse_module_header(&iface_text)?;
                    if irs.len() != 1 {
                        bail!("{} blocks found; emitting Verilog needs exactly one (use --kind)", irs.len());
                    }
                    bind_to_interface(&mut irs[0], &header);
                    print!("{}", emit_verilog(&irs[0], &header.name, &header.ports)?);
                }
            }
        }
        Command::Labels { command: LabelsCommand::Report { path, csv } } => {
            let path = path.unwrap_or_else(bundled_labels_path);
            let labels = load_labels(&path)?;
            let report = aggregate(&labels);
            if csv {
                print!("{}", report.to_csv());
            } else {
                print!("{}", report.render_table());
            }
        }
    }
    Ok(())
}
