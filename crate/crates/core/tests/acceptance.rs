//! One pass/fail line per acceptance criterion.
//!
//! Simulator-backed criteria report SKIP when no simulator is installed
//! and `RTLFORGE_ALLOW_NO_SIM` is set. The live smoke run needs
//! `RTLFORGE_LIVE_SMOKE=1` and a provider configuration
//! (`RTLFORGE_CONFIG`, default settings otherwise).

mod common;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use common::oracle::{check_fsms, check_tables, gray_labels, kmap_text, random_fsm, random_table, reference_run, rng, TableCase};
use rand::Rng;
use rtlforge::bench::{pass_at_1, run_suite, write_reports, BenchOptions, Mode, SuiteRun};
use rtlforge::config::Config;
use rtlforge::debug::DebugOutcome;
use rtlforge::kb::{bundled_dir, extract_keywords, KnowledgeBase, SourceKind};
use rtlforge::llm::HttpProvider;
use rtlforge::multimodal::{parse_kmap, FsmInterpreter, MultimodalError};
use rtlforge::pipeline::{load_task, run_task, FinalStatus, PipelineConfig, PipelineError, StageKind};
use rtlforge::sim::{SimStatus, Simulator};
use rtlforge::taxonomy::{aggregate, bundled_labels_path, load_labels, TopLevel};

type Outcome = Result<String, String>;

const TABLES: usize = 200;
const TABLE_BATCH: usize = 50;
const TABLE_TIME_LIMIT: Duration = Duration::from_secs(300);
const RANDOM_KMAPS: usize = 50;
const FSMS: usize = 20;
const SEQUENCES: usize = 100;
const STEPS: usize = 32;
const DEBUG_CAP: usize = 10;
const MDS_FLOOR: f64 = 0.70;

fn demo_suite() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../suites/demo")
}

fn sim_report(what: &str, r: &rtlforge::sim::SimulationReport) -> Result<(), String> {
    if r.status == SimStatus::Pass && r.mismatch_count == 0 {
        Ok(())
    } else {
        Err(format!("{what}: {} ({})", r.summary(), r.raw_excerpt.lines().take(3).collect::<Vec<_>>().join(" | ")))
    }
}

fn truth_tables(sim: &Simulator) -> Outcome {
    let start = Instant::now();
    let mut r = rng(1);
    let cases: Vec<_> = (0..TABLES).map(|_| random_table(&mut r)).collect();
    let mut checks = 0;
    for (i, batch) in cases.chunks(TABLE_BATCH).enumerate() {
        let out = check_tables(sim, batch);
        sim_report(&format!("batch {i}"), &out.report)?;
        if out.report.total_samples != batch.iter().map(|c| c.expected.len() as u64).sum::<u64>() {
            return Err(format!("batch {i}: {} samples simulated", out.report.total_samples));
        }
        checks += out.checks;
    }
    let took = start.elapsed();
    if took > TABLE_TIME_LIMIT {
        return Err(format!("took {:.1} s, limit {} s", took.as_secs_f64(), TABLE_TIME_LIMIT.as_secs()));
    }
    Ok(format!("{TABLES} tables, {checks} specified bits, 0 mismatches, {:.1} s", took.as_secs_f64()))
}

fn kmap_case(cells: &[char; 16], rows: &[u64], cols: &[u64]) -> Result<TableCase, String> {
    let ir = parse_kmap(&kmap_text(cells, rows, cols)).map_err(|e| e.to_string())?;
    let expected = cells
        .iter()
        .map(|c| vec![match c {
            '0' => Some(false),
            '1' => Some(true),
            _ => None,
        }])
        .collect();
    Ok(TableCase { ir, expected })
}

fn kmaps(sim: &Simulator) -> Outcome {
    let std_order = gray_labels(2, 0, false);
    let mut single = ['0'; 16];
    single[0b1101] = '1';
    let mut cases = vec![
        kmap_case(&single, &std_order, &std_order)?,
        kmap_case(&['0'; 16], &std_order, &std_order)?,
        kmap_case(&['1'; 16], &std_order, &std_order)?,
    ];
    let mut r = rng(2);
    for _ in 0..RANDOM_KMAPS {
        let cells: [char; 16] = std::array::from_fn(|_| ['0', '1', 'd'][r.gen_range(0..3)]);
        let rows = gray_labels(2, r.gen_range(0..4), r.gen());
        let cols = gray_labels(2, r.gen_range(0..4), r.gen());
        cases.push(kmap_case(&cells, &rows, &cols)?);
    }
    let out = check_tables(sim, &cases);
    sim_report("k-maps", &out.report)?;
    if out.report.total_samples != 16 * cases.len() as u64 {
        return Err(format!("{} samples simulated", out.report.total_samples));
    }
    let binary = [0, 1, 2, 3];
    let rejected = [(&std_order[..], &binary[..]), (&binary[..], &std_order[..]), (&[0, 1, 3, 1][..], &std_order[..])]
        .iter()
        .filter(|(rows, cols)| matches!(parse_kmap(&kmap_text(&['0'; 16], rows, cols)), Err(MultimodalError::BadGraySequence(_))))
        .count();
    if rejected != 3 {
        return Err(format!("only {rejected} of 3 bad label sequences rejected"));
    }
    Ok(format!("3 fixtures + {RANDOM_KMAPS} random maps x 16 cases pass, 3/3 bad Gray sequences rejected"))
}

fn fsms(sim: &Simulator) -> Outcome {
    let mut r = rng(3);
    let cases: Vec<_> = (0..FSMS).map(|_| random_fsm(&mut r, SEQUENCES, STEPS)).collect();
    let mut expected = Vec::new();
    for (k, c) in cases.iter().enumerate() {
        let mut per = Vec::new();
        for seq in &c.inputs {
            let got: Vec<u64> = FsmInterpreter::run(&c.ir, seq)
                .iter()
                .map(|o| o.iter().fold(0, |acc, b| acc << 1 | *b as u64))
                .collect();
            if got != reference_run(&c.ir, seq) {
                return Err(format!("machine {k}: interpreter disagrees with the lookup model"));
            }
            per.push(got);
        }
        expected.push(per);
    }
    let out = check_fsms(sim, &cases, &expected);
    sim_report("state machines", &out.report)?;
    if out.report.total_samples != out.checks {
        return Err(format!("{} of {} samples simulated", out.report.total_samples, out.checks));
    }
    let states: usize = cases.iter().map(|c| c.ir.states.len()).max().unwrap();
    Ok(format!("{FSMS} machines (<= {states} states) x {SEQUENCES} sequences x {STEPS} steps, 0 disagreements"))
}

fn replay(sim: &Simulator, kb: &KnowledgeBase, out: &Path) -> Result<SuiteRun, String> {
    let run = run_suite(&demo_suite(), Mode::Replay, None, &BenchOptions::default(), Some(kb), sim).map_err(|e| e.to_string())?;
    write_reports(out, &run).map_err(|e| e.to_string())?;
    Ok(run)
}

fn files(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn pipeline_paths(run: &SuiteRun) -> Outcome {
    use StageKind::*;
    let head = [Refine, Generate];
    let with = |tail: &[StageKind]| head.iter().chain(tail).copied().collect::<Vec<_>>();
    let debug = |n: usize| with(&[[RagFix].as_slice(), &vec![Debug; n]].concat());
    let expected: [(&str, Vec<StageKind>, FinalStatus, Option<DebugOutcome>); 12] = [
        ("01_and_gate", with(&[]), FinalStatus::Pass, None),
        ("02_counter_refine", with(&[]), FinalStatus::Pass, None),
        ("03_kmap_f", with(&[MmdConvert]), FinalStatus::Pass, None),
        ("04_full_adder_table", with(&[MmdConvert]), FinalStatus::Pass, None),
        ("05_seq_detector_fsm", with(&[MmdConvert]), FinalStatus::Pass, None),
        ("06_parity_waveform", with(&[MmdConvert]), FinalStatus::Pass, None),
        ("07_mux_wire_in_always", with(&[RagFix]), FinalStatus::Pass, None),
        ("08_popcount", with(&[RagFix]), FinalStatus::Pass, None),
        ("09_edge_reset_latch", debug(1), FinalStatus::Pass, Some(DebugOutcome::Fixed)),
        ("10_accumulator_long_spec", debug(2), FinalStatus::Pass, Some(DebugOutcome::Fixed)),
        ("11_mod3_unrepaired", debug(DEBUG_CAP), FinalStatus::Fail, Some(DebugOutcome::Exhausted)),
        ("12_gray_decoder_stuck", debug(2), FinalStatus::Fail, Some(DebugOutcome::Stagnated)),
    ];
    if run.traces.len() != expected.len() {
        return Err(format!("{} traces", run.traces.len()));
    }
    for (t, (id, kinds, status, outcome)) in run.traces.iter().zip(&expected) {
        if t.task_id != *id || t.kinds() != *kinds || t.final_status != *status || t.debug_outcome != *outcome {
            return Err(format!("{}: {:?} {:?} {:?}", t.task_id, t.kinds(), t.final_status, t.debug_outcome));
        }
        t.check_shape(DEBUG_CAP).map_err(|e| format!("{}: {e}", t.task_id))?;
    }
    Ok(format!("12 traces match their stage sequences, debug cap {DEBUG_CAP} reached once, path exclusivity holds"))
}

fn determinism(a: &Path, b: &Path) -> Outcome {
    let (fa, fb) = (files(a), files(b));
    if fa.is_empty() {
        return Err("no output files".into());
    }
    if fa.keys().ne(fb.keys()) {
        return Err("different file sets".into());
    }
    if let Some((p, _)) = fa.iter().find(|(p, bytes)| fb[*p] != **bytes) {
        return Err(format!("{} differs", p.display()));
    }
    Ok(format!("{} files byte-identical across two replays", fa.len()))
}

fn taxonomy() -> Outcome {
    let labels = load_labels(&bundled_labels_path()).map_err(|e| e.to_string())?;
    let report = aggregate(&labels);
    let models = ["qwen-coder-32b", "gpt-3.5-turbo", "gpt-4-turbo"];
    let table: [(&str, [usize; 3]); 9] = [
        ("wire_in_always", [9, 8, 1]),
        ("numeric_logic", [2, 1, 0]),
        ("bit_select", [1, 3, 0]),
        ("slice_inversion", [1, 1, 0]),
        ("incomplete_code", [0, 4, 3]),
        ("var_redef", [0, 4, 0]),
        ("undefined_var", [0, 1, 1]),
        ("generate_misuse", [0, 1, 1]),
        ("mixed_assign", [0, 1, 0]),
    ];
    for (cat, counts) in table {
        for (m, want) in models.iter().zip(counts) {
            let got = report.count(m, &format!("IKSP/{cat}"));
            if got != want {
                return Err(format!("{m} {cat}: {got}, expected {want}"));
            }
        }
    }
    let mut ratios = Vec::new();
    for m in models {
        let r = report.ratio(m, TopLevel::Mds);
        if r <= MDS_FLOOR {
            return Err(format!("{m}: MDS ratio {r:.3}"));
        }
        ratios.push(format!("{r:.3}"));
    }
    Ok(format!("27 category cells exact, MDS ratios {} > {MDS_FLOOR}", ratios.join("/")))
}

fn pass_rates() -> Outcome {
    let cases = [(142, 156, "91.0"), (91, 156, "58.3")];
    for (p, t, want) in cases {
        let got = pass_at_1(p, t).map_err(|e| e.to_string())?.to_string();
        if got != want {
            return Err(format!("{p}/{t} -> {got}, expected {want}"));
        }
    }
    Ok("142/156 -> 91.0, 91/156 -> 58.3".into())
}

const WIRE_IN_ALWAYS: &str = "module top_module(input clk, input reset, input x, output out);
    localparam A = 1'b0, B = 1'b1;
    reg state;
    always @(posedge clk)
        state <= reset ? A : (x ? B : A);
    always @(*) begin
        case (state)
            A: out = 0;
            B: out = 1;
        endcase
    end
endmodule
";

const WIRE_TB: &str = "module tb;
    reg clk = 0, reset = 1, x = 0;
    wire out;
    top_module dut(.clk(clk), .reset(reset), .x(x), .out(out));
    initial begin
        $display(\"Mismatches: 0 in 0 samples\");
        $finish;
    end
endmodule
";

fn keyword_path(sim: &Simulator, kb: &KnowledgeBase) -> Outcome {
    let r = sim.run(WIRE_IN_ALWAYS, WIRE_TB);
    if r.status != SimStatus::CompileError {
        return Err(format!("status {}", r.status.as_str()));
    }
    let text: Vec<String> = r.compile_messages.iter().map(|m| m.render()).collect();
    let words = extract_keywords(&text.join("\n"), SourceKind::CompilerError);
    let hits = kb.search_keyword(&words);
    if !hits.iter().any(|h| h.entry_id == "wire_in_always") {
        return Err(format!("keywords {words:?} retrieved {:?}", hits.iter().map(|h| &h.entry_id).collect::<Vec<_>>()));
    }
    Ok(format!("compile_error -> keywords {words:?} -> entry wire_in_always"))
}

fn live_smoke(sim: &Simulator, kb: &KnowledgeBase) -> Option<Outcome> {
    std::env::var_os("RTLFORGE_LIVE_SMOKE")?;
    let run = || -> Outcome {
        let cfg = match std::env::var_os("RTLFORGE_CONFIG") {
            Some(p) => Config::load(Path::new(&p)).map_err(|e| e.to_string())?,
            None => Config::default(),
        };
        let llm = HttpProvider::new(cfg.provider.clone()).map_err(|e| e.to_string())?;
        let task = load_task(&demo_suite().join("tasks/01_and_gate")).map_err(|e| e.to_string())?;
        let pcfg = PipelineConfig { max_iter: 1, ..cfg.pipeline_config() };
        match run_task(&task, &pcfg, Some(kb), &llm, sim) {
            Ok(t) => Ok(format!("{} stages, final status {:?}", t.stages.len(), t.final_status)),
            Err(a) if matches!(a.error, PipelineError::Llm(_)) => Err(a.error.to_string()),
            Err(a) => Ok(format!("completed with a non-protocol failure: {}", a.error)),
        }
    };
    Some(run())
}

fn main() {
    let sim = common::simulator();
    let kb = KnowledgeBase::load(&bundled_dir()).expect("bundled knowledge base");
    let mut results: Vec<(u8, &str, Option<Outcome>)> = Vec::new();
    let with_sim = |f: &dyn Fn(&Simulator) -> Outcome| sim.as_ref().map(f);

    results.push((1, "truth-table oracle equivalence", with_sim(&truth_tables)));
    results.push((2, "k-map correctness", with_sim(&kmaps)));
    results.push((3, "fsm interpreter vs simulation", with_sim(&fsms)));
    let (paths, determinism_result) = match &sim {
        Some(s) => {
            let dir = tempfile::tempdir().unwrap();
            let (a, b) = (dir.path().join("a"), dir.path().join("b"));
            match (replay(s, &kb, &a), replay(s, &kb, &b)) {
                (Ok(run), Ok(_)) => (Some(pipeline_paths(&run)), Some(determinism(&a, &b))),
                (Err(e), _) | (_, Err(e)) => (Some(Err(e.clone())), Some(Err(e))),
            }
        }
        None => (None, None),
    };
    results.push((4, "pipeline state machine", paths));
    results.push((5, "replay determinism", determinism_result));
    results.push((6, "taxonomy fixture", Some(taxonomy())));
    results.push((7, "pass@1 arithmetic", Some(pass_rates())));
    results.push((8, "compile-error keyword path", sim.as_ref().map(|s| keyword_path(s, &kb))));
    results.push((9, "live smoke", sim.as_ref().and_then(|s| live_smoke(s, &kb))));

    let mut failed = Vec::new();
    for (n, name, r) in &results {
        match r {
            Some(Ok(detail)) => println!("criterion {n} PASS {name}: {detail}"),
            Some(Err(why)) => {
                println!("criterion {n} FAIL {name}: {why}");
                failed.push(*n);
            }
            None if *n == 9 => println!("criterion {n} SKIP {name}: set RTLFORGE_LIVE_SMOKE=1 to run"),
            None => println!("criterion {n} SKIP {name}: no simulator"),
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
