//! Records the transcripts of the bundled demo suite.
//!
//! Each task gets a small script of model replies chosen so that the suite
//! exercises every pipeline path: plain generation, specification
//! refinement, multimodal conversion, retrieval-backed regeneration and the
//! debugger (fixed, exhausted and stagnated). Replies are routed by the
//! task's module header, which appears in every prompt of that task.
//!
//! ```text
//! cargo run -p rtlforge --example author_demo_suite [suite-dir]
//! ```

use std::path::PathBuf;

use rtlforge::bench::{run_suite, BenchOptions, Mode, TRANSCRIPTS_DIR};
use rtlforge::kb::{bundled_dir, KnowledgeBase};
use rtlforge::llm::{ChatRequest, ScriptRule, ScriptedModel, StageTag};
use rtlforge::refine::NO_VIOLATIONS;
use rtlforge::sim::Simulator;

type Reply = fn(&ChatRequest) -> Option<String>;

fn fenced(code: &str) -> String {
    format!("Here is the implementation.\n\n```verilog\n{}\n```\n", code.trim_matches('\n'))
}

fn no_violations(req: &ChatRequest) -> Option<String> {
    (req.tag == StageTag::Refine).then(|| NO_VIOLATIONS.to_string())
}

const AND_GATE: &str = "module top_module(input a, input b, output y);";

fn and_gate(req: &ChatRequest) -> Option<String> {
    match req.tag {
        StageTag::Generate => Some(fenced("module top_module(input a, input b, output y);\n    assign y = a & b;\nendmodule")),
        _ => no_violations(req),
    }
}

const COUNTER: &str = "module top_module(input clk, input reset, input en, output reg [3:0] q);";

fn counter(req: &ChatRequest) -> Option<String> {
    match req.tag {
        StageTag::Refine => Some(
            "VIOLATION reset_spec: the reset is mentioned but its timing, active level and cleared value are not stated\n\
             VIOLATION clock_edge: the active clock edge is not stated\n\
             REFINED_BEGIN\n\
             Build a 4-bit counter q that increments by one on each rising edge of clk when en is high, and holds its value when en is low. \
             reset is synchronous and active-high: on a rising edge of clk with reset high, q becomes 0. Reset has priority over en. \
             The counter wraps from 15 to 0.\n\
             REFINED_END\n"
                .into(),
        ),
        StageTag::Generate if req.user_text.contains("synchronous and active-high") => Some(fenced(
            "module top_module(input clk, input reset, input en, output reg [3:0] q);\n    always @(posedge clk) begin\n        if (reset)\n            q <= 4'd0;\n        else if (en)\n            q <= q + 4'd1;\n    end\nendmodule",
        )),
        // without the clarification the reset is guessed to be asynchronous
        StageTag::Generate => Some(fenced(
            "module top_module(input clk, input reset, input en, output reg [3:0] q);\n    always @(posedge clk or posedge reset) begin\n        if (reset)\n            q <= 4'd0;\n        else if (en)\n            q <= q + 4'd1;\n    end\nendmodule",
        )),
        _ => None,
    }
}

const KMAP: &str = "module top_module(input a, input b, input c, input d, output f);";

fn kmap(req: &ChatRequest) -> Option<String> {
    match req.tag {
        // rows read in binary order instead of Gray order
        StageTag::Generate => Some(fenced(
            "module top_module(input a, input b, input c, input d, output f);\n    assign f = (~a & ~b & c & d) | (a & ~b & ~c) | (a & b & c & ~d);\nendmodule",
        )),
        StageTag::MmdConvert if req.user_text.contains("TRUTH TABLE") => Some(fenced(
            "module top_module(input a, input b, input c, input d, output f);\n    assign f = (~a & ~b & c & ~d) | (a & ~b & c & d) | (a & b & ~c);\nendmodule",
        )),
        _ => no_violations(req),
    }
}

const ADDER: &str = "module top_module(input a, input b, input ci, output s, output co);";

fn adder(req: &ChatRequest) -> Option<String> {
    match req.tag {
        StageTag::Generate => Some(fenced(
            "module top_module(input a, input b, input ci, output s, output co);\n    assign s = a ^ b;\n    assign co = a & b;\nendmodule",
        )),
        StageTag::MmdConvert if req.user_text.contains("TRUTH TABLE") => Some(fenced(
            "module top_module(input a, input b, input ci, output s, output co);\n    assign s = a ^ b ^ ci;\n    assign co = (a & b) | (a & ci) | (b & ci);\nendmodule",
        )),
        _ => no_violations(req),
    }
}

const DETECTOR: &str = "module top_module(input clk, input reset, input x, output z);";

fn detector(req: &ChatRequest) -> Option<String> {
    const FSM: &str = "module top_module(input clk, input reset, input x, output z);\n    localparam A = 2'd0, B = 2'd1, C = 2'd2;\n    reg [1:0] state, next;\n    always @(*) begin\n        case (state)\n            A: next = x ? B : A;\n            B: next = x ? C : A;\n            C: next = x ? C : A;\n            default: next = A;\n        endcase\n    end\n    always @(posedge clk) begin\n        if (reset)\n            state <= A;\n        else\n            state <= next;\n    end\n    assign z = OUTPUT;\nendmodule";
    match req.tag {
        StageTag::Generate => Some(fenced(&FSM.replace("OUTPUT", "(state == B) | (state == C)"))),
        StageTag::MmdConvert if req.user_text.contains("STATE MACHINE") => Some(fenced(&FSM.replace("OUTPUT", "(state == C)"))),
        _ => no_violations(req),
    }
}

const PARITY: &str = "module top_module(input a, input b, input c, output y);";

fn parity(req: &ChatRequest) -> Option<String> {
    match req.tag {
        StageTag::Generate => Some(fenced("module top_module(input a, input b, input c, output y);\n    assign y = a ^ b ^ c;\nendmodule")),
        StageTag::MmdConvert if req.user_text.contains("TRUTH TABLE") => {
            Some(fenced("module top_module(input a, input b, input c, output y);\n    assign y = ~(a ^ b ^ c);\nendmodule"))
        }
        _ => no_violations(req),
    }
}

const MUX: &str = "module top_module(input a, input b, input sel, output out);";

fn mux(req: &ChatRequest) -> Option<String> {
    match req.tag {
        StageTag::Generate => Some(fenced(
            "module top_module(input a, input b, input sel, output out);\n    always @(*) begin\n        if (sel)\n            out = b;\n        else\n            out = a;\n    end\nendmodule",
        )),
        StageTag::RagFix if req.system_text.contains("wire assigned in always block") => {
            Some(fenced("module top_module(input a, input b, input sel, output out);\n    assign out = sel ? b : a;\nendmodule"))
        }
        _ => no_violations(req),
    }
}

const POPCOUNT: &str = "module top_module(input [7:0] in, output [3:0] count);";

fn popcount(req: &ChatRequest) -> Option<String> {
    const SUM: &str = "module top_module(input [7:0] in, output [3:0] count);\n    assign count = in[0] + in[1] + in[2] + in[3] + in[4] + in[5] + in[6]TAIL;\nendmodule";
    match req.tag {
        StageTag::Generate => Some(fenced(&SUM.replace("TAIL", ""))),
        StageTag::RagFix => Some(fenced(&SUM.replace("TAIL", " + in[7]"))),
        _ => no_violations(req),
    }
}

const EDGE: &str = "module top_module(input clk, input reset, input in, output reg pulse);";

fn edge(req: &ChatRequest) -> Option<String> {
    const BUGGY: &str = "module top_module(input clk, input reset, input in, output reg pulse);\n    reg prev;\n    always @(posedge clk) begin\n        if (reset) begin\n            pulse <= 1'b0;\n        end else begin\n            pulse <= in & ~prev;\n            prev <= in;\n        end\n    end\nendmodule";
    match req.tag {
        StageTag::Generate | StageTag::RagFix => Some(fenced(BUGGY)),
        StageTag::Localize => {
            Some("LINE 5: the reset branch clears pulse but leaves prev holding the input sampled before reset\n".into())
        }
        StageTag::Correct if req.user_text.contains("Suspect statements") => Some(fenced(
            &BUGGY.replace("            pulse <= 1'b0;\n        end else", "            prev <= 1'b0;\n            pulse <= 1'b0;\n        end else"),
        )),
        _ => no_violations(req),
    }
}

const ACCUMULATOR: &str =
    "module top_module(input clk, input reset, input clr, input load, input add, input [7:0] d, output reg [7:0] acc);";

fn accumulator(req: &ChatRequest) -> Option<String> {
    const WRONG: &str = "module top_module(input clk, input reset, input clr, input load, input add, input [7:0] d, output reg [7:0] acc);\n    always @(posedge clk) begin\n        if (reset)\n            acc <= 8'd0;\n        else if (load)\n            acc <= d;\n        else if (clr)\n            acc <= ZERO;\n        else if (add)\n            acc <= acc + d;\n    end\nendmodule";
    const FIXED: &str = "module top_module(input clk, input reset, input clr, input load, input add, input [7:0] d, output reg [7:0] acc);\n    always @(posedge clk) begin\n        if (reset)\n            acc <= 8'd0;\n        else if (clr)\n            acc <= 8'd0;\n        else if (load)\n            acc <= d;\n        else if (add)\n            acc <= acc + d;\n    end\nendmodule";
    match req.tag {
        StageTag::Generate | StageTag::RagFix => Some(fenced(&WRONG.replace("ZERO", "8'd0"))),
        // first round: a free-form answer the debugger cannot use
        StageTag::Localize if !req.user_text.contains("8'h00") => {
            Some("The accumulator seems to mishandle one of the control inputs; check the branch order.\n".into())
        }
        StageTag::Localize => Some(
            "LINE 5: load is tested before clr, but clr has priority over load\n\
             LINE 7: the clr branch is unreachable when load is also high\n"
                .into(),
        ),
        StageTag::Correct if req.user_text.contains("Suspect statements") => Some(fenced(FIXED)),
        StageTag::Correct => Some(fenced(&WRONG.replace("ZERO", "8'h00"))),
        _ => no_violations(req),
    }
}

const MOD3: &str = "module top_module(input [7:0] x, output [1:0] r);";

fn mod3(req: &ChatRequest) -> Option<String> {
    const LOW: &str = "module top_module(input [7:0] x, output [1:0] r);\n    assign r = x[1:0];\nendmodule";
    const FOLDED: &str = "module top_module(input [7:0] x, output [1:0] r);\n    assign r = x[1:0] ^ x[3:2];\nendmodule";
    match req.tag {
        StageTag::Generate | StageTag::RagFix => Some(fenced(LOW)),
        StageTag::Localize => Some("LINE 2: r is computed from only some of the bits of x\n".into()),
        // alternates between two wrong answers until the budget runs out
        StageTag::Correct if req.user_text.contains("x[3:2]") => Some(fenced(LOW)),
        StageTag::Correct => Some(fenced(FOLDED)),
        _ => no_violations(req),
    }
}

const GRAY: &str = "module top_module(input [2:0] g, output [2:0] b);";

fn gray(req: &ChatRequest) -> Option<String> {
    // binary-to-Gray instead of Gray-to-binary, and the model insists on it
    const WRONG: &str = "module top_module(input [2:0] g, output [2:0] b);\n    assign b = g ^ (g >> 1);\nendmodule";
    match req.tag {
        StageTag::Generate | StageTag::RagFix | StageTag::Correct => Some(fenced(WRONG)),
        StageTag::Localize => Some("LINE 2: the shift direction of the xor chain may be wrong\n".into()),
        _ => no_violations(req),
    }
}

const TASKS: [(&str, Reply); 12] = [
    (AND_GATE, and_gate),
    (COUNTER, counter),
    (KMAP, kmap),
    (ADDER, adder),
    (DETECTOR, detector),
    (PARITY, parity),
    (MUX, mux),
    (POPCOUNT, popcount),
    (EDGE, edge),
    (ACCUMULATOR, accumulator),
    (MOD3, mod3),
    (GRAY, gray),
];

fn model() -> ScriptedModel {
    for (i, (a, _)) in TASKS.iter().enumerate() {
        for (j, (b, _)) in TASKS.iter().enumerate() {
            assert!(i == j || !b.contains(a), "header {a} is ambiguous");
        }
    }
    ScriptedModel::new(
        TASKS
            .iter()
            .map(|&(header, reply)| {
                ScriptRule::new(header, move |req: &ChatRequest| {
                    if req.user_text.contains(header) {
                        reply(req)
                    } else {
                        None
                    }
                })
            })
            .collect(),
    )
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let suite = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../suites/demo"));
    let transcripts = suite.join(TRANSCRIPTS_DIR);
    if transcripts.exists() {
        std::fs::remove_dir_all(&transcripts)?;
    }
    std::fs::create_dir_all(&transcripts)?;

    let kb = KnowledgeBase::load(&bundled_dir())?;
    let sim = Simulator::detect()?;
    let opts = BenchOptions {
        check_golden: true,
        ..BenchOptions::default()
    };
    let llm = model();
    let run = run_suite(&suite, Mode::Record, Some(&llm), &opts, Some(&kb), &sim)?;
    for (t, r) in run.traces.iter().zip(&run.result.tasks) {
        let kinds: Vec<&str> = t.kinds().iter().map(|k| k.as_str()).collect();
        println!(
            "{:<28} {:<5} golden={:?} outcome={:?} {}",
            t.task_id,
            format!("{:?}", t.final_status),
            r.golden_passes,
            t.debug_outcome.map(|o| o.as_str()),
            kinds.join(" > ")
        );
        if let Some(e) = &t.error {
            println!("    error: {e}");
        }
    }
    print!("{}", run.result.render_report());
    Ok(())
}
