//! Random multimodal fixtures with expected values computed independently
//! of the crate, plus batch testbenches that check many emitted modules in
//! one simulator run.

use std::fmt::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rtlforge::multimodal::{emit_fsm, emit_truth_table};
use rtlforge::multimodal::{
    ClockEdge, ResetKind, ResetSpec, Signal, StateTransitionIR, Sym, Transition, TruthTableIR, TtRow,
};
use rtlforge::sim::{SimulationReport, Simulator};
use rtlforge::verilog::{Direction, Port};

pub fn rng(seed: u64) -> ChaCha8Rng {
    rand::SeedableRng::seed_from_u64(seed)
}

fn port(s: &Signal, dir: Direction) -> Port {
    if s.width == 1 {
        Port::scalar(&s.name, dir)
    } else {
        Port::vector(&s.name, dir, s.width as i64 - 1, 0)
    }
}

fn split_width(rng: &mut ChaCha8Rng, total: u32, max_parts: u32, prefix: &str) -> Vec<Signal> {
    let parts = rng.gen_range(1..=max_parts.min(total));
    let mut cuts: Vec<u32> = (1..total).collect();
    cuts.shuffle(rng);
    let mut cuts: Vec<u32> = cuts.into_iter().take(parts as usize - 1).collect();
    cuts.sort_unstable();
    cuts.push(total);
    let mut prev = 0;
    cuts.iter()
        .enumerate()
        .map(|(i, &c)| {
            let s = Signal::new(format!("{prefix}{i}"), c - prev);
            prev = c;
            s
        })
        .collect()
}

/// `width`-bit words packed LSB-first into one Verilog hex literal.
pub fn packed(words: &[u64], width: usize) -> String {
    let bits = words.len() * width;
    let mut nibbles = vec![0u8; bits.div_ceil(4)];
    for (k, w) in words.iter().enumerate() {
        for b in 0..width {
            if (w >> b) & 1 == 1 {
                let pos = k * width + b;
                nibbles[pos / 4] |= 1 << (pos % 4);
            }
        }
    }
    let hex: String = nibbles.iter().rev().map(|n| char::from_digit(*n as u32, 16).unwrap()).collect();
    format!("{bits}'h{hex}")
}

/// A random table and, for every full input assignment, the specified
/// value of each output bit (MSB-first).
pub struct TableCase {
    pub ir: TruthTableIR,
    pub expected: Vec<Vec<Option<bool>>>,
}

fn random_sym(rng: &mut ChaCha8Rng, dc: f64) -> Sym {
    if rng.gen_bool(dc) {
        Sym::Dc
    } else {
        Sym::from_bool(rng.gen())
    }
}

pub fn random_table(rng: &mut ChaCha8Rng) -> TableCase {
    let n = rng.gen_range(1..=8u32);
    let m = rng.gen_range(1..=4u32);
    let inputs = split_width(rng, n, 3, "i");
    let outputs = split_width(rng, m, 2, "o");
    let (n, m) = (n as usize, m as usize);
    let mut expected: Vec<Vec<Option<bool>>> = vec![vec![None; m]; 1 << n];
    let mut rows = Vec::new();
    let input_dc = rng.gen_range(0.0..0.3);
    let output_dc = rng.gen_range(0.0..0.3);
    for _ in 0..(1usize << n) {
        let pattern: Vec<Sym> = (0..n).map(|_| random_sym(rng, input_dc)).collect();
        let outs: Vec<Sym> = (0..m).map(|_| random_sym(rng, output_dc)).collect();
        let covered: Vec<usize> = (0..1usize << n)
            .filter(|v| pattern.iter().enumerate().all(|(i, s)| s.matches((v >> (n - 1 - i)) & 1 == 1)))
            .collect();
        let clash = covered.iter().any(|&v| {
            outs.iter()
                .zip(&expected[v])
                .any(|(o, e)| matches!((o.value(), e), (Some(a), Some(b)) if a != *b))
        });
        if clash {
            continue;
        }
        for &v in &covered {
            for (o, e) in outs.iter().zip(expected[v].iter_mut()) {
                if let Some(b) = o.value() {
                    *e = Some(b);
                }
            }
        }
        rows.push(TtRow { inputs: pattern, outputs: outs });
    }
    TableCase {
        ir: TruthTableIR { inputs, outputs, rows },
        expected,
    }
}

pub struct BatchOutcome {
    pub report: SimulationReport,
    pub checks: u64,
}

/// Emits every table as module `tt_<k>` and checks all of them exhaustively
/// in a single simulation. Unspecified bits are masked out.
pub fn check_tables(sim: &Simulator, cases: &[TableCase]) -> BatchOutcome {
    let mut design = String::new();
    let mut tb = String::from("`timescale 1ns/1ps\nmodule tb;\n    integer v, errors = 0, samples = 0;\n");
    let mut body = String::new();
    let mut checks = 0;
    for (k, c) in cases.iter().enumerate() {
        let ir = &c.ir;
        let iface: Vec<Port> = ir
            .inputs
            .iter()
            .map(|s| port(s, Direction::Input))
            .chain(ir.outputs.iter().map(|s| port(s, Direction::Output)))
            .collect();
        design.push_str(&emit_truth_table(ir, &format!("tt_{k}"), &iface).expect("random tables are valid"));
        let (n, m) = (ir.input_bits(), ir.output_bits());
        let mut exp = Vec::new();
        let mut mask = Vec::new();
        for bits in &c.expected {
            let (mut e, mut msk) = (0u64, 0u64);
            for (j, b) in bits.iter().enumerate() {
                if let Some(b) = b {
                    msk |= 1 << (m - 1 - j);
                    e |= (*b as u64) << (m - 1 - j);
                    checks += 1;
                }
            }
            exp.push(e);
            mask.push(msk);
        }
        let _ = writeln!(tb, "    reg [{}:0] in_{k};\n    wire [{}:0] out_{k};", n - 1, m - 1);
        let _ = writeln!(tb, "    localparam [{}:0] EXP_{k} = {};", exp.len() * m - 1, packed(&exp, m));
        let _ = writeln!(tb, "    localparam [{}:0] MASK_{k} = {};", mask.len() * m - 1, packed(&mask, m));
        let mut conns = Vec::new();
        let mut hi = n;
        for s in &ir.inputs {
            conns.push(format!(".{}(in_{k}[{}:{}])", s.name, hi - 1, hi - s.width as usize));
            hi -= s.width as usize;
        }
        let mut hi = m;
        for s in &ir.outputs {
            conns.push(format!(".{}(out_{k}[{}:{}])", s.name, hi - 1, hi - s.width as usize));
            hi -= s.width as usize;
        }
        let _ = writeln!(tb, "    tt_{k} u_{k}({});", conns.join(", "));
        let _ = writeln!(
            body,
            "        for (v = 0; v < {}; v = v + 1) begin\n            in_{k} = v;\n            #1 samples = samples + 1;\n            \
             if (((out_{k} ^ EXP_{k}[v*{m} +: {m}]) & MASK_{k}[v*{m} +: {m}]) != 0) begin\n                errors = errors + 1;\n                \
             $display(\"MISMATCH time=%0t sig=tt_{k} exp=%b got=%b\", $time, EXP_{k}[v*{m} +: {m}], out_{k});\n            end\n        end",
            1usize << n
        );
    }
    let _ = write!(
        tb,
        "    initial begin\n{body}\n        $display(\"Mismatches: %0d in %0d samples\", errors, samples);\n        $finish;\n    end\nendmodule\n"
    );
    BatchOutcome {
        report: sim.run(&design, &tb),
        checks,
    }
}

/// Reflected Gray order of `k` bits, rotated and optionally reversed.
pub fn gray_labels(k: usize, rotate: usize, reverse: bool) -> Vec<u64> {
    let mut g: Vec<u64> = (0..1u64 << k).map(|i| i ^ (i >> 1)).collect();
    let len = g.len();
    g.rotate_left(rotate % len);
    if reverse {
        g.reverse();
    }
    g
}

/// Markdown K-map for a function of `ab\cd`; `cells[minterm]` is '0', '1' or 'd'.
pub fn kmap_text(cells: &[char; 16], rows: &[u64], cols: &[u64]) -> String {
    let mut out = String::from("| ab\\cd |");
    for c in cols {
        let _ = write!(out, " {c:02b} |");
    }
    out.push_str("\n|---|---|---|---|---|\n");
    for r in rows {
        let _ = write!(out, "| {r:02b} |");
        for c in cols {
            let _ = write!(out, " {} |", cells[(r << 2 | c) as usize]);
        }
        out.push('\n');
    }
    out
}

pub struct FsmCase {
    pub ir: StateTransitionIR,
    /// Input word per step, `sequences x steps`.
    pub inputs: Vec<Vec<u64>>,
}

pub fn random_fsm(rng: &mut ChaCha8Rng, sequences: usize, steps: usize) -> FsmCase {
    let n_states = rng.gen_range(2..=6);
    let states: Vec<String> = (0..n_states).map(|i| format!("S{i}")).collect();
    let ni = rng.gen_range(1..=3u32);
    let no = rng.gen_range(1..=2u32);
    let inputs = split_width(rng, ni, 2, "x");
    let outputs = split_width(rng, no, 2, "z");
    let moore = rng.gen_bool(0.5);
    let (ni, no) = (ni as usize, no as usize);
    let mut transitions = Vec::new();
    for s in &states {
        let state_out: Vec<Sym> = (0..no).map(|_| random_sym(rng, 0.1)).collect();
        let out = |rng: &mut ChaCha8Rng| if moore { state_out.clone() } else { (0..no).map(|_| random_sym(rng, 0.1)).collect() };
        if rng.gen_bool(0.15) {
            transitions.push(Transition {
                current: s.clone(),
                inputs: vec![Sym::Dc; ni],
                next: states.choose(rng).unwrap().clone(),
                outputs: out(rng),
            });
            continue;
        }
        for v in 0..1u64 << ni {
            transitions.push(Transition {
                current: s.clone(),
                inputs: (0..ni).map(|i| Sym::from_bool((v >> (ni - 1 - i)) & 1 == 1)).collect(),
                next: states.choose(rng).unwrap().clone(),
                outputs: out(rng),
            });
        }
    }
    let ir = StateTransitionIR {
        reset_state: states.choose(rng).unwrap().clone(),
        states,
        reset_state_inferred: false,
        reset: Some(ResetSpec {
            signal: "rst".into(),
            kind: if rng.gen() { ResetKind::Sync } else { ResetKind::Async },
            active_high: rng.gen(),
        }),
        clock: "clk".into(),
        clock_edge: ClockEdge::Pos,
        inputs,
        outputs,
        transitions,
        moore,
    };
    let inputs = (0..sequences)
        .map(|_| (0..steps).map(|_| rng.gen_range(0..1u64 << ni)).collect())
        .collect();
    FsmCase { ir, inputs }
}

/// Plain table lookup model of a machine: outputs sampled before each edge,
/// don't-care outputs read as 0.
pub fn reference_run(ir: &StateTransitionIR, inputs: &[u64]) -> Vec<u64> {
    let ni = ir.input_bits();
    let mut state = ir.reset_state.clone();
    let mut out = Vec::new();
    for &v in inputs {
        let t = ir
            .transitions
            .iter()
            .find(|t| {
                t.current == state
                    && t.inputs.iter().enumerate().all(|(i, s)| *s == Sym::Dc || s.value() == Some((v >> (ni - 1 - i)) & 1 == 1))
            })
            .expect("complete machine");
        // a Moore state carries the same outputs on every transition
        out.push(t.outputs.iter().fold(0u64, |acc, s| acc << 1 | (s.value() == Some(true)) as u64));
        state = t.next.clone();
    }
    out
}

/// Emits every machine as `fsm_<k>` and replays all sequences on all of
/// them in parallel, comparing against `expected[k][seq][step]`.
pub fn check_fsms(sim: &Simulator, cases: &[FsmCase], expected: &[Vec<Vec<u64>>]) -> BatchOutcome {
    let mut design = String::new();
    let mut tb = String::from(
        "`timescale 1ns/1ps\nmodule tb;\n    reg clk = 0;\n    reg rst_on = 0;\n    integer s, t, k, errors = 0, samples = 0;\n    always #5 clk = ~clk;\n",
    );
    let mut drive = String::new();
    let mut check = String::new();
    let sequences = cases[0].inputs.len();
    let steps = cases[0].inputs[0].len();
    let mut checks = 0;
    for (k, c) in cases.iter().enumerate() {
        let ir = &c.ir;
        let r = ir.reset.as_ref().unwrap();
        let iface: Vec<Port> = [Port::scalar("clk", Direction::Input), Port::scalar("rst", Direction::Input)]
            .into_iter()
            .chain(ir.inputs.iter().map(|s| port(s, Direction::Input)))
            .chain(ir.outputs.iter().map(|s| port(s, Direction::Output)))
            .collect();
        design.push_str(&emit_fsm(ir, &format!("fsm_{k}"), &iface).expect("random machines are valid"));
        let (ni, no) = (ir.input_bits(), ir.output_bits());
        let ins: Vec<u64> = c.inputs.iter().flatten().copied().collect();
        let exp: Vec<u64> = expected[k].iter().flatten().copied().collect();
        checks += exp.len() as u64;
        let _ = writeln!(tb, "    reg [{}:0] in_{k} = 0;\n    wire [{}:0] out_{k};", ni - 1, no - 1);
        let _ = writeln!(tb, "    localparam [{}:0] IN_{k} = {};", ins.len() * ni - 1, packed(&ins, ni));
        let _ = writeln!(tb, "    localparam [{}:0] EXP_{k} = {};", exp.len() * no - 1, packed(&exp, no));
        let rst = if r.active_high { "rst_on" } else { "!rst_on" };
        let mut conns = vec![".clk(clk)".to_string(), format!(".rst({rst})")];
        let mut hi = ni;
        for s in &ir.inputs {
            conns.push(format!(".{}(in_{k}[{}:{}])", s.name, hi - 1, hi - s.width as usize));
            hi -= s.width as usize;
        }
        let mut hi = no;
        for s in &ir.outputs {
            conns.push(format!(".{}(out_{k}[{}:{}])", s.name, hi - 1, hi - s.width as usize));
            hi -= s.width as usize;
        }
        let _ = writeln!(tb, "    fsm_{k} u_{k}({});", conns.join(", "));
        let _ = writeln!(drive, "                in_{k} = IN_{k}[k*{ni} +: {ni}];");
        let _ = writeln!(
            check,
            "                samples = samples + 1;\n                if (out_{k} !== EXP_{k}[k*{no} +: {no}]) begin\n                    errors = errors + 1;\n                    \
             $display(\"MISMATCH time=%0t sig=fsm_{k} exp=%b got=%b\", $time, EXP_{k}[k*{no} +: {no}], out_{k});\n                end"
        );
    }
    let _ = write!(
        tb,
        "    initial begin\n        for (s = 0; s < {sequences}; s = s + 1) begin\n            @(negedge clk) rst_on = 1;\n            @(negedge clk) rst_on = 0;\n            \
         for (t = 0; t < {steps}; t = t + 1) begin\n                k = s * {steps} + t;\n{drive}                #1;\n{check}                @(negedge clk);\n            end\n        end\n        \
         $display(\"Mismatches: %0d in %0d samples\", errors, samples);\n        $finish;\n    end\nendmodule\n"
    );
    BatchOutcome {
        report: sim.run(&design, &tb),
        checks,
    }
}
