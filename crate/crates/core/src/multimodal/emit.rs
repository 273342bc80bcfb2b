//! Verilog generation from converted IRs.
//!
//! Truth tables become one `casez` over the concatenated inputs with a
//! zero default. State machines use binary-encoded states and three
//! processes: state register, next-state logic, output logic.

use std::fmt::Write;

use crate::verilog::{Direction, Port};

use super::ir::{overlaps, ConvertedIr, ResetKind, Signal, StateTransitionIR, Sym, TruthTableIR};
use super::MultimodalError;

pub fn emit_verilog(ir: &ConvertedIr, module_name: &str, iface: &[Port]) -> Result<String, MultimodalError> {
    match ir {
        ConvertedIr::Table(t) => emit_truth_table(t, module_name, iface),
        ConvertedIr::Fsm(f) => emit_fsm(f, module_name, iface),
    }
}

fn mismatch(msg: String) -> MultimodalError {
    MultimodalError::PortMismatch(msg)
}

fn check_ports(
    inputs: &[Signal],
    outputs: &[Signal],
    control: &[&str],
    iface: &[Port],
) -> Result<(), MultimodalError> {
    let want = |name: &str, width: u32, dir: Direction| -> Result<(), MultimodalError> {
        let p = iface
            .iter()
            .find(|p| p.name == name)
            .ok_or_else(|| mismatch(format!("{name} is not a port of the interface")))?;
        if p.dir != dir {
            return Err(mismatch(format!("{name} is an {} port, expected {}", p.dir.keyword(), dir.keyword())));
        }
        if p.width() != width {
            return Err(mismatch(format!("{name} is {} bits wide in the interface, {width} in the table", p.width())));
        }
        Ok(())
    };
    for s in inputs {
        want(&s.name, s.width, Direction::Input)?;
    }
    for c in control {
        want(c, 1, Direction::Input)?;
    }
    for s in outputs {
        want(&s.name, s.width, Direction::Output)?;
    }
    if let Some(p) = iface
        .iter()
        .find(|p| p.dir == Direction::Output && !outputs.iter().any(|s| s.name == p.name))
    {
        return Err(mismatch(format!("interface output {} is not described", p.name)));
    }
    for (i, s) in inputs.iter().chain(outputs).enumerate() {
        if inputs.iter().chain(outputs).take(i).any(|o| o.name == s.name) {
            return Err(mismatch(format!("{} appears twice", s.name)));
        }
    }
    Ok(())
}

fn header(module_name: &str, iface: &[Port], reg_outputs: bool) -> String {
    let mut out = format!("module {module_name}(");
    for (i, p) in iface.iter().enumerate() {
        out.push_str(if i == 0 { "\n    " } else { ",\n    " });
        let reg = if reg_outputs && p.dir == Direction::Output { "reg " } else { "" };
        let signed = if p.signed { "signed " } else { "" };
        let _ = write!(out, "{} {reg}{signed}{}{}", p.dir.keyword(), p.range_text(), p.name);
    }
    out.push_str(if iface.is_empty() { ");\n" } else { "\n);\n" });
    out
}

/// A name not used by any port, trying `base`, then `base_1`, `base_2`, ...
fn fresh(base: &str, iface: &[Port], taken: &[String]) -> String {
    let used = |n: &str| iface.iter().any(|p| p.name == n) || taken.iter().any(|t| t == n);
    if !used(base) {
        return base.to_string();
    }
    (1..).map(|i| format!("{base}_{i}")).find(|n| !used(n)).unwrap()
}

fn literal(bits: &[Sym]) -> String {
    format!("{}'b{}", bits.len(), bits.iter().map(|b| b.casez_char()).collect::<String>())
}

fn value(bits: &[Sym]) -> String {
    format!(
        "{}'b{}",
        bits.len(),
        bits.iter().map(|b| if b.resolved() { '1' } else { '0' }).collect::<String>()
    )
}

fn concat(signals: &[Signal]) -> String {
    if signals.len() == 1 {
        signals[0].name.clone()
    } else {
        format!("{{{}}}", signals.iter().map(|s| s.name.as_str()).collect::<Vec<_>>().join(", "))
    }
}

/// Expression for the `k`-th bit (MSB-first) of the flattened outputs.
fn output_bit(outputs: &[Signal], iface: &[Port], mut k: usize) -> String {
    for s in outputs {
        if k < s.width as usize {
            let p = iface.iter().find(|p| p.name == s.name).unwrap();
            return if p.vector {
                format!("{}[{}]", s.name, p.bit_index(k as u32))
            } else {
                s.name.clone()
            };
        }
        k -= s.width as usize;
    }
    unreachable!("output bit out of range")
}

/// Whether first-match `casez` would lose a bit that a later overlapping row sets.
fn needs_per_bit(ir: &TruthTableIR) -> bool {
    ir.rows.iter().enumerate().any(|(i, a)| {
        ir.rows[i + 1..].iter().any(|b| {
            overlaps(&a.inputs, &b.inputs)
                && a.outputs.iter().zip(&b.outputs).any(|(x, y)| *x == Sym::Dc && *y == Sym::One)
        })
    })
}

pub fn emit_truth_table(ir: &TruthTableIR, module_name: &str, iface: &[Port]) -> Result<String, MultimodalError> {
    ir.validate()?;
    check_ports(&ir.inputs, &ir.outputs, &[], iface)?;
    let (ni, no) = (ir.input_bits(), ir.output_bits());
    let outs = concat(&ir.outputs);
    if no == 0 {
        return Ok(format!("{}endmodule\n", header(module_name, iface, false)));
    }
    if ni == 0 {
        let bits: Vec<Sym> = ir.eval(0).into_iter().map(|b| Sym::from_bool(b == Some(true))).collect();
        return Ok(format!(
            "{}    assign {outs} = {};\nendmodule\n",
            header(module_name, iface, false),
            value(&bits)
        ));
    }
    let sel = fresh("sel", iface, &[]);
    let mut v = header(module_name, iface, true);
    let _ = writeln!(v, "    wire [{}:0] {sel} = {};", ni - 1, concat(&ir.inputs));
    v.push_str("    always @(*) begin\n");
    let zero = format!("{no}'b0");
    let _ = writeln!(v, "        {outs} = {zero};");
    if needs_per_bit(ir) {
        for k in 0..no {
            let ones: Vec<_> = ir.rows.iter().filter(|r| r.outputs[k] == Sym::One).collect();
            if ones.is_empty() {
                continue;
            }
            let bit = output_bit(&ir.outputs, iface, k);
            let _ = writeln!(v, "        casez ({sel})");
            for r in ones {
                let _ = writeln!(v, "            {}: {bit} = 1'b1;", literal(&r.inputs));
            }
            let _ = writeln!(v, "            default: {bit} = 1'b0;");
            v.push_str("        endcase\n");
        }
    } else {
        let _ = writeln!(v, "        casez ({sel})");
        for r in &ir.rows {
            let _ = writeln!(v, "            {}: {outs} = {};", literal(&r.inputs), value(&r.outputs));
        }
        let _ = writeln!(v, "            default: {outs} = {zero};");
        v.push_str("        endcase\n");
    }
    v.push_str("    end\nendmodule\n");
    Ok(v)
}

pub fn state_param(name: &str) -> String {
    let s: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() { c.to_ascii_uppercase() } else { '_' })
        .collect();
    format!("ST_{s}")
}

pub fn emit_fsm(ir: &StateTransitionIR, module_name: &str, iface: &[Port]) -> Result<String, MultimodalError> {
    ir.validate()?;
    let mut control = vec![ir.clock.as_str()];
    if let Some(r) = &ir.reset {
        control.push(r.signal.as_str());
    }
    check_ports(&ir.inputs, &ir.outputs, &control, iface)?;
    let mut params: Vec<String> = Vec::with_capacity(ir.states.len());
    for s in &ir.states {
        let base = state_param(s);
        let mut p = base.clone();
        let mut i = 1;
        while params.contains(&p) || iface.iter().any(|port| port.name == p) {
            p = format!("{base}_{i}");
            i += 1;
        }
        params.push(p);
    }
    let param_of = |name: &str| params[ir.state_index(name).unwrap()].as_str();
    let width = (usize::BITS - (ir.states.len().max(2) - 1).leading_zeros()) as usize;
    let state = fresh("state", iface, &params);
    let next = fresh("next_state", iface, &params);
    let fsm_in = fresh("fsm_in", iface, &params);
    let (ni, no) = (ir.input_bits(), ir.output_bits());
    let outs = concat(&ir.outputs);

    let mut v = header(module_name, iface, no > 0);
    let _ = writeln!(
        v,
        "    localparam [{}:0] {};",
        width - 1,
        params
            .iter()
            .enumerate()
            .map(|(i, p)| format!("{p} = {width}'d{i}"))
            .collect::<Vec<_>>()
            .join(", ")
    );
    let reset_param = param_of(&ir.reset_state);
    match &ir.reset {
        Some(_) => {
            let _ = writeln!(v, "    reg [{}:0] {state};", width - 1);
        }
        None => {
            let _ = writeln!(v, "    reg [{}:0] {state} = {reset_param};", width - 1);
        }
    }
    let _ = writeln!(v, "    reg [{}:0] {next};", width - 1);
    if ni > 0 {
        let _ = writeln!(v, "    wire [{}:0] {fsm_in} = {};", ni - 1, concat(&ir.inputs));
    }

    let edge = ir.clock_edge.keyword();
    match &ir.reset {
        None => {
            let _ = writeln!(v, "    always @({edge} {}) begin", ir.clock);
            let _ = writeln!(v, "        {state} <= {next};");
        }
        Some(r) => {
            let cond = if r.active_high { r.signal.clone() } else { format!("!{}", r.signal) };
            match r.kind {
                ResetKind::Sync => {
                    let _ = writeln!(v, "    always @({edge} {}) begin", ir.clock);
                }
                ResetKind::Async => {
                    let redge = if r.active_high { "posedge" } else { "negedge" };
                    let _ = writeln!(v, "    always @({edge} {} or {redge} {}) begin", ir.clock, r.signal);
                }
            }
            let _ = writeln!(v, "        if ({cond})\n            {state} <= {reset_param};");
            let _ = writeln!(v, "        else\n            {state} <= {next};");
        }
    }
    v.push_str("    end\n");

    v.push_str("    always @(*) begin\n");
    let _ = writeln!(v, "        {next} = {state};");
    let _ = writeln!(v, "        case ({state})");
    for (s, p) in ir.states.iter().zip(&params) {
        let ts: Vec<_> = ir.transitions.iter().filter(|t| &t.current == s).collect();
        if ni == 0 {
            let _ = writeln!(v, "            {p}: {next} = {};", param_of(&ts[0].next));
            continue;
        }
        let _ = writeln!(v, "            {p}:\n                casez ({fsm_in})");
        for t in ts {
            let _ = writeln!(v, "                    {}: {next} = {};", literal(&t.inputs), param_of(&t.next));
        }
        v.push_str("                endcase\n");
    }
    let _ = writeln!(v, "            default: {next} = {reset_param};");
    v.push_str("        endcase\n    end\n");

    if no > 0 {
        let zero = format!("{no}'b0");
        v.push_str("    always @(*) begin\n");
        let _ = writeln!(v, "        {outs} = {zero};");
        let _ = writeln!(v, "        case ({state})");
        for (s, p) in ir.states.iter().zip(&params) {
            if ir.moore || ni == 0 {
                let o = ir.moore_outputs(s).unwrap_or_else(|_| {
                    ir.transitions.iter().find(|t| &t.current == s).unwrap().outputs.clone()
                });
                let _ = writeln!(v, "            {p}: {outs} = {};", value(&o));
            } else {
                let _ = writeln!(v, "            {p}:\n                casez ({fsm_in})");
                for t in ir.transitions.iter().filter(|t| &t.current == s) {
                    let _ = writeln!(v, "                    {}: {outs} = {};", literal(&t.inputs), value(&t.outputs));
                }
                v.push_str("                endcase\n");
            }
        }
        let _ = writeln!(v, "            default: {outs} = {zero};");
        v.push_str("        endcase\n    end\n");
    }
    v.push_str("endmodule\n");
    Ok(v)
}
