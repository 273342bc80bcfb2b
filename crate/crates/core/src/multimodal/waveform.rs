//! Sampled waveforms in row or column layout.
//!
//! Row layout, one signal per line:
//!
//! ```text
//! clk     0 1 0 1 0 1
//! reset   1 1 0 0 0 0
//! x       0 0 1 1 0 0
//! z (out) 0 0 0 1 1 0
//! ```
//!
//! Column layout puts signal names in a header line and one sample per line.
//! A `time` row or column is kept as the time axis. Binary tokens are read
//! bit by bit; a signal whose samples contain the digits 2-9, or that has a
//! declared width, is read as decimal. Sized literals (`4'b1010`, `8'hff`) are
//! accepted anywhere. Outputs are marked `(out)` or listed in an `outputs:`
//! line; otherwise the last non-clock signal is the output.

use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

use super::ir::{
    bits_of, parse_signal_decl, ClockEdge, ConvertedIr, ResetKind, ResetSpec, Signal,
    StateTransitionIR, Sym, Transition, TruthTableIR, TtRow, WaveSignal, WaveformIR,
};
use super::MultimodalError;

const TIME_NAMES: &[&str] = &["time", "t", "cycle", "cycles", "ns", "ps", "step"];
const CLOCK_NAMES: &[&str] = &["clk", "clock", "clk_i", "i_clk", "sys_clk"];
const RESET_NAMES: &[&str] = &[
    "reset", "rst", "areset", "arst", "rst_n", "reset_n", "resetn", "rstn", "arst_n", "aresetn", "srst",
];

fn bad(msg: impl Into<String>) -> MultimodalError {
    MultimodalError::BadWaveform(msg.into())
}

fn literal_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^(\d+)?'([bBdDhH])([0-9a-fA-F_xXzZ]+)$").unwrap())
}

fn row_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s*([A-Za-z_]\w*(?:\s*\[\s*\d+\s*(?::\s*\d+\s*)?\])?)\s*(\(\s*out(?:put)?\s*\))?\s*[:|=]?\s*(.*?)\s*\|?\s*$")
            .unwrap()
    })
}

pub fn is_time_name(name: &str) -> bool {
    TIME_NAMES.contains(&name.to_ascii_lowercase().as_str())
}

pub fn is_clock_name(name: &str) -> bool {
    CLOCK_NAMES.contains(&name.to_ascii_lowercase().as_str())
}

pub fn is_reset_name(name: &str) -> bool {
    RESET_NAMES.contains(&name.to_ascii_lowercase().as_str())
}

fn active_low_name(name: &str) -> bool {
    let n = name.to_ascii_lowercase();
    n.ends_with("_n") || n.ends_with('n') && n.starts_with("reset") || n == "rstn" || n == "aresetn"
}

fn split_values(text: &str) -> Vec<String> {
    text.split(|c: char| c.is_whitespace() || c == '|' || c == ',')
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// Whether a token can be a sample value.
pub fn is_value_token(tok: &str) -> bool {
    literal_re().is_match(tok)
        || (!tok.is_empty()
            && tok
                .chars()
                .all(|c| c.is_ascii_digit() || matches!(c, 'x' | 'X' | 'z' | 'Z' | '_' | '-')))
}

fn is_decimal_token(tok: &str) -> bool {
    !literal_re().is_match(tok) && tok.chars().any(|c| ('2'..='9').contains(&c))
}

fn all_dc(tok: &str) -> bool {
    tok.chars().all(|c| matches!(c, 'x' | 'X' | 'z' | 'Z' | '-'))
}

fn parse_literal(tok: &str) -> Option<(Option<u32>, Vec<Sym>)> {
    let c = literal_re().captures(tok)?;
    let size = c.get(1).map(|m| m.as_str().parse::<u32>()).transpose().ok()?;
    let digits: String = c[3].chars().filter(|c| *c != '_').collect();
    let mut bits = Vec::new();
    match c[2].to_ascii_lowercase().as_str() {
        "b" => {
            for ch in digits.chars() {
                bits.push(Sym::from_char(ch)?);
            }
        }
        "h" => {
            for ch in digits.chars() {
                match ch.to_digit(16) {
                    Some(d) => bits.extend(bits_of(d as u64, 4)),
                    None => bits.extend([Sym::Dc; 4]),
                }
            }
        }
        _ => {
            if all_dc(&digits) {
                bits = vec![Sym::Dc; size.unwrap_or(1) as usize];
            } else {
                let v: u64 = digits.parse().ok()?;
                bits = bits_of(v, (64 - v.leading_zeros()).max(1) as usize);
            }
        }
    }
    Some((size, bits))
}

/// Resizes an MSB-first vector, padding with zeros or truncating on the left.
fn fit(mut bits: Vec<Sym>, width: usize) -> Vec<Sym> {
    if bits.len() > width {
        bits.drain(..bits.len() - width);
    } else if bits.len() < width {
        let fill = if bits.first() == Some(&Sym::Dc) && bits.iter().all(|b| *b == Sym::Dc) {
            Sym::Dc
        } else {
            Sym::Zero
        };
        let mut v = vec![fill; width - bits.len()];
        v.extend(bits);
        bits = v;
    }
    bits
}

fn build_signal(decl: &str, output: bool, tokens: &[String]) -> Result<WaveSignal, MultimodalError> {
    let (name, declared) = parse_signal_decl(decl).ok_or_else(|| bad(format!("bad signal name {decl:?}")))?;
    let literal_width = tokens.iter().filter_map(|t| parse_literal(t).and_then(|l| l.0)).max();
    let decimal = declared.is_some() || tokens.iter().any(|t| is_decimal_token(t));
    let mut raw: Vec<Option<Vec<Sym>>> = Vec::with_capacity(tokens.len());
    for t in tokens {
        let v = if let Some((_, bits)) = parse_literal(t) {
            Some(bits)
        } else if all_dc(t) {
            None
        } else if decimal {
            let d: String = t.chars().filter(|c| *c != '_').collect();
            let v: u64 = d.parse().map_err(|_| bad(format!("bad value {t:?} for {name}")))?;
            Some(bits_of(v, (64 - v.leading_zeros()).max(1) as usize))
        } else {
            let bits = super::ir::parse_syms(t).ok_or_else(|| bad(format!("bad value {t:?} for {name}")))?;
            Some(bits)
        };
        raw.push(v);
    }
    let needed = raw.iter().flatten().map(Vec::len).max().unwrap_or(1) as u32;
    let width = declared.or(literal_width).unwrap_or(needed).max(1);
    if raw.iter().flatten().any(|b| {
        b.len() > width as usize && b[..b.len() - width as usize].contains(&Sym::One)
    }) {
        return Err(MultimodalError::WidthMismatch(format!("a value of {name} does not fit in {width} bits")));
    }
    let values = raw
        .into_iter()
        .map(|v| match v {
            Some(bits) => fit(bits, width as usize),
            None => vec![Sym::Dc; width as usize],
        })
        .collect();
    Ok(WaveSignal {
        name,
        width,
        values,
        output,
    })
}

struct Draft {
    decls: Vec<(String, bool, Vec<String>)>,
    time: Vec<String>,
    outputs: Vec<String>,
    directives: Vec<String>,
}

fn directive(line: &str) -> Option<(String, String)> {
    let (k, v) = line.split_once(':')?;
    let k = k.trim().to_ascii_lowercase();
    let v = v.trim();
    // "reset: 1 1 0 0" is a signal row, not a directive
    let samples = !v.is_empty() && split_values(v).iter().all(|t| is_value_token(t));
    let known = matches!(k.as_str(), "outputs" | "output" | "inputs" | "reset" | "clock");
    (known && !samples).then(|| (k, v.to_string()))
}

fn parse_rows(lines: &[&str]) -> Result<Draft, MultimodalError> {
    let mut d = Draft {
        decls: Vec::new(),
        time: Vec::new(),
        outputs: Vec::new(),
        directives: Vec::new(),
    };
    for line in lines {
        if let Some((k, v)) = directive(line) {
            if k.starts_with("output") {
                d.outputs.extend(v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()));
            } else {
                d.directives.push(line.to_string());
            }
            continue;
        }
        let c = row_re().captures(line).ok_or_else(|| bad(format!("unrecognized line {line:?}")))?;
        let toks = split_values(&c[3]);
        if toks.is_empty() {
            return Err(bad(format!("signal line {line:?} has no samples")));
        }
        let decl = c[1].to_string();
        if is_time_name(&decl) {
            d.time = toks;
            continue;
        }
        if let Some(t) = toks.iter().find(|t| !is_value_token(t)) {
            return Err(bad(format!("bad sample {t:?} on line {line:?}")));
        }
        d.decls.push((decl, c.get(2).is_some(), toks));
    }
    Ok(d)
}

fn header_names(line: &str) -> Option<Vec<(String, bool)>> {
    let mut out = Vec::new();
    let cells: Vec<&str> = line
        .split(['|', ','])
        .flat_map(|c| {
            let c = c.trim();
            // keep "q[3:0]" and "z (out)" together
            if c.contains('[') || c.contains('(') {
                vec![c]
            } else {
                c.split_whitespace().collect()
            }
        })
        .filter(|c| !c.is_empty())
        .collect();
    for c in cells {
        let (decl, out_mark) = match c.find('(') {
            Some(i) => (c[..i].trim(), c[i..].to_ascii_lowercase().contains("out")),
            None => (c, false),
        };
        parse_signal_decl(decl)?;
        out.push((decl.to_string(), out_mark));
    }
    (!out.is_empty()).then_some(out)
}

fn parse_columns(lines: &[&str]) -> Result<Draft, MultimodalError> {
    let mut directives = Vec::new();
    let mut outputs = Vec::new();
    let mut body = Vec::new();
    for line in lines {
        match directive(line) {
            Some((k, v)) if k.starts_with("output") => {
                outputs.extend(v.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()))
            }
            Some(_) => directives.push(line.to_string()),
            None => body.push(*line),
        }
    }
    let (head, rows) = body.split_first().ok_or_else(|| bad("empty waveform"))?;
    let names = header_names(head).ok_or_else(|| bad(format!("bad column header {head:?}")))?;
    let mut cols: Vec<Vec<String>> = vec![Vec::new(); names.len()];
    for r in rows {
        let toks = split_values(r);
        if toks.iter().all(|t| t.chars().all(|c| c == '-' || c == ':' || c == '=' || c == '+')) {
            continue;
        }
        if toks.len() != names.len() {
            return Err(bad(format!("sample line {r:?} has {} values for {} signals", toks.len(), names.len())));
        }
        for (c, t) in cols.iter_mut().zip(toks) {
            c.push(t);
        }
    }
    let mut d = Draft {
        decls: Vec::new(),
        time: Vec::new(),
        outputs,
        directives,
    };
    for ((decl, out), toks) in names.into_iter().zip(cols) {
        if is_time_name(&decl) {
            d.time = toks;
        } else {
            if let Some(t) = toks.iter().find(|t| !is_value_token(t)) {
                return Err(bad(format!("bad sample {t:?} under {decl}")));
            }
            d.decls.push((decl, out, toks));
        }
    }
    Ok(d)
}

/// Whether the first content line looks like a column-layout header.
fn is_column_layout(lines: &[&str]) -> bool {
    let body: Vec<&&str> = lines.iter().filter(|l| directive(l).is_none()).collect();
    let Some(head) = body.first() else { return false };
    let Some(names) = header_names(head) else { return false };
    names.len() >= 2
        && body.len() >= 2
        && split_values(body[1]).iter().all(|t| is_value_token(t) || t.chars().all(|c| c == '-'))
        && !row_re().captures(head).is_some_and(|c| split_values(&c[3]).iter().all(|t| is_value_token(t)))
}

fn parse_reset_directive(lines: &[String], name: &str) -> Result<ResetSpec, MultimodalError> {
    let mut spec = ResetSpec {
        signal: name.to_string(),
        kind: ResetKind::Sync,
        active_high: !active_low_name(name),
    };
    for l in lines {
        let Some((k, v)) = directive(l) else { continue };
        if k != "reset" {
            continue;
        }
        for w in v.split(|c: char| c.is_whitespace() || c == ',').filter(|w| !w.is_empty()) {
            match w.to_ascii_lowercase().replace('_', "-").as_str() {
                "sync" | "synchronous" => spec.kind = ResetKind::Sync,
                "async" | "asynchronous" => spec.kind = ResetKind::Async,
                "active-high" | "high" => spec.active_high = true,
                "active-low" | "low" => spec.active_high = false,
                _ => {}
            }
        }
    }
    Ok(spec)
}

fn clock_edge_directive(lines: &[String]) -> ClockEdge {
    for l in lines {
        if let Some((k, v)) = directive(l) {
            if k == "clock" && (v.contains("negedge") || v.contains("falling")) {
                return ClockEdge::Neg;
            }
        }
    }
    ClockEdge::Pos
}

pub fn parse_waveform(raw: &str) -> Result<WaveformIR, MultimodalError> {
    let lines: Vec<&str> = raw
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#') && !l.starts_with("//"))
        .collect();
    let d = if is_column_layout(&lines) { parse_columns(&lines)? } else { parse_rows(&lines)? };
    if d.decls.is_empty() {
        return Err(bad("waveform has no signals"));
    }
    let mut signals = d
        .decls
        .iter()
        .map(|(decl, out, toks)| build_signal(decl, *out, toks))
        .collect::<Result<Vec<_>, _>>()?;
    let n = signals[0].values.len();
    if let Some(s) = signals.iter().find(|s| s.values.len() != n) {
        return Err(bad(format!("{} has {} samples, expected {n}", s.name, s.values.len())));
    }
    if !d.time.is_empty() && d.time.len() != n {
        return Err(bad(format!("time axis has {} entries, expected {n}", d.time.len())));
    }
    for o in &d.outputs {
        let name = parse_signal_decl(o).map(|p| p.0).unwrap_or_default();
        let s = signals
            .iter_mut()
            .find(|s| s.name == name)
            .ok_or_else(|| bad(format!("output {o:?} is not a signal")))?;
        s.output = true;
    }
    let clock_name = signals
        .iter()
        .find(|s| is_clock_name(&s.name) && s.width == 1 && !s.output)
        .map(|s| s.name.clone());
    if !signals.iter().any(|s| s.output) {
        let last = signals
            .iter_mut()
            .rev()
            .find(|s| Some(&s.name) != clock_name.as_ref() && !is_reset_name(&s.name))
            .ok_or_else(|| bad("waveform has no candidate output"))?;
        last.output = true;
    }
    let reset = match signals.iter().find(|s| is_reset_name(&s.name) && s.width == 1 && !s.output) {
        Some(s) if clock_name.is_some() => Some(parse_reset_directive(&d.directives, &s.name)?),
        _ => None,
    };
    let time_axis = if d.time.is_empty() { (0..n).map(|i| i.to_string()).collect() } else { d.time };
    Ok(WaveformIR {
        time_axis,
        signals,
        clock_name,
        clock_edge: clock_edge_directive(&d.directives),
        reset,
    })
}

fn concat(signals: &[&WaveSignal], i: usize) -> Vec<Sym> {
    signals.iter().flat_map(|s| s.values[i].iter().copied()).collect()
}

fn to_u64(bits: &[Sym]) -> Option<u64> {
    bits.iter().try_fold(0u64, |acc, b| b.value().map(|v| acc << 1 | v as u64))
}

fn state_name(bits: &[Sym]) -> String {
    format!("Q{}", bits.iter().map(|b| b.to_char()).collect::<String>())
}

/// Converts a waveform into a table (no clock) or a Moore machine whose
/// states are the observed output values.
pub fn waveform_to_ir(w: &WaveformIR) -> Result<ConvertedIr, MultimodalError> {
    let is_ctl = |s: &WaveSignal| {
        Some(&s.name) == w.clock_name.as_ref() || w.reset.as_ref().is_some_and(|r| r.signal == s.name)
    };
    let inputs: Vec<&WaveSignal> = w.signals.iter().filter(|s| !s.output && !is_ctl(s)).collect();
    let outputs: Vec<&WaveSignal> = w.signals.iter().filter(|s| s.output).collect();
    let in_sigs: Vec<Signal> = inputs.iter().map(|s| Signal::new(s.name.clone(), s.width)).collect();
    let out_sigs: Vec<Signal> = outputs.iter().map(|s| Signal::new(s.name.clone(), s.width)).collect();
    let n = w.time_axis.len();
    match &w.clock_name {
        None => {
            let mut seen: BTreeMap<Vec<Sym>, (usize, Vec<Sym>)> = BTreeMap::new();
            let mut order = Vec::new();
            for i in 0..n {
                let key = concat(&inputs, i);
                if key.contains(&Sym::Dc) {
                    continue;
                }
                let val = concat(&outputs, i);
                match seen.get(&key) {
                    Some((first, prev)) if prev != &val => {
                        return Err(MultimodalError::ContradictorySamples(format!(
                            "inputs {} give {} at sample {} and {} at sample {}",
                            super::ir::syms_to_string(&key),
                            super::ir::syms_to_string(prev),
                            w.time_axis[*first],
                            super::ir::syms_to_string(&val),
                            w.time_axis[i]
                        )))
                    }
                    Some(_) => {}
                    None => {
                        seen.insert(key.clone(), (i, val));
                        order.push(key);
                    }
                }
            }
            let rows = order
                .into_iter()
                .map(|k| {
                    let outputs = seen[&k].1.clone();
                    TtRow { inputs: k, outputs }
                })
                .collect();
            let ir = TruthTableIR {
                inputs: in_sigs,
                outputs: out_sigs,
                rows,
            };
            ir.validate()?;
            Ok(ConvertedIr::Table(ir))
        }
        Some(clk_name) => {
            let clk = w.signal(clk_name).unwrap();
            let (lo, hi) = match w.clock_edge {
                ClockEdge::Pos => (Sym::Zero, Sym::One),
                ClockEdge::Neg => (Sym::One, Sym::Zero),
            };
            for i in 1..n {
                if clk.values[i] == clk.values[i - 1] || clk.values[i][0] == Sym::Dc {
                    return Err(bad(format!("clock {clk_name} does not alternate at sample {}", w.time_axis[i])));
                }
            }
            let ni: usize = in_sigs.iter().map(|s| s.width as usize).sum();
            if ni > super::ir::MAX_FSM_INPUT_BITS {
                return Err(MultimodalError::WidthMismatch(format!("{ni} input bits in a clocked waveform")));
            }
            let reset_sig = w.reset.as_ref().map(|r| (w.signal(&r.signal).unwrap(), r.active_high));
            let asserted = |i: usize| {
                reset_sig.is_some_and(|(s, high)| s.values[i][0] == Sym::from_bool(high))
            };
            let mut states: Vec<Vec<Sym>> = Vec::new();
            let add_state = |s: &Vec<Sym>, states: &mut Vec<Vec<Sym>>| {
                if !states.contains(s) {
                    states.push(s.clone());
                }
            };
            let mut edges: BTreeMap<(Vec<Sym>, u64), (Vec<Sym>, usize)> = BTreeMap::new();
            let mut reset_state: Option<Vec<Sym>> = None;
            for i in 1..n {
                if !(clk.values[i - 1][0] == lo && clk.values[i][0] == hi) {
                    continue;
                }
                let before = concat(&outputs, i - 1);
                let after = concat(&outputs, i);
                if after.contains(&Sym::Dc) {
                    continue;
                }
                if asserted(i - 1) || asserted(i) {
                    if let Some(r) = &reset_state {
                        if r != &after {
                            return Err(MultimodalError::ContradictorySamples(format!(
                                "reset leads to {} and to {}",
                                state_name(r),
                                state_name(&after)
                            )));
                        }
                    }
                    reset_state = Some(after.clone());
                    add_state(&after, &mut states);
                    continue;
                }
                if before.contains(&Sym::Dc) {
                    add_state(&after, &mut states);
                    continue;
                }
                let Some(input) = to_u64(&concat(&inputs, i - 1)) else {
                    add_state(&after, &mut states);
                    continue;
                };
                add_state(&before, &mut states);
                add_state(&after, &mut states);
                let key = (before.clone(), input);
                match edges.get(&key) {
                    Some((prev, at)) if prev != &after => {
                        return Err(MultimodalError::ContradictorySamples(format!(
                            "from {} under input {} the output becomes {} at {} and {} at {}",
                            state_name(&before),
                            super::ir::syms_to_string(&bits_of(input, ni)),
                            state_name(prev),
                            w.time_axis[*at],
                            state_name(&after),
                            w.time_axis[i]
                        )))
                    }
                    Some(_) => {}
                    None => {
                        edges.insert(key, (after, i));
                    }
                }
            }
            let initial = concat(&outputs, 0);
            let reset_state = match reset_state {
                Some(r) => r,
                None if !initial.contains(&Sym::Dc) => initial,
                None => states.first().cloned().ok_or_else(|| bad("no fully specified output sample"))?,
            };
            add_state(&reset_state, &mut states);
            let mut transitions = Vec::new();
            for s in &states {
                for v in 0..1u64 << ni {
                    let next = edges.get(&(s.clone(), v)).map_or(s, |e| &e.0);
                    transitions.push(Transition {
                        current: state_name(s),
                        inputs: bits_of(v, ni),
                        next: state_name(next),
                        outputs: s.clone(),
                    });
                }
            }
            let ir = StateTransitionIR {
                states: states.iter().map(|s| state_name(s)).collect(),
                reset_state: state_name(&reset_state),
                reset_state_inferred: false,
                reset: w.reset.clone(),
                clock: clk_name.clone(),
                clock_edge: w.clock_edge,
                inputs: in_sigs,
                outputs: out_sigs,
                transitions,
                moore: true,
            };
            ir.validate()?;
            Ok(ConvertedIr::Fsm(ir))
        }
    }
}

/// Heuristic used by block detection: a run of value lines that includes a
/// clock or time row, or a column header naming one.
pub fn looks_like_waveform(lines: &[&str]) -> bool {
    let content: Vec<&str> = lines.iter().copied().filter(|l| directive(l).is_none()).collect();
    if content.len() < 2 {
        return false;
    }
    let row_layout = content.iter().all(|l| {
        row_re().captures(l).is_some_and(|c| {
            let toks = split_values(&c[3]);
            let name = parse_signal_decl(&c[1]).map(|p| p.0).unwrap_or_default();
            toks.len() >= 2 && (is_time_name(&name) || toks.iter().all(|t| is_value_token(t)))
        })
    }) && content.iter().any(|l| {
        row_re()
            .captures(l)
            .and_then(|c| parse_signal_decl(&c[1]))
            .is_some_and(|(n, _)| is_time_name(&n) || is_clock_name(&n))
    });
    if row_layout {
        return true;
    }
    header_names(content[0]).is_some_and(|names| {
        names.iter().any(|(n, _)| is_time_name(n) || is_clock_name(n))
            && content[1..].iter().all(|l| {
                let t = split_values(l);
                t.len() == names.len() && t.iter().all(|t| is_value_token(t))
            })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multimodal::fsm::FsmInterpreter;

    const DETECT: &str = "\
clk     0 1 0 1 0 1 0 1 0 1 0 1
reset   1 1 0 0 0 0 0 0 0 0 0 0
x       0 0 1 1 1 1 0 0 1 1 1 1
z (out) 0 0 0 1 1 1 1 0 0 1 1 1
";

    #[test]
    fn row_layout_signals() {
        let w = parse_waveform(DETECT).unwrap();
        assert_eq!(w.clock_name.as_deref(), Some("clk"));
        assert_eq!(w.reset.as_ref().unwrap().signal, "reset");
        assert!(w.signal("z").unwrap().output);
        assert_eq!(w.time_axis.len(), 12);
    }

    #[test]
    fn clocked_waveform_becomes_moore_machine() {
        let w = parse_waveform(DETECT).unwrap();
        let ConvertedIr::Fsm(ir) = waveform_to_ir(&w).unwrap() else { panic!("expected fsm") };
        assert_eq!(ir.reset_state, "Q0");
        assert_eq!(ir.states, vec!["Q0", "Q1"]);
        // z follows x one edge later; replaying the inputs reproduces the trace
        let outs = FsmInterpreter::run(&ir, &[1, 1, 0, 1, 1]);
        assert_eq!(outs, vec![vec![false], vec![true], vec![true], vec![false], vec![true]]);
    }

    #[test]
    fn column_layout_and_decimal_values() {
        let raw = "time | a | b | s (out)\n0 | 1 | 2 | 3\n10 | 2 | 2 | 4\n20 | 0 | 0 | 0\n";
        let w = parse_waveform(raw).unwrap();
        assert_eq!(w.time_axis, vec!["0", "10", "20"]);
        assert_eq!(w.signal("b").unwrap().width, 2);
        let ConvertedIr::Table(t) = waveform_to_ir(&w).unwrap() else { panic!("expected table") };
        assert_eq!(t.rows.len(), 3);
        assert_eq!(t.outputs[0].width, 3);
        assert_eq!(t.eval(0b1010), vec![Some(true), Some(false), Some(false)]);
    }

    #[test]
    fn contradictory_combinational_samples() {
        let raw = "time 0 1 2\na 0 1 0\ny 0 1 1\n";
        assert!(matches!(
            waveform_to_ir(&parse_waveform(raw).unwrap()),
            Err(MultimodalError::ContradictorySamples(_))
        ));
    }

    #[test]
    fn clock_must_alternate() {
        let raw = "clk 0 1 1 0\nx 0 0 1 1\ny 0 0 0 1\n";
        assert!(matches!(
            waveform_to_ir(&parse_waveform(raw).unwrap()),
            Err(MultimodalError::BadWaveform(_))
        ));
    }

    #[test]
    fn sized_literals_and_unknowns() {
        let raw = "time 0 1 2\nq 4'b0011 4'hA x\nclk 0 1 0\n";
        let w = parse_waveform(raw).unwrap();
        let q = w.signal("q").unwrap();
        assert_eq!(q.width, 4);
        assert_eq!(q.values[1], bits_of(10, 4));
        assert_eq!(q.values[2], vec![Sym::Dc; 4]);
    }

    #[test]
    fn detection_heuristic() {
        let lines: Vec<&str> = DETECT.lines().collect();
        assert!(looks_like_waveform(&lines));
        assert!(!looks_like_waveform(&["The module has 2 inputs", "and 1 output"]));
        assert!(looks_like_waveform(&["time a y", "0 0 1", "1 1 0"]));
    }
}
