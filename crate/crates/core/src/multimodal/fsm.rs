//! State-transition tables and a reference interpreter.
//!
//! Two grid layouts are accepted. One row per transition:
//!
//! ```text
//! reset: sync active-high reset
//! | state     | x | next | z |
//! |-----------|---|------|---|
//! | A (reset) | 0 | A    | 0 |
//! | A (reset) | 1 | B    | 0 |
//! | B         | 0 | A    | 1 |
//! | B         | 1 | B    | 1 |
//! ```
//!
//! Columns left of `next` are inputs, columns right of it are outputs. Or one
//! row per state with a next-state column per input condition, which yields
//! a Moore machine:
//!
//! ```text
//! | state | next (x=0) | next (x=1) | z |
//! | A     | A          | B          | 0 |
//! ```
//!
//! `reset:` and `clock:` annotation lines set the reset kind, polarity and
//! signal name and the clock edge and name. Defaults: synchronous
//! active-high `reset`, rising edge of `clk`. The reset state is the one
//! marked `(reset)`, else the first listed (and flagged as inferred).

use std::sync::OnceLock;

use regex::Regex;

use super::grid::parse_grid;
use super::ir::{
    bits_of, is_identifier, parse_signal_decl, parse_syms, ClockEdge, ResetKind, ResetSpec, Signal,
    StateTransitionIR, Sym, Transition,
};
use super::MultimodalError;

fn canonical_header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(
            r"(?i)^\s*STATE\s+MACHINE\s*\(\s*inputs\s*=\s*([^;]*);\s*outputs\s*=\s*([^;]*);\s*clock\s*=\s*(posedge|negedge)\s+(\w+)\s*;\s*reset\s*=\s*([^;]*?)\s*->\s*(\S+)\s*;\s*(moore|mealy)\s*\)\s*:?\s*$",
        )
        .unwrap()
    })
}

fn canonical_row_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*STATE\s+(\S+)\s*\|\s*(.*?)\s*->\s*(\S+)\s*\|\s*(.*?)\s*$").unwrap())
}

fn state_cell_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^([A-Za-z0-9_.]+)\s*(\(\s*reset\s*\))?$").unwrap())
}

fn condition_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"([A-Za-z_]\w*)\s*=\s*([01xX\-_]+)").unwrap())
}

pub fn is_canonical(raw: &str) -> bool {
    raw.lines().any(|l| canonical_header_re().is_match(l))
}

fn norm_header(cell: &str) -> String {
    cell.chars()
        .take_while(|c| *c != '(')
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase()
}

pub fn is_current_state_header(cell: &str) -> bool {
    matches!(
        norm_header(cell).as_str(),
        "state" | "current" | "currentstate" | "present" | "presentstate" | "curstate" | "currstate" | "cs" | "ps"
    )
}

pub fn is_next_state_header(cell: &str) -> bool {
    let n = norm_header(cell);
    n.starts_with("next") || n == "ns"
}

struct Directives {
    reset: Option<ResetSpec>,
    clock: String,
    edge: ClockEdge,
}

fn parse_directives(lines: &[String]) -> Result<Directives, MultimodalError> {
    let mut kind = None;
    let mut active_high = None;
    let mut reset_name: Option<String> = None;
    let mut no_reset = false;
    let mut clock = "clk".to_string();
    let mut edge = ClockEdge::Pos;
    for line in lines {
        let Some((key, rest)) = line.split_once(':') else { continue };
        let words = rest
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|w| !w.is_empty())
            .map(|w| w.to_ascii_lowercase().replace('_', "-"));
        match key.trim().to_ascii_lowercase().as_str() {
            "reset" => {
                for (w, orig) in words.zip(rest.split(|c: char| c.is_whitespace() || c == ',').filter(|w| !w.is_empty())) {
                    match w.as_str() {
                        "sync" | "synchronous" => kind = Some(ResetKind::Sync),
                        "async" | "asynchronous" => kind = Some(ResetKind::Async),
                        "active-high" | "high" => active_high = Some(true),
                        "active-low" | "low" => active_high = Some(false),
                        "none" => no_reset = true,
                        "active" | "reset-is" => {}
                        _ if is_identifier(orig) => reset_name = Some(orig.to_string()),
                        _ => return Err(MultimodalError::Malformed(format!("unrecognized reset directive {orig:?}"))),
                    }
                }
            }
            "clock" => {
                for (w, orig) in words.zip(rest.split(|c: char| c.is_whitespace() || c == ',').filter(|w| !w.is_empty())) {
                    match w.as_str() {
                        "posedge" | "rising" | "pos" | "positive" => edge = ClockEdge::Pos,
                        "negedge" | "falling" | "neg" | "negative" => edge = ClockEdge::Neg,
                        "edge" => {}
                        _ if is_identifier(orig) => clock = orig.to_string(),
                        _ => return Err(MultimodalError::Malformed(format!("unrecognized clock directive {orig:?}"))),
                    }
                }
            }
            _ => {}
        }
    }
    let reset = if no_reset {
        None
    } else {
        let kind = kind.unwrap_or(ResetKind::Sync);
        let signal = reset_name.unwrap_or_else(|| match kind {
            ResetKind::Sync => "reset".into(),
            ResetKind::Async => "areset".into(),
        });
        let low_name = signal.ends_with("_n") || signal.ends_with("_b") || signal == "resetn" || signal == "rstn";
        Some(ResetSpec {
            active_high: active_high.unwrap_or(!low_name),
            signal,
            kind,
        })
    };
    Ok(Directives { reset, clock, edge })
}

/// Parses a state cell, returning the name and whether it carries `(reset)`.
fn parse_state_cell(cell: &str) -> Result<(String, bool), MultimodalError> {
    let caps = state_cell_re()
        .captures(cell.trim())
        .ok_or_else(|| MultimodalError::Malformed(format!("bad state cell {cell:?}")))?;
    Ok((caps[1].to_string(), caps.get(2).is_some()))
}

fn syms(cell: &str) -> Result<Vec<Sym>, MultimodalError> {
    parse_syms(cell).ok_or_else(|| MultimodalError::BadCellSymbol(cell.to_string()))
}

struct Column {
    name: String,
    width: Option<u32>,
}

fn column(cell: &str) -> Result<Column, MultimodalError> {
    let (name, width) =
        parse_signal_decl(cell).ok_or_else(|| MultimodalError::BadHeader(format!("bad column name {cell:?}")))?;
    Ok(Column { name, width })
}

fn finish(
    states: Vec<String>,
    marked: Vec<String>,
    inputs: Vec<Signal>,
    outputs: Vec<Signal>,
    transitions: Vec<Transition>,
    d: Directives,
    force_moore: bool,
) -> Result<StateTransitionIR, MultimodalError> {
    if marked.len() > 1 && marked.iter().any(|m| m != &marked[0]) {
        return Err(MultimodalError::Malformed(format!(
            "several states marked as reset: {}",
            marked.join(", ")
        )));
    }
    let (reset_state, inferred) = match marked.first() {
        Some(s) => (s.clone(), false),
        None => (
            states
                .first()
                .cloned()
                .ok_or_else(|| MultimodalError::Malformed("table has no states".into()))?,
            true,
        ),
    };
    let mut ir = StateTransitionIR {
        states,
        reset_state,
        reset_state_inferred: inferred,
        reset: d.reset,
        clock: d.clock,
        clock_edge: d.edge,
        inputs,
        outputs,
        transitions,
        moore: false,
    };
    ir.validate()?;
    ir.moore = force_moore || ir.outputs_depend_on_state_only();
    Ok(ir)
}

fn widths_from_first(cols: &[Column], first: Option<&Vec<Vec<Sym>>>) -> Vec<Signal> {
    cols.iter()
        .enumerate()
        .map(|(i, c)| {
            let w = c.width.unwrap_or_else(|| first.map_or(1, |r| r[i].len() as u32));
            Signal::new(c.name.clone(), w)
        })
        .collect()
}

fn check_widths(signals: &[Signal], values: &[Vec<Sym>], what: &str) -> Result<Vec<Sym>, MultimodalError> {
    let mut flat = Vec::new();
    for (s, v) in signals.iter().zip(values) {
        if v.len() != s.width as usize {
            return Err(MultimodalError::WidthMismatch(format!(
                "{what} {} has {} bits, expected {}",
                s.name,
                v.len(),
                s.width
            )));
        }
        flat.extend_from_slice(v);
    }
    Ok(flat)
}

fn parse_transition_rows(
    header: &[String],
    body: &[Vec<String>],
    d: Directives,
) -> Result<StateTransitionIR, MultimodalError> {
    let cur = header.iter().position(|c| is_current_state_header(c)).unwrap();
    let nexts: Vec<usize> = header.iter().enumerate().filter(|(_, c)| is_next_state_header(c)).map(|(i, _)| i).collect();
    if nexts.len() != 1 {
        return Err(MultimodalError::BadHeader("expected exactly one next-state column".into()));
    }
    let nx = nexts[0];
    let skip = |i: usize| i == cur || i == nx || header[i].is_empty();
    let in_idx: Vec<usize> = (0..header.len()).filter(|&i| !skip(i) && i < nx).collect();
    let out_idx: Vec<usize> = (0..header.len()).filter(|&i| !skip(i) && i > nx).collect();
    let in_cols = in_idx.iter().map(|&i| column(&header[i])).collect::<Result<Vec<_>, _>>()?;
    let out_cols = out_idx.iter().map(|&i| column(&header[i])).collect::<Result<Vec<_>, _>>()?;
    let mut states: Vec<String> = Vec::new();
    let mut marked = Vec::new();
    let mut parsed = Vec::with_capacity(body.len());
    for r in body {
        if r.len() != header.len() {
            return Err(MultimodalError::WidthMismatch(format!(
                "row {r:?} has {} cells, header has {}",
                r.len(),
                header.len()
            )));
        }
        let (cur_name, is_reset) = parse_state_cell(&r[cur])?;
        let (next_name, _) = parse_state_cell(&r[nx])?;
        if is_reset {
            marked.push(cur_name.clone());
        }
        if !states.contains(&cur_name) {
            states.push(cur_name.clone());
        }
        let ins = in_idx.iter().map(|&i| syms(&r[i])).collect::<Result<Vec<_>, _>>()?;
        let outs = out_idx.iter().map(|&i| syms(&r[i])).collect::<Result<Vec<_>, _>>()?;
        parsed.push((cur_name, ins, next_name, outs));
    }
    for (_, _, next, _) in &parsed {
        if !states.contains(next) {
            return Err(MultimodalError::UnknownStateReference(next.clone()));
        }
    }
    let inputs = widths_from_first(&in_cols, parsed.first().map(|p| &p.1));
    let outputs = widths_from_first(&out_cols, parsed.first().map(|p| &p.3));
    let mut transitions = Vec::with_capacity(parsed.len());
    for (current, ins, next, outs) in parsed {
        transitions.push(Transition {
            current,
            inputs: check_widths(&inputs, &ins, "input")?,
            next,
            outputs: check_widths(&outputs, &outs, "output")?,
        });
    }
    finish(states, marked, inputs, outputs, transitions, d, false)
}

fn parse_state_rows(
    header: &[String],
    body: &[Vec<String>],
    d: Directives,
) -> Result<StateTransitionIR, MultimodalError> {
    let cur = header.iter().position(|c| is_current_state_header(c)).unwrap();
    let mut input_names: Vec<String> = Vec::new();
    let mut input_widths: Vec<usize> = Vec::new();
    let mut next_cols: Vec<(usize, Vec<(String, Vec<Sym>)>)> = Vec::new();
    let mut out_idx = Vec::new();
    for (i, h) in header.iter().enumerate() {
        if i == cur || h.is_empty() {
            continue;
        }
        if is_next_state_header(h) {
            let mut conds = Vec::new();
            for c in condition_re().captures_iter(h) {
                let bits = syms(&c[2])?;
                let name = c[1].to_string();
                match input_names.iter().position(|n| *n == name) {
                    Some(k) if input_widths[k] != bits.len() => {
                        return Err(MultimodalError::WidthMismatch(format!("condition on {name} changes width")))
                    }
                    Some(_) => {}
                    None => {
                        input_names.push(name.clone());
                        input_widths.push(bits.len());
                    }
                }
                conds.push((name, bits));
            }
            if conds.is_empty() {
                return Err(MultimodalError::BadHeader(format!("next-state column {h:?} has no input condition")));
            }
            next_cols.push((i, conds));
        } else {
            out_idx.push(i);
        }
    }
    let out_cols = out_idx.iter().map(|&i| column(&header[i])).collect::<Result<Vec<_>, _>>()?;
    let mut states = Vec::new();
    let mut marked = Vec::new();
    let mut rows = Vec::new();
    for r in body {
        if r.len() != header.len() {
            return Err(MultimodalError::WidthMismatch(format!(
                "row {r:?} has {} cells, header has {}",
                r.len(),
                header.len()
            )));
        }
        let (name, is_reset) = parse_state_cell(&r[cur])?;
        if is_reset {
            marked.push(name.clone());
        }
        if states.contains(&name) {
            return Err(MultimodalError::Malformed(format!("state {name} has two rows")));
        }
        states.push(name.clone());
        let outs = out_idx.iter().map(|&i| syms(&r[i])).collect::<Result<Vec<_>, _>>()?;
        rows.push((name, r.clone(), outs));
    }
    let inputs: Vec<Signal> = input_names
        .iter()
        .zip(&input_widths)
        .map(|(n, w)| Signal::new(n.clone(), *w as u32))
        .collect();
    let outputs = widths_from_first(&out_cols, rows.first().map(|r| &r.2));
    let mut transitions = Vec::new();
    for (name, cells, outs) in rows {
        let outs = check_widths(&outputs, &outs, "output")?;
        for (col, conds) in &next_cols {
            let (next, _) = parse_state_cell(&cells[*col])?;
            if !states.contains(&next) {
                return Err(MultimodalError::UnknownStateReference(next));
            }
            let mut pattern = Vec::new();
            for (n, w) in input_names.iter().zip(&input_widths) {
                match conds.iter().find(|(cn, _)| cn == n) {
                    Some((_, bits)) => pattern.extend_from_slice(bits),
                    None => pattern.extend(std::iter::repeat_n(Sym::Dc, *w)),
                }
            }
            transitions.push(Transition {
                current: name.clone(),
                inputs: pattern,
                next,
                outputs: outs.clone(),
            });
        }
    }
    finish(states, marked, inputs, outputs, transitions, d, true)
}

fn parse_signal_list(text: &str) -> Result<Vec<Signal>, MultimodalError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (n, w) = parse_signal_decl(s).ok_or_else(|| MultimodalError::BadHeader(format!("bad signal {s:?}")))?;
            Ok(Signal::new(n, w.unwrap_or(1)))
        })
        .collect()
}

fn parse_canonical(raw: &str) -> Result<StateTransitionIR, MultimodalError> {
    let mut lines = raw.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines.next().ok_or_else(|| MultimodalError::BadHeader("empty state machine".into()))?;
    let c = canonical_header_re()
        .captures(header)
        .ok_or_else(|| MultimodalError::BadHeader(header.to_string()))?;
    let inputs = parse_signal_list(&c[1])?;
    let outputs = parse_signal_list(&c[2])?;
    let edge = if c[3].eq_ignore_ascii_case("negedge") { ClockEdge::Neg } else { ClockEdge::Pos };
    let reset = if c[5].trim().eq_ignore_ascii_case("none") {
        None
    } else {
        let d = parse_directives(&[format!("reset: {}", &c[5])])?;
        d.reset
    };
    let mut states: Vec<String> = Vec::new();
    let mut transitions = Vec::new();
    for line in lines {
        let r = canonical_row_re()
            .captures(line)
            .ok_or_else(|| MultimodalError::Malformed(format!("bad state machine row {line:?}")))?;
        let star = |s: &str| if s.trim() == "*" { Ok(Vec::new()) } else { syms(s) };
        if !states.contains(&r[1].to_string()) {
            states.push(r[1].to_string());
        }
        transitions.push(Transition {
            current: r[1].to_string(),
            inputs: star(&r[2])?,
            next: r[3].to_string(),
            outputs: star(&r[4])?,
        });
    }
    for t in &transitions {
        if !states.contains(&t.next) {
            return Err(MultimodalError::UnknownStateReference(t.next.clone()));
        }
    }
    let ir = StateTransitionIR {
        states,
        reset_state: c[6].to_string(),
        reset_state_inferred: false,
        reset,
        clock: c[4].to_string(),
        clock_edge: edge,
        inputs,
        outputs,
        transitions,
        moore: c[7].eq_ignore_ascii_case("moore"),
    };
    ir.validate()?;
    Ok(ir)
}

pub fn parse_state_table(raw: &str) -> Result<StateTransitionIR, MultimodalError> {
    if is_canonical(raw) {
        return parse_canonical(raw);
    }
    let grid = parse_grid(raw);
    let directives = parse_directives(&grid.annotations)?;
    let (header, body) = grid
        .rows
        .split_first()
        .ok_or_else(|| MultimodalError::BadHeader("empty state table".into()))?;
    if !header.iter().any(|c| is_current_state_header(c)) {
        return Err(MultimodalError::BadHeader("no current-state column".into()));
    }
    let conditional = header.iter().any(|c| is_next_state_header(c) && c.contains('='));
    if conditional {
        parse_state_rows(header, body, directives)
    } else {
        parse_transition_rows(header, body, directives)
    }
}

/// Executes a [`StateTransitionIR`] one clock cycle at a time.
///
/// Each [`step`](Self::step) applies an input, samples the outputs, then
/// takes the clock edge. Don't-care outputs read as 0, matching the emitter.
#[derive(Debug, Clone)]
pub struct FsmInterpreter<'a> {
    ir: &'a StateTransitionIR,
    state: String,
}

impl<'a> FsmInterpreter<'a> {
    pub fn new(ir: &'a StateTransitionIR) -> Self {
        Self {
            ir,
            state: ir.reset_state.clone(),
        }
    }

    pub fn reset(&mut self) {
        self.state = self.ir.reset_state.clone();
    }

    pub fn state(&self) -> &str {
        &self.state
    }

    pub fn outputs(&self, input: u64) -> Vec<bool> {
        if self.ir.moore {
            self.ir
                .moore_outputs(&self.state)
                .expect("validated Moore machine")
                .iter()
                .map(|s| s.resolved())
                .collect()
        } else {
            self.ir
                .transition(&self.state, input)
                .expect("validated machine covers every input")
                .outputs
                .iter()
                .map(|s| s.resolved())
                .collect()
        }
    }

    pub fn step(&mut self, input: u64) -> Vec<bool> {
        let out = self.outputs(input);
        self.state = self
            .ir
            .transition(&self.state, input)
            .expect("validated machine covers every input")
            .next
            .clone();
        out
    }

    /// Output samples for a whole input sequence, starting from reset.
    pub fn run(ir: &StateTransitionIR, inputs: &[u64]) -> Vec<Vec<bool>> {
        let mut sim = FsmInterpreter::new(ir);
        inputs.iter().map(|&v| sim.step(v)).collect()
    }
}

/// Enumerates the full input assignments of an IR, for tests and emitters.
pub fn all_inputs(ir: &StateTransitionIR) -> impl Iterator<Item = Vec<Sym>> + '_ {
    let n = ir.input_bits();
    (0..1u64 << n).map(move |v| bits_of(v, n))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOGGLE: &str = "\
| state | x | next | z |
|-------|---|------|---|
| A     | 0 | A    | 0 |
| A     | 1 | B    | 0 |
| B     | 0 | B    | 1 |
| B     | 1 | A    | 1 |
";

    #[test]
    fn toggle_table() {
        let ir = parse_state_table(TOGGLE).unwrap();
        assert_eq!(ir.states, vec!["A", "B"]);
        assert_eq!(ir.transitions.len(), 4);
        assert_eq!(ir.reset_state, "A");
        assert!(ir.reset_state_inferred);
        assert!(ir.moore);
        assert_eq!(
            ir.reset,
            Some(ResetSpec {
                signal: "reset".into(),
                kind: ResetKind::Sync,
                active_high: true
            })
        );
        let seq = FsmInterpreter::run(&ir, &[1, 1, 1]);
        assert_eq!(seq, vec![vec![false], vec![true], vec![false]]);
        let mut sim = FsmInterpreter::new(&ir);
        let states: Vec<String> = (0..3)
            .map(|_| {
                let s = sim.state().to_string();
                sim.step(1);
                s
            })
            .collect();
        assert_eq!(states, vec!["A", "B", "A"]);
    }

    #[test]
    fn ambiguous_transition_rejected() {
        let raw = "| state | x | next |\n| A | 1 | B |\n| A | 1 | C |\n| A | 0 | A |\n| B | - | A |\n| C | - | A |\n";
        assert!(matches!(
            parse_state_table(raw),
            Err(MultimodalError::NondeterministicTransition { .. })
        ));
    }

    #[test]
    fn unknown_next_state_rejected() {
        let raw = "| state | x | next |\n| A | 0 | A |\n| A | 1 | D |\n";
        assert_eq!(
            parse_state_table(raw).unwrap_err(),
            MultimodalError::UnknownStateReference("D".into())
        );
    }

    #[test]
    fn incomplete_coverage_rejected() {
        let raw = "| state | x | next |\n| A | 1 | B |\n| B | - | A |\n";
        assert!(matches!(
            parse_state_table(raw),
            Err(MultimodalError::IncompleteTransitions { .. })
        ));
    }

    #[test]
    fn directives_and_reset_marker() {
        let raw = format!("reset: async active-low rst_n\nclock: negedge clock\n{}", TOGGLE.replace("| B     | 0", "| B (reset) | 0"));
        let ir = parse_state_table(&raw).unwrap();
        assert_eq!(ir.reset_state, "B");
        assert!(!ir.reset_state_inferred);
        let r = ir.reset.as_ref().unwrap();
        assert_eq!((r.kind, r.active_high, r.signal.as_str()), (ResetKind::Async, false, "rst_n"));
        assert_eq!((ir.clock.as_str(), ir.clock_edge), ("clock", ClockEdge::Neg));
        let none = parse_state_table(&format!("reset: none\n{TOGGLE}")).unwrap();
        assert!(none.reset.is_none());
    }

    #[test]
    fn mealy_detected_when_outputs_follow_inputs() {
        let raw = "| state | x | next | z |\n| A | 0 | A | 0 |\n| A | 1 | B | 0 |\n| B | 0 | A | 0 |\n| B | 1 | B | 1 |\n";
        let ir = parse_state_table(raw).unwrap();
        assert!(!ir.moore);
        // "11" detector: z is high in B while x is high
        assert_eq!(
            FsmInterpreter::run(&ir, &[1, 1, 0, 1]),
            vec![vec![false], vec![true], vec![false], vec![false]]
        );
    }

    #[test]
    fn per_state_layout_builds_a_moore_machine() {
        let raw = "| state | next (x=0) | next (x=1) | z |\n| A | A | B | 0 |\n| B | A | B | 1 |\n";
        let ir = parse_state_table(raw).unwrap();
        assert!(ir.moore);
        assert_eq!(ir.inputs, vec![Signal::new("x", 1)]);
        assert_eq!(ir.transitions.len(), 4);
        assert_eq!(FsmInterpreter::run(&ir, &[1, 1, 0, 0]), vec![vec![false], vec![true], vec![true], vec![false]]);
    }

    #[test]
    fn canonical_form_round_trips() {
        for raw in [
            TOGGLE.to_string(),
            format!("reset: async active-low rst_n\nclock: negedge clock\n{TOGGLE}"),
            format!("reset: none\n{TOGGLE}"),
            "| state | next | y[1:0] |\n| S0 (reset) | S1 | 00 |\n| S1 | S2 | 01 |\n| S2 | S0 | 1- |\n".to_string(),
        ] {
            let ir = parse_state_table(&raw).unwrap();
            let mut back = parse_state_table(&ir.render()).unwrap();
            back.reset_state_inferred = ir.reset_state_inferred;
            assert_eq!(back, ir, "{}", ir.render());
        }
    }
}
