use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::MultimodalError;

/// One bit of a pattern or value: 0, 1 or don't-care.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sym {
    Zero,
    One,
    Dc,
}

impl Sym {
    pub fn from_char(c: char) -> Option<Sym> {
        match c {
            '0' => Some(Sym::Zero),
            '1' => Some(Sym::One),
            '-' | 'x' | 'X' | 'd' | 'D' | '?' | 'z' | 'Z' => Some(Sym::Dc),
            _ => None,
        }
    }

    pub fn from_bool(b: bool) -> Sym {
        if b {
            Sym::One
        } else {
            Sym::Zero
        }
    }

    pub fn to_char(self) -> char {
        match self {
            Sym::Zero => '0',
            Sym::One => '1',
            Sym::Dc => '-',
        }
    }

    /// Verilog casez digit.
    pub fn casez_char(self) -> char {
        match self {
            Sym::Dc => '?',
            s => s.to_char(),
        }
    }

    pub fn value(self) -> Option<bool> {
        match self {
            Sym::Zero => Some(false),
            Sym::One => Some(true),
            Sym::Dc => None,
        }
    }

    /// Value with don't-care resolved to 0, the emitter's convention.
    pub fn resolved(self) -> bool {
        self == Sym::One
    }

    pub fn matches(self, bit: bool) -> bool {
        self.value().is_none_or(|v| v == bit)
    }

    pub fn compatible(self, other: Sym) -> bool {
        self == Sym::Dc || other == Sym::Dc || self == other
    }
}

/// Parses a symbol string, ignoring `_` and spaces.
pub fn parse_syms(text: &str) -> Option<Vec<Sym>> {
    text.chars()
        .filter(|c| *c != '_' && !c.is_whitespace())
        .map(Sym::from_char)
        .collect()
}

pub fn syms_to_string(syms: &[Sym]) -> String {
    syms.iter().map(|s| s.to_char()).collect()
}

/// Whether two input patterns share at least one fully specified assignment.
pub fn overlaps(a: &[Sym], b: &[Sym]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.compatible(*y))
}

/// Whether `pattern` (MSB-first) matches the low `pattern.len()` bits of `value`.
pub fn pattern_matches(pattern: &[Sym], value: u64) -> bool {
    let n = pattern.len();
    pattern
        .iter()
        .enumerate()
        .all(|(i, s)| s.matches((value >> (n - 1 - i)) & 1 == 1))
}

pub fn bits_of(value: u64, width: usize) -> Vec<Sym> {
    (0..width)
        .map(|i| Sym::from_bool((value >> (width - 1 - i)) & 1 == 1))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Signal {
    pub name: String,
    pub width: u32,
}

impl Signal {
    pub fn new(name: impl Into<String>, width: u32) -> Self {
        Self {
            name: name.into(),
            width,
        }
    }

    pub fn render(&self) -> String {
        if self.width == 1 {
            self.name.clone()
        } else {
            format!("{}[{}:0]", self.name, self.width - 1)
        }
    }
}

/// Parses `name` or `name[msb:lsb]` / `name[n]` as used in IR headers.
pub fn parse_signal_decl(text: &str) -> Option<(String, Option<u32>)> {
    let t = text.trim();
    let (name, rest) = match t.find('[') {
        Some(i) => (t[..i].trim(), Some(t[i..].trim())),
        None => (t, None),
    };
    if !is_identifier(name) {
        return None;
    }
    let width = match rest {
        None => None,
        Some(r) => {
            let inner = r.strip_prefix('[')?.strip_suffix(']')?;
            match inner.split_once(':') {
                Some((m, l)) => {
                    let m: i64 = m.trim().parse().ok()?;
                    let l: i64 = l.trim().parse().ok()?;
                    Some(((m - l).unsigned_abs() + 1) as u32)
                }
                None => Some(inner.trim().parse::<u32>().ok()?),
            }
        }
    };
    Some((name.to_string(), width))
}

pub fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn total_width(signals: &[Signal]) -> usize {
    signals.iter().map(|s| s.width as usize).sum()
}

/// Splits a flat symbol vector into per-signal groups for rendering.
fn grouped(signals: &[Signal], syms: &[Sym]) -> String {
    let mut out = Vec::with_capacity(signals.len());
    let mut at = 0;
    for s in signals {
        let w = s.width as usize;
        out.push(syms_to_string(&syms[at..at + w]));
        at += w;
    }
    out.join(" ")
}

fn render_signals(signals: &[Signal]) -> String {
    signals.iter().map(Signal::render).collect::<Vec<_>>().join(",")
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TtRow {
    pub inputs: Vec<Sym>,
    pub outputs: Vec<Sym>,
}

/// Unified truth-table meta-representation.
///
/// Patterns concatenate the inputs in declaration order, each MSB-first.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruthTableIR {
    pub inputs: Vec<Signal>,
    pub outputs: Vec<Signal>,
    pub rows: Vec<TtRow>,
}

impl TruthTableIR {
    pub fn input_bits(&self) -> usize {
        total_width(&self.inputs)
    }

    pub fn output_bits(&self) -> usize {
        total_width(&self.outputs)
    }

    pub fn validate(&self) -> Result<(), MultimodalError> {
        let (ni, no) = (self.input_bits(), self.output_bits());
        for (i, r) in self.rows.iter().enumerate() {
            if r.inputs.len() != ni || r.outputs.len() != no {
                return Err(MultimodalError::WidthMismatch(format!(
                    "row {} has {}+{} bits, expected {ni}+{no}",
                    i + 1,
                    r.inputs.len(),
                    r.outputs.len()
                )));
            }
        }
        for (i, a) in self.rows.iter().enumerate() {
            for (j, b) in self.rows.iter().enumerate().skip(i + 1) {
                if overlaps(&a.inputs, &b.inputs)
                    && a.outputs.iter().zip(&b.outputs).any(|(x, y)| !x.compatible(*y))
                {
                    return Err(MultimodalError::InconsistentRows {
                        first: i + 1,
                        second: j + 1,
                        pattern: syms_to_string(&a.inputs),
                    });
                }
            }
        }
        Ok(())
    }

    /// Specified value of every output bit for a full input assignment;
    /// `None` where no matching row specifies the bit.
    pub fn eval(&self, input: u64) -> Vec<Option<bool>> {
        let mut out = vec![None; self.output_bits()];
        for r in self.rows.iter().filter(|r| pattern_matches(&r.inputs, input)) {
            for (slot, s) in out.iter_mut().zip(&r.outputs) {
                if slot.is_none() {
                    *slot = s.value();
                }
            }
        }
        out
    }

    /// Canonical text form, parsed back by [`super::parse_truth_table`].
    pub fn render(&self) -> String {
        let mut out = format!(
            "TRUTH TABLE(inputs={}; outputs={})\n",
            render_signals(&self.inputs),
            render_signals(&self.outputs)
        );
        for r in &self.rows {
            out.push_str(&format!(
                "{} -> {}\n",
                grouped(&self.inputs, &r.inputs),
                grouped(&self.outputs, &r.outputs)
            ));
        }
        out
    }

    /// Rows with don't-care inputs expanded, keyed by full assignment.
    pub fn minterm_map(&self) -> BTreeMap<u64, Vec<Sym>> {
        let n = self.input_bits();
        let mut map = BTreeMap::new();
        if n > 20 {
            return map;
        }
        for v in 0..(1u64 << n) {
            let vals = self.eval(v);
            if self.rows.iter().any(|r| pattern_matches(&r.inputs, v)) {
                map.insert(
                    v,
                    vals.into_iter()
                        .map(|b| b.map_or(Sym::Dc, Sym::from_bool))
                        .collect(),
                );
            }
        }
        map
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetKind {
    Sync,
    Async,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockEdge {
    Pos,
    Neg,
}

impl ClockEdge {
    pub fn keyword(self) -> &'static str {
        match self {
            ClockEdge::Pos => "posedge",
            ClockEdge::Neg => "negedge",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResetSpec {
    pub signal: String,
    pub kind: ResetKind,
    pub active_high: bool,
}

impl fmt::Display for ResetSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} active-{} {}",
            match self.kind {
                ResetKind::Sync => "sync",
                ResetKind::Async => "async",
            },
            if self.active_high { "high" } else { "low" },
            self.signal
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub current: String,
    pub inputs: Vec<Sym>,
    pub next: String,
    pub outputs: Vec<Sym>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTransitionIR {
    pub states: Vec<String>,
    pub reset_state: String,
    /// True when no state was marked as the reset state and the first was used.
    pub reset_state_inferred: bool,
    /// `None`: no reset port; the state register starts in `reset_state`.
    pub reset: Option<ResetSpec>,
    pub clock: String,
    pub clock_edge: ClockEdge,
    pub inputs: Vec<Signal>,
    pub outputs: Vec<Signal>,
    pub transitions: Vec<Transition>,
    pub moore: bool,
}

/// Largest input width for which transition coverage is checked exhaustively.
pub const MAX_FSM_INPUT_BITS: usize = 16;

impl StateTransitionIR {
    pub fn input_bits(&self) -> usize {
        total_width(&self.inputs)
    }

    pub fn output_bits(&self) -> usize {
        total_width(&self.outputs)
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.states.iter().position(|s| s == name)
    }

    pub fn validate(&self) -> Result<(), MultimodalError> {
        if self.states.is_empty() {
            return Err(MultimodalError::Malformed("state machine has no states".into()));
        }
        for (i, s) in self.states.iter().enumerate() {
            if self.states[..i].contains(s) {
                return Err(MultimodalError::Malformed(format!("state {s:?} listed twice")));
            }
        }
        if self.state_index(&self.reset_state).is_none() {
            return Err(MultimodalError::UnknownStateReference(self.reset_state.clone()));
        }
        let (ni, no) = (self.input_bits(), self.output_bits());
        if ni > MAX_FSM_INPUT_BITS {
            return Err(MultimodalError::WidthMismatch(format!(
                "{ni} input bits exceed the supported {MAX_FSM_INPUT_BITS}"
            )));
        }
        for t in &self.transitions {
            for s in [&t.current, &t.next] {
                if self.state_index(s).is_none() {
                    return Err(MultimodalError::UnknownStateReference(s.clone()));
                }
            }
            if t.inputs.len() != ni || t.outputs.len() != no {
                return Err(MultimodalError::WidthMismatch(format!(
                    "transition from {} has {}+{} bits, expected {ni}+{no}",
                    t.current,
                    t.inputs.len(),
                    t.outputs.len()
                )));
            }
        }
        for (i, a) in self.transitions.iter().enumerate() {
            for b in &self.transitions[i + 1..] {
                if a.current == b.current
                    && overlaps(&a.inputs, &b.inputs)
                    && (a.next != b.next || a.outputs.iter().zip(&b.outputs).any(|(x, y)| !x.compatible(*y)))
                {
                    return Err(MultimodalError::NondeterministicTransition {
                        state: a.current.clone(),
                        pattern: syms_to_string(&a.inputs),
                    });
                }
            }
        }
        for s in &self.states {
            for v in 0..(1u64 << ni) {
                if !self
                    .transitions
                    .iter()
                    .any(|t| &t.current == s && pattern_matches(&t.inputs, v))
                {
                    return Err(MultimodalError::IncompleteTransitions {
                        state: s.clone(),
                        input: syms_to_string(&bits_of(v, ni)),
                    });
                }
            }
        }
        if self.moore {
            for s in &self.states {
                self.moore_outputs(s)?;
            }
        }
        Ok(())
    }

    /// Merged outputs of every transition leaving `state`; fails if they disagree.
    pub fn moore_outputs(&self, state: &str) -> Result<Vec<Sym>, MultimodalError> {
        let mut merged = vec![Sym::Dc; self.output_bits()];
        for t in self.transitions.iter().filter(|t| t.current == state) {
            for (m, o) in merged.iter_mut().zip(&t.outputs) {
                match (*m, *o) {
                    (_, Sym::Dc) => {}
                    (Sym::Dc, v) => *m = v,
                    (a, b) if a == b => {}
                    _ => {
                        return Err(MultimodalError::Malformed(format!(
                            "state {state} has input-dependent outputs in a Moore machine"
                        )))
                    }
                }
            }
        }
        Ok(merged)
    }

    /// Whether every state's outputs are independent of the inputs.
    pub fn outputs_depend_on_state_only(&self) -> bool {
        self.states.iter().all(|s| self.moore_outputs(s).is_ok())
    }

    /// The unique transition taken from `state` under a full input assignment.
    pub fn transition(&self, state: &str, input: u64) -> Option<&Transition> {
        self.transitions
            .iter()
            .find(|t| t.current == state && pattern_matches(&t.inputs, input))
    }

    /// Canonical text form, parsed back by [`super::parse_state_table`].
    pub fn render(&self) -> String {
        let reset = match &self.reset {
            Some(r) => format!("{r} -> {}", self.reset_state),
            None => format!("none -> {}", self.reset_state),
        };
        let mut out = format!(
            "STATE MACHINE(inputs={}; outputs={}; clock={} {}; reset={}; {})\n",
            render_signals(&self.inputs),
            render_signals(&self.outputs),
            self.clock_edge.keyword(),
            self.clock,
            reset,
            if self.moore { "moore" } else { "mealy" }
        );
        for t in &self.transitions {
            let ins = if self.inputs.is_empty() {
                "*".to_string()
            } else {
                grouped(&self.inputs, &t.inputs)
            };
            let outs = if self.outputs.is_empty() {
                "*".to_string()
            } else {
                grouped(&self.outputs, &t.outputs)
            };
            out.push_str(&format!("STATE {} | {} -> {} | {}\n", t.current, ins, t.next, outs));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveSignal {
    pub name: String,
    pub width: u32,
    /// One MSB-first value per sample.
    pub values: Vec<Vec<Sym>>,
    pub output: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WaveformIR {
    pub time_axis: Vec<String>,
    pub signals: Vec<WaveSignal>,
    pub clock_name: Option<String>,
    pub clock_edge: ClockEdge,
    pub reset: Option<ResetSpec>,
}

impl WaveformIR {
    pub fn signal(&self, name: &str) -> Option<&WaveSignal> {
        self.signals.iter().find(|s| s.name == name)
    }
}

/// Result of converting a multimodal block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConvertedIr {
    Table(TruthTableIR),
    Fsm(StateTransitionIR),
}

impl ConvertedIr {
    pub fn render(&self) -> String {
        match self {
            ConvertedIr::Table(t) => t.render(),
            ConvertedIr::Fsm(f) => f.render(),
        }
    }
}
