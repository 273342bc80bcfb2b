//! Multimodal design data: K-maps, truth tables, state tables and waveforms.
//!
//! Each format is parsed into one of two meta-representations,
//! [`TruthTableIR`] or [`StateTransitionIR`], which can be rendered back as
//! explicit text for a prompt or emitted directly as Verilog.

mod detect;
mod emit;
mod fsm;
mod grid;
mod ir;
mod kmap;
mod table;
mod waveform;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::verilog::ModuleHeader;

pub use detect::detect;
pub use emit::{emit_fsm, emit_truth_table, emit_verilog, state_param};
pub use fsm::{all_inputs, parse_state_table, FsmInterpreter};
pub use grid::{parse_grid, Grid};
pub use ir::{
    bits_of, parse_syms, pattern_matches, syms_to_string, ClockEdge, ConvertedIr, ResetKind, ResetSpec, Signal,
    StateTransitionIR, Sym, Transition, TruthTableIR, TtRow, WaveSignal, WaveformIR, MAX_FSM_INPUT_BITS,
};
pub use kmap::{check_gray_labels, parse_kmap, render_kmap, DEFAULT_OUTPUT};
pub use table::parse_truth_table;
pub use waveform::{parse_waveform, waveform_to_ir};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MultimodalError {
    #[error("bad header: {0}")]
    BadHeader(String),
    #[error("labels are not a Gray sequence: {0}")]
    BadGraySequence(String),
    #[error("cell count mismatch: {0}")]
    CellCountMismatch(String),
    #[error("bad cell symbol {0:?}")]
    BadCellSymbol(String),
    #[error("rows {first} and {second} disagree on input pattern {pattern}")]
    InconsistentRows { first: usize, second: usize, pattern: String },
    #[error("width mismatch: {0}")]
    WidthMismatch(String),
    #[error("state {state} has more than one transition for input {pattern}")]
    NondeterministicTransition { state: String, pattern: String },
    #[error("unknown state {0:?}")]
    UnknownStateReference(String),
    #[error("state {state} has no transition for input {input}")]
    IncompleteTransitions { state: String, input: String },
    #[error("contradictory samples: {0}")]
    ContradictorySamples(String),
    #[error("bad waveform: {0}")]
    BadWaveform(String),
    #[error("port mismatch: {0}")]
    PortMismatch(String),
    #[error("blocks at {0:?} and {1:?} overlap")]
    Overlap(Range<usize>, Range<usize>),
    #[error("{0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Kmap,
    TruthTable,
    StateTable,
    Waveform,
}

impl BlockKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BlockKind::Kmap => "kmap",
            BlockKind::TruthTable => "truth_table",
            BlockKind::StateTable => "state_table",
            BlockKind::Waveform => "waveform",
        }
    }
}

/// A block found in a description. `span` is a byte range into it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultimodalBlock {
    pub kind: BlockKind,
    pub span: Range<usize>,
    pub raw: String,
}

pub fn convert(block: &MultimodalBlock) -> Result<ConvertedIr, MultimodalError> {
    convert_raw(block.kind, &block.raw)
}

pub fn convert_raw(kind: BlockKind, raw: &str) -> Result<ConvertedIr, MultimodalError> {
    match kind {
        BlockKind::Kmap => parse_kmap(raw).map(ConvertedIr::Table),
        BlockKind::TruthTable => parse_truth_table(raw).map(ConvertedIr::Table),
        BlockKind::StateTable => parse_state_table(raw).map(ConvertedIr::Fsm),
        BlockKind::Waveform => waveform_to_ir(&parse_waveform(raw)?),
    }
}

/// Replaces every block's span with the canonical rendering of its IR.
pub fn rewrite_description(
    description: &str,
    blocks: &[(MultimodalBlock, ConvertedIr)],
) -> Result<String, MultimodalError> {
    let mut order: Vec<&(MultimodalBlock, ConvertedIr)> = blocks.iter().collect();
    order.sort_by_key(|(b, _)| (b.span.start, b.span.end));
    for w in order.windows(2) {
        if w[0].0.span.end > w[1].0.span.start {
            return Err(MultimodalError::Overlap(w[0].0.span.clone(), w[1].0.span.clone()));
        }
    }
    let mut out = description.to_string();
    for (b, ir) in order.into_iter().rev() {
        if b.span.end > out.len() || !out.is_char_boundary(b.span.start) || !out.is_char_boundary(b.span.end) {
            return Err(MultimodalError::Malformed(format!("span {:?} is outside the description", b.span)));
        }
        out.replace_range(b.span.clone(), ir.render().trim_end());
    }
    Ok(out)
}

/// Renames default or conventional signal names to the interface's.
///
/// A lone output called `out` takes the name of the interface's only
/// output of the same width; the clock and reset are renamed to the
/// interface's clock-like and reset-like inputs when the IR's names are absent.
pub fn bind_to_interface(ir: &mut ConvertedIr, iface: &ModuleHeader) {
    let outputs: Vec<_> = iface.outputs().collect();
    let sigs = match ir {
        ConvertedIr::Table(t) => &mut t.outputs,
        ConvertedIr::Fsm(f) => &mut f.outputs,
    };
    if let ([s], [p]) = (sigs.as_mut_slice(), outputs.as_slice()) {
        if s.name == DEFAULT_OUTPUT && p.width() == s.width && iface.port(DEFAULT_OUTPUT).is_none() {
            s.name = p.name.clone();
        }
    }
    if let ConvertedIr::Fsm(f) = ir {
        if iface.port(&f.clock).is_none() {
            if let Some(p) = iface.inputs().find(|p| waveform::is_clock_name(&p.name) && p.width() == 1) {
                f.clock = p.name.clone();
            }
        }
        if let Some(r) = &mut f.reset {
            if iface.port(&r.signal).is_none() {
                if let Some(p) = iface.inputs().find(|p| waveform::is_reset_name(&p.name) && p.width() == 1) {
                    let was_default = r.signal == "reset" || r.signal == "areset";
                    r.signal = p.name.clone();
                    if was_default {
                        let n = p.name.to_ascii_lowercase();
                        r.active_high = !(n.ends_with("_n") || n == "resetn" || n == "rstn" || n == "aresetn");
                    }
                }
            }
        }
    }
}
