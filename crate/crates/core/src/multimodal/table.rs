//! Truth tables, either as a pipe grid or in canonical form.
//!
//! Grid form: the header names inputs then outputs. An empty header cell
//! (written `||`) or a `=>` cell divides them; without one, the last column
//! is the only output. Column names may carry a range (`sel[1:0]`);
//! otherwise the width is taken from the first data row.
//!
//! Canonical form is what [`TruthTableIR::render`] produces:
//!
//! ```text
//! TRUTH TABLE(inputs=a,b[1:0]; outputs=y)
//! 0 00 -> 1
//! ```

use std::sync::OnceLock;

use regex::Regex;

use super::grid::{drop_dividers, parse_grid};
use super::ir::{parse_signal_decl, parse_syms, Signal, Sym, TruthTableIR, TtRow};
use super::MultimodalError;

fn canonical_header_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?i)^\s*TRUTH\s+TABLE\s*\(\s*inputs\s*=\s*([^;]*);\s*outputs\s*=\s*([^)]*)\)\s*:?\s*$").unwrap()
    })
}

pub fn is_canonical(raw: &str) -> bool {
    raw.lines().any(|l| canonical_header_re().is_match(l))
}

fn parse_signal_list(text: &str) -> Result<Vec<Signal>, MultimodalError> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            let (name, w) = parse_signal_decl(s)
                .ok_or_else(|| MultimodalError::BadHeader(format!("bad signal {s:?}")))?;
            Ok(Signal::new(name, w.unwrap_or(1)))
        })
        .collect()
}

fn cell_syms(cell: &str) -> Result<Vec<Sym>, MultimodalError> {
    parse_syms(cell).ok_or_else(|| MultimodalError::BadCellSymbol(cell.to_string()))
}

fn parse_canonical(raw: &str) -> Result<TruthTableIR, MultimodalError> {
    let mut lines = raw.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let header = lines
        .next()
        .ok_or_else(|| MultimodalError::BadHeader("empty table".into()))?;
    let caps = canonical_header_re()
        .captures(header)
        .ok_or_else(|| MultimodalError::BadHeader(header.to_string()))?;
    let inputs = parse_signal_list(&caps[1])?;
    let outputs = parse_signal_list(&caps[2])?;
    if outputs.is_empty() {
        return Err(MultimodalError::BadHeader("table has no outputs".into()));
    }
    let (ni, no) = (
        inputs.iter().map(|s| s.width as usize).sum::<usize>(),
        outputs.iter().map(|s| s.width as usize).sum::<usize>(),
    );
    let mut rows = Vec::new();
    for line in lines {
        let (lhs, rhs) = line
            .split_once("->")
            .ok_or_else(|| MultimodalError::Malformed(format!("row {line:?} lacks '->'")))?;
        let row = TtRow {
            inputs: cell_syms(lhs)?,
            outputs: cell_syms(rhs)?,
        };
        if row.inputs.len() != ni || row.outputs.len() != no {
            return Err(MultimodalError::WidthMismatch(format!(
                "row {line:?} has {}+{} bits, expected {ni}+{no}",
                row.inputs.len(),
                row.outputs.len()
            )));
        }
        rows.push(row);
    }
    let ir = TruthTableIR { inputs, outputs, rows };
    ir.validate()?;
    Ok(ir)
}

fn parse_grid_table(raw: &str) -> Result<TruthTableIR, MultimodalError> {
    let grid = parse_grid(raw);
    let (header, body) = grid
        .rows
        .split_first()
        .ok_or_else(|| MultimodalError::BadHeader("empty table".into()))?;
    let dividers: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, c)| c.is_empty() || c.as_str() == "=>" || c.as_str() == "->")
        .map(|(i, _)| i)
        .collect();
    if dividers.len() > 1 {
        return Err(MultimodalError::BadHeader("more than one input/output divider".into()));
    }
    let names: Vec<&String> = header.iter().enumerate().filter(|(i, _)| !dividers.contains(i)).map(|(_, c)| c).collect();
    if names.len() < 2 {
        return Err(MultimodalError::BadHeader("a table needs at least one input and one output".into()));
    }
    let split = match dividers.first() {
        Some(&d) => d,
        None => names.len() - 1,
    };
    if split == 0 || split >= names.len() {
        return Err(MultimodalError::BadHeader("divider leaves no inputs or no outputs".into()));
    }
    let mut decls = Vec::with_capacity(names.len());
    for n in &names {
        let d = parse_signal_decl(n).ok_or_else(|| MultimodalError::BadHeader(format!("bad column name {n:?}")))?;
        decls.push(d);
    }
    for (i, d) in decls.iter().enumerate() {
        if decls[..i].iter().any(|e| e.0 == d.0) {
            return Err(MultimodalError::BadHeader(format!("column {} repeats", d.0)));
        }
    }
    let mut cells_rows = Vec::with_capacity(body.len());
    for r in body {
        if r.len() != header.len() {
            return Err(MultimodalError::WidthMismatch(format!(
                "row has {} cells under {} header cells",
                r.len(),
                header.len()
            )));
        }
        let cells = drop_dividers(r, &dividers)
            .ok_or_else(|| MultimodalError::Malformed(format!("row {r:?} has a value in the divider column")))?;
        if cells.len() != names.len() {
            return Err(MultimodalError::WidthMismatch(format!(
                "row has {} cells under {} columns",
                cells.len(),
                names.len()
            )));
        }
        cells_rows.push(cells.iter().map(|c| cell_syms(c)).collect::<Result<Vec<_>, _>>()?);
    }
    let mut widths = Vec::with_capacity(decls.len());
    for (i, (name, w)) in decls.iter().enumerate() {
        let w = match (w, cells_rows.first()) {
            (Some(w), _) => *w as usize,
            (None, Some(first)) => first[i].len(),
            (None, None) => 1,
        };
        if w == 0 {
            return Err(MultimodalError::WidthMismatch(format!("column {name} is empty")));
        }
        widths.push(w);
    }
    let mut rows = Vec::with_capacity(cells_rows.len());
    for (n, cells) in cells_rows.into_iter().enumerate() {
        let mut inputs = Vec::new();
        let mut outputs = Vec::new();
        for (i, syms) in cells.into_iter().enumerate() {
            if syms.len() != widths[i] {
                return Err(MultimodalError::WidthMismatch(format!(
                    "row {}: column {} has {} bits, expected {}",
                    n + 1,
                    decls[i].0,
                    syms.len(),
                    widths[i]
                )));
            }
            if i < split {
                inputs.extend(syms);
            } else {
                outputs.extend(syms);
            }
        }
        rows.push(TtRow { inputs, outputs });
    }
    let sig = |i: usize| Signal::new(decls[i].0.clone(), widths[i] as u32);
    let ir = TruthTableIR {
        inputs: (0..split).map(sig).collect(),
        outputs: (split..names.len()).map(sig).collect(),
        rows,
    };
    ir.validate()?;
    Ok(ir)
}

pub fn parse_truth_table(raw: &str) -> Result<TruthTableIR, MultimodalError> {
    if is_canonical(raw) {
        parse_canonical(raw)
    } else {
        parse_grid_table(raw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multimodal::ir::bits_of;
    use crate::multimodal::kmap::{parse_kmap, render_kmap};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[test]
    fn xor_reduce_table_is_parity() {
        let mut raw = String::from("| a | b | c || p |\n|---|---|---|---|---|\n");
        for v in 0..8u32 {
            raw.push_str(&format!(
                "| {} | {} | {} || {} |\n",
                v >> 2 & 1,
                v >> 1 & 1,
                v & 1,
                v.count_ones() & 1
            ));
        }
        let ir = parse_truth_table(&raw).unwrap();
        assert_eq!(ir.rows.len(), 8);
        for v in 0..8u64 {
            assert_eq!(ir.eval(v), vec![Some(v.count_ones() % 2 == 1)]);
        }
    }

    #[test]
    fn conflicting_rows_rejected_in_both_forms() {
        assert!(matches!(
            parse_truth_table("| ab | y |\n| 00 | 1 |\n| 00 | 0 |\n"),
            Err(MultimodalError::InconsistentRows { .. })
        ));
        assert!(matches!(
            parse_truth_table("TRUTH TABLE(inputs=a,b; outputs=y)\n0 0 -> 1\n0 0 -> 0\n"),
            Err(MultimodalError::InconsistentRows { .. })
        ));
    }

    #[test]
    fn short_rows_are_width_mismatches() {
        assert!(matches!(
            parse_truth_table("| a | b | c || y |\n| 0 | 1 || 1 |\n"),
            Err(MultimodalError::WidthMismatch(_))
        ));
        assert!(matches!(
            parse_truth_table("| in[2:0] | y |\n| 10 | 1 |\n"),
            Err(MultimodalError::WidthMismatch(_))
        ));
        assert!(matches!(
            parse_truth_table("TRUTH TABLE(inputs=a[2:0]; outputs=y)\n10 -> 1\n"),
            Err(MultimodalError::WidthMismatch(_))
        ));
    }

    #[test]
    fn last_column_is_output_without_divider() {
        let ir = parse_truth_table("| sel | d | y |\n| 0 | - | 0 |\n| 1 | - | 1 |\n").unwrap();
        assert_eq!(ir.inputs.len(), 2);
        assert_eq!(ir.outputs, vec![Signal::new("y", 1)]);
        assert_eq!(ir.eval(0b11), vec![Some(true)]);
    }

    #[test]
    fn multi_bit_columns_and_arrow_divider() {
        let ir = parse_truth_table("| s[1:0] | => | y | z |\n| 1- | => | 1 | 0 |\n| 0_0 | => | 0 | - |\n").unwrap();
        assert_eq!(ir.inputs, vec![Signal::new("s", 2)]);
        assert_eq!(ir.outputs.len(), 2);
        assert_eq!(ir.eval(0b11), vec![Some(true), Some(false)]);
        assert_eq!(ir.eval(0b00), vec![Some(false), None]);
    }

    #[test]
    fn canonical_render_round_trips() {
        let ir = parse_truth_table("| a | b[1:0] || y | z[1:0] |\n| 0 | 01 || 1 | 0- |\n| 1 | -- || 0 | 11 |\n").unwrap();
        let text = ir.render();
        assert!(text.starts_with("TRUTH TABLE(inputs=a,b[1:0]; outputs=y,z[1:0])\n"));
        assert_eq!(parse_truth_table(&text).unwrap(), ir);
    }

    fn row_set(ir: &TruthTableIR) -> BTreeSet<(Vec<Sym>, Vec<Sym>)> {
        ir.rows.iter().map(|r| (r.inputs.clone(), r.outputs.clone())).collect()
    }

    proptest! {
        #[test]
        fn kmap_agrees_with_explicit_table(bits in proptest::collection::vec(0u8..3, 16)) {
            let sym = |b: u8| [Sym::Zero, Sym::One, Sym::Dc][b as usize];
            let mut grid_rows = Vec::new();
            let mut table = String::from("| a | b | c | d || out |\n");
            for v in 0..16u64 {
                let s = sym(bits[v as usize]);
                grid_rows.push(TtRow { inputs: bits_of(v, 4), outputs: vec![s] });
                table.push_str(&format!("| {} | {} | {} | {} || {} |\n", v >> 3 & 1, v >> 2 & 1, v >> 1 & 1, v & 1, s.to_char()));
            }
            let ir = TruthTableIR {
                inputs: ["a", "b", "c", "d"].iter().map(|n| Signal::new(*n, 1)).collect(),
                outputs: vec![Signal::new("out", 1)],
                rows: grid_rows,
            };
            let from_kmap = parse_kmap(&render_kmap(&ir, 2).unwrap()).unwrap();
            let from_table = parse_truth_table(&table).unwrap();
            prop_assert_eq!(row_set(&from_kmap), row_set(&from_table));
            prop_assert_eq!(&from_kmap.inputs, &from_table.inputs);
        }
    }
}
