//! Karnaugh-map grids.
//!
//! ```text
//! | ab\cd | 00 | 01 | 11 | 10 |
//! |-------|----|----|----|----|
//! | 00    | 1  | 0  | 0  | 1  |
//! | 01    | 0  | 0  | 0  | 0  |
//! | 11    | 0  | 1  | 1  | 0  |
//! | 10    | 1  | d  | d  | 1  |
//! ```
//!
//! The corner cell names the row variables before the backslash and the
//! column variables after it, either as single letters (`ab`) or as a comma
//! or space separated list (`x1,x2`). An optional `name:` prefix names the
//! output (default `out`). Labels are read verbatim as variable values.

use super::grid::parse_grid;
use super::ir::{is_identifier, Signal, Sym, TruthTableIR, TtRow};
use super::MultimodalError;

pub const DEFAULT_OUTPUT: &str = "out";

fn split_vars(group: &str) -> Result<Vec<String>, MultimodalError> {
    let g = group.trim();
    let vars: Vec<String> = if g.contains(',') || g.contains(char::is_whitespace) {
        g.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    } else if g.chars().all(|c| c.is_ascii_alphabetic()) {
        g.chars().map(String::from).collect()
    } else {
        vec![g.to_string()]
    };
    if vars.is_empty() || !vars.iter().all(|v| is_identifier(v)) {
        return Err(MultimodalError::BadHeader(format!("bad variable group {group:?}")));
    }
    Ok(vars)
}

/// Output name and (row, column) variable groups from the corner cell.
pub fn parse_corner(cell: &str) -> Result<(String, Vec<String>, Vec<String>), MultimodalError> {
    let (name, vars) = match cell.split_once(':') {
        Some((n, v)) if is_identifier(n.trim()) => (n.trim().to_string(), v),
        Some(_) => return Err(MultimodalError::BadHeader(format!("bad output name in {cell:?}"))),
        None => (DEFAULT_OUTPUT.to_string(), cell),
    };
    let (r, c) = vars
        .split_once('\\')
        .ok_or_else(|| MultimodalError::BadHeader(format!("corner cell {cell:?} lacks '\\'")))?;
    let rows = split_vars(r)?;
    let cols = split_vars(c)?;
    if rows.iter().chain(&cols).any(|v| v == &name)
        || rows.iter().any(|v| cols.contains(v))
        || has_dup(&rows)
        || has_dup(&cols)
    {
        return Err(MultimodalError::BadHeader(format!("repeated variable in {cell:?}")));
    }
    Ok((name, rows, cols))
}

fn has_dup(v: &[String]) -> bool {
    v.iter().enumerate().any(|(i, x)| v[..i].contains(x))
}

/// Accepts `labels` iff they are `2^k` distinct `k`-bit strings forming a
/// cyclic Gray sequence.
pub fn check_gray_labels(labels: &[String], k: usize) -> Result<Vec<u64>, MultimodalError> {
    let bad = |why: String| MultimodalError::BadGraySequence(format!("{}: {why}", labels.join(" ")));
    if k >= 16 {
        return Err(bad("too many variables".into()));
    }
    let mut values = Vec::with_capacity(labels.len());
    for l in labels {
        if l.len() != k || !l.chars().all(|c| c == '0' || c == '1') {
            return Err(MultimodalError::BadHeader(format!("label {l:?} is not a {k}-bit binary string")));
        }
        values.push(u64::from_str_radix(l, 2).expect("binary label"));
    }
    if values.len() != 1 << k {
        return Err(bad(format!("expected {} labels, found {}", 1 << k, values.len())));
    }
    for (i, v) in values.iter().enumerate() {
        if values[..i].contains(v) {
            return Err(bad(format!("label {} repeats", labels[i])));
        }
    }
    let n = values.len();
    for i in 0..n {
        let (a, b) = (values[i], values[(i + 1) % n]);
        if n > 1 && (a ^ b).count_ones() != 1 {
            return Err(bad(format!("{} and {} differ in more than one bit", labels[i], labels[(i + 1) % n])));
        }
    }
    Ok(values)
}

fn cell_symbol(cell: &str) -> Result<Sym, MultimodalError> {
    match cell.trim() {
        "0" => Ok(Sym::Zero),
        "1" => Ok(Sym::One),
        "d" | "D" | "x" | "X" | "-" => Ok(Sym::Dc),
        other => Err(MultimodalError::BadCellSymbol(other.to_string())),
    }
}

fn label_syms(label: &str) -> Vec<Sym> {
    label.chars().map(|c| Sym::from_bool(c == '1')).collect()
}

pub fn parse_kmap(raw: &str) -> Result<TruthTableIR, MultimodalError> {
    let grid = parse_grid(raw);
    let (header, body) = grid
        .rows
        .split_first()
        .ok_or_else(|| MultimodalError::BadHeader("empty K-map".into()))?;
    let (corner, col_labels) = header
        .split_first()
        .ok_or_else(|| MultimodalError::BadHeader("empty header".into()))?;
    let (out_name, row_vars, col_vars) = parse_corner(corner)?;
    check_gray_labels(col_labels, col_vars.len())?;
    let row_labels: Vec<String> = body.iter().map(|r| r[0].clone()).collect();
    // a short grid of well-formed labels is a missing row, not a label error
    if body.len() < 1 << row_vars.len() && row_labels.iter().all(|l| l.len() == row_vars.len()) {
        return Err(MultimodalError::CellCountMismatch(format!(
            "expected {} rows, found {}",
            1 << row_vars.len(),
            body.len()
        )));
    }
    check_gray_labels(&row_labels, row_vars.len())?;
    let mut rows = Vec::with_capacity(row_labels.len() * col_labels.len());
    for r in body {
        if r.len() != col_labels.len() + 1 {
            return Err(MultimodalError::CellCountMismatch(format!(
                "row {} has {} cells, expected {}",
                r[0],
                r.len() - 1,
                col_labels.len()
            )));
        }
        for (cl, cell) in col_labels.iter().zip(&r[1..]) {
            let mut inputs = label_syms(&r[0]);
            inputs.extend(label_syms(cl));
            rows.push(TtRow {
                inputs,
                outputs: vec![cell_symbol(cell)?],
            });
        }
    }
    let ir = TruthTableIR {
        inputs: row_vars.iter().chain(&col_vars).map(|v| Signal::new(v, 1)).collect(),
        outputs: vec![Signal::new(out_name, 1)],
        rows,
    };
    ir.validate()?;
    Ok(ir)
}

/// Renders a single-output function of `rows.len() + cols.len()` one-bit
/// variables as a K-map with standard reflected Gray labels.
pub fn render_kmap(ir: &TruthTableIR, row_vars: usize) -> Option<String> {
    if ir.outputs.len() != 1 || ir.outputs[0].width != 1 || ir.inputs.iter().any(|s| s.width != 1) {
        return None;
    }
    let n = ir.inputs.len();
    if row_vars == 0 || row_vars >= n {
        return None;
    }
    let col_vars = n - row_vars;
    let gray = |k: usize| -> Vec<u64> { (0..1u64 << k).map(|i| i ^ (i >> 1)).collect() };
    let names = |s: &[Signal]| {
        let single = s.iter().all(|x| x.name.len() == 1);
        s.iter().map(|x| x.name.as_str()).collect::<Vec<_>>().join(if single { "" } else { "," })
    };
    let mut out = format!(
        "| {}: {}\\{} |",
        ir.outputs[0].name,
        names(&ir.inputs[..row_vars]),
        names(&ir.inputs[row_vars..])
    );
    for c in gray(col_vars) {
        out.push_str(&format!(" {:0w$b} |", c, w = col_vars));
    }
    out.push('\n');
    for r in gray(row_vars) {
        out.push_str(&format!("| {:0w$b} |", r, w = row_vars));
        for c in gray(col_vars) {
            let v = ir.eval((r << col_vars) | c)[0];
            let sym = match v {
                Some(true) => '1',
                Some(false) => '0',
                None => 'd',
            };
            out.push_str(&format!(" {sym} |"));
        }
        out.push('\n');
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multimodal::ir::pattern_matches;
    use proptest::prelude::*;

    const ONE_MINTERM: &str = "\
| ab\\cd | 00 | 01 | 11 | 10 |
|---|---|---|---|---|
| 00 | 0 | 0 | 0 | 0 |
| 01 | 0 | 0 | 0 | 0 |
| 11 | 0 | 0 | 0 | 1 |
| 10 | 0 | 0 | 0 | 0 |
";

    #[test]
    fn constant_two_variable_map() {
        let ir = parse_kmap("| a\\b | 0 | 1 |\n| 0 | 1 | 1 |\n| 1 | 1 | 1 |\n").unwrap();
        assert_eq!(ir.rows.len(), 4);
        assert!(ir.rows.iter().all(|r| r.outputs == vec![Sym::One]));
        assert_eq!(ir.inputs, vec![Signal::new("a", 1), Signal::new("b", 1)]);
    }

    #[test]
    fn single_minterm_at_ab11_cd10() {
        let ir = parse_kmap(ONE_MINTERM).unwrap();
        assert_eq!(ir.rows.len(), 16);
        let ones: Vec<&TtRow> = ir.rows.iter().filter(|r| r.outputs[0] == Sym::One).collect();
        assert_eq!(ones.len(), 1);
        // a=1, b=1, c=1, d=0 in declaration order
        assert_eq!(ones[0].inputs, vec![Sym::One, Sym::One, Sym::One, Sym::Zero]);
        for v in 0..16u64 {
            assert_eq!(ir.eval(v)[0], Some(v == 0b1110), "abcd={v:04b}");
        }
    }

    #[test]
    fn binary_ordered_labels_rejected() {
        let raw = "| ab\\cd | 00 | 01 | 10 | 11 |\n| 00 | 0 | 0 | 0 | 0 |\n| 01 | 0 | 0 | 0 | 0 |\n| 11 | 0 | 0 | 0 | 0 |\n| 10 | 0 | 0 | 0 | 0 |\n";
        assert!(matches!(parse_kmap(raw), Err(MultimodalError::BadGraySequence(_))));
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            parse_kmap("| ab | 00 | 01 | 11 | 10 |\n| 0 | 1 | 1 | 1 | 1 |"),
            Err(MultimodalError::BadHeader(_))
        ));
        assert!(matches!(
            parse_kmap("| a\\b | 0 | 1 |\n| 0 | 1 |\n| 1 | 1 | 1 |\n"),
            Err(MultimodalError::CellCountMismatch(_))
        ));
        assert!(matches!(
            parse_kmap("| a\\b | 0 | 1 |\n| 0 | 1 | 2 |\n| 1 | 1 | 1 |\n"),
            Err(MultimodalError::BadCellSymbol(_))
        ));
        assert!(matches!(
            parse_kmap("| a\\b | 0 | 1 |\n| 0 | 1 | 1 |\n"),
            Err(MultimodalError::CellCountMismatch(_))
        ));
    }

    #[test]
    fn named_output_and_listed_variables() {
        let ir = parse_kmap("| f: x1,x2\\x3 | 0 | 1 |\n| 00 | 1 | 0 |\n| 01 | x | 0 |\n| 11 | 0 | 0 |\n| 10 | 0 | 1 |\n").unwrap();
        assert_eq!(ir.outputs[0].name, "f");
        assert_eq!(ir.inputs.iter().map(|s| s.name.as_str()).collect::<Vec<_>>(), vec!["x1", "x2", "x3"]);
        assert_eq!(ir.eval(0b010)[0], None);
        assert_eq!(ir.eval(0b101)[0], Some(true));
    }

    fn is_cyclic_gray(vals: &[u64]) -> bool {
        let n = vals.len();
        (0..n).all(|i| (vals[i] ^ vals[(i + 1) % n]).count_ones() == 1)
    }

    proptest! {
        #[test]
        fn gray_check_agrees_with_definition(perm in Just((0u64..8).collect::<Vec<_>>()).prop_shuffle()) {
            let labels: Vec<String> = perm.iter().map(|v| format!("{v:03b}")).collect();
            let accepted = check_gray_labels(&labels, 3).is_ok();
            prop_assert_eq!(accepted, is_cyclic_gray(&perm));
        }

        #[test]
        fn kmap_and_rendered_kmap_agree(bits in proptest::collection::vec(0u8..3, 16)) {
            let inputs: Vec<Signal> = ["a", "b", "c", "d"].iter().map(|n| Signal::new(*n, 1)).collect();
            let rows: Vec<TtRow> = (0..16u64).map(|v| TtRow {
                inputs: crate::multimodal::ir::bits_of(v, 4),
                outputs: vec![[Sym::Zero, Sym::One, Sym::Dc][bits[v as usize] as usize]],
            }).collect();
            let ir = TruthTableIR { inputs, outputs: vec![Signal::new("out", 1)], rows };
            let text = render_kmap(&ir, 2).unwrap();
            let back = parse_kmap(&text).unwrap();
            for v in 0..16u64 {
                prop_assert_eq!(back.eval(v), ir.eval(v));
                prop_assert!(back.rows.iter().filter(|r| pattern_matches(&r.inputs, v)).count() == 1);
            }
        }
    }
}
