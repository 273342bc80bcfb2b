//! Pipe-delimited grid dialect shared by K-maps, truth tables and state tables.
//!
//! Cells are separated by `|`; leading and trailing pipes are optional. A
//! markdown separator row (`|---|:--:|`) is skipped. A doubled pipe `||`
//! yields an empty cell, which header parsers treat as a column divider.
//! Lines without a pipe are returned separately as annotation lines.

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    pub rows: Vec<Vec<String>>,
    pub annotations: Vec<String>,
}

pub fn is_grid_line(line: &str) -> bool {
    line.contains('|')
}

pub fn split_row(line: &str) -> Vec<String> {
    let t = line.trim();
    let t = t.strip_prefix('|').unwrap_or(t);
    let t = t.strip_suffix('|').unwrap_or(t);
    t.split('|').map(|c| c.trim().to_string()).collect()
}

pub fn is_separator_row(cells: &[String]) -> bool {
    let mut any = false;
    for c in cells {
        if c.is_empty() {
            continue;
        }
        any = true;
        let inner = c.trim_start_matches(':').trim_end_matches(':');
        let ruled = inner.chars().all(|ch| ch == '-' || ch == '=' || ch == '+');
        // a lone "-" is a don't-care cell, not a rule
        if inner.is_empty() || !ruled || (inner.len() < 3 && !c.contains(':')) {
            return false;
        }
    }
    any
}

pub fn parse_grid(raw: &str) -> Grid {
    let mut rows = Vec::new();
    let mut annotations = Vec::new();
    for line in raw.lines() {
        if line.trim().is_empty() {
            continue;
        }
        if is_grid_line(line) {
            let cells = split_row(line);
            if !is_separator_row(&cells) {
                rows.push(cells);
            }
        } else {
            annotations.push(line.trim().to_string());
        }
    }
    Grid { rows, annotations }
}

/// Removes the cells at `dividers` (sorted ascending) from `row` when they are empty.
pub fn drop_dividers(row: &[String], dividers: &[usize]) -> Option<Vec<String>> {
    let mut out = Vec::with_capacity(row.len());
    for (i, c) in row.iter().enumerate() {
        if dividers.contains(&i) {
            if !c.is_empty() && c != "=>" && c != "->" {
                return None;
            }
        } else {
            out.push(c.clone());
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_separators_and_annotations() {
        let g = parse_grid("reset: async\n| a | b || y |\n|---|---|---|---|\n| 0 | 1 || 1 |\n");
        assert_eq!(g.annotations, vec!["reset: async"]);
        assert_eq!(g.rows.len(), 2);
        assert_eq!(g.rows[0], vec!["a", "b", "", "y"]);
        assert_eq!(drop_dividers(&g.rows[1], &[2]).unwrap(), vec!["0", "1", "1"]);
    }

    #[test]
    fn pipes_at_the_edges_are_optional() {
        assert_eq!(split_row("a | b"), vec!["a", "b"]);
        assert_eq!(split_row("|a|b|"), vec!["a", "b"]);
        assert!(is_separator_row(&split_row("|:--|---:|")));
        assert!(!is_separator_row(&split_row("| 0 | - |")));
        assert!(!is_separator_row(&split_row("| - | -- |")));
    }
}
