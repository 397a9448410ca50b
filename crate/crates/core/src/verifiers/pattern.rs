//! Pattern (nonogram) rule checking: filled-cell run lengths of every row
//! and column must equal the clue lists, in order.

use super::{BoardGrid, Verdict};

fn run_lengths(cells: impl Iterator<Item = char>) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut current = 0usize;
    for c in cells {
        if c == '#' {
            current += 1;
        } else if current > 0 {
            runs.push(current);
            current = 0;
        }
    }
    if current > 0 {
        runs.push(current);
    }
    runs
}

pub(super) fn check(rows: &[Vec<usize>], cols: &[Vec<usize>], candidate: &BoardGrid) -> Verdict {
    for (y, clue) in rows.iter().enumerate() {
        let got = run_lengths((0..candidate.width()).map(|x| candidate.get(x, y)));
        if got != *clue {
            return Verdict::Fail(format!("row {y} runs {got:?} do not match clue {clue:?}"));
        }
    }
    for (x, clue) in cols.iter().enumerate() {
        let got = run_lengths((0..candidate.height()).map(|y| candidate.get(x, y)));
        if got != *clue {
            return Verdict::Fail(format!("column {x} runs {got:?} do not match clue {clue:?}"));
        }
    }
    Verdict::Pass
}

#[cfg(test)]
mod tests {
    use crate::verifiers::test_support::pattern_instance;
    use crate::verifiers::{verify, BoardGrid};

    #[test]
    fn both_diagonals_satisfy_all_ones_but_full_fill_does_not() {
        let inst = pattern_instance(2, 2, &[&[1], &[1]], &[&[1], &[1]]);
        let diagonal = BoardGrid::from_rows(&["#.", ".#"]).unwrap();
        let anti = BoardGrid::from_rows(&[".#", "#."]).unwrap();
        let full = BoardGrid::from_rows(&["##", "##"]).unwrap();
        assert!(verify(&inst, &diagonal).unwrap().is_pass());
        assert!(verify(&inst, &anti).unwrap().is_pass());
        assert!(!verify(&inst, &full).unwrap().is_pass());
    }

    #[test]
    fn multi_run_rows() {
        let inst =
            pattern_instance(5, 2, &[&[1, 2], &[5]], &[&[2], &[1], &[2], &[2], &[1]]);
        let good = BoardGrid::from_rows(&["#.##.", "#####"]).unwrap();
        assert!(verify(&inst, &good).unwrap().is_pass());
        // Moving the 1-run breaks both its row and two columns.
        let bad = BoardGrid::from_rows(&[".###.", "#####"]).unwrap();
        assert!(!verify(&inst, &bad).unwrap().is_pass());
    }

    #[test]
    fn empty_clue_means_empty_line() {
        let inst = pattern_instance(2, 2, &[&[2], &[]], &[&[1], &[1]]);
        let good = BoardGrid::from_rows(&["##", ".."]).unwrap();
        assert!(verify(&inst, &good).unwrap().is_pass());
        let bad = BoardGrid::from_rows(&["##", "#."]).unwrap();
        assert!(!verify(&inst, &bad).unwrap().is_pass());
    }
}
