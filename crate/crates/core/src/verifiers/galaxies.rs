//! Galaxies rule checking: every cell carries exactly one galaxy index, and
//! each galaxy is edge-connected, contains the cells under its dot, and is
//! invariant under 180-degree rotation about the dot.
//!
//! Dots live on the half-grid: cell (x, y) has center (2x+1, 2y+1), so a dot
//! with an even coordinate sits on an edge or corner and pins two or four
//! cells.

use super::{galaxy_index, BoardGrid, GalaxyDot, Verdict};

/// Cells whose closed unit square contains the dot (1, 2, or 4 cells).
fn dot_cells(dot: &GalaxyDot, width: usize, height: usize) -> Vec<(usize, usize)> {
    let mut cells = Vec::new();
    for y in 0..height {
        for x in 0..width {
            let (cx, cy) = (2 * x + 1, 2 * y + 1);
            if cx.abs_diff(dot.hx) <= 1 && cy.abs_diff(dot.hy) <= 1 {
                cells.push((x, y));
            }
        }
    }
    cells
}

/// The cell that (x, y) maps to under 180-degree rotation about the dot, if
/// it stays on the board.
fn rotated(dot: &GalaxyDot, x: usize, y: usize, width: usize, height: usize) -> Option<(usize, usize)> {
    let px = dot.hx as isize - 1 - x as isize;
    let py = dot.hy as isize - 1 - y as isize;
    if px >= 0 && (px as usize) < width && py >= 0 && (py as usize) < height {
        Some((px as usize, py as usize))
    } else {
        None
    }
}

pub(super) fn check(dots: &[GalaxyDot], candidate: &BoardGrid) -> Verdict {
    let (w, h) = (candidate.width(), candidate.height());
    let label = |x: usize, y: usize| -> usize {
        galaxy_index(candidate.get(x, y)).expect("alphabet checked before rule checks")
    };

    for (g, dot) in dots.iter().enumerate() {
        // The dot's cells belong to this galaxy.
        for (x, y) in dot_cells(dot, w, h) {
            if label(x, y) != g {
                return Verdict::Fail(format!(
                    "galaxy {g}: cell ({x}, {y}) under its dot is labeled {}",
                    label(x, y)
                ));
            }
        }
        let members: Vec<(usize, usize)> = (0..h)
            .flat_map(|y| (0..w).map(move |x| (x, y)))
            .filter(|&(x, y)| label(x, y) == g)
            .collect();
        if members.is_empty() {
            return Verdict::Fail(format!("galaxy {g} has no cells"));
        }
        // 180-degree symmetry about the dot.
        for &(x, y) in &members {
            match rotated(dot, x, y, w, h) {
                Some((px, py)) if label(px, py) == g => {}
                Some((px, py)) => {
                    return Verdict::Fail(format!(
                        "galaxy {g}: rotation image ({px}, {py}) of ({x}, {y}) is labeled {}",
                        label(px, py)
                    ));
                }
                None => {
                    return Verdict::Fail(format!(
                        "galaxy {g}: rotation image of ({x}, {y}) falls off the board"
                    ));
                }
            }
        }
        // Edge connectivity.
        let mut seen = std::collections::BTreeSet::new();
        let mut stack = vec![members[0]];
        seen.insert(members[0]);
        while let Some((x, y)) = stack.pop() {
            let mut push = |nx: usize, ny: usize| {
                if label(nx, ny) == g && seen.insert((nx, ny)) {
                    stack.push((nx, ny));
                }
            };
            if x > 0 {
                push(x - 1, y);
            }
            if x + 1 < w {
                push(x + 1, y);
            }
            if y > 0 {
                push(x, y - 1);
            }
            if y + 1 < h {
                push(x, y + 1);
            }
        }
        if seen.len() != members.len() {
            return Verdict::Fail(format!("galaxy {g} is not edge-connected"));
        }
    }
    Verdict::Pass
}
