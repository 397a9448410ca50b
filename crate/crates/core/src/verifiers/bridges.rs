//! Bridges (hashiwokakero) rule checking.
//!
//! Bridges run horizontally (`-` single, `=` double) or vertically (`|`
//! single, `H` double). Every maximal bridge run must be uniform and end on
//! islands at both ends, each island's incident multiplicity must equal its
//! digit, and the islands must form one connected component. Crossings are
//! unrepresentable in the cell encoding, so they need no explicit rule.

use std::collections::BTreeMap;

use super::{BoardGrid, Island, Verdict};

fn horizontal_multiplicity(symbol: char) -> Option<u8> {
    match symbol {
        '-' => Some(1),
        '=' => Some(2),
        _ => None,
    }
}

fn vertical_multiplicity(symbol: char) -> Option<u8> {
    match symbol {
        '|' => Some(1),
        'H' => Some(2),
        _ => None,
    }
}

pub(super) fn check(islands: &[Island], candidate: &BoardGrid) -> Verdict {
    let expected: BTreeMap<(usize, usize), u8> =
        islands.iter().map(|i| ((i.x, i.y), i.count)).collect();

    // Island cells must match the clues exactly.
    for y in 0..candidate.height() {
        for x in 0..candidate.width() {
            let symbol = candidate.get(x, y);
            if symbol.is_ascii_digit() {
                let digit = symbol as u8 - b'0';
                match expected.get(&(x, y)) {
                    None => return Verdict::Fail(format!("unexpected island at ({x}, {y})")),
                    Some(&count) if count != digit => {
                        return Verdict::Fail(format!(
                            "island at ({x}, {y}) shows {digit}, clue says {count}"
                        ));
                    }
                    _ => {}
                }
            } else if expected.contains_key(&(x, y)) {
                return Verdict::Fail(format!("island at ({x}, {y}) is missing"));
            }
        }
    }

    // Bridge runs: uniform symbol, islands at both ends. Each run is one
    // edge of the connectivity graph.
    let mut edges: Vec<((usize, usize), (usize, usize))> = Vec::new();
    for y in 0..candidate.height() {
        let mut x = 0;
        while x < candidate.width() {
            if let Some(_m) = horizontal_multiplicity(candidate.get(x, y)) {
                let start = x;
                let symbol = candidate.get(x, y);
                while x < candidate.width() && horizontal_multiplicity(candidate.get(x, y)).is_some()
                {
                    if candidate.get(x, y) != symbol {
                        return Verdict::Fail(format!(
                            "horizontal bridge at ({x}, {y}) mixes single and double segments"
                        ));
                    }
                    x += 1;
                }
                if start == 0 || !candidate.get(start - 1, y).is_ascii_digit() {
                    return Verdict::Fail(format!(
                        "horizontal bridge at ({start}, {y}) has no island on its left"
                    ));
                }
                if x == candidate.width() || !candidate.get(x, y).is_ascii_digit() {
                    return Verdict::Fail(format!(
                        "horizontal bridge ending at ({}, {y}) has no island on its right",
                        x - 1
                    ));
                }
                edges.push(((start - 1, y), (x, y)));
            } else {
                x += 1;
            }
        }
    }
    for x in 0..candidate.width() {
        let mut y = 0;
        while y < candidate.height() {
            if vertical_multiplicity(candidate.get(x, y)).is_some() {
                let start = y;
                let symbol = candidate.get(x, y);
                while y < candidate.height() && vertical_multiplicity(candidate.get(x, y)).is_some()
                {
                    if candidate.get(x, y) != symbol {
                        return Verdict::Fail(format!(
                            "vertical bridge at ({x}, {y}) mixes single and double segments"
                        ));
                    }
                    y += 1;
                }
                if start == 0 || !candidate.get(x, start - 1).is_ascii_digit() {
                    return Verdict::Fail(format!(
                        "vertical bridge at ({x}, {start}) has no island above"
                    ));
                }
                if y == candidate.height() || !candidate.get(x, y).is_ascii_digit() {
                    return Verdict::Fail(format!(
                        "vertical bridge ending at ({x}, {}) has no island below",
                        y - 1
                    ));
                }
                edges.push(((x, start - 1), (x, y)));
            } else {
                y += 1;
            }
        }
    }

    // Island degrees: incident multiplicity, read off the four neighbors.
    for island in islands {
        let (x, y) = (island.x, island.y);
        let mut degree = 0u8;
        if x + 1 < candidate.width() {
            degree += horizontal_multiplicity(candidate.get(x + 1, y)).unwrap_or(0);
        }
        if x > 0 {
            degree += horizontal_multiplicity(candidate.get(x - 1, y)).unwrap_or(0);
        }
        if y + 1 < candidate.height() {
            degree += vertical_multiplicity(candidate.get(x, y + 1)).unwrap_or(0);
        }
        if y > 0 {
            degree += vertical_multiplicity(candidate.get(x, y - 1)).unwrap_or(0);
        }
        if degree != island.count {
            return Verdict::Fail(format!(
                "island at ({x}, {y}) has degree {degree}, clue says {}",
                island.count
            ));
        }
    }

    // Connectivity over islands via bridge edges.
    if islands.len() > 1 {
        let index: BTreeMap<(usize, usize), usize> =
            islands.iter().enumerate().map(|(i, isl)| ((isl.x, isl.y), i)).collect();
        let mut adjacency = vec![Vec::new(); islands.len()];
        for (a, b) in &edges {
            let (ia, ib) = (index[a], index[b]);
            adjacency[ia].push(ib);
            adjacency[ib].push(ia);
        }
        let mut seen = vec![false; islands.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(i) = stack.pop() {
            for &j in &adjacency[i] {
                if !seen[j] {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            let isl = &islands[i];
            return Verdict::Fail(format!(
                "island at ({}, {}) is disconnected from the rest",
                isl.x, isl.y
            ));
        }
    }

    Verdict::Pass
}
