//! Undead rule checking: mirror layout, monster totals, and sight counts.
//!
//! Each border entry shoots a ray that reflects 90 degrees at mirrors and
//! exits at the far border. Zombies are always seen; vampires only on the
//! segment before the ray's first mirror; ghosts only after at least one
//! mirror. A ray's pre-mirror state resets at every border entry.

use super::{BoardGrid, UndeadClues, Verdict};

#[derive(Clone, Copy, PartialEq)]
enum Dir {
    Up,
    Down,
    Left,
    Right,
}

impl Dir {
    fn step(self, x: isize, y: isize) -> (isize, isize) {
        match self {
            Dir::Up => (x, y - 1),
            Dir::Down => (x, y + 1),
            Dir::Left => (x - 1, y),
            Dir::Right => (x + 1, y),
        }
    }

    fn reflect_slash(self) -> Dir {
        // '/': bottom-left to top-right.
        match self {
            Dir::Right => Dir::Up,
            Dir::Up => Dir::Right,
            Dir::Left => Dir::Down,
            Dir::Down => Dir::Left,
        }
    }

    fn reflect_backslash(self) -> Dir {
        // '\': top-left to bottom-right.
        match self {
            Dir::Right => Dir::Down,
            Dir::Down => Dir::Right,
            Dir::Left => Dir::Up,
            Dir::Up => Dir::Left,
        }
    }
}

/// Monsters seen along the ray entering at (x, y) heading `dir`.
fn trace(board: &BoardGrid, mut x: isize, mut y: isize, mut dir: Dir) -> usize {
    let (w, h) = (board.width() as isize, board.height() as isize);
    let mut seen = 0usize;
    let mut reflected = false;
    while x >= 0 && x < w && y >= 0 && y < h {
        match board.get(x as usize, y as usize) {
            '/' => {
                dir = dir.reflect_slash();
                reflected = true;
            }
            '\\' => {
                dir = dir.reflect_backslash();
                reflected = true;
            }
            'Z' => seen += 1,
            'V' if !reflected => seen += 1,
            'G' if reflected => seen += 1,
            _ => {}
        }
        (x, y) = dir.step(x, y);
    }
    seen
}

pub(super) fn check(clues: &UndeadClues, initial: &BoardGrid, candidate: &BoardGrid) -> Verdict {
    // Mirrors are fixed by the instance; monsters fill every other cell.
    let (mut ghosts, mut vampires, mut zombies) = (0usize, 0usize, 0usize);
    for y in 0..candidate.height() {
        for x in 0..candidate.width() {
            let want_mirror = matches!(initial.get(x, y), '/' | '\\');
            let symbol = candidate.get(x, y);
            match symbol {
                '/' | '\\' => {
                    if !want_mirror || symbol != initial.get(x, y) {
                        return Verdict::Fail(format!("mirror layout mismatch at ({x}, {y})"));
                    }
                }
                _ if want_mirror => {
                    return Verdict::Fail(format!("mirror at ({x}, {y}) was overwritten"));
                }
                'G' => ghosts += 1,
                'V' => vampires += 1,
                'Z' => zombies += 1,
                _ => return Verdict::Fail(format!("cell ({x}, {y}) is unfilled")),
            }
        }
    }
    if (ghosts, vampires, zombies)
        != (clues.totals.ghosts, clues.totals.vampires, clues.totals.zombies)
    {
        return Verdict::Fail(format!(
            "monster totals G={ghosts} V={vampires} Z={zombies} do not match \
             G={} V={} Z={}",
            clues.totals.ghosts, clues.totals.vampires, clues.totals.zombies
        ));
    }

    let w = candidate.width() as isize;
    let h = candidate.height() as isize;
    for (i, &clue) in clues.top.iter().enumerate() {
        let seen = trace(candidate, i as isize, 0, Dir::Down);
        if seen != clue {
            return Verdict::Fail(format!("top entry {i} sees {seen}, clue says {clue}"));
        }
    }
    for (i, &clue) in clues.bottom.iter().enumerate() {
        let seen = trace(candidate, i as isize, h - 1, Dir::Up);
        if seen != clue {
            return Verdict::Fail(format!("bottom entry {i} sees {seen}, clue says {clue}"));
        }
    }
    for (i, &clue) in clues.left.iter().enumerate() {
        let seen = trace(candidate, 0, i as isize, Dir::Right);
        if seen != clue {
            return Verdict::Fail(format!("left entry {i} sees {seen}, clue says {clue}"));
        }
    }
    for (i, &clue) in clues.right.iter().enumerate() {
        let seen = trace(candidate, w - 1, i as isize, Dir::Left);
        if seen != clue {
            return Verdict::Fail(format!("right entry {i} sees {seen}, clue says {clue}"));
        }
    }
    Verdict::Pass
}
