//! Deterministic verifiers for the four puzzle kinds, plus the exact,
//! completion, and format reward components.
//!
//! Boards are cell grids so that every kind is comparable cell-by-cell for
//! the completion reward. Cell alphabets:
//!
//! * BRIDGES: island digits `1`-`8`, empty `.`, bridges `-` `=` (single /
//!   double horizontal) and `|` `H` (single / double vertical).
//! * PATTERN: filled `#`, empty `.`.
//! * UNDEAD: monsters `G` `V` `Z`, mirrors `/` `\`, unfilled `.`.
//! * GALAXIES: one alphanumeric galaxy index per cell (`0`-`9`, `a`-`z`,
//!   `A`-`Z` for indices 0-61); `.` marks an unassigned cell and is only
//!   valid on initial boards.
//!
//! A shape or alphabet problem is a structural error, reported separately
//! from a rule failure.

mod bridges;
mod galaxies;
mod pattern;
mod reward;
mod undead;

pub use reward::{
    base_reward, completion_reward, extract_answer, format_reward, parse_answer_board,
    RewardBreakdown, CHANGED_CELL_WEIGHT, COMPLETION_POWER, FORMAT_COEFFICIENT,
};

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum PuzzleKind {
    Bridges,
    Pattern,
    Undead,
    Galaxies,
}

impl std::fmt::Display for PuzzleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PuzzleKind::Bridges => "BRIDGES",
            PuzzleKind::Pattern => "PATTERN",
            PuzzleKind::Undead => "UNDEAD",
            PuzzleKind::Galaxies => "GALAXIES",
        })
    }
}

/// Rectangular grid of cell symbols.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoardGrid {
    width: usize,
    height: usize,
    cells: Vec<char>,
}

impl BoardGrid {
    pub fn from_rows<S: AsRef<str>>(rows: &[S]) -> Result<Self, VerifierError> {
        if rows.is_empty() {
            return Err(VerifierError::BadBoard("board has no rows".into()));
        }
        let parsed: Vec<Vec<char>> = rows.iter().map(|r| r.as_ref().chars().collect()).collect();
        let width = parsed[0].len();
        if width == 0 {
            return Err(VerifierError::BadBoard("board rows are empty".into()));
        }
        if parsed.iter().any(|r| r.len() != width) {
            return Err(VerifierError::BadBoard("board rows have unequal lengths".into()));
        }
        let height = parsed.len();
        Ok(Self { width, height, cells: parsed.into_iter().flatten().collect() })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, x: usize, y: usize) -> char {
        self.cells[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, symbol: char) {
        self.cells[y * self.width + x] = symbol;
    }

    pub fn cells(&self) -> &[char] {
        &self.cells
    }

    pub fn rows(&self) -> Vec<String> {
        self.cells.chunks(self.width).map(|row| row.iter().collect()).collect()
    }
}

/// An island clue: position and required incident bridge count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Island {
    pub x: usize,
    pub y: usize,
    pub count: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonsterTotals {
    #[serde(rename = "G")]
    pub ghosts: usize,
    #[serde(rename = "V")]
    pub vampires: usize,
    #[serde(rename = "Z")]
    pub zombies: usize,
}

/// Undead clues: monster totals plus one sight count per border entry.
/// `top`/`bottom` run left to right (rays travel down / up); `left`/`right`
/// run top to bottom (rays travel right / left).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndeadClues {
    pub totals: MonsterTotals,
    pub top: Vec<usize>,
    pub bottom: Vec<usize>,
    pub left: Vec<usize>,
    pub right: Vec<usize>,
}

/// A galaxy center in half-grid coordinates: cell (x, y) has its center at
/// (2x+1, 2y+1), so even coordinates land on cell edges and corners.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GalaxyDot {
    pub hx: usize,
    pub hy: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Clues {
    Bridges { islands: Vec<Island> },
    Pattern { rows: Vec<Vec<usize>>, cols: Vec<Vec<usize>> },
    Undead(UndeadClues),
    Galaxies { dots: Vec<GalaxyDot> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PuzzleInstance {
    pub kind: PuzzleKind,
    pub width: usize,
    pub height: usize,
    pub initial: BoardGrid,
    pub clues: Clues,
}

/// A puzzle together with its gold board, as stored in `puzzles.jsonl`.
#[derive(Debug, Clone, PartialEq)]
pub struct PuzzleFixture {
    pub id: String,
    pub instance: PuzzleInstance,
    pub gold: BoardGrid,
}

#[derive(Debug, Error)]
pub enum VerifierError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("bad board: {0}")]
    BadBoard(String),
    #[error("candidate is {got_w}x{got_h}, instance is {want_w}x{want_h}")]
    Shape { want_w: usize, want_h: usize, got_w: usize, got_h: usize },
    #[error("symbol {symbol:?} at ({x}, {y}) is not in the {kind} alphabet")]
    Alphabet { kind: PuzzleKind, x: usize, y: usize, symbol: char },
    #[error("inconsistent instance: {0}")]
    BadInstance(String),
}

/// Rule-check outcome: pass, or the first rule failure with a diagnostic.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail(String),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn failure(&self) -> Option<&str> {
        match self {
            Verdict::Pass => None,
            Verdict::Fail(msg) => Some(msg),
        }
    }
}

pub(crate) fn galaxy_index(symbol: char) -> Option<usize> {
    match symbol {
        '0'..='9' => Some(symbol as usize - '0' as usize),
        'a'..='z' => Some(symbol as usize - 'a' as usize + 10),
        'A'..='Z' => Some(symbol as usize - 'A' as usize + 36),
        _ => None,
    }
}

pub(crate) fn galaxy_symbol(index: usize) -> Option<char> {
    match index {
        0..=9 => Some((b'0' + index as u8) as char),
        10..=35 => Some((b'a' + (index - 10) as u8) as char),
        36..=61 => Some((b'A' + (index - 36) as u8) as char),
        _ => None,
    }
}

/// Symbols a solved candidate board may use for this instance.
pub fn candidate_alphabet(instance: &PuzzleInstance) -> Vec<char> {
    match &instance.clues {
        Clues::Bridges { .. } => {
            let mut v: Vec<char> = ('1'..='8').collect();
            v.extend(['.', '-', '=', '|', 'H']);
            v
        }
        Clues::Pattern { .. } => vec!['#', '.'],
        Clues::Undead(_) => vec!['G', 'V', 'Z', '/', '\\', '.'],
        Clues::Galaxies { dots } => {
            (0..dots.len()).map(|i| galaxy_symbol(i).expect("validated count")).collect()
        }
    }
}

fn check_shape_and_alphabet(
    instance: &PuzzleInstance,
    candidate: &BoardGrid,
) -> Result<(), VerifierError> {
    if candidate.width != instance.width || candidate.height != instance.height {
        return Err(VerifierError::Shape {
            want_w: instance.width,
            want_h: instance.height,
            got_w: candidate.width,
            got_h: candidate.height,
        });
    }
    let alphabet = candidate_alphabet(instance);
    for y in 0..candidate.height {
        for x in 0..candidate.width {
            let symbol = candidate.get(x, y);
            if !alphabet.contains(&symbol) {
                return Err(VerifierError::Alphabet { kind: instance.kind, x, y, symbol });
            }
        }
    }
    Ok(())
}

/// Check a candidate board against all rules of the instance's puzzle kind.
/// Shape and alphabet problems are structural errors; rule violations come
/// back as [`Verdict::Fail`] with the first failure's diagnostic.
pub fn verify(instance: &PuzzleInstance, candidate: &BoardGrid) -> Result<Verdict, VerifierError> {
    check_shape_and_alphabet(instance, candidate)?;
    Ok(match &instance.clues {
        Clues::Bridges { islands } => bridges::check(islands, candidate),
        Clues::Pattern { rows, cols } => pattern::check(rows, cols, candidate),
        Clues::Undead(clues) => undead::check(clues, &instance.initial, candidate),
        Clues::Galaxies { dots } => galaxies::check(dots, candidate),
    })
}

impl PuzzleInstance {
    /// Internal consistency: clue shapes match the dimensions, positions are
    /// in range, and the initial board agrees with the clues.
    pub fn validate(&self) -> Result<(), VerifierError> {
        let bad = |msg: String| Err(VerifierError::BadInstance(msg));
        if self.initial.width != self.width || self.initial.height != self.height {
            return bad("initial board dimensions differ from instance".into());
        }
        match &self.clues {
            Clues::Bridges { islands } => {
                if islands.is_empty() {
                    return bad("bridges instance has no islands".into());
                }
                let mut seen = std::collections::BTreeSet::new();
                for island in islands {
                    if island.x >= self.width || island.y >= self.height {
                        return bad(format!("island at ({}, {}) out of range", island.x, island.y));
                    }
                    if !(1..=8).contains(&island.count) {
                        return bad(format!("island count {} outside 1..=8", island.count));
                    }
                    if !seen.insert((island.x, island.y)) {
                        return bad(format!("duplicate island at ({}, {})", island.x, island.y));
                    }
                    let cell = self.initial.get(island.x, island.y);
                    if cell != (b'0' + island.count) as char {
                        return bad(format!(
                            "initial board cell ({}, {}) is {cell:?}, clue says {}",
                            island.x, island.y, island.count
                        ));
                    }
                }
                for y in 0..self.height {
                    for x in 0..self.width {
                        let c = self.initial.get(x, y);
                        if c != '.' && !seen.contains(&(x, y)) {
                            return bad(format!("initial board has stray symbol {c:?} at ({x}, {y})"));
                        }
                    }
                }
            }
            Clues::Pattern { rows, cols } => {
                if rows.len() != self.height || cols.len() != self.width {
                    return bad(format!(
                        "pattern clue shape {}x{} does not match {}x{}",
                        cols.len(),
                        rows.len(),
                        self.width,
                        self.height
                    ));
                }
                for (i, runs) in rows.iter().enumerate() {
                    let need = runs.iter().sum::<usize>() + runs.len().saturating_sub(1);
                    if runs.contains(&0) || need > self.width {
                        return bad(format!("row clue {i} ({runs:?}) does not fit"));
                    }
                }
                for (i, runs) in cols.iter().enumerate() {
                    let need = runs.iter().sum::<usize>() + runs.len().saturating_sub(1);
                    if runs.contains(&0) || need > self.height {
                        return bad(format!("column clue {i} ({runs:?}) does not fit"));
                    }
                }
            }
            Clues::Undead(clues) => {
                if clues.top.len() != self.width || clues.bottom.len() != self.width {
                    return bad("top/bottom clue lists must have one entry per column".into());
                }
                if clues.left.len() != self.height || clues.right.len() != self.height {
                    return bad("left/right clue lists must have one entry per row".into());
                }
                let mut mirror_cells = 0;
                for y in 0..self.height {
                    for x in 0..self.width {
                        match self.initial.get(x, y) {
                            '/' | '\\' => mirror_cells += 1,
                            '.' => {}
                            c => return bad(format!("initial board symbol {c:?} at ({x}, {y})")),
                        }
                    }
                }
                let open = self.width * self.height - mirror_cells;
                let total = clues.totals.ghosts + clues.totals.vampires + clues.totals.zombies;
                if total != open {
                    return bad(format!("monster totals sum to {total}, board has {open} open cells"));
                }
            }
            Clues::Galaxies { dots } => {
                if dots.is_empty() {
                    return bad("galaxies instance has no dots".into());
                }
                if galaxy_symbol(dots.len() - 1).is_none() {
                    return bad(format!("too many galaxies ({}) for the cell alphabet", dots.len()));
                }
                for (i, dot) in dots.iter().enumerate() {
                    if dot.hx == 0 || dot.hx >= 2 * self.width || dot.hy == 0 || dot.hy >= 2 * self.height {
                        return bad(format!("dot {i} at ({}, {}) outside the half-grid", dot.hx, dot.hy));
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Deserialize)]
struct PuzzleRow {
    #[serde(default)]
    id: Option<String>,
    kind: PuzzleKind,
    width: usize,
    height: usize,
    initial: Vec<String>,
    gold: Vec<String>,
    clues: serde_json::Value,
}

#[derive(Debug, Serialize)]
struct PuzzleRowOut<'a> {
    id: &'a str,
    kind: PuzzleKind,
    width: usize,
    height: usize,
    initial: Vec<String>,
    gold: Vec<String>,
    clues: &'a Clues,
}

/// Load `puzzles.jsonl`. Every instance is validated and its gold board must
/// fit the instance shape; fixtures without an explicit id get their 0-based
/// line index.
pub fn load_puzzles(path: &Path) -> Result<Vec<PuzzleFixture>, VerifierError> {
    let file = File::open(path).map_err(|source| VerifierError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut fixtures = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| VerifierError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: PuzzleRow = serde_json::from_str(&line)
            .map_err(|e| VerifierError::Parse { line: line_no, message: e.to_string() })?;
        let clues = parse_clues(row.kind, row.clues)
            .map_err(|message| VerifierError::Parse { line: line_no, message })?;
        let initial = BoardGrid::from_rows(&row.initial)?;
        let gold = BoardGrid::from_rows(&row.gold)?;
        let instance =
            PuzzleInstance { kind: row.kind, width: row.width, height: row.height, initial, clues };
        instance.validate()?;
        if gold.width != instance.width || gold.height != instance.height {
            return Err(VerifierError::Parse {
                line: line_no,
                message: "gold board dimensions differ from instance".into(),
            });
        }
        let id = row.id.unwrap_or_else(|| fixtures.len().to_string());
        fixtures.push(PuzzleFixture { id, instance, gold });
    }
    Ok(fixtures)
}

/// Serialize fixtures back to the `puzzles.jsonl` row format.
pub fn puzzle_to_json(fixture: &PuzzleFixture) -> String {
    let row = PuzzleRowOut {
        id: &fixture.id,
        kind: fixture.instance.kind,
        width: fixture.instance.width,
        height: fixture.instance.height,
        initial: fixture.instance.initial.rows(),
        gold: fixture.gold.rows(),
        clues: &fixture.instance.clues,
    };
    serde_json::to_string(&row).expect("fixture serializes")
}

/// Parse one fixture from its JSON row (the `puzzles.jsonl` line format).
pub fn puzzle_from_json(json: &str) -> Result<PuzzleFixture, VerifierError> {
    let row: PuzzleRow = serde_json::from_str(json)
        .map_err(|e| VerifierError::Parse { line: 0, message: e.to_string() })?;
    let clues = parse_clues(row.kind, row.clues)
        .map_err(|message| VerifierError::Parse { line: 0, message })?;
    let initial = BoardGrid::from_rows(&row.initial)?;
    let gold = BoardGrid::from_rows(&row.gold)?;
    let instance =
        PuzzleInstance { kind: row.kind, width: row.width, height: row.height, initial, clues };
    instance.validate()?;
    Ok(PuzzleFixture { id: row.id.unwrap_or_default(), instance, gold })
}

fn parse_clues(kind: PuzzleKind, value: serde_json::Value) -> Result<Clues, String> {
    let fail = |e: serde_json::Error| e.to_string();
    Ok(match kind {
        PuzzleKind::Bridges => {
            #[derive(Deserialize)]
            struct C {
                islands: Vec<Island>,
            }
            let c: C = serde_json::from_value(value).map_err(fail)?;
            Clues::Bridges { islands: c.islands }
        }
        PuzzleKind::Pattern => {
            #[derive(Deserialize)]
            struct C {
                rows: Vec<Vec<usize>>,
                cols: Vec<Vec<usize>>,
            }
            let c: C = serde_json::from_value(value).map_err(fail)?;
            // Tatham-style empty lines are sometimes written as [0].
            let norm = |v: Vec<Vec<usize>>| {
                v.into_iter()
                    .map(|runs| if runs == [0] { Vec::new() } else { runs })
                    .collect()
            };
            Clues::Pattern { rows: norm(c.rows), cols: norm(c.cols) }
        }
        PuzzleKind::Undead => Clues::Undead(serde_json::from_value(value).map_err(fail)?),
        PuzzleKind::Galaxies => {
            #[derive(Deserialize)]
            struct C {
                dots: Vec<GalaxyDot>,
            }
            let c: C = serde_json::from_value(value).map_err(fail)?;
            Clues::Galaxies { dots: c.dots }
        }
    })
}

#[cfg(test)]
pub(crate) mod test_support {
    use super::*;

    pub(crate) fn bridges_instance(
        width: usize,
        height: usize,
        initial: &[&str],
        islands: &[(usize, usize, u8)],
    ) -> PuzzleInstance {
        let instance = PuzzleInstance {
            kind: PuzzleKind::Bridges,
            width,
            height,
            initial: BoardGrid::from_rows(initial).unwrap(),
            clues: Clues::Bridges {
                islands: islands.iter().map(|&(x, y, count)| Island { x, y, count }).collect(),
            },
        };
        instance.validate().unwrap();
        instance
    }

    pub(crate) fn pattern_instance(
        width: usize,
        height: usize,
        rows: &[&[usize]],
        cols: &[&[usize]],
    ) -> PuzzleInstance {
        let blank = vec![".".repeat(width); height];
        let instance = PuzzleInstance {
            kind: PuzzleKind::Pattern,
            width,
            height,
            initial: BoardGrid::from_rows(&blank).unwrap(),
            clues: Clues::Pattern {
                rows: rows.iter().map(|r| r.to_vec()).collect(),
                cols: cols.iter().map(|c| c.to_vec()).collect(),
            },
        };
        instance.validate().unwrap();
        instance
    }

    pub(crate) fn undead_instance(
        initial: &[&str],
        totals: (usize, usize, usize),
        top: &[usize],
        bottom: &[usize],
        left: &[usize],
        right: &[usize],
    ) -> PuzzleInstance {
        let board = BoardGrid::from_rows(initial).unwrap();
        let instance = PuzzleInstance {
            kind: PuzzleKind::Undead,
            width: board.width(),
            height: board.height(),
            initial: board,
            clues: Clues::Undead(UndeadClues {
                totals: MonsterTotals { ghosts: totals.0, vampires: totals.1, zombies: totals.2 },
                top: top.to_vec(),
                bottom: bottom.to_vec(),
                left: left.to_vec(),
                right: right.to_vec(),
            }),
        };
        instance.validate().unwrap();
        instance
    }

    pub(crate) fn galaxies_instance(
        width: usize,
        height: usize,
        dots: &[(usize, usize)],
    ) -> PuzzleInstance {
        let blank = vec![".".repeat(width); height];
        let instance = PuzzleInstance {
            kind: PuzzleKind::Galaxies,
            width,
            height,
            initial: BoardGrid::from_rows(&blank).unwrap(),
            clues: Clues::Galaxies {
                dots: dots.iter().map(|&(hx, hy)| GalaxyDot { hx, hy }).collect(),
            },
        };
        instance.validate().unwrap();
        instance
    }
}
