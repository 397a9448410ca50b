//! Exact, completion, and format reward components.

use serde::{Deserialize, Serialize};

use super::{verify, BoardGrid, PuzzleInstance};

/// Exponent applied to the weighted matched-cell fraction.
pub const COMPLETION_POWER: i32 = 3;
/// Weight of cells that differ from the initial puzzle board.
pub const CHANGED_CELL_WEIGHT: f64 = 2.0;
/// Coefficient of the format reward inside the total.
pub const FORMAT_COEFFICIENT: f64 = 0.1;

/// Per-rollout reward components. `total` is always
/// `exact + completion + 0.1 * format + novelty`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub exact: f64,
    pub completion: f64,
    pub format: f64,
    pub novelty: f64,
    pub total: f64,
}

impl RewardBreakdown {
    pub fn new(exact: f64, completion: f64, format: f64, novelty: f64) -> Self {
        Self {
            exact,
            completion,
            format,
            novelty,
            total: exact + completion + FORMAT_COEFFICIENT * format + novelty,
        }
    }
}

/// Dense board-completion reward: 0 on any shape or alphabet failure, else
/// the weighted fraction of cells matching the gold board, raised to the
/// third power. Cells the gold board changed from the initial position weigh
/// 2, unchanged cells weigh 1; the weights appear in both numerator and
/// denominator so the fraction stays in [0, 1].
pub fn completion_reward(
    instance: &PuzzleInstance,
    gold: &BoardGrid,
    candidate: &BoardGrid,
) -> f64 {
    if super::check_shape_and_alphabet(instance, candidate).is_err() {
        return 0.0;
    }
    let mut matched = 0.0;
    let mut weight_sum = 0.0;
    for y in 0..gold.height() {
        for x in 0..gold.width() {
            let weight = if gold.get(x, y) != instance.initial.get(x, y) {
                CHANGED_CELL_WEIGHT
            } else {
                1.0
            };
            weight_sum += weight;
            if candidate.get(x, y) == gold.get(x, y) {
                matched += weight;
            }
        }
    }
    (matched / weight_sum).powi(COMPLETION_POWER)
}

fn count_occurrences(haystack: &str, needle: &str) -> usize {
    haystack.matches(needle).count()
}

/// XML-structure reward in [0, 1]: 0.25 each for (a) exactly one closed
/// reasoning tag pair, (b) exactly one closed answer tag pair, (c) both
/// opening tags present with reasoning's first, and (d) no duplicated
/// opening tag.
pub fn format_reward(response: &str) -> f64 {
    const R_OPEN: &str = "<reasoning>";
    const R_CLOSE: &str = "</reasoning>";
    const A_OPEN: &str = "<answer>";
    const A_CLOSE: &str = "</answer>";

    let r_open = count_occurrences(response, R_OPEN);
    let r_close = count_occurrences(response, R_CLOSE);
    let a_open = count_occurrences(response, A_OPEN);
    let a_close = count_occurrences(response, A_CLOSE);

    let closed_pair = |opens: usize, closes: usize, open: &str, close: &str| {
        opens == 1 && closes == 1 && response.find(open).unwrap() < response.find(close).unwrap()
    };

    let mut reward = 0.0;
    if closed_pair(r_open, r_close, R_OPEN, R_CLOSE) {
        reward += 0.25;
    }
    if closed_pair(a_open, a_close, A_OPEN, A_CLOSE) {
        reward += 0.25;
    }
    if r_open >= 1 && a_open >= 1 && response.find(R_OPEN).unwrap() < response.find(A_OPEN).unwrap()
    {
        reward += 0.25;
    }
    if r_open <= 1 && a_open <= 1 {
        reward += 0.25;
    }
    reward
}

/// Content of the first closed `<answer>` tag pair.
pub fn extract_answer(response: &str) -> Option<&str> {
    const OPEN: &str = "<answer>";
    const CLOSE: &str = "</answer>";
    let open = response.find(OPEN)?;
    let start = open + OPEN.len();
    let rel = response[start..].find(CLOSE)?;
    Some(&response[start..start + rel])
}

/// Parse an answer-tag payload as a board: one row per non-blank line,
/// surrounding whitespace trimmed per line.
pub fn parse_answer_board(answer: &str) -> Option<BoardGrid> {
    let rows: Vec<&str> = answer.lines().map(str::trim).filter(|l| !l.is_empty()).collect();
    if rows.is_empty() {
        return None;
    }
    BoardGrid::from_rows(&rows).ok()
}

/// Verifier reward for one response: exact is 1 iff the extracted answer
/// board passes all puzzle rules, completion scores the same board against
/// the gold solution, and format scores the response text. An unparseable
/// answer zeroes exact and completion but format is still scored. The
/// novelty component starts at 0; group shaping fills it later.
pub fn base_reward(instance: &PuzzleInstance, gold: &BoardGrid, response: &str) -> RewardBreakdown {
    let format = format_reward(response);
    let (exact, completion) = match extract_answer(response).and_then(parse_answer_board) {
        Some(board) => {
            let exact = match verify(instance, &board) {
                Ok(verdict) if verdict.is_pass() => 1.0,
                _ => 0.0,
            };
            (exact, completion_reward(instance, gold, &board))
        }
        None => (0.0, 0.0),
    };
    RewardBreakdown::new(exact, completion, format, 0.0)
}
