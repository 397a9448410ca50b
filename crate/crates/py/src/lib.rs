//! Python bindings: the main trace-analysis operations and a `Puzzle` class
//! wrapping the verifiers, driven directly in-process.
//!
//! Build the cdylib and import it as `tracekit_py`; `python/smoke_test.py`
//! at the repository root shows the round trip.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use tracekit_core::metrics;
use tracekit_core::motifs;
use tracekit_core::novelty;
use tracekit_core::primitives;
use tracekit_core::segmenter;
use tracekit_core::verifiers;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_labels(labels: Vec<String>) -> PyResult<Vec<primitives::Primitive>> {
    labels.iter().map(|l| l.parse().map_err(value_err)).collect()
}

fn exploit_set(name: &str) -> PyResult<metrics::ExploitSet> {
    match name {
        "with-setup" | "with_setup" => Ok(metrics::ExploitSet::with_setup()),
        "no-setup" | "no_setup" => Ok(metrics::ExploitSet::no_setup()),
        other => Err(value_err(format!("unknown exploit set {other:?}"))),
    }
}

/// floor(len(text) / 4) over characters.
#[pyfunction]
fn estimate_tokens(text: &str) -> usize {
    segmenter::estimate_tokens(text)
}

/// (reasoning block, char offset of the block in the response).
#[pyfunction]
fn extract_reasoning_block(response: &str) -> (String, usize) {
    let (block, offset) = segmenter::extract_reasoning_block(response);
    (block.to_string(), offset)
}

/// Segment a reasoning block; returns (start, end, est_tokens) char-offset
/// triples that exactly cover the block.
#[pyfunction]
#[pyo3(signature = (block, min_tokens=80, max_tokens=250, tail_merge_tokens=40))]
fn segment(
    block: &str,
    min_tokens: usize,
    max_tokens: usize,
    tail_merge_tokens: usize,
) -> PyResult<Vec<(usize, usize, usize)>> {
    let cfg = segmenter::SegmenterConfig {
        min_tokens,
        max_tokens,
        tail_merge_tokens,
        ..Default::default()
    };
    let spans = segmenter::segment(block, &cfg).map_err(value_err)?;
    Ok(spans.into_iter().map(|s| (s.start, s.end, s.est_tokens)).collect())
}

/// Rule-based baseline span label.
#[pyfunction]
#[pyo3(signature = (span_text, preceding_text=""))]
fn classify_heuristic(span_text: &str, preceding_text: &str) -> String {
    primitives::classify_heuristic(span_text, preceding_text).name().to_string()
}

/// Segment a full response and heuristically label each span.
#[pyfunction]
fn classify_trace(response: &str) -> PyResult<Vec<String>> {
    let (block, _) = segmenter::extract_reasoning_block(response);
    let spans = segmenter::segment(block, &segmenter::SegmenterConfig::default())
        .map_err(value_err)?;
    let texts = segmenter::span_texts(block, &spans);
    Ok(spans
        .iter()
        .zip(texts)
        .map(|(_, text)| primitives::classify_heuristic(text, "").name().to_string())
        .collect())
}

/// Substitute "__BREAK__" for OTHER.
#[pyfunction]
fn apply_breaks(labels: Vec<String>) -> PyResult<Vec<String>> {
    let parsed = parse_labels(labels)?;
    Ok(motifs::apply_breaks(&parsed).0.iter().map(|t| t.to_string()).collect())
}

/// k-gram counts over the break sequence of `labels`; keys are dash-joined
/// motifs, and no motif crosses an OTHER span.
#[pyfunction]
#[pyo3(signature = (labels, k, mode="overlapping"))]
fn extract_kgrams(
    labels: Vec<String>,
    k: usize,
    mode: &str,
) -> PyResult<std::collections::HashMap<String, usize>> {
    let parsed = parse_labels(labels)?;
    let mode = match mode {
        "overlapping" => motifs::CountingMode::Overlapping,
        "non-overlapping" | "non_overlapping" => motifs::CountingMode::NonOverlapping,
        other => return Err(value_err(format!("unknown mode {other:?}"))),
    };
    let grams = motifs::extract_kgrams(&motifs::apply_breaks(&parsed), k, mode)
        .map_err(value_err)?;
    Ok(grams.into_iter().map(|(m, c)| (m.to_string(), c)).collect())
}

/// (recovery, exploitation, verification) window counts; k is 3 or 5.
#[pyfunction]
fn category_counts(labels: Vec<String>, k: usize) -> PyResult<(usize, usize, usize)> {
    let parsed = parse_labels(labels)?;
    let window = match k {
        3 => motifs::CategoryWindow::K3,
        5 => motifs::CategoryWindow::K5,
        other => return Err(value_err(format!("k must be 3 or 5, got {other}"))),
    };
    let c = motifs::category_counts(&parsed, window);
    Ok((c.recovery, c.exploitation, c.verification))
}

/// Longest exploit run.
#[pyfunction]
#[pyo3(signature = (labels, exploit="with-setup"))]
fn chain_depth(labels: Vec<String>, exploit: &str) -> PyResult<usize> {
    Ok(metrics::chain_depth(&parse_labels(labels)?, &exploit_set(exploit)?))
}

/// Mean exploit-run length; None when the trace has no exploit run.
#[pyfunction]
#[pyo3(signature = (labels, exploit="with-setup"))]
fn mean_exploit_run(labels: Vec<String>, exploit: &str) -> PyResult<Option<f64>> {
    Ok(metrics::mean_exploit_run(&parse_labels(labels)?, &exploit_set(exploit)?))
}

/// Unbiased pass@k estimate.
#[pyfunction]
fn pass_at_k(n: u64, c: u64, k: u64) -> PyResult<f64> {
    metrics::pass_at_k(n, c, k).map_err(value_err)
}

/// (U, two-sided p); exact permutation distribution when |x|*|y| <= 400.
#[pyfunction]
fn mann_whitney_u(x: Vec<f64>, y: Vec<f64>) -> PyResult<(f64, f64)> {
    metrics::mann_whitney_u(&x, &y).map_err(value_err)
}

/// Percentile bootstrap CI of the mean.
#[pyfunction]
#[pyo3(signature = (values, level=0.95, iterations=1000, seed=0))]
fn bootstrap_ci(
    values: Vec<f64>,
    level: f64,
    iterations: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    metrics::bootstrap_ci(&values, level, iterations, seed).map_err(value_err)
}

/// Nearest-rank percentile of integer depths.
#[pyfunction]
fn depth_percentile(depths: Vec<usize>, q: f64) -> PyResult<f64> {
    metrics::depth_percentile(&depths, q).map_err(value_err)
}

/// Mean of the k largest masked-in token NLLs.
#[pyfunction]
fn topk_nll_score(nlls: Vec<f64>, mask: Vec<bool>, k: usize) -> PyResult<f64> {
    novelty::topk_nll_score(&nlls, &mask, k).map_err(value_err)
}

/// Per-rollout novelty bonuses for one prompt group. Returns (bonuses,
/// skip_reason); incorrect rollouts always get 0.
#[pyfunction]
#[pyo3(signature = (scores, correct, alpha=0.1, top_k=100, z_clip=2.0, min_group=2, std_epsilon=1e-6))]
#[allow(clippy::too_many_arguments)]
fn group_bonus(
    scores: Vec<Option<f64>>,
    correct: Vec<bool>,
    alpha: f64,
    top_k: usize,
    z_clip: f64,
    min_group: usize,
    std_epsilon: f64,
) -> PyResult<(Vec<f64>, Option<String>)> {
    if scores.len() != correct.len() {
        return Err(value_err("scores and correct must have the same length"));
    }
    let cfg = novelty::NoveltyConfig {
        alpha,
        top_k,
        z_clip,
        min_group,
        std_epsilon,
        std_mode: novelty::StdMode::Population,
    };
    let group: Vec<novelty::ScoredRollout> = scores
        .iter()
        .zip(&correct)
        .map(|(&score, &correct)| novelty::ScoredRollout { correct, score })
        .collect();
    let report = novelty::group_bonus(&group, &cfg).map_err(value_err)?;
    Ok((
        report.entries.iter().map(|e| e.bonus).collect(),
        report.skip.map(|r| r.to_string()),
    ))
}

/// XML-structure format reward in {0, 0.25, 0.5, 0.75, 1.0}.
#[pyfunction]
fn format_reward(response: &str) -> f64 {
    verifiers::format_reward(response)
}

/// One puzzle fixture: instance, clues, and gold board.
#[pyclass]
struct Puzzle {
    fixture: verifiers::PuzzleFixture,
}

#[pymethods]
impl Puzzle {
    /// Parse a puzzles.jsonl row.
    #[staticmethod]
    fn from_json(json: &str) -> PyResult<Self> {
        Ok(Self { fixture: verifiers::puzzle_from_json(json).map_err(value_err)? })
    }

    #[getter]
    fn id(&self) -> String {
        self.fixture.id.clone()
    }

    #[getter]
    fn kind(&self) -> String {
        self.fixture.instance.kind.to_string()
    }

    #[getter]
    fn width(&self) -> usize {
        self.fixture.instance.width
    }

    #[getter]
    fn height(&self) -> usize {
        self.fixture.instance.height
    }

    fn gold_rows(&self) -> Vec<String> {
        self.fixture.gold.rows()
    }

    /// True iff the candidate rows satisfy every rule. Raises ValueError on
    /// shape or alphabet problems.
    fn verify(&self, rows: Vec<String>) -> PyResult<bool> {
        let board = verifiers::BoardGrid::from_rows(&rows).map_err(value_err)?;
        let verdict = verifiers::verify(&self.fixture.instance, &board).map_err(value_err)?;
        Ok(verdict.is_pass())
    }

    /// First rule failure, or None when the candidate passes.
    fn diagnose(&self, rows: Vec<String>) -> PyResult<Option<String>> {
        let board = verifiers::BoardGrid::from_rows(&rows).map_err(value_err)?;
        let verdict = verifiers::verify(&self.fixture.instance, &board).map_err(value_err)?;
        Ok(verdict.failure().map(str::to_string))
    }

    /// Weighted matched-cell fraction against gold, cubed; 0 on shape or
    /// alphabet failure.
    fn completion_reward(&self, rows: Vec<String>) -> PyResult<f64> {
        let board = verifiers::BoardGrid::from_rows(&rows).map_err(value_err)?;
        Ok(verifiers::completion_reward(&self.fixture.instance, &self.fixture.gold, &board))
    }

    /// (exact, completion, format, total) for a full response text.
    fn base_reward(&self, response: &str) -> (f64, f64, f64, f64) {
        let r = verifiers::base_reward(&self.fixture.instance, &self.fixture.gold, response);
        (r.exact, r.completion, r.format, r.total)
    }
}

#[pymodule]
fn tracekit_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(estimate_tokens, m)?)?;
    m.add_function(wrap_pyfunction!(extract_reasoning_block, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(classify_heuristic, m)?)?;
    m.add_function(wrap_pyfunction!(classify_trace, m)?)?;
    m.add_function(wrap_pyfunction!(apply_breaks, m)?)?;
    m.add_function(wrap_pyfunction!(extract_kgrams, m)?)?;
    m.add_function(wrap_pyfunction!(category_counts, m)?)?;
    m.add_function(wrap_pyfunction!(chain_depth, m)?)?;
    m.add_function(wrap_pyfunction!(mean_exploit_run, m)?)?;
    m.add_function(wrap_pyfunction!(pass_at_k, m)?)?;
    m.add_function(wrap_pyfunction!(mann_whitney_u, m)?)?;
    m.add_function(wrap_pyfunction!(bootstrap_ci, m)?)?;
    m.add_function(wrap_pyfunction!(depth_percentile, m)?)?;
    m.add_function(wrap_pyfunction!(topk_nll_score, m)?)?;
    m.add_function(wrap_pyfunction!(group_bonus, m)?)?;
    m.add_function(wrap_pyfunction!(format_reward, m)?)?;
    m.add_class::<Puzzle>()?;
    Ok(())
}
