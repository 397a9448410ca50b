//! Pipeline stages shared by the CLI subcommands: each stage reads loaded
//! data, computes one table, and writes it as JSONL or CSV. `report` chains
//! them; the individual subcommands call the same functions, so outputs are
//! byte-identical either way.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::corpus::{Corpus, TraceKey};
use crate::metrics::{
    bootstrap_ci, chain_depth, depth_percentile, mann_whitney_u, mean_exploit_run, pass_at_k,
    solve_split, ExploitSet, MetricError, SolveMatrix,
};
use crate::motifs::{
    build_motif_table, category_counts, CategoryWindow, CountingMode, MotifError, MotifFilter,
};
use crate::novelty::{
    group_bonus, signal_diagnostics, topk_nll_score, NoveltyConfig, NoveltyError, ScoredRollout,
};
use crate::primitives::{classify_heuristic, LabelError, LabelSource, Primitive, PrimitiveSequence};
use crate::segmenter::{extract_reasoning_block, SegmentError, Segmenter, Span};
use crate::verifiers::{base_reward, verify, PuzzleFixture, VerifierError};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Motif(#[from] MotifError),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    Novelty(#[from] NoveltyError),
    #[error(transparent)]
    Verifier(#[from] VerifierError),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("io error: {0}")]
    PlainIo(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Data(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io { path: path.display().to_string(), source }
}

// ---------------------------------------------------------------------------
// Segmentation
// ---------------------------------------------------------------------------

/// Spans of one trace, with offsets relative to the full response text.
#[derive(Debug, Serialize)]
pub struct SpanRecord<'a> {
    pub prompt_id: &'a str,
    pub rollout_id: &'a str,
    pub checkpoint: &'a str,
    pub spans: Vec<Span>,
}

/// Segment every record (optionally one checkpoint only). Span offsets are
/// char offsets into the response, i.e. block-relative offsets shifted by
/// the reasoning block's position.
pub fn segment_corpus<'a>(
    corpus: &'a Corpus,
    segmenter: &Segmenter,
    checkpoint: Option<&str>,
) -> Vec<SpanRecord<'a>> {
    corpus
        .records()
        .iter()
        .filter(|r| checkpoint.is_none_or(|cp| r.checkpoint == cp))
        .map(|rec| {
            let (block, offset) = extract_reasoning_block(&rec.response);
            let mut spans = segmenter.segment(block);
            for s in &mut spans {
                s.start += offset;
                s.end += offset;
            }
            SpanRecord {
                prompt_id: &rec.prompt_id,
                rollout_id: &rec.rollout_id,
                checkpoint: &rec.checkpoint,
                spans,
            }
        })
        .collect()
}

pub fn write_spans(records: &[SpanRecord<'_>], path: &Path) -> Result<(), ReportError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for rec in records {
        serde_json::to_writer(&mut w, rec).expect("span record serializes");
        writeln!(w).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Span counts per trace, for validating imported labels.
pub fn span_counts(
    corpus: &Corpus,
    segmenter: &Segmenter,
    checkpoint: Option<&str>,
) -> BTreeMap<TraceKey, usize> {
    segment_corpus(corpus, segmenter, checkpoint)
        .into_iter()
        .map(|r| {
            (
                TraceKey::new(
                    r.prompt_id.to_string(),
                    r.rollout_id.to_string(),
                    r.checkpoint.to_string(),
                ),
                r.spans.len(),
            )
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Classification
// ---------------------------------------------------------------------------

/// Heuristically label every span of every (filtered) trace.
pub fn classify_corpus(
    corpus: &Corpus,
    segmenter: &Segmenter,
    checkpoint: Option<&str>,
) -> BTreeMap<TraceKey, PrimitiveSequence> {
    let mut out = BTreeMap::new();
    for rec in corpus.records() {
        if let Some(cp) = checkpoint {
            if rec.checkpoint != cp {
                continue;
            }
        }
        let (block, _) = extract_reasoning_block(&rec.response);
        let spans = segmenter.segment(block);
        let mut char_starts: Vec<usize> = block.char_indices().map(|(b, _)| b).collect();
        char_starts.push(block.len());
        let mut labels = Vec::with_capacity(spans.len());
        for span in &spans {
            let text = &block[char_starts[span.start]..char_starts[span.end]];
            let preceding = &block[..char_starts[span.start]];
            labels.push(classify_heuristic(text, preceding));
        }
        let key = rec.key();
        out.insert(key.clone(), PrimitiveSequence::new(key, labels));
    }
    out
}

#[derive(Debug, Serialize)]
struct LabelRowOut<'a> {
    prompt_id: &'a str,
    rollout_id: &'a str,
    checkpoint: &'a str,
    labels: Vec<&'static str>,
    source: LabelSource,
}

pub fn write_labels(
    sequences: &BTreeMap<TraceKey, PrimitiveSequence>,
    source: LabelSource,
    path: &Path,
) -> Result<(), ReportError> {
    let mut w = BufWriter::new(File::create(path).map_err(io_err(path))?);
    for (key, seq) in sequences {
        let row = LabelRowOut {
            prompt_id: &key.prompt_id,
            rollout_id: &key.rollout_id,
            checkpoint: &key.checkpoint,
            labels: seq.labels.iter().map(|p| p.name()).collect(),
            source,
        };
        serde_json::to_writer(&mut w, &row).expect("label row serializes");
        writeln!(w).map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Group sequences by checkpoint, preserving trace order.
pub fn by_checkpoint(
    sequences: &BTreeMap<TraceKey, PrimitiveSequence>,
) -> BTreeMap<String, Vec<&PrimitiveSequence>> {
    let mut out: BTreeMap<String, Vec<&PrimitiveSequence>> = BTreeMap::new();
    for (key, seq) in sequences {
        out.entry(key.checkpoint.clone()).or_default().push(seq);
    }
    out
}

// ---------------------------------------------------------------------------
// Motifs and categories
// ---------------------------------------------------------------------------

pub fn write_motifs(
    sequences: &BTreeMap<TraceKey, PrimitiveSequence>,
    ks: &[usize],
    mode: CountingMode,
    filter: MotifFilter,
    path: &Path,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "checkpoint",
        "k",
        "motif",
        "raw_count",
        "mean_per_trace_count",
        "mean_normalized_freq",
        "mode",
    ])?;
    for (checkpoint, seqs) in by_checkpoint(sequences) {
        let owned: Vec<PrimitiveSequence> = seqs.into_iter().cloned().collect();
        let table = build_motif_table(&owned, ks, mode, filter)?;
        for ((k, motif), stats) in &table.entries {
            w.write_record([
                checkpoint.as_str(),
                &k.to_string(),
                &motif.to_string(),
                &stats.raw_count.to_string(),
                &stats.mean_per_trace_count.to_string(),
                &stats.mean_normalized_freq.to_string(),
                &mode.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_categories(
    sequences: &BTreeMap<TraceKey, PrimitiveSequence>,
    path: &Path,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "checkpoint",
        "k",
        "mean_recovery",
        "mean_exploitation",
        "mean_verification",
        "n_traces",
    ])?;
    for (checkpoint, seqs) in by_checkpoint(sequences) {
        for window in [CategoryWindow::K3, CategoryWindow::K5] {
            let n = seqs.len();
            let mut sums = (0usize, 0usize, 0usize);
            for seq in &seqs {
                let c = category_counts(&seq.labels, window);
                sums.0 += c.recovery;
                sums.1 += c.exploitation;
                sums.2 += c.verification;
            }
            let mean = |v: usize| v as f64 / n as f64;
            w.write_record([
                checkpoint.as_str(),
                &window.size().to_string(),
                &mean(sums.0).to_string(),
                &mean(sums.1).to_string(),
                &mean(sums.2).to_string(),
                &n.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_primitive_counts(
    sequences: &BTreeMap<TraceKey, PrimitiveSequence>,
    path: &Path,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["checkpoint", "primitive", "total_count", "mean_per_trace"])?;
    for (checkpoint, seqs) in by_checkpoint(sequences) {
        let n = seqs.len();
        for p in Primitive::ALL {
            let total: usize =
                seqs.iter().map(|s| s.labels.iter().filter(|&&l| l == p).count()).sum();
            w.write_record([
                checkpoint.as_str(),
                p.name(),
                &total.to_string(),
                &(total as f64 / n as f64).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

pub fn write_metrics(
    sequences: &BTreeMap<TraceKey, PrimitiveSequence>,
    exploit: &ExploitSet,
    path: &Path,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["checkpoint", "mean_depth", "p90_depth", "mean_run_length", "n_traces"])?;
    for (checkpoint, seqs) in by_checkpoint(sequences) {
        let depths: Vec<usize> = seqs.iter().map(|s| chain_depth(&s.labels, exploit)).collect();
        let mean_depth = depths.iter().sum::<usize>() as f64 / depths.len() as f64;
        let p90 = depth_percentile(&depths, 0.9)?;
        let runs: Vec<f64> =
            seqs.iter().filter_map(|s| mean_exploit_run(&s.labels, exploit)).collect();
        let mean_run = if runs.is_empty() {
            f64::NAN
        } else {
            runs.iter().sum::<f64>() / runs.len() as f64
        };
        w.write_record([
            checkpoint.as_str(),
            &mean_depth.to_string(),
            &p90.to_string(),
            &mean_run.to_string(),
            &seqs.len().to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Bootstrap CIs for the mean chain depth, one row per checkpoint. One seed
/// drives all rows; checkpoints are processed in sorted order.
pub fn write_depth_ci(
    sequences: &BTreeMap<TraceKey, PrimitiveSequence>,
    exploit: &ExploitSet,
    level: f64,
    iterations: usize,
    seed: u64,
    path: &Path,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["checkpoint", "mean_depth", "ci_lo", "ci_hi", "level", "iterations", "seed"])?;
    for (checkpoint, seqs) in by_checkpoint(sequences) {
        let depths: Vec<f64> =
            seqs.iter().map(|s| chain_depth(&s.labels, exploit) as f64).collect();
        let mean = depths.iter().sum::<f64>() / depths.len() as f64;
        let (lo, hi) = bootstrap_ci(&depths, level, iterations, seed)?;
        w.write_record([
            checkpoint.as_str(),
            &mean.to_string(),
            &lo.to_string(),
            &hi.to_string(),
            &level.to_string(),
            &iterations.to_string(),
            &seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_passk(matrix: &SolveMatrix, ks: &[u64], path: &Path) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["checkpoint", "k", "estimate"])?;
    for checkpoint in matrix.checkpoints() {
        let column = matrix.column(&checkpoint);
        for &k in ks {
            let cells: Vec<_> = column.values().filter(|cell| cell.n as u64 >= k).collect();
            if cells.is_empty() {
                continue;
            }
            let mean = cells
                .iter()
                .map(|cell| pass_at_k(cell.n as u64, cell.c as u64, k))
                .collect::<Result<Vec<f64>, _>>()?
                .iter()
                .sum::<f64>()
                / cells.len() as f64;
            w.write_record([checkpoint.as_str(), &k.to_string(), &mean.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct SplitPair {
    a: String,
    b: String,
    both: Vec<String>,
    only_a: Vec<String>,
    only_b: Vec<String>,
    neither: Vec<String>,
}

#[derive(Debug, Serialize)]
struct SplitsOut {
    pairs: Vec<SplitPair>,
}

/// Solve splits for the given checkpoint pairs (or all unordered pairs when
/// `pairs` is empty).
pub fn write_splits(
    matrix: &SolveMatrix,
    pairs: &[(String, String)],
    path: &Path,
) -> Result<(), ReportError> {
    let pairs: Vec<(String, String)> = if pairs.is_empty() {
        let cps = matrix.checkpoints();
        let mut all = Vec::new();
        for i in 0..cps.len() {
            for j in i + 1..cps.len() {
                all.push((cps[i].clone(), cps[j].clone()));
            }
        }
        all
    } else {
        pairs.to_vec()
    };
    let mut out = SplitsOut { pairs: Vec::new() };
    for (a, b) in pairs {
        let split = solve_split(matrix, &a, &b)?;
        out.pairs.push(SplitPair {
            a,
            b,
            both: split.both,
            only_a: split.only_a,
            only_b: split.only_b,
            neither: split.neither,
        });
    }
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &out).expect("splits serialize");
    writeln!(w).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Chain-depth comparison of solved vs unsolved traces per checkpoint
/// (Mann-Whitney U, two-sided). Rows appear only where both sides are
/// non-empty; traces without a correctness flag are excluded.
pub fn write_depth_mwu(
    corpus: &Corpus,
    sequences: &BTreeMap<TraceKey, PrimitiveSequence>,
    exploit: &ExploitSet,
    path: &Path,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "checkpoint",
        "n_solved",
        "n_unsolved",
        "mean_depth_solved",
        "mean_depth_unsolved",
        "u",
        "p",
    ])?;
    let correct_by_key: BTreeMap<TraceKey, bool> = corpus
        .records()
        .iter()
        .filter_map(|r| r.correct.map(|c| (r.key(), c)))
        .collect();
    for (checkpoint, seqs) in by_checkpoint(sequences) {
        let mut solved = Vec::new();
        let mut unsolved = Vec::new();
        for seq in seqs {
            let Some(&correct) = correct_by_key.get(&seq.key) else { continue };
            let depth = chain_depth(&seq.labels, exploit) as f64;
            if correct {
                solved.push(depth);
            } else {
                unsolved.push(depth);
            }
        }
        if solved.is_empty() || unsolved.is_empty() {
            continue;
        }
        let (u, p) = mann_whitney_u(&solved, &unsolved)?;
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        w.write_record([
            checkpoint.as_str(),
            &solved.len().to_string(),
            &unsolved.len().to_string(),
            &mean(&solved).to_string(),
            &mean(&unsolved).to_string(),
            &u.to_string(),
            &p.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Rewards
// ---------------------------------------------------------------------------

/// Score every rollout whose prompt_id names a puzzle fixture. Returns the
/// number of scored rows.
pub fn write_rewards(
    corpus: &Corpus,
    puzzles: &[PuzzleFixture],
    checkpoint: Option<&str>,
    path: &Path,
) -> Result<usize, ReportError> {
    let by_id: BTreeMap<&str, &PuzzleFixture> =
        puzzles.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["prompt_id", "rollout_id", "checkpoint", "exact", "completion", "format", "total"])?;
    let mut rows = 0;
    for rec in corpus.records() {
        if let Some(cp) = checkpoint {
            if rec.checkpoint != cp {
                continue;
            }
        }
        let Some(fixture) = by_id.get(rec.prompt_id.as_str()) else { continue };
        let reward = base_reward(&fixture.instance, &fixture.gold, &rec.response);
        w.write_record([
            rec.prompt_id.as_str(),
            rec.rollout_id.as_str(),
            rec.checkpoint.as_str(),
            &reward.exact.to_string(),
            &reward.completion.to_string(),
            &reward.format.to_string(),
            &reward.total.to_string(),
        ])?;
        rows += 1;
    }
    w.flush()?;
    Ok(rows)
}

/// Verify every matching rollout's extracted answer; one verdict row each.
pub fn write_verdicts(
    corpus: &Corpus,
    puzzles: &[PuzzleFixture],
    checkpoint: Option<&str>,
    path: &Path,
) -> Result<usize, ReportError> {
    use crate::verifiers::{extract_answer, parse_answer_board};
    let by_id: BTreeMap<&str, &PuzzleFixture> =
        puzzles.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["prompt_id", "rollout_id", "checkpoint", "verdict", "detail"])?;
    let mut rows = 0;
    for rec in corpus.records() {
        if let Some(cp) = checkpoint {
            if rec.checkpoint != cp {
                continue;
            }
        }
        let Some(fixture) = by_id.get(rec.prompt_id.as_str()) else { continue };
        let (verdict, detail) = match extract_answer(&rec.response).and_then(parse_answer_board) {
            None => ("unparseable".to_string(), "no answer board".to_string()),
            Some(board) => match verify(&fixture.instance, &board) {
                Ok(v) if v.is_pass() => ("pass".to_string(), String::new()),
                Ok(v) => ("fail".to_string(), v.failure().unwrap_or_default().to_string()),
                Err(e) => ("structural".to_string(), e.to_string()),
            },
        };
        w.write_record([
            rec.prompt_id.as_str(),
            rec.rollout_id.as_str(),
            rec.checkpoint.as_str(),
            &verdict,
            &detail,
        ])?;
        rows += 1;
    }
    w.flush()?;
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Novelty
// ---------------------------------------------------------------------------

/// Per-rollout novelty bonuses for one checkpoint, written in prompt order.
pub fn write_novelty(
    corpus: &Corpus,
    checkpoint: &str,
    cfg: &NoveltyConfig,
    path: &Path,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["prompt_id", "rollout_id", "correct", "s", "z", "bonus", "skip_reason"])?;
    for group in corpus.group_by_prompt(checkpoint)? {
        let mut scored = Vec::with_capacity(group.rollouts.len());
        for rec in &group.rollouts {
            let correct = rec.correct == Some(true);
            let score = match &rec.token_nlls {
                Some(nlls) => {
                    let mask = rec
                        .response_mask
                        .clone()
                        .unwrap_or_else(|| vec![true; nlls.len()]);
                    Some(topk_nll_score(nlls, &mask, cfg.top_k)?)
                }
                None if correct => {
                    return Err(ReportError::Data(format!(
                        "correct rollout {} of prompt {} has no token NLLs",
                        rec.rollout_id, group.prompt_id
                    )));
                }
                None => None,
            };
            scored.push(ScoredRollout { correct, score });
        }
        let report = group_bonus(&scored, cfg)?;
        let skip = report.skip.map(|r| r.to_string()).unwrap_or_default();
        for (rec, entry) in group.rollouts.iter().zip(&report.entries) {
            let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            w.write_record([
                rec.prompt_id.as_str(),
                rec.rollout_id.as_str(),
                &(rec.correct == Some(true)).to_string(),
                &fmt(entry.score),
                &fmt(entry.z),
                &entry.bonus.to_string(),
                &skip,
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Within-prompt signal spread, one row per checkpoint.
pub fn write_diagnostics(
    corpus: &Corpus,
    checkpoints: &[String],
    k_list: &[usize],
    path: &Path,
) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["checkpoint".to_string(), "n_prompts".to_string(), "std_mean_nll".to_string()];
    header.extend(k_list.iter().map(|k| format!("std_top_{k}")));
    w.write_record(&header)?;
    for checkpoint in checkpoints {
        let d = signal_diagnostics(corpus, checkpoint, k_list)?;
        let mut row = vec![d.checkpoint.clone(), d.n_prompts.to_string(), d.mean_nll_std.to_string()];
        row.extend(d.topk_stds.iter().map(|(_, std)| std.to_string()));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Base rewards shaped with the novelty bonus, grouped per (checkpoint,
/// prompt). Correctness comes from the verifier so the bonus and the base
/// reward agree.
pub fn write_shaped_rewards(
    corpus: &Corpus,
    puzzles: &[PuzzleFixture],
    cfg: &NoveltyConfig,
    path: &Path,
) -> Result<usize, ReportError> {
    use crate::novelty::shaped_reward;
    let by_id: BTreeMap<&str, &PuzzleFixture> =
        puzzles.iter().map(|p| (p.id.as_str(), p)).collect();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([
        "prompt_id",
        "rollout_id",
        "checkpoint",
        "exact",
        "completion",
        "format",
        "novelty",
        "total",
    ])?;
    let mut rows = 0;
    for checkpoint in corpus.checkpoints().into_iter().map(str::to_string).collect::<Vec<_>>() {
        for group in corpus.group_by_prompt(&checkpoint)? {
            let Some(fixture) = by_id.get(group.prompt_id) else { continue };
            let rewards: Vec<_> = group
                .rollouts
                .iter()
                .map(|rec| base_reward(&fixture.instance, &fixture.gold, &rec.response))
                .collect();
            let mut scored = Vec::with_capacity(group.rollouts.len());
            for (rec, reward) in group.rollouts.iter().zip(&rewards) {
                let correct = reward.exact == 1.0;
                let score = match &rec.token_nlls {
                    Some(nlls) => {
                        let mask = rec
                            .response_mask
                            .clone()
                            .unwrap_or_else(|| vec![true; nlls.len()]);
                        Some(topk_nll_score(nlls, &mask, cfg.top_k)?)
                    }
                    None if correct => {
                        return Err(ReportError::Data(format!(
                            "verified-correct rollout {} of prompt {} has no token NLLs",
                            rec.rollout_id, group.prompt_id
                        )));
                    }
                    None => None,
                };
                scored.push(ScoredRollout { correct, score });
            }
            let bonuses = group_bonus(&scored, cfg)?;
            for ((rec, base), entry) in
                group.rollouts.iter().zip(&rewards).zip(&bonuses.entries)
            {
                let shaped = shaped_reward(base, entry.bonus);
                w.write_record([
                    rec.prompt_id.as_str(),
                    rec.rollout_id.as_str(),
                    rec.checkpoint.as_str(),
                    &shaped.exact.to_string(),
                    &shaped.completion.to_string(),
                    &shaped.format.to_string(),
                    &shaped.novelty.to_string(),
                    &shaped.total.to_string(),
                ])?;
                rows += 1;
            }
        }
    }
    w.flush()?;
    Ok(rows)
}
