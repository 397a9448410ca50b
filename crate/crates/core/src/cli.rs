//! Command-line front end. Subcommands map one-to-one onto the pipeline
//! stages in [`crate::report`]; `report` chains them all, so identical
//! inputs, flags, and seed give byte-identical files either way.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use crate::corpus::Corpus;
use crate::metrics::{ExploitSet, SolveMatrix};
use crate::motifs::{CountingMode, MotifFilter};
use crate::novelty::NoveltyConfig;
use crate::primitives::{import_labels, LabelSource, PrimitiveSequence};
use crate::report;
use crate::segmenter::{Segmenter, SegmenterConfig};
use crate::verifiers::{load_puzzles, verify, PuzzleFixture};
use crate::TraceKey;

#[derive(Debug, Parser)]
#[command(name = "tracekit", version, about = "Reasoning-trace analysis and verifier rewards")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Overlapping,
    #[value(name = "non-overlapping")]
    NonOverlapping,
}

impl From<ModeArg> for CountingMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Overlapping => CountingMode::Overlapping,
            ModeArg::NonOverlapping => CountingMode::NonOverlapping,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExploitArg {
    #[value(name = "with-setup")]
    WithSetup,
    #[value(name = "no-setup")]
    NoSetup,
}

impl From<ExploitArg> for ExploitSet {
    fn from(e: ExploitArg) -> Self {
        match e {
            ExploitArg::WithSetup => ExploitSet::with_setup(),
            ExploitArg::NoSetup => ExploitSet::no_setup(),
        }
    }
}

/// Flags shared across subcommands. Any of them may also come from a TOML
/// file passed with `--config`; explicit flags win over the file.
#[derive(Debug, Args, Clone, Default)]
pub struct Common {
    /// Input file (rollouts.jsonl, labels.jsonl, or solves.csv depending on
    /// the subcommand).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Output file, or output directory for `report`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Restrict to one checkpoint (repeatable where a pair is needed).
    #[arg(long)]
    pub checkpoint: Vec<String>,
    /// k values: comma-separated integers and inclusive ranges ("2-15,3").
    #[arg(long)]
    pub k: Option<String>,
    /// Motif counting mode.
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Exploit-run label set.
    #[arg(long, value_enum)]
    pub exploit: Option<ExploitArg>,
    /// Novelty bonus scale.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Novelty top-k token count.
    #[arg(long)]
    pub topk: Option<usize>,
    /// Novelty z clip.
    #[arg(long)]
    pub zclip: Option<f64>,
    /// Seed for all randomized computations (bootstrap).
    #[arg(long)]
    pub seed: Option<u64>,
    /// TOML file supplying any of these flags by their long names.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Puzzle fixtures (puzzles.jsonl).
    #[arg(long)]
    pub puzzles: Option<PathBuf>,
    /// Span labels (labels.jsonl) to import instead of the heuristic.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Segmenter minimum span tokens.
    #[arg(long)]
    pub min_tokens: Option<usize>,
    /// Segmenter maximum span tokens.
    #[arg(long)]
    pub max_tokens: Option<usize>,
    /// Segmenter trailing-buffer merge threshold.
    #[arg(long)]
    pub tail_merge_tokens: Option<usize>,
    /// Motif raw-count floor for k <= 5.
    #[arg(long)]
    pub motif_min_short: Option<u64>,
    /// Motif raw-count floor for k > 5.
    #[arg(long)]
    pub motif_min_long: Option<u64>,
    /// Bootstrap confidence level.
    #[arg(long)]
    pub level: Option<f64>,
    /// Bootstrap iterations.
    #[arg(long)]
    pub iterations: Option<usize>,
}

/// The same knobs as [`Common`], read from a TOML file.
#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    #[serde(rename = "in")]
    input: Option<PathBuf>,
    out: Option<PathBuf>,
    checkpoint: Option<Vec<String>>,
    k: Option<String>,
    mode: Option<String>,
    exploit: Option<String>,
    alpha: Option<f64>,
    topk: Option<usize>,
    zclip: Option<f64>,
    seed: Option<u64>,
    puzzles: Option<PathBuf>,
    labels: Option<PathBuf>,
    min_tokens: Option<usize>,
    max_tokens: Option<usize>,
    tail_merge_tokens: Option<usize>,
    motif_min_short: Option<u64>,
    motif_min_long: Option<u64>,
    level: Option<f64>,
    iterations: Option<usize>,
    marker_patterns: Option<Vec<String>>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split reasoning blocks into spans (rollouts.jsonl -> spans.jsonl).
    Segment(Common),
    /// Label spans (rollouts.jsonl [+ labels.jsonl] -> labels.jsonl).
    Classify(Common),
    /// k-gram motif table (labels.jsonl -> motifs.csv).
    Motifs(Common),
    /// Depth and run statistics (labels.jsonl -> metrics.csv).
    Metrics(Common),
    /// pass@k estimates (solves.csv or rollouts.jsonl -> passk.csv).
    Passk(Common),
    /// Solved-problem split for a checkpoint pair (solves.csv -> splits.json).
    Split(Common),
    /// Verify gold boards, or rollout answers with --in (puzzles.jsonl).
    Verify(Common),
    /// Verifier rewards per rollout (puzzles.jsonl + rollouts.jsonl -> CSV).
    Reward(Common),
    /// Novelty bonuses per rollout (rollouts.jsonl -> novelty.csv).
    Novelty(Common),
    /// Within-prompt NLL signal spread (rollouts.jsonl -> diagnostics.csv).
    Diagnostics(Common),
    /// Full pipeline into an output directory.
    Report(Common),
}

/// Effective options after merging CLI flags over the config file.
#[derive(Debug)]
pub struct Options {
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub checkpoints: Vec<String>,
    pub k: Option<String>,
    pub mode: CountingMode,
    pub exploit: ExploitSet,
    pub novelty: NoveltyConfig,
    pub seed: u64,
    pub puzzles: Option<PathBuf>,
    pub labels: Option<PathBuf>,
    pub segmenter: SegmenterConfig,
    pub motif_filter: MotifFilter,
    pub level: f64,
    pub iterations: usize,
}

fn merge(common: &Common) -> Result<Options> {
    let file: FileConfig = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?
        }
        None => FileConfig::default(),
    };
    let mode = match (&common.mode, file.mode.as_deref()) {
        (Some(m), _) => (*m).into(),
        (None, Some("overlapping")) => CountingMode::Overlapping,
        (None, Some("non-overlapping")) | (None, Some("non_overlapping")) => {
            CountingMode::NonOverlapping
        }
        (None, Some(other)) => bail!("config: unknown mode {other:?}"),
        (None, None) => CountingMode::Overlapping,
    };
    let exploit = match (&common.exploit, file.exploit.as_deref()) {
        (Some(e), _) => (*e).into(),
        (None, Some("with-setup")) | (None, Some("with_setup")) => ExploitSet::with_setup(),
        (None, Some("no-setup")) | (None, Some("no_setup")) => ExploitSet::no_setup(),
        (None, Some(other)) => bail!("config: unknown exploit set {other:?}"),
        (None, None) => ExploitSet::with_setup(),
    };
    let mut novelty = NoveltyConfig::default();
    if let Some(alpha) = common.alpha.or(file.alpha) {
        novelty.alpha = alpha;
    }
    if let Some(topk) = common.topk.or(file.topk) {
        novelty.top_k = topk;
    }
    if let Some(zclip) = common.zclip.or(file.zclip) {
        novelty.z_clip = zclip;
    }
    let mut segmenter = SegmenterConfig::default();
    if let Some(v) = common.min_tokens.or(file.min_tokens) {
        segmenter.min_tokens = v;
    }
    if let Some(v) = common.max_tokens.or(file.max_tokens) {
        segmenter.max_tokens = v;
    }
    if let Some(v) = common.tail_merge_tokens.or(file.tail_merge_tokens) {
        segmenter.tail_merge_tokens = v;
    }
    if let Some(patterns) = file.marker_patterns {
        segmenter.marker_patterns = patterns;
    }
    let mut motif_filter = MotifFilter::default();
    if let Some(v) = common.motif_min_short.or(file.motif_min_short) {
        motif_filter.min_count_short = v;
    }
    if let Some(v) = common.motif_min_long.or(file.motif_min_long) {
        motif_filter.min_count_long = v;
    }
    let checkpoints = if common.checkpoint.is_empty() {
        file.checkpoint.unwrap_or_default()
    } else {
        common.checkpoint.clone()
    };
    Ok(Options {
        input: common.input.clone().or(file.input),
        out: common.out.clone().or(file.out),
        checkpoints,
        k: common.k.clone().or(file.k),
        mode,
        exploit,
        novelty,
        seed: common.seed.or(file.seed).unwrap_or(0),
        puzzles: common.puzzles.clone().or(file.puzzles),
        labels: common.labels.clone().or(file.labels),
        segmenter,
        motif_filter,
        level: common.level.or(file.level).unwrap_or(0.95),
        iterations: common.iterations.or(file.iterations).unwrap_or(1000),
    })
}

/// Parse "1,2,4-6" into sorted, deduplicated values.
pub fn parse_k_list(expr: &str) -> Result<Vec<u64>> {
    let mut out = Vec::new();
    for part in expr.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        if let Some((lo, hi)) = part.split_once('-') {
            let lo: u64 = lo.trim().parse().with_context(|| format!("bad k range {part:?}"))?;
            let hi: u64 = hi.trim().parse().with_context(|| format!("bad k range {part:?}"))?;
            if lo > hi {
                bail!("bad k range {part:?}");
            }
            out.extend(lo..=hi);
        } else {
            out.push(part.parse().with_context(|| format!("bad k value {part:?}"))?);
        }
    }
    if out.is_empty() {
        bail!("empty k list");
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

fn require_input(opts: &Options) -> Result<&Path> {
    opts.input.as_deref().context("missing --in")
}

fn require_out(opts: &Options) -> Result<&Path> {
    opts.out.as_deref().context("missing --out")
}

fn single_checkpoint_filter(opts: &Options) -> Result<Option<&str>> {
    match opts.checkpoints.len() {
        0 => Ok(None),
        1 => Ok(Some(opts.checkpoints[0].as_str())),
        n => bail!("expected at most one --checkpoint, got {n}"),
    }
}

fn load_corpus_filtered(opts: &Options) -> Result<Corpus> {
    let path = require_input(opts)?;
    let corpus = Corpus::load(path)?;
    Ok(corpus)
}

/// Labeled sequences: imported when --labels is given, heuristic otherwise.
fn label_sequences(
    corpus: &Corpus,
    segmenter: &Segmenter,
    opts: &Options,
    checkpoint: Option<&str>,
) -> Result<(BTreeMap<TraceKey, PrimitiveSequence>, LabelSource)> {
    match &opts.labels {
        Some(path) => {
            let counts = report::span_counts(corpus, segmenter, checkpoint);
            let map = import_labels(path, &counts)?;
            Ok((map, LabelSource::Imported))
        }
        None => Ok((report::classify_corpus(corpus, segmenter, checkpoint), LabelSource::Heuristic)),
    }
}

/// Sequences straight from a labels.jsonl file (no corpus needed).
fn sequences_from_labels_file(path: &Path) -> Result<BTreeMap<TraceKey, PrimitiveSequence>> {
    // Alignment with spans is the caller's concern here; counts are taken
    // from the file itself.
    use std::io::BufRead;
    let file = std::fs::File::open(path)
        .with_context(|| format!("opening labels {}", path.display()))?;
    let reader = std::io::BufReader::new(file);
    let mut counts = BTreeMap::new();
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        #[derive(Deserialize)]
        struct Row {
            prompt_id: String,
            rollout_id: String,
            checkpoint: String,
            labels: Vec<String>,
        }
        let row: Row = serde_json::from_str(&line)
            .with_context(|| format!("labels line {}", idx + 1))?;
        let key = TraceKey::new(row.prompt_id, row.rollout_id, row.checkpoint);
        counts.insert(key.clone(), row.labels.len());
        rows.push((key, row.labels));
    }
    let mut out = BTreeMap::new();
    for (key, labels) in rows {
        let labels = labels
            .iter()
            .map(|l| l.parse().map_err(anyhow::Error::from))
            .collect::<Result<Vec<_>>>()
            .with_context(|| format!("labels for trace {key}"))?;
        out.insert(key.clone(), PrimitiveSequence::new(key, labels));
    }
    Ok(out)
}

fn filter_sequences(
    sequences: BTreeMap<TraceKey, PrimitiveSequence>,
    checkpoint: Option<&str>,
) -> BTreeMap<TraceKey, PrimitiveSequence> {
    match checkpoint {
        None => sequences,
        Some(cp) => sequences.into_iter().filter(|(k, _)| k.checkpoint == cp).collect(),
    }
}

fn load_fixtures(opts: &Options) -> Result<Vec<PuzzleFixture>> {
    let path = opts.puzzles.as_deref().context("missing --puzzles")?;
    Ok(load_puzzles(path)?)
}

/// Entry point; returns the process exit code.
pub fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Segment(c) => {
            let opts = merge(&c)?;
            let corpus = load_corpus_filtered(&opts)?;
            let segmenter = Segmenter::new(opts.segmenter.clone())?;
            let filter = single_checkpoint_filter(&opts)?;
            let records = report::segment_corpus(&corpus, &segmenter, filter);
            report::write_spans(&records, require_out(&opts)?)?;
        }
        Command::Classify(c) => {
            let opts = merge(&c)?;
            let corpus = load_corpus_filtered(&opts)?;
            let segmenter = Segmenter::new(opts.segmenter.clone())?;
            let filter = single_checkpoint_filter(&opts)?;
            let (sequences, source) = label_sequences(&corpus, &segmenter, &opts, filter)?;
            report::write_labels(&sequences, source, require_out(&opts)?)?;
        }
        Command::Motifs(c) => {
            let opts = merge(&c)?;
            let filter = single_checkpoint_filter(&opts)?;
            let sequences =
                filter_sequences(sequences_from_labels_file(require_input(&opts)?)?, filter);
            let ks: Vec<usize> = parse_k_list(opts.k.as_deref().unwrap_or("2-15"))?
                .into_iter()
                .map(|k| k as usize)
                .collect();
            report::write_motifs(&sequences, &ks, opts.mode, opts.motif_filter, require_out(&opts)?)?;
        }
        Command::Metrics(c) => {
            let opts = merge(&c)?;
            let filter = single_checkpoint_filter(&opts)?;
            let sequences =
                filter_sequences(sequences_from_labels_file(require_input(&opts)?)?, filter);
            report::write_metrics(&sequences, &opts.exploit, require_out(&opts)?)?;
        }
        Command::Passk(c) => {
            let opts = merge(&c)?;
            let input = require_input(&opts)?;
            let matrix = if input.extension().is_some_and(|e| e == "csv") {
                SolveMatrix::read_csv(input)?
            } else {
                SolveMatrix::from_corpus(&Corpus::load(input)?)
            };
            let ks = parse_k_list(opts.k.as_deref().unwrap_or("1,2,4,8,16,32"))?;
            report::write_passk(&matrix, &ks, require_out(&opts)?)?;
        }
        Command::Split(c) => {
            let opts = merge(&c)?;
            let input = require_input(&opts)?;
            let matrix = if input.extension().is_some_and(|e| e == "csv") {
                SolveMatrix::read_csv(input)?
            } else {
                SolveMatrix::from_corpus(&Corpus::load(input)?)
            };
            let pairs: Vec<(String, String)> = match opts.checkpoints.len() {
                0 => Vec::new(),
                2 => vec![(opts.checkpoints[0].clone(), opts.checkpoints[1].clone())],
                n => bail!("split needs exactly two --checkpoint flags (or none for all pairs), got {n}"),
            };
            report::write_splits(&matrix, &pairs, require_out(&opts)?)?;
        }
        Command::Verify(c) => {
            let opts = merge(&c)?;
            let fixtures = load_fixtures(&opts)?;
            match &opts.input {
                None => {
                    // Self-check: every gold board must pass its own rules.
                    let mut failures = 0;
                    for fixture in &fixtures {
                        match verify(&fixture.instance, &fixture.gold)? {
                            v if v.is_pass() => println!("{}: pass", fixture.id),
                            v => {
                                failures += 1;
                                println!("{}: FAIL ({})", fixture.id, v.failure().unwrap());
                            }
                        }
                    }
                    if failures > 0 {
                        bail!("{failures} gold boards failed verification");
                    }
                }
                Some(input) => {
                    let corpus = Corpus::load(input)?;
                    let filter = single_checkpoint_filter(&opts)?;
                    let rows =
                        report::write_verdicts(&corpus, &fixtures, filter, require_out(&opts)?)?;
                    eprintln!("verified {rows} rollouts");
                }
            }
        }
        Command::Reward(c) => {
            let opts = merge(&c)?;
            let fixtures = load_fixtures(&opts)?;
            let corpus = load_corpus_filtered(&opts)?;
            let filter = single_checkpoint_filter(&opts)?;
            let rows = report::write_rewards(&corpus, &fixtures, filter, require_out(&opts)?)?;
            eprintln!("scored {rows} rollouts");
        }
        Command::Novelty(c) => {
            let opts = merge(&c)?;
            let corpus = load_corpus_filtered(&opts)?;
            let checkpoint = match single_checkpoint_filter(&opts)? {
                Some(cp) => cp.to_string(),
                None => {
                    let cps = corpus.checkpoints();
                    if cps.len() != 1 {
                        bail!(
                            "corpus has checkpoints {cps:?}; pick one with --checkpoint"
                        );
                    }
                    cps[0].to_string()
                }
            };
            report::write_novelty(&corpus, &checkpoint, &opts.novelty, require_out(&opts)?)?;
        }
        Command::Diagnostics(c) => {
            let opts = merge(&c)?;
            let corpus = load_corpus_filtered(&opts)?;
            let checkpoints = if opts.checkpoints.is_empty() {
                corpus.checkpoints().iter().map(|s| s.to_string()).collect()
            } else {
                opts.checkpoints.clone()
            };
            let ks: Vec<usize> = parse_k_list(opts.k.as_deref().unwrap_or("10,100,200"))?
                .into_iter()
                .map(|k| k as usize)
                .collect();
            report::write_diagnostics(&corpus, &checkpoints, &ks, require_out(&opts)?)?;
        }
        Command::Report(c) => {
            let opts = merge(&c)?;
            run_report(&opts)?;
        }
    }
    Ok(())
}

/// The full pipeline: every table the individual subcommands produce, in one
/// output directory.
fn run_report(opts: &Options) -> Result<()> {
    let corpus = load_corpus_filtered(opts)?;
    let out_dir = require_out(opts)?;
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    let segmenter = Segmenter::new(opts.segmenter.clone())?;
    let filter = single_checkpoint_filter(opts)?;

    // Spans and labels.
    let spans = report::segment_corpus(&corpus, &segmenter, filter);
    report::write_spans(&spans, &out_dir.join("spans.jsonl"))?;
    let (sequences, source) = label_sequences(&corpus, &segmenter, opts, filter)?;
    report::write_labels(&sequences, source, &out_dir.join("labels.jsonl"))?;

    // Motifs, categories, primitive counts.
    let motif_ks: Vec<usize> = parse_k_list(opts.k.as_deref().unwrap_or("2-15"))?
        .into_iter()
        .map(|k| k as usize)
        .collect();
    report::write_motifs(
        &sequences,
        &motif_ks,
        opts.mode,
        opts.motif_filter,
        &out_dir.join("motifs.csv"),
    )?;
    report::write_categories(&sequences, &out_dir.join("categories.csv"))?;
    report::write_primitive_counts(&sequences, &out_dir.join("primitive_counts.csv"))?;

    // Depth metrics and bootstrap CIs.
    report::write_metrics(&sequences, &opts.exploit, &out_dir.join("metrics.csv"))?;
    report::write_depth_ci(
        &sequences,
        &opts.exploit,
        opts.level,
        opts.iterations,
        opts.seed,
        &out_dir.join("depth_ci.csv"),
    )?;

    // Correctness-dependent tables.
    let matrix = SolveMatrix::from_corpus(&corpus);
    if !matrix.is_empty() {
        report::write_passk(&matrix, &parse_k_list("1,2,4,8,16,32")?, &out_dir.join("passk.csv"))?;
        if matrix.checkpoints().len() >= 2 {
            report::write_splits(&matrix, &[], &out_dir.join("splits.json"))?;
        }
        report::write_depth_mwu(&corpus, &sequences, &opts.exploit, &out_dir.join("mwu.csv"))?;
    }

    // NLL-dependent tables.
    let has_nlls = corpus.records().iter().any(|r| r.token_nlls.is_some());
    if has_nlls {
        let checkpoints: Vec<String> = match filter {
            Some(cp) => vec![cp.to_string()],
            None => corpus.checkpoints().iter().map(|s| s.to_string()).collect(),
        };
        for checkpoint in &checkpoints {
            let all_have = corpus
                .checkpoint_records(checkpoint)?
                .iter()
                .all(|r| r.token_nlls.is_some() || r.correct != Some(true));
            if !all_have {
                continue;
            }
            let name = if checkpoints.len() == 1 {
                "novelty.csv".to_string()
            } else {
                format!("novelty_{checkpoint}.csv")
            };
            report::write_novelty(&corpus, checkpoint, &opts.novelty, &out_dir.join(name))?;
        }
        let complete: Vec<String> = checkpoints
            .iter()
            .filter(|cp| {
                corpus
                    .checkpoint_records(cp)
                    .map(|rs| rs.iter().all(|r| r.token_nlls.is_some()))
                    .unwrap_or(false)
            })
            .cloned()
            .collect();
        if !complete.is_empty() {
            let ks = [10usize, 100, 200];
            report::write_diagnostics(&corpus, &complete, &ks, &out_dir.join("diagnostics.csv"))?;
        }
    }

    // Verifier rewards.
    if let Some(path) = &opts.puzzles {
        let fixtures = load_puzzles(path)?;
        report::write_rewards(&corpus, &fixtures, filter, &out_dir.join("rewards.csv"))?;
        if has_nlls {
            report::write_shaped_rewards(
                &corpus,
                &fixtures,
                &opts.novelty,
                &out_dir.join("shaped_rewards.csv"),
            )?;
        }
    }
    Ok(())
}
