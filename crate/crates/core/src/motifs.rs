//! Break-aware k-gram motif statistics and trigram category counts.
//!
//! Motif extraction runs on the break sequence: OTHER spans become `__BREAK__`
//! boundary tokens and no motif may cross one. Category counting runs on the
//! raw primitive sequence instead, because the verification predicate's
//! allowed middle slot explicitly includes OTHER.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::primitives::{ParsePrimitiveError, Primitive, PrimitiveSequence};

pub const BREAK_TOKEN: &str = "__BREAK__";

/// Smallest and largest supported motif length.
pub const MIN_K: usize = 2;
pub const MAX_K: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BreakToken {
    Label(Primitive),
    Break,
}

impl fmt::Display for BreakToken {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BreakToken::Label(p) => write!(f, "{p}"),
            BreakToken::Break => f.write_str(BREAK_TOKEN),
        }
    }
}

/// A primitive sequence with every OTHER replaced by a boundary token.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BreakSequence(pub Vec<BreakToken>);

impl BreakSequence {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Substitute BREAK for OTHER, elementwise; all other labels keep their
/// positions, so the output length equals the input length.
pub fn apply_breaks(labels: &[Primitive]) -> BreakSequence {
    BreakSequence(
        labels
            .iter()
            .map(|&p| match p {
                Primitive::Other => BreakToken::Break,
                other => BreakToken::Label(other),
            })
            .collect(),
    )
}

/// An ordered k-gram of reasoning primitives. Never contains OTHER or a
/// break token. Displays as dash-joined labels (`CHECK-COMPUTE-CHECK`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Motif(pub Vec<Primitive>);

impl fmt::Display for Motif {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, p) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("-")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for Motif {
    type Err = ParsePrimitiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split('-').map(str::parse).collect::<Result<Vec<_>, _>>().map(Motif)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountingMode {
    /// Every break-free window counts.
    Overlapping,
    /// Per motif, matches are taken greedily left to right without reusing
    /// positions.
    NonOverlapping,
}

impl fmt::Display for CountingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountingMode::Overlapping => "overlapping",
            CountingMode::NonOverlapping => "non_overlapping",
        })
    }
}

#[derive(Debug, Error)]
pub enum MotifError {
    #[error("k = {0} outside supported range [{MIN_K}, {MAX_K}]")]
    KOutOfRange(usize),
}

fn window_motif(tokens: &[BreakToken]) -> Option<Motif> {
    let mut labels = Vec::with_capacity(tokens.len());
    for t in tokens {
        match t {
            BreakToken::Label(p) => labels.push(*p),
            BreakToken::Break => return None,
        }
    }
    Some(Motif(labels))
}

/// Count length-k motifs in one break sequence. Windows containing a break
/// are discarded. Results are sorted by motif for determinism.
pub fn extract_kgrams(
    seq: &BreakSequence,
    k: usize,
    mode: CountingMode,
) -> Result<Vec<(Motif, usize)>, MotifError> {
    if !(MIN_K..=MAX_K).contains(&k) {
        return Err(MotifError::KOutOfRange(k));
    }
    let tokens = &seq.0;
    if tokens.len() < k {
        return Ok(Vec::new());
    }
    let mut counts: BTreeMap<Motif, usize> = BTreeMap::new();
    for w in tokens.windows(k) {
        if let Some(m) = window_motif(w) {
            *counts.entry(m).or_insert(0) += 1;
        }
    }
    match mode {
        CountingMode::Overlapping => Ok(counts.into_iter().collect()),
        CountingMode::NonOverlapping => Ok(counts
            .into_keys()
            .map(|motif| {
                let mut n = 0;
                let mut pos = 0;
                while pos + k <= tokens.len() {
                    if window_motif(&tokens[pos..pos + k]).as_ref() == Some(&motif) {
                        n += 1;
                        pos += k;
                    } else {
                        pos += 1;
                    }
                }
                (motif, n)
            })
            .collect()),
    }
}

/// Per-trace length normalization: `count / (L - k + 1)` where `L` is the
/// break-sequence length, break tokens included. `None` when `L < k`.
pub fn normalized_frequency(count: usize, len: usize, k: usize) -> Option<f64> {
    if len < k {
        return None;
    }
    Some(count as f64 / (len - k + 1) as f64)
}

/// Middle-slot labels admitted by the verification predicates.
pub const ALLOWED_MIDDLE: [Primitive; 6] = [
    Primitive::Plan,
    Primitive::Setup,
    Primitive::Enumerate,
    Primitive::Compute,
    Primitive::Summarize,
    Primitive::Other,
];

fn allowed_middle(p: Primitive) -> bool {
    ALLOWED_MIDDLE.contains(&p)
}

/// Window length for category counting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CategoryWindow {
    K3,
    K5,
}

impl CategoryWindow {
    /// Window length in labels (3 or 5).
    pub fn size(self) -> usize {
        match self {
            CategoryWindow::K3 => 3,
            CategoryWindow::K5 => 5,
        }
    }
}

/// Per-trace category window counts. The three predicates are pairwise
/// disjoint on any window.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryCounts {
    pub recovery: usize,
    pub exploitation: usize,
    pub verification: usize,
}

fn is_recovery(w: &[Primitive]) -> bool {
    w.contains(&Primitive::Hypothesize) && w.contains(&Primitive::Backtrack)
}

fn is_exploitation(w: &[Primitive]) -> bool {
    match w.len() {
        3 => w == [Primitive::Compute, Primitive::Check, Primitive::Compute],
        5 => {
            w == [
                Primitive::Check,
                Primitive::Compute,
                Primitive::Check,
                Primitive::Compute,
                Primitive::Check,
            ]
        }
        _ => false,
    }
}

fn is_verification(w: &[Primitive]) -> bool {
    match w.len() {
        3 => w[0] == Primitive::Check && w[2] == Primitive::Check && allowed_middle(w[1]),
        // The exact exploitation window also matches the CHECK-x-CHECK-y-CHECK
        // shape; exploitation takes precedence so the categories stay disjoint.
        5 => {
            w[0] == Primitive::Check
                && w[2] == Primitive::Check
                && w[4] == Primitive::Check
                && allowed_middle(w[1])
                && allowed_middle(w[3])
                && !is_exploitation(w)
        }
        _ => false,
    }
}

/// Slide a window of length 3 or 5 over the raw primitive sequence and count
/// Recovery, Exploitation, and Verification windows.
pub fn category_counts(labels: &[Primitive], window: CategoryWindow) -> CategoryCounts {
    let k = window.size();
    let mut counts = CategoryCounts::default();
    if labels.len() < k {
        return counts;
    }
    for w in labels.windows(k) {
        if is_recovery(w) {
            counts.recovery += 1;
        } else if is_exploitation(w) {
            counts.exploitation += 1;
        } else if is_verification(w) {
            counts.verification += 1;
        }
    }
    counts
}

/// Category decision for a single window, exposed for exhaustive predicate
/// checks. At most one of the three flags is set.
pub fn categorize_window(w: &[Primitive]) -> (bool, bool, bool) {
    (is_recovery(w), is_exploitation(w), is_verification(w))
}

/// Raw-count noise floor: motifs below the threshold for their length are
/// dropped from the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MotifFilter {
    /// Minimum raw count for k <= 5.
    pub min_count_short: u64,
    /// Minimum raw count for k > 5.
    pub min_count_long: u64,
}

impl Default for MotifFilter {
    fn default() -> Self {
        Self { min_count_short: 5, min_count_long: 10 }
    }
}

impl MotifFilter {
    pub fn threshold(&self, k: usize) -> u64 {
        if k <= 5 {
            self.min_count_short
        } else {
            self.min_count_long
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotifStats {
    /// Total count over all traces.
    pub raw_count: u64,
    /// raw_count / number of traces (all traces of the corpus slice).
    pub mean_per_trace_count: f64,
    /// Mean of count/(L-k+1) over traces with L >= k.
    pub mean_normalized_freq: f64,
}

/// Aggregated, filtered motif statistics for one set of traces.
#[derive(Debug, Clone)]
pub struct MotifTable {
    pub mode: CountingMode,
    pub filter: MotifFilter,
    pub n_traces: usize,
    pub entries: BTreeMap<(usize, Motif), MotifStats>,
}

/// Count motifs across traces for every k in `ks`, then apply the noise
/// filter. Aggregation is an associative merge over traces, so the result is
/// independent of trace order.
pub fn build_motif_table(
    sequences: &[PrimitiveSequence],
    ks: &[usize],
    mode: CountingMode,
    filter: MotifFilter,
) -> Result<MotifTable, MotifError> {
    for &k in ks {
        if !(MIN_K..=MAX_K).contains(&k) {
            return Err(MotifError::KOutOfRange(k));
        }
    }
    let n_traces = sequences.len();
    let mut raw: BTreeMap<(usize, Motif), u64> = BTreeMap::new();
    let mut freq_sum: BTreeMap<(usize, Motif), f64> = BTreeMap::new();
    let mut traces_at_k: BTreeMap<usize, usize> = BTreeMap::new();
    for seq in sequences {
        let bseq = apply_breaks(&seq.labels);
        let len = bseq.len();
        for &k in ks {
            if len < k {
                continue;
            }
            *traces_at_k.entry(k).or_insert(0) += 1;
            for (motif, count) in extract_kgrams(&bseq, k, mode)? {
                let freq = normalized_frequency(count, len, k).expect("len >= k");
                *raw.entry((k, motif.clone())).or_insert(0) += count as u64;
                *freq_sum.entry((k, motif)).or_insert(0.0) += freq;
            }
        }
    }
    let mut entries = BTreeMap::new();
    for ((k, motif), raw_count) in raw {
        if raw_count < filter.threshold(k) {
            continue;
        }
        let fsum = freq_sum[&(k, motif.clone())];
        let at_k = traces_at_k[&k];
        entries.insert(
            (k, motif),
            MotifStats {
                raw_count,
                mean_per_trace_count: raw_count as f64 / n_traces as f64,
                mean_normalized_freq: fsum / at_k as f64,
            },
        );
    }
    Ok(MotifTable { mode, filter, n_traces, entries })
}
