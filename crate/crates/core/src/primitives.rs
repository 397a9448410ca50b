//! The nine-way reasoning-primitive vocabulary, label import, and a
//! deterministic heuristic baseline classifier.
//!
//! Primitive sequences normally come from an external span classifier; this
//! module ingests such labels from `labels.jsonl` (the fidelity path) or
//! produces them with rule-based heuristics (the model-free baseline). Both
//! paths yield the same [`PrimitiveSequence`] type, so everything downstream
//! (motifs, depth metrics) is agnostic to the label source.

use std::collections::BTreeMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::TraceKey;

/// Span-level reasoning role. Exactly nine values; serialized names are the
/// uppercase variant names.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Primitive {
    Plan,
    Setup,
    Enumerate,
    Hypothesize,
    Compute,
    Check,
    Backtrack,
    Summarize,
    Other,
}

impl Primitive {
    /// All nine primitives, in declaration order.
    pub const ALL: [Primitive; 9] = [
        Primitive::Plan,
        Primitive::Setup,
        Primitive::Enumerate,
        Primitive::Hypothesize,
        Primitive::Compute,
        Primitive::Check,
        Primitive::Backtrack,
        Primitive::Summarize,
        Primitive::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Primitive::Plan => "PLAN",
            Primitive::Setup => "SETUP",
            Primitive::Enumerate => "ENUMERATE",
            Primitive::Hypothesize => "HYPOTHESIZE",
            Primitive::Compute => "COMPUTE",
            Primitive::Check => "CHECK",
            Primitive::Backtrack => "BACKTRACK",
            Primitive::Summarize => "SUMMARIZE",
            Primitive::Other => "OTHER",
        }
    }
}

impl fmt::Display for Primitive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error)]
#[error("unknown primitive label {0:?}")]
pub struct ParsePrimitiveError(pub String);

impl FromStr for Primitive {
    type Err = ParsePrimitiveError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Primitive::ALL
            .iter()
            .copied()
            .find(|p| p.name() == s)
            .ok_or_else(|| ParsePrimitiveError(s.to_string()))
    }
}

/// One label per span of a trace, in span order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrimitiveSequence {
    pub key: TraceKey,
    pub labels: Vec<Primitive>,
}

impl PrimitiveSequence {
    pub fn new(key: TraceKey, labels: Vec<Primitive>) -> Self {
        Self { key, labels }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Where a label sequence came from. Reports carry this so heuristic labels
/// are never mistaken for classifier output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelSource {
    Heuristic,
    Imported,
}

#[derive(Debug, Error)]
pub enum LabelError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {source}")]
    BadLabel {
        line: usize,
        #[source]
        source: ParsePrimitiveError,
    },
    #[error("duplicate labels for trace {key} (line {line})")]
    Duplicate { key: TraceKey, line: usize },
    #[error(
        "label count {labels} does not match span count {spans} for trace {key}"
    )]
    Alignment {
        key: TraceKey,
        labels: usize,
        spans: usize,
    },
    #[error("labels reference unknown trace {key} (line {line})")]
    UnknownTrace { key: TraceKey, line: usize },
}

#[derive(Debug, Deserialize)]
struct LabelRow {
    prompt_id: String,
    rollout_id: String,
    checkpoint: String,
    labels: Vec<String>,
}

/// One row of `labels.jsonl`.
#[derive(Debug, Serialize)]
pub struct LabelRecord<'a> {
    pub prompt_id: &'a str,
    pub rollout_id: &'a str,
    pub checkpoint: &'a str,
    pub labels: &'a [Primitive],
    pub source: LabelSource,
}

/// Import externally produced span labels, checking that each labeled trace
/// has exactly one label per segmenter span.
///
/// `span_counts` maps every known trace to its span count; traces present in
/// the label file but absent from the map are rejected, and a count mismatch
/// is an alignment error naming the trace. Traces without labels are simply
/// absent from the result.
pub fn import_labels(
    path: &Path,
    span_counts: &BTreeMap<TraceKey, usize>,
) -> Result<BTreeMap<TraceKey, PrimitiveSequence>, LabelError> {
    let file = File::open(path).map_err(|source| LabelError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut out = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|source| LabelError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let row: LabelRow = serde_json::from_str(&line)
            .map_err(|source| LabelError::Parse { line: line_no, source })?;
        let key = TraceKey::new(row.prompt_id, row.rollout_id, row.checkpoint);
        let mut labels = Vec::with_capacity(row.labels.len());
        for raw in &row.labels {
            labels.push(
                raw.parse::<Primitive>()
                    .map_err(|source| LabelError::BadLabel { line: line_no, source })?,
            );
        }
        let spans = *span_counts
            .get(&key)
            .ok_or_else(|| LabelError::UnknownTrace { key: key.clone(), line: line_no })?;
        if labels.len() != spans {
            return Err(LabelError::Alignment { key, labels: labels.len(), spans });
        }
        if out.contains_key(&key) {
            return Err(LabelError::Duplicate { key, line: line_no });
        }
        out.insert(key.clone(), PrimitiveSequence::new(key, labels));
    }
    Ok(out)
}

/// Knobs for the heuristic baseline. Only the COMPUTE symbol-density cutoff
/// is exposed; the marker families themselves are fixed rule data.
#[derive(Debug, Clone)]
pub struct HeuristicConfig {
    /// Minimum mathematical-symbol/digit characters per 100 characters for a
    /// span to count as COMPUTE. Not derived from any measured distribution.
    pub compute_symbol_density: f64,
}

impl Default for HeuristicConfig {
    fn default() -> Self {
        Self { compute_symbol_density: 8.0 }
    }
}

struct HeuristicRules {
    hypothesize: Regex,
    check: Regex,
    backtrack: Regex,
    enumerate: Regex,
    summarize: Regex,
    setup: Regex,
    plan: Regex,
}

fn rules() -> &'static HeuristicRules {
    static RULES: OnceLock<HeuristicRules> = OnceLock::new();
    RULES.get_or_init(|| {
        let lead = |alts: &str| Regex::new(&format!(r"(?i)^\s*(?:{alts})")).unwrap();
        HeuristicRules {
            hypothesize: lead(r"suppose\b|assume\b|let'?s\b|what if\b|if we\b"),
            check: lead(r"check(?:ing)?\b|verify(?:ing)?\b|confirm(?:ing)?\b|double-?check\b"),
            backtrack: lead(concat!(
                r"wait\b|actually\b|hmm\b|instead\b|alternatively\b|going back\b|",
                r"contradiction\b|this doesn't work\b|that doesn't work\b|no wait\b",
            )),
            enumerate: lead(r"(?:case|step|option)\s+\d+"),
            summarize: lead(
                r"therefore\b|hence\b|thus\b|so the\b|in summary\b|to summarize\b|overall\b",
            ),
            setup: lead(r"let\b|define\b|denote\b|set\b|put\b|write\b|introduce\b|notation\b"),
            plan: lead(concat!(
                r"(?:the\s+|our\s+|my\s+)?(?:plan|strategy|approach|idea)\b|",
                r"we will\b|i will\b|i'll\b|to solve\b|first,?\s+(?:we|i)\b",
            )),
        }
    })
}

fn symbol_density_per_100(text: &str) -> f64 {
    let mut total = 0usize;
    let mut symbols = 0usize;
    for ch in text.chars() {
        total += 1;
        if ch.is_ascii_digit()
            || matches!(
                ch,
                '+' | '-' | '*' | '/' | '=' | '^' | '<' | '>' | '%' | '(' | ')' | '[' | ']'
                    | '{' | '}' | '\\' | '|'
            )
            || matches!(ch, '√' | '∑' | '∏' | '∫' | '×' | '÷' | '≤' | '≥' | '≠' | '±' | '·')
        {
            symbols += 1;
        }
    }
    if total == 0 {
        return 0.0;
    }
    symbols as f64 * 100.0 / total as f64
}

/// Deterministic baseline span classifier.
///
/// Rules fire on the span's leading marker, in fixed priority order:
/// hypothetical opener, verification opener, self-correction / redirection /
/// failure marker, numbered case, conclusion marker, definitional opener,
/// strategy phrase. A span with no leading marker becomes COMPUTE when its
/// mathematical-symbol density clears the configured cutoff, else OTHER.
///
/// `preceding_text` is accepted so richer classifiers can be swapped in
/// behind the same signature; the baseline rules do not consult it.
pub fn classify_heuristic(span_text: &str, preceding_text: &str) -> Primitive {
    classify_heuristic_with(span_text, preceding_text, &HeuristicConfig::default())
}

pub fn classify_heuristic_with(
    span_text: &str,
    _preceding_text: &str,
    cfg: &HeuristicConfig,
) -> Primitive {
    let r = rules();
    if r.hypothesize.is_match(span_text) {
        return Primitive::Hypothesize;
    }
    if r.check.is_match(span_text) {
        return Primitive::Check;
    }
    if r.backtrack.is_match(span_text) {
        return Primitive::Backtrack;
    }
    if r.enumerate.is_match(span_text) {
        return Primitive::Enumerate;
    }
    if r.summarize.is_match(span_text) {
        return Primitive::Summarize;
    }
    if r.setup.is_match(span_text) {
        return Primitive::Setup;
    }
    if r.plan.is_match(span_text) {
        return Primitive::Plan;
    }
    if symbol_density_per_100(span_text) >= cfg.compute_symbol_density {
        Primitive::Compute
    } else {
        Primitive::Other
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn nine_stable_names() {
        assert_eq!(Primitive::ALL.len(), 9);
        for p in Primitive::ALL {
            assert_eq!(p.name().parse::<Primitive>().unwrap(), p);
            let json = serde_json::to_string(&p).unwrap();
            assert_eq!(json, format!("\"{}\"", p.name()));
        }
    }

    #[test]
    fn heuristic_leading_markers() {
        assert_eq!(classify_heuristic("Suppose x = 3 ...", ""), Primitive::Hypothesize);
        assert_eq!(
            classify_heuristic("Wait, this contradicts earlier calculation.", ""),
            Primitive::Backtrack
        );
        assert_eq!(classify_heuristic("Case 2: the grid has ...", ""), Primitive::Enumerate);
    }

    #[test]
    fn heuristic_remaining_rules() {
        assert_eq!(classify_heuristic("Check whether n is prime.", ""), Primitive::Check);
        assert_eq!(classify_heuristic("Therefore the answer is 7.", ""), Primitive::Summarize);
        assert_eq!(classify_heuristic("Define f(n) as the nth term.", ""), Primitive::Setup);
        assert_eq!(
            classify_heuristic("The approach: reduce to a quadratic.", ""),
            Primitive::Plan
        );
        // 12 symbol chars over ~40 chars is well past the density cutoff.
        assert_eq!(
            classify_heuristic("x1 = 3+4*2 = 11, y = (11-3)/2 = 4", ""),
            Primitive::Compute
        );
        assert_eq!(
            classify_heuristic("and now for something unrelated entirely", ""),
            Primitive::Other
        );
        // "Let's" outranks the bare "Let" setup rule.
        assert_eq!(classify_heuristic("Let's try a substitution.", ""), Primitive::Hypothesize);
    }

    #[test]
    fn heuristic_is_deterministic() {
        let samples = [
            "Suppose the board is empty.",
            "Case 12: both ends are fixed.",
            "just prose with nothing in it",
            "a = b + c - d",
        ];
        for s in samples {
            let first = classify_heuristic(s, "");
            for _ in 0..5 {
                assert_eq!(classify_heuristic(s, ""), first);
            }
        }
    }

    fn write_lines(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    fn key(p: &str) -> TraceKey {
        TraceKey::new(p.to_string(), "r0".to_string(), "sft".to_string())
    }

    #[test]
    fn import_two_aligned_traces() {
        let f = write_lines(&[
            r#"{"prompt_id":"p1","rollout_id":"r0","checkpoint":"sft","labels":["CHECK","PLAN"]}"#,
            r#"{"prompt_id":"p2","rollout_id":"r0","checkpoint":"sft","labels":["OTHER"]}"#,
        ]);
        let counts = BTreeMap::from([(key("p1"), 2), (key("p2"), 1)]);
        let map = import_labels(f.path(), &counts).unwrap();
        assert_eq!(map.len(), 2);
        assert_eq!(map[&key("p1")].labels, vec![Primitive::Check, Primitive::Plan]);
    }

    #[test]
    fn import_alignment_error_names_trace() {
        let f = write_lines(&[
            r#"{"prompt_id":"p1","rollout_id":"r0","checkpoint":"sft","labels":["CHECK","PLAN","OTHER","SETUP","COMPUTE"]}"#,
        ]);
        let counts = BTreeMap::from([(key("p1"), 6)]);
        let err = import_labels(f.path(), &counts).unwrap_err();
        match err {
            LabelError::Alignment { key: k, labels, spans } => {
                assert_eq!(k, key("p1"));
                assert_eq!((labels, spans), (5, 6));
            }
            other => panic!("expected alignment error, got {other:?}"),
        }
    }

    #[test]
    fn import_empty_file_gives_empty_map() {
        let f = write_lines(&[]);
        let counts = BTreeMap::from([(key("p1"), 2)]);
        assert!(import_labels(f.path(), &counts).unwrap().is_empty());
    }

    #[test]
    fn import_rejects_unknown_label() {
        let f = write_lines(&[
            r#"{"prompt_id":"p1","rollout_id":"r0","checkpoint":"sft","labels":["PONDER"]}"#,
        ]);
        let counts = BTreeMap::from([(key("p1"), 1)]);
        assert!(matches!(
            import_labels(f.path(), &counts).unwrap_err(),
            LabelError::BadLabel { line: 1, .. }
        ));
    }
}
