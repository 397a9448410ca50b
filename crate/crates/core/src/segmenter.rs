//! Reasoning-block extraction and span segmentation.
//!
//! A trace's reasoning block is cut into contiguous spans at paragraph
//! boundaries and line-anchored discourse markers. Fragments shorter than
//! `min_tokens` accumulate in a buffer until the threshold is reached;
//! fragments that would overrun `max_tokens` are re-split at sentence-ending
//! punctuation; a trailing buffer below `tail_merge_tokens` merges into the
//! previous span. Token counts are the character estimate `chars / 4`
//! throughout; a real tokenizer can be plugged in afterwards to fill
//! [`Span::final_tokens`], but it never influences the cut positions.
//!
//! Offsets in [`Span`] are character offsets into the block, and the spans
//! exactly cover the block: concatenating the span texts reproduces it
//! byte for byte.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One contiguous segment of the reasoning block. `start`/`end` are char
/// offsets (end exclusive); `est_tokens` is `(end - start) / 4`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
    pub est_tokens: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_tokens: Option<usize>,
}

/// Pluggable final token counter. The default reuses the character estimate,
/// which is also the only count segmentation itself ever consults.
pub trait TokenCounter {
    fn count(&self, text: &str) -> usize;
}

/// `chars / 4`, the same estimate used during segmentation.
#[derive(Debug, Default, Clone, Copy)]
pub struct CharEstimateTokenizer;

impl TokenCounter for CharEstimateTokenizer {
    fn count(&self, text: &str) -> usize {
        estimate_tokens(text)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmenterConfig {
    pub min_tokens: usize,
    pub max_tokens: usize,
    pub tail_merge_tokens: usize,
    /// Ordered, case-insensitive marker patterns. Each is applied anchored to
    /// a line start (leading blanks allowed); a match starts a new fragment
    /// at the matched line.
    pub marker_patterns: Vec<String>,
}

/// The default marker inventory: numbered steps, sequential connectives,
/// hypothetical openers, verification openers, self-correction, redirection,
/// conclusion, and failure markers.
pub fn default_marker_patterns() -> Vec<String> {
    [
        r"(?:case|step|option)\s+\d+",
        r"(?:first|second|then)\b",
        r"(?:suppose|assume|let's)\b",
        r"(?:check|verify|confirm)\b",
        r"(?:wait|actually|hmm)\b",
        r"(?:instead|alternatively|going back)\b",
        r"(?:therefore|hence|thus)\b",
        r"(?:contradiction|this doesn't work)\b",
    ]
    .into_iter()
    .map(str::to_string)
    .collect()
}

impl Default for SegmenterConfig {
    fn default() -> Self {
        Self {
            min_tokens: 80,
            max_tokens: 250,
            tail_merge_tokens: 40,
            marker_patterns: default_marker_patterns(),
        }
    }
}

#[derive(Debug, Error)]
pub enum SegmentError {
    #[error("invalid segmenter config: {0}")]
    InvalidConfig(String),
    #[error("invalid marker pattern {pattern:?}: {source}")]
    BadPattern {
        pattern: String,
        #[source]
        source: Box<regex::Error>,
    },
}

/// Character-estimate token count: `floor(char_count / 4)`.
pub fn estimate_tokens(text: &str) -> usize {
    text.chars().count() / 4
}

/// Content of the first closed `<reasoning>` tag pair, with the char offset
/// of that content in the response. Falls back to the whole response (offset
/// 0) when no closed pair exists.
pub fn extract_reasoning_block(response: &str) -> (&str, usize) {
    const OPEN: &str = "<reasoning>";
    const CLOSE: &str = "</reasoning>";
    if let Some(open) = response.find(OPEN) {
        let content_start = open + OPEN.len();
        if let Some(rel) = response[content_start..].find(CLOSE) {
            let offset = response[..content_start].chars().count();
            return (&response[content_start..content_start + rel], offset);
        }
    }
    (response, 0)
}

fn sentence_cut_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[.!?]+\s+").unwrap())
}

/// A compiled segmenter. Splitting never discards text: every cut point
/// partitions the block, so spans are contiguous and exactly cover it.
#[derive(Debug)]
pub struct Segmenter {
    cfg: SegmenterConfig,
    marker_re: Option<Regex>,
}

impl Segmenter {
    pub fn new(cfg: SegmenterConfig) -> Result<Self, SegmentError> {
        if cfg.tail_merge_tokens == 0
            || cfg.tail_merge_tokens > cfg.min_tokens
            || cfg.min_tokens >= cfg.max_tokens
        {
            return Err(SegmentError::InvalidConfig(format!(
                "need 0 < tail_merge_tokens <= min_tokens < max_tokens, got {}/{}/{}",
                cfg.tail_merge_tokens, cfg.min_tokens, cfg.max_tokens
            )));
        }
        let marker_re = if cfg.marker_patterns.is_empty() {
            None
        } else {
            // Patterns are tried as one alternation; each is line-anchored.
            let joined = cfg
                .marker_patterns
                .iter()
                .map(|p| format!("(?:{p})"))
                .collect::<Vec<_>>()
                .join("|");
            let full = format!(r"(?mi)^[ \t]*(?:{joined})");
            Some(Regex::new(&full).map_err(|source| SegmentError::BadPattern {
                pattern: full,
                source: Box::new(source),
            })?)
        };
        Ok(Self { cfg, marker_re })
    }

    pub fn config(&self) -> &SegmenterConfig {
        &self.cfg
    }

    /// Segment a reasoning block into spans. Empty input yields no spans.
    pub fn segment(&self, block: &str) -> Vec<Span> {
        if block.is_empty() {
            return Vec::new();
        }
        // Byte offset of every char, plus the terminal length; lets us count
        // chars of any byte range without rescanning.
        let mut char_starts: Vec<usize> = block.char_indices().map(|(b, _)| b).collect();
        char_starts.push(block.len());
        let char_idx = |byte: usize| char_starts.partition_point(|&b| b < byte);
        let est = |from: usize, to: usize| (char_idx(to) - char_idx(from)) / 4;

        let fragments = self.fragment(block);

        let min = self.cfg.min_tokens;
        let max = self.cfg.max_tokens;
        let mut spans: Vec<(usize, usize)> = Vec::new();
        let mut buf: Option<(usize, usize)> = None;

        fn push_unit(
            unit: (usize, usize),
            buf: &mut Option<(usize, usize)>,
            spans: &mut Vec<(usize, usize)>,
            est: &dyn Fn(usize, usize) -> usize,
            min: usize,
            max: usize,
        ) {
            let merged = match buf.take() {
                None => unit,
                Some((bs, be)) => {
                    debug_assert_eq!(be, unit.0);
                    if est(bs, unit.1) > max {
                        // Flushing an under-min buffer here is only possible
                        // when the unit is a single sentence longer than
                        // max_tokens - min_tokens.
                        spans.push((bs, be));
                        unit
                    } else {
                        (bs, unit.1)
                    }
                }
            };
            if est(merged.0, merged.1) >= min {
                spans.push(merged);
            } else {
                *buf = Some(merged);
            }
        }

        for frag in fragments {
            let frag_too_big = est(frag.0, frag.1) > max;
            let overflows_buffer = match buf {
                Some((bs, _)) => est(bs, frag.1) > max,
                None => false,
            };
            if frag_too_big || overflows_buffer {
                for unit in sentence_units(block, frag) {
                    push_unit(unit, &mut buf, &mut spans, &est, min, max);
                }
            } else {
                push_unit(frag, &mut buf, &mut spans, &est, min, max);
            }
        }

        if let Some((bs, be)) = buf {
            if est(bs, be) < self.cfg.tail_merge_tokens && !spans.is_empty() {
                spans.last_mut().unwrap().1 = be;
            } else {
                spans.push((bs, be));
            }
        }

        spans
            .into_iter()
            .map(|(bs, be)| {
                let (cs, ce) = (char_idx(bs), char_idx(be));
                Span { start: cs, end: ce, est_tokens: (ce - cs) / 4, final_tokens: None }
            })
            .collect()
    }

    /// Segment and fill `final_tokens` with the given counter.
    pub fn segment_with_tokenizer(&self, block: &str, counter: &dyn TokenCounter) -> Vec<Span> {
        let mut spans = self.segment(block);
        let texts = span_texts(block, &spans);
        for (span, text) in spans.iter_mut().zip(texts) {
            span.final_tokens = Some(counter.count(text));
        }
        spans
    }

    /// Byte ranges after paragraph and marker cuts. Cut points partition the
    /// block; the text is never altered.
    fn fragment(&self, block: &str) -> Vec<(usize, usize)> {
        let mut cuts: Vec<usize> = Vec::new();
        // Paragraph boundaries: a run of two or more newlines; the cut sits
        // after the run, so the newlines stay with the preceding fragment.
        let bytes = block.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            if bytes[i] == b'\n' {
                let run_start = i;
                while i < bytes.len() && bytes[i] == b'\n' {
                    i += 1;
                }
                if i - run_start >= 2 {
                    cuts.push(i);
                }
            } else {
                i += 1;
            }
        }
        if let Some(re) = &self.marker_re {
            for m in re.find_iter(block) {
                cuts.push(m.start());
            }
        }
        cuts.sort_unstable();
        cuts.dedup();
        cuts.retain(|&c| c > 0 && c < block.len());

        let mut fragments = Vec::with_capacity(cuts.len() + 1);
        let mut prev = 0;
        for c in cuts {
            fragments.push((prev, c));
            prev = c;
        }
        fragments.push((prev, block.len()));
        fragments
    }
}

/// Convenience wrapper: build a segmenter from `cfg` and run it.
pub fn segment(block: &str, cfg: &SegmenterConfig) -> Result<Vec<Span>, SegmentError> {
    Ok(Segmenter::new(cfg.clone())?.segment(block))
}

/// Sentence units of a fragment: cut after sentence-ending punctuation plus
/// the following whitespace run. A fragment with no internal boundary stays
/// one unit.
fn sentence_units(block: &str, frag: (usize, usize)) -> Vec<(usize, usize)> {
    let text = &block[frag.0..frag.1];
    let mut cuts: Vec<usize> = sentence_cut_re()
        .find_iter(text)
        .map(|m| frag.0 + m.end())
        .filter(|&c| c > frag.0 && c < frag.1)
        .collect();
    cuts.dedup();
    let mut units = Vec::with_capacity(cuts.len() + 1);
    let mut prev = frag.0;
    for c in cuts {
        units.push((prev, c));
        prev = c;
    }
    units.push((prev, frag.1));
    units
}

/// Slice out every span's text in one pass. Panics if spans do not lie
/// within the block (they always do for spans produced from it).
pub fn span_texts<'a>(block: &'a str, spans: &[Span]) -> Vec<&'a str> {
    let mut char_starts: Vec<usize> = block.char_indices().map(|(b, _)| b).collect();
    char_starts.push(block.len());
    spans
        .iter()
        .map(|s| &block[char_starts[s.start]..char_starts[s.end]])
        .collect()
}

/// True when the span texts concatenate back to the block byte for byte.
pub fn coverage_ok(block: &str, spans: &[Span]) -> bool {
    span_texts(block, spans).concat() == block
}

/// Size-law check. Every span must have `est_tokens` in
/// `[min_tokens, max_tokens]`, except:
///
/// * a whole block shorter than `min_tokens` (one short span),
/// * a single sentence longer than `max_tokens` with no internal boundary,
/// * the last span, which may exceed `max_tokens` by up to
///   `tail_merge_tokens` after a tail merge, or fall short of `min_tokens`
///   (but not of `tail_merge_tokens`) when the trailing text never reached
///   the threshold.
///
/// Returns a description of each violating span; empty means the law holds.
pub fn size_law_violations(block: &str, cfg: &SegmenterConfig, spans: &[Span]) -> Vec<String> {
    let texts = span_texts(block, spans);
    let mut violations = Vec::new();
    for (i, (span, text)) in spans.iter().zip(&texts).enumerate() {
        let est = span.est_tokens;
        if (cfg.min_tokens..=cfg.max_tokens).contains(&est) {
            continue;
        }
        let last = i + 1 == spans.len();
        if last && spans.len() == 1 && est < cfg.min_tokens {
            continue;
        }
        if last
            && est >= cfg.tail_merge_tokens
            && est <= cfg.max_tokens + cfg.tail_merge_tokens
        {
            continue;
        }
        if est > cfg.max_tokens {
            let internal_cut = sentence_cut_re()
                .find_iter(text)
                .any(|m| m.end() > 0 && m.end() < text.len());
            if !internal_cut {
                continue;
            }
        }
        violations.push(format!(
            "span {i} [{}..{}) has est_tokens {} outside [{}, {}]",
            span.start, span.end, est, cfg.min_tokens, cfg.max_tokens
        ));
    }
    violations
}
