//! Rollout corpus data model and JSONL I/O.
//!
//! A corpus is a flat list of sampled rollouts plus indexes by checkpoint and
//! prompt. Records carry their own precomputed per-token NLL vectors (scored
//! under whatever frozen reference produced the data), so nothing here ever
//! needs a model. A loaded corpus is immutable and safe to share across
//! threads.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Identity of one trace: unique within a corpus.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TraceKey {
    pub prompt_id: String,
    pub rollout_id: String,
    pub checkpoint: String,
}

impl TraceKey {
    pub fn new(prompt_id: String, rollout_id: String, checkpoint: String) -> Self {
        Self { prompt_id, rollout_id, checkpoint }
    }
}

impl std::fmt::Display for TraceKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}/{}", self.checkpoint, self.prompt_id, self.rollout_id)
    }
}

/// One sampled trace.
///
/// `correct` is `None` when no verifier ran on this rollout; that is distinct
/// from `Some(false)`. `token_nlls` are nats per response token; when a
/// `response_mask` is present it flags which positions are valid response
/// tokens and must have the same length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub prompt_id: String,
    pub rollout_id: String,
    pub checkpoint: String,
    pub response: String,
    #[serde(default)]
    pub correct: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token_nlls: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response_mask: Option<Vec<bool>>,
}

impl RolloutRecord {
    pub fn key(&self) -> TraceKey {
        TraceKey::new(self.prompt_id.clone(), self.rollout_id.clone(), self.checkpoint.clone())
    }

    fn validate(&self) -> Result<(), String> {
        if let Some(nlls) = &self.token_nlls {
            for (i, v) in nlls.iter().enumerate() {
                if !v.is_finite() || *v < 0.0 {
                    return Err(format!("token_nlls[{i}] = {v} is not a finite non-negative value"));
                }
            }
            if let Some(mask) = &self.response_mask {
                if mask.len() != nlls.len() {
                    return Err(format!(
                        "response_mask length {} does not match token_nlls length {}",
                        mask.len(),
                        nlls.len()
                    ));
                }
            }
        } else if self.response_mask.is_some() {
            return Err("response_mask present without token_nlls".to_string());
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {source}")]
    Parse {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error("line {line}: {message}")]
    Invariant { line: usize, message: String },
    #[error("line {line}: duplicate record key {key}")]
    DuplicateKey { line: usize, key: TraceKey },
    #[error("unknown checkpoint {checkpoint:?}; corpus has {available:?}")]
    UnknownCheckpoint { checkpoint: String, available: Vec<String> },
}

/// An immutable, indexed set of rollout records.
#[derive(Debug, Clone)]
pub struct Corpus {
    records: Vec<RolloutRecord>,
    /// checkpoint -> prompt_id -> indices into `records`.
    by_checkpoint: BTreeMap<String, BTreeMap<String, Vec<usize>>>,
    /// File the corpus was loaded from, when it came from disk.
    source: Option<std::path::PathBuf>,
}

/// All rollouts of one prompt at one checkpoint.
#[derive(Debug)]
pub struct RolloutGroup<'a> {
    pub prompt_id: &'a str,
    pub rollouts: Vec<&'a RolloutRecord>,
}

impl Corpus {
    /// Build a corpus from records, enforcing key uniqueness and per-record
    /// invariants. `line` diagnostics are 1-based positions in the input.
    pub fn from_records(records: Vec<RolloutRecord>) -> Result<Self, CorpusError> {
        let mut by_checkpoint: BTreeMap<String, BTreeMap<String, Vec<usize>>> = BTreeMap::new();
        let mut seen = std::collections::HashSet::new();
        for (i, rec) in records.iter().enumerate() {
            let line = i + 1;
            rec.validate().map_err(|message| CorpusError::Invariant { line, message })?;
            let key = rec.key();
            if !seen.insert(key.clone()) {
                return Err(CorpusError::DuplicateKey { line, key });
            }
            by_checkpoint
                .entry(rec.checkpoint.clone())
                .or_default()
                .entry(rec.prompt_id.clone())
                .or_default()
                .push(i);
        }
        Ok(Self { records, by_checkpoint, source: None })
    }

    /// Load a JSONL corpus. Blank lines are skipped; any malformed or
    /// invariant-violating line is rejected with its line number.
    pub fn load(path: &Path) -> Result<Self, CorpusError> {
        let file = File::open(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let reader = BufReader::new(file);
        let mut records = Vec::new();
        let mut lines = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|source| CorpusError::Io {
                path: path.display().to_string(),
                source,
            })?;
            if line.trim().is_empty() {
                continue;
            }
            let rec: RolloutRecord = serde_json::from_str(&line)
                .map_err(|source| CorpusError::Parse { line: line_no, source })?;
            records.push(rec);
            lines.push(line_no);
        }
        // Re-run construction but surface original line numbers in errors.
        match Self::from_records(records) {
            Ok(mut c) => {
                c.source = Some(path.to_path_buf());
                Ok(c)
            }
            Err(CorpusError::Invariant { line, message }) => {
                Err(CorpusError::Invariant { line: lines[line - 1], message })
            }
            Err(CorpusError::DuplicateKey { line, key }) => {
                Err(CorpusError::DuplicateKey { line: lines[line - 1], key })
            }
            Err(other) => Err(other),
        }
    }

    /// Path this corpus was loaded from, if any.
    pub fn source(&self) -> Option<&Path> {
        self.source.as_deref()
    }

    /// Write the corpus back out as JSONL, one record per line.
    pub fn write(&self, path: &Path) -> Result<(), CorpusError> {
        let file = File::create(path).map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let mut w = BufWriter::new(file);
        for rec in &self.records {
            let json = serde_json::to_string(rec).expect("record serializes");
            writeln!(w, "{json}").map_err(|source| CorpusError::Io {
                path: path.display().to_string(),
                source,
            })?;
        }
        w.flush().map_err(|source| CorpusError::Io {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn records(&self) -> &[RolloutRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Checkpoints present, sorted.
    pub fn checkpoints(&self) -> Vec<&str> {
        self.by_checkpoint.keys().map(String::as_str).collect()
    }

    pub fn has_checkpoint(&self, checkpoint: &str) -> bool {
        self.by_checkpoint.contains_key(checkpoint)
    }

    /// Records of one checkpoint grouped by prompt, groups sorted by
    /// prompt_id. Every record of the checkpoint lands in exactly one group.
    pub fn group_by_prompt(&self, checkpoint: &str) -> Result<Vec<RolloutGroup<'_>>, CorpusError> {
        let prompts = self.by_checkpoint.get(checkpoint).ok_or_else(|| {
            CorpusError::UnknownCheckpoint {
                checkpoint: checkpoint.to_string(),
                available: self.checkpoints().iter().map(|s| s.to_string()).collect(),
            }
        })?;
        Ok(prompts
            .iter()
            .map(|(prompt_id, idxs)| RolloutGroup {
                prompt_id,
                rollouts: idxs.iter().map(|&i| &self.records[i]).collect(),
            })
            .collect())
    }

    /// Records of one checkpoint in load order.
    pub fn checkpoint_records(&self, checkpoint: &str) -> Result<Vec<&RolloutRecord>, CorpusError> {
        let prompts = self.by_checkpoint.get(checkpoint).ok_or_else(|| {
            CorpusError::UnknownCheckpoint {
                checkpoint: checkpoint.to_string(),
                available: self.checkpoints().iter().map(|s| s.to_string()).collect(),
            }
        })?;
        let mut idxs: Vec<usize> = prompts.values().flatten().copied().collect();
        idxs.sort_unstable();
        Ok(idxs.into_iter().map(|i| &self.records[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(prompt: &str, rollout: &str, checkpoint: &str) -> RolloutRecord {
        RolloutRecord {
            prompt_id: prompt.to_string(),
            rollout_id: rollout.to_string(),
            checkpoint: checkpoint.to_string(),
            response: format!("resp {prompt} {rollout}"),
            correct: None,
            token_nlls: None,
            response_mask: None,
        }
    }

    fn write_file(lines: &[&str]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    #[test]
    fn load_two_valid_lines() {
        let f = write_file(&[
            r#"{"prompt_id":"p1","rollout_id":"r0","checkpoint":"sft","response":"a","correct":true,"token_nlls":[0.5,1.0],"response_mask":[true,false]}"#,
            r#"{"prompt_id":"p1","rollout_id":"r1","checkpoint":"sft","response":"b","correct":null}"#,
        ]);
        let corpus = Corpus::load(f.path()).unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.records()[0].token_nlls.as_deref(), Some(&[0.5, 1.0][..]));
        assert_eq!(corpus.records()[1].correct, None);
    }

    #[test]
    fn mask_length_mismatch_names_line() {
        let f = write_file(&[
            r#"{"prompt_id":"p1","rollout_id":"r0","checkpoint":"sft","response":"a"}"#,
            r#"{"prompt_id":"p1","rollout_id":"r1","checkpoint":"sft","response":"b","token_nlls":[0.5,1.0],"response_mask":[true]}"#,
        ]);
        match Corpus::load(f.path()).unwrap_err() {
            CorpusError::Invariant { line, message } => {
                assert_eq!(line, 2);
                assert!(message.contains("response_mask"), "{message}");
            }
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let f = write_file(&[]);
        let corpus = Corpus::load(f.path()).unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn negative_or_nonfinite_nll_rejected() {
        let f = write_file(&[
            r#"{"prompt_id":"p","rollout_id":"r","checkpoint":"c","response":"x","token_nlls":[-0.1]}"#,
        ]);
        assert!(matches!(Corpus::load(f.path()).unwrap_err(), CorpusError::Invariant { line: 1, .. }));
    }

    #[test]
    fn duplicate_key_rejected_with_line() {
        let f = write_file(&[
            r#"{"prompt_id":"p","rollout_id":"r","checkpoint":"c","response":"x"}"#,
            r#"{"prompt_id":"p","rollout_id":"r","checkpoint":"c","response":"y"}"#,
        ]);
        assert!(matches!(
            Corpus::load(f.path()).unwrap_err(),
            CorpusError::DuplicateKey { line: 2, .. }
        ));
    }

    #[test]
    fn grouping_three_prompts_by_eight() {
        let mut records = Vec::new();
        for p in ["p1", "p2", "p3"] {
            for r in 0..8 {
                records.push(rec(p, &format!("r{r}"), "sft"));
            }
        }
        let corpus = Corpus::from_records(records).unwrap();
        let groups = corpus.group_by_prompt("sft").unwrap();
        assert_eq!(groups.len(), 3);
        assert!(groups.iter().all(|g| g.rollouts.len() == 8));
        // Sorted by prompt id; union covers everything exactly once.
        let ids: Vec<_> = groups.iter().map(|g| g.prompt_id).collect();
        assert_eq!(ids, vec!["p1", "p2", "p3"]);
        let total: usize = groups.iter().map(|g| g.rollouts.len()).sum();
        assert_eq!(total, corpus.len());
    }

    #[test]
    fn grouping_single_rollout() {
        let corpus = Corpus::from_records(vec![rec("p", "r", "sft")]).unwrap();
        let groups = corpus.group_by_prompt("sft").unwrap();
        assert_eq!(groups.len(), 1);
        assert_eq!(groups[0].rollouts.len(), 1);
    }

    #[test]
    fn grouping_filters_to_requested_checkpoint() {
        let corpus = Corpus::from_records(vec![
            rec("p1", "r0", "base"),
            rec("p1", "r0", "sft"),
            rec("p2", "r0", "sft"),
        ])
        .unwrap();
        let groups = corpus.group_by_prompt("sft").unwrap();
        let total: usize = groups.iter().map(|g| g.rollouts.len()).sum();
        assert_eq!(total, 2);
        assert!(groups
            .iter()
            .flat_map(|g| &g.rollouts)
            .all(|r| r.checkpoint == "sft"));
    }

    #[test]
    fn unknown_checkpoint_is_lookup_error() {
        let corpus = Corpus::from_records(vec![rec("p", "r", "sft")]).unwrap();
        assert!(matches!(
            corpus.group_by_prompt("rl").unwrap_err(),
            CorpusError::UnknownCheckpoint { .. }
        ));
    }

    #[test]
    fn write_then_load_round_trips() {
        let records = vec![
            RolloutRecord {
                token_nlls: Some(vec![0.0, 2.5]),
                response_mask: Some(vec![true, true]),
                correct: Some(true),
                ..rec("p1", "r0", "sft")
            },
            rec("p2", "r1", "rl"),
        ];
        let corpus = Corpus::from_records(records.clone()).unwrap();
        let f = tempfile::NamedTempFile::new().unwrap();
        corpus.write(f.path()).unwrap();
        let reloaded = Corpus::load(f.path()).unwrap();
        let mut a = corpus.records().to_vec();
        let mut b = reloaded.records().to_vec();
        let sort_key = |r: &RolloutRecord| r.key();
        a.sort_by_key(sort_key);
        b.sort_by_key(sort_key);
        assert_eq!(a, b);
    }
}
