//! Frozen-reference top-k NLL novelty bonus and within-group signal
//! diagnostics.
//!
//! The per-rollout novelty score is the mean of the k largest masked token
//! NLLs under the frozen reference. Within each prompt group the scores of
//! the correct rollouts are z-scored, clipped, and scaled by alpha; incorrect
//! rollouts and skipped groups get a bonus of exactly zero. In a token-level
//! trainer the bonus belongs on the last valid response token; this library
//! records it at sequence level and leaves that placement to the integrator.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::verifiers::RewardBreakdown;

#[derive(Debug, Error)]
pub enum NoveltyError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("nlls length {nlls} != mask length {mask}")]
    LengthMismatch { nlls: usize, mask: usize },
    #[error("no valid tokens under the mask")]
    NoValidTokens,
    #[error("rollout {index} is correct but has no novelty score")]
    MissingScore { index: usize },
    #[error("rollout {rollout_id} of prompt {prompt_id} has no token NLLs")]
    MissingNlls { prompt_id: String, rollout_id: String },
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
}

/// How the group standard deviation is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StdMode {
    /// Divide by n.
    Population,
    /// Divide by n - 1.
    Sample,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoveltyConfig {
    pub alpha: f64,
    pub top_k: usize,
    pub z_clip: f64,
    /// Groups with fewer correct rollouts than this are skipped.
    pub min_group: usize,
    /// Groups whose score std falls below this are skipped.
    pub std_epsilon: f64,
    pub std_mode: StdMode,
}

impl Default for NoveltyConfig {
    fn default() -> Self {
        Self {
            alpha: 0.1,
            top_k: 100,
            z_clip: 2.0,
            min_group: 2,
            std_epsilon: 1e-6,
            std_mode: StdMode::Population,
        }
    }
}

impl NoveltyConfig {
    pub fn validate(&self) -> Result<(), NoveltyError> {
        if self.alpha <= 0.0 {
            return Err(NoveltyError::InvalidConfig("alpha must be positive".into()));
        }
        if self.top_k < 1 {
            return Err(NoveltyError::InvalidConfig("top_k must be at least 1".into()));
        }
        if self.z_clip <= 0.0 {
            return Err(NoveltyError::InvalidConfig("z_clip must be positive".into()));
        }
        if self.min_group < 2 {
            return Err(NoveltyError::InvalidConfig("min_group must be at least 2".into()));
        }
        Ok(())
    }
}

/// Mean of the k largest masked-in NLL values. With fewer than k valid
/// tokens, the mean over all valid tokens.
pub fn topk_nll_score(nlls: &[f64], mask: &[bool], k: usize) -> Result<f64, NoveltyError> {
    if nlls.len() != mask.len() {
        return Err(NoveltyError::LengthMismatch { nlls: nlls.len(), mask: mask.len() });
    }
    let mut valid: Vec<f64> = nlls
        .iter()
        .zip(mask)
        .filter_map(|(&v, &m)| if m { Some(v) } else { None })
        .collect();
    if valid.is_empty() {
        return Err(NoveltyError::NoValidTokens);
    }
    valid.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let take = k.min(valid.len()).max(1);
    Ok(valid[..take].iter().sum::<f64>() / take as f64)
}

/// Masked mean NLL over all valid tokens.
pub fn mean_nll(nlls: &[f64], mask: &[bool]) -> Result<f64, NoveltyError> {
    if nlls.len() != mask.len() {
        return Err(NoveltyError::LengthMismatch { nlls: nlls.len(), mask: mask.len() });
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for (&v, &m) in nlls.iter().zip(mask) {
        if m {
            sum += v;
            count += 1;
        }
    }
    if count == 0 {
        return Err(NoveltyError::NoValidTokens);
    }
    Ok(sum / count as f64)
}

/// Why a whole group received zero bonuses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    TooFewCorrect,
    ZeroVariance,
}

impl std::fmt::Display for SkipReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SkipReason::TooFewCorrect => "too-few-correct",
            SkipReason::ZeroVariance => "zero-variance",
        })
    }
}

/// Input to [`group_bonus`]: one rollout's correctness and (for correct
/// rollouts) its novelty score.
#[derive(Debug, Clone, Copy)]
pub struct ScoredRollout {
    pub correct: bool,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BonusEntry {
    pub score: Option<f64>,
    /// Unclipped z value; present only for correct rollouts in a non-skipped
    /// group.
    pub z_raw: Option<f64>,
    /// Clipped z value actually scaled into the bonus.
    pub z: Option<f64>,
    pub bonus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupBonusReport {
    pub entries: Vec<BonusEntry>,
    pub skip: Option<SkipReason>,
}

fn group_std(scores: &[f64], mean: f64, mode: StdMode) -> f64 {
    let n = scores.len() as f64;
    let ss: f64 = scores.iter().map(|s| (s - mean) * (s - mean)).sum();
    match mode {
        StdMode::Population => (ss / n).sqrt(),
        StdMode::Sample => {
            if scores.len() < 2 {
                0.0
            } else {
                (ss / (n - 1.0)).sqrt()
            }
        }
    }
}

/// Compute bonuses for one prompt group. Correct rollouts must carry scores.
pub fn group_bonus(
    group: &[ScoredRollout],
    cfg: &NoveltyConfig,
) -> Result<GroupBonusReport, NoveltyError> {
    cfg.validate()?;
    for (index, r) in group.iter().enumerate() {
        if r.correct && r.score.is_none() {
            return Err(NoveltyError::MissingScore { index });
        }
    }
    let correct_scores: Vec<f64> =
        group.iter().filter(|r| r.correct).map(|r| r.score.unwrap()).collect();

    let zero_entries = |skip| GroupBonusReport {
        entries: group
            .iter()
            .map(|r| BonusEntry { score: r.score, z_raw: None, z: None, bonus: 0.0 })
            .collect(),
        skip: Some(skip),
    };

    if correct_scores.len() < cfg.min_group {
        return Ok(zero_entries(SkipReason::TooFewCorrect));
    }
    let mean = correct_scores.iter().sum::<f64>() / correct_scores.len() as f64;
    let std = group_std(&correct_scores, mean, cfg.std_mode);
    if std < cfg.std_epsilon {
        return Ok(zero_entries(SkipReason::ZeroVariance));
    }

    let entries = group
        .iter()
        .map(|r| {
            if r.correct {
                let s = r.score.unwrap();
                let z_raw = (s - mean) / std;
                let z = z_raw.clamp(-cfg.z_clip, cfg.z_clip);
                BonusEntry { score: r.score, z_raw: Some(z_raw), z: Some(z), bonus: cfg.alpha * z }
            } else {
                BonusEntry { score: r.score, z_raw: None, z: None, bonus: 0.0 }
            }
        })
        .collect();
    Ok(GroupBonusReport { entries, skip: None })
}

/// Fold a group bonus into a base reward: sets the novelty component and
/// updates the total.
pub fn shaped_reward(base: &RewardBreakdown, bonus: f64) -> RewardBreakdown {
    let mut shaped = base.clone();
    shaped.novelty = bonus;
    shaped.total = shaped.exact + shaped.completion + 0.1 * shaped.format + shaped.novelty;
    shaped
}

/// One diagnostics row: within-prompt population standard deviations of the
/// candidate per-rollout signals, averaged over prompts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignalDiagnostics {
    pub checkpoint: String,
    pub n_prompts: usize,
    pub mean_nll_std: f64,
    /// (k, averaged within-prompt std of the top-k score), in k order.
    pub topk_stds: Vec<(usize, f64)>,
}

/// Measure how much within-group spread each candidate signal has on one
/// checkpoint: for every prompt, the population std across its rollouts of
/// the mean NLL and of the top-k NLL score for each k, averaged over prompts.
pub fn signal_diagnostics(
    corpus: &Corpus,
    checkpoint: &str,
    k_list: &[usize],
) -> Result<SignalDiagnostics, NoveltyError> {
    let groups = corpus.group_by_prompt(checkpoint)?;
    let mut mean_stds = Vec::new();
    let mut topk_stds: Vec<Vec<f64>> = vec![Vec::new(); k_list.len()];
    for group in &groups {
        let mut means = Vec::with_capacity(group.rollouts.len());
        let mut scores: Vec<Vec<f64>> = vec![Vec::with_capacity(group.rollouts.len()); k_list.len()];
        for rec in &group.rollouts {
            let nlls = rec.token_nlls.as_ref().ok_or_else(|| NoveltyError::MissingNlls {
                prompt_id: rec.prompt_id.clone(),
                rollout_id: rec.rollout_id.clone(),
            })?;
            let mask = match &rec.response_mask {
                Some(m) => m.clone(),
                None => vec![true; nlls.len()],
            };
            means.push(mean_nll(nlls, &mask)?);
            for (i, &k) in k_list.iter().enumerate() {
                scores[i].push(topk_nll_score(nlls, &mask, k)?);
            }
        }
        let pop_std = |v: &[f64]| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            group_std(v, m, StdMode::Population)
        };
        mean_stds.push(pop_std(&means));
        for (i, s) in scores.iter().enumerate() {
            topk_stds[i].push(pop_std(s));
        }
    }
    let avg = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Ok(SignalDiagnostics {
        checkpoint: checkpoint.to_string(),
        n_prompts: groups.len(),
        mean_nll_std: avg(&mean_stds),
        topk_stds: k_list.iter().copied().zip(topk_stds.iter().map(|v| avg(v))).collect(),
    })
}
