//! Depth and run statistics, pass@k estimation, solve-set splits, and the
//! nonparametric tests used in the report tables.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};
use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::primitives::Primitive;

/// Rollouts sampled per problem in the standard evaluation protocol.
pub const DEFAULT_ROLLOUTS_PER_PROBLEM: u32 = 32;
/// Sampling temperature of that protocol.
pub const DEFAULT_SAMPLING_TEMPERATURE: f64 = 0.6;

/// Reference mean chain depths measured on OlymMATH-Hard rollouts under the
/// no-SETUP exploit set, for a base / puzzle-SFT / GSPO / GSPO+novelty
/// checkpoint ladder. Documentation values only; they depend on corpora this
/// library does not ship and are never used as test oracles.
pub const REFERENCE_MEAN_DEPTH_NO_SETUP: [(&str, f64); 4] =
    [("base", 0.83), ("sft", 2.27), ("gspo", 4.70), ("gspo_novelty", 3.25)];

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("empty sample")]
    EmptySample,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("non-finite value in sample")]
    NonFinite,
    #[error("solve universes differ: {0}")]
    UniverseMismatch(String),
    #[error("c = {c} exceeds n = {n}")]
    CountExceedsSamples { c: u64, n: u64 },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Exploit runs and chain depth
// ---------------------------------------------------------------------------

/// The label set whose contiguous runs count as exploitation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExploitSet(BTreeSet<Primitive>);

impl ExploitSet {
    /// Default set: COMPUTE, CHECK, SETUP.
    pub fn with_setup() -> Self {
        Self(BTreeSet::from([Primitive::Compute, Primitive::Check, Primitive::Setup]))
    }

    /// Alternate set without SETUP: COMPUTE, CHECK.
    pub fn no_setup() -> Self {
        Self(BTreeSet::from([Primitive::Compute, Primitive::Check]))
    }

    /// Custom set; must be non-empty and must not contain OTHER.
    pub fn new(labels: BTreeSet<Primitive>) -> Result<Self, MetricError> {
        if labels.is_empty() {
            return Err(MetricError::InvalidParameter("exploit set is empty".into()));
        }
        if labels.contains(&Primitive::Other) {
            return Err(MetricError::InvalidParameter("exploit set may not contain OTHER".into()));
        }
        Ok(Self(labels))
    }

    pub fn contains(&self, p: Primitive) -> bool {
        self.0.contains(&p)
    }
}

impl Default for ExploitSet {
    fn default() -> Self {
        Self::with_setup()
    }
}

/// Lengths of the maximal contiguous exploit runs, in order.
pub fn exploit_runs(labels: &[Primitive], exploit: &ExploitSet) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut current = 0usize;
    for &p in labels {
        if exploit.contains(p) {
            current += 1;
        } else if current > 0 {
            runs.push(current);
            current = 0;
        }
    }
    if current > 0 {
        runs.push(current);
    }
    runs
}

/// Longest exploit run; 0 when no exploit label occurs.
pub fn chain_depth(labels: &[Primitive], exploit: &ExploitSet) -> usize {
    exploit_runs(labels, exploit).into_iter().max().unwrap_or(0)
}

/// Mean of the maximal exploit-run lengths; `None` when the trace has no
/// exploit run. Corpus-level means average over traces where this is defined.
pub fn mean_exploit_run(labels: &[Primitive], exploit: &ExploitSet) -> Option<f64> {
    let runs = exploit_runs(labels, exploit);
    if runs.is_empty() {
        return None;
    }
    Some(runs.iter().sum::<usize>() as f64 / runs.len() as f64)
}

// ---------------------------------------------------------------------------
// pass@k
// ---------------------------------------------------------------------------

fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 0..k {
        num *= n - i;
        den *= i + 1;
    }
    num / den
}

/// Unbiased pass@k estimate `1 - C(n-c, k) / C(n, k)` as an exact rational.
pub fn pass_at_k_exact(n: u64, c: u64, k: u64) -> Result<Ratio<BigInt>, MetricError> {
    if c > n {
        return Err(MetricError::CountExceedsSamples { c, n });
    }
    if k < 1 || k > n {
        return Err(MetricError::InvalidParameter(format!("k = {k} outside [1, n = {n}]")));
    }
    let miss = Ratio::new(binomial(n - c, k), binomial(n, k));
    Ok(Ratio::one() - miss)
}

/// [`pass_at_k_exact`] emitted as a float.
pub fn pass_at_k(n: u64, c: u64, k: u64) -> Result<f64, MetricError> {
    Ok(pass_at_k_exact(n, c, k)?.to_f64().expect("ratio in [0,1]"))
}

// ---------------------------------------------------------------------------
// Solve matrix and splits
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveCell {
    /// Rollouts sampled.
    pub n: u32,
    /// Rollouts correct.
    pub c: u32,
}

/// Per (problem, checkpoint) solve counts.
#[derive(Debug, Clone, Default)]
pub struct SolveMatrix {
    cells: BTreeMap<(String, String), SolveCell>,
}

impl SolveMatrix {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        problem: &str,
        checkpoint: &str,
        n: u32,
        c: u32,
    ) -> Result<(), MetricError> {
        if c > n {
            return Err(MetricError::CountExceedsSamples { c: c as u64, n: n as u64 });
        }
        self.cells.insert((problem.to_string(), checkpoint.to_string()), SolveCell { n, c });
        Ok(())
    }

    /// Aggregate a corpus: per (checkpoint, prompt), n counts rollouts whose
    /// `correct` flag is present and c counts the true ones. Rollouts without
    /// a verifier verdict are excluded entirely.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut m = Self::new();
        let mut counts: BTreeMap<(String, String), (u32, u32)> = BTreeMap::new();
        for rec in corpus.records() {
            let Some(correct) = rec.correct else { continue };
            let e = counts.entry((rec.prompt_id.clone(), rec.checkpoint.clone())).or_insert((0, 0));
            e.0 += 1;
            if correct {
                e.1 += 1;
            }
        }
        for ((problem, checkpoint), (n, c)) in counts {
            m.cells.insert((problem, checkpoint), SolveCell { n, c });
        }
        m
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn checkpoints(&self) -> Vec<String> {
        let mut v: Vec<String> = self.cells.keys().map(|(_, cp)| cp.clone()).collect();
        v.sort();
        v.dedup();
        v
    }

    /// Problems and cells of one checkpoint, sorted by problem id.
    pub fn column(&self, checkpoint: &str) -> BTreeMap<&str, SolveCell> {
        self.cells
            .iter()
            .filter(|((_, cp), _)| cp == checkpoint)
            .map(|((problem, _), cell)| (problem.as_str(), *cell))
            .collect()
    }

    /// Read `problem_id,checkpoint,n,c` rows.
    pub fn read_csv(path: &Path) -> Result<Self, MetricError> {
        #[derive(Deserialize)]
        struct Row {
            problem_id: String,
            checkpoint: String,
            n: u32,
            c: u32,
        }
        let mut reader = csv::Reader::from_path(path)?;
        let mut m = Self::new();
        for row in reader.deserialize() {
            let row: Row = row?;
            m.insert(&row.problem_id, &row.checkpoint, row.n, row.c)?;
        }
        Ok(m)
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), MetricError> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["problem_id", "checkpoint", "n", "c"])?;
        for ((problem, checkpoint), cell) in &self.cells {
            w.write_record([problem, checkpoint, &cell.n.to_string(), &cell.c.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Partition of a shared problem universe by which checkpoint solves each
/// problem. "Solved" means at least one correct rollout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SolveSplit {
    pub both: Vec<String>,
    pub only_a: Vec<String>,
    pub only_b: Vec<String>,
    pub neither: Vec<String>,
}

pub fn solve_split(matrix: &SolveMatrix, a: &str, b: &str) -> Result<SolveSplit, MetricError> {
    let col_a = matrix.column(a);
    let col_b = matrix.column(b);
    let universe_a: BTreeSet<&str> = col_a.keys().copied().collect();
    let universe_b: BTreeSet<&str> = col_b.keys().copied().collect();
    if universe_a != universe_b {
        let only_a: Vec<&&str> = universe_a.difference(&universe_b).collect();
        let only_b: Vec<&&str> = universe_b.difference(&universe_a).collect();
        return Err(MetricError::UniverseMismatch(format!(
            "{a} has {only_a:?} not in {b}; {b} has {only_b:?} not in {a}"
        )));
    }
    let mut split = SolveSplit {
        both: Vec::new(),
        only_a: Vec::new(),
        only_b: Vec::new(),
        neither: Vec::new(),
    };
    for problem in universe_a {
        let sa = col_a[problem].c >= 1;
        let sb = col_b[problem].c >= 1;
        let bucket = match (sa, sb) {
            (true, true) => &mut split.both,
            (true, false) => &mut split.only_a,
            (false, true) => &mut split.only_b,
            (false, false) => &mut split.neither,
        };
        bucket.push(problem.to_string());
    }
    Ok(split)
}

// ---------------------------------------------------------------------------
// Mann-Whitney U
// ---------------------------------------------------------------------------

/// Largest `|x| * |y|` for which the exact permutation distribution is used.
pub const MWU_EXACT_LIMIT: usize = 400;

fn check_sample(v: &[f64]) -> Result<(), MetricError> {
    if v.is_empty() {
        return Err(MetricError::EmptySample);
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(MetricError::NonFinite);
    }
    Ok(())
}

/// Midranks of the combined sample, doubled so ties stay integral. Returned
/// in the order x then y.
fn doubled_midranks(x: &[f64], y: &[f64]) -> Vec<u64> {
    let n = x.len() + y.len();
    let mut order: Vec<usize> = (0..n).collect();
    let value = |i: usize| if i < x.len() { x[i] } else { y[i - x.len()] };
    order.sort_by(|&a, &b| value(a).partial_cmp(&value(b)).unwrap());
    let mut doubled = vec![0u64; n];
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && value(order[j]) == value(order[i]) {
            j += 1;
        }
        // Positions i..j share midrank (i+1 + j) / 2; doubled: i + j + 1.
        let d = (i + j + 1) as u64;
        for &idx in &order[i..j] {
            doubled[idx] = d;
        }
        i = j;
    }
    doubled
}

/// U statistic for the first sample, with midrank tie handling.
pub fn mwu_u_statistic(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_sample(x)?;
    check_sample(y)?;
    let doubled = doubled_midranks(x, y);
    let r1: u64 = doubled[..x.len()].iter().sum();
    let n1 = x.len() as f64;
    Ok(r1 as f64 / 2.0 - n1 * (n1 + 1.0) / 2.0)
}

/// Exact two-sided p by enumerating the permutation distribution of the
/// rank sum (dynamic program over subset sizes and doubled-rank sums; ties
/// handled through midranks). Two-sided p doubles the smaller tail, capped
/// at 1.
pub fn mwu_exact_p(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    check_sample(x)?;
    check_sample(y)?;
    let doubled = doubled_midranks(x, y);
    let n = doubled.len();
    // DP over the smaller group; the two-sided p is symmetric in the groups.
    let (m, obs) = if x.len() <= y.len() {
        (x.len(), doubled[..x.len()].iter().sum::<u64>() as usize)
    } else {
        (y.len(), doubled[x.len()..].iter().sum::<u64>() as usize)
    };
    // rows[j][s] = subsets of size j with doubled-rank sum s.
    let mut rows: Vec<Vec<u128>> = (0..=m).map(|j| vec![0u128; 2 * j * n + 1]).collect();
    rows[0][0] = 1;
    for &v in &doubled {
        let v = v as usize;
        for j in (1..=m).rev() {
            let (lo, hi) = rows.split_at_mut(j);
            let prev = &lo[j - 1];
            let cur = &mut hi[0];
            for s in 0..prev.len() {
                if prev[s] != 0 && s + v < cur.len() {
                    cur[s + v] += prev[s];
                }
            }
        }
    }
    let dist = &rows[m];
    let total: u128 = dist.iter().sum();
    let obs = obs.min(dist.len() - 1);
    let p_le: u128 = dist[..=obs].iter().sum();
    let p_ge: u128 = dist[obs..].iter().sum();
    let p = 2.0 * (p_le.min(p_ge) as f64) / total as f64;
    Ok(p.min(1.0))
}

fn erf(x: f64) -> f64 {
    // Abramowitz & Stegun 7.1.26; absolute error < 1.5e-7.
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

/// Two-sided p from the normal approximation with tie-corrected variance and
/// a 0.5 continuity correction toward the mean. Returns 1 when the variance
/// vanishes (all values tied).
pub fn mwu_normal_p(x: &[f64], y: &[f64]) -> Result<f64, MetricError> {
    let u = mwu_u_statistic(x, y)?;
    let doubled = doubled_midranks(x, y);
    let n1 = x.len() as f64;
    let n2 = y.len() as f64;
    let n = n1 + n2;
    // Tie correction: sum t^3 - t over tie groups.
    let mut sorted = doubled.clone();
    sorted.sort_unstable();
    let mut tie_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == sorted[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_sum += t * t * t - t;
        i = j;
    }
    let var = n1 * n2 / 12.0 * ((n + 1.0) - tie_sum / (n * (n - 1.0)));
    if var <= 0.0 {
        return Ok(1.0);
    }
    let mean = n1 * n2 / 2.0;
    let diff = u - mean;
    let corrected = if diff > 0.0 {
        diff - 0.5
    } else if diff < 0.0 {
        diff + 0.5
    } else {
        0.0
    };
    let z = corrected / var.sqrt();
    let p = 2.0 * (1.0 - std_normal_cdf(z.abs()));
    Ok(p.clamp(0.0, 1.0))
}

/// Mann-Whitney U test, two-sided. The p-value is exact (permutation
/// enumeration) when `|x| * |y| <= 400`, otherwise the tie-corrected normal
/// approximation with continuity correction.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<(f64, f64), MetricError> {
    let u = mwu_u_statistic(x, y)?;
    let p = if x.len() * y.len() <= MWU_EXACT_LIMIT {
        mwu_exact_p(x, y)?
    } else {
        mwu_normal_p(x, y)?
    };
    Ok((u, p))
}

// ---------------------------------------------------------------------------
// Bootstrap and percentiles
// ---------------------------------------------------------------------------

/// Percentile bootstrap CI of the mean. Deterministic for a given seed.
pub fn bootstrap_ci(
    values: &[f64],
    level: f64,
    iterations: usize,
    seed: u64,
) -> Result<(f64, f64), MetricError> {
    check_sample(values)?;
    if !(0.0 < level && level < 1.0) {
        return Err(MetricError::InvalidParameter(format!("level = {level} outside (0, 1)")));
    }
    if iterations == 0 {
        return Err(MetricError::InvalidParameter("iterations must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = values.len();
    let mut means = Vec::with_capacity(iterations);
    for _ in 0..iterations {
        let mut sum = 0.0;
        for _ in 0..n {
            sum += values[rng.random_range(0..n)];
        }
        means.push(sum / n as f64);
    }
    means.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let alpha = (1.0 - level) / 2.0;
    let rank = |q: f64| -> usize {
        let r = (q * iterations as f64).ceil() as usize;
        r.clamp(1, iterations) - 1
    };
    Ok((means[rank(alpha)], means[rank(1.0 - alpha)]))
}

/// Nearest-rank percentile: the smallest element whose rank is
/// `ceil(q * n)` (1-based); `q = 0` yields the minimum.
pub fn depth_percentile(depths: &[usize], q: f64) -> Result<f64, MetricError> {
    if depths.is_empty() {
        return Err(MetricError::EmptySample);
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(MetricError::InvalidParameter(format!("q = {q} outside [0, 1]")));
    }
    let mut sorted = depths.to_vec();
    sorted.sort_unstable();
    let rank = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    Ok(sorted[rank - 1] as f64)
}

/// Monte-Carlo pass@k reference: draw k of n without replacement and count
/// draws containing at least one of the c correct rollouts. Test support for
/// the analytic estimator; not used by any production path.
pub fn pass_at_k_monte_carlo(n: u64, c: u64, k: u64, draws: usize, seed: u64) -> f64 {
    let mut rng = SmallRng::seed_from_u64(seed);
    let n = n as usize;
    let c = c as usize;
    let k = k as usize;
    let mut hits = 0usize;
    let mut pool: Vec<usize> = (0..n).collect();
    for _ in 0..draws {
        // Partial Fisher-Yates: the first k entries form the sample.
        for i in 0..k {
            let j = rng.random_range(i..n);
            pool.swap(i, j);
        }
        if pool[..k].iter().any(|&idx| idx < c) {
            hits += 1;
        }
    }
    hits as f64 / draws as f64
}
