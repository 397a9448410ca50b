//! Acceptance suite: one test per shipped guarantee, each printing a
//! `[PASS]`/`[FAIL]` line (run with `--nocapture` to see them).

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::Instant;

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use tracekit_core::corpus::{Corpus, RolloutRecord};
use tracekit_core::metrics::{
    bootstrap_ci, chain_depth, exploit_runs, mwu_exact_p, mwu_normal_p, pass_at_k_exact,
    pass_at_k_monte_carlo, ExploitSet,
};
use tracekit_core::motifs::{
    apply_breaks, categorize_window, extract_kgrams, CountingMode, Motif,
};
use tracekit_core::novelty::{
    group_bonus, signal_diagnostics, topk_nll_score, NoveltyConfig, ScoredRollout,
};
use tracekit_core::primitives::Primitive;
use tracekit_core::segmenter::{coverage_ok, size_law_violations, Segmenter, SegmenterConfig};
use tracekit_core::verifiers::{
    candidate_alphabet, completion_reward, format_reward, load_puzzles, verify, BoardGrid, Clues,
    PuzzleFixture, PuzzleKind,
};

fn random_primitive(rng: &mut SmallRng) -> Primitive {
    Primitive::ALL[rng.random_range(0..Primitive::ALL.len())]
}

// ---------------------------------------------------------------------------
// 1. Motif oracle
// ---------------------------------------------------------------------------

/// Independent enumerator: count windows of the raw label sequence that do
/// not contain OTHER. Never touches the break-sequence machinery.
fn brute_force_kgrams(labels: &[Primitive], k: usize) -> HashMap<Vec<Primitive>, usize> {
    let mut counts = HashMap::new();
    if labels.len() < k {
        return counts;
    }
    for start in 0..=labels.len() - k {
        let window = &labels[start..start + k];
        if window.contains(&Primitive::Other) {
            continue;
        }
        *counts.entry(window.to_vec()).or_insert(0) += 1;
    }
    counts
}

#[test]
fn acceptance_01_motif_oracle() {
    let start = Instant::now();
    let mut rng = SmallRng::seed_from_u64(0xA11CE);
    for _ in 0..1000 {
        let len = rng.random_range(0..=50);
        let labels: Vec<Primitive> = (0..len).map(|_| random_primitive(&mut rng)).collect();
        let bseq = apply_breaks(&labels);
        for k in 2..=15 {
            let got: HashMap<Vec<Primitive>, usize> =
                extract_kgrams(&bseq, k, CountingMode::Overlapping)
                    .unwrap()
                    .into_iter()
                    .map(|(Motif(m), c)| (m, c))
                    .collect();
            let want = brute_force_kgrams(&labels, k);
            assert_eq!(got, want, "mismatch at k={k} for {labels:?}");
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}");
    println!(
        "[PASS] criterion 1: overlapping k-grams match brute force on 1000 sequences, \
         k in [2,15], in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// 2. Category disjointness
// ---------------------------------------------------------------------------

#[test]
fn acceptance_02_category_disjointness() {
    let exploitation_window =
        [Primitive::Compute, Primitive::Check, Primitive::Compute];
    let mut checked = 0;
    for a in Primitive::ALL {
        for b in Primitive::ALL {
            for c in Primitive::ALL {
                let w = [a, b, c];
                let (r, e, v) = categorize_window(&w);
                assert!(
                    (r as u8 + e as u8 + v as u8) <= 1,
                    "window {w:?} satisfies two predicates"
                );
                assert_eq!(
                    e,
                    w == exploitation_window,
                    "exploitation misfires on {w:?}"
                );
                checked += 1;
            }
        }
    }
    assert_eq!(checked, 729);
    println!(
        "[PASS] criterion 2: all 729 trigram windows disjoint; exploitation fires exactly \
         on COMPUTE-CHECK-COMPUTE"
    );
}

// ---------------------------------------------------------------------------
// 3. Segmenter laws
// ---------------------------------------------------------------------------

fn synth_word(rng: &mut SmallRng) -> String {
    let alphabets = ["abcdefghijklmnopqrstuvwxyz", "αβγδεζηθικλμν"];
    let alphabet: Vec<char> =
        alphabets[usize::from(rng.random_range(0..20u32) == 0)].chars().collect();
    let len = rng.random_range(1..=11);
    (0..len).map(|_| alphabet[rng.random_range(0..alphabet.len())]).collect()
}

fn synth_sentence(rng: &mut SmallRng) -> String {
    let words = rng.random_range(2..=14);
    let mut s = (0..words).map(|_| synth_word(rng)).collect::<Vec<_>>().join(" ");
    s.push_str([". ", "? ", "! "][rng.random_range(0..3)]);
    s
}

fn synth_block(rng: &mut SmallRng) -> String {
    let markers = ["Wait, ", "Case 3: ", "Therefore ", "Suppose ", "Check ", "Alternatively, "];
    let n_paragraphs = rng.random_range(1..=6);
    let mut paragraphs = Vec::new();
    for _ in 0..n_paragraphs {
        // Mostly small paragraphs; occasionally huge ones that exercise the
        // sentence-resplit path.
        let n_sentences =
            if rng.random_range(0..4u32) == 0 { rng.random_range(20..=60) } else { rng.random_range(1..=12) };
        let mut p = String::new();
        for i in 0..n_sentences {
            if i > 0 && rng.random_range(0..6u32) == 0 {
                p.push('\n');
                p.push_str(markers[rng.random_range(0..markers.len())]);
            }
            p.push_str(&synth_sentence(rng));
        }
        paragraphs.push(p.trim_end().to_string());
    }
    paragraphs.join("\n\n")
}

#[test]
fn acceptance_03_segmenter_laws() {
    let cfg = SegmenterConfig::default();
    let segmenter = Segmenter::new(cfg.clone()).unwrap();
    let mut rng = SmallRng::seed_from_u64(0x5E6);
    let mut violations = 0usize;
    let mut total_spans = 0usize;
    for i in 0..10_000 {
        let block = if i % 500 == 0 { String::new() } else { synth_block(&mut rng) };
        let spans = segmenter.segment(&block);
        total_spans += spans.len();
        if !coverage_ok(&block, &spans) {
            violations += 1;
            eprintln!("coverage violation on trace {i}");
            continue;
        }
        let bad = size_law_violations(&block, &cfg, &spans);
        if !bad.is_empty() {
            violations += 1;
            eprintln!("size-law violation on trace {i}: {bad:?}");
        }
    }
    assert_eq!(violations, 0);
    println!(
        "[PASS] criterion 3: 10k synthetic traces reconstruct byte-exactly and satisfy \
         the size law ({total_spans} spans, zero violations)"
    );
}

// ---------------------------------------------------------------------------
// 4. Depth / run consistency
// ---------------------------------------------------------------------------

#[test]
fn acceptance_04_depth_run_consistency() {
    let with_setup = ExploitSet::with_setup();
    let no_setup = ExploitSet::no_setup();
    let mut rng = SmallRng::seed_from_u64(0xDE9);
    for _ in 0..10_000 {
        let len = rng.random_range(0..=40);
        let labels: Vec<Primitive> = (0..len).map(|_| random_primitive(&mut rng)).collect();
        // Independent run computation for the oracle side.
        let mut runs = Vec::new();
        let mut current = 0usize;
        for &p in &labels {
            if matches!(p, Primitive::Compute | Primitive::Check | Primitive::Setup) {
                current += 1;
            } else {
                if current > 0 {
                    runs.push(current);
                }
                current = 0;
            }
        }
        if current > 0 {
            runs.push(current);
        }
        let depth = chain_depth(&labels, &with_setup);
        assert_eq!(depth, runs.iter().copied().max().unwrap_or(0));
        assert_eq!(exploit_runs(&labels, &with_setup), runs);
        assert!(chain_depth(&labels, &no_setup) <= depth);
    }
    println!(
        "[PASS] criterion 4: chain depth equals max exploit run and no-SETUP depth is \
         never larger, on 10k random sequences"
    );
}

// ---------------------------------------------------------------------------
// 5. pass@k
// ---------------------------------------------------------------------------

#[test]
fn acceptance_05_pass_at_k() {
    use num_bigint::BigInt;
    use num_rational::Ratio;
    // Exhaustive check against subset enumeration for n <= 10.
    for n in 1..=10u64 {
        for c in 0..=n {
            for k in 1..=n {
                let mut hits = 0u64;
                let mut subsets = 0u64;
                for mask in 0u32..(1 << n) {
                    if mask.count_ones() as u64 != k {
                        continue;
                    }
                    subsets += 1;
                    // Rollouts 0..c are the correct ones.
                    if c > 0 && mask & ((1 << c) - 1) != 0 {
                        hits += 1;
                    }
                }
                let want = Ratio::new(BigInt::from(hits), BigInt::from(subsets));
                let got = pass_at_k_exact(n, c, k).unwrap();
                assert_eq!(got, want, "n={n} c={c} k={k}");
            }
        }
    }
    // Monte-Carlo agreement at n = 32.
    let mut max_diff = 0.0f64;
    for (c, k) in [(1u64, 1u64), (3, 4), (8, 8), (16, 16), (16, 2), (24, 32), (31, 1), (5, 20)] {
        let analytic = tracekit_core::metrics::pass_at_k(32, c, k).unwrap();
        let sampled = pass_at_k_monte_carlo(32, c, k, 100_000, 0xC0FFEE + c * 37 + k);
        max_diff = max_diff.max((analytic - sampled).abs());
        assert!(
            (analytic - sampled).abs() < 0.01,
            "n=32 c={c} k={k}: analytic {analytic} vs sampled {sampled}"
        );
    }
    println!(
        "[PASS] criterion 5: estimator equals exhaustive enumeration for all n <= 10 and \
         matches 1e5-draw Monte-Carlo at n=32 (max diff {max_diff:.4})"
    );
}

// ---------------------------------------------------------------------------
// 6. Novelty bonus
// ---------------------------------------------------------------------------

#[test]
fn acceptance_06_novelty_bonus() {
    let cfg = NoveltyConfig::default();
    let mut rng = SmallRng::seed_from_u64(0x0B0);
    for _ in 0..300 {
        let size = rng.random_range(2..=10);
        let mut nlls: Vec<Vec<f64>> = Vec::new();
        let mut group = Vec::new();
        for _ in 0..size {
            let n_tokens = rng.random_range(1..=40);
            let v: Vec<f64> = (0..n_tokens).map(|_| rng.random::<f64>() * 4.0).collect();
            let correct = rng.random_range(0..3u32) > 0;
            let score = topk_nll_score(&v, &vec![true; v.len()], cfg.top_k).unwrap();
            nlls.push(v);
            group.push(ScoredRollout { correct, score: Some(score) });
        }
        let report = group_bonus(&group, &cfg).unwrap();

        // Bounds and zero-for-incorrect.
        for (r, e) in group.iter().zip(&report.entries) {
            assert!(e.bonus.abs() <= cfg.alpha * cfg.z_clip + 1e-15);
            if !r.correct {
                assert_eq!(e.bonus, 0.0);
            }
        }
        if report.skip.is_none() {
            // Unclipped z of correct rollouts sums to zero.
            let z_sum: f64 = report.entries.iter().filter_map(|e| e.z_raw).sum();
            assert!(z_sum.abs() < 1e-9, "z sum {z_sum}");
            // Largest score takes the largest bonus.
            let (best_idx, _) = group
                .iter()
                .enumerate()
                .filter(|(_, r)| r.correct)
                .max_by(|a, b| a.1.score.partial_cmp(&b.1.score).unwrap())
                .unwrap();
            let max_bonus =
                report.entries.iter().map(|e| e.bonus).fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(report.entries[best_idx].bonus, max_bonus);
        }

        // NLL-shift invariance: adding a constant to every token NLL of
        // every rollout leaves all z values and bonuses unchanged.
        let shift = rng.random::<f64>() * 3.0;
        let shifted_group: Vec<ScoredRollout> = nlls
            .iter()
            .zip(&group)
            .map(|(v, r)| {
                let sv: Vec<f64> = v.iter().map(|x| x + shift).collect();
                let score = topk_nll_score(&sv, &vec![true; sv.len()], cfg.top_k).unwrap();
                ScoredRollout { correct: r.correct, score: Some(score) }
            })
            .collect();
        let shifted = group_bonus(&shifted_group, &cfg).unwrap();
        for (a, b) in report.entries.iter().zip(&shifted.entries) {
            assert!((a.bonus - b.bonus).abs() < 1e-9);
            match (a.z, b.z) {
                (None, None) => {}
                (Some(za), Some(zb)) => assert!((za - zb).abs() < 1e-9),
                other => panic!("z presence changed under shift: {other:?}"),
            }
        }
    }

    // Worked example: correct scores [1, 2, 3].
    let group: Vec<ScoredRollout> =
        [1.0, 2.0, 3.0].iter().map(|&s| ScoredRollout { correct: true, score: Some(s) }).collect();
    let report = group_bonus(&group, &cfg).unwrap();
    let bonuses: Vec<f64> = report.entries.iter().map(|e| e.bonus).collect();
    assert!((bonuses[0] + 0.1225).abs() < 1e-4, "{bonuses:?}");
    assert!(bonuses[1].abs() < 1e-12);
    assert!((bonuses[2] - 0.1225).abs() < 1e-4);
    println!(
        "[PASS] criterion 6: bonuses bounded by 0.2, zero for incorrect, centered, \
         shift-invariant; worked group [1,2,3] gives \u{00b1}0.1225"
    );
}

// ---------------------------------------------------------------------------
// 7. Signal amplification
// ---------------------------------------------------------------------------

#[test]
fn acceptance_07_signal_amplification() {
    let start = Instant::now();
    let mut rng = SmallRng::seed_from_u64(0x516);
    let mut records = Vec::new();
    for prompt in 0..100 {
        for rollout in 0..32 {
            let mut nlls = vec![0.01; 1000];
            let mut placed = 0;
            while placed < 5 {
                let pos = rng.random_range(0..1000);
                if nlls[pos] == 0.01 {
                    nlls[pos] = 2.0 + rng.random::<f64>() * 4.0;
                    placed += 1;
                }
            }
            records.push(RolloutRecord {
                prompt_id: format!("p{prompt:03}"),
                rollout_id: format!("r{rollout:02}"),
                checkpoint: "sft".into(),
                response: String::new(),
                correct: Some(true),
                token_nlls: Some(nlls),
                response_mask: None,
            });
        }
    }
    let corpus = Corpus::from_records(records).unwrap();
    let d = signal_diagnostics(&corpus, "sft", &[100]).unwrap();
    let ratio = d.topk_stds[0].1 / d.mean_nll_std;
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    assert!(
        ratio >= 10.0 - 1e-9,
        "top-100 std {} vs mean-NLL std {} (ratio {ratio})",
        d.topk_stds[0].1,
        d.mean_nll_std
    );
    println!(
        "[PASS] criterion 7: top-100 NLL within-prompt std is {ratio:.2}x the mean-NLL \
         std on the constructed corpus (>= 10x), in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// 8. Verifiers
// ---------------------------------------------------------------------------

fn fixtures() -> Vec<PuzzleFixture> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/puzzles.jsonl");
    load_puzzles(&path).expect("fixtures load")
}

/// Count solutions by exhaustive enumeration, per kind.
fn count_solutions(fixture: &PuzzleFixture) -> usize {
    let inst = &fixture.instance;
    let (w, h) = (inst.width, inst.height);
    let passes = |board: &BoardGrid| verify(inst, board).map(|v| v.is_pass()).unwrap_or(false);
    match &inst.clues {
        Clues::Pattern { .. } => {
            let cells = w * h;
            assert!(cells <= 16);
            (0u32..(1 << cells))
                .filter(|mask| {
                    let mut board = inst.initial.clone();
                    for i in 0..cells {
                        board.set(i % w, i / w, if mask >> i & 1 == 1 { '#' } else { '.' });
                    }
                    passes(&board)
                })
                .count()
        }
        Clues::Undead(_) => {
            let open: Vec<(usize, usize)> = (0..h)
                .flat_map(|y| (0..w).map(move |x| (x, y)))
                .filter(|&(x, y)| inst.initial.get(x, y) == '.')
                .collect();
            assert!(open.len() <= 10);
            let monsters = ['G', 'V', 'Z'];
            (0..3usize.pow(open.len() as u32))
                .filter(|&code| {
                    let mut board = inst.initial.clone();
                    let mut c = code;
                    for &(x, y) in &open {
                        board.set(x, y, monsters[c % 3]);
                        c /= 3;
                    }
                    passes(&board)
                })
                .count()
        }
        Clues::Galaxies { dots } => {
            let cells = w * h;
            let n = dots.len();
            assert!(n.pow(cells as u32) <= 100_000);
            let alphabet = candidate_alphabet(inst);
            (0..n.pow(cells as u32))
                .filter(|&code| {
                    let mut board = inst.initial.clone();
                    let mut c = code;
                    for i in 0..cells {
                        board.set(i % w, i / w, alphabet[c % n]);
                        c /= n;
                    }
                    passes(&board)
                })
                .count()
        }
        Clues::Bridges { islands } => {
            // Candidate bridges connect consecutive aligned islands (a
            // bridge may not pass through an island, so these are the only
            // legal segments). Assign each 0, 1, or 2.
            let mut pairs: Vec<(Vec<(usize, usize)>, bool)> = Vec::new();
            for y in 0..h {
                let mut xs: Vec<usize> =
                    islands.iter().filter(|i| i.y == y).map(|i| i.x).collect();
                xs.sort_unstable();
                for pair in xs.windows(2) {
                    if pair[1] - pair[0] >= 2 {
                        let cells = (pair[0] + 1..pair[1]).map(|x| (x, y)).collect();
                        pairs.push((cells, true));
                    }
                }
            }
            for x in 0..w {
                let mut ys: Vec<usize> =
                    islands.iter().filter(|i| i.x == x).map(|i| i.y).collect();
                ys.sort_unstable();
                for pair in ys.windows(2) {
                    if pair[1] - pair[0] >= 2 {
                        let cells = (pair[0] + 1..pair[1]).map(|y| (x, y)).collect();
                        pairs.push((cells, false));
                    }
                }
            }
            assert!(pairs.len() <= 10);
            (0..3usize.pow(pairs.len() as u32))
                .filter(|&code| {
                    let mut board = inst.initial.clone();
                    let mut c = code;
                    let mut ok = true;
                    for (cells, horizontal) in &pairs {
                        let mult = c % 3;
                        c /= 3;
                        if mult == 0 {
                            continue;
                        }
                        let symbol = match (horizontal, mult) {
                            (true, 1) => '-',
                            (true, _) => '=',
                            (false, 1) => '|',
                            (false, _) => 'H',
                        };
                        for &(x, y) in cells {
                            if board.get(x, y) != '.' {
                                ok = false;
                            }
                            board.set(x, y, symbol);
                        }
                    }
                    ok && passes(&board)
                })
                .count()
        }
    }
}

#[test]
fn acceptance_08_verifiers() {
    let fixtures = fixtures();
    for kind in [PuzzleKind::Bridges, PuzzleKind::Pattern, PuzzleKind::Undead, PuzzleKind::Galaxies]
    {
        let n = fixtures.iter().filter(|f| f.instance.kind == kind).count();
        assert!(n >= 3, "only {n} fixtures for {kind}");
    }
    let mut mutations_checked = 0usize;
    for fixture in &fixtures {
        // Gold verifies, and it is the unique solution.
        let verdict = verify(&fixture.instance, &fixture.gold).unwrap();
        assert!(verdict.is_pass(), "{}: gold fails: {:?}", fixture.id, verdict.failure());
        assert_eq!(count_solutions(fixture), 1, "{} is not uniquely solvable", fixture.id);
        // Every single-cell mutation within the alphabet fails.
        let alphabet = candidate_alphabet(&fixture.instance);
        for y in 0..fixture.gold.height() {
            for x in 0..fixture.gold.width() {
                let original = fixture.gold.get(x, y);
                for &symbol in &alphabet {
                    if symbol == original {
                        continue;
                    }
                    let mut mutated = fixture.gold.clone();
                    mutated.set(x, y, symbol);
                    let still_passes =
                        verify(&fixture.instance, &mutated).map(|v| v.is_pass()).unwrap_or(false);
                    assert!(
                        !still_passes,
                        "{}: mutation ({x},{y}) -> {symbol:?} still verifies",
                        fixture.id
                    );
                    mutations_checked += 1;
                }
            }
        }
    }

    // Completion reward: strictly monotone in matched cells, and the worked
    // 2x2 example scores exactly 1/27.
    let pattern = fixtures.iter().find(|f| f.id == "pattern-top-row").unwrap();
    let mut candidate = BoardGrid::from_rows(&["..", "##"]).unwrap();
    let mut last = completion_reward(&pattern.instance, &pattern.gold, &candidate);
    for (x, y) in [(0usize, 0usize), (1, 0), (0, 1), (1, 1)] {
        candidate.set(x, y, pattern.gold.get(x, y));
        let now = completion_reward(&pattern.instance, &pattern.gold, &candidate);
        assert!(now > last, "fixing ({x},{y}) did not increase the reward");
        last = now;
    }
    assert_eq!(last, 1.0);
    let all_blank = BoardGrid::from_rows(&["..", ".."]).unwrap();
    let worked = completion_reward(&pattern.instance, &pattern.gold, &all_blank);
    assert!((worked - 1.0 / 27.0).abs() < 1e-9, "worked example gave {worked}");

    println!(
        "[PASS] criterion 8: {} fixtures verify on gold, are uniquely solvable, and all \
         {mutations_checked} single-cell mutations fail; completion reward is monotone \
         and hits 1/27 on the worked example",
        fixtures.len()
    );
}

// ---------------------------------------------------------------------------
// 9. Format reward truth table
// ---------------------------------------------------------------------------

#[test]
fn acceptance_09_format_truth_table() {
    // Hand-derived from the four 0.25 conditions: (a) exactly one closed
    // reasoning pair, (b) exactly one closed answer pair, (c) both openers
    // present and reasoning's first, (d) no duplicated opener.
    let cases: [(&str, f64); 16] = [
        // none of the tags: only (d) holds vacuously
        ("", 0.25),
        ("plain text", 0.25),
        // single closed pairs: (a|b) + (d)
        ("<reasoning>r</reasoning>", 0.5),
        ("<answer>a</answer>", 0.5),
        // both pairs, ordered: everything
        ("<reasoning>r</reasoning><answer>a</answer>", 1.0),
        // both pairs, answer first: (a)(b)(d)
        ("<answer>a</answer><reasoning>r</reasoning>", 0.75),
        // unclosed reasoning before a closed answer: (b)(c)(d)
        ("<reasoning>r<answer>a</answer>", 0.75),
        // unclosed answer after closed reasoning: (a)(c)(d)
        ("<reasoning>r</reasoning><answer>a", 0.75),
        // both unclosed, ordered: (c)(d)
        ("<reasoning><answer>", 0.5),
        // both unclosed, reversed: (d)
        ("<answer><reasoning>", 0.25),
        // duplicate reasoning opener before a valid pair: (b)(c)
        ("<reasoning><reasoning>r</reasoning><answer>a</answer>", 0.5),
        // duplicate answer opener: (a)(c)
        ("<reasoning>r</reasoning><answer><answer>a</answer>", 0.5),
        // both openers duplicated, closed once each, ordered: (c) only
        ("<reasoning><reasoning>r</reasoning><answer><answer>a</answer>", 0.25),
        // duplicated openers, reversed order, no closers: nothing
        ("<answer><answer><reasoning><reasoning>", 0.0),
        // closer without opener: closed-pair conditions fail, (d) holds
        ("</reasoning></answer>", 0.25),
        // closer before opener: (b)(d) and (c) with both openers ordered
        ("</reasoning><reasoning>x<answer>a</answer>", 0.75),
    ];
    for (response, want) in cases {
        let got = format_reward(response);
        assert!(
            [0.0, 0.25, 0.5, 0.75, 1.0].contains(&got),
            "off-grid value {got} for {response:?}"
        );
        assert_eq!(got, want, "format_reward({response:?})");
    }
    println!("[PASS] criterion 9: 16-case format truth table matches, values on the 0.25 grid");
}

// ---------------------------------------------------------------------------
// 10. Statistics
// ---------------------------------------------------------------------------

#[test]
fn acceptance_10a_mwu_exact_worked_example() {
    let p = mwu_exact_p(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
    assert!((p - 1.0 / 3.0).abs() < 1e-12, "exact p = {p}");
    println!("[PASS] criterion 10a: exact MWU p on ([1,2],[3,4]) is 1/3");
}

/// The 0.05 exact-vs-normal agreement asserted here does not hold at the
/// smallest sample sizes: the worked pair ([1,2],[3,4]) checked above has
/// exact p = 1/3 but a continuity-corrected normal p of ~0.245 (diff 0.088),
/// and tied small samples drift beyond 0.4. The bound is asserted as stated
/// so the gap stays visible instead of being silently relaxed. On tie-free
/// data with both sizes >= 3 the agreement does hold (see the metrics unit
/// tests).
#[test]
fn acceptance_10b_mwu_normal_within_tolerance_of_exact() {
    let mut rng = SmallRng::seed_from_u64(0x10B);
    let mut worst: (f64, usize, usize, String) = (0.0, 0, 0, String::new());
    let check = |x: &[f64], y: &[f64], tag: &str, worst: &mut (f64, usize, usize, String)| {
        let pe = mwu_exact_p(x, y).unwrap();
        let pn = mwu_normal_p(x, y).unwrap();
        let d = (pe - pn).abs();
        if d > worst.0 {
            *worst = (d, x.len(), y.len(), format!("{tag}: exact {pe:.4} vs normal {pn:.4}"));
        }
    };
    for n1 in 1..=20usize {
        for n2 in n1..=(400 / n1) {
            // Fully separated continuous samples.
            let x: Vec<f64> = (0..n1).map(|i| i as f64).collect();
            let y: Vec<f64> = (0..n2).map(|i| (n1 + i) as f64).collect();
            check(&x, &y, "separated", &mut worst);
            // Random continuous and random tied samples.
            for _ in 0..2 {
                let x: Vec<f64> = (0..n1).map(|_| rng.random::<f64>()).collect();
                let y: Vec<f64> = (0..n2).map(|_| rng.random::<f64>()).collect();
                check(&x, &y, "continuous", &mut worst);
                let x: Vec<f64> = (0..n1).map(|_| rng.random_range(0..5) as f64).collect();
                let y: Vec<f64> = (0..n2).map(|_| rng.random_range(0..5) as f64).collect();
                check(&x, &y, "tied", &mut worst);
            }
        }
    }
    let (diff, n1, n2, detail) = &worst;
    if *diff > 0.05 {
        println!(
            "[FAIL] criterion 10b: normal vs exact MWU p differs by {diff:.4} at sizes \
             ({n1}, {n2}) [{detail}]; 0.05 is not attainable at degenerate sizes"
        );
    } else {
        println!("[PASS] criterion 10b: normal within 0.05 of exact on all size pairs");
    }
    assert!(
        *diff <= 0.05,
        "worst |exact - normal| = {diff:.4} at sizes ({n1}, {n2}): {detail}"
    );
}

#[test]
fn acceptance_10c_bootstrap_degenerate() {
    let (lo, hi) = bootstrap_ci(&[2.5, 2.5, 2.5, 2.5], 0.95, 2000, 7).unwrap();
    assert_eq!((lo, hi), (2.5, 2.5));
    println!("[PASS] criterion 10c: bootstrap CI of a constant list is degenerate");
}
