//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails. Pass criterion numbers to run a subset:
//! `cargo test --test acceptance -- 1 7`.

use std::collections::BTreeSet;
use std::panic::{self, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use guided_forest::data::{simulate_dataset, SyntheticSpec};
use guided_forest::eval::{paired_t_test, run_benchmark, BenchmarkConfig, Method, SplitPlan};
use guided_forest::math::{compute_lambda, normalize_importance};
use guided_forest::pipeline::{grf_select, select_from_importance, train_guide};
use guided_forest::tree::best_split;
use guided_forest::{build_forest, Dataset, ForestConfig, Mode, TreeNode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ContinuousCDF, StudentsT};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

// ---------------------------------------------------------------------------
// 1. split oracle

/// Exact Gini gain as a fraction `num / den`, from integer class counts.
fn exact_gain(left: [i128; 2], right: [i128; 2]) -> (i128, i128) {
    let nl = left[0] + left[1];
    let nr = right[0] + right[1];
    let n = nl + nr;
    let sq = |c: [i128; 2]| c[0] * c[0] + c[1] * c[1];
    let parent = [left[0] + right[0], left[1] + right[1]];
    // imp(p) - nl/n imp(l) - nr/n imp(r), over n^2 nl nr
    let num = -sq(parent) * nl * nr + sq(left) * n * nr + sq(right) * n * nl;
    (num, n * n * nl * nr)
}

struct OracleSplit {
    feature: usize,
    threshold: f64,
    /// weighted gain = quarters * num / (4 * den)
    num: i128,
    den: i128,
}

/// Exhaustive search: every candidate feature, every midpoint between
/// consecutive distinct values, weighted gain compared exactly.
fn oracle_split(rows: &[Vec<f64>], labels: &[usize], candidates: &[usize], quarters: &[i128]) -> Option<OracleSplit> {
    let mut best: Option<OracleSplit> = None;
    for &f in candidates {
        let mut values: Vec<f64> = rows.iter().map(|r| r[f]).collect();
        values.sort_by(f64::total_cmp);
        values.dedup();
        for pair in values.windows(2) {
            let threshold = (pair[0] + pair[1]) / 2.0;
            let (mut left, mut right) = ([0i128; 2], [0i128; 2]);
            for (row, &y) in rows.iter().zip(labels) {
                if row[f] <= threshold {
                    left[y] += 1;
                } else {
                    right[y] += 1;
                }
            }
            let (g, d) = exact_gain(left, right);
            let num = quarters[f] * g;
            let den = 4 * d;
            if num <= 0 {
                continue;
            }
            let better = match &best {
                None => true,
                Some(b) => num * b.den > b.num * den,
            };
            if better {
                best = Some(OracleSplit { feature: f, threshold, num, den });
            }
        }
    }
    best
}

fn criterion_1() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let (mut cases, mut mismatches) = (0usize, 0usize);
    let mut first_mismatch = String::new();
    for n_rows in 1..=8usize {
        for n_features in 1..=3usize {
            for draw in 0..5 {
                let rows: Vec<Vec<f64>> = (0..n_rows)
                    .map(|i| {
                        (0..n_features)
                            .map(|f| if draw == 0 { ((i * 5 + f * 3) % n_rows) as f64 } else { rng.gen_range(0..4) as f64 })
                            .collect()
                    })
                    .collect();
                let weightings: Vec<Vec<i128>> = vec![
                    vec![4; n_features],
                    (0..n_features).map(|_| rng.gen_range(0..=4)).collect(),
                    (0..n_features).map(|_| rng.gen_range(1..=4)).collect(),
                ];
                let subsets: Vec<Vec<usize>> = (1..(1usize << n_features))
                    .map(|mask| (0..n_features).filter(|f| mask >> f & 1 == 1).collect())
                    .collect();
                for labeling in 0..(1usize << n_rows) {
                    let labels: Vec<usize> = (0..n_rows).map(|i| labeling >> i & 1).collect();
                    let data = Dataset::from_rows(&rows, labels.clone(), 2).unwrap();
                    let all: Vec<usize> = (0..n_rows).collect();
                    for quarters in &weightings {
                        let lambda: Vec<f64> = quarters.iter().map(|&q| q as f64 / 4.0).collect();
                        for candidates in &subsets {
                            cases += 1;
                            let got = best_split(&data, &all, candidates, &lambda, 1);
                            let want = oracle_split(&rows, &labels, candidates, quarters);
                            let ok = match (&got, &want) {
                                (None, None) => true,
                                (Some(g), Some(w)) => {
                                    let wg = w.num as f64 / w.den as f64;
                                    g.split.feature == w.feature
                                        && g.split.threshold == w.threshold
                                        && (g.weighted_gain - wg).abs() <= 1e-12
                                }
                                _ => false,
                            };
                            if !ok {
                                mismatches += 1;
                                if first_mismatch.is_empty() {
                                    first_mismatch = format!(
                                        "; first: rows {rows:?} labels {labels:?} lambda {lambda:?} candidates {candidates:?} got {:?} want {:?}",
                                        got.map(|g| (g.split.feature, g.split.threshold)),
                                        want.map(|w| (w.feature, w.threshold))
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    verdict(mismatches == 0, format!("{cases} cases, {mismatches} mismatches{first_mismatch}"))
}

// ---------------------------------------------------------------------------
// 2. gamma = 0 identity

fn random_dataset(seed: u64, n_rows: usize, n_features: usize, n_classes: usize) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<f64> = (0..n_rows * n_features).map(|_| rng.gen_range(-2.0..2.0)).collect();
    // class depends on the first two features plus noise
    let labels: Vec<usize> = (0..n_rows)
        .map(|i| {
            let s = values[i * n_features] + values[i * n_features + 1] + rng.gen_range(-1.0..1.0);
            ((s + 4.0) / 8.0 * n_classes as f64).clamp(0.0, n_classes as f64 - 1.0) as usize
        })
        .collect();
    Dataset::new(values, n_features, labels, n_classes).unwrap()
}

fn criterion_2() -> Verdict {
    let mut notes = Vec::new();
    let mut pass = true;
    for seed in 0..5u64 {
        let data = random_dataset(100 + seed, 80 + 10 * seed as usize, 12 + seed as usize, 2 + (seed % 2) as usize);
        let config = ForestConfig::new(Mode::Rf).with_trees(40).with_seed(7 + seed);
        let guide = train_guide(&data, &config).unwrap();
        let weights = compute_lambda(&normalize_importance(&guide.importance()).unwrap(), 0.0).unwrap();
        let rf = build_forest(&data, &config, None).unwrap();
        let grf = build_forest(&data, &config.clone().with_mode(Mode::Grf).with_gamma(0.0), Some(&weights)).unwrap();
        let (a, b) = (rf.to_model_string(), grf.to_model_string());
        let differing: Vec<(&str, &str)> = a.lines().zip(b.lines()).filter(|(x, y)| x != y).collect();
        let only_mode = a.lines().count() == b.lines().count()
            && differing.len() == 1
            && differing[0] == ("mode RF", "mode GRF");
        pass &= only_mode && rf.model_body() == grf.model_body();
        notes.push(format!("{} lines, {} differ", a.lines().count(), differing.len()));
    }
    verdict(pass, format!("5 datasets; serialized models equal apart from the mode line ({})", notes.join(", ")))
}

// ---------------------------------------------------------------------------
// 3. parallel determinism

fn criterion_3() -> Verdict {
    let available = std::thread::available_parallelism().map_or(1, |n| n.get());
    let max_workers = available.max(8);
    let mut identical = 0;
    for trial in 0..10u64 {
        let spec = SyntheticSpec { n_rows: 150, n_features: 40, relevant_features: (0, 20), seed: trial, ..Default::default() };
        let data = simulate_dataset(&spec).unwrap();
        let base = ForestConfig::new(Mode::Rf).with_trees(60).with_seed(1000 + trial);
        let guide = train_guide(&data, &base).unwrap();
        let weights = compute_lambda(&normalize_importance(&guide.importance()).unwrap(), 1.0).unwrap();
        let grf = base.with_mode(Mode::Grf).with_gamma(1.0);
        let one = build_forest(&data, &grf.clone().with_workers(1), Some(&weights)).unwrap();
        let many = build_forest(&data, &grf.with_workers(max_workers), Some(&weights)).unwrap();
        if one.to_model_string() == many.to_model_string() {
            identical += 1;
        }
    }
    verdict(identical == 10, format!("{identical}/10 trials identical, 1 vs {max_workers} workers ({available} cores)"))
}

// ---------------------------------------------------------------------------
// 4. zero-importance exclusion

fn split_features(tree: &TreeNode) -> impl Iterator<Item = usize> + '_ {
    tree.nodes().filter_map(|n| match n {
        TreeNode::Internal { split, .. } => Some(split.feature),
        TreeNode::Leaf { .. } => None,
    })
}

fn criterion_4() -> Verdict {
    let (n_informative, n_constant) = (40, 100);
    let mut violations = 0;
    let mut zero_importance_splittable = 0;
    for seed in 0..20u64 {
        let base = simulate_dataset(&SyntheticSpec {
            n_rows: 200,
            n_features: n_informative,
            relevant_features: (0, 20),
            seed,
            ..Default::default()
        })
        .unwrap();
        let width = n_informative + n_constant;
        let mut values = Vec::with_capacity(base.n_rows() * width);
        for row in base.rows() {
            values.extend_from_slice(row);
            values.extend((0..n_constant).map(|c| c as f64 * 0.5));
        }
        let data = Dataset::new(values, width, base.labels().to_vec(), 2).unwrap();
        // a small guide leaves some splittable features at zero importance too
        let config = ForestConfig::new(Mode::Rf).with_trees(8).with_seed(seed);
        let guide = train_guide(&data, &config).unwrap();
        let importance = guide.importance();
        assert!(importance.raw()[n_informative..].iter().all(|&v| v == 0.0));
        zero_importance_splittable += importance.raw()[..n_informative].iter().filter(|&&v| v == 0.0).count();
        let config = config.with_trees(200).with_mode(Mode::Grf);
        let (_, grf) = select_from_importance(&data, &importance, 1.0, &config).unwrap();
        violations += grf
            .trees()
            .iter()
            .flat_map(split_features)
            .filter(|&f| importance.raw()[f] == 0.0)
            .count();
    }
    verdict(
        violations == 0,
        format!(
            "20 seeds, {n_constant} constant columns; {violations} splits on zero-importance features \
             ({zero_importance_splittable} non-constant zero-importance features seen)"
        ),
    )
}

// ---------------------------------------------------------------------------
// 5. Code-1 replication

fn criterion_5() -> Verdict {
    let data = simulate_dataset(&SyntheticSpec::default()).unwrap();
    let config = BenchmarkConfig {
        forest: ForestConfig::default().with_trees(500),
        plan: SplitPlan { replicate_count: 100, train_fraction: 0.5, stratified: true, base_seed: 1 },
        ..Default::default()
    };
    let report = run_benchmark(
        &[("code1".to_string(), data)],
        &[Method::Rf, Method::GrfRf, Method::Grf],
        Method::Rf,
        &config,
    )
    .unwrap();
    let d = &report.datasets[0];
    if let Some(why) = &d.failure {
        return verdict(false, why.clone());
    }
    let rf = d.result(Method::Rf).unwrap();
    let grf_rf = d.result(Method::GrfRf).unwrap();
    let grf = d.result(Method::Grf).unwrap();
    let p = grf_rf.comparison.as_ref().unwrap().test.p_value;
    let pass = grf_rf.mean_error < rf.mean_error && p < 0.05 && grf.mean_features < rf.mean_features;
    verdict(
        pass,
        format!(
            "error RF {:.4} vs GRF-RF {:.4} (p = {p:.2e}); features RF {:.1} vs GRF {:.1}",
            rf.mean_error, grf_rf.mean_error, rf.mean_features, grf.mean_features
        ),
    )
}

// ---------------------------------------------------------------------------
// 6. relevant-feature recovery

fn criterion_6() -> Verdict {
    let mut hits = 0;
    let mut sizes = Vec::new();
    for seed in 0..100u64 {
        let data = simulate_dataset(&SyntheticSpec::with_seed(seed)).unwrap();
        let result = grf_select(&data, 1.0, &ForestConfig::default().with_seed(seed)).unwrap();
        let s: BTreeSet<usize> = result.selected_features.iter().copied().collect();
        if s.contains(&0) && s.contains(&20) {
            hits += 1;
        }
        sizes.push(s.len());
    }
    let mean = sizes.iter().sum::<usize>() as f64 / sizes.len() as f64;
    verdict(hits >= 95, format!("features 0 and 20 selected in {hits}/100 seeds (mean |selected| {mean:.1}, 1000 trees)"))
}

// ---------------------------------------------------------------------------
// 7. t-test against statrs

fn criterion_7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = [5, 30, 100][i % 3];
        let shift = rng.gen_range(-0.5..0.5);
        let a: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let b: Vec<f64> = a.iter().map(|x| x + shift + rng.gen_range(-1.0..1.0)).collect();
        let d: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let mean = d.iter().sum::<f64>() / n as f64;
        let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let t = mean / (var / n as f64).sqrt();
        let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).unwrap();
        let reference = 2.0 * dist.cdf(-t.abs());
        let got = paired_t_test(&a, &b).unwrap();
        worst = worst.max((got.p_value - reference).abs());
    }
    verdict(worst <= 1e-6, format!("100 pairs, max |dp| = {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// 8. scaling invariance

fn criterion_8() -> Verdict {
    let mut worst: f64 = 0.0;
    let mut same_sets = 0;
    let mut runs = 0;
    for seed in 0..3u64 {
        let data = simulate_dataset(&SyntheticSpec { n_rows: 200, n_features: 60, seed, ..Default::default() }).unwrap();
        let config = ForestConfig::default().with_trees(100).with_seed(seed);
        let importance = train_guide(&data, &config).unwrap().importance();
        let scaled = importance.scaled(7.3).unwrap();
        for gamma in [1.0, 0.5, 0.1] {
            let (a, _) = select_from_importance(&data, &importance, gamma, &config).unwrap();
            let (b, _) = select_from_importance(&data, &scaled, gamma, &config).unwrap();
            for (x, y) in a.weights.lambda().iter().zip(b.weights.lambda()) {
                worst = worst.max((x - y).abs());
            }
            runs += 1;
            if a.selected_features == b.selected_features {
                same_sets += 1;
            }
        }
    }
    verdict(
        worst <= 1e-12 && same_sets == runs,
        format!("max |d lambda| = {worst:.1e}; selections identical in {same_sets}/{runs}"),
    )
}

// ---------------------------------------------------------------------------
// 9. report format

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/report.txt")
}

/// Small benchmark whose text report is pinned in `tests/golden`.
fn golden_report() -> String {
    let spec = SyntheticSpec { n_rows: 150, n_features: 40, relevant_features: (0, 20), seed: 3, ..Default::default() };
    let config = BenchmarkConfig {
        forest: ForestConfig::default().with_trees(50),
        plan: SplitPlan { replicate_count: 8, base_seed: 5, ..Default::default() },
        ..Default::default()
    };
    let datasets = vec![
        ("synthetic".to_string(), simulate_dataset(&spec).unwrap()),
        ("synthetic-b".to_string(), simulate_dataset(&SyntheticSpec { seed: 4, ..spec }).unwrap()),
    ];
    run_benchmark(&datasets, &Method::ALL, Method::Rf, &config).unwrap().to_text()
}

fn criterion_9() -> Verdict {
    let text = golden_report();
    let path = golden_path();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &text).unwrap();
        return verdict(true, format!("wrote {}", path.display()));
    }
    let Ok(expected) = std::fs::read_to_string(&path) else {
        return verdict(false, format!("missing {} (run with UPDATE_GOLDEN=1)", path.display()));
    };
    let has_marks = text.contains('\u{2218}') || text.contains('\u{2022}');
    let has_tables = text.contains("win-lose-tie") && text.contains("instances") && text.contains("p-values");
    let first_diff = text.lines().zip(expected.lines()).position(|(a, b)| a != b);
    verdict(
        text == expected && has_marks && has_tables,
        match first_diff {
            None if text == expected => format!("report matches {} ({} lines)", path.display(), text.lines().count()),
            None => "report length differs from golden file".to_string(),
            Some(i) => format!("line {} differs from golden file", i + 1),
        },
    )
}

// ---------------------------------------------------------------------------

fn main() {
    let criteria: [(u32, &str, fn() -> Verdict); 9] = [
        (1, "split oracle equivalence", criterion_1),
        (2, "gamma=0 identity", criterion_2),
        (3, "parallel determinism", criterion_3),
        (4, "zero-importance exclusion", criterion_4),
        (5, "synthetic replication", criterion_5),
        (6, "relevant-feature recovery", criterion_6),
        (7, "t-test oracle", criterion_7),
        (8, "scaling invariance", criterion_8),
        (9, "report format", criterion_9),
    ];
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let v = panic::catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        let status = if v.pass { "PASS" } else { "FAIL" };
        println!("criterion {id} [{name}]: {status} - {} ({:.1}s)", v.detail, start.elapsed().as_secs_f64());
        if !v.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
