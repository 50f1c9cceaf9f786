mod common;

use std::sync::Arc;

use marklns::bench::wilcoxon::{exact_upper_tail, normal_upper_tail, signed_ranks};
use marklns::bench::{
    compare_all, emit_report, read_results_csv, run_experiment, size_band, wilcoxon_one_tailed, ExperimentPlan,
    InstanceSource, Method, Variant, WilcoxonResult,
};
use marklns::guidance::Preset;
use marklns::{DepotMode, SelectorKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_pairs<R: Rng>(rng: &mut R, n: usize) -> Vec<(f64, f64)> {
    // small integer grid so ties and zero differences occur
    (0..n)
        .map(|_| (rng.gen_range(0..12) as f64, rng.gen_range(0..12) as f64))
        .collect()
}

#[test]
fn exact_p_matches_sign_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let n = rng.gen_range(1..=16);
        let pairs = random_pairs(&mut rng, n);
        match (wilcoxon_one_tailed(&pairs), common::wilcoxon_enumerated(&pairs)) {
            (WilcoxonResult::Test(t), Some(p)) => {
                assert_eq!(t.method, Method::Exact);
                assert!((t.p_value - p).abs() < 1e-12, "{} vs {p}", t.p_value);
            }
            (WilcoxonResult::InsufficientData { nonzero }, None) => assert!(nonzero < 5),
            (r, p) => panic!("disagreement: {r:?} vs {p:?}"),
        }
    }
}

#[test]
fn five_wins_give_one_in_thirty_two() {
    let pairs: Vec<(f64, f64)> = [3.0, 1.0, 4.0, 1.5, 9.0].iter().map(|d| (d + 10.0, 10.0)).collect();
    assert_eq!(wilcoxon_one_tailed(&pairs).p_value(), Some(0.03125));
}

#[test]
fn swapping_pairs_gives_the_other_tail() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..100 {
        let pairs = random_pairs(&mut rng, 12);
        let swapped: Vec<(f64, f64)> = pairs.iter().map(|&(a, b)| (b, a)).collect();
        let (Some(p), Some(q)) = (
            wilcoxon_one_tailed(&pairs).p_value(),
            wilcoxon_one_tailed(&swapped).p_value(),
        ) else {
            continue;
        };
        // P(W+ >= w) + P(W+ <= w) = 1 + P(W+ = w)
        let (d, ranks) = signed_ranks(&pairs);
        let w: f64 = d.iter().zip(&ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
        let point = exact_upper_tail(&ranks, w) - exact_upper_tail(&ranks, w + 0.5);
        assert!((p + q - 1.0 - point).abs() < 1e-12);
    }
}

#[test]
fn normal_approximation_above_twenty() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let pairs: Vec<(f64, f64)> = (0..22).map(|_| (rng.gen_range(-10.0..12.0), 0.0)).collect();
        let r = wilcoxon_one_tailed(&pairs);
        let WilcoxonResult::Test(t) = r else {
            panic!("expected a test")
        };
        assert_eq!(t.method, Method::Normal);
        let exact = common::wilcoxon_enumerated(&pairs).unwrap();
        assert!((t.p_value - exact).abs() <= 0.01);
    }
    let ranks: Vec<f64> = (1..=20).map(f64::from).collect();
    for w in 0..=210 {
        let w = f64::from(w);
        assert!((exact_upper_tail(&ranks, w) - normal_upper_tail(&ranks, w)).abs() <= 0.01);
    }
}

#[test]
fn too_few_differences() {
    let pairs = vec![(1.0, 0.0), (2.0, 0.0), (3.0, 3.0), (4.0, 4.0), (5.0, 0.0), (6.0, 0.0)];
    assert_eq!(
        wilcoxon_one_tailed(&pairs),
        WilcoxonResult::InsufficientData { nonzero: 4 }
    );
}

fn small_plan(runs: u32) -> ExperimentPlan {
    let instances = (0..3)
        .map(|i| {
            InstanceSource::Loaded(Arc::new(common::generated(
                40 + i,
                30 + 10 * i as usize,
                DepotMode::Random,
                40,
            )))
        })
        .collect();
    ExperimentPlan {
        instances,
        variants: vec![
            Variant::baseline(),
            Variant::guided("heuristic", SelectorKind::Heuristic { quantile: 0.5 }, Preset::HgsX),
        ],
        runs,
        iterations: 500,
        workers: 2,
        ..ExperimentPlan::default()
    }
}

#[test]
fn experiment_records_every_cell() {
    let table = run_experiment(&small_plan(5)).unwrap();
    assert!(table.failures.is_empty());
    assert_eq!(table.records.len(), 3 * 2 * 5);
    assert_eq!(table.cells.len(), 6);
    for cell in &table.cells {
        assert!(cell.best_cost as f64 <= cell.avg_cost);
        let seeds: Vec<u64> = table
            .records
            .iter()
            .filter(|r| r.instance == cell.instance && r.variant == cell.variant)
            .map(|r| r.seed)
            .collect();
        assert_eq!(seeds, vec![0, 1, 2, 3, 4]);
    }
}

#[test]
fn experiments_are_reproducible() {
    let strip = |t: marklns::bench::ResultTable| {
        t.records
            .into_iter()
            .map(|r| (r.instance, r.variant, r.run, r.seed, r.cost, r.customers))
            .collect::<Vec<_>>()
    };
    let a = strip(run_experiment(&small_plan(2)).unwrap());
    let b = strip(run_experiment(&small_plan(2)).unwrap());
    assert_eq!(a, b);
}

#[test]
fn report_files_round_trip() {
    let table = run_experiment(&small_plan(2)).unwrap();
    let tests = compare_all(&table, "baseline");
    assert_eq!(tests.len(), 1);
    let dir = tempfile::tempdir().unwrap();
    let files = emit_report(&table, &tests, dir.path()).unwrap();
    let back = read_results_csv(&files.results_csv).unwrap();
    assert_eq!(back.len(), table.records.len());
    assert!(back
        .iter()
        .zip(&table.records)
        .all(|(a, b)| a.cost == b.cost && a.seed == b.seed));
    let stats: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&files.stats_json).unwrap()).unwrap();
    assert!(stats.is_array());
    assert!(std::fs::read_to_string(&files.summary_txt)
        .unwrap()
        .contains("heuristic"));
}

#[test]
fn size_bands() {
    assert_eq!(size_band(99), "1-99");
    assert_eq!(size_band(100), "100-200");
    assert_eq!(size_band(1000), "751-1000");
    assert_eq!(size_band(1001), ">1000");
}

#[test]
fn plan_file_parsing() {
    let text =
        "runs = 3\niterations = 200\nvariant = baseline\nvariant = g selector=heuristic quantile=0.4 preset=filo-x\n";
    let plan = ExperimentPlan::parse(text, std::path::Path::new(".")).unwrap();
    assert_eq!(plan.runs, 3);
    assert_eq!(plan.variants.len(), 2);
    let cfg = plan.variants[1].guidance_config(100).unwrap();
    assert_eq!(cfg.selector, SelectorKind::Heuristic { quantile: 0.4 });
    assert_eq!((cfg.threshold, cfg.aspiration), Preset::FiloX.params(100));
    assert!(ExperimentPlan::parse("runs = 0\n", std::path::Path::new(".")).is_err());
    assert_eq!(ExperimentPlan::seed_of(1), 0);
}
