mod common;

use std::path::PathBuf;
use std::sync::Arc;

use marklns::guidance::{allowed, Preset};
use marklns::selector::{build_graph_with, decode_marks, forward, load_weights, MarkSet, MarkSource, SparseGraph};
use marklns::{clarke_wright, run_lns, DepotMode, Guidance, GuidanceConfig, LnsConfig, RemarkPolicy, SelectorKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn fixture_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/selector_small.gnnw")
}

fn gnn_config(t: f64) -> GuidanceConfig {
    GuidanceConfig {
        threshold: t,
        selector: SelectorKind::Gnn {
            weights: fixture_path(),
        },
        ..GuidanceConfig::default()
    }
}

#[test]
fn network_marks_compose_the_selector_steps() {
    let inst = common::generated(14, 80, DepotMode::Central, 40);
    let s0 = clarke_wright(&inst);
    let guidance = Guidance::new(gnn_config(0.8)).unwrap();
    let marks = guidance.mark(&inst, &s0);

    let model = load_weights::<f32>(fixture_path()).unwrap();
    let g: SparseGraph<f32> = build_graph_with(&inst, &s0, &guidance.graph_options());
    let probs = forward(&model, &g).unwrap().probs;
    let manual = decode_marks(probs.as_slice().unwrap(), &g, 0.8).unwrap();
    assert_eq!(marks.marked(), manual.marked());
    assert_eq!(marks.source(), MarkSource::Gnn);
    assert!(!marks.is_marked(0));
}

#[test]
fn null_and_missing_models_mark_nothing() {
    let inst = common::generated(15, 30, DepotMode::Edge, 40);
    let s0 = clarke_wright(&inst);
    assert!(Guidance::null().mark(&inst, &s0).is_empty());
    let null = Guidance::new(GuidanceConfig::default()).unwrap();
    assert!(null.mark(&inst, &s0).is_empty());
    let missing = GuidanceConfig {
        selector: SelectorKind::Gnn {
            weights: PathBuf::from("/nonexistent/weights.gnnw"),
        },
        ..GuidanceConfig::default()
    };
    assert!(Guidance::new(missing).is_err());
}

fn allow_rate(p: f64) -> f64 {
    let marks = MarkSet::from_nodes(4, [1, 2], None, MarkSource::Heuristic);
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let draws = 100_000;
    let hits = (0..draws).filter(|i| allowed(&marks, p, 1 + i % 2, &mut rng)).count();
    hits as f64 / draws as f64
}

#[test]
fn aspiration_frequencies() {
    assert!((allow_rate(0.0) - 1.0).abs() <= 0.005);
    assert!((allow_rate(0.65) - 0.35).abs() <= 0.01);
    assert_eq!(allow_rate(1.0), 0.0);
    let marks = MarkSet::from_nodes(4, [1], None, MarkSource::Heuristic);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    assert!((0..1000).all(|_| allowed(&marks, 1.0, 3, &mut rng)));
}

#[test]
fn invalid_settings_are_rejected() {
    let bad_p = GuidanceConfig {
        aspiration: 1.5,
        ..GuidanceConfig::default()
    };
    assert!(Guidance::new(bad_p).is_err());
    assert!(Guidance::new(gnn_config(-0.1)).is_err());
    assert!("every:0".parse::<RemarkPolicy>().is_err());
    assert_eq!("every:25".parse::<RemarkPolicy>().unwrap(), RemarkPolicy::EveryK(25));
    assert_eq!("new-best".parse::<RemarkPolicy>().unwrap(), RemarkPolicy::OnNewBest);
}

#[test]
fn preset_parameters() {
    assert_eq!(Preset::HgsX.params(100), (0.8, 0.65));
    assert_eq!("filo-b".parse::<Preset>().unwrap(), Preset::FiloB);
    let cfg = GuidanceConfig::from_preset(Preset::HgsX, 100, SelectorKind::Null);
    assert_eq!(cfg.aspiration, 0.65);
}

#[test]
fn prohibited_customers_stay_put() {
    let inst = common::generated(16, 60, DepotMode::Random, 40);
    let s0 = clarke_wright(&inst);
    let guidance = Guidance::new(GuidanceConfig {
        aspiration: 1.0,
        selector: SelectorKind::Heuristic { quantile: 0.3 },
        ..GuidanceConfig::default()
    })
    .unwrap();
    let cfg = LnsConfig {
        record_removed: true,
        ..LnsConfig::with_iterations(5_000, 2)
    };
    let (best, trace) = run_lns(&inst, &s0, &cfg, Some(&guidance));
    let marks = trace.final_marks.unwrap();
    assert!(!marks.is_empty());
    for r in &trace.records {
        assert!(r
            .removed_customers
            .as_ref()
            .unwrap()
            .iter()
            .all(|&c| !marks.is_marked(c)));
        assert_eq!(r.removed_marked, 0);
        assert_eq!(r.aspiration_admits, 0);
    }
    assert!(best.cost() <= s0.cost());
}

#[test]
fn periodic_remarking() {
    let inst = common::generated(17, 40, DepotMode::Central, 40);
    let s0 = clarke_wright(&inst);
    let model = Arc::new(load_weights::<f32>(fixture_path()).unwrap());
    let cfg = GuidanceConfig {
        remark_policy: RemarkPolicy::EveryK(100),
        ..gnn_config(0.5)
    };
    let guidance = Guidance::with_model(cfg, model).unwrap();
    let (_, trace) = run_lns(&inst, &s0, &LnsConfig::with_iterations(1_000, 0), Some(&guidance));
    assert_eq!(trace.remarks, 10);
}

#[test]
fn null_guidance_matches_baseline() {
    let inst = common::generated(18, 50, DepotMode::Edge, 40);
    let s0 = clarke_wright(&inst);
    for seed in 0..5 {
        let cfg = LnsConfig::with_iterations(1_000, seed);
        let (_, a) = run_lns(&inst, &s0, &cfg, None);
        let (_, b) = run_lns(&inst, &s0, &cfg, Some(&Guidance::null()));
        assert!(a.same_search(&b));
    }
}
