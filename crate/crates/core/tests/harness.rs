mod common;

use std::fs;

use jointcnn::harness::TrainConfig;
use jointcnn::harness::{
    evaluate_samples, load_for_checkpoint, prepare, read_summary, run_sweep, test_partition, train,
    write_charts, write_outputs, EvalReport, SweepAxis, CHECKPOINT_FILE, REPORT_FILE,
    RESOLVED_CONFIG_FILE,
};
use jointcnn::metrics::accuracy;
use jointcnn::network::Checkpoint;
use jointcnn::preprocess::augment;
use jointcnn::tensor::Rng;
use jointcnn::Error;

#[test]
fn learns_synthetic_corpus_and_round_trips_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    common::synthetic_corpus(&corpus, 20, 1);
    let mut config = common::small_config(&corpus, &tmp.path().join("run"));
    config.epochs = 120;
    let outcome = train(&config).unwrap();
    assert!(
        outcome.report.train_accuracy.unwrap() >= 0.95,
        "{:?}",
        outcome.report
    );
    assert!(outcome.report.accuracy >= 0.8, "{:?}", outcome.report);
    assert_eq!(outcome.report.train_loss.len(), 120);
    assert_eq!(outcome.report.test_samples(), 12);

    write_outputs(&outcome, &config.output).unwrap();
    let back = EvalReport::read(&config.output.join(REPORT_FILE)).unwrap();
    assert_eq!(back, outcome.report);
    let resolved = fs::read_to_string(config.output.join(RESOLVED_CONFIG_FILE)).unwrap();
    assert_eq!(TrainConfig::from_text(&resolved).unwrap(), config);
    let ck = Checkpoint::load(&config.output.join(CHECKPOINT_FILE)).unwrap();
    assert_eq!(ck, outcome.checkpoint);

    // Re-scoring the stored checkpoint on the same test recordings agrees.
    let samples = load_for_checkpoint(&ck, &corpus).unwrap();
    let test: Vec<_> = samples
        .into_iter()
        .filter(|s| outcome.report.test_ids.contains(&s.source_id))
        .collect();
    assert_eq!(
        test,
        test_partition(&ck, load_for_checkpoint(&ck, &corpus).unwrap()).unwrap()
    );
    let eval = evaluate_samples(&ck, &test).unwrap();
    assert_eq!(eval.predictions(), outcome.report.predictions.as_slice());
    assert_eq!(accuracy(&eval), outcome.report.accuracy);
}

#[test]
fn identical_configs_give_identical_checkpoints() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    common::synthetic_corpus(&corpus, 6, 2);
    let mut config = common::small_config(&corpus, &tmp.path().join("a"));
    config.epochs = 4;
    config.sigma = 0.2;
    let a = train(&config).unwrap();
    config.output = tmp.path().join("b");
    let b = train(&config).unwrap();
    assert_eq!(
        a.checkpoint.to_bytes().unwrap(),
        b.checkpoint.to_bytes().unwrap()
    );
    assert_eq!(a.report.train_loss, b.report.train_loss);

    config.seed = 1;
    let c = train(&config).unwrap();
    assert_ne!(
        a.checkpoint.to_bytes().unwrap(),
        c.checkpoint.to_bytes().unwrap()
    );
}

#[test]
fn cache_and_raw_corpus_train_identically() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    common::synthetic_corpus(&corpus, 5, 3);
    let mut config = common::small_config(&corpus, &tmp.path().join("raw"));
    config.epochs = 3;
    let prepared = prepare(&config).unwrap();
    let cache = tmp.path().join("cache");
    prepared.write(&cache).unwrap();

    let raw = train(&config).unwrap();
    config.corpus = cache;
    let cached = train(&config).unwrap();
    assert_eq!(
        raw.checkpoint.to_bytes().unwrap(),
        cached.checkpoint.to_bytes().unwrap()
    );

    config.frames = 32;
    assert!(matches!(prepare(&config), Err(Error::Config(_))));
}

#[test]
fn sweep_records_failed_points_and_charts_the_rest() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    common::synthetic_corpus(&corpus, 5, 4);
    let mut config = common::small_config(&corpus, &tmp.path().join("unused"));
    config.epochs = 2;
    let out = tmp.path().join("sweep");
    // Stride 7 leaves too few columns for the second convolution at 64 frames.
    let outcome = run_sweep(&config, SweepAxis::Stride, &[2.0, 3.0, 7.0], &out).unwrap();
    assert_eq!(outcome.rows.len(), 3);
    assert_eq!(outcome.reports.len(), 2);
    assert!(
        outcome.rows[2].error.as_deref().unwrap().contains("conv2"),
        "{:?}",
        outcome.rows[2]
    );
    assert_eq!(
        read_summary(&out.join("summary.csv")).unwrap(),
        outcome.rows
    );
    for p in [
        "stride-2/report.json",
        "stride-3/checkpoint.bin",
        "accuracy-vs-stride.svg",
        "accuracy-vs-stride.csv",
    ] {
        assert!(out.join(p).is_file(), "{p}");
    }
    assert!(!out.join("stride-7").join(REPORT_FILE).exists());
    let svg = fs::read_to_string(out.join("accuracy-vs-stride.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 2);
    assert!(svg.contains("Accuracy vs Stride Length"));

    // Stride changes shapes, never split membership.
    assert_eq!(outcome.reports[0].test_ids, outcome.reports[1].test_ids);

    let r = EvalReport::read(&out.join("stride-3").join(REPORT_FILE)).unwrap();
    assert_eq!(r.config.stride, 3);
    assert_eq!(r.sweep.as_ref().unwrap().axis, "stride");
}

#[test]
fn charts_are_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    common::synthetic_corpus(&corpus, 5, 5);
    let mut config = common::small_config(&corpus, &tmp.path().join("run"));
    config.epochs = 2;
    let report = train(&config).unwrap().report;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let written = write_charts("confusion-heatmap", std::slice::from_ref(&report), &a).unwrap();
    write_charts("confusion-heatmap", std::slice::from_ref(&report), &b).unwrap();
    assert_eq!(written.len(), 2);
    for name in ["confusion.svg", "confusion.csv"] {
        assert_eq!(
            fs::read(a.join(name)).unwrap(),
            fs::read(b.join(name)).unwrap()
        );
    }
    let svg = fs::read_to_string(a.join("confusion.svg")).unwrap();
    assert_eq!(svg.matches("<rect x=").count(), 9);
    let csv = fs::read_to_string(a.join("confusion.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);

    // A plain run has no sweep coordinate to plot.
    assert!(write_charts("axis-line-chart", std::slice::from_ref(&report), &a).is_err());
    assert!(write_charts("pie", &[report], &a).is_err());
}

#[test]
fn divergence_is_reported() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    common::synthetic_corpus(&corpus, 5, 6);
    let mut config = common::small_config(&corpus, &tmp.path().join("run"));
    config.epochs = 5;
    config.learning_rate = 1e300;
    let err = train(&config).unwrap_err();
    assert!(matches!(err, Error::Diverged(_)), "{err}");
}

#[test]
fn sigma_sweep_shares_one_test_partition() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    common::synthetic_corpus(&corpus, 5, 7);
    let mut config = common::small_config(&corpus, &tmp.path().join("unused"));
    config.epochs = 1;
    let out = tmp.path().join("sweep");
    let values = SweepAxis::Sigma.default_values();
    let outcome = run_sweep(&config, SweepAxis::Sigma, &values, &out).unwrap();
    assert_eq!(outcome.reports.len(), 5);
    assert_eq!(read_summary(&out.join("summary.csv")).unwrap().len(), 5);
    assert!(outcome
        .reports
        .windows(2)
        .all(|w| w[0].test_ids == w[1].test_ids));
    let svg = fs::read_to_string(out.join("accuracy-vs-sigma.svg")).unwrap();
    assert_eq!(svg.matches("<circle").count(), 5);
    assert!(svg.contains("Accuracy vs Noise"));
}

#[test]
fn absent_sigma_matches_zero_sigma() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    common::synthetic_corpus(&corpus, 5, 8);
    let base = common::small_config(&corpus, &tmp.path().join("run"));
    let text: String = base
        .to_text()
        .lines()
        .filter(|l| !l.starts_with("sigma=") && !l.starts_with("epochs="))
        .map(|l| format!("{l}\n"))
        .collect();
    let absent = TrainConfig::from_text(&(text.clone() + "epochs=3\n")).unwrap();
    let zero = TrainConfig::from_text(&(text + "epochs=3\nsigma=0\n")).unwrap();
    let (a, b) = (train(&absent).unwrap(), train(&zero).unwrap());
    assert_eq!(
        a.checkpoint.to_bytes().unwrap(),
        b.checkpoint.to_bytes().unwrap()
    );
    assert_eq!(a.report.train_loss, b.report.train_loss);
    assert_eq!(a.report.predictions, b.report.predictions);
}

#[test]
fn augmentation_only_sees_training_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    // Uneven class sizes so balancing has to synthesise samples.
    common::synthetic_corpus(&corpus, 6, 9);
    for k in 0..3 {
        fs::remove_file(corpus.join(format!("motion b/{k:03}.txt"))).unwrap();
    }
    let config = common::small_config(&corpus, &tmp.path().join("run"));
    let prepared = prepare(&config).unwrap();
    let train_ids: Vec<String> = prepared
        .train_samples()
        .iter()
        .map(|s| s.source_id.clone())
        .collect();
    let test_ids: Vec<String> = prepared
        .test_samples()
        .iter()
        .map(|s| s.source_id.clone())
        .collect();
    assert!(train_ids.iter().all(|id| !test_ids.contains(id)));
    let balanced = augment(&prepared.train_samples(), 0.3, &Rng::new(1)).unwrap();
    assert!(balanced.iter().any(|s| s.synthetic));
    for s in &balanced {
        assert!(train_ids.contains(&s.source_id), "{}", s.source_id);
    }
}

#[test]
fn reference_config_parses() {
    let path = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.cfg");
    let c = TrainConfig::from_text(&fs::read_to_string(path).unwrap()).unwrap();
    c.validate().unwrap();
    assert_eq!((c.stride, c.sigma, c.frames), (5, 0.3, 1961));
    let plan = c.architecture(12).shape_plan().unwrap();
    assert_eq!(plan.flatten, 6080);
}
