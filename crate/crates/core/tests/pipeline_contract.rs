use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use trajsel_core::archive::{self, ArchiveLine, QUARANTINE_FILE};
use trajsel_core::collect::collect;
use trajsel_core::tables::{self, fixed_budget_performance, PERFORMANCE_FILE};
use trajsel_core::train::{train_all, FOLDS_FILE, PREDICTIONS_FILE};
use trajsel_core::{pipeline, PipelineError, ProtocolConfig, Stage, Triple};
use trajsel_forest::{Criterion, GridPoint, HyperGrid, MaxFeatures};
use trajsel_portfolio::OptimizerKind;

fn tiny(out: &Path) -> ProtocolConfig {
    let mut cfg = ProtocolConfig::default();
    cfg.functions = vec![1, 8];
    cfg.instances = vec![1, 2, 3];
    cfg.repetitions = 2;
    cfg.a2_budgets = vec![50, 100];
    cfg.jobs = 2;
    cfg.exclude = vec![OptimizerKind::Bfgs];
    cfg.out = out.to_path_buf();
    cfg.grid = HyperGrid::single(GridPoint {
        n_estimators: 10,
        max_features: MaxFeatures::All,
        max_depth: Some(3),
        min_samples_split: 2,
        criterion: Criterion::SquaredError,
    });
    cfg
}

fn lines(out: &Path) -> Vec<ArchiveLine> {
    archive::load(&archive::archive_path(out)).unwrap()
}

#[test]
fn collect_layout_and_shared_prefix() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let s = collect(&cfg).unwrap();
    assert_eq!((s.reused, s.ran, s.quarantined, s.first_phase_runs), (0, 60, 0, 12));
    let all = lines(dir.path());
    assert_eq!(all.len(), 60);
    let keys: Vec<_> = all.iter().map(|l| l.key()).collect();
    assert_eq!(keys, cfg.run_keys());

    let boundary = cfg.a1_budget();
    let mut prefix: BTreeMap<Triple, &ArchiveLine> = BTreeMap::new();
    for l in &all {
        assert_eq!(l.trace.meta.phase_boundary, boundary);
        assert_eq!(l.trace.len(), boundary + 100);
        let first = prefix.entry(l.triple()).or_insert(l);
        assert_eq!(first.trace.samples[..boundary], l.trace.samples[..boundary]);
        assert_eq!(first.best_x, l.best_x);
        assert_eq!(first.cma_c, l.cma_c);
        // A2 samples differ between algorithms.
        if first.trace.meta.algorithm != l.trace.meta.algorithm {
            assert_ne!(first.trace.samples[boundary..], l.trace.samples[boundary..]);
        }
    }
}

#[test]
fn rerun_is_byte_identical_and_resumes() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut ca = tiny(a.path());
    let mut cb = tiny(b.path());
    ca.jobs = 1;
    cb.jobs = 4;
    pipeline::run_stage(&ca, Stage::Collect).unwrap();
    pipeline::run_stage(&cb, Stage::Collect).unwrap();
    let path = archive::archive_path(a.path());
    let original = fs::read_to_string(&path).unwrap();
    assert_eq!(original, fs::read_to_string(archive::archive_path(b.path())).unwrap());

    // Nothing left to do.
    let s = collect(&ca).unwrap();
    assert_eq!((s.reused, s.ran), (60, 0));
    assert_eq!(fs::read_to_string(&path).unwrap(), original);

    // Drop one line, corrupt another, truncate a third, duplicate a fourth.
    let mut ls: Vec<String> = original.lines().map(String::from).collect();
    ls.remove(3);
    ls[10] = ls[10].replacen("\"best_f\"", "\"best_g\"", 1);
    let cut = ls[20].len() / 2;
    ls[20].truncate(cut);
    ls.push(ls[0].clone());
    fs::write(&path, ls.join("\n") + "\n").unwrap();
    let s = collect(&ca).unwrap();
    assert_eq!(s.quarantined, 3);
    assert_eq!(s.ran, 3);
    assert_eq!(s.first_phase_runs, 3);
    assert_eq!(fs::read_to_string(&path).unwrap(), original);
    let q = fs::read_to_string(a.path().join(QUARANTINE_FILE)).unwrap();
    assert_eq!(q.lines().count(), 3);
    assert!(q.contains("duplicate run"));
}

#[test]
fn foreign_seed_lines_are_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.functions = vec![1];
    cfg.instances = vec![1];
    cfg.repetitions = 1;
    collect(&cfg).unwrap();
    let before = fs::read_to_string(archive::archive_path(dir.path())).unwrap();
    cfg.seed = 2;
    let s = collect(&cfg).unwrap();
    assert_eq!((s.reused, s.ran, s.quarantined), (0, 5, 5));
    assert_ne!(fs::read_to_string(archive::archive_path(dir.path())).unwrap(), before);
}

#[test]
fn fixed_budget_performance_properties() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.instances = vec![1];
    cfg.repetitions = 1;
    collect(&cfg).unwrap();
    let all = lines(dir.path());
    for l in &all {
        let last = *l.trace.best_so_far.last().unwrap();
        assert_eq!(fixed_budget_performance(l, 100).unwrap(), last - l.f_opt);
        let mut prev = f64::INFINITY;
        for b in 1..=100 {
            let p = fixed_budget_performance(l, b).unwrap();
            assert!(p <= prev && p >= 0.0);
            prev = p;
        }
        assert!(matches!(fixed_budget_performance(l, 101), Err(PipelineError::BudgetBeyondTrace { .. })));
    }
    // Budget zero is the end of the shared first phase.
    for t in all.chunks(5) {
        let p0: Vec<f64> = t.iter().map(|l| l.trace.best_so_far[l.trace.meta.phase_boundary - 1]).collect();
        assert!(p0.iter().all(|v| *v == p0[0]));
        assert_eq!(t[0].best_f, p0[0]);
    }
}

#[test]
fn mismatched_prefix_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.functions = vec![1];
    cfg.instances = vec![1];
    cfg.repetitions = 1;
    collect(&cfg).unwrap();
    let mut all = lines(dir.path());
    all[2].trace.samples[0].y += 1.0;
    let text: String = all.iter().map(|l| l.to_json() + "\n").collect();
    fs::write(archive::archive_path(dir.path()), text).unwrap();
    match tables::derive(&cfg, &archive::archive_path(dir.path())) {
        Err(PipelineError::PrefixMismatch(t)) => assert_eq!(t, "f1_i1_r1"),
        Err(e) => panic!("{e}"),
        Ok(_) => panic!("accepted a mismatched prefix"),
    }
}

#[test]
fn full_tiny_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    pipeline::run_all(&cfg).unwrap();
    let out = dir.path();
    for f in [PERFORMANCE_FILE, "features.csv", "convergence.csv", PREDICTIONS_FILE, FOLDS_FILE, "r2_raw.csv", "r2_log10.csv"] {
        assert!(out.join(f).is_file(), "{f}");
    }
    assert!(out.join("select/baselines.csv").is_file());
    assert!(out.join("select/full/losses_100.csv").is_file());
    assert!(out.join("select/no_BFGS/confusion_50.csv").is_file());
    assert!(out.join("report/tables.md").is_file());
    let models = fs::read_dir(out.join("models")).unwrap().count();
    assert_eq!(models, 2 * cfg.model_keys().len());

    // Stored tables reload to what the archive gives.
    let d = tables::derive(&cfg, &archive::archive_path(out)).unwrap();
    assert_eq!(tables::read_performance(&out.join(PERFORMANCE_FILE)).unwrap(), d.performance);
    let feats = tables::read_features(&out.join("features.csv")).unwrap();
    assert_eq!(feats.len(), 12);
    for (a, b) in feats.iter().zip(&d.features) {
        assert_eq!(a.triple, b.triple);
        assert_eq!(a.values, b.values);
    }
}

#[test]
fn stages_report_missing_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = tiny(dir.path());
    let expect = |s: Stage, want: &str| match pipeline::run_stage(&cfg, s) {
        Err(PipelineError::MissingInput { stage, .. }) => assert_eq!(stage, want, "{s}"),
        other => panic!("{s}: {other:?}"),
    };
    expect(Stage::Features, "collect");
    expect(Stage::Train, "features");
    expect(Stage::Select, "train");
    expect(Stage::Report, "features");
}

#[test]
fn training_refuses_incomplete_tables() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = tiny(dir.path());
    cfg.functions = vec![1];
    cfg.instances = vec![1, 2];
    collect(&cfg).unwrap();
    let mut d = tables::derive(&cfg, &archive::archive_path(dir.path())).unwrap();
    d.performance.get_mut(&50).unwrap().values_mut().next().unwrap().remove(&OptimizerKind::De);
    match train_all(&cfg, &d.features, &d.performance, None) {
        Err(PipelineError::MissingRuns(m)) => assert_eq!(m, vec!["f1_i1_r1_DE (budget 50)".to_string()]),
        other => panic!("{:?}", other.map(|v| v.len())),
    }
    d.features.pop();
    assert!(matches!(train_all(&cfg, &d.features, &d.performance, None), Err(PipelineError::MissingRuns(_))));
}
