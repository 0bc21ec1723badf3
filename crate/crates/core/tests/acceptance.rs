//! The ten acceptance criteria. Each prints one PASS/FAIL line to stderr
//! (bypassing output capture, so the lines show in ordinary `cargo test`
//! logs); the test fails if any criterion fails.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use trajsel_bbob::{ProblemId, ProblemInstance};
use trajsel_core::archive::{self, ArchiveLine};
use trajsel_core::select::{gap_closed, SubsetResult};
use trajsel_core::tables::{fixed_budget_performance, FeatureRow};
use trajsel_core::train::{r2_file, train_all};
use trajsel_core::{pipeline, ProtocolConfig, Stage, TargetType, Triple};
use trajsel_ela::{compute_features, feature_schema, raw_features, SampleSet};
use trajsel_forest::{fit_tree, Criterion, HyperGrid, MaxFeatures, Node, TreeParams};
use trajsel_portfolio::{warm_start, OptimizerKind, SwitchState};

// Tolerances and thresholds.
const DESK_TIME_LIMIT: Duration = Duration::from_secs(30 * 60);
const MIN_LOG_WINS: usize = 4;
const SELECTOR_TO_SBS_MAX: f64 = 1.1;
const SPLIT_TOL: f64 = 1e-9;
const ELA_IDENTITY_TOL: f64 = 1e-9;
const ELA_REFERENCE_REL: f64 = 0.05;
const HESSIAN_TOL: f64 = 1e-12;
const BBOB_REL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn announce(id: usize, name: &str, o: &Outcome) {
    let line = format!("[acceptance {id:>2}] {} {name}: {}\n", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    let _ = std::io::stderr().write_all(line.as_bytes());
}

struct DeskRun {
    cfg: ProtocolConfig,
    elapsed: Duration,
    results: Vec<SubsetResult>,
}

fn desk_run(out: &Path, jobs: usize) -> DeskRun {
    let mut cfg = ProtocolConfig::desk();
    cfg.out = out.to_path_buf();
    cfg.jobs = jobs;
    let t = Instant::now();
    for s in [Stage::Collect, Stage::Features, Stage::Train] {
        pipeline::run_stage(&cfg, s).unwrap_or_else(|e| panic!("{s}: {e}"));
    }
    let results = pipeline::with_pool(jobs, || pipeline::select_stage(&cfg)).unwrap().unwrap();
    let elapsed = t.elapsed();
    pipeline::run_stage(&cfg, Stage::Report).unwrap();
    DeskRun { cfg, elapsed, results }
}

fn synthetic_features(cfg: &ProtocolConfig, seed: u64) -> (Vec<FeatureRow>, trajsel_core::tables::Performance) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = feature_schema().len();
    let features: Vec<FeatureRow> = cfg
        .triples()
        .into_iter()
        .map(|triple| FeatureRow { triple, values: (0..p).map(|_| rng.random_range(-1.0..1.0)).collect(), imputed: vec![] })
        .collect();
    let mut perf = trajsel_core::tables::Performance::new();
    for &b in &cfg.a2_budgets {
        for r in &features {
            for a in cfg.sorted_portfolio() {
                let v = 10f64.powf(r.values[0] * 4.0 - 3.0 - b as f64 / 500.0);
                perf.entry(b).or_default().entry(r.triple).or_default().insert(a, v);
            }
        }
    }
    (features, perf)
}

fn criterion_1(desk: &DeskRun) -> Outcome {
    let full = ProtocolConfig::default();
    let runs = full.run_keys().len();
    let triples = full.triples().len();
    let models = full.model_keys().len();
    // Train every model of the full protocol on a synthetic complete table,
    // with a one-point grid to keep it cheap.
    let mut cfg = full.clone();
    cfg.grid = HyperGrid {
        n_estimators: vec![3],
        max_features: vec![MaxFeatures::Log2],
        max_depth: vec![Some(3)],
        min_samples_split: vec![2],
        criterion: vec![Criterion::SquaredError],
    };
    let (features, perf) = synthetic_features(&cfg, 11);
    let trained = pipeline::with_pool(0, || train_all(&cfg, &features, &perf, None)).unwrap().unwrap();
    let desk_runs = archive::load(&archive::archive_path(&desk.cfg.out)).unwrap().len();
    let desk_models = desk.cfg.model_keys().len();
    let pass = runs == 6000
        && triples == 1200
        && models == 60
        && trained.len() == 60
        && desk_runs == 180
        && desk_models == 60
        && desk.elapsed < DESK_TIME_LIMIT;
    outcome(
        pass,
        format!(
            "full protocol {runs} A2 runs / {triples} A1 runs / {models} models ({} trained on a synthetic table); desk {desk_runs} runs, {desk_models} models, collect+features+train+select in {:.1}s",
            trained.len(),
            desk.elapsed.as_secs_f64()
        ),
    )
}

fn criterion_2(dir: &Path) -> Outcome {
    let mut cfg = ProtocolConfig::default();
    cfg.functions = vec![1, 2];
    cfg.instances = (1..=5).collect();
    cfg.repetitions = 2;
    cfg.a2_budgets = vec![100];
    cfg.out = dir.to_path_buf();
    pipeline::run_stage(&cfg, Stage::Collect).unwrap();
    let mut sums: BTreeMap<(usize, OptimizerKind), (f64, usize)> = BTreeMap::new();
    archive::for_each_line(&archive::archive_path(dir), |l| {
        // Plain log10 of the achieved precision; an exact zero is read as
        // the smallest positive double.
        let p = fixed_budget_performance(&l, 100)?.max(f64::MIN_POSITIVE);
        let e = sums.entry((l.trace.meta.function, l.trace.meta.algorithm)).or_default();
        e.0 += p.log10();
        e.1 += 1;
        Ok(())
    })
    .unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for f in [1, 2] {
        let means: Vec<(OptimizerKind, f64, usize)> =
            OptimizerKind::ALL.iter().map(|a| (*a, sums[&(f, *a)].0 / sums[&(f, *a)].1 as f64, sums[&(f, *a)].1)).collect();
        let bfgs = means[0].1;
        let ok = means[1..].iter().all(|(_, m, _)| bfgs < *m) && means.iter().all(|(_, _, n)| *n >= 10);
        pass &= ok;
        parts.push(format!(
            "f{f}: {}",
            means.iter().map(|(a, m, n)| format!("{a} {m:.2} (n={n})")).collect::<Vec<_>>().join(", ")
        ));
    }
    outcome(pass, format!("mean log10 precision at A2 budget 100; {}", parts.join("; ")))
}

fn read_r2(out: &Path, t: TargetType) -> BTreeMap<String, f64> {
    let mut rdr = csv::Reader::from_path(out.join(r2_file(t))).unwrap();
    rdr.records()
        .map(|r| {
            let r = r.unwrap();
            let vals: Vec<f64> = r.iter().skip(1).map(|v| v.parse().unwrap()).collect();
            (r[0].to_string(), vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect()
}

fn criterion_3(desk: &DeskRun) -> Outcome {
    let raw = read_r2(&desk.cfg.out, TargetType::Raw);
    let log = read_r2(&desk.cfg.out, TargetType::Log10);
    let wins = raw.keys().filter(|a| log[*a] > raw[*a]).count();
    let detail = raw
        .keys()
        .map(|a| format!("{a} log {:.3} vs raw {:.3}", log[a], raw[a]))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(wins >= MIN_LOG_WINS, format!("log models better for {wins}/5 ({detail})"))
}

fn criterion_4(desk: &DeskRun) -> Outcome {
    let budget = desk.cfg.max_a2_budget();
    let r = desk.results.iter().find(|r| !r.subset.members.contains(&OptimizerKind::Bfgs)).unwrap();
    let b = r.baselines.iter().find(|b| b.budget == budget).unwrap();
    let ratio = b.selector_loss / b.sbs_loss;
    outcome(
        ratio <= SELECTOR_TO_SBS_MAX,
        format!(
            "without BFGS at budget {budget}: selector {:.4} vs SBS {} {:.4}, ratio {ratio:.3} (limit {SELECTOR_TO_SBS_MAX})",
            b.selector_loss, b.sbs, b.sbs_loss
        ),
    )
}

fn criterion_5(desk: &DeskRun) -> Outcome {
    let mut n = 0usize;
    let mut negative = 0usize;
    let mut vbs_nonzero = 0usize;
    let mut gap_bad = 0usize;
    for r in &desk.results {
        for recs in r.records.values() {
            for rec in recs {
                n += 1;
                if rec.loss < 0.0 || r.subset.members.iter().any(|a| rec.loss_of(*a) < 0.0) {
                    negative += 1;
                }
                if rec.loss_of(rec.best[0]) != 0.0 {
                    vbs_nonzero += 1;
                }
            }
        }
        for b in &r.baselines {
            if b.vbs_loss != 0.0 {
                vbs_nonzero += 1;
            }
            if b.sbs_loss > 0.0 && (gap_closed(b.sbs_loss, b.vbs_loss) != 1.0 || gap_closed(b.sbs_loss, b.sbs_loss) != 0.0) {
                gap_bad += 1;
            }
        }
    }
    outcome(
        negative == 0 && vbs_nonzero == 0 && gap_bad == 0 && n > 0,
        format!("{n} run/budget/subset records: {negative} negative losses, {vbs_nonzero} nonzero VBS losses, {gap_bad} gap identity violations"),
    )
}

fn child_cost(ys: &[f64], c: Criterion) -> Option<f64> {
    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    match c {
        Criterion::SquaredError => Some(ys.iter().map(|v| (v - mean).powi(2)).sum()),
        Criterion::AbsoluteError => {
            let mut s = ys.to_vec();
            s.sort_by(f64::total_cmp);
            let med = s[s.len() / 2];
            Some(ys.iter().map(|v| (v - med).abs()).sum())
        }
        Criterion::Poisson => {
            (mean > 0.0).then(|| ys.iter().map(|v| if *v > 0.0 { v * (v / mean).ln() } else { 0.0 }).sum())
        }
    }
}

fn split_cost(x: &[Vec<f64>], y: &[f64], f: usize, t: f64, c: Criterion) -> Option<f64> {
    let l: Vec<f64> = x.iter().zip(y).filter(|(r, _)| r[f] <= t).map(|(_, v)| *v).collect();
    let r: Vec<f64> = x.iter().zip(y).filter(|(r, _)| r[f] > t).map(|(_, v)| *v).collect();
    if l.is_empty() || r.is_empty() {
        return None;
    }
    Some(child_cost(&l, c)? + child_cost(&r, c)?)
}

fn criterion_6() -> Outcome {
    let mut mismatches = 0;
    let mut splits = 0;
    for c in [Criterion::SquaredError, Criterion::AbsoluteError, Criterion::Poisson] {
        let mut rng = ChaCha8Rng::seed_from_u64(606 + c as u64);
        for case in 0..100 {
            let n = rng.random_range(2..=20);
            let p = rng.random_range(1..=3);
            let x: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(0..7) as f64 * 0.25).collect()).collect();
            let y: Vec<f64> = (0..n)
                .map(|_| match c {
                    Criterion::Poisson => rng.random_range(0..6) as f64,
                    _ => rng.random_range(-8..8) as f64 * 0.5,
                })
                .collect();
            let tree = fit_tree(&x, &y, &TreeParams { max_depth: Some(1), criterion: c, ..Default::default() }, case).unwrap();
            let mut want: Option<f64> = None;
            if y.iter().any(|v| *v != y[0]) {
                for f in 0..p {
                    for row in &x {
                        if let Some(cost) = split_cost(&x, &y, f, row[f], c) {
                            want = Some(want.map_or(cost, |w| w.min(cost)));
                        }
                    }
                }
            }
            let got = match *tree.root() {
                Node::Split { feature, threshold, .. } => split_cost(&x, &y, feature, threshold, c),
                Node::Leaf { .. } => None,
            };
            splits += got.is_some() as usize;
            let same = match (got, want) {
                (None, None) => true,
                (Some(a), Some(b)) => (a - b).abs() <= SPLIT_TOL * b.abs().max(1.0),
                _ => false,
            };
            mismatches += !same as usize;
        }
    }
    outcome(mismatches == 0, format!("300 datasets (100 per criterion, {splits} with a split): {mismatches} mismatches"))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let x: Vec<Vec<f64>> = (0..150).map(|_| (0..5).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
    let y: Vec<f64> = x.iter().map(|r| 1.5 + 2.0 * r[0] - r[2] + 0.25 * r[4]).collect();
    let adj = compute_features(&SampleSet::new(x.clone(), y).unwrap()).get("ela_meta.lin_simple.adj_r2").unwrap();
    let half: Vec<Vec<f64>> = x[..75].to_vec();
    let hy: Vec<f64> = half.iter().map(|r| r.iter().map(|v| v * v).sum::<f64>()).collect();
    let mut sx = half.clone();
    let mut sy: Vec<f64> = hy.iter().map(|v| 20.0 + v).collect();
    for (r, v) in half.iter().zip(&hy) {
        sx.push(r.iter().map(|c| -c).collect());
        sy.push(20.0 - v);
    }
    let skew = compute_features(&SampleSet::new(sx, sy).unwrap()).get("ela_distr.skewness").unwrap();

    let data = concat!(env!("CARGO_MANIFEST_DIR"), "/../ela/tests/data");
    let mut sets: BTreeMap<String, (Vec<Vec<f64>>, Vec<f64>)> = BTreeMap::new();
    for rec in csv::Reader::from_path(format!("{data}/ela_samples.csv")).unwrap().records() {
        let rec = rec.unwrap();
        let e = sets.entry(rec[0].to_string()).or_default();
        e.0.push((1..rec.len() - 1).map(|i| rec[i].parse().unwrap()).collect());
        e.1.push(rec[rec.len() - 1].parse().unwrap());
    }
    let mut refs: BTreeMap<(String, String), f64> = BTreeMap::new();
    for rec in csv::Reader::from_path(format!("{data}/ela_reference.csv")).unwrap().records() {
        let rec = rec.unwrap();
        let v = match &rec[2] {
            "inf" => f64::INFINITY,
            "-inf" => f64::NEG_INFINITY,
            s => s.parse().unwrap(),
        };
        refs.insert((rec[0].to_string(), rec[1].to_string()), v);
    }
    let names = feature_schema();
    let (mut compared, mut off, mut worst) = (0, 0, 0.0f64);
    for (set, (x, y)) in &sets {
        for (name, got) in names.iter().zip(raw_features(&SampleSet::new(x.clone(), y.clone()).unwrap())) {
            let want = refs[&(set.clone(), name.to_string())];
            let rel = if got == want { 0.0 } else { (got - want).abs() / want.abs().max(1e-9) };
            worst = worst.max(rel);
            compared += 1;
            off += (rel > ELA_REFERENCE_REL) as usize;
        }
    }
    let pass = (adj - 1.0).abs() <= ELA_IDENTITY_TOL && skew.abs() <= ELA_IDENTITY_TOL && sets.len() == 10 && off == 0;
    outcome(
        pass,
        format!(
            "linear adj R² {adj:.12}, symmetric skewness {skew:.2e}, {} reference sets / {compared} values, {off} beyond 5%, worst relative {worst:.2e}",
            sets.len()
        ),
    )
}

fn switch_from(line: &ArchiveLine) -> SwitchState {
    let d = line.best_x.len();
    SwitchState {
        best_x: line.best_x.clone(),
        best_f: line.best_f,
        cma_mean: line.cma_mean.clone(),
        cma_sigma: line.cma_sigma,
        cma_cov: DMatrix::from_row_slice(d, d, &line.cma_c),
        phase_boundary: line.trace.meta.phase_boundary,
        a1_trace_ref: line.triple().to_string(),
    }
}

fn criterion_8(desk: &DeskRun) -> Outcome {
    let lines = archive::load(&archive::archive_path(&desk.cfg.out)).unwrap();
    let increasing = lines.iter().filter(|l| l.trace.best_so_far.windows(2).any(|w| w[1] > w[0])).count();
    let mut states: BTreeMap<Triple, SwitchState> = BTreeMap::new();
    for l in &lines {
        states.entry(l.triple()).or_insert_with(|| switch_from(l));
    }
    let mut worst = 0.0f64;
    let mut checked = 0;
    for s in states.values().take(20) {
        let h = warm_start(OptimizerKind::Bfgs, s, 0).inverse_hessian.unwrap();
        let want = &s.cma_cov * (s.cma_sigma * s.cma_sigma);
        worst = worst.max((h - want).abs().max());
        checked += 1;
    }
    let sigma = 0.7;
    let iso = SwitchState {
        best_x: vec![0.5; 5],
        best_f: 1.0,
        cma_mean: vec![0.5; 5],
        cma_sigma: sigma,
        cma_cov: DMatrix::identity(5, 5),
        phase_boundary: 152,
        a1_trace_ref: "isotropic".into(),
    };
    let h_iso = warm_start(OptimizerKind::Bfgs, &iso, 0).inverse_hessian.unwrap();
    let iso_ok = h_iso == DMatrix::identity(5, 5) * (sigma * sigma);
    outcome(
        increasing == 0 && checked == 20 && worst <= HESSIAN_TOL && iso_ok,
        format!(
            "{} concatenated curves, {increasing} increasing; {checked} states, max |H - σ²C| = {worst:.1e}; σ²I case exact: {iso_ok}",
            lines.len()
        ),
    )
}

fn csv_files(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.extension().is_some_and(|x| x == "csv") {
                out.push(p.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn criterion_9(a: &DeskRun, b: &DeskRun) -> Outcome {
    let fa = csv_files(&a.cfg.out);
    let fb = csv_files(&b.cfg.out);
    let differing: Vec<String> = fa
        .iter()
        .filter(|p| std::fs::read(a.cfg.out.join(p)).ok() != std::fs::read(b.cfg.out.join(p)).ok())
        .map(|p| p.display().to_string())
        .collect();
    let archive_same = std::fs::read(archive::archive_path(&a.cfg.out)).unwrap()
        == std::fs::read(archive::archive_path(&b.cfg.out)).unwrap();
    outcome(
        fa == fb && differing.is_empty() && archive_same && !fa.is_empty(),
        format!(
            "jobs={} vs jobs={}: {} CSV files, {} differ; archive identical: {archive_same}",
            a.cfg.jobs,
            b.cfg.jobs,
            fa.len(),
            differing.len()
        ),
    )
}

fn criterion_10() -> Outcome {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../bbob/tests/data/bbob_probe_values.csv");
    let mut n = 0;
    let mut bad = 0;
    let mut worst = 0.0f64;
    let mut functions = std::collections::BTreeSet::new();
    for rec in csv::Reader::from_path(path).unwrap().records() {
        let rec = rec.unwrap();
        let num = |i: usize| rec[i].parse::<usize>().unwrap();
        let dim = num(2);
        let x: Vec<f64> = (0..dim).map(|k| rec[4 + k].parse().unwrap()).collect();
        let want: f64 = rec[rec.len() - 1].parse().unwrap();
        let got = ProblemInstance::new(ProblemId::new(num(0), num(1), dim)).unwrap().value(&x).unwrap();
        let rel = (got - want).abs() / want.abs().max(1.0);
        worst = worst.max(rel);
        bad += (rel > BBOB_REL) as usize;
        n += 1;
        functions.insert(num(0));
    }
    outcome(
        bad == 0 && functions.len() == 24,
        format!("{n} probes over {} functions, {bad} beyond 1e-6, worst relative {worst:.1e}", functions.len()),
    )
}

#[test]
fn acceptance_criteria() {
    let tmp = tempfile::tempdir().unwrap();
    let serial = desk_run(&tmp.path().join("desk_jobs1"), 1);
    let parallel = desk_run(&tmp.path().join("desk_jobs8"), 8);
    let results = [
        ("protocol arithmetic", criterion_1(&serial)),
        ("BFGS dominance on unimodal functions", criterion_2(&tmp.path().join("unimodal"))),
        ("log-model superiority", criterion_3(&serial)),
        ("selector value without BFGS", criterion_4(&serial)),
        ("loss identities", criterion_5(&serial)),
        ("tree-split oracle", criterion_6()),
        ("feature correctness", criterion_7()),
        ("warm-start contract", criterion_8(&serial)),
        ("determinism and parallel invariance", criterion_9(&serial, &parallel)),
        ("reference suite agreement", criterion_10()),
    ];
    for (i, (name, o)) in results.iter().enumerate() {
        announce(i + 1, name, o);
    }
    let failed: Vec<usize> = results.iter().enumerate().filter(|(_, (_, o))| !o.pass).map(|(i, _)| i + 1).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

// Guards that the desk preset still matches the criteria wording.
#[test]
fn desk_preset_shape() {
    let cfg = ProtocolConfig::desk();
    assert_eq!(cfg.functions, vec![1, 2, 3, 8, 15, 21]);
    assert_eq!(cfg.instances.len(), 2);
    assert_eq!(cfg.repetitions, 3);
    assert_eq!(cfg.run_keys().len(), 180);
    let g = &cfg.grid;
    assert_eq!(g.n_estimators, vec![100]);
    assert_eq!(g.max_depth, vec![Some(8), None]);
    assert_eq!(g.min_samples_split, vec![2]);
    assert_eq!(g.criterion, vec![Criterion::SquaredError]);
}
