use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::{BufWriter, Write};
use std::sync::mpsc;

use rayon::prelude::*;
use trajsel_bbob::{ProblemId, ProblemInstance};
use trajsel_portfolio::{capture, run, run_first_phase, warm_start, OptimizerKind};

use crate::archive::{self, ArchiveLine};
use crate::error::{io_err, PipelineError, Result};
use crate::plan::{a1_seed, a2_seed, warm_seed, RunKey, Triple};
use crate::ProtocolConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CollectSummary {
    pub reused: usize,
    pub ran: usize,
    pub quarantined: usize,
    pub first_phase_runs: usize,
}

/// Runs the first phase of `t` once and continues it with each of
/// `algorithms`, every continuation running to the largest A2 budget.
pub fn run_triple(cfg: &ProtocolConfig, t: Triple, algorithms: &[OptimizerKind]) -> Result<Vec<ArchiveLine>> {
    let problem = ProblemInstance::new(ProblemId::new(t.function, t.instance, cfg.dimension))?;
    let (a1, state) = run_first_phase(&problem, cfg.a1_budget(), a1_seed(cfg.seed, t))?;
    let switch = capture(&a1, &state)?;
    algorithms
        .iter()
        .map(|&kind| {
            let key = RunKey::new(t, kind);
            let spec = warm_start(kind, &switch, warm_seed(cfg.seed, key));
            let tail = run(kind, &problem, cfg.max_a2_budget(), a2_seed(cfg.seed, key), Some(&spec))?;
            Ok(ArchiveLine::new(a1.concat(&tail), t.rep, problem.f_opt(), &switch))
        })
        .collect()
}

fn validator(cfg: &ProtocolConfig) -> impl Fn(&ArchiveLine) -> std::result::Result<(), String> + '_ {
    let want_len = cfg.a1_budget() + cfg.max_a2_budget();
    move |l: &ArchiveLine| {
        let m = &l.trace.meta;
        if m.dim != cfg.dimension {
            return Err(format!("dimension {} != {}", m.dim, cfg.dimension));
        }
        if m.phase_boundary != cfg.a1_budget() {
            return Err(format!("phase boundary {} != {}", m.phase_boundary, cfg.a1_budget()));
        }
        if l.trace.len() != want_len || l.trace.best_so_far.len() != want_len {
            return Err(format!("trace length {} != {want_len}", l.trace.len()));
        }
        if m.seed != a2_seed(cfg.seed, l.key()) {
            return Err("seed does not match the configured master seed".into());
        }
        Ok(())
    }
}

/// Fills `<out>/archive.jsonl` with every planned run, reusing valid lines
/// already present. New lines are appended by a single writer as they
/// finish; the file is then rewritten in run-key order.
pub fn collect(cfg: &ProtocolConfig) -> Result<CollectSummary> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out).map_err(io_err(&cfg.out))?;
    let path = archive::archive_path(&cfg.out);
    let check = validator(cfg);
    let scan = archive::scan(&path, &check)?;
    archive::append_quarantine(&cfg.out, &scan.quarantined)?;

    let planned: BTreeSet<RunKey> = cfg.run_keys().into_iter().collect();
    let mut lines: BTreeMap<RunKey, String> =
        scan.lines.into_iter().filter(|(k, _)| planned.contains(k)).collect();
    let reused = lines.len();
    let mut todo: BTreeMap<Triple, Vec<OptimizerKind>> = BTreeMap::new();
    for k in &planned {
        if !lines.contains_key(k) {
            todo.entry(k.triple).or_default().push(k.algorithm);
        }
    }
    let first_phase_runs = todo.len();

    let (tx, rx) = mpsc::channel::<(RunKey, String)>();
    let file = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
    let writer = std::thread::spawn(move || -> std::io::Result<Vec<(RunKey, String)>> {
        let mut w = BufWriter::new(file);
        let mut got = Vec::new();
        for (key, raw) in rx {
            writeln!(w, "{raw}")?;
            w.flush()?;
            got.push((key, raw));
        }
        Ok(got)
    });
    let work: Vec<(Triple, Vec<OptimizerKind>)> = todo.into_iter().collect();
    let outcome: Result<()> = work.par_iter().try_for_each_with(tx, |tx, (t, algs)| {
        for line in run_triple(cfg, *t, algs)? {
            tx.send((line.key(), line.to_json())).map_err(|e| PipelineError::Pool(e.to_string()))?;
        }
        Ok(())
    });
    let written = writer
        .join()
        .map_err(|_| PipelineError::Pool("archive writer panicked".into()))?
        .map_err(io_err(&path))?;
    outcome?;
    let ran = written.len();
    lines.extend(written);
    archive::write_canonical(&path, &lines)?;
    Ok(CollectSummary { reused, ran, quarantined: scan.quarantined.len(), first_phase_runs })
}
