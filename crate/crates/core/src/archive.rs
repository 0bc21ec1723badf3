//! JSONL run archive: one concatenated A1+A2 trace per line, with the
//! switch state as extension fields.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trajsel_portfolio::{RunTrace, SwitchState};

use crate::error::{io_err, PipelineError, Result};
use crate::plan::{RunKey, Triple};

pub const ARCHIVE_FILE: &str = "archive.jsonl";
pub const QUARANTINE_FILE: &str = "archive.quarantine.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveLine {
    #[serde(flatten)]
    pub trace: RunTrace,
    pub rep: usize,
    pub f_opt: f64,
    pub best_x: Vec<f64>,
    pub best_f: f64,
    pub cma_mean: Vec<f64>,
    pub cma_sigma: f64,
    #[serde(rename = "cma_C")]
    pub cma_c: Vec<f64>,
}

impl ArchiveLine {
    pub fn new(trace: RunTrace, rep: usize, f_opt: f64, s: &SwitchState) -> Self {
        Self {
            trace,
            rep,
            f_opt,
            best_x: s.best_x.clone(),
            best_f: s.best_f,
            cma_mean: s.cma_mean.clone(),
            cma_sigma: s.cma_sigma,
            cma_c: s.cov_row_major(),
        }
    }

    pub fn triple(&self) -> Triple {
        Triple { function: self.trace.meta.function, instance: self.trace.meta.instance, rep: self.rep }
    }

    pub fn key(&self) -> RunKey {
        RunKey::new(self.triple(), self.trace.meta.algorithm)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("archive lines serialize")
    }
}

pub fn archive_path(out: &Path) -> PathBuf {
    out.join(ARCHIVE_FILE)
}

/// Checks a parsed line against the expected layout.
pub type Validator<'a> = &'a dyn Fn(&ArchiveLine) -> std::result::Result<(), String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Quarantined {
    pub line: usize,
    pub error: String,
    pub raw: String,
}

/// Valid lines keyed by run (raw text kept for the canonical rewrite) and
/// the lines that failed to parse or validate.
pub struct Scan {
    pub lines: BTreeMap<RunKey, String>,
    pub quarantined: Vec<Quarantined>,
}

/// Reads an archive, setting aside corrupt, invalid and duplicate lines.
/// A missing file is an empty archive.
pub fn scan(path: &Path, validate: Validator) -> Result<Scan> {
    let mut out = Scan { lines: BTreeMap::new(), quarantined: Vec::new() };
    let file = match File::open(path) {
        Ok(f) => f,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(out),
        Err(e) => return Err(io_err(path)(e)),
    };
    for (i, raw) in BufReader::new(file).lines().enumerate() {
        let raw = raw.map_err(io_err(path))?;
        if raw.trim().is_empty() {
            continue;
        }
        let mut reject = |error: String| out.quarantined.push(Quarantined { line: i + 1, error, raw: raw.clone() });
        match serde_json::from_str::<ArchiveLine>(&raw) {
            Err(e) => reject(e.to_string()),
            Ok(line) => match validate(&line) {
                Err(e) => reject(e),
                Ok(()) => {
                    let key = line.key();
                    if out.lines.contains_key(&key) {
                        reject(format!("duplicate run {key}"));
                    } else {
                        out.lines.insert(key, raw.clone());
                    }
                }
            },
        }
    }
    Ok(out)
}

pub fn append_quarantine(out: &Path, q: &[Quarantined]) -> Result<()> {
    if q.is_empty() {
        return Ok(());
    }
    let path = out.join(QUARANTINE_FILE);
    let mut f = OpenOptions::new().create(true).append(true).open(&path).map_err(io_err(&path))?;
    for item in q {
        writeln!(f, "{}", serde_json::to_string(item).expect("serializable")).map_err(io_err(&path))?;
    }
    Ok(())
}

/// Rewrites the archive with lines in run-key order, via a temporary file.
pub fn write_canonical(path: &Path, lines: &BTreeMap<RunKey, String>) -> Result<()> {
    let tmp = path.with_extension("jsonl.tmp");
    {
        let f = File::create(&tmp).map_err(io_err(&tmp))?;
        let mut w = BufWriter::new(f);
        for raw in lines.values() {
            writeln!(w, "{raw}").map_err(io_err(&tmp))?;
        }
        w.flush().map_err(io_err(&tmp))?;
    }
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Streams a canonical archive; any bad line is an error.
pub fn for_each_line(path: &Path, mut f: impl FnMut(ArchiveLine) -> Result<()>) -> Result<()> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => PipelineError::MissingInput { path: path.into(), stage: "collect" },
        _ => io_err(path)(e),
    })?;
    for (i, raw) in BufReader::new(file).lines().enumerate() {
        let raw = raw.map_err(io_err(path))?;
        if raw.trim().is_empty() {
            continue;
        }
        let line = serde_json::from_str(&raw).map_err(|e| PipelineError::Parse {
            path: path.into(),
            line: i + 1,
            msg: e.to_string(),
        })?;
        f(line)?;
    }
    Ok(())
}

pub fn load(path: &Path) -> Result<Vec<ArchiveLine>> {
    let mut v = Vec::new();
    for_each_line(path, |l| {
        v.push(l);
        Ok(())
    })?;
    Ok(v)
}
