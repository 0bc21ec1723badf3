use std::path::Path;
use std::str::FromStr;

use crate::error::{io_err, PipelineError, Result};

pub fn write<I, R>(path: &Path, header: &[String], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let csv_err = |e: csv::Error| PipelineError::Parse { path: path.into(), line: 0, msg: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(header).map_err(csv_err)?;
    for r in rows {
        w.write_record(r.into_iter().collect::<Vec<_>>()).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

/// Header and rows; a missing file names the stage that produces it.
pub fn read(path: &Path, stage: &'static str) -> Result<(Vec<String>, Vec<Vec<String>>)> {
    if !path.exists() {
        return Err(PipelineError::MissingInput { path: path.into(), stage });
    }
    let csv_err = |e: csv::Error| PipelineError::Parse {
        path: path.into(),
        line: e.position().map_or(0, |p| p.line() as usize),
        msg: e.to_string(),
    };
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let header = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(String::from).collect()).map_err(csv_err))
        .collect::<Result<_>>()?;
    Ok((header, rows))
}

pub fn num<T: FromStr>(path: &Path, line: usize, s: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| PipelineError::Parse { path: path.into(), line, msg: format!("'{s}': {e}") })
}
