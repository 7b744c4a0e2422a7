pub mod diagnose;
pub mod evaluate;
pub mod fit;
pub mod rank;
pub mod simulate;

use std::io::Write;
use std::path::PathBuf;

use netmix::Execution;

use crate::error::CliResult;
use crate::settings::Settings;

pub(crate) fn out_dir(s: &Settings) -> CliResult<PathBuf> {
    Ok(PathBuf::from(s.require("out")?))
}

pub(crate) fn execution(s: &Settings) -> CliResult<Execution> {
    Ok(match s.parse::<usize>("threads")? {
        Some(1) => Execution::Sequential,
        _ => Execution::Parallel,
    })
}

pub(crate) fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

pub(crate) fn num(v: f64) -> String {
    format!("{v}")
}

/// Writes `header` then `rows` as CSV into a fresh buffer.
pub(crate) fn csv_bytes(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, csv::Error> {
    let mut w = csv_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| e.into_error().into())
}
