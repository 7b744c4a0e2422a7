//! Text formats: tab-separated scores, edge lists and labels in; CSV
//! tables out. Lines starting with `#` and blank lines are ignored, and
//! CRLF line endings are accepted everywhere.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use crate::analysis::{ParamSummary, RankTable, RocCurve};
use crate::error::{Error, Result};
use crate::types::{GeneTable, Network, RawNetwork};

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Non-comment, non-blank lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.strip_suffix('\r').unwrap_or(l);
        if l.trim().is_empty() || l.trim_start().starts_with('#') {
            None
        } else {
            Some((i + 1, l))
        }
    })
}

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

/// Score table: a header line (`id` then one name per score column) and
/// one row per item.
pub fn parse_scores(text: &str, path: &Path) -> Result<GeneTable> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(path, 0, "empty score file"))?;
    let names: Vec<String> = header.split('\t').skip(1).map(|s| s.trim().to_string()).collect();
    if names.is_empty() {
        return Err(parse_err(
            path,
            hl,
            "header needs an id column and at least one score column",
        ));
    }
    let mut ids = Vec::new();
    let mut rows = Vec::new();
    let mut seen = HashMap::new();
    for (ln, line) in lines {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != names.len() + 1 {
            return Err(parse_err(
                path,
                ln,
                format!("expected {} fields, found {}", names.len() + 1, fields.len()),
            ));
        }
        let id = fields[0].trim();
        if id.is_empty() {
            return Err(parse_err(path, ln, "empty id"));
        }
        if let Some(prev) = seen.insert(id.to_string(), ln) {
            return Err(parse_err(
                path,
                ln,
                format!("duplicate id `{id}` (first on line {prev})"),
            ));
        }
        let mut row = Vec::with_capacity(names.len());
        for (name, f) in names.iter().zip(&fields[1..]) {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| parse_err(path, ln, format!("column `{name}`: `{}` is not a number", f.trim())))?;
            if !v.is_finite() {
                return Err(parse_err(path, ln, format!("column `{name}`: non-finite value")));
            }
            row.push(v);
        }
        ids.push(id.to_string());
        rows.push(row);
    }
    if ids.is_empty() {
        return Err(parse_err(path, hl, "no data rows"));
    }
    GeneTable::new(ids, names, rows)
}

pub fn read_scores(path: &Path) -> Result<GeneTable> {
    parse_scores(&read_to_string(path)?, path)
}

/// Edge list with two id columns; further columns are ignored.
pub fn parse_edges(text: &str, path: &Path, name: &str) -> Result<RawNetwork> {
    let mut edges = Vec::new();
    for (ln, line) in content_lines(text) {
        let mut f = line.split('\t').map(str::trim);
        match (f.next(), f.next()) {
            (Some(a), Some(b)) if !a.is_empty() && !b.is_empty() => edges.push((a.to_string(), b.to_string())),
            _ => return Err(parse_err(path, ln, "expected two tab-separated ids")),
        }
    }
    Ok(RawNetwork {
        name: name.to_string(),
        edges,
    })
}

/// Reads an edge list, naming the network after the file stem.
pub fn read_edges(path: &Path) -> Result<RawNetwork> {
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "network".into());
    parse_edges(&read_to_string(path)?, path, &name)
}

/// `id<TAB>label` with labels 0/1. A first line whose label is not 0 or 1
/// is taken as a header.
pub fn parse_labels(text: &str, path: &Path) -> Result<HashMap<String, u8>> {
    let mut out = HashMap::new();
    for (k, (ln, line)) in content_lines(text).enumerate() {
        let f: Vec<&str> = line.split('\t').map(str::trim).collect();
        if f.len() < 2 {
            return Err(parse_err(path, ln, "expected id and label"));
        }
        let label = match f[1] {
            "0" => 0,
            "1" => 1,
            _ if k == 0 => continue,
            other => return Err(parse_err(path, ln, format!("label `{other}` is not 0 or 1"))),
        };
        if out.insert(f[0].to_string(), label).is_some() {
            return Err(parse_err(path, ln, format!("duplicate id `{}`", f[0])));
        }
    }
    Ok(out)
}

pub fn read_labels(path: &Path) -> Result<HashMap<String, u8>> {
    parse_labels(&read_to_string(path)?, path)
}

/// Picks one numeric column, keyed by the first column, from a CSV or TSV
/// table with a header. The delimiter is whichever of tab or comma occurs
/// in the header. `column` is a header name or a 1-based index; when
/// absent, `p_hat` is used if present, otherwise the second column.
pub fn parse_id_column(text: &str, path: &Path, column: Option<&str>) -> Result<HashMap<String, f64>> {
    let mut lines = content_lines(text);
    let (hl, header) = lines.next().ok_or_else(|| parse_err(path, 0, "empty table"))?;
    let delim = if header.contains('\t') { '\t' } else { ',' };
    let names: Vec<&str> = header.split(delim).map(str::trim).collect();
    let col = match column {
        Some(c) => match names.iter().position(|n| *n == c) {
            Some(j) => j,
            None => match c.parse::<usize>() {
                Ok(j) if j >= 1 && j <= names.len() => j - 1,
                _ => return Err(parse_err(path, hl, format!("no column `{c}`"))),
            },
        },
        None => names.iter().position(|n| *n == "p_hat").unwrap_or(1),
    };
    if col == 0 || col >= names.len() {
        return Err(parse_err(path, hl, "value column must differ from the id column"));
    }
    let mut out = HashMap::new();
    for (ln, line) in lines {
        let f: Vec<&str> = line.split(delim).map(str::trim).collect();
        if f.len() <= col {
            return Err(parse_err(path, ln, format!("missing column {}", col + 1)));
        }
        let v: f64 = f[col]
            .parse()
            .map_err(|_| parse_err(path, ln, format!("`{}` is not a number", f[col])))?;
        if v.is_nan() {
            return Err(parse_err(path, ln, "NaN value"));
        }
        if out.insert(f[0].to_string(), v).is_some() {
            return Err(parse_err(path, ln, format!("duplicate id `{}`", f[0])));
        }
    }
    Ok(out)
}

pub fn read_id_column(path: &Path, column: Option<&str>) -> Result<HashMap<String, f64>> {
    parse_id_column(&read_to_string(path)?, path, column)
}

/// Trace table: header `iteration,<name>...`, one row per draw. Parameter
/// names containing commas are quoted.
pub fn parse_trace(text: &str, path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let body: String = content_lines(text).map(|(_, l)| format!("{l}\n")).collect();
    let lines: Vec<usize> = content_lines(text).map(|(ln, _)| ln).collect();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(body.as_bytes());
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| parse_err(path, lines[0], e.to_string()))?,
        None => return Err(parse_err(path, 0, "empty trace")),
    };
    let names: Vec<String> = header.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut cols = vec![Vec::new(); names.len()];
    for (k, rec) in records.enumerate() {
        let ln = lines[k + 1];
        let rec = rec.map_err(|e| parse_err(path, ln, e.to_string()))?;
        if rec.len() != names.len() + 1 {
            return Err(parse_err(path, ln, format!("expected {} fields", names.len() + 1)));
        }
        for (c, v) in cols.iter_mut().zip(rec.iter().skip(1)) {
            let v = v.trim();
            c.push(
                v.parse()
                    .map_err(|_| parse_err(path, ln, format!("`{v}` is not a number")))?,
            );
        }
    }
    Ok((names, cols))
}

pub fn read_trace(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    parse_trace(&read_to_string(path)?, path)
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("CSV output: {e}"))
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub fn write_rank_csv<W: Write>(table: &RankTable, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["id", "p_hat", "rank"]).map_err(csv_err)?;
    for e in &table.entries {
        out.write_record([e.id.clone(), num(e.p_hat), e.rank.to_string()])
            .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::invalid(e.to_string()))
}

pub fn write_roc_csv<W: Write>(curve: &RocCurve, w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["fpr", "tpr"]).map_err(csv_err)?;
    for (f, t) in curve.fpr.iter().zip(&curve.tpr) {
        out.write_record([num(*f), num(*t)]).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::invalid(e.to_string()))
}

pub fn write_diagnostics_csv<W: Write>(rows: &[ParamSummary], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    out.write_record(["param", "rhat", "mean", "sd", "q2.5", "q97.5"])
        .map_err(csv_err)?;
    for r in rows {
        out.write_record([
            r.name.clone(),
            r.rhat.map(num).unwrap_or_else(|| "NA".into()),
            num(r.mean),
            num(r.sd),
            num(r.q025),
            num(r.q975),
        ])
        .map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::invalid(e.to_string()))
}

pub fn write_trace_csv<W: Write>(names: &[String], iterations: &[u64], rows: &[Vec<f64>], w: W) -> Result<()> {
    let mut out = csv_writer(w);
    let mut header = vec!["iteration".to_string()];
    header.extend(names.iter().cloned());
    out.write_record(&header).map_err(csv_err)?;
    for (it, row) in iterations.iter().zip(rows) {
        let mut rec = vec![it.to_string()];
        rec.extend(row.iter().map(|v| num(*v)));
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush().map_err(|e| Error::invalid(e.to_string()))
}

/// Scores in the input format, so that simulated data can be fed back.
pub fn write_scores_tsv<W: Write>(table: &GeneTable, mut w: W) -> std::io::Result<()> {
    write!(w, "id")?;
    for n in table.dim_names() {
        write!(w, "\t{n}")?;
    }
    writeln!(w)?;
    for (id, row) in table.ids().iter().zip(table.rows()) {
        write!(w, "{id}")?;
        for v in row {
            write!(w, "\t{v}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_edges_tsv<W: Write>(net: &Network, ids: &[String], mut w: W) -> std::io::Result<()> {
    writeln!(w, "# {}", net.name())?;
    for (a, b) in net.edges() {
        writeln!(w, "{}\t{}", ids[a], ids[b])?;
    }
    Ok(())
}

pub fn write_labels_tsv<W: Write>(ids: &[String], labels: &[u8], mut w: W) -> std::io::Result<()> {
    writeln!(w, "id\tlabel")?;
    for (id, l) in ids.iter().zip(labels) {
        writeln!(w, "{id}\t{l}")?;
    }
    Ok(())
}
