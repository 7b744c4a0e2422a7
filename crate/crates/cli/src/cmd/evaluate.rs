use std::collections::HashMap;
use std::path::{Path, PathBuf};

use serde_json::json;

use netmix::analysis::{average_roc, fpr_grid, roc, RocCurve};
use netmix::io::{read_id_column, read_labels, write_roc_csv};
use netmix::par::map_indexed;

use super::{csv_bytes, execution, num, out_dir};
use crate::artifacts::Artifacts;
use crate::error::{CliError, CliResult};
use crate::settings::{key, Key, Settings};

pub const KEYS: &[Key] = &[
    key("replicate", None),
    key("method", None),
    key("truth", Some("truth.tsv")),
    key("grid", Some("101")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub name: String,
    pub path: String,
    pub column: Option<String>,
}

/// Parses `NAME=RELPATH[:COLUMN]`.
pub fn parse_method(text: &str) -> CliResult<MethodSpec> {
    let (name, rest) = text
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("method `{text}`: expected NAME=RELPATH[:COLUMN]")))?;
    let (path, column) = match rest.rsplit_once(':') {
        Some((p, c)) if !c.is_empty() => (p, Some(c.to_string())),
        _ => (rest, None),
    };
    let name = name.trim();
    if name.is_empty() || path.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c)) {
        return Err(CliError::usage(format!("method `{text}`: bad name or path")));
    }
    Ok(MethodSpec {
        name: name.to_string(),
        path: path.to_string(),
        column,
    })
}

/// Truth vector and one score vector per method, aligned on sorted ids.
type Replicate = (Vec<u8>, Vec<Vec<f64>>, Vec<PathBuf>);

fn load_replicate(dir: &Path, truth_name: &str, methods: &[MethodSpec]) -> CliResult<Replicate> {
    let truth_path = dir.join(truth_name);
    let truth_map = read_labels(&truth_path)?;
    let mut ids: Vec<&String> = truth_map.keys().collect();
    ids.sort();
    let truth: Vec<u8> = ids.iter().map(|id| truth_map[*id]).collect();
    let mut inputs = vec![truth_path];
    let mut scores = Vec::with_capacity(methods.len());
    for m in methods {
        let path = dir.join(&m.path);
        let map: HashMap<String, f64> = read_id_column(&path, m.column.as_deref())?;
        if map.len() != ids.len() {
            return Err(CliError::data(format!(
                "{}: {} items but the truth file has {}",
                path.display(),
                map.len(),
                ids.len()
            )));
        }
        let v = ids
            .iter()
            .map(|id| {
                map.get(*id)
                    .copied()
                    .ok_or_else(|| CliError::data(format!("{}: no value for `{id}`", path.display())))
            })
            .collect::<CliResult<Vec<f64>>>()?;
        scores.push(v);
        inputs.push(path);
    }
    Ok((truth, scores, inputs))
}

pub fn run(s: &Settings) -> CliResult<()> {
    let out = out_dir(s)?;
    let dirs = s.list("replicate");
    if dirs.is_empty() {
        return Err(CliError::usage("give at least one --replicate directory"));
    }
    let methods = s
        .list("method")
        .iter()
        .map(|m| parse_method(m))
        .collect::<CliResult<Vec<_>>>()?;
    if methods.is_empty() {
        return Err(CliError::usage("give at least one --method"));
    }
    for (i, m) in methods.iter().enumerate() {
        if methods[..i].iter().any(|o| o.name == m.name) {
            return Err(CliError::usage(format!("method `{}` given twice", m.name)));
        }
    }
    let grid_n: usize = s.parse_required("grid")?;
    if grid_n < 2 {
        return Err(CliError::usage("`grid` must be at least 2"));
    }
    let truth_name = s.require("truth")?.to_string();
    let exec = execution(s)?;
    let loaded = map_indexed(exec, dirs.len(), |r| {
        load_replicate(Path::new(&dirs[r]), &truth_name, &methods)
    });
    let mut art = Artifacts::default();
    let mut curves: Vec<Vec<RocCurve>> = vec![Vec::new(); methods.len()];
    let mut auc_rows = Vec::new();
    for (dir, rep) in dirs.iter().zip(loaded) {
        let (truth, scores, inputs) = rep?;
        for p in &inputs {
            art.input("evaluation", p)?;
        }
        for (k, v) in scores.iter().enumerate() {
            let c = roc(v, &truth).map_err(|e| CliError::data(format!("replicate {dir}: {e}")))?;
            auc_rows.push(vec![methods[k].name.clone(), dir.clone(), num(c.auc)]);
            curves[k].push(c);
        }
    }
    art.add(
        "auc.csv",
        csv_bytes(&["method", "replicate", "auc"], auc_rows).map_err(|e| CliError::data(e.to_string()))?,
    );
    let grid = fpr_grid(grid_n);
    let mut summary = Vec::new();
    let mut details = serde_json::Map::new();
    for (m, cs) in methods.iter().zip(&curves) {
        let avg = average_roc(cs, &grid)?;
        art.write_with(format!("roc_{}.csv", m.name), |b| write_roc_csv(&avg, b))?;
        let aucs: Vec<f64> = cs.iter().map(|c| c.auc).collect();
        let n = aucs.len() as f64;
        let mean = aucs.iter().sum::<f64>() / n;
        let sd = if aucs.len() > 1 {
            num((aucs.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
        } else {
            "NA".into()
        };
        details.insert(m.name.clone(), json!(mean));
        summary.push(vec![m.name.clone(), num(mean), sd, aucs.len().to_string()]);
    }
    art.add(
        "summary.csv",
        csv_bytes(&["method", "mean_auc", "sd_auc", "replicates"], summary)
            .map_err(|e| CliError::data(e.to_string()))?,
    );
    art.commit(&out, "evaluate", s, json!({ "mean_auc": details }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_specs() {
        let m = parse_method("B=scores.tsv:B").unwrap();
        assert_eq!(
            (m.name.as_str(), m.path.as_str(), m.column.as_deref()),
            ("B", "scores.tsv", Some("B"))
        );
        let m = parse_method("smjm=fits/smjm/ranks.csv").unwrap();
        assert_eq!(m.column, None);
        assert!(parse_method("noequals").is_err());
        assert!(parse_method("=x.csv").is_err());
        assert!(parse_method("a b=x.csv").is_err());
    }
}
