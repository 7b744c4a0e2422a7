use std::path::Path;

use serde_json::json;

use netmix::analysis::summarize;
use netmix::io::{read_trace, write_diagnostics_csv};

use super::{csv_bytes, num, out_dir};
use crate::artifacts::Artifacts;
use crate::error::{CliError, CliResult};
use crate::settings::{key, Key, Settings};

pub const KEYS: &[Key] = &[key("trace", None), key("threshold", Some("1.1"))];

/// R-hat per column over several chain traces. A failed check is reported,
/// not turned into an error.
pub fn run(s: &Settings) -> CliResult<()> {
    let out = out_dir(s)?;
    let paths = s.list("trace");
    if paths.len() < 2 {
        return Err(CliError::usage("diagnose needs at least two --trace files"));
    }
    let threshold: f64 = s.parse_required("threshold")?;
    let mut art = Artifacts::default();
    let mut names: Option<Vec<String>> = None;
    let mut chains = Vec::new();
    for p in &paths {
        let path = Path::new(p);
        let (n, cols) = read_trace(path)?;
        art.input("trace", path)?;
        match &names {
            None => names = Some(n),
            Some(first) if *first != n => return Err(CliError::data(format!("{p}: columns differ from {}", paths[0]))),
            _ => {}
        }
        chains.push(cols);
    }
    let names = names.unwrap_or_default();
    let rows: Vec<_> = names
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let per_chain: Vec<Vec<f64>> = chains.iter().map(|c| c[k].clone()).collect();
            summarize(name, &per_chain)
        })
        .collect();
    art.write_with("diagnostics.csv", |b| write_diagnostics_csv(&rows, b))?;
    let status = |r: Option<f64>| match r {
        Some(v) if v < threshold => "pass",
        Some(_) => "fail",
        None => "NA",
    };
    let failed: Vec<&str> = rows
        .iter()
        .filter(|r| status(r.rhat) != "pass")
        .map(|r| r.name.as_str())
        .collect();
    let overall = if failed.is_empty() { "pass" } else { "fail" };
    let mut summary: Vec<Vec<String>> = rows
        .iter()
        .map(|r| {
            vec![
                r.name.clone(),
                r.rhat.map(num).unwrap_or_else(|| "NA".into()),
                status(r.rhat).to_string(),
            ]
        })
        .collect();
    summary.push(vec!["overall".into(), String::new(), overall.into()]);
    art.add(
        "rhat_status.csv",
        csv_bytes(&["param", "rhat", "status"], summary).map_err(|e| CliError::data(e.to_string()))?,
    );
    println!(
        "R-hat check ({} chains, threshold {threshold}): {overall}{}",
        paths.len(),
        if failed.is_empty() {
            String::new()
        } else {
            format!(" ({} of {} parameters)", failed.len(), rows.len())
        }
    );
    art.commit(
        &out,
        "diagnose",
        s,
        json!({ "status": overall, "failed": failed, "chains": paths.len() }),
    )
}
