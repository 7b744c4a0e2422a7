use std::path::Path;

use serde_json::json;

use netmix::analysis::{simulate_replicates, LabelSource, SimulationSpec};
use netmix::io::{read_labels, write_edges_tsv, write_labels_tsv, write_scores_tsv};

use super::out_dir;
use crate::artifacts::Artifacts;
use crate::error::{config_error, CliError, CliResult};
use crate::settings::{key, Key, Settings};

pub const KEYS: &[Key] = &[
    key("items", Some("500")),
    key("replicates", Some("10")),
    key("targets", None),
    key("sweeps", Some("500")),
    key("top_window", Some("20")),
    key("top_noise", Some("0.75")),
    key("labels", None),
];

/// Id of item `i` (0-based) in a simulated table of `g` items.
pub fn item_id(i: usize, g: usize) -> String {
    let width = g.to_string().len().max(4);
    format!("G{:0width$}", i + 1)
}

pub fn build_spec(s: &Settings, art: &mut Artifacts) -> CliResult<SimulationSpec> {
    let g: usize = s.parse_required("items")?;
    let mut spec = SimulationSpec::reference(g, s.parse_required("replicates")?, s.parse_required("seed")?);
    if let Some(t) = s.parse("targets")? {
        spec.n_targets = t;
    }
    if let LabelSource::MrfPrior(m) = &mut spec.labels {
        m.sweeps = s.parse_required("sweeps")?;
        m.top_window = match s.parse_required::<usize>("top_window")? {
            0 => None,
            w => Some(w),
        };
        m.top_noise = s.parse_required("top_noise")?;
    }
    if let Some(path) = s.get("labels") {
        let path = Path::new(path);
        let map = read_labels(path)?;
        art.input("labels", path)?;
        let labels = (0..g)
            .map(|i| {
                let id = item_id(i, g);
                map.get(&id)
                    .copied()
                    .ok_or_else(|| CliError::data(format!("{}: no label for `{id}`", path.display())))
            })
            .collect::<CliResult<Vec<u8>>>()?;
        if map.len() != g {
            return Err(CliError::data(format!(
                "{}: {} labels for {g} items",
                path.display(),
                map.len()
            )));
        }
        spec.n_targets = labels.iter().filter(|&&t| t == 1).count();
        spec.labels = LabelSource::Explicit(labels);
    }
    spec.validate().map_err(config_error)?;
    Ok(spec)
}

pub fn run(s: &Settings) -> CliResult<()> {
    let out = out_dir(s)?;
    let mut art = Artifacts::default();
    let spec = build_spec(s, &mut art)?;
    let reps = simulate_replicates(&spec)?;
    let width = spec.n_replicates.to_string().len().max(2);
    let ids = reps[0].table.ids().to_vec();
    for net in reps[0].networks.networks() {
        art.write_with(format!("networks/{}.tsv", net.name()), |b| {
            write_edges_tsv(net, &ids, b)
        })?;
    }
    for (r, rep) in reps.iter().enumerate() {
        let dir = format!("rep{:0width$}", r + 1);
        art.write_with(format!("{dir}/scores.tsv"), |b| write_scores_tsv(&rep.table, b))?;
        art.write_with(format!("{dir}/truth.tsv"), |b| write_labels_tsv(&ids, &rep.truth, b))?;
    }
    let details = json!({
        "spec": spec,
        "gamma": reps[0].gamma,
        "n_targets": reps[0].truth.iter().filter(|&&t| t == 1).count(),
    });
    art.commit(&out, "simulate", s, details)
}
