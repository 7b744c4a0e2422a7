use std::path::Path;

use serde_json::json;

use netmix::analysis::{rank_items, summarize, ParamSummary};
use netmix::em::{compare_em_vs_posterior, em_fit, EmOptions};
use netmix::io::{read_edges, read_scores, write_diagnostics_csv, write_rank_csv, write_trace_csv};
use netmix::sampler::{load_checkpoint, resume_multichain, run_multichain, save_checkpoint, MultiChainResult};
use netmix::{build_prior_spec, CovarianceMode, ModelKind, NetworkSet, SamplerConfig};

use super::{csv_bytes, execution, num, out_dir};
use crate::artifacts::Artifacts;
use crate::error::{config_error, CliError, CliResult};
use crate::settings::{key, Key, Settings};

pub const KEYS: &[Key] = &[
    key("scores", None),
    key("network", None),
    key("model", Some("smjm")),
    key("cov", Some("general")),
    key("chains", Some("3")),
    key("burnin", Some("5000")),
    key("keep", Some("10000")),
    key("thin", Some("1")),
    key("init_quantiles", Some("0.80,0.87,0.95")),
    key("target_accept", Some("0.23")),
    key("initial_step", Some("0.1")),
    key("adapt", Some("true")),
    key("traces", Some("true")),
    key("checkpoint", Some("false")),
    key("resume", None),
    key("em", Some("true")),
];

pub fn sampler_config(s: &Settings) -> CliResult<SamplerConfig> {
    let model = match s.require("model")? {
        "smjm" => ModelKind::Smjm,
        "mrf" => ModelKind::Mrf,
        m => return Err(CliError::usage(format!("unknown model `{m}` (smjm or mrf)"))),
    };
    let covariance_mode = match s.require("cov")? {
        "general" => CovarianceMode::General,
        "diagonal" => CovarianceMode::Diagonal,
        c => {
            return Err(CliError::usage(format!(
                "unknown covariance mode `{c}` (general or diagonal)"
            )))
        }
    };
    let init_quantiles = s
        .list("init_quantiles")
        .iter()
        .map(|q| {
            q.parse()
                .map_err(|_| CliError::usage(format!("`init_quantiles`: cannot parse `{q}`")))
        })
        .collect::<CliResult<Vec<f64>>>()?;
    let cfg = SamplerConfig {
        model,
        covariance_mode,
        n_chains: s.parse_required("chains")?,
        n_burnin: s.parse_required("burnin")?,
        n_keep: s.parse_required("keep")?,
        thin: s.parse_required("thin")?,
        seed: s.parse_required("seed")?,
        chain_seeds: None,
        init_quantiles,
        rw_target_accept: s.parse_required("target_accept")?,
        rw_initial_step: s.parse_required("initial_step")?,
        rw_adapt: s.flag("adapt")?,
        store_samples: true,
        execution: execution(s)?,
    };
    cfg.validate().map_err(config_error)?;
    Ok(cfg)
}

/// Per-chain columns of every reported scalar: the monitored quantities,
/// `mu1`, and the within-component correlations.
struct Columns {
    names: Vec<String>,
    /// `[chain][param][draw]`
    values: Vec<Vec<Vec<f64>>>,
}

fn columns(res: &MultiChainResult) -> Columns {
    let dims = &res.dim_names;
    let d = dims.len();
    let mut names = res.monitored_names();
    names.extend(dims.iter().map(|n| format!("mu1[{n}]")));
    for j in 0..2 {
        for a in 0..d {
            for b in (a + 1)..d {
                names.push(format!("corr{j}[{},{}]", dims[a], dims[b]));
            }
        }
    }
    let values = res
        .chains
        .iter()
        .map(|c| {
            let mut cols = vec![Vec::with_capacity(c.samples.len()); names.len()];
            for smp in &c.samples {
                let mut v = smp.monitored();
                v.extend(smp.mu1());
                for sigma in [&smp.sigma0, &smp.sigma1] {
                    let r = sigma.to_correlation();
                    for a in 0..d {
                        for b in (a + 1)..d {
                            v.push(r[(a, b)]);
                        }
                    }
                }
                for (col, x) in cols.iter_mut().zip(v) {
                    col.push(x);
                }
            }
            cols
        })
        .collect();
    Columns { names, values }
}

fn summaries(cols: &Columns, upto: usize) -> Vec<ParamSummary> {
    cols.names[..upto]
        .iter()
        .enumerate()
        .map(|(k, name)| {
            let per_chain: Vec<Vec<f64>> = cols.values.iter().map(|c| c[k].clone()).collect();
            summarize(name, &per_chain)
        })
        .collect()
}

pub fn run(s: &Settings) -> CliResult<()> {
    let out = out_dir(s)?;
    let cfg = sampler_config(s)?;
    let scores_path = s.require("scores")?.to_string();
    let net_paths = s.list("network");
    match cfg.model {
        ModelKind::Mrf if net_paths.is_empty() => {
            return Err(CliError::usage("the mrf model needs at least one --network"))
        }
        ModelKind::Smjm if !net_paths.is_empty() => {
            return Err(CliError::usage("networks are only used by the mrf model"))
        }
        _ => {}
    }
    let mut art = Artifacts::default();
    let table = read_scores(Path::new(&scores_path))?;
    art.input("scores", Path::new(&scores_path))?;
    let mut raw = Vec::new();
    for p in &net_paths {
        raw.push(read_edges(Path::new(p))?);
        art.input("network", Path::new(p))?;
    }
    let (nets, report) = NetworkSet::from_raw(&table, &raw);
    for n in &report.networks {
        if n.dropped_edges > 0 {
            log::warn!(
                "network `{}`: {} edges dropped ({} ids not in the score table)",
                n.name,
                n.dropped_edges,
                n.unknown_ids
            );
        }
    }
    let prior = build_prior_spec(&table)?;
    prior.validate()?;
    let res = match s.get("resume") {
        Some(dir) => {
            let mut states = Vec::with_capacity(cfg.n_chains);
            for c in 1..=cfg.n_chains {
                let p = Path::new(dir).join(format!("checkpoint_chain{c}.json"));
                let f = std::fs::File::open(&p).map_err(|e| CliError::data(format!("{}: {e}", p.display())))?;
                states.push(load_checkpoint(std::io::BufReader::new(f), &nets)?);
                art.input("checkpoint", &p)?;
            }
            resume_multichain(&cfg, &table, &nets, &prior, states)?
        }
        None => run_multichain(&cfg, &table, &nets, &prior)?,
    };

    let ranks = rank_items(table.ids(), &res.posterior_prob);
    art.write_with("ranks.csv", |b| write_rank_csv(&ranks, b))?;

    let cols = columns(&res);
    let n_monitored = res.monitored_names().len();
    let diag = summaries(&cols, n_monitored);
    art.write_with("diagnostics.csv", |b| write_diagnostics_csv(&diag, b))?;
    let params = summaries(&cols, cols.names.len());
    let rows = params
        .iter()
        .map(|p| vec![p.name.clone(), num(p.mean), num(p.sd), num(p.q025), num(p.q975)]);
    art.add(
        "params.csv",
        csv_bytes(&["param", "mean", "sd", "q2.5", "q97.5"], rows).map_err(|e| CliError::data(e.to_string()))?,
    );

    let chain_rows = res.chains.iter().map(|c| {
        vec![
            (c.chain + 1).to_string(),
            c.seed.to_string(),
            c.n_retained.to_string(),
            c.acceptance_rate.map(num).unwrap_or_else(|| "NA".into()),
            c.rw_step.iter().map(|v| num(*v)).collect::<Vec<_>>().join(" "),
        ]
    });
    art.add(
        "chains.csv",
        csv_bytes(&["chain", "seed", "retained", "acceptance_rate", "rw_step"], chain_rows)
            .map_err(|e| CliError::data(e.to_string()))?,
    );

    if s.flag("traces")? {
        let names = res.monitored_names();
        for c in &res.chains {
            let iters: Vec<u64> = c.samples.iter().map(|x| x.iteration).collect();
            let rows = c.traces();
            art.write_with(format!("trace_chain{}.csv", c.chain + 1), |b| {
                write_trace_csv(&names, &iters, &rows, b)
            })?;
        }
    }
    if s.flag("checkpoint")? {
        for c in &res.chains {
            if let Some(state) = &c.final_state {
                art.write_with(format!("checkpoint_chain{}.json", c.chain + 1), |b| {
                    save_checkpoint(state, b)
                })?;
            }
        }
    }
    let mut details = json!({
        "alignment": report,
        "acceptance_rate": res.mean_acceptance(),
    });
    if cfg.model == ModelKind::Smjm && s.flag("em")? {
        let opts = EmOptions {
            covariance_mode: cfg.covariance_mode,
            seed: cfg.seed,
            execution: cfg.execution,
            ..EmOptions::default()
        };
        match em_fit(&table, &opts) {
            Ok(em) => {
                let cmp = compare_em_vs_posterior(&em, &res)?;
                if cmp.any_flagged() {
                    log::warn!(
                        "EM and posterior component means differ by up to {:.4}",
                        cmp.max_mean_diff()
                    );
                }
                let rows = cmp.rows.iter().map(|r| {
                    vec![
                        r.parameter.clone(),
                        num(r.em),
                        num(r.posterior_mean),
                        num(r.abs_diff),
                        r.flagged.to_string(),
                    ]
                });
                art.add(
                    "em_comparison.csv",
                    csv_bytes(&["param", "em", "posterior_mean", "abs_diff", "flagged"], rows)
                        .map_err(|e| CliError::data(e.to_string()))?,
                );
                details["em_loglik"] = json!(em.loglik());
                details["em_converged"] = json!(em.converged);
            }
            Err(e) => log::warn!("EM comparison skipped: {e}"),
        }
    }
    art.commit(&out, "fit", s, details)
}
