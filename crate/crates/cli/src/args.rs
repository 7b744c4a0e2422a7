use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::settings::join_list;

#[derive(Debug, Parser)]
#[command(name = "netmix", version, about = "Bayesian mixture ranking with network priors")]
pub struct Cli {
    /// Master random seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: one per chain for `fit`, all cores otherwise).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Flat key=value config file, or a manifest.json from an earlier run.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// More log output (repeat for debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a mixture model by MCMC and rank items.
    Fit(FitArgs),
    /// Generate synthetic replicates with networks and truth labels.
    Simulate(SimulateArgs),
    /// Compare scoring methods on replicates with known labels.
    Evaluate(EvaluateArgs),
    /// Rank items from a table of probabilities or scores.
    Rank(RankArgs),
    /// Convergence diagnostics from chain trace files.
    Diagnose(DiagnoseArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit(_) => "fit",
            Command::Simulate(_) => "simulate",
            Command::Evaluate(_) => "evaluate",
            Command::Rank(_) => "rank",
            Command::Diagnose(_) => "diagnose",
        }
    }

    /// Settings given on the command line.
    pub fn pairs(&self) -> Vec<(&'static str, String)> {
        let mut p = Pairs::default();
        match self {
            Command::Fit(a) => {
                p.put("scores", a.scores.as_ref().map(|v| v.display()));
                p.put("network", join_list(&a.network));
                p.put("model", a.model.as_ref());
                p.put("cov", a.cov.as_ref());
                p.put("chains", a.chains);
                p.put("burnin", a.burnin);
                p.put("keep", a.keep);
                p.put("thin", a.thin);
                p.put("init_quantiles", a.init_quantiles.as_ref());
                p.put("target_accept", a.target_accept);
                p.put("initial_step", a.initial_step);
                p.put("adapt", a.adapt);
                p.put("traces", a.traces);
                p.put("checkpoint", a.checkpoint);
                p.put("resume", a.resume.as_ref());
                p.put("em", a.em);
            }
            Command::Simulate(a) => {
                p.put("items", a.items);
                p.put("replicates", a.replicates);
                p.put("targets", a.targets);
                p.put("sweeps", a.sweeps);
                p.put("top_window", a.top_window);
                p.put("top_noise", a.top_noise);
                p.put("labels", a.labels.as_ref().map(|v| v.display()));
            }
            Command::Evaluate(a) => {
                p.put("replicate", join_list(&a.replicate));
                p.put("method", join_list(&a.method));
                p.put("truth", a.truth.as_ref());
                p.put("grid", a.grid);
            }
            Command::Rank(a) => {
                p.put("input", a.input.as_ref().map(|v| v.display()));
                p.put("column", a.column.as_ref());
                p.put("query", join_list(&a.query));
            }
            Command::Diagnose(a) => {
                p.put("trace", join_list(&a.trace));
                p.put("threshold", a.threshold);
            }
        }
        p.0
    }
}

#[derive(Default)]
struct Pairs(Vec<(&'static str, String)>);

impl Pairs {
    fn put<T: ToString>(&mut self, key: &'static str, v: Option<T>) {
        if let Some(v) = v {
            self.0.push((key, v.to_string()));
        }
    }
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Score table (TSV: id then one column per score).
    #[arg(long)]
    pub scores: Option<PathBuf>,
    /// Network edge list (TSV); repeat for several networks.
    #[arg(long)]
    pub network: Vec<String>,
    /// `smjm` (independent labels) or `mrf` (network prior).
    #[arg(long, value_parser = ["smjm", "mrf"])]
    pub model: Option<String>,
    /// Covariance structure: `general` or `diagonal`.
    #[arg(long, value_parser = ["general", "diagonal"])]
    pub cov: Option<String>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub burnin: Option<u64>,
    #[arg(long)]
    pub keep: Option<u64>,
    #[arg(long)]
    pub thin: Option<u64>,
    /// Comma-separated starting quantiles of the first score, one per chain.
    #[arg(long)]
    pub init_quantiles: Option<String>,
    #[arg(long)]
    pub target_accept: Option<f64>,
    #[arg(long)]
    pub initial_step: Option<f64>,
    #[arg(long)]
    pub adapt: Option<bool>,
    /// Write per-chain trace CSVs.
    #[arg(long)]
    pub traces: Option<bool>,
    /// Write each chain's final state as a checkpoint.
    #[arg(long)]
    pub checkpoint: Option<bool>,
    /// Continue the chains saved in this directory's checkpoints up to
    /// `burnin + keep` sweeps. Only the new sweeps are retained.
    #[arg(long)]
    pub resume: Option<String>,
    /// Compare posterior means with an EM fit (i.i.d. model only).
    #[arg(long)]
    pub em: Option<bool>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub items: Option<usize>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Number of targets (default: the reference fraction of `items`).
    #[arg(long)]
    pub targets: Option<usize>,
    /// Gibbs sweeps for label generation.
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Closing sweeps averaged before the top-k label selection; 0 keeps the
    /// last Gibbs draw.
    #[arg(long)]
    pub top_window: Option<usize>,
    #[arg(long)]
    pub top_noise: Option<f64>,
    /// Explicit truth labels (TSV id, label) keyed by the generated ids.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Replicate directory; repeat for each replicate.
    #[arg(long)]
    pub replicate: Vec<String>,
    /// `NAME=RELPATH[:COLUMN]`, a score file inside each replicate directory.
    #[arg(long)]
    pub method: Vec<String>,
    /// Truth file name inside each replicate directory.
    #[arg(long)]
    pub truth: Option<String>,
    /// Points on the FPR grid for averaged ROC curves.
    #[arg(long)]
    pub grid: Option<usize>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    /// Table with an id column and a probability or score column.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Column name or 1-based index (default `p_hat`, else the second).
    #[arg(long)]
    pub column: Option<String>,
    /// Ids whose ranks to report separately; repeatable.
    #[arg(long)]
    pub query: Vec<String>,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Chain trace CSV; give at least two.
    #[arg(long)]
    pub trace: Vec<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
}
