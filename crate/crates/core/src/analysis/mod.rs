//! Downstream of sampling: convergence diagnostics, posterior summaries,
//! ranking, synthetic data and ROC evaluation.

mod correlation;
mod diagnostics;
mod rank;
mod roc;
mod simulate;

pub use correlation::{posterior_correlations, CorrelationSummary, MIN_CORRELATION_DRAWS};
pub use diagnostics::{quantile, rhat, summarize, ParamSummary, RHAT_THRESHOLD};
pub use rank::{rank_items, RankEntry, RankTable};
pub use roc::{auc_mann_whitney, average_roc, fpr_grid, roc, RocCurve};
pub use simulate::{
    generate_network, sample_mrf_labels, simulate_dataset, simulate_replicates, LabelSource, MrfLabelSpec,
    NetworkGenSpec, NetworkSource, SimulatedDataset, SimulationSpec,
};
