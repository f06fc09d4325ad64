//! Long-term provider max-min fair ranking under recommendation feedback loops.
//!
//! The crate is organised around the pieces of the online loop:
//!
//! - [`catalog`]: items, providers and per-provider exposure budgets.
//! - [`mf`]: incremental matrix-factorization accuracy model (ridge updates).
//! - [`ucb`]: exploration bonus computed from the ridge statistics.
//! - [`dual`]: max-min fairness in dual space (mirror descent + projection).
//! - [`ranker`]: reward assembly and masked top-K selection.
//! - [`oracle`]: exact offline optimum on tiny instances and a dual upper bound.
//! - [`sim`]: synthetic world, click model, policies and the episodic loop.
//! - [`metrics`]: CTR@K, MMF@K, r_lambda@K and lowest-exposure series.
//! - [`harness`]: configuration, dataset ingestion and result persistence.

pub mod catalog;
pub mod dual;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod mf;
pub mod oracle;
pub mod ranker;
pub mod sim;
pub mod ucb;

pub use catalog::Catalog;
pub use dual::{DualParams, DualState};
pub use error::{Error, Result};
pub use metrics::MetricsReport;
pub use mf::{EmbeddingState, MfParams};
pub use oracle::{OfflineInstance, OfflineSolution};
pub use ranker::RankingDecision;
pub use sim::{ExperimentConfig, ExperimentTrace, InteractionRecord, PolicyKind, World};
pub use ucb::UcbParams;
