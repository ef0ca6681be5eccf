//! Score aggregation and evaluation.

pub mod cv;
pub mod krasula;
pub mod ranking;
pub mod stats;
pub mod svr;

pub use cv::{cross_validate, CvConfig, CvOutcome, CvRecord, FoldModel, FoldResult, Summary};
pub use krasula::{krasula_auc, KrasulaAuc, Orientation, PairSignificance};
pub use ranking::{rank_groups, significance_matrix, GroupRank, GroupStatistic, TTest};
pub use stats::{correlation_stats, fit_logistic, Correlation, LogisticFit};
pub use svr::{svr_train, svr_train_logged, SvrModel, SvrParams, TrainLog};
