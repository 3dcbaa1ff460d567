//! Listening-test statistics and objective signal metrics.

mod metrics;
mod odg;

pub use metrics::{log_spectral_distance, lsd_params, snr};
pub use odg::{
    odg_aggregate, GradeRecord, GroupKey, Grouping, LabeledGrade, Odg, OdgStats, OdgTable,
};
