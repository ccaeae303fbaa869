//! Categorical data, synthetic data generation and local score tables.

mod dataset;
mod network;
mod scores;

pub use dataset::{load_dataset, parse_dataset, Dataset, LoadOptions};
pub use network::{sample_network_data, NetworkSpec};
pub use scores::{
    build_score_table, log_local_score, log_parent_prior, parent_set_count, parent_sets,
    OrderWeights, ScoreOptions, ScoreTable,
};
