//! Data ingestion, configuration, chain export and the CLI surface.
//!
//! File formats (all delimited text unless noted):
//!
//! - labels:        `individual_id,timestamp,state`
//! - probabilities: `individual_id,timestamp,p_<state>...` (one column per
//!   alphabet state, in alphabet order)
//! - covariates:    `individual_id,timestamp,habitat,<quantitative>...`
//! - imputations:   `individual_id,timestamp,m1..mM` (state labels)
//! - chain export:  columnar binary (see [`chain_export`]) plus a CSV
//!   fallback
//!
//! Timestamps are integer seconds. Covariate rows must align 1:1 with label
//! or probability rows by (individual_id, timestamp). Ingestion sorts fixes
//! by timestamp within an individual, splits at gaps exceeding 1.5x the
//! nominal step, and standardizes the declared quantitative columns,
//! recording the means and standard deviations used.

pub mod chain_export;
pub mod cli;
pub mod config;
pub mod formats;

pub use chain_export::{parameter_names, read_chain_binary, write_chain_binary, write_chain_csv};
pub use config::RunConfig;
pub use formats::{load_inputs, write_simulated, LoadedInputs, Observations, ValidationReport};
