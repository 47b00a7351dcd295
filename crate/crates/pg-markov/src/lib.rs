//! Bayesian first-order Markov models for categorical time series with
//! covariate-driven transition probabilities.
//!
//! The transition matrix rows are modeled by a multinomial logistic link on a
//! covariate vector partitioned into individual, habitat and quantitative
//! blocks. Habitat effects are hierarchically centered around a shared mean
//! with a flat prior; individual effects satisfy a sum-to-zero constraint by
//! construction of the design encoding. Coefficients are sampled by an exact
//! Polya-Gamma augmented Gibbs sampler, and uncertainty in the state labels is
//! marginalized by multiple imputation over candidate label datasets drawn
//! from upstream classification probabilities.
//!
//! Entry points:
//!
//! - [`pg`] — exact PG(b, c) random variate generation.
//! - [`model`] — state alphabets, design layout, link and transition math.
//! - [`gibbs`] — the sampler: full conditionals and the chain loop.
//! - [`imputation`] — candidate label datasets from classification probabilities.
//! - [`summary`] — odds ratios, credible intervals, pairwise habitat
//!   comparisons and posterior-predictive sequences.
//! - [`sim`] — synthetic scenarios for parameter-recovery validation.
//! - [`io`] — CSV ingestion, configuration, chain export and run manifests.
//!
//! Runnable walkthroughs live in the `examples/` directory; the thin
//! `pg-markov` binary wires the same library calls into the
//! `simulate | validate | impute | fit | summarize | gof` pipeline.

pub mod error;
pub mod gibbs;
pub mod imputation;
pub mod io;
pub mod model;
pub mod pg;
pub mod sim;
pub mod summary;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
