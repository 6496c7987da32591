//! Quantified reproducibility assessment for comparable evaluation experiments.
//!
//! A study bundle holds two or more comparable experiments per quality
//! criterion, each with a property sheet describing its measurement
//! conditions. The crate computes degree-of-reproducibility measures for
//! four kinds of results:
//!
//! - single scores: the small-sample unbiased coefficient of variation CV* ([`precision`])
//! - sets of scores: Pearson r, Spearman rho, Kendall tau-b and W ([`correlation`])
//! - categorical labels: Cohen's and Fleiss's kappa, Krippendorff's alpha ([`agreement`])
//! - findings: P, the proportion of identical pairwise system ranks ([`findings`])
//!
//! at system, quality-criterion and study level ([`assessment`]), and renders
//! reports in canonical JSON, tab-separated and markdown form ([`report`]).

pub mod agreement;
pub mod assessment;
pub mod bundle;
pub mod cli;
pub mod correlation;
pub mod error;
pub mod findings;
pub mod model;
pub mod precision;
pub mod properties;
pub mod report;

pub use error::{Error, Result};
