//! Count-valued exponential-family random graph models for directed
//! origin-destination flow networks.
//!
//! The crate covers the full workflow: loading a flow network and node
//! covariates, specifying a model from sufficient-statistic [`terms`],
//! fitting it by maximum pseudo-likelihood ([`mple`]), drawing networks
//! from the fitted model with a Gibbs [`sampler`], and the downstream
//! analyses: group [`metrics`] and rankings, covariate [`knockout`]
//! experiments, functional-form ratio grids ([`ffgrid`]) and attribute
//! [`quantiles`].

pub mod covariates;
pub mod error;
pub mod ffgrid;
pub mod io;
pub mod knockout;
pub mod linalg;
pub mod metrics;
pub mod mple;
pub mod network;
pub mod pmf;
pub mod quantiles;
pub mod sampler;
pub mod seeds;
pub mod terms;

pub use covariates::{Covariates, DyadColumn, DyadTable, NodeTable};
pub use error::{Error, Result};
pub use mple::{fit_mple, fit_mple_fixed, neg_log_pseudolikelihood, FitOptions, FitResult};
pub use network::{build_network, CountNetwork};
pub use pmf::{ConditionalPmf, Predictor, Truncation};
pub use sampler::{gibbs_sweep, sample_networks, InitMode, SamplerConfig};
pub use terms::{change_stat, covariate_form, global_stat, BoundModel, ModelSpec, TermKind, TermSpec};
