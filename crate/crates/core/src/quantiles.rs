//! Where a subset of nodes sits within each covariate's distribution.

use crate::covariates::NodeTable;
use crate::error::{Error, Result};
use crate::knockout::{median, weighted_mean};

#[derive(Debug, Clone, PartialEq)]
pub struct CovariateQuantiles {
    pub covariate: String,
    /// `(node index, value, quantile)` for each subset node, in subset order.
    pub nodes: Vec<(usize, f64, f64)>,
    pub subset_median: f64,
    pub median_quantile: f64,
    /// Population-weighted subset mean, when subset population is positive.
    pub weighted_mean: Option<f64>,
    pub weighted_mean_quantile: Option<f64>,
}

/// Empirical CDF of `sorted` evaluated at `v`: share of values `<= v`.
pub fn ecdf(sorted: &[f64], v: f64) -> f64 {
    sorted.partition_point(|&x| x <= v) as f64 / sorted.len() as f64
}

/// Quantile position of every subset node on every numeric covariate.
pub fn attribute_quantiles(nodes: &NodeTable, subset: &[usize]) -> Result<Vec<CovariateQuantiles>> {
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(&k) = subset.iter().find(|&&k| k >= nodes.len()) {
        return Err(Error::NodeIndex(k));
    }
    let pop = nodes.population();
    let mut out = Vec::new();
    for name in nodes.numeric_names() {
        let values = nodes.numeric(name).unwrap();
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let sub: Vec<f64> = subset.iter().map(|&k| values[k]).collect();
        let sub_w: Vec<f64> = subset.iter().map(|&k| pop[k]).collect();
        let subset_median = median(&sub);
        let weighted = weighted_mean(&sub, &sub_w, name).ok();
        out.push(CovariateQuantiles {
            covariate: name.to_string(),
            nodes: subset.iter().map(|&k| (k, values[k], ecdf(&sorted, values[k]))).collect(),
            subset_median,
            median_quantile: ecdf(&sorted, subset_median),
            weighted_mean: weighted,
            weighted_mean_quantile: weighted.map(|w| ecdf(&sorted, w)),
        });
    }
    Ok(out)
}
