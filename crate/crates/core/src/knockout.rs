//! Counterfactual knockout scenarios.
//!
//! A knockout replaces a covariate by one common value across all nodes (or
//! all dyads), re-simulates networks from the fitted model under the altered
//! covariates, and compares a focal group's average rank against the
//! unaltered model.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariates::{Covariates, DyadColumn};
use crate::error::{Error, Result};
use crate::metrics::{compute_metrics, rank_groups, Grouping, Metric};
use crate::network::CountNetwork;
use crate::pmf::Predictor;
use crate::sampler::{run_chain, SamplerConfig};
use crate::seeds;
use crate::terms::{BoundModel, ModelSpec};

/// Name of the pseudo-covariate that selects population equalization.
pub const POPULATION: &str = "population";

pub const BASELINE: &str = "Full Model";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// Population-weighted mean over nodes.
    WeightedMean,
    /// Unweighted median over nodes.
    Median,
    /// Population-weighted median over nodes.
    WeightedMedian,
    /// The knockout's `value`.
    Fixed,
    /// Mean over all ordered dyads of a dyadic covariate.
    DyadMean,
    /// Every node gets total population / n.
    Equalize,
}

/// Default rule for a covariate: shares use the population-weighted mean,
/// log-scale node covariates the median, dyadic covariates their mean.
pub fn default_rule(covariate: &str, x: &Covariates) -> Rule {
    if covariate == POPULATION {
        Rule::Equalize
    } else if x.nodes.numeric(covariate).is_none() && x.dyads.get(covariate).is_some() {
        Rule::DyadMean
    } else if covariate.starts_with("log_") {
        Rule::Median
    } else {
        Rule::WeightedMean
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knockout {
    pub covariate: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl Knockout {
    pub fn new(covariate: &str) -> Self {
        Self { covariate: covariate.to_string(), rule: None, value: None }
    }

    pub fn with_rule(mut self, rule: Rule) -> Self {
        self.rule = Some(rule);
        self
    }

    pub fn fixed(covariate: &str, value: f64) -> Self {
        Self { covariate: covariate.to_string(), rule: Some(Rule::Fixed), value: Some(value) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnockoutScenario {
    pub name: String,
    #[serde(default, rename = "knockout")]
    pub knockouts: Vec<Knockout>,
}

impl KnockoutScenario {
    pub fn new(name: &str, knockouts: Vec<Knockout>) -> Self {
        Self { name: name.to_string(), knockouts }
    }
}

/// Scenario configuration file:
///
/// ```toml
/// focal_group = "CA"
/// group_col = "state"
///
/// [[scenario]]
/// name = "Remove Distance Effect"
/// [[scenario.knockout]]
/// covariate = "log_distance"
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioFile {
    #[serde(default)]
    pub focal_group: Option<String>,
    #[serde(default)]
    pub group_col: Option<String>,
    #[serde(default, rename = "scenario")]
    pub scenarios: Vec<KnockoutScenario>,
}

impl ScenarioFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        let f: ScenarioFile = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let mut names = std::collections::HashSet::new();
        names.insert(BASELINE.to_string());
        for s in &f.scenarios {
            if !names.insert(s.name.clone()) {
                return Err(Error::Config(format!("duplicate scenario name `{}`", s.name)));
            }
        }
        Ok(f)
    }
}

pub fn weighted_mean(values: &[f64], weights: &[f64], name: &str) -> Result<f64> {
    let wsum: f64 = weights.iter().sum();
    if wsum.is_nan() || wsum <= 0.0 {
        return Err(Error::ZeroWeights(name.to_string()));
    }
    Ok(values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / wsum)
}

/// Middle order statistic; the mean of the two middle values for even length.
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty());
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        (v[m - 1] + v[m]) / 2.0
    }
}

/// Smallest value whose cumulative weight reaches half the total.
pub fn weighted_median(values: &[f64], weights: &[f64], name: &str) -> Result<f64> {
    let wsum: f64 = weights.iter().sum();
    if wsum.is_nan() || wsum <= 0.0 {
        return Err(Error::ZeroWeights(name.to_string()));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut acc = 0.0;
    for k in idx {
        acc += weights[k];
        if acc >= wsum / 2.0 {
            return Ok(values[k]);
        }
    }
    unreachable!("weights sum to a positive total")
}

/// Common value a node covariate is anchored at under `rule`.
pub fn node_reference(values: &[f64], weights: &[f64], rule: Rule, fixed: Option<f64>, name: &str) -> Result<f64> {
    match rule {
        Rule::WeightedMean => weighted_mean(values, weights, name),
        Rule::Median => Ok(median(values)),
        Rule::WeightedMedian => weighted_median(values, weights, name),
        Rule::Fixed => fixed.ok_or_else(|| Error::Config(format!("fixed knockout of `{name}` needs a value"))),
        Rule::DyadMean | Rule::Equalize => Err(Error::Config(format!("rule {rule:?} does not apply to node covariate `{name}`"))),
    }
}

fn is_constant(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] == w[1])
}

/// Covariates with every knockout in `scenario` applied.
pub fn apply_knockout(scenario: &KnockoutScenario, x: &Covariates) -> Result<Covariates> {
    let mut out = x.clone();
    for ko in &scenario.knockouts {
        apply_one(ko, &mut out)?;
    }
    Ok(out)
}

fn apply_one(ko: &Knockout, x: &mut Covariates) -> Result<()> {
    let name = ko.covariate.as_str();
    let rule = ko.rule.unwrap_or_else(|| default_rule(name, x));
    if rule == Rule::Equalize {
        if name != POPULATION {
            return Err(Error::Config(format!("equalize applies to `{POPULATION}`, not `{name}`")));
        }
        return equalize_population(x);
    }
    if let Some(values) = x.nodes.numeric(name) {
        if is_constant(values) {
            return Ok(());
        }
        let v = node_reference(values, x.nodes.population(), rule, ko.value, name)?;
        let n = values.len();
        x.nodes.set_numeric(name, vec![v; n])?;
        return Ok(());
    }
    if let Some(col) = x.dyads.get(name) {
        if matches!(col, DyadColumn::Constant(_)) {
            return Ok(());
        }
        let v = match rule {
            Rule::DyadMean => dyad_mean(col, x.n_nodes()),
            Rule::Fixed => ko.value.ok_or_else(|| Error::Config(format!("fixed knockout of `{name}` needs a value")))?,
            other => return Err(Error::Config(format!("rule {other:?} does not apply to dyadic covariate `{name}`"))),
        };
        x.dyads.insert(name, DyadColumn::Constant(v));
        return Ok(());
    }
    Err(Error::UnknownCovariate(name.to_string()))
}

fn dyad_mean(col: &DyadColumn, n: usize) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += col.value(i, j);
            }
        }
    }
    s / (n * (n - 1)) as f64
}

/// Gives every node the mean population and shifts the population-derived
/// covariates `log_population` and `log_density` to match.
fn equalize_population(x: &mut Covariates) -> Result<()> {
    let old = x.nodes.population().to_vec();
    if is_constant(&old) {
        return Ok(());
    }
    let n = old.len();
    let total: f64 = old.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::ZeroWeights(POPULATION.into()));
    }
    let each = total / n as f64;
    if x.nodes.numeric("log_population").is_some() {
        x.nodes.set_numeric("log_population", vec![each.ln(); n])?;
    }
    if let Some(ld) = x.nodes.numeric("log_density") {
        if old.iter().any(|&p| p <= 0.0) {
            return Err(Error::Config("cannot rescale log_density for zero-population nodes".into()));
        }
        let shifted = ld.iter().zip(&old).map(|(d, p)| d + (each / p).ln()).collect();
        x.nodes.set_numeric("log_density", shifted)?;
    }
    x.nodes.set_population(vec![each; n])
}

/// One row of the ranking report.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRow {
    pub name: String,
    /// Focal group's rank in each retained sample, indexed `[metric][sample]`.
    pub sample_ranks: Vec<Vec<f64>>,
    pub average_rank: Vec<f64>,
    /// Average rank minus the baseline's; zero for the baseline itself.
    pub change: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub focal_group: String,
    pub metrics: Vec<Metric>,
    pub rows: Vec<ScenarioRow>,
}

impl ScenarioReport {
    pub fn row(&self, name: &str) -> Option<&ScenarioRow> {
        self.rows.iter().find(|r| r.name == name)
    }

    pub fn metric_index(&self, metric: Metric) -> usize {
        self.metrics.iter().position(|&m| m == metric).expect("metric reported")
    }
}

/// Inputs shared by every scenario of a suite.
pub struct KnockoutSuite<'a> {
    /// Model with coefficients.
    pub model: &'a ModelSpec,
    pub covariates: &'a Covariates,
    pub observed: &'a CountNetwork,
    /// Group assignment and the (unaltered) group populations used as rate
    /// denominators in every scenario.
    pub grouping: &'a Grouping,
    pub focal_group: usize,
    /// `seed` is the master seed; scenario `s` (baseline is 0) runs with
    /// `seeds::derive(seed, s)`.
    pub sampler: SamplerConfig,
}

impl KnockoutSuite<'_> {
    /// Runs the baseline plus every scenario, concurrently, one chain each.
    pub fn run(&self, scenarios: &[KnockoutScenario]) -> Result<ScenarioReport> {
        if self.focal_group >= self.grouping.n_groups() {
            return Err(Error::Config("focal group out of range".into()));
        }
        let theta = self.model.theta()?;
        let mut all = vec![KnockoutScenario::new(BASELINE, vec![])];
        all.extend(scenarios.iter().cloned());
        let metrics = Metric::ALL.to_vec();

        let ranks: Vec<Result<Vec<Vec<f64>>>> = all
            .par_iter()
            .enumerate()
            .map(|(s, scenario)| {
                let x = apply_knockout(scenario, self.covariates)?;
                let bound = BoundModel::bind(self.model, &x)?;
                let predictor = Predictor::new(&bound, &theta)?;
                let cfg = SamplerConfig { seed: seeds::derive(self.sampler.seed, s as u64), ..self.sampler.clone() };
                let mut per_metric = vec![Vec::with_capacity(cfg.n_samples); metrics.len()];
                run_chain(&predictor, self.observed, &cfg, |_, net| {
                    let report = compute_metrics(net, self.grouping)?;
                    for (m, &metric) in metrics.iter().enumerate() {
                        per_metric[m].push(rank_groups(&report, metric)[self.focal_group]);
                    }
                    Ok(())
                })?;
                Ok(per_metric)
            })
            .collect();

        let mut rows = Vec::with_capacity(all.len());
        for (scenario, r) in all.iter().zip(ranks) {
            let sample_ranks = r?;
            let average_rank: Vec<f64> =
                sample_ranks.iter().map(|v| if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 }).collect();
            rows.push(ScenarioRow { name: scenario.name.clone(), sample_ranks, average_rank, change: vec![] });
        }
        let base = rows[0].average_rank.clone();
        for row in &mut rows {
            row.change = row.average_rank.iter().zip(&base).map(|(a, b)| a - b).collect();
        }
        Ok(ScenarioReport { focal_group: self.grouping.names()[self.focal_group].clone(), metrics, rows })
    }
}
