//! Sufficient statistics of the model and their change statistics.
//!
//! Every term is either *edge-linear*, contributing `f(X_ij) * y_ij` for a
//! dyad-level factor `f`, or one of the three nonlinear terms (`nonzero`,
//! `mutuality`, `waypoint_flow`). Change statistics are defined for arbitrary
//! `k_old -> k_new` moves on a single edge.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::covariates::{Covariates, DyadColumn};
use crate::error::{Error, Result};
use crate::network::CountNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TermKind {
    /// Total flow, `sum_ij y_ij`.
    Sum,
    /// Number of positive edges.
    Nonzero,
    /// `sum_{i<j} min(y_ij, y_ji)`.
    Mutuality,
    /// `sum_i min(in_i, out_i)`.
    WaypointFlow,
    /// Origin covariate level `x_i`.
    NodeOrigin,
    /// Destination covariate level `x_j`.
    NodeDestination,
    /// `|x_i - x_j|`.
    AbsDissimilarity,
    /// `sign(x_j - x_i)`.
    SignDirection,
    /// `x_j - x_i`.
    Difference,
    /// Named dyadic covariate such as `log_distance` or `same_state`.
    DyadCovariate,
    /// Indicator that the origin's category equals `level`.
    CategoryOrigin,
    /// Indicator that the destination's category equals `level`.
    CategoryDestination,
}

impl TermKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TermKind::Sum => "sum",
            TermKind::Nonzero => "nonzero",
            TermKind::Mutuality => "mutuality",
            TermKind::WaypointFlow => "waypoint_flow",
            TermKind::NodeOrigin => "node_origin",
            TermKind::NodeDestination => "node_destination",
            TermKind::AbsDissimilarity => "abs_dissimilarity",
            TermKind::SignDirection => "sign_direction",
            TermKind::Difference => "difference",
            TermKind::DyadCovariate => "dyad_covariate",
            TermKind::CategoryOrigin => "category_origin",
            TermKind::CategoryDestination => "category_destination",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        ALL_KINDS.iter().copied().find(|k| k.as_str() == s)
    }

    pub fn needs_covariate(self) -> bool {
        !matches!(self, TermKind::Sum | TermKind::Nonzero | TermKind::Mutuality | TermKind::WaypointFlow)
    }

    pub fn needs_level(self) -> bool {
        matches!(self, TermKind::CategoryOrigin | TermKind::CategoryDestination)
    }

    /// Terms whose value is `f(x_i, x_j) * y_ij` for one node covariate.
    pub fn is_node_form(self) -> bool {
        matches!(
            self,
            TermKind::NodeOrigin | TermKind::NodeDestination | TermKind::AbsDissimilarity | TermKind::SignDirection | TermKind::Difference
        )
    }

    pub fn is_edge_linear(self) -> bool {
        !matches!(self, TermKind::Nonzero | TermKind::Mutuality | TermKind::WaypointFlow)
    }
}

pub const ALL_KINDS: [TermKind; 12] = [
    TermKind::Sum,
    TermKind::Nonzero,
    TermKind::Mutuality,
    TermKind::WaypointFlow,
    TermKind::NodeOrigin,
    TermKind::NodeDestination,
    TermKind::AbsDissimilarity,
    TermKind::SignDirection,
    TermKind::Difference,
    TermKind::DyadCovariate,
    TermKind::CategoryOrigin,
    TermKind::CategoryDestination,
];

/// Functional form of a node-covariate term evaluated at origin level `x_i`
/// and destination level `x_j`.
pub fn covariate_form(kind: TermKind, x_i: f64, x_j: f64) -> f64 {
    match kind {
        TermKind::NodeOrigin => x_i,
        TermKind::NodeDestination => x_j,
        TermKind::AbsDissimilarity => (x_i - x_j).abs(),
        TermKind::SignDirection => {
            let d = x_j - x_i;
            if d > 0.0 {
                1.0
            } else if d < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        TermKind::Difference => x_j - x_i,
        other => panic!("{} is not a node-covariate form", other.as_str()),
    }
}

/// One model term, optionally carrying its coefficient.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermSpec {
    pub kind: TermKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub covariate: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient: Option<f64>,
}

impl TermSpec {
    pub fn new(kind: TermKind) -> Self {
        Self { kind, covariate: None, level: None, name: None, coefficient: None }
    }

    pub fn on(kind: TermKind, covariate: &str) -> Self {
        Self { covariate: Some(covariate.to_string()), ..Self::new(kind) }
    }

    pub fn category(kind: TermKind, covariate: &str, level: &str) -> Self {
        Self { level: Some(level.to_string()), ..Self::on(kind, covariate) }
    }

    pub fn with_coef(mut self, theta: f64) -> Self {
        self.coefficient = Some(theta);
        self
    }

    pub fn named(mut self, name: &str) -> Self {
        self.name = Some(name.to_string());
        self
    }

    /// Explicit name or one derived from kind, covariate and level.
    pub fn label(&self) -> String {
        if let Some(n) = &self.name {
            return n.clone();
        }
        let cov = self.covariate.as_deref().unwrap_or("?");
        match self.kind {
            TermKind::Sum | TermKind::Nonzero | TermKind::Mutuality | TermKind::WaypointFlow => self.kind.as_str().to_string(),
            TermKind::NodeOrigin => format!("origin({cov})"),
            TermKind::NodeDestination => format!("destination({cov})"),
            TermKind::AbsDissimilarity => format!("dissimilarity({cov})"),
            TermKind::SignDirection => format!("to_higher({cov})"),
            TermKind::Difference => format!("difference({cov})"),
            TermKind::DyadCovariate => cov.to_string(),
            TermKind::CategoryOrigin => {
                format!("origin({cov}={})", self.level.as_deref().unwrap_or("?"))
            }
            TermKind::CategoryDestination => {
                format!("destination({cov}={})", self.level.as_deref().unwrap_or("?"))
            }
        }
    }
}

/// Ordered list of terms under the Poisson reference measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(rename = "term")]
    pub terms: Vec<TermSpec>,
}

impl ModelSpec {
    pub fn new(terms: Vec<TermSpec>) -> Result<Self> {
        let m = Self { terms };
        m.validate()?;
        Ok(m)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let m: ModelSpec = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("model serializes")
    }

    pub fn validate(&self) -> Result<()> {
        if self.terms.is_empty() {
            return Err(Error::InvalidModel("model has no terms".into()));
        }
        let mut seen = HashSet::new();
        for t in &self.terms {
            if t.kind.needs_covariate() && t.covariate.is_none() {
                return Err(Error::InvalidModel(format!("{} needs a covariate", t.kind.as_str())));
            }
            if t.kind.needs_level() && t.level.is_none() {
                return Err(Error::InvalidModel(format!("{} needs a level", t.kind.as_str())));
            }
            if let Some(c) = t.coefficient {
                if !c.is_finite() {
                    return Err(Error::InvalidModel(format!("non-finite coefficient on {}", t.label())));
                }
            }
            let label = t.label();
            if !seen.insert(label.clone()) {
                return Err(Error::InvalidModel(format!("duplicate term name `{label}`")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.terms.iter().map(TermSpec::label).collect()
    }

    /// Coefficient vector, failing if any term lacks one.
    pub fn theta(&self) -> Result<Vec<f64>> {
        self.terms.iter().map(|t| t.coefficient.ok_or_else(|| Error::MissingCoefficient(t.label()))).collect()
    }

    pub fn with_theta(&self, theta: &[f64]) -> Self {
        assert_eq!(theta.len(), self.terms.len());
        let terms = self.terms.iter().zip(theta).map(|(t, &c)| t.clone().with_coef(c)).collect();
        Self { terms }
    }

    /// Expands a categorical column into origin and destination indicator
    /// terms for every level except `reference`.
    pub fn category_effects(x: &Covariates, covariate: &str, reference: &str) -> Result<Vec<TermSpec>> {
        let levels = x.levels(covariate)?;
        if !levels.iter().any(|l| l == reference) {
            return Err(Error::Config(format!("reference level `{reference}` not in `{covariate}`")));
        }
        let mut out = Vec::new();
        for l in levels.iter().filter(|l| *l != reference) {
            out.push(TermSpec::category(TermKind::CategoryDestination, covariate, l));
            out.push(TermSpec::category(TermKind::CategoryOrigin, covariate, l));
        }
        Ok(out)
    }
}

/// A term bound to the covariate columns it reads.
#[derive(Debug, Clone)]
pub enum BoundTerm<'a> {
    Sum,
    Nonzero,
    Mutuality,
    WaypointFlow,
    Node(TermKind, &'a [f64]),
    Dyad(&'a DyadColumn),
    CategoryOrigin(Vec<bool>),
    CategoryDestination(Vec<bool>),
}

impl<'a> BoundTerm<'a> {
    pub fn bind(term: &TermSpec, x: &'a Covariates) -> Result<Self> {
        let cov = || term.covariate.as_deref().ok_or_else(|| Error::InvalidModel(format!("{} needs a covariate", term.kind.as_str())));
        Ok(match term.kind {
            TermKind::Sum => BoundTerm::Sum,
            TermKind::Nonzero => BoundTerm::Nonzero,
            TermKind::Mutuality => BoundTerm::Mutuality,
            TermKind::WaypointFlow => BoundTerm::WaypointFlow,
            k if k.is_node_form() => BoundTerm::Node(k, x.node_column(cov()?)?),
            TermKind::DyadCovariate => BoundTerm::Dyad(x.dyad_column(cov()?)?),
            TermKind::CategoryOrigin | TermKind::CategoryDestination => {
                let labels = x.category_column(cov()?)?;
                let level = term.level.as_deref().unwrap_or_default();
                let ind = labels.iter().map(|l| l == level).collect();
                if term.kind == TermKind::CategoryOrigin {
                    BoundTerm::CategoryOrigin(ind)
                } else {
                    BoundTerm::CategoryDestination(ind)
                }
            }
            _ => unreachable!(),
        })
    }

    /// `f(X_ij)` for edge-linear terms, `None` for the nonlinear ones.
    #[inline]
    pub fn linear_factor(&self, i: usize, j: usize) -> Option<f64> {
        match self {
            BoundTerm::Sum => Some(1.0),
            BoundTerm::Node(kind, col) => Some(covariate_form(*kind, col[i], col[j])),
            BoundTerm::Dyad(col) => Some(col.value(i, j)),
            BoundTerm::CategoryOrigin(ind) => Some(f64::from(u8::from(ind[i]))),
            BoundTerm::CategoryDestination(ind) => Some(f64::from(u8::from(ind[j]))),
            BoundTerm::Nonzero | BoundTerm::Mutuality | BoundTerm::WaypointFlow => None,
        }
    }

    pub fn is_linear(&self) -> bool {
        !matches!(self, BoundTerm::Nonzero | BoundTerm::Mutuality | BoundTerm::WaypointFlow)
    }

    /// Exact `g(y, X)`.
    pub fn global(&self, net: &CountNetwork) -> f64 {
        match self {
            BoundTerm::Nonzero => net.n_edges() as f64,
            BoundTerm::Mutuality => net.edges().filter(|&(i, j, _)| i < j).map(|(i, j, k)| k.min(net.get(j, i)) as f64).sum(),
            BoundTerm::WaypointFlow => (0..net.n_nodes()).map(|v| net.in_total(v).min(net.out_total(v)) as f64).sum(),
            BoundTerm::Sum => net.total() as f64,
            linear => net.edges().map(|(i, j, k)| linear.linear_factor(i, j).unwrap() * k as f64).sum(),
        }
    }

    /// `g(y with y_ij = k_new) - g(y with y_ij = k_old)` given `ctx` built
    /// from the current network.
    #[inline]
    pub fn delta(&self, ctx: &DyadContext, k_old: u64, k_new: u64) -> f64 {
        match self.linear_factor(ctx.i, ctx.j) {
            Some(f) => f * (k_new as f64 - k_old as f64),
            None => self.nonlinear_from_zero(ctx, k_new) - self.nonlinear_from_zero(ctx, k_old),
        }
    }

    /// `g(y_ij = k) - g(y_ij = 0)` for the nonlinear terms.
    #[inline]
    pub fn nonlinear_from_zero(&self, ctx: &DyadContext, k: u64) -> f64 {
        match self {
            BoundTerm::Nonzero => f64::from(u8::from(k > 0)),
            BoundTerm::Mutuality => k.min(ctx.y_ji) as f64,
            BoundTerm::WaypointFlow => {
                let at_i = ctx.in_i.min(ctx.out_i_rest + k) - ctx.in_i.min(ctx.out_i_rest);
                let at_j = (ctx.in_j_rest + k).min(ctx.out_j) - ctx.in_j_rest.min(ctx.out_j);
                (at_i + at_j) as f64
            }
            linear => linear.linear_factor(ctx.i, ctx.j).unwrap() * k as f64,
        }
    }
}

/// Everything about the rest of the network a single-edge change depends on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DyadContext {
    pub i: usize,
    pub j: usize,
    /// Current stored `y_ij`.
    pub y_ij: u64,
    pub y_ji: u64,
    pub in_i: u64,
    /// Out-total of `i` excluding `y_ij`.
    pub out_i_rest: u64,
    /// In-total of `j` excluding `y_ij`.
    pub in_j_rest: u64,
    pub out_j: u64,
}

impl DyadContext {
    #[inline]
    pub fn new(net: &CountNetwork, i: usize, j: usize) -> Self {
        let y_ij = net.get(i, j);
        Self {
            i,
            j,
            y_ij,
            y_ji: net.get(j, i),
            in_i: net.in_total(i),
            out_i_rest: net.out_total(i) - y_ij,
            in_j_rest: net.in_total(j) - y_ij,
            out_j: net.out_total(j),
        }
    }
}

/// A model bound to a covariate set.
#[derive(Debug, Clone)]
pub struct BoundModel<'a> {
    pub terms: Vec<BoundTerm<'a>>,
    pub labels: Vec<String>,
}

impl<'a> BoundModel<'a> {
    pub fn bind(model: &ModelSpec, x: &'a Covariates) -> Result<Self> {
        model.validate()?;
        let terms = model.terms.iter().map(|t| BoundTerm::bind(t, x)).collect::<Result<_>>()?;
        Ok(Self { terms, labels: model.labels() })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every term is edge-linear, i.e. edges are independent Poisson.
    pub fn is_dyad_independent(&self) -> bool {
        self.terms.iter().all(|t| t.is_linear())
    }

    pub fn global_stats(&self, net: &CountNetwork) -> Vec<f64> {
        self.terms.iter().map(|t| t.global(net)).collect()
    }
}

/// Exact value of one term on `net`.
pub fn global_stat(term: &TermSpec, net: &CountNetwork, x: &Covariates) -> Result<f64> {
    Ok(BoundTerm::bind(term, x)?.global(net))
}

/// Change in `term` when `y_ij` moves from `k_old` (which must be the stored
/// value) to `k_new`. The network is not modified.
pub fn change_stat(term: &TermSpec, net: &CountNetwork, x: &Covariates, i: usize, j: usize, k_old: u64, k_new: u64) -> Result<f64> {
    if i == j {
        return Err(Error::SelfLoop(i.to_string()));
    }
    let stored = net.get(i, j);
    if stored != k_old {
        return Err(Error::StaleValue { i, j, stored, assumed: k_old });
    }
    let bound = BoundTerm::bind(term, x)?;
    Ok(bound.delta(&DyadContext::new(net, i, j), k_old, k_new))
}
