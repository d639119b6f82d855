//! Expected-flow ratio grids for node-covariate functional forms.
//!
//! For a group of terms on one covariate, the ratio at origin level `x_i` and
//! destination level `x_j` is
//! `exp(sum_k theta_k * (f_k(x_i, x_j) - f_k(x0, x0)))`, i.e. the expected
//! edge value of an independent-Poisson edge relative to one whose endpoints
//! both sit at the normalizer `x0`. Composite groups multiply their
//! single-term ratios.

use crate::error::{Error, Result};
use crate::knockout::{node_reference, Rule};
use crate::terms::{covariate_form, ModelSpec, TermKind, TermSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct FormTerm {
    pub label: String,
    pub kind: TermKind,
    pub theta: f64,
}

/// Terms sharing one node covariate.
#[derive(Debug, Clone, PartialEq)]
pub struct TermGroup {
    pub covariate: String,
    pub terms: Vec<FormTerm>,
}

impl TermGroup {
    /// Builds a group from explicit terms, which must all be node-covariate
    /// forms on the same covariate with coefficients.
    pub fn new(terms: &[TermSpec]) -> Result<Self> {
        let first = terms.first().ok_or_else(|| Error::GroupMismatch("empty term group".into()))?;
        let covariate = first.covariate.clone().unwrap_or_default();
        let mut out = Vec::with_capacity(terms.len());
        for t in terms {
            if !t.kind.is_node_form() {
                return Err(Error::GroupMismatch(format!("{} is not a node-covariate form", t.label())));
            }
            if t.covariate.as_deref() != Some(covariate.as_str()) {
                return Err(Error::GroupMismatch(format!(
                    "{} is on `{}`, group is on `{covariate}`",
                    t.label(),
                    t.covariate.as_deref().unwrap_or("?")
                )));
            }
            let theta = t.coefficient.ok_or_else(|| Error::MissingCoefficient(t.label()))?;
            out.push(FormTerm { label: t.label(), kind: t.kind, theta });
        }
        Ok(Self { covariate, terms: out })
    }

    /// Every node-covariate form of `covariate` in a fitted model.
    pub fn from_model(model: &ModelSpec, covariate: &str) -> Result<Self> {
        let terms: Vec<TermSpec> =
            model.terms.iter().filter(|t| t.kind.is_node_form() && t.covariate.as_deref() == Some(covariate)).cloned().collect();
        if terms.is_empty() {
            return Err(Error::GroupMismatch(format!("no functional-form terms on `{covariate}`")));
        }
        Self::new(&terms)
    }

    /// Single-term sub-groups, in order.
    pub fn components(&self) -> Vec<TermGroup> {
        self.terms.iter().map(|t| TermGroup { covariate: self.covariate.clone(), terms: vec![t.clone()] }).collect()
    }

    pub fn log_ratio(&self, x_i: f64, x_j: f64, x0: f64) -> f64 {
        self.terms.iter().map(|t| t.theta * (covariate_form(t.kind, x_i, x_j) - covariate_form(t.kind, x0, x0))).sum()
    }

    pub fn ratio(&self, x_i: f64, x_j: f64, x0: f64) -> f64 {
        self.log_ratio(x_i, x_j, x0).exp()
    }
}

/// Ratio matrix over origin levels (rows) and destination levels (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub origin: Vec<f64>,
    pub dest: Vec<f64>,
    pub x0: f64,
    /// Row-major, `origin.len() * dest.len()`.
    pub ratios: Vec<f64>,
}

impl Grid {
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.ratios[r * self.dest.len() + c]
    }

    /// Long-format rows `(origin, dest, ratio)`.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.origin.iter().flat_map(move |&o| self.dest.iter().map(move |&d| (o, d))).zip(&self.ratios).map(|((o, d), &r)| (o, d, r))
    }
}

pub fn ffgrid(group: &TermGroup, origin: &[f64], dest: &[f64], x0: f64) -> Grid {
    let ratios = origin.iter().flat_map(|&o| dest.iter().map(move |&d| group.ratio(o, d, x0))).collect();
    Grid { origin: origin.to_vec(), dest: dest.to_vec(), x0, ratios }
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => vec![],
        1 => vec![lo],
        _ => (0..n).map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Normalizer `x0` for a covariate: population-weighted mean for shares and
/// other level covariates, median for log-scale ones.
pub fn default_normalizer(covariate: &str, values: &[f64], weights: &[f64], weighted_median: bool) -> Result<f64> {
    let rule = if covariate.starts_with("log_") {
        if weighted_median {
            Rule::WeightedMedian
        } else {
            Rule::Median
        }
    } else {
        Rule::WeightedMean
    };
    node_reference(values, weights, rule, None, covariate)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub x: f64,
    /// Ratio for flows from a node at `x` into the focal node.
    pub r_in: f64,
    /// Ratio for flows from the focal node to a node at `x`.
    pub r_out: f64,
    pub net: f64,
    /// Population of nodes whose covariate is nearest to this grid point.
    pub pop_mass: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HistogramBin {
    pub lo: f64,
    pub hi: f64,
    pub pop_mass: f64,
    /// Sign of the net curve at the bin centre.
    pub net_sign: i8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FocalCurves {
    pub focal: f64,
    pub points: Vec<CurvePoint>,
    pub histogram: Vec<HistogramBin>,
}

/// Immigration and emigration ratio curves of a focal node at level `focal`
/// against partners at each level in `grid`, with a population histogram
/// of `node_values` over the grid's range.
pub fn focal_curves(
    group: &TermGroup,
    focal: f64,
    grid: &[f64],
    x0: f64,
    node_values: &[f64],
    weights: &[f64],
    bins: usize,
) -> FocalCurves {
    let mut points: Vec<CurvePoint> = grid
        .iter()
        .map(|&x| {
            let r_in = group.ratio(x, focal, x0);
            let r_out = group.ratio(focal, x, x0);
            CurvePoint { x, r_in, r_out, net: r_in - r_out, pop_mass: 0.0 }
        })
        .collect();
    if !points.is_empty() {
        for (&v, &w) in node_values.iter().zip(weights) {
            let nearest = grid.iter().enumerate().min_by(|a, b| (a.1 - v).abs().total_cmp(&(b.1 - v).abs())).map(|(k, _)| k).unwrap();
            points[nearest].pop_mass += w;
        }
    }

    let mut histogram = Vec::with_capacity(bins);
    if let (Some(&lo), Some(&hi)) = (grid.first(), grid.last()) {
        let edges = linspace(lo, hi, bins + 1);
        for b in 0..bins {
            let (a, z) = (edges[b], edges[b + 1]);
            let last = b + 1 == bins;
            let mass = node_values.iter().zip(weights).filter(|(&v, _)| v >= a && (v < z || (last && v <= z))).map(|(_, &w)| w).sum();
            let centre = (a + z) / 2.0;
            let net = group.ratio(centre, focal, x0) - group.ratio(focal, centre, x0);
            let net_sign = if net > 0.0 {
                1
            } else if net < 0.0 {
                -1
            } else {
                0
            };
            histogram.push(HistogramBin { lo: a, hi: z, pop_mass: mass, net_sign });
        }
    }
    FocalCurves { focal, points, histogram }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn group(terms: &[(TermKind, f64)]) -> TermGroup {
        let specs: Vec<TermSpec> = terms.iter().map(|&(k, t)| TermSpec::on(k, "p_dem").with_coef(t)).collect();
        TermGroup::new(&specs).unwrap()
    }

    #[test]
    fn normalizer_cell_is_one() {
        let g = group(&[(TermKind::AbsDissimilarity, -0.257), (TermKind::NodeOrigin, 0.024), (TermKind::SignDirection, -0.008)]);
        assert_eq!(g.ratio(0.41, 0.41, 0.41), 1.0);
    }

    #[test]
    fn dissimilarity_scalar() {
        let g = group(&[(TermKind::AbsDissimilarity, -0.257)]);
        assert_relative_eq!(g.ratio(0.1, 0.5, 0.3), (-0.257f64 * 0.4).exp(), max_relative = 1e-12);
    }

    #[test]
    fn sign_direction_is_antisymmetric() {
        let g = group(&[(TermKind::SignDirection, 0.3)]);
        for (a, b) in [(0.1, 0.9), (0.5, 0.2), (0.4, 0.4)] {
            assert_eq!(g.log_ratio(a, b, 0.5), -g.log_ratio(b, a, 0.5));
        }
    }

    #[test]
    fn mismatched_group_rejected() {
        let specs =
            vec![TermSpec::on(TermKind::NodeOrigin, "p_dem").with_coef(0.1), TermSpec::on(TermKind::NodeOrigin, "p_rural").with_coef(0.1)];
        assert!(matches!(TermGroup::new(&specs), Err(Error::GroupMismatch(_))));
        let specs = vec![TermSpec::new(TermKind::Mutuality).with_coef(0.1)];
        assert!(matches!(TermGroup::new(&specs), Err(Error::GroupMismatch(_))));
    }

    #[test]
    fn focal_curve_properties() {
        let grid = linspace(0.0, 1.0, 21);
        let vals = [0.05, 0.5, 0.95];
        let w = [1.0, 2.0, 3.0];
        let sym = group(&[(TermKind::AbsDissimilarity, -0.4)]);
        let c = focal_curves(&sym, 0.3, &grid, 0.5, &vals, &w, 10);
        assert!(c.points.iter().all(|p| p.net == 0.0));
        assert_eq!(c.points.iter().map(|p| p.pop_mass).sum::<f64>(), 6.0);
        assert_eq!(c.histogram.iter().map(|b| b.pop_mass).sum::<f64>(), 6.0);

        let dir = group(&[(TermKind::SignDirection, 0.2), (TermKind::NodeOrigin, 0.5)]);
        let c = focal_curves(&dir, 0.3, &grid, 0.5, &vals, &w, 10);
        for p in &c.points {
            if p.x > 0.3 + 1e-12 {
                assert!(p.net < 0.0, "{p:?}");
            }
            if (p.x - 0.3).abs() < 1e-12 {
                assert_eq!(p.net, 0.0);
            }
        }
    }

    #[test]
    fn linspace_endpoints() {
        let v = linspace(-1.0, 2.0, 101);
        assert_eq!(v.len(), 101);
        assert_eq!(v[0], -1.0);
        assert_eq!(v[100], 2.0);
    }
}
