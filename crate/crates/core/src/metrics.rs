//! Group-level migration metrics, network asymmetry and rankings.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::CountNetwork;

/// Assignment of nodes to groups (e.g. counties to states).
#[derive(Debug, Clone, PartialEq)]
pub struct Grouping {
    names: Vec<String>,
    of_node: Vec<usize>,
    population: Vec<f64>,
}

impl Grouping {
    /// Groups are the distinct labels in sorted order; a group's population
    /// is the sum of its nodes' populations.
    pub fn from_labels(node_ids: &[String], labels: &[Option<String>], node_population: &[f64]) -> Result<Self> {
        let mut index = BTreeMap::new();
        for (k, l) in labels.iter().enumerate() {
            match l {
                Some(l) if !l.is_empty() => {
                    index.entry(l.clone()).or_insert(0usize);
                }
                _ => return Err(Error::Unassigned(node_ids[k].clone())),
            }
        }
        for (pos, v) in index.values_mut().enumerate() {
            *v = pos;
        }
        let names: Vec<String> = index.keys().cloned().collect();
        let of_node: Vec<usize> = labels.iter().map(|l| index[l.as_ref().unwrap()]).collect();
        let mut population = vec![0.0; names.len()];
        for (&g, &p) in of_node.iter().zip(node_population) {
            population[g] += p;
        }
        Self::new(names, of_node, population)
    }

    pub fn new(names: Vec<String>, of_node: Vec<usize>, population: Vec<f64>) -> Result<Self> {
        if population.len() != names.len() {
            return Err(Error::Config("one population per group required".into()));
        }
        if let Some(&g) = of_node.iter().find(|&&g| g >= names.len()) {
            return Err(Error::Config(format!("group index {g} out of range")));
        }
        if let Some(k) = population.iter().position(|&p| !(p > 0.0 && p.is_finite())) {
            return Err(Error::Config(format!("group `{}` has non-positive population", names[k])));
        }
        Ok(Self { names, of_node, population })
    }

    pub fn n_groups(&self) -> usize {
        self.names.len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn group_of(&self, node: usize) -> usize {
        self.of_node[node]
    }

    pub fn population(&self) -> &[f64] {
        &self.population
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupMetrics {
    pub group: String,
    pub population: f64,
    pub in_migrants: u64,
    pub out_migrants: u64,
    pub net_count: i64,
    pub net_rate: f64,
    /// Net count over turnover; `None` when the group has no migrants.
    pub mii: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricReport {
    pub groups: Vec<GroupMetrics>,
    pub total_migrants: u64,
    pub dyad_asymmetry: f64,
    pub node_asymmetry: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    NetCount,
    NetRate,
    Mii,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::NetCount, Metric::NetRate, Metric::Mii];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::NetCount => "net_count",
            Metric::NetRate => "net_rate",
            Metric::Mii => "mii",
        }
    }

    fn value(self, g: &GroupMetrics) -> Option<f64> {
        match self {
            Metric::NetCount => Some(g.net_count as f64),
            Metric::NetRate => Some(g.net_rate),
            Metric::Mii => g.mii,
        }
    }
}

/// `sum over unordered pairs |y_ij - y_ji|`, which equals the ordered sum halved.
pub fn dyad_asymmetry(net: &CountNetwork) -> f64 {
    let mut total: u64 = 0;
    for (i, j, k) in net.edges() {
        let back = net.get(j, i);
        if back == 0 {
            total += k;
        } else if i < j {
            total += k.abs_diff(back);
        }
    }
    total as f64
}

/// `sum_i |in_i - out_i| / 2`.
pub fn node_asymmetry(net: &CountNetwork) -> f64 {
    let s: u64 = (0..net.n_nodes()).map(|v| net.in_total(v).abs_diff(net.out_total(v))).sum();
    s as f64 / 2.0
}

/// Group in/out-migration counts from cross-group flows only, plus
/// network-wide asymmetry scalars.
pub fn compute_metrics(net: &CountNetwork, grouping: &Grouping) -> Result<MetricReport> {
    if grouping.of_node.len() != net.n_nodes() {
        return Err(Error::Unassigned(format!("{} nodes for {} assignments", net.n_nodes(), grouping.of_node.len())));
    }
    let g = grouping.n_groups();
    let mut ins = vec![0u64; g];
    let mut outs = vec![0u64; g];
    for (i, j, k) in net.edges() {
        let (gi, gj) = (grouping.of_node[i], grouping.of_node[j]);
        if gi != gj {
            outs[gi] += k;
            ins[gj] += k;
        }
    }
    let groups = (0..g)
        .map(|k| {
            let net_count = ins[k] as i64 - outs[k] as i64;
            let turnover = ins[k] + outs[k];
            GroupMetrics {
                group: grouping.names[k].clone(),
                population: grouping.population[k],
                in_migrants: ins[k],
                out_migrants: outs[k],
                net_count,
                net_rate: net_count as f64 / grouping.population[k],
                mii: (turnover > 0).then(|| net_count as f64 / turnover as f64),
            }
        })
        .collect();
    Ok(MetricReport { groups, total_migrants: net.total(), dyad_asymmetry: dyad_asymmetry(net), node_asymmetry: node_asymmetry(net) })
}

/// Average ranks of `values`, rank 1 for the largest. Ties share the mean of
/// the positions they span; missing values fill the last positions.
pub fn average_ranks(values: &[Option<f64>]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| match (values[a], values[b]) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end
        let r = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = r;
        }
        start = end;
    }
    ranks
}

/// Ranks of every group on `metric`, in group order.
pub fn rank_groups(report: &MetricReport, metric: Metric) -> Vec<f64> {
    let values: Vec<Option<f64>> = report.groups.iter().map(|g| metric.value(g)).collect();
    average_ranks(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn singleton_groups(n: usize) -> Grouping {
        Grouping::new((0..n).map(|i| format!("g{i}")).collect(), (0..n).collect(), vec![1000.0; n]).unwrap()
    }

    #[test]
    fn symmetric_network_has_no_asymmetry() {
        let net = CountNetwork::from_indexed(3, [(0, 1, 4), (1, 0, 4), (1, 2, 2), (2, 1, 2)]).unwrap();
        let r = compute_metrics(&net, &singleton_groups(3)).unwrap();
        assert_eq!(r.dyad_asymmetry, 0.0);
        assert_eq!(r.node_asymmetry, 0.0);
        assert!(r.groups.iter().all(|g| g.mii == Some(0.0)));
    }

    #[test]
    fn group_arithmetic() {
        // group 0 receives 6 and sends 4
        let net = CountNetwork::from_indexed(2, [(1, 0, 6), (0, 1, 4)]).unwrap();
        let r = compute_metrics(&net, &singleton_groups(2)).unwrap();
        let g = &r.groups[0];
        assert_eq!(g.net_count, 2);
        assert_abs_diff_eq!(g.net_rate, 0.002, epsilon = 1e-15);
        assert_abs_diff_eq!(g.mii.unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(r.dyad_asymmetry, 2.0);
        assert_eq!(r.node_asymmetry, 2.0);
    }

    #[test]
    fn within_group_flows_excluded() {
        let grouping = Grouping::new(vec!["a".into(), "b".into()], vec![0, 0, 1], vec![10.0, 5.0]).unwrap();
        let net = CountNetwork::from_indexed(3, [(0, 1, 50), (1, 2, 3)]).unwrap();
        let r = compute_metrics(&net, &grouping).unwrap();
        assert_eq!(r.groups[0].out_migrants, 3);
        assert_eq!(r.groups[0].in_migrants, 0);
        assert_eq!(r.groups[0].mii, Some(-1.0));
        assert_eq!(r.total_migrants, 53);
    }

    #[test]
    fn unassigned_node() {
        let ids = vec!["a".to_string(), "b".to_string()];
        let labels = vec![Some("x".to_string()), None];
        assert!(matches!(Grouping::from_labels(&ids, &labels, &[1.0, 1.0]), Err(Error::Unassigned(_))));
    }

    #[test]
    fn ranking_conventions() {
        assert_eq!(average_ranks(&[Some(1.0); 4]), vec![2.5; 4]);
        assert_eq!(average_ranks(&[Some(5.0), Some(4.0), Some(3.0)]), vec![1.0, 2.0, 3.0]);
        let r = average_ranks(&[Some(9.0), Some(8.0), Some(2.0), Some(2.0), Some(1.0)]);
        assert_eq!(r, vec![1.0, 2.0, 3.5, 3.5, 5.0]);
        let r = average_ranks(&[None, Some(0.0), None, Some(1.0)]);
        assert_eq!(r, vec![3.5, 2.0, 3.5, 1.0]);
    }
}
