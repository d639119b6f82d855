//! Sparse directed count network with cached in/out marginals.

use std::collections::{BTreeMap, HashSet};

use crate::covariates::NodeTable;
use crate::error::{Error, Result};

/// Directed network whose edges carry non-negative integer counts.
///
/// Only strictly positive values are stored. Row and column totals are kept
/// in sync on every mutation so that node-level statistics are O(1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CountNetwork {
    rows: Vec<BTreeMap<u32, u64>>,
    in_total: Vec<u64>,
    out_total: Vec<u64>,
    total: u64,
    n_edges: usize,
}

impl CountNetwork {
    pub fn empty(n_nodes: usize) -> Self {
        assert!(n_nodes <= u32::MAX as usize, "too many nodes");
        Self { rows: vec![BTreeMap::new(); n_nodes], in_total: vec![0; n_nodes], out_total: vec![0; n_nodes], total: 0, n_edges: 0 }
    }

    /// Builds from `(origin, dest, count)` index triples. Zero counts are
    /// accepted and not stored; duplicates and self-loops are errors.
    pub fn from_indexed<I>(n_nodes: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u64)>,
    {
        let mut net = Self::empty(n_nodes);
        let mut seen = HashSet::new();
        for (i, j, k) in edges {
            if !seen.insert((i, j)) {
                return Err(Error::DuplicateDyad { origin: i.to_string(), dest: j.to_string() });
            }
            net.set_edge(i, j, k)?;
        }
        Ok(net)
    }

    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.rows.len()
    }

    /// Number of ordered dyads, `n (n - 1)`.
    pub fn n_dyads(&self) -> usize {
        let n = self.n_nodes();
        n * n.saturating_sub(1)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.rows[i].get(&(j as u32)).copied().unwrap_or(0)
    }

    #[inline]
    pub fn in_total(&self, j: usize) -> u64 {
        self.in_total[j]
    }

    #[inline]
    pub fn out_total(&self, i: usize) -> u64 {
        self.out_total[i]
    }

    pub fn in_totals(&self) -> &[u64] {
        &self.in_total
    }

    pub fn out_totals(&self) -> &[u64] {
        &self.out_total
    }

    /// Sum of all edge values.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Number of stored (nonzero) edges.
    pub fn n_edges(&self) -> usize {
        self.n_edges
    }

    /// Sets `y_ij = k` and returns the previous value.
    pub fn set_edge(&mut self, i: usize, j: usize, k: u64) -> Result<u64> {
        let n = self.n_nodes();
        if i >= n {
            return Err(Error::NodeIndex(i));
        }
        if j >= n {
            return Err(Error::NodeIndex(j));
        }
        if i == j {
            return Err(Error::SelfLoop(i.to_string()));
        }
        let old = if k == 0 { self.rows[i].remove(&(j as u32)).unwrap_or(0) } else { self.rows[i].insert(j as u32, k).unwrap_or(0) };
        match (old > 0, k > 0) {
            (false, true) => self.n_edges += 1,
            (true, false) => self.n_edges -= 1,
            _ => {}
        }
        self.out_total[i] = self.out_total[i] - old + k;
        self.in_total[j] = self.in_total[j] - old + k;
        self.total = self.total - old + k;
        Ok(old)
    }

    /// Stored edges of row `i` in ascending destination order.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.rows[i].iter().map(|(&j, &k)| (j as usize, k))
    }

    /// All stored edges in (origin, dest) order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.rows.iter().enumerate().flat_map(|(i, row)| row.iter().map(move |(&j, &k)| (i, j as usize, k)))
    }

    /// Largest stored value in each row and each column.
    pub fn row_col_max(&self) -> (Vec<u64>, Vec<u64>) {
        let n = self.n_nodes();
        let mut row_max = vec![0; n];
        let mut col_max = vec![0; n];
        for (i, j, k) in self.edges() {
            row_max[i] = row_max[i].max(k);
            col_max[j] = col_max[j].max(k);
        }
        (row_max, col_max)
    }

    /// Returns the network with every edge reversed.
    pub fn transpose(&self) -> Self {
        let mut t = Self::empty(self.n_nodes());
        for (i, j, k) in self.edges() {
            t.set_edge(j, i, k).expect("valid edge");
        }
        t
    }

    /// True when cached marginals agree with recomputed sums.
    pub fn caches_consistent(&self) -> bool {
        let n = self.n_nodes();
        let mut ins = vec![0u64; n];
        let mut outs = vec![0u64; n];
        let mut total = 0;
        let mut count = 0;
        for (i, j, k) in self.edges() {
            if k == 0 || i == j {
                return false;
            }
            ins[j] += k;
            outs[i] += k;
            total += k;
            count += 1;
        }
        ins == self.in_total && outs == self.out_total && total == self.total && count == self.n_edges
    }
}

/// Builds a network from an id-keyed edge list resolved against `nodes`.
pub fn build_network<S: AsRef<str>>(nodes: &NodeTable, edges: &[(S, S, i64)]) -> Result<CountNetwork> {
    let mut net = CountNetwork::empty(nodes.len());
    let mut seen = HashSet::with_capacity(edges.len());
    for (o, d, k) in edges {
        let (o, d) = (o.as_ref(), d.as_ref());
        let i = nodes.index_of(o).ok_or_else(|| Error::UnknownNode(o.to_string()))?;
        let j = nodes.index_of(d).ok_or_else(|| Error::UnknownNode(d.to_string()))?;
        if *k < 0 {
            return Err(Error::NegativeCount { origin: o.into(), dest: d.into(), count: *k });
        }
        if i == j {
            return Err(Error::SelfLoop(o.to_string()));
        }
        if !seen.insert((i, j)) {
            return Err(Error::DuplicateDyad { origin: o.into(), dest: d.into() });
        }
        net.set_edge(i, j, *k as u64)?;
    }
    Ok(net)
}

/// Exports stored edges as id triples, sorted by internal index.
pub fn export_edges(nodes: &NodeTable, net: &CountNetwork) -> Vec<(String, String, u64)> {
    net.edges().map(|(i, j, k)| (nodes.id(i).to_string(), nodes.id(j).to_string(), k)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(ids: &[&str]) -> NodeTable {
        NodeTable::from_ids(ids.iter().map(|s| s.to_string()).collect()).unwrap()
    }

    #[test]
    fn symmetric_pair() {
        let nodes = table(&["A", "B"]);
        let net = build_network(&nodes, &[("A", "B", 3), ("B", "A", 3)]).unwrap();
        assert_eq!(net.out_total(0), 3);
        assert_eq!(net.in_total(0), 3);
    }

    #[test]
    fn empty_edge_list() {
        let nodes = table(&["a", "b", "c", "d", "e"]);
        let net = build_network::<&str>(&nodes, &[]).unwrap();
        assert!(net.in_totals().iter().chain(net.out_totals()).all(|&t| t == 0));
        assert_eq!(net.n_edges(), 0);
    }

    #[test]
    fn row_sums() {
        let nodes = table(&["A", "B", "C"]);
        let net = build_network(&nodes, &[("A", "B", 2), ("A", "C", 4)]).unwrap();
        assert_eq!(net.out_total(0), 6);
        assert_eq!(net.in_total(1), 2);
        assert_eq!(net.in_total(2), 4);
    }

    #[test]
    fn build_errors() {
        let nodes = table(&["A", "B"]);
        assert!(matches!(build_network(&nodes, &[("A", "Z", 1)]), Err(Error::UnknownNode(_))));
        assert!(matches!(build_network(&nodes, &[("A", "B", -1)]), Err(Error::NegativeCount { .. })));
        assert!(matches!(build_network(&nodes, &[("A", "A", 1)]), Err(Error::SelfLoop(_))));
        assert!(matches!(build_network(&nodes, &[("A", "B", 1), ("A", "B", 2)]), Err(Error::DuplicateDyad { .. })));
    }

    #[test]
    fn set_then_unset_restores() {
        let mut net = CountNetwork::empty(2);
        net.set_edge(0, 1, 5).unwrap();
        assert_eq!(net.out_total(0), 5);
        net.set_edge(0, 1, 0).unwrap();
        assert_eq!(net, CountNetwork::empty(2));
        assert!(matches!(net.set_edge(1, 1, 2), Err(Error::SelfLoop(_))));
    }

    #[test]
    fn single_edge_on_empty() {
        let mut net = CountNetwork::empty(3);
        net.set_edge(0, 2, 7).unwrap();
        assert_eq!(net.out_total(0), 7);
        assert_eq!(net.in_total(2), 7);
        assert_eq!(net.total(), 7);
    }

    #[test]
    fn many_random_mutations_match_recompute() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let mut net = CountNetwork::empty(12);
        let mut dense = vec![[0u64; 12]; 12];
        for _ in 0..10_000 {
            let i = rng.random_range(0..12);
            let j = rng.random_range(0..12);
            if i == j {
                continue;
            }
            let k = if rng.random_bool(0.3) { 0 } else { rng.random_range(0..9) };
            net.set_edge(i, j, k).unwrap();
            dense[i][j] = k;
        }
        assert!(net.caches_consistent());
        for i in 0..12 {
            assert_eq!(net.out_total(i), dense[i].iter().sum::<u64>());
            assert_eq!(net.in_total(i), dense.iter().map(|r| r[i]).sum::<u64>());
        }
    }

    proptest! {
        #[test]
        fn caches_track_arbitrary_ops(ops in prop::collection::vec((0usize..6, 0usize..6, 0u64..6), 0..200)) {
            let mut net = CountNetwork::empty(6);
            for (i, j, k) in ops {
                if i != j {
                    net.set_edge(i, j, k).unwrap();
                }
            }
            prop_assert!(net.caches_consistent());
        }

        #[test]
        fn export_round_trips(cells in prop::collection::vec(0i64..4, 20)) {
            let ids: Vec<String> = (0..5).map(|i| format!("n{i}")).collect();
            let nodes = NodeTable::from_ids(ids.clone()).unwrap();
            let mut edges = Vec::new();
            let mut c = cells.into_iter();
            for i in 0..5 {
                for j in 0..5 {
                    if i != j {
                        let k = c.next().unwrap();
                        if k > 0 {
                            edges.push((ids[i].clone(), ids[j].clone(), k));
                        }
                    }
                }
            }
            let net = build_network(&nodes, &edges).unwrap();
            let back: Vec<_> = export_edges(&nodes, &net)
                .into_iter()
                .map(|(o, d, k)| (o, d, k as i64))
                .collect();
            prop_assert_eq!(back, edges);
        }
    }
}
