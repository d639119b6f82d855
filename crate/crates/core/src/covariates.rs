//! Node and dyad covariate tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

/// Mean Earth radius in kilometres.
pub const EARTH_RADIUS_KM: f64 = 6371.0088;

/// Distances below this many kilometres are floored before taking logs.
pub const MIN_DISTANCE_KM: f64 = 1.0;

/// Columns that carry categorical labels rather than numbers.
pub const CATEGORICAL_COLUMNS: [&str; 2] = ["state", "region"];

/// Shares are named with a `p_` prefix and must lie in [0, 1].
pub fn is_share(name: &str) -> bool {
    name.starts_with("p_")
}

/// Per-node attributes keyed by column name.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeTable {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    lat: Vec<f64>,
    lon: Vec<f64>,
    population: Vec<f64>,
    numeric: BTreeMap<String, Vec<f64>>,
    categorical: BTreeMap<String, Vec<String>>,
}

impl NodeTable {
    /// Table with the given ids, zero positions and unit population.
    pub fn from_ids(ids: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(ids.len());
        for (k, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), k).is_some() {
                return Err(Error::DuplicateNode(id.clone()));
            }
        }
        let n = ids.len();
        Ok(Self {
            ids,
            index,
            lat: vec![0.0; n],
            lon: vec![0.0; n],
            population: vec![1.0; n],
            numeric: BTreeMap::new(),
            categorical: BTreeMap::new(),
        })
    }

    /// Table with ids `"0".."n-1"`.
    pub fn numbered(n: usize) -> Self {
        Self::from_ids((0..n).map(|i| i.to_string()).collect()).expect("distinct ids")
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn set_positions(&mut self, lat: Vec<f64>, lon: Vec<f64>) -> Result<()> {
        self.check_len("lat", lat.len())?;
        self.check_len("lon", lon.len())?;
        if let Some(k) = lat.iter().position(|v| !(-90.0..=90.0).contains(v)) {
            return Err(Error::Config(format!("latitude out of range for node `{}`", self.ids[k])));
        }
        if let Some(k) = lon.iter().position(|v| !(-180.0..=180.0).contains(v)) {
            return Err(Error::Config(format!("longitude out of range for node `{}`", self.ids[k])));
        }
        self.lat = lat;
        self.lon = lon;
        Ok(())
    }

    pub fn lat(&self) -> &[f64] {
        &self.lat
    }

    pub fn lon(&self) -> &[f64] {
        &self.lon
    }

    pub fn set_population(&mut self, population: Vec<f64>) -> Result<()> {
        self.check_len("population", population.len())?;
        if let Some(k) = population.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(format!("invalid population for node `{}`", self.ids[k])));
        }
        self.population = population;
        Ok(())
    }

    pub fn population(&self) -> &[f64] {
        &self.population
    }

    /// Adds or replaces a numeric column, enforcing share and finiteness rules.
    pub fn set_numeric(&mut self, name: &str, values: Vec<f64>) -> Result<()> {
        self.check_len(name, values.len())?;
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite `{name}` for node `{}`", self.ids[k])));
        }
        if is_share(name) {
            if let Some(k) = values.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Config(format!("share `{name}` = {} outside [0, 1] for node `{}`", values[k], self.ids[k])));
            }
        }
        self.numeric.insert(name.to_string(), values);
        Ok(())
    }

    pub fn set_categorical(&mut self, name: &str, values: Vec<String>) -> Result<()> {
        self.check_len(name, values.len())?;
        self.categorical.insert(name.to_string(), values);
        Ok(())
    }

    pub fn numeric(&self, name: &str) -> Option<&[f64]> {
        self.numeric.get(name).map(Vec::as_slice)
    }

    pub fn categorical(&self, name: &str) -> Option<&[String]> {
        self.categorical.get(name).map(Vec::as_slice)
    }

    pub fn numeric_names(&self) -> impl Iterator<Item = &str> {
        self.numeric.keys().map(String::as_str)
    }

    pub fn categorical_names(&self) -> impl Iterator<Item = &str> {
        self.categorical.keys().map(String::as_str)
    }

    fn check_len(&self, name: &str, len: usize) -> Result<()> {
        if len != self.len() {
            return Err(Error::Config(format!("column `{name}` has {len} values for {} nodes", self.len())));
        }
        Ok(())
    }
}

/// Great-circle distance in kilometres between two lat/lon points (degrees).
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dp = p2 - p1;
    let dl = (lon2 - lon1).to_radians();
    let a = (dp / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dl / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_KM * a.sqrt().min(1.0).asin()
}

/// Dense log great-circle distance column, floored at [`MIN_DISTANCE_KM`].
/// The diagonal is left at zero and never read.
pub fn pairwise_log_distance(nodes: &NodeTable) -> DyadColumn {
    let n = nodes.len();
    let mut values = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = haversine_km(nodes.lat[i], nodes.lon[i], nodes.lat[j], nodes.lon[j]);
            let v = d.max(MIN_DISTANCE_KM).ln();
            values[i * n + j] = v;
            values[j * n + i] = v;
        }
    }
    DyadColumn::Dense { n, values }
}

/// One real-valued covariate over ordered dyads.
#[derive(Debug, Clone, PartialEq)]
pub enum DyadColumn {
    /// Row-major `n * n` values.
    Dense {
        n: usize,
        values: Vec<f64>,
    },
    /// Listed dyads, everything else takes `default`.
    Sparse {
        entries: HashMap<(u32, u32), f64>,
        default: f64,
    },
    Constant(f64),
    /// Indicator that both endpoints share a category code.
    SameCategory(Vec<u32>),
}

impl DyadColumn {
    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        match self {
            DyadColumn::Dense { n, values } => values[i * n + j],
            DyadColumn::Sparse { entries, default } => entries.get(&(i as u32, j as u32)).copied().unwrap_or(*default),
            DyadColumn::Constant(c) => *c,
            DyadColumn::SameCategory(codes) => f64::from(u8::from(codes[i] == codes[j])),
        }
    }

    pub fn same_category(labels: &[String]) -> Self {
        let mut codes = HashMap::new();
        let v = labels
            .iter()
            .map(|l| {
                let next = codes.len() as u32;
                *codes.entry(l.as_str()).or_insert(next)
            })
            .collect();
        DyadColumn::SameCategory(v)
    }

    /// `log(1 + count)` of a past flow edge list given as index triples.
    pub fn log_past_flow<I: IntoIterator<Item = (usize, usize, u64)>>(past: I) -> Self {
        let entries = past.into_iter().filter(|&(_, _, k)| k > 0).map(|(i, j, k)| ((i as u32, j as u32), (k as f64).ln_1p())).collect();
        DyadColumn::Sparse { entries, default: 0.0 }
    }
}

/// Named dyadic covariates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DyadTable {
    columns: BTreeMap<String, DyadColumn>,
}

impl DyadTable {
    pub fn insert(&mut self, name: &str, column: DyadColumn) {
        self.columns.insert(name.to_string(), column);
    }

    pub fn get(&self, name: &str) -> Option<&DyadColumn> {
        self.columns.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }
}

/// Node and dyad covariates together; the `X` a model is evaluated against.
#[derive(Debug, Clone, PartialEq)]
pub struct Covariates {
    pub nodes: NodeTable,
    pub dyads: DyadTable,
}

impl Covariates {
    /// Adds `log_distance` and a `same_<col>` indicator for each categorical
    /// column unless `dyads` already supplies them.
    pub fn new(nodes: NodeTable, mut dyads: DyadTable) -> Self {
        if dyads.get("log_distance").is_none() {
            dyads.insert("log_distance", pairwise_log_distance(&nodes));
        }
        let cats: Vec<String> = nodes.categorical_names().map(String::from).collect();
        for c in cats {
            let name = format!("same_{c}");
            if dyads.get(&name).is_none() {
                dyads.insert(&name, DyadColumn::same_category(nodes.categorical(&c).unwrap()));
            }
        }
        Self { nodes, dyads }
    }

    /// Covariates with nothing but the derived dyad columns.
    pub fn bare(nodes: NodeTable) -> Self {
        Self::new(nodes, DyadTable::default())
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node_column(&self, name: &str) -> Result<&[f64]> {
        self.nodes.numeric(name).ok_or_else(|| Error::UnknownCovariate(name.to_string()))
    }

    pub fn dyad_column(&self, name: &str) -> Result<&DyadColumn> {
        self.dyads.get(name).ok_or_else(|| Error::UnknownCovariate(name.to_string()))
    }

    pub fn category_column(&self, name: &str) -> Result<&[String]> {
        self.nodes.categorical(name).ok_or_else(|| Error::UnknownCovariate(name.to_string()))
    }

    /// Distinct labels of a categorical column in sorted order.
    pub fn levels(&self, name: &str) -> Result<Vec<String>> {
        let set: BTreeSet<&String> = self.category_column(name)?.iter().collect();
        Ok(set.into_iter().cloned().collect())
    }
}
