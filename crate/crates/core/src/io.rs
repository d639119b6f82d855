//! CSV ingestion with row-level diagnostics, and the fit-file format.
//!
//! Readers never stop at the first problem: they collect every [`Issue`]
//! they can find and only return data when the list is empty. Row numbers
//! are 1-based data rows (the header is row 0). Lines starting with `#` are
//! comments.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::covariates::{is_share, DyadColumn, DyadTable, NodeTable, CATEGORICAL_COLUMNS};
use crate::error::{Error, Result};
use crate::mple::FitResult;
use crate::network::CountNetwork;
use crate::terms::{ModelSpec, TermKind, TermSpec};

pub const NODE_REQUIRED: [&str; 6] = ["node_id", "lat", "lon", "population", "state", "region"];
pub const EDGE_HEADER: [&str; 3] = ["origin", "dest", "count"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IssueKind {
    MissingColumn,
    MissingValue,
    ParseError,
    OutOfRangeShare,
    NonFinite,
    InvalidPosition,
    NegativePopulation,
    DuplicateNodeId,
    UnknownId,
    DuplicateDyad,
    SelfLoop,
    NegativeCount,
    NonIntegerCount,
}

impl IssueKind {
    pub fn code(self) -> &'static str {
        match self {
            IssueKind::MissingColumn => "E_MISSING_COLUMN",
            IssueKind::MissingValue => "E_MISSING_VALUE",
            IssueKind::ParseError => "E_PARSE",
            IssueKind::OutOfRangeShare => "E_SHARE_RANGE",
            IssueKind::NonFinite => "E_NON_FINITE",
            IssueKind::InvalidPosition => "E_POSITION",
            IssueKind::NegativePopulation => "E_POPULATION",
            IssueKind::DuplicateNodeId => "E_DUPLICATE_NODE",
            IssueKind::UnknownId => "E_UNKNOWN_ID",
            IssueKind::DuplicateDyad => "E_DUPLICATE_DYAD",
            IssueKind::SelfLoop => "E_SELF_LOOP",
            IssueKind::NegativeCount => "E_NEGATIVE_COUNT",
            IssueKind::NonIntegerCount => "E_NON_INTEGER_COUNT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Issue {
    pub kind: IssueKind,
    pub code: &'static str,
    pub file: String,
    pub row: Option<usize>,
    pub column: Option<String>,
    pub message: String,
}

impl Issue {
    fn new(kind: IssueKind, file: &str, row: Option<usize>, column: Option<&str>, message: String) -> Self {
        Self { kind, code: kind.code(), file: file.to_string(), row, column: column.map(String::from), message }
    }
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}] {}", self.code, self.file)?;
        if let Some(r) = self.row {
            write!(f, " row {r}")?;
        }
        if let Some(c) = &self.column {
            write!(f, " column `{c}`")?;
        }
        write!(f, ": {}", self.message)
    }
}

/// Result of a validating read.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub value: Option<T>,
    pub issues: Vec<Issue>,
}

impl<T> Loaded<T> {
    fn finish(value: T, issues: Vec<Issue>) -> Self {
        if issues.is_empty() {
            Self { value: Some(value), issues }
        } else {
            Self { value: None, issues }
        }
    }

    fn failed(issues: Vec<Issue>) -> Self {
        Self { value: None, issues }
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new().comment(Some(b'#')).trim(csv::Trim::All).from_reader(r)
}

fn header_index(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers.iter().position(|h| h == name)
}

/// Reads the node table: `node_id,lat,lon,population,state,region,<covariate...>`.
/// Every extra column is numeric.
pub fn read_nodes<R: Read>(input: R, file: &str) -> Result<Loaded<NodeTable>> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    let mut issues = Vec::new();
    for col in NODE_REQUIRED {
        if header_index(&headers, col).is_none() {
            issues.push(Issue::new(IssueKind::MissingColumn, file, None, Some(col), format!("required column `{col}` absent")));
        }
    }
    if !issues.is_empty() {
        return Ok(Loaded::failed(issues));
    }
    let idx = |c: &str| header_index(&headers, c).unwrap();
    let numeric_cols: Vec<(usize, String)> =
        headers.iter().enumerate().filter(|(_, h)| !NODE_REQUIRED.contains(h)).map(|(k, h)| (k, h.to_string())).collect();

    let mut ids = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let (mut lat, mut lon, mut pop) = (Vec::new(), Vec::new(), Vec::new());
    let mut cats: Vec<Vec<String>> = vec![Vec::new(); CATEGORICAL_COLUMNS.len()];
    let mut nums: Vec<Vec<f64>> = vec![Vec::new(); numeric_cols.len()];

    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = match rec {
            Ok(rec) => rec,
            Err(e) => {
                issues.push(Issue::new(IssueKind::ParseError, file, Some(row), None, e.to_string()));
                continue;
            }
        };
        let number = |col: usize, name: &str, issues: &mut Vec<Issue>| -> f64 {
            let raw = rec.get(col).unwrap_or("");
            if raw.is_empty() {
                issues.push(Issue::new(IssueKind::MissingValue, file, Some(row), Some(name), "empty value".into()));
                return 0.0;
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => v,
                Ok(_) => {
                    issues.push(Issue::new(IssueKind::NonFinite, file, Some(row), Some(name), format!("`{raw}` is not finite")));
                    0.0
                }
                Err(_) => {
                    issues.push(Issue::new(IssueKind::ParseError, file, Some(row), Some(name), format!("`{raw}` is not a decimal number")));
                    0.0
                }
            }
        };
        let id = rec.get(idx("node_id")).unwrap_or("").to_string();
        if id.is_empty() {
            issues.push(Issue::new(IssueKind::MissingValue, file, Some(row), Some("node_id"), "empty node id".into()));
        } else if !seen.insert(id.clone()) {
            issues.push(Issue::new(IssueKind::DuplicateNodeId, file, Some(row), Some("node_id"), format!("node `{id}` listed twice")));
        }
        ids.push(id);
        let la = number(idx("lat"), "lat", &mut issues);
        let lo = number(idx("lon"), "lon", &mut issues);
        if !(-90.0..=90.0).contains(&la) {
            issues.push(Issue::new(IssueKind::InvalidPosition, file, Some(row), Some("lat"), format!("latitude {la} outside [-90, 90]")));
        }
        if !(-180.0..=180.0).contains(&lo) {
            issues.push(Issue::new(
                IssueKind::InvalidPosition,
                file,
                Some(row),
                Some("lon"),
                format!("longitude {lo} outside [-180, 180]"),
            ));
        }
        lat.push(la);
        lon.push(lo);
        let p = number(idx("population"), "population", &mut issues);
        if p < 0.0 {
            issues.push(Issue::new(
                IssueKind::NegativePopulation,
                file,
                Some(row),
                Some("population"),
                format!("population {p} is negative"),
            ));
        }
        pop.push(p);
        for (c, name) in CATEGORICAL_COLUMNS.iter().enumerate() {
            let v = rec.get(idx(name)).unwrap_or("").to_string();
            if v.is_empty() {
                issues.push(Issue::new(IssueKind::MissingValue, file, Some(row), Some(name), "empty value".into()));
            }
            cats[c].push(v);
        }
        for ((col, name), out) in numeric_cols.iter().zip(nums.iter_mut()) {
            let v = number(*col, name, &mut issues);
            if is_share(name) && !(0.0..=1.0).contains(&v) {
                issues.push(Issue::new(IssueKind::OutOfRangeShare, file, Some(row), Some(name), format!("share {v} outside [0, 1]")));
            }
            out.push(v);
        }
    }
    if !issues.is_empty() {
        return Ok(Loaded::failed(issues));
    }
    let mut table = NodeTable::from_ids(ids)?;
    table.set_positions(lat, lon)?;
    table.set_population(pop)?;
    for (c, name) in CATEGORICAL_COLUMNS.iter().enumerate() {
        table.set_categorical(name, std::mem::take(&mut cats[c]))?;
    }
    for ((_, name), values) in numeric_cols.iter().zip(nums) {
        table.set_numeric(name, values)?;
    }
    Ok(Loaded::finish(table, issues))
}

fn parse_count(raw: &str) -> std::result::Result<i64, IssueKind> {
    if raw.is_empty() {
        return Err(IssueKind::MissingValue);
    }
    if let Ok(v) = raw.parse::<i64>() {
        return Ok(v);
    }
    match raw.parse::<f64>() {
        Ok(v) if v.is_finite() && v.fract() == 0.0 && v.abs() < 9e15 => Ok(v as i64),
        Ok(_) => Err(IssueKind::NonIntegerCount),
        Err(_) => Err(IssueKind::ParseError),
    }
}

/// Reads `origin,dest,count` triples resolved against `nodes`.
pub fn read_edge_triples<R: Read>(input: R, file: &str, nodes: &NodeTable) -> Result<Loaded<Vec<(usize, usize, u64)>>> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    let mut issues = Vec::new();
    for col in EDGE_HEADER {
        if header_index(&headers, col).is_none() {
            issues.push(Issue::new(IssueKind::MissingColumn, file, None, Some(col), format!("required column `{col}` absent")));
        }
    }
    if !issues.is_empty() {
        return Ok(Loaded::failed(issues));
    }
    let (co, cd, cc) =
        (header_index(&headers, "origin").unwrap(), header_index(&headers, "dest").unwrap(), header_index(&headers, "count").unwrap());
    let mut seen = std::collections::HashMap::new();
    let mut out = Vec::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = match rec {
            Ok(rec) => rec,
            Err(e) => {
                issues.push(Issue::new(IssueKind::ParseError, file, Some(row), None, e.to_string()));
                continue;
            }
        };
        let (o, d, c) = (rec.get(co).unwrap_or(""), rec.get(cd).unwrap_or(""), rec.get(cc).unwrap_or(""));
        let i = nodes.index_of(o);
        let j = nodes.index_of(d);
        if i.is_none() {
            issues.push(Issue::new(IssueKind::UnknownId, file, Some(row), Some("origin"), format!("unknown node id `{o}`")));
        }
        if j.is_none() {
            issues.push(Issue::new(IssueKind::UnknownId, file, Some(row), Some("dest"), format!("unknown node id `{d}`")));
        }
        let k = match parse_count(c) {
            Ok(k) if k < 0 => {
                issues.push(Issue::new(IssueKind::NegativeCount, file, Some(row), Some("count"), format!("count {k} is negative")));
                None
            }
            Ok(k) => Some(k as u64),
            Err(kind) => {
                issues.push(Issue::new(kind, file, Some(row), Some("count"), format!("`{c}` is not a non-negative integer")));
                None
            }
        };
        if let (Some(i), Some(j)) = (i, j) {
            if i == j {
                issues.push(Issue::new(IssueKind::SelfLoop, file, Some(row), None, format!("self-loop on `{o}`")));
                continue;
            }
            if let Some(first) = seen.insert((i, j), row) {
                issues.push(Issue::new(
                    IssueKind::DuplicateDyad,
                    file,
                    Some(row),
                    None,
                    format!("dyad ({o}, {d}) already given on row {first}"),
                ));
                continue;
            }
            if let Some(k) = k {
                out.push((i, j, k));
            }
        }
    }
    Ok(Loaded::finish(out, issues))
}

pub fn read_edges<R: Read>(input: R, file: &str, nodes: &NodeTable) -> Result<Loaded<CountNetwork>> {
    let triples = read_edge_triples(input, file, nodes)?;
    match triples.value {
        Some(t) => Ok(Loaded::finish(CountNetwork::from_indexed(nodes.len(), t)?, vec![])),
        None => Ok(Loaded::failed(triples.issues)),
    }
}

/// Reads `origin,dest,<covariate...>` into sparse dyad columns; unlisted
/// dyads take 0.
pub fn read_dyads<R: Read>(input: R, file: &str, nodes: &NodeTable) -> Result<Loaded<DyadTable>> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    let mut issues = Vec::new();
    for col in ["origin", "dest"] {
        if header_index(&headers, col).is_none() {
            issues.push(Issue::new(IssueKind::MissingColumn, file, None, Some(col), format!("required column `{col}` absent")));
        }
    }
    if !issues.is_empty() {
        return Ok(Loaded::failed(issues));
    }
    let (co, cd) = (header_index(&headers, "origin").unwrap(), header_index(&headers, "dest").unwrap());
    let cols: Vec<(usize, String)> =
        headers.iter().enumerate().filter(|(k, _)| *k != co && *k != cd).map(|(k, h)| (k, h.to_string())).collect();
    let mut maps: Vec<std::collections::HashMap<(u32, u32), f64>> = vec![Default::default(); cols.len()];
    let mut seen = std::collections::HashSet::new();
    for (r, rec) in rdr.records().enumerate() {
        let row = r + 1;
        let rec = match rec {
            Ok(rec) => rec,
            Err(e) => {
                issues.push(Issue::new(IssueKind::ParseError, file, Some(row), None, e.to_string()));
                continue;
            }
        };
        let (o, d) = (rec.get(co).unwrap_or(""), rec.get(cd).unwrap_or(""));
        let (Some(i), Some(j)) = (nodes.index_of(o), nodes.index_of(d)) else {
            issues.push(Issue::new(IssueKind::UnknownId, file, Some(row), None, format!("unknown dyad ({o}, {d})")));
            continue;
        };
        if i == j {
            issues.push(Issue::new(IssueKind::SelfLoop, file, Some(row), None, format!("self-dyad on `{o}`")));
            continue;
        }
        if !seen.insert((i, j)) {
            issues.push(Issue::new(IssueKind::DuplicateDyad, file, Some(row), None, format!("dyad ({o}, {d}) repeated")));
            continue;
        }
        for ((col, name), map) in cols.iter().zip(maps.iter_mut()) {
            let raw = rec.get(*col).unwrap_or("");
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => {
                    map.insert((i as u32, j as u32), v);
                }
                _ => issues.push(Issue::new(IssueKind::ParseError, file, Some(row), Some(name), format!("`{raw}` is not a finite number"))),
            }
        }
    }
    let mut table = DyadTable::default();
    for ((_, name), entries) in cols.iter().zip(maps) {
        table.insert(name, DyadColumn::Sparse { entries, default: 0.0 });
    }
    Ok(Loaded::finish(table, issues))
}

/// Reads a past-period edge list and converts it to the `log(1 + count)` column.
pub fn read_past_flows<R: Read>(input: R, file: &str, nodes: &NodeTable) -> Result<Loaded<DyadColumn>> {
    let triples = read_edge_triples(input, file, nodes)?;
    match triples.value {
        Some(t) => Ok(Loaded::finish(DyadColumn::log_past_flow(t), vec![])),
        None => Ok(Loaded::failed(triples.issues)),
    }
}

pub fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))
}

pub const FIT_HEADER: [&str; 8] = ["term", "kind", "covariate", "level", "estimate", "std_err", "z", "p_value_naive"];

/// Writes the fitted coefficient table (one row per term).
pub fn write_fit_csv<W: Write>(out: W, model: &ModelSpec, fit: &FitResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(FIT_HEADER)?;
    let z = fit.z_scores();
    let p = fit.p_values();
    for (k, t) in model.terms.iter().enumerate() {
        w.write_record([
            t.label(),
            t.kind.as_str().to_string(),
            t.covariate.clone().unwrap_or_default(),
            t.level.clone().unwrap_or_default(),
            fit.theta[k].to_string(),
            fit.std_err[k].to_string(),
            z[k].to_string(),
            p[k].to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a fit file back into a model with coefficients.
pub fn read_fit_csv<R: Read>(input: R) -> Result<ModelSpec> {
    let mut rdr = reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| header_index(&headers, name).ok_or_else(|| Error::Config(format!("fit file lacks column `{name}`")));
    let (ct, ck, cc, cl, ce) = (col("term")?, col("kind")?, col("covariate")?, col("level")?, col("estimate")?);
    let mut terms = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let kind_s = rec.get(ck).unwrap_or("");
        let kind = TermKind::parse(kind_s).ok_or_else(|| Error::Config(format!("unknown term kind `{kind_s}`")))?;
        let opt = |c: usize| rec.get(c).filter(|s| !s.is_empty()).map(String::from);
        let est: f64 =
            rec.get(ce).unwrap_or("").parse().map_err(|_| Error::Config(format!("bad estimate for `{}`", rec.get(ct).unwrap_or(""))))?;
        let mut t = TermSpec { kind, covariate: opt(cc), level: opt(cl), name: None, coefficient: Some(est) };
        let label = rec.get(ct).unwrap_or("").to_string();
        if label != t.label() {
            t.name = Some(label);
        }
        terms.push(t);
    }
    ModelSpec::new(terms)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NODES: &str = "node_id,lat,lon,population,state,region,p_democrat,log_housing_cost
06001,37.6,-121.9,1600000,CA,West,0.78,13.4
06075,37.7,-122.4,870000,CA,West,0.85,13.9
32003,36.2,-115.0,2200000,NV,West,0.53,12.6
";

    #[test]
    fn clean_nodes_load() {
        let l = read_nodes(NODES.as_bytes(), "nodes.csv").unwrap();
        assert!(l.issues.is_empty());
        let t = l.value.unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.numeric_names().collect::<Vec<_>>(), vec!["log_housing_cost", "p_democrat"]);
        assert_eq!(t.categorical("state").unwrap()[2], "NV");
    }

    #[test]
    fn share_out_of_range_cites_row_and_column() {
        let mut text = String::from("node_id,lat,lon,population,state,region,p_rural\n");
        for k in 1..=20 {
            let share = if k == 17 { "1.3" } else { "0.5" };
            text.push_str(&format!("n{k},10,10,100,S,R,{share}\n"));
        }
        let l = read_nodes(text.as_bytes(), "nodes.csv").unwrap();
        assert!(l.value.is_none());
        assert_eq!(l.issues.len(), 1);
        let issue = &l.issues[0];
        assert_eq!(issue.kind, IssueKind::OutOfRangeShare);
        assert_eq!(issue.row, Some(17));
        assert_eq!(issue.column.as_deref(), Some("p_rural"));
    }

    #[test]
    fn missing_column() {
        let l = read_nodes("node_id,lat,lon\n1,0,0\n".as_bytes(), "n.csv").unwrap();
        let missing: Vec<_> = l.issues.iter().map(|i| i.column.clone().unwrap()).collect();
        assert_eq!(missing, vec!["population", "state", "region"]);
        assert!(l.issues.iter().all(|i| i.kind == IssueKind::MissingColumn));
    }

    #[test]
    fn edge_issues_are_distinct() {
        let nodes = read_nodes(NODES.as_bytes(), "n").unwrap().value.unwrap();
        let edges = "origin,dest,count
06001,99999,3
06075,32003,2.5
06001,06075,4
06075,06001,-1
32003,32003,1
06001,06075,5
";
        let l = read_edge_triples(edges.as_bytes(), "e.csv", &nodes).unwrap();
        let kinds: Vec<_> = l.issues.iter().map(|i| (i.kind, i.row.unwrap())).collect();
        assert_eq!(
            kinds,
            vec![
                (IssueKind::UnknownId, 1),
                (IssueKind::NonIntegerCount, 2),
                (IssueKind::NegativeCount, 4),
                (IssueKind::SelfLoop, 5),
                (IssueKind::DuplicateDyad, 6),
            ]
        );
    }

    #[test]
    fn integral_decimal_counts_accepted() {
        let nodes = read_nodes(NODES.as_bytes(), "n").unwrap().value.unwrap();
        let net = read_edges("origin,dest,count\n06001,06075,3.0\n".as_bytes(), "e", &nodes).unwrap().value.unwrap();
        assert_eq!(net.get(0, 1), 3);
    }

    #[test]
    fn fit_file_round_trip() {
        let model = ModelSpec::new(vec![
            TermSpec::new(TermKind::Sum),
            TermSpec::on(TermKind::AbsDissimilarity, "p_democrat"),
            TermSpec::category(TermKind::CategoryOrigin, "region", "West").named("Origin West"),
        ])
        .unwrap();
        let fit = FitResult {
            labels: model.labels(),
            theta: vec![-1.421, -0.257, 0.225],
            std_err: vec![0.042, 0.007, 0.004],
            neg_log_pl: 1.0,
            grad_norm: 0.0,
            iterations: 3,
            converged: true,
            trace: vec![],
        };
        let mut buf = Vec::new();
        write_fit_csv(&mut buf, &model, &fit).unwrap();
        let back = read_fit_csv(buf.as_slice()).unwrap();
        assert_eq!(back, model.with_theta(&fit.theta));
    }
}
