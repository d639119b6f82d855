//! Loading and validating input files.

use std::path::Path;

use flowergm::io::{self, Issue, IssueKind};
use flowergm::knockout::ScenarioFile;
use flowergm::metrics::Grouping;
use flowergm::{CountNetwork, Covariates, DyadTable, ModelSpec, NodeTable};
use serde::Serialize;

use crate::config::InputPaths;
use crate::error::{CliError, CliResult};

/// Name given to the past-flow dyad covariate.
pub const PAST_FLOW: &str = "log_past_flow";

/// Everything the data files describe.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub covariates: Covariates,
    pub network: Option<CountNetwork>,
}

impl Dataset {
    pub fn nodes(&self) -> &NodeTable {
        &self.covariates.nodes
    }

    pub fn network(&self) -> CliResult<&CountNetwork> {
        self.network.as_ref().ok_or_else(|| CliError::Usage("this command needs --edges".into()))
    }

    /// Groups nodes by a categorical column.
    pub fn grouping(&self, group_col: &str) -> CliResult<Grouping> {
        let nodes = self.nodes();
        let labels = nodes.categorical(group_col).ok_or_else(|| {
            let have: Vec<&str> = nodes.categorical_names().collect();
            CliError::Usage(format!("group column `{group_col}` is not one of {have:?}"))
        })?;
        let labels: Vec<Option<String>> = labels.iter().map(|l| Some(l.clone())).collect();
        Ok(Grouping::from_labels(nodes.ids(), &labels, nodes.population())?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub status: &'static str,
    pub nodes: usize,
    pub edges: Option<usize>,
    pub total_count: Option<u64>,
    pub numeric_covariates: Vec<String>,
    pub categorical_covariates: Vec<String>,
    pub dyad_covariates: Vec<String>,
    pub model_terms: Option<usize>,
    pub fit_terms: Option<usize>,
    pub scenarios: Option<usize>,
    pub issues: Vec<Issue>,
}

fn config_issue(path: &Path, message: String) -> Issue {
    Issue {
        kind: IssueKind::ParseError,
        code: IssueKind::ParseError.code(),
        file: path.display().to_string(),
        row: None,
        column: None,
        message,
    }
}

fn read_text(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn read_model(path: &Path) -> CliResult<ModelSpec> {
    Ok(ModelSpec::from_toml(&read_text(path)?)?)
}

pub fn read_fit(path: &Path) -> CliResult<ModelSpec> {
    Ok(io::read_fit_csv(io::open(path)?)?)
}

pub fn read_scenarios(path: &Path) -> CliResult<ScenarioFile> {
    Ok(ScenarioFile::from_toml(&read_text(path)?)?)
}

/// Reads every data file named in `inputs`, collecting all row-level issues
/// across files before failing.
pub fn load(inputs: &InputPaths) -> CliResult<Dataset> {
    let (report, data) = validate_inputs(inputs)?;
    match data {
        Some(d) => Ok(d),
        None => Err(CliError::Invalid(report.issues)),
    }
}

/// Schema, range and referential checks over every input file, with a
/// summary of what was found. Returns the loaded data when there are no
/// issues.
pub fn validate_inputs(inputs: &InputPaths) -> CliResult<(ValidationReport, Option<Dataset>)> {
    let nodes_path = inputs.nodes.as_ref().ok_or_else(|| CliError::Usage("--nodes is required".into()))?;
    let name = |p: &Path| p.display().to_string();
    let mut issues = Vec::new();

    let loaded = io::read_nodes(io::open(nodes_path)?, &name(nodes_path))?;
    issues.extend(loaded.issues);
    let mut report = ValidationReport {
        status: "ok",
        nodes: 0,
        edges: None,
        total_count: None,
        numeric_covariates: vec![],
        categorical_covariates: vec![],
        dyad_covariates: vec![],
        model_terms: None,
        fit_terms: None,
        scenarios: None,
        issues: vec![],
    };

    for (path, kind) in [(&inputs.model, "model"), (&inputs.fit, "fit"), (&inputs.scenarios, "scenarios")] {
        let Some(path) = path else { continue };
        let parsed = match kind {
            "model" => read_model(path).map(|m| report.model_terms = Some(m.len())),
            "fit" => read_fit(path).map(|m| report.fit_terms = Some(m.len())),
            _ => read_scenarios(path).map(|s| report.scenarios = Some(s.scenarios.len())),
        };
        if let Err(e) = parsed {
            issues.push(config_issue(path, e.to_string()));
        }
    }

    let Some(nodes) = loaded.value else {
        report.status = "invalid";
        report.issues = issues;
        return Ok((report, None));
    };
    report.nodes = nodes.len();
    report.numeric_covariates = nodes.numeric_names().map(String::from).collect();
    report.categorical_covariates = nodes.categorical_names().map(String::from).collect();

    let mut network = None;
    if let Some(p) = &inputs.edges {
        let l = io::read_edges(io::open(p)?, &name(p), &nodes)?;
        issues.extend(l.issues);
        if let Some(net) = &l.value {
            report.edges = Some(net.n_edges());
            report.total_count = Some(net.total());
        }
        network = l.value;
    }
    let mut dyads = DyadTable::default();
    if let Some(p) = &inputs.dyads {
        let l = io::read_dyads(io::open(p)?, &name(p), &nodes)?;
        issues.extend(l.issues);
        if let Some(d) = l.value {
            dyads = d;
        }
    }
    if let Some(p) = &inputs.past_flows {
        let l = io::read_past_flows(io::open(p)?, &name(p), &nodes)?;
        issues.extend(l.issues);
        if let Some(col) = l.value {
            dyads.insert(PAST_FLOW, col);
        }
    }
    let covariates = Covariates::new(nodes, dyads);
    report.dyad_covariates = covariates.dyads.names().map(String::from).collect();

    if issues.is_empty() {
        Ok((report, Some(Dataset { covariates, network })))
    } else {
        report.status = "invalid";
        report.issues = issues;
        Ok((report, None))
    }
}
