//! Subcommand definitions and pipelines.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use flowergm::ffgrid::{default_normalizer, ffgrid, focal_curves, linspace, TermGroup};
use flowergm::io::write_fit_csv;
use flowergm::knockout::KnockoutSuite;
use flowergm::metrics::{compute_metrics, rank_groups, Metric};
use flowergm::mple::fit_mple_fixed;
use flowergm::network::export_edges;
use flowergm::quantiles::attribute_quantiles;
use flowergm::sampler::sample_networks;
use flowergm::{seeds, BoundModel, FitOptions, InitMode, Predictor, SamplerConfig};
use rayon::prelude::*;
use serde_json::json;

use crate::artifacts::Artifacts;
use crate::config::{InputPaths, RunConfig};
use crate::error::{CliError, CliResult};
use crate::inputs::{load, read_fit, read_model, read_scenarios, validate_inputs};

#[derive(Debug, Parser)]
#[command(name = "flowergm", version, about = "Fit, simulate and analyse count-valued flow network models")]
pub struct Cli {
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true, env = "FLOWERGM_WORKERS")]
    pub workers: Option<usize>,
    /// Progress messages on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Node table: node_id,lat,lon,population,state,region plus numeric covariates.
    #[arg(long)]
    pub nodes: PathBuf,
    /// Edge list: origin,dest,count.
    #[arg(long)]
    pub edges: Option<PathBuf>,
    /// Dyadic covariates: origin,dest plus one column per covariate.
    #[arg(long)]
    pub dyads: Option<PathBuf>,
    /// Past-period edge list, exposed as the `log_past_flow` covariate.
    #[arg(long)]
    pub past_flows: Option<PathBuf>,
}

impl DataArgs {
    fn paths(&self) -> InputPaths {
        InputPaths {
            nodes: Some(self.nodes.clone()),
            edges: self.edges.clone(),
            dyads: self.dyads.clone(),
            past_flows: self.past_flows.clone(),
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Init {
    Observed,
    Empty,
    Independence,
}

impl From<Init> for InitMode {
    fn from(i: Init) -> Self {
        match i {
            Init::Observed => InitMode::Observed,
            Init::Empty => InitMode::Empty,
            Init::Independence => InitMode::Independence,
        }
    }
}

#[derive(Debug, Args)]
pub struct ChainArgs {
    /// Retained samples per chain.
    #[arg(long, default_value_t = 25)]
    pub samples: usize,
    /// Sweeps discarded before the first sample.
    #[arg(long, default_value_t = 200)]
    pub burnin: usize,
    /// Sweeps between retained samples.
    #[arg(long, default_value_t = 20)]
    pub thin: usize,
    /// Master seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Init::Observed)]
    pub init: Init,
    /// Fixed upper bound on edge values instead of adaptive truncation.
    #[arg(long)]
    pub support_cap: Option<u64>,
}

impl ChainArgs {
    fn sampler(&self) -> SamplerConfig {
        SamplerConfig {
            burn_in_sweeps: self.burnin,
            thin_sweeps: self.thin,
            n_samples: self.samples,
            seed: self.seed,
            init: self.init.into(),
            support_cap: self.support_cap,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model by maximum pseudo-likelihood.
    Fit {
        #[command(flatten)]
        data: DataArgs,
        /// Model file with one [[term]] table per term.
        #[arg(long)]
        model: PathBuf,
        /// Stop when the per-dyad gradient norm falls below this.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        /// Newton iteration limit.
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Draw networks from a fitted model.
    Simulate {
        #[command(flatten)]
        data: DataArgs,
        /// Fit file written by `fit`.
        #[arg(long)]
        fit: PathBuf,
        #[command(flatten)]
        chain: ChainArgs,
        /// Independent chains, each with its own derived seed.
        #[arg(long, default_value_t = 1)]
        chains: usize,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Rank a focal group under covariate knockout scenarios.
    Knockout {
        #[command(flatten)]
        data: DataArgs,
        /// Fit file written by `fit`.
        #[arg(long)]
        fit: PathBuf,
        /// Scenario file with [[scenario]] tables.
        #[arg(long)]
        scenarios: PathBuf,
        #[command(flatten)]
        chain: ChainArgs,
        /// Focal group label; overrides the scenario file.
        #[arg(long)]
        focal_group: Option<String>,
        /// Categorical node column defining groups; overrides the scenario file.
        #[arg(long)]
        group_col: Option<String>,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Expected-flow ratio grids for the terms on one node covariate.
    Ffgrid {
        /// Fit file written by `fit`.
        #[arg(long)]
        fit: PathBuf,
        /// Node table holding the covariate.
        #[arg(long)]
        nodes: PathBuf,
        /// Covariate whose terms form the group.
        #[arg(long)]
        group: String,
        /// Grid points per axis over the observed covariate range.
        #[arg(long, default_value_t = 101)]
        grid: usize,
        /// Focal covariate value for the immigration and emigration curves.
        #[arg(long)]
        focal: Option<f64>,
        /// Normalizer; defaults to the weighted mean, or the median for `log_*` covariates.
        #[arg(long)]
        x0: Option<f64>,
        /// Use the population-weighted median for `log_*` normalizers.
        #[arg(long)]
        weighted_median: bool,
        /// Histogram bins for the covariate distribution.
        #[arg(long, default_value_t = 50)]
        bins: usize,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Group migration metrics and rankings for one network.
    Metrics {
        /// Edge list: origin,dest,count.
        #[arg(long)]
        edges: PathBuf,
        /// Node table.
        #[arg(long)]
        nodes: PathBuf,
        /// Categorical node column defining groups.
        #[arg(long, default_value = "state")]
        group_col: String,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Quantile positions of one group's nodes on every covariate.
    Quantiles {
        /// Node table.
        #[arg(long)]
        nodes: PathBuf,
        /// Categorical node column defining groups.
        #[arg(long, default_value = "state")]
        group_col: String,
        /// Group label selecting the subset.
        #[arg(long)]
        subset: String,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Check input files and print a JSON report.
    Validate {
        #[command(flatten)]
        data: DataArgs,
        /// Model file to parse and bind.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Fit file to parse.
        #[arg(long)]
        fit: Option<PathBuf>,
        /// Scenario file to parse.
        #[arg(long)]
        scenarios: Option<PathBuf>,
        /// Also write validation.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Fit { .. } => "fit",
            Command::Simulate { .. } => "simulate",
            Command::Knockout { .. } => "knockout",
            Command::Ffgrid { .. } => "ffgrid",
            Command::Metrics { .. } => "metrics",
            Command::Quantiles { .. } => "quantiles",
            Command::Validate { .. } => "validate",
        }
    }

    pub fn out_dir(&self) -> Option<&Path> {
        match self {
            Command::Fit { out, .. }
            | Command::Simulate { out, .. }
            | Command::Knockout { out, .. }
            | Command::Ffgrid { out, .. }
            | Command::Metrics { out, .. }
            | Command::Quantiles { out, .. } => Some(out),
            Command::Validate { out, .. } => out.as_deref(),
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn progress(cfg: &RunConfig, msg: impl AsRef<str>) {
    if cfg.verbosity > 0 {
        eprintln!("[{}] {}", cfg.command, msg.as_ref());
    }
}

/// Runs one subcommand on a worker pool of the requested size.
pub fn run(cli: &Cli) -> CliResult<()> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.workers {
        if n == 0 {
            return Err(CliError::Usage("--workers must be positive".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| CliError::Usage(e.to_string()))?;
    pool.install(|| dispatch(cli))
}

fn dispatch(cli: &Cli) -> CliResult<()> {
    let name = cli.command.name();
    let base = |out: &Path, seed: u64| {
        let mut c = RunConfig::new(name, out.to_path_buf(), seed);
        c.workers = cli.workers;
        c.verbosity = cli.verbose;
        c
    };
    match &cli.command {
        Command::Fit { data, model, tol, max_iter, out } => {
            let mut cfg = base(out, 0).param("tol", tol).param("max_iter", max_iter);
            cfg.inputs = data.paths();
            cfg.inputs.model = Some(model.clone());
            fit(&cfg, *tol, *max_iter)
        }
        Command::Simulate { data, fit, chain, chains, out } => {
            let mut cfg = base(out, chain.seed).param("chains", chains);
            cfg.inputs = data.paths();
            cfg.inputs.fit = Some(fit.clone());
            cfg.sampler = Some(chain.sampler());
            simulate(&cfg, *chains)
        }
        Command::Knockout { data, fit, scenarios, chain, focal_group, group_col, out } => {
            let mut cfg = base(out, chain.seed)
                .param("focal_group", focal_group.clone().unwrap_or_default())
                .param("group_col", group_col.clone().unwrap_or_default());
            cfg.inputs = data.paths();
            cfg.inputs.fit = Some(fit.clone());
            cfg.inputs.scenarios = Some(scenarios.clone());
            cfg.sampler = Some(chain.sampler());
            knockout(&cfg, focal_group.as_deref(), group_col.as_deref())
        }
        Command::Ffgrid { fit, nodes, group, grid, focal, x0, weighted_median, bins, out } => {
            let mut cfg = base(out, 0)
                .param("group", group)
                .param("grid", grid)
                .param("focal", fmt_opt(*focal))
                .param("x0", fmt_opt(*x0))
                .param("weighted_median", weighted_median)
                .param("bins", bins);
            cfg.inputs.fit = Some(fit.clone());
            cfg.inputs.nodes = Some(nodes.clone());
            ffgrid_cmd(&cfg, group, *grid, *focal, *x0, *weighted_median, *bins)
        }
        Command::Metrics { edges, nodes, group_col, out } => {
            let mut cfg = base(out, 0).param("group_col", group_col);
            cfg.inputs.edges = Some(edges.clone());
            cfg.inputs.nodes = Some(nodes.clone());
            metrics(&cfg, group_col)
        }
        Command::Quantiles { nodes, group_col, subset, out } => {
            let mut cfg = base(out, 0).param("group_col", group_col).param("subset", subset);
            cfg.inputs.nodes = Some(nodes.clone());
            quantiles(&cfg, group_col, subset)
        }
        Command::Validate { data, model, fit, scenarios, out } => {
            let mut inputs = data.paths();
            inputs.model = model.clone();
            inputs.fit = fit.clone();
            inputs.scenarios = scenarios.clone();
            validate(&inputs, out.as_deref())
        }
    }
}

fn fit(cfg: &RunConfig, tol: f64, max_iter: usize) -> CliResult<()> {
    if tol.is_nan() || tol <= 0.0 || max_iter == 0 {
        return Err(CliError::Usage("--tol and --max-iter must be positive".into()));
    }
    cfg.check_paths()?;
    let data = load(&cfg.inputs)?;
    let net = data.network()?;
    let model = read_model(cfg.inputs.model.as_ref().unwrap())?;
    let bound = BoundModel::bind(&model, &data.covariates)?;
    let fixed: Vec<Option<f64>> = model.terms.iter().map(|t| t.coefficient).collect();
    progress(cfg, format!("fitting {} terms on {} dyads", model.len(), net.n_dyads()));
    let opts = FitOptions { tol, max_iter, ..FitOptions::default() };
    let result = fit_mple_fixed(&bound, net, &opts, &fixed)?;
    if !result.converged {
        eprintln!("warning: fit stopped after {} iterations with gradient norm {:e} (tol {tol:e})", result.iterations, result.grad_norm);
    }

    let mut art = Artifacts::new(cfg)?;
    let mut body = Vec::new();
    write_fit_csv(&mut body, &model, &result)?;
    let notes =
        vec!["p_value_naive: two-tailed normal p-values from pseudo-likelihood standard errors, optimistic under dyad dependence"
            .to_string()];
    art.commented("fit.csv", &notes, &body)?;
    let conv =
        vec![format!("converged={}, iterations={}, grad_norm={}, tol={}", result.converged, result.iterations, result.grad_norm, tol)];
    art.csv("convergence.csv", &conv, |w| {
        w.write_record(["iteration", "neg_log_pl", "grad_norm", "step_scale"])?;
        for r in &result.trace {
            w.write_record([r.iteration.to_string(), r.neg_log_pl.to_string(), r.grad_norm.to_string(), r.step_scale.to_string()])?;
        }
        Ok(())
    })?;
    let summary = json!({
        "converged": result.converged,
        "iterations": result.iterations,
        "grad_norm": result.grad_norm,
        "neg_log_pl": result.neg_log_pl,
    });
    art.finish(cfg, summary)?;
    Ok(())
}

fn simulate(cfg: &RunConfig, chains: usize) -> CliResult<()> {
    if chains == 0 {
        return Err(CliError::Usage("--chains must be positive".into()));
    }
    cfg.check_paths()?;
    let sampler = cfg.sampler.clone().unwrap();
    sampler.validate()?;
    let data = load(&cfg.inputs)?;
    let observed = data.network()?;
    let model = read_fit(cfg.inputs.fit.as_ref().unwrap())?;
    let theta = model.theta()?;
    let bound = BoundModel::bind(&model, &data.covariates)?;
    let predictor = Predictor::new(&bound, &theta)?;
    progress(cfg, format!("{chains} chain(s) of {} samples", sampler.n_samples));

    let runs: Vec<_> = (0..chains)
        .into_par_iter()
        .map(|c| {
            let cfg = SamplerConfig { seed: seeds::derive(sampler.seed, c as u64), ..sampler.clone() };
            sample_networks(&predictor, observed, &cfg)
        })
        .collect::<Result<_, _>>()?;

    let mut art = Artifacts::new(cfg)?;
    let nodes = data.nodes();
    for (c, run) in runs.iter().enumerate() {
        for (s, net) in run.networks.iter().enumerate() {
            art.csv(&format!("samples/chain{c}_sample{s:04}.csv"), &[], |w| {
                w.write_record(flowergm::io::EDGE_HEADER)?;
                for (o, d, k) in export_edges(nodes, net) {
                    w.write_record([o, d, k.to_string()])?;
                }
                Ok(())
            })?;
        }
    }
    let observed_stats = bound.global_stats(observed);
    art.csv("trace.csv", &[], |w| {
        let mut header = vec!["chain".to_string(), "sample".to_string()];
        header.extend(bound.labels.iter().cloned());
        w.write_record(&header)?;
        for (c, run) in runs.iter().enumerate() {
            for (s, stats) in run.stats.iter().enumerate() {
                let mut row = vec![c.to_string(), s.to_string()];
                row.extend(stats.iter().map(|v| v.to_string()));
                w.write_record(&row)?;
            }
        }
        Ok(())
    })?;
    let summary = json!({
        "chains": chains,
        "samples_per_chain": sampler.n_samples,
        "observed_stats": bound.labels.iter().zip(&observed_stats).map(|(l, v)| json!({"term": l, "value": v})).collect::<Vec<_>>(),
    });
    art.finish(cfg, summary)?;
    Ok(())
}

fn knockout(cfg: &RunConfig, focal_flag: Option<&str>, group_flag: Option<&str>) -> CliResult<()> {
    cfg.check_paths()?;
    let sampler = cfg.sampler.clone().unwrap();
    sampler.validate()?;
    let file = read_scenarios(cfg.inputs.scenarios.as_ref().unwrap())?;
    let group_col = group_flag.or(file.group_col.as_deref()).unwrap_or("state");
    let focal = focal_flag
        .or(file.focal_group.as_deref())
        .ok_or_else(|| CliError::Usage("no focal group: pass --focal-group or set focal_group in the scenario file".into()))?;
    let data = load(&cfg.inputs)?;
    let observed = data.network()?;
    let model = read_fit(cfg.inputs.fit.as_ref().unwrap())?;
    let grouping = data.grouping(group_col)?;
    let focal_group =
        grouping.index_of(focal).ok_or_else(|| CliError::Usage(format!("focal group `{focal}` not found in column `{group_col}`")))?;
    progress(cfg, format!("{} scenario(s) plus baseline", file.scenarios.len()));
    let suite = KnockoutSuite { model: &model, covariates: &data.covariates, observed, grouping: &grouping, focal_group, sampler };
    let report = suite.run(&file.scenarios)?;

    let mut art = Artifacts::new(cfg)?;
    let notes = vec![format!("focal_group={}, group_col={group_col}, rank 1 = largest value", report.focal_group)];
    art.csv("knockout.csv", &notes, |w| {
        let mut header = vec!["scenario".to_string()];
        for m in &report.metrics {
            header.push(format!("{}_rank", m.as_str()));
            header.push(format!("{}_change", m.as_str()));
        }
        w.write_record(&header)?;
        for row in &report.rows {
            let mut rec = vec![row.name.clone()];
            for k in 0..report.metrics.len() {
                rec.push(row.average_rank[k].to_string());
                rec.push(row.change[k].to_string());
            }
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    art.csv("knockout_samples.csv", &notes, |w| {
        w.write_record(["scenario", "metric", "sample", "rank"])?;
        for row in &report.rows {
            for (m, ranks) in report.metrics.iter().zip(&row.sample_ranks) {
                for (s, r) in ranks.iter().enumerate() {
                    w.write_record([row.name.clone(), m.as_str().to_string(), s.to_string(), r.to_string()])?;
                }
            }
        }
        Ok(())
    })?;
    art.finish(cfg, json!({ "focal_group": report.focal_group, "scenarios": report.rows.len() }))?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn ffgrid_cmd(
    cfg: &RunConfig,
    covariate: &str,
    n_grid: usize,
    focal: Option<f64>,
    x0: Option<f64>,
    weighted_median: bool,
    bins: usize,
) -> CliResult<()> {
    if n_grid < 2 {
        return Err(CliError::Usage("--grid must be at least 2".into()));
    }
    cfg.check_paths()?;
    let data = load(&cfg.inputs)?;
    let model = read_fit(cfg.inputs.fit.as_ref().unwrap())?;
    let group = TermGroup::from_model(&model, covariate)?;
    let nodes = data.nodes();
    let values = data.covariates.node_column(covariate)?;
    let weights = nodes.population();
    let x0 = match x0 {
        Some(v) => v,
        None => default_normalizer(covariate, values, weights, weighted_median)?,
    };
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let axis = linspace(lo, hi, n_grid);

    let mut grids = vec![("composite".to_string(), ffgrid(&group, &axis, &axis, x0))];
    if group.terms.len() > 1 {
        for g in group.components() {
            grids.push((g.terms[0].label.clone(), ffgrid(&g, &axis, &axis, x0)));
        }
    }

    let mut art = Artifacts::new(cfg)?;
    let notes = vec![format!("covariate={covariate}, x0={x0}")];
    art.csv(&format!("ffgrid_{covariate}.csv"), &notes, |w| {
        w.write_record(["grid", "origin_value", "dest_value", "ratio"])?;
        for (name, g) in &grids {
            for (o, d, r) in g.cells() {
                w.write_record([name.clone(), o.to_string(), d.to_string(), r.to_string()])?;
            }
        }
        Ok(())
    })?;
    if let Some(xf) = focal {
        let curves = focal_curves(&group, xf, &axis, x0, values, weights, bins);
        let notes = vec![format!("covariate={covariate}, x0={x0}, focal={xf}")];
        art.csv(&format!("focal_{covariate}.csv"), &notes, |w| {
            w.write_record(["x", "r_in", "r_out", "net", "pop_mass"])?;
            for p in &curves.points {
                w.write_record([p.x, p.r_in, p.r_out, p.net, p.pop_mass].map(|v| v.to_string()))?;
            }
            Ok(())
        })?;
        art.csv(&format!("histogram_{covariate}.csv"), &notes, |w| {
            w.write_record(["lo", "hi", "pop_mass", "net_sign"])?;
            for b in &curves.histogram {
                w.write_record([b.lo.to_string(), b.hi.to_string(), b.pop_mass.to_string(), b.net_sign.to_string()])?;
            }
            Ok(())
        })?;
    }
    art.finish(cfg, json!({ "x0": x0, "terms": group.terms.iter().map(|t| &t.label).collect::<Vec<_>>() }))?;
    Ok(())
}

fn metrics(cfg: &RunConfig, group_col: &str) -> CliResult<()> {
    cfg.check_paths()?;
    let data = load(&cfg.inputs)?;
    let net = data.network()?;
    let grouping = data.grouping(group_col)?;
    let report = compute_metrics(net, &grouping)?;
    let ranks: Vec<Vec<f64>> = Metric::ALL.iter().map(|&m| rank_groups(&report, m)).collect();

    let mut art = Artifacts::new(cfg)?;
    art.csv("metrics.csv", &[format!("group_col={group_col}, rank 1 = largest value")], |w| {
        let mut header: Vec<String> =
            ["group", "population", "in_migrants", "out_migrants", "net_count", "net_rate", "mii"].map(String::from).to_vec();
        header.extend(Metric::ALL.iter().map(|m| format!("rank_{}", m.as_str())));
        w.write_record(&header)?;
        for (g, row) in report.groups.iter().enumerate() {
            let mut rec = vec![
                row.group.clone(),
                row.population.to_string(),
                row.in_migrants.to_string(),
                row.out_migrants.to_string(),
                row.net_count.to_string(),
                row.net_rate.to_string(),
                fmt_opt(row.mii),
            ];
            rec.extend(ranks.iter().map(|r| r[g].to_string()));
            w.write_record(&rec)?;
        }
        Ok(())
    })?;
    art.csv("network_metrics.csv", &[], |w| {
        w.write_record(["metric", "value"])?;
        w.write_record(["total_migrants".to_string(), report.total_migrants.to_string()])?;
        w.write_record(["dyad_asymmetry".to_string(), report.dyad_asymmetry.to_string()])?;
        w.write_record(["node_asymmetry".to_string(), report.node_asymmetry.to_string()])
    })?;
    art.finish(cfg, json!({ "groups": report.groups.len(), "total_migrants": report.total_migrants }))?;
    Ok(())
}

fn quantiles(cfg: &RunConfig, group_col: &str, subset: &str) -> CliResult<()> {
    cfg.check_paths()?;
    let data = load(&cfg.inputs)?;
    let nodes = data.nodes();
    let labels = data.covariates.category_column(group_col)?;
    let members: Vec<usize> = (0..nodes.len()).filter(|&k| labels[k] == subset).collect();
    let q = attribute_quantiles(nodes, &members)?;

    let mut art = Artifacts::new(cfg)?;
    let notes = vec![format!("{group_col}={subset}")];
    art.csv("quantiles.csv", &notes, |w| {
        w.write_record(["covariate", "node_id", "value", "quantile"])?;
        for c in &q {
            for &(k, v, p) in &c.nodes {
                w.write_record([c.covariate.clone(), nodes.id(k).to_string(), v.to_string(), p.to_string()])?;
            }
        }
        Ok(())
    })?;
    art.csv("quantile_summary.csv", &notes, |w| {
        w.write_record(["covariate", "subset_median", "median_quantile", "weighted_mean", "weighted_mean_quantile"])?;
        for c in &q {
            w.write_record([
                c.covariate.clone(),
                c.subset_median.to_string(),
                c.median_quantile.to_string(),
                fmt_opt(c.weighted_mean),
                fmt_opt(c.weighted_mean_quantile),
            ])?;
        }
        Ok(())
    })?;
    art.finish(cfg, json!({ "subset_size": members.len() }))?;
    Ok(())
}

fn validate(inputs: &InputPaths, out: Option<&Path>) -> CliResult<()> {
    for (role, path) in inputs.iter() {
        if !path.is_file() {
            return Err(CliError::Usage(format!("--{} {} does not exist", role.replace('_', "-"), path.display())));
        }
    }
    let (report, _) = validate_inputs(inputs)?;
    let mut text = serde_json::to_string_pretty(&report)?;
    text.push('\n');
    if let Some(dir) = out {
        crate::artifacts::write_atomic(&dir.join("validation.json"), text.as_bytes())?;
    }
    if report.issues.is_empty() {
        print!("{text}");
        Ok(())
    } else {
        Err(CliError::Invalid(report.issues))
    }
}
