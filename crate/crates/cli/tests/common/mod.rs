#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use flowergm::network::export_edges;
use flowergm::sampler::sample_networks;
use flowergm::{seeds, BoundModel, Covariates, InitMode, ModelSpec, NodeTable, Predictor, SamplerConfig, TermKind, TermSpec};

pub fn unit(k: u64, stream: u64) -> f64 {
    (seeds::derive(k, stream) >> 11) as f64 / (1u64 << 53) as f64
}

pub fn truth() -> ModelSpec {
    ModelSpec::new(vec![
        TermSpec::new(TermKind::Sum).with_coef(1.0),
        TermSpec::new(TermKind::Nonzero).with_coef(-0.5),
        TermSpec::new(TermKind::Mutuality).with_coef(0.2),
        TermSpec::on(TermKind::AbsDissimilarity, "p_x").with_coef(-1.0),
        TermSpec::on(TermKind::SignDirection, "p_x").with_coef(0.3),
        TermSpec::on(TermKind::NodeOrigin, "log_y").with_coef(0.2),
        TermSpec::on(TermKind::DyadCovariate, "log_distance").with_coef(-0.3),
    ])
    .unwrap()
}

pub const MODEL_TOML: &str = r#"
[[term]]
kind = "sum"

[[term]]
kind = "nonzero"

[[term]]
kind = "mutuality"

[[term]]
kind = "abs_dissimilarity"
covariate = "p_x"

[[term]]
kind = "sign_direction"
covariate = "p_x"

[[term]]
kind = "node_origin"
covariate = "log_y"

[[term]]
kind = "dyad_covariate"
covariate = "log_distance"
"#;

pub const SCENARIOS_TOML: &str = r#"
focal_group = "S0"
group_col = "state"

[[scenario]]
name = "Remove Distance Effect"
[[scenario.knockout]]
covariate = "log_distance"

[[scenario]]
name = "Remove Partisan Effect"
[[scenario.knockout]]
covariate = "p_x"

[[scenario]]
name = "Equalize Population"
[[scenario.knockout]]
covariate = "population"
"#;

/// Node rows for `n` synthetic nodes spread over ten states.
pub fn node_table(n: usize) -> (String, NodeTable) {
    let mut text = String::from("node_id,lat,lon,population,state,region,p_x,log_y\n");
    let mut ids = Vec::new();
    let (mut lat, mut lon, mut pop, mut st, mut rg, mut px, mut ly) = (vec![], vec![], vec![], vec![], vec![], vec![], vec![]);
    for k in 0..n as u64 {
        let id = format!("n{k:03}");
        let la = 30.0 + 15.0 * unit(k, 1);
        let lo = -120.0 + 40.0 * unit(k, 2);
        let p = (1000.0 + 99_000.0 * unit(k, 3)).round();
        let s = format!("S{}", k % 10);
        let r = if k % 10 < 5 { "East" } else { "West" };
        let x = (0.1 + 0.8 * unit(k, 4) * 1000.0).round() / 1000.0;
        let y = (10.0 + 2.0 * unit(k, 5) * 1000.0).round() / 1000.0;
        text.push_str(&format!("{id},{la},{lo},{p},{s},{r},{x},{y}\n"));
        ids.push(id);
        lat.push(la);
        lon.push(lo);
        pop.push(p);
        st.push(s);
        rg.push(r.to_string());
        px.push(x);
        ly.push(y);
    }
    let mut t = NodeTable::from_ids(ids).unwrap();
    t.set_positions(lat, lon).unwrap();
    t.set_population(pop).unwrap();
    t.set_categorical("state", st).unwrap();
    t.set_categorical("region", rg).unwrap();
    t.set_numeric("p_x", px).unwrap();
    t.set_numeric("log_y", ly).unwrap();
    (text, t)
}

/// Writes nodes.csv, edges.csv (one draw from [`truth`]), model.toml and
/// scenarios.toml into `dir`.
pub fn write_fixture(dir: &Path, n: usize) {
    let (text, nodes) = node_table(n);
    fs::write(dir.join("nodes.csv"), text).unwrap();
    let x = Covariates::bare(nodes);
    let model = truth();
    let theta = model.theta().unwrap();
    let bound = BoundModel::bind(&model, &x).unwrap();
    let pred = Predictor::new(&bound, &theta).unwrap();
    let cfg = SamplerConfig { burn_in_sweeps: 30, thin_sweeps: 1, n_samples: 1, seed: 11, init: InitMode::Empty, support_cap: None };
    let empty = flowergm::CountNetwork::empty(x.n_nodes());
    let run = sample_networks(&pred, &empty, &cfg).unwrap();
    let mut edges = String::from("origin,dest,count\n");
    for (o, d, k) in export_edges(&x.nodes, &run.networks[0]) {
        edges.push_str(&format!("{o},{d},{k}\n"));
    }
    fs::write(dir.join("edges.csv"), edges).unwrap();
    fs::write(dir.join("model.toml"), MODEL_TOML).unwrap();
    fs::write(dir.join("scenarios.toml"), SCENARIOS_TOML).unwrap();
}

pub fn flowergm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flowergm")).args(args).env_remove("FLOWERGM_WORKERS").output().unwrap()
}

pub fn ok(args: &[&str]) -> Output {
    let out = flowergm(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

pub fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

/// Every CSV under `dir`, relative path and bytes, sorted.
pub fn csv_files(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|x| x == "csv") {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

/// Data rows of a CSV artifact after the comment lines.
pub fn rows(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let body = rdr.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (header, body)
}

/// fit, simulate, knockout, ffgrid, metrics and quantiles on the fixture in `data`.
pub fn full_pipeline(data: &std::path::Path, out: &std::path::Path, workers: &str) {
    let nodes = data.join("nodes.csv");
    let edges = data.join("edges.csv");
    let fit_dir = out.join("fit");
    ok(&[
        "fit",
        "--edges",
        p(&edges),
        "--nodes",
        p(&nodes),
        "--model",
        p(&data.join("model.toml")),
        "--out",
        p(&fit_dir),
        "--workers",
        workers,
    ]);
    let fit = fit_dir.join("fit.csv");
    let sim = out.join("sim");
    ok(&[
        "simulate",
        "--edges",
        p(&edges),
        "--nodes",
        p(&nodes),
        "--fit",
        p(&fit),
        "--samples",
        "3",
        "--burnin",
        "20",
        "--thin",
        "5",
        "--seed",
        "2024",
        "--chains",
        "2",
        "--out",
        p(&sim),
        "--workers",
        workers,
    ]);
    ok(&[
        "knockout",
        "--edges",
        p(&edges),
        "--nodes",
        p(&nodes),
        "--fit",
        p(&fit),
        "--scenarios",
        p(&data.join("scenarios.toml")),
        "--samples",
        "3",
        "--burnin",
        "10",
        "--thin",
        "2",
        "--seed",
        "7",
        "--out",
        p(&out.join("ko")),
        "--workers",
        workers,
    ]);
    ok(&[
        "ffgrid",
        "--fit",
        p(&fit),
        "--nodes",
        p(&nodes),
        "--group",
        "p_x",
        "--grid",
        "11",
        "--focal",
        "0.5",
        "--out",
        p(&out.join("ff")),
    ]);
    ok(&["metrics", "--edges", p(&sim.join("samples/chain0_sample0002.csv")), "--nodes", p(&nodes), "--out", p(&out.join("metrics"))]);
    ok(&["quantiles", "--nodes", p(&nodes), "--subset", "S0", "--out", p(&out.join("q"))]);
}
