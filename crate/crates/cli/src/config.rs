//! Run configuration and its digest.
//!
//! The digest covers the subcommand, the content of every input file, the
//! sampler settings, the master seed and the command parameters. It leaves
//! out the output directory, worker count and verbosity, none of which can
//! change an artifact.

use std::collections::BTreeMap;
use std::path::PathBuf;

use flowergm::SamplerConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Default, Serialize)]
pub struct InputPaths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nodes: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dyads: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub past_flows: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scenarios: Option<PathBuf>,
}

impl InputPaths {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, &PathBuf)> {
        [
            ("edges", &self.edges),
            ("nodes", &self.nodes),
            ("dyads", &self.dyads),
            ("past_flows", &self.past_flows),
            ("model", &self.model),
            ("fit", &self.fit),
            ("scenarios", &self.scenarios),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.as_ref().map(|p| (k, p)))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub inputs: InputPaths,
    pub out: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sampler: Option<SamplerConfig>,
    pub seed: u64,
    pub workers: Option<usize>,
    pub verbosity: u8,
    /// Command-specific settings, rendered as text.
    pub params: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct DigestView<'a> {
    command: &'a str,
    inputs: BTreeMap<&'static str, String>,
    sampler: &'a Option<SamplerConfig>,
    seed: u64,
    params: &'a BTreeMap<String, String>,
}

impl RunConfig {
    pub fn new(command: &str, out: PathBuf, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            inputs: InputPaths::default(),
            out,
            sampler: None,
            seed,
            workers: None,
            verbosity: 0,
            params: BTreeMap::new(),
        }
    }

    pub fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    /// Every referenced input must exist.
    pub fn check_paths(&self) -> CliResult<()> {
        for (role, path) in self.inputs.iter() {
            if !path.is_file() {
                return Err(CliError::Usage(format!("--{} {} does not exist", role.replace('_', "-"), path.display())));
            }
        }
        Ok(())
    }

    /// Canonical text the digest is taken over: compact JSON with sorted
    /// maps, input files replaced by the SHA-256 of their bytes.
    pub fn canonical_text(&self) -> CliResult<String> {
        let mut inputs = BTreeMap::new();
        for (role, path) in self.inputs.iter() {
            let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
            inputs.insert(role, hex(&Sha256::digest(&bytes)));
        }
        let view = DigestView { command: &self.command, inputs, sampler: &self.sampler, seed: self.seed, params: &self.params };
        Ok(serde_json::to_string(&view)?)
    }

    /// First 64 bits of the SHA-256 of [`Self::canonical_text`], as hex.
    pub fn digest(&self) -> CliResult<String> {
        let h = Sha256::digest(self.canonical_text()?.as_bytes());
        Ok(hex(&h[..8]))
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
