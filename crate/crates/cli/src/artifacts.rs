//! Atomic artifact output and the run manifest.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Writes `bytes` to `path` through a sibling temp file and a rename, so a
/// reader never sees a half-written artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(CliError::io(path, e));
    }
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub bytes: usize,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    seed: u64,
    config_digest: &'a str,
    config: &'a RunConfig,
    started_unix: u64,
    wall_clock_seconds: f64,
    artifacts: &'a [ArtifactEntry],
    #[serde(skip_serializing_if = "serde_json::Value::is_null")]
    summary: serde_json::Value,
}

/// Collects a run's artifacts under one output directory.
pub struct Artifacts {
    out: PathBuf,
    seed: u64,
    digest: String,
    started: Instant,
    started_unix: u64,
    written: Vec<ArtifactEntry>,
}

impl Artifacts {
    pub fn new(cfg: &RunConfig) -> CliResult<Self> {
        fs::create_dir_all(&cfg.out).map_err(|e| CliError::io(&cfg.out, e))?;
        Ok(Self {
            out: cfg.out.clone(),
            seed: cfg.seed,
            digest: cfg.digest()?,
            started: Instant::now(),
            started_unix: SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0),
            written: Vec::new(),
        })
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// Provenance line every CSV artifact starts with.
    pub fn header(&self) -> String {
        format!("# seed={}, config_digest={}\n", self.seed, self.digest)
    }

    /// Writes a CSV artifact: provenance header, optional extra comment
    /// lines, then the body produced by `fill`.
    pub fn csv<F>(&mut self, rel: &str, notes: &[String], fill: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut csv::Writer<&mut Vec<u8>>) -> csv::Result<()>,
    {
        let mut body = Vec::new();
        {
            let mut w = csv::Writer::from_writer(&mut body);
            fill(&mut w).map_err(flowergm::Error::from)?;
            w.flush().map_err(|e| CliError::io(Path::new(rel), e))?;
        }
        self.commented(rel, notes, &body)
    }

    /// Writes `body` behind the provenance header and comment lines.
    pub fn commented(&mut self, rel: &str, notes: &[String], body: &[u8]) -> CliResult<PathBuf> {
        let mut buf = self.header().into_bytes();
        for n in notes {
            buf.extend_from_slice(format!("# {n}\n").as_bytes());
        }
        buf.extend_from_slice(body);
        self.raw(rel, &buf)
    }

    pub fn raw(&mut self, rel: &str, bytes: &[u8]) -> CliResult<PathBuf> {
        let path = self.out.join(rel);
        write_atomic(&path, bytes)?;
        self.written.push(ArtifactEntry { path: rel.to_string(), bytes: bytes.len() });
        Ok(path)
    }

    pub fn written(&self) -> &[ArtifactEntry] {
        &self.written
    }

    /// Writes `manifest.json` last, once every artifact is in place.
    pub fn finish(self, cfg: &RunConfig, summary: serde_json::Value) -> CliResult<PathBuf> {
        let m = Manifest {
            tool: "flowergm",
            version: env!("CARGO_PKG_VERSION"),
            command: &cfg.command,
            seed: self.seed,
            config_digest: &self.digest,
            config: cfg,
            started_unix: self.started_unix,
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            artifacts: &self.written,
            summary,
        };
        let mut text = serde_json::to_string_pretty(&m)?;
        text.push('\n');
        let path = self.out.join("manifest.json");
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}
