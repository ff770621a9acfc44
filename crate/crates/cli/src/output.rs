//! Output staging and run manifests.
//!
//! Commands build every output in memory first; nothing touches the output
//! directory until the whole computation has succeeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use fishclim::grid::{encode_native, FieldGrid};
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::failure::Failure;

pub struct Staged {
    files: Vec<(String, Vec<u8>)>,
}

impl Staged {
    pub fn new() -> Self {
        Staged { files: Vec::new() }
    }

    pub fn add(&mut self, name: impl Into<String>, bytes: impl Into<Vec<u8>>) {
        self.files.push((name.into(), bytes.into()));
    }

    /// `<stem>.hdr` + `<stem>.bin`.
    pub fn add_grid(&mut self, stem: &str, grid: &FieldGrid) {
        let (header, payload) = encode_native(grid, &format!("{stem}.bin"));
        self.add(format!("{stem}.hdr"), header);
        self.add(format!("{stem}.bin"), payload);
    }

    /// Writes every staged file, then the manifest listing them with checksums.
    pub fn commit(self, outdir: &Path, mut manifest: Manifest) -> Result<PathBuf, Failure> {
        fs::create_dir_all(outdir).map_err(|e| Failure::io(outdir, e))?;
        let mut listed = Vec::new();
        for (name, bytes) in &self.files {
            let path = outdir.join(name);
            fs::write(&path, bytes).map_err(|e| Failure::io(&path, e))?;
            listed.push(json!({
                "file": name,
                "bytes": bytes.len(),
                "sha256": sha256_hex(bytes),
            }));
        }
        manifest.body.insert("outputs".into(), Value::Array(listed));
        manifest.finish_timing();
        let path = outdir.join(format!("manifest_{}.json", manifest.command));
        let mut text = serde_json::to_string_pretty(&Value::Object(manifest.body)).expect("manifest serializes");
        text.push('\n');
        fs::write(&path, text).map_err(|e| Failure::io(&path, e))?;
        Ok(path)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub struct Manifest {
    command: &'static str,
    body: Map<String, Value>,
    started: Instant,
    timings: Map<String, Value>,
    warnings: Vec<String>,
}

impl Manifest {
    pub fn new(command: &'static str, config: &RunConfig) -> Self {
        let mut body = Map::new();
        body.insert("tool".into(), json!("fishclim"));
        body.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
        body.insert("command".into(), json!(command));
        body.insert(
            "created".into(),
            json!(chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)),
        );
        body.insert("config".into(), json!(config.echo()));
        Manifest {
            command,
            body,
            started: Instant::now(),
            timings: Map::new(),
            warnings: Vec::new(),
        }
    }

    pub fn insert(&mut self, key: &str, value: Value) {
        self.body.insert(key.into(), value);
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    /// Runs `f` and records its wall time under `stage`.
    pub fn timed<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let t0 = Instant::now();
        let out = f();
        self.timings.insert(stage.into(), json!(t0.elapsed().as_secs_f64() * 1e3));
        out
    }

    fn finish_timing(&mut self) {
        self.timings
            .insert("total".into(), json!(self.started.elapsed().as_secs_f64() * 1e3));
        self.body
            .insert("timings_ms".into(), Value::Object(std::mem::take(&mut self.timings)));
        self.body
            .insert("warnings".into(), json!(std::mem::take(&mut self.warnings)));
    }
}
