use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Record of one invocation, written last as `manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub versions: Value,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
    pub config: Value,
}

/// Output directory, effective configuration and the artifacts written so far.
pub struct Run {
    out: PathBuf,
    command: &'static str,
    seed: u64,
    config: Value,
    hash: String,
    outputs: Vec<String>,
    start: Instant,
}

/// SHA-256 over the canonical JSON of command, configuration and seed.
pub fn config_hash(command: &str, config: &Value, seed: u64) -> String {
    // serde_json maps are ordered by key, so the encoding is canonical
    let bytes = serde_json::to_vec(&json!({ "command": command, "config": config, "seed": seed }))
        .expect("json values serialize");
    Sha256::digest(&bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

impl Run {
    pub fn start<C: Serialize>(
        out: &Path,
        command: &'static str,
        config: &C,
        seed: u64,
    ) -> Result<Self, CliError> {
        std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
        let config = serde_json::to_value(config).expect("configs serialize");
        Ok(Run {
            out: out.to_path_buf(),
            command,
            seed,
            hash: config_hash(command, &config, seed),
            config,
            outputs: Vec::new(),
            start: Instant::now(),
        })
    }

    /// Write a CSV or text artifact through `body`.
    pub fn text(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
    ) -> Result<(), CliError> {
        let path = self.out.join(name);
        let file = File::create(&path).map_err(|e| CliError::io(&path, e))?;
        let mut w = BufWriter::new(file);
        body(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(name.to_string());
        Ok(())
    }

    /// Write a JSON artifact; the object gains `manifest` and `config_hash` keys.
    pub fn json(&mut self, name: &str, mut value: Value) -> Result<(), CliError> {
        if let Value::Object(map) = &mut value {
            map.insert("manifest".into(), MANIFEST.into());
            map.insert("config_hash".into(), self.hash.clone().into());
        }
        self.text(name, |w| {
            serde_json::to_writer_pretty(&mut *w, &value)?;
            writeln!(w)
        })
    }

    pub fn finish(self) -> Result<RunManifest, CliError> {
        let manifest = RunManifest {
            command: self.command.to_string(),
            config_hash: self.hash,
            seed: self.seed,
            versions: json!({
                "incoherence": incoherence::VERSION,
                "incoherence-cli": env!("CARGO_PKG_VERSION"),
            }),
            wall_time_s: self.start.elapsed().as_secs_f64(),
            outputs: self.outputs,
            config: self.config,
        };
        let path = self.out.join(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        std::fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}
