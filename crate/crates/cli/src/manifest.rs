//! Run manifests. Every output file gets a `<name>.manifest.json` sidecar
//! recording exactly how it was produced: the command line, the resolved
//! settings, the seed, the backend identity, and a digest of every input.
//! Re-running the same command over the same inputs with a deterministic
//! backend writes byte-identical outputs and (given `SOURCE_DATE_EPOCH`)
//! byte-identical manifests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_SUFFIX: &str = ".manifest.json";

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct BackendIdentity {
    pub name: String,
    pub digest: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Argv as invoked, with the leading binary path reduced to its file
    /// name so the record does not depend on where the tool was installed.
    pub command_line: Vec<String>,
    pub seed: u64,
    pub workers: usize,
    /// Effective settings after flag/config/default resolution.
    pub settings: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub backend: Option<BackendIdentity>,
    /// Input path -> sha256 of its bytes, sorted by path.
    pub inputs: BTreeMap<String, String>,
    /// File names this manifest vouches for (sidecar-relative).
    pub outputs: Vec<String>,
    /// RFC 3339; taken from `SOURCE_DATE_EPOCH` when set.
    pub timestamp: String,
}

impl RunManifest {
    pub fn new(
        subcommand: &str,
        command_line: &[String],
        seed: u64,
        workers: usize,
        settings: serde_json::Value,
    ) -> Self {
        let mut command_line = command_line.to_vec();
        if let Some(first) = command_line.first_mut() {
            if let Some(name) = Path::new(first.as_str()).file_name() {
                *first = name.to_string_lossy().into_owned();
            }
        }
        RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            command_line,
            seed,
            workers,
            settings,
            backend: None,
            inputs: BTreeMap::new(),
            outputs: Vec::new(),
            timestamp: timestamp(),
        }
    }

    pub fn record_input(&mut self, path: &Path) -> anyhow::Result<()> {
        let digest = sha256_file(path)?;
        self.inputs.insert(path.display().to_string(), digest);
        Ok(())
    }

    pub fn record_optional_input(&mut self, path: Option<&Path>) -> anyhow::Result<()> {
        if let Some(path) = path {
            self.record_input(path)?;
        }
        Ok(())
    }

    pub fn set_backend(&mut self, backend: &dyn listrank_core::rerank_engine::Backend) {
        self.backend = Some(BackendIdentity {
            name: backend.name().to_string(),
            digest: backend.config_digest(),
        });
    }

    /// Write the sidecar `<output>.manifest.json` next to `output`, which
    /// becomes this manifest's sole vouched file.
    pub fn write_beside(&mut self, output: &Path) -> anyhow::Result<PathBuf> {
        let name = output
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_else(|| output.display().to_string());
        self.outputs = vec![name.clone()];
        let mut sidecar = output.as_os_str().to_owned();
        sidecar.push(MANIFEST_SUFFIX);
        let sidecar = PathBuf::from(sidecar);
        self.write_to(&sidecar)?;
        Ok(sidecar)
    }

    /// Write `manifest.json` inside a directory output (e.g. an index),
    /// vouching for the listed files.
    pub fn write_into_dir(&mut self, dir: &Path, outputs: Vec<String>) -> anyhow::Result<PathBuf> {
        self.outputs = outputs;
        let path = dir.join("manifest.json");
        self.write_to(&path)?;
        Ok(path)
    }

    fn write_to(&self, path: &Path) -> anyhow::Result<()> {
        let mut file =
            File::create(path).with_context(|| format!("creating manifest {}", path.display()))?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let file =
            File::open(path).with_context(|| format!("opening manifest {}", path.display()))?;
        serde_json::from_reader(BufReader::new(file))
            .with_context(|| format!("parsing manifest {}", path.display()))
    }
}

pub fn sha256_file(path: &Path) -> anyhow::Result<String> {
    let file = File::open(path).with_context(|| format!("digesting {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 8192];
    loop {
        let n = reader.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

/// `SOURCE_DATE_EPOCH` (seconds since the epoch) pins the timestamp for
/// reproducible runs; otherwise the wall clock is used.
fn timestamp() -> String {
    let now = match std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|raw| raw.parse::<i64>().ok())
        .and_then(|secs| DateTime::<Utc>::from_timestamp(secs, 0))
    {
        Some(pinned) => pinned,
        None => Utc::now(),
    };
    now.to_rfc3339_opts(SecondsFormat::Secs, true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use listrank_core::rerank_engine::IdentityBackend;

    fn sample(command: &[&str]) -> RunManifest {
        let argv: Vec<String> = command.iter().map(|s| s.to_string()).collect();
        RunManifest::new("rerank", &argv, 42, 2, serde_json::json!({"topk": 100}))
    }

    #[test]
    fn sidecar_lands_next_to_the_output_and_roundtrips() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("input.txt");
        std::fs::write(&input, "q1 Q0 d1 1 1.0 tag\n").unwrap();
        let output = dir.path().join("out.run.txt");
        std::fs::write(&output, "placeholder").unwrap();

        let mut manifest = sample(&["/usr/local/bin/listrank", "rerank", "--run", "input.txt"]);
        manifest.record_input(&input).unwrap();
        manifest.set_backend(&IdentityBackend);
        let sidecar = manifest.write_beside(&output).unwrap();

        assert_eq!(sidecar, dir.path().join("out.run.txt.manifest.json"));
        let loaded = RunManifest::load(&sidecar).unwrap();
        assert_eq!(loaded.command_line[0], "listrank", "binary path trimmed");
        assert_eq!(loaded.outputs, vec!["out.run.txt".to_string()]);
        assert_eq!(loaded.backend.as_ref().unwrap().name, "identity");
        let digest = loaded.inputs.get(&input.display().to_string()).unwrap();
        assert_eq!(digest.len(), 64);
    }

    #[test]
    fn source_date_epoch_pins_the_timestamp() {
        // Set for this test only; tests in this module run on one process
        // but no other test reads the clock, so the race is harmless.
        std::env::set_var("SOURCE_DATE_EPOCH", "946684800");
        let stamp = timestamp();
        std::env::remove_var("SOURCE_DATE_EPOCH");
        assert_eq!(stamp, "2000-01-01T00:00:00Z");
    }

    #[test]
    fn input_digest_matches_a_known_sha256() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("abc.txt");
        std::fs::write(&path, "abc").unwrap();
        assert_eq!(
            sha256_file(&path).unwrap(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
