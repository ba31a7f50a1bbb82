//! Reproducibility manifests.
//!
//! Every artifact gets a `<artifact>.manifest` sibling recording the tool
//! version, the subcommand, SHA-256 digests of all input files, and the
//! resolved (post-override) configuration keys the subcommand used. The
//! manifest plus the same inputs reproduce the artifact bit-exactly.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::CliError;

pub struct Manifest {
    subcommand: &'static str,
    inputs: Vec<(String, String)>,
    keys: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(subcommand: &'static str) -> Self {
        Manifest {
            subcommand,
            inputs: Vec::new(),
            keys: Vec::new(),
        }
    }

    /// Records an input file digest under a short label.
    pub fn input(&mut self, label: &str, path: &Path) -> Result<(), CliError> {
        let digest = sha256_file(path)?;
        self.inputs.push((label.to_string(), digest));
        Ok(())
    }

    pub fn keys(&mut self, entries: Vec<(String, String)>) {
        self.keys = entries;
    }

    /// Writes `<artifact>.manifest` beside the artifact.
    pub fn write_beside(&self, artifact: &Path) -> Result<(), CliError> {
        let mut text = String::new();
        let _ = writeln!(text, "tool.version = {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "subcommand = {}", self.subcommand);
        let mut inputs = self.inputs.clone();
        inputs.sort();
        for (label, digest) in &inputs {
            let _ = writeln!(text, "input.{label}.sha256 = {digest}");
        }
        for (key, value) in &self.keys {
            let _ = writeln!(text, "{key} = {value}");
        }
        let path = manifest_path(artifact);
        std::fs::write(&path, text)
            .map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
    }
}

pub fn manifest_path(artifact: &Path) -> std::path::PathBuf {
    let mut name = artifact.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest");
    artifact.with_file_name(name)
}

fn sha256_file(path: &Path) -> Result<String, CliError> {
    let mut file = File::open(path)
        .map_err(|e| CliError::Config(format!("cannot open input {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 65536];
    loop {
        let n = file
            .read(&mut buf)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for byte in digest {
        let _ = write!(hex, "{byte:02x}");
    }
    Ok(hex)
}
