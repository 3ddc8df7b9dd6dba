use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Serialize)]
pub struct FileHash {
    pub path: String,
    pub sha256: String,
}

/// What a run read and wrote, keyed by content hash, plus the resolved
/// configuration. Contains no clock readings, so identical runs produce
/// identical manifests.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub inputs: Vec<FileHash>,
    pub outputs: Vec<FileHash>,
}

#[derive(Debug, Default)]
pub struct Tracker {
    inputs: BTreeMap<PathBuf, String>,
    outputs: BTreeMap<PathBuf, String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn hash_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

impl Tracker {
    /// Records an input file, and its `.trees` sidecar when one exists.
    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        if !self.inputs.contains_key(path) {
            self.inputs.insert(path.to_path_buf(), hash_file(path)?);
        }
        let sidecar = path.with_extension("trees");
        if path.extension().is_some_and(|e| e == "conllu") && sidecar.is_file() && !self.inputs.contains_key(&sidecar) {
            self.inputs.insert(sidecar.clone(), hash_file(&sidecar)?);
        }
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<(), CliError> {
        self.outputs.insert(path.to_path_buf(), hash_file(path)?);
        Ok(())
    }

    /// Records every file under `dir` as an output.
    pub fn output_tree(&mut self, dir: &Path) -> Result<(), CliError> {
        for file in crate::commands::files_under(dir)? {
            self.output(&file)?;
        }
        Ok(())
    }

    pub fn finish(self, seed: u64, config: serde_json::Value) -> Manifest {
        let list = |m: BTreeMap<PathBuf, String>| {
            m.into_iter().map(|(p, sha256)| FileHash { path: p.display().to_string(), sha256 }).collect()
        };
        Manifest {
            tool: format!("clarte {}", env!("CARGO_PKG_VERSION")),
            seed,
            config,
            inputs: list(self.inputs),
            outputs: list(self.outputs),
        }
    }
}
