use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use hewflow::compiler::ModelGraph;
use hewflow::format::{read_ciphertext, read_public_key, read_relin_key, read_secret_key};
use hewflow::scheme::{Ciphertext, ParamsFile, PublicKey, RelinKey, SchemeParams, SecretKey};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

pub const PARAMS: &str = "params.json";
pub const PUBLIC_KEY: &str = "public.bin";
pub const SECRET_KEY: &str = "secret.bin";
pub const RELIN_KEY: &str = "relin.bin";
pub const MODEL: &str = "model.json";
pub const CIRCUIT: &str = "circuit.json";
pub const INPUTS: &str = "inputs";
pub const OUTPUTS: &str = "outputs";
pub const REPORTS: &str = "reports";
pub const MANIFEST: &str = "manifest.json";
pub const METRICS: &str = "metrics.json";
pub const PREDICTIONS: &str = "predictions.csv";

/// One encrypted request: a batch of rows packed into per-feature (or
/// per-output) ciphertext files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RequestFiles {
    pub batch: usize,
    pub files: Vec<String>,
}

/// `inputs/manifest.json` and `outputs/manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub params_hash: String,
    pub rows: usize,
    pub batch_packing: bool,
    pub requests: Vec<RequestFiles>,
}

pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    pub fn exists(&self, rel: &str) -> bool {
        self.path(rel).exists()
    }

    pub fn read(&self, rel: &str, hint: &str) -> Result<Vec<u8>, CliError> {
        let p = self.path(rel);
        if !p.exists() {
            return Err(CliError::Missing(p, hint.to_string()));
        }
        fs::read(&p).map_err(|e| CliError::Io(p, e))
    }

    pub fn read_text(&self, rel: &str, hint: &str) -> Result<String, CliError> {
        String::from_utf8(self.read(rel, hint)?)
            .map_err(|_| CliError::Usage(format!("{} is not UTF-8 text", self.path(rel).display())))
    }

    pub fn write(&self, rel: &str, bytes: impl AsRef<[u8]>) -> Result<PathBuf, CliError> {
        let p = self.path(rel);
        if let Some(dir) = p.parent() {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(dir.to_path_buf(), e))?;
        }
        fs::write(&p, bytes).map_err(|e| CliError::Io(p.clone(), e))?;
        Ok(p)
    }

    /// Removes and recreates a subdirectory.
    pub fn reset_dir(&self, rel: &str) -> Result<(), CliError> {
        let p = self.path(rel);
        if p.exists() {
            fs::remove_dir_all(&p).map_err(|e| CliError::Io(p.clone(), e))?;
        }
        fs::create_dir_all(&p).map_err(|e| CliError::Io(p, e))
    }

    pub fn params(&self) -> Result<Arc<SchemeParams>, CliError> {
        let text = self.read_text(PARAMS, "run `hewflow keygen` first")?;
        let file: ParamsFile = serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("{}: {e}", self.path(PARAMS).display())))?;
        Ok(SchemeParams::from_file(&file)?)
    }

    pub fn public_key(&self, params: &Arc<SchemeParams>) -> Result<PublicKey, CliError> {
        Ok(read_public_key(params, &self.read(PUBLIC_KEY, "run `hewflow keygen` first")?)?)
    }

    pub fn secret_key(&self, params: &Arc<SchemeParams>) -> Result<SecretKey, CliError> {
        Ok(read_secret_key(params, &self.read(SECRET_KEY, "decryption needs the client's secret key")?)?)
    }

    pub fn relin_key(&self, params: &Arc<SchemeParams>) -> Result<Option<RelinKey>, CliError> {
        if !self.exists(RELIN_KEY) {
            return Ok(None);
        }
        Ok(Some(read_relin_key(params, &self.read(RELIN_KEY, "")?)?))
    }

    pub fn model(&self) -> Result<ModelGraph, CliError> {
        let text = self.read_text(MODEL, "run `hewflow compile --model ...` first")?;
        Ok(ModelGraph::from_json(&text)?)
    }

    pub fn manifest(&self, dir: &str, hint: &str) -> Result<Manifest, CliError> {
        let rel = format!("{dir}/{MANIFEST}");
        let text = self.read_text(&rel, hint)?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", self.path(&rel).display())))
    }

    pub fn ciphertexts(&self, params: &Arc<SchemeParams>, files: &[String]) -> Result<Vec<Ciphertext>, CliError> {
        files
            .iter()
            .map(|f| {
                let bytes = self.read(f, "ciphertext listed in manifest is missing")?;
                read_ciphertext(params, &bytes).map_err(|e| CliError::Context(format!("{f}"), e))
            })
            .collect()
    }
}

pub fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Relative path of a request's file inside `dir`.
pub fn blob_path(dir: &str, request: Option<usize>, prefix: &str, index: usize) -> String {
    match request {
        Some(r) => format!("{dir}/r{r:04}/{prefix}{index:03}.hect"),
        None => format!("{dir}/{prefix}{index:03}.hect"),
    }
}

pub fn display(p: &Path) -> String {
    p.display().to_string()
}
