//! Output directory handling, run manifests and the error shape reported on
//! failure.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

use crate::cli::Common;

pub const MANIFEST_FILE: &str = "run-manifest.json";

/// A fatal error as printed on stderr: `{"error": {"kind", "message"}}`.
#[derive(Debug)]
pub struct Failure {
    pub kind: &'static str,
    pub message: String,
}

pub type Outcome<T> = Result<T, Failure>;

impl Failure {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            kind: "invalid_input",
            message: message.into(),
        }
    }

    pub fn io(path: &Path, err: impl Display) -> Self {
        Self {
            kind: "io",
            message: format!("{}: {err}", path.display()),
        }
    }

    /// Prefixes the message with where it happened.
    pub fn context(mut self, what: impl Display) -> Self {
        self.message = format!("{what}: {}", self.message);
        self
    }

    pub fn to_json(&self) -> Value {
        json!({ "error": { "kind": self.kind, "message": self.message } })
    }
}

impl From<dceeval_core::Error> for Failure {
    fn from(e: dceeval_core::Error) -> Self {
        Self {
            kind: e.kind(),
            message: e.to_string(),
        }
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Self {
            kind: "csv",
            message: e.to_string(),
        }
    }
}

/// Pretty JSON with sorted keys (serde_json maps are ordered) and a final newline.
pub fn json_bytes(value: &Value) -> Vec<u8> {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    text.into_bytes()
}

fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Digest of a file, or of a directory's regular files (non-recursive) as
/// `name NUL sha256 LF` lines in name order. Returns the digest and the file count.
pub fn digest_path(path: &Path) -> Outcome<(String, usize)> {
    if path.is_file() {
        let bytes = fs::read(path).map_err(|e| Failure::io(path, e))?;
        return Ok((sha256_hex(&bytes), 1));
    }
    let mut files = Vec::new();
    for entry in fs::read_dir(path).map_err(|e| Failure::io(path, e))? {
        let p = entry.map_err(|e| Failure::io(path, e))?.path();
        if p.is_file() {
            files.push(p);
        }
    }
    files.sort();
    let mut hasher = Sha256::new();
    for f in &files {
        let bytes = fs::read(f).map_err(|e| Failure::io(f, e))?;
        hasher.update(f.file_name().unwrap_or_default().as_encoded_bytes());
        hasher.update([0]);
        hasher.update(sha256_hex(&bytes));
        hasher.update(b"\n");
    }
    Ok((format!("{:x}", hasher.finalize()), files.len()))
}

/// One invocation: where reports go, what was configured, what was read.
pub struct Run {
    command: &'static str,
    out: PathBuf,
    workers: usize,
    config: Map<String, Value>,
    inputs: Map<String, Value>,
}

impl Run {
    pub fn new(command: &'static str, common: &Common) -> Self {
        let workers = match common.workers {
            Some(w) => w as usize,
            None => std::thread::available_parallelism().map_or(1, usize::from),
        };
        Self {
            command,
            out: common.out.clone(),
            workers,
            config: Map::new(),
            inputs: Map::new(),
        }
    }

    pub fn config(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).expect("config values always serialize");
        self.config.insert(key.into(), v);
    }

    /// Checks that an input exists and records its digest.
    pub fn input(&mut self, flag: &str, path: &Path) -> Outcome<()> {
        if !path.exists() {
            return Err(Failure::invalid(format!("--{flag}: {} does not exist", path.display())));
        }
        let (sha256, files) = digest_path(path)?;
        self.inputs.insert(
            flag.into(),
            json!({ "path": path.display().to_string(), "sha256": sha256, "files": files }),
        );
        Ok(())
    }

    pub fn pool(&self) -> Outcome<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Failure::invalid(format!("cannot start {} workers: {e}", self.workers)))
    }

    /// Path of an output file, creating the directory containing it.
    pub fn target(&self, name: &str) -> Outcome<PathBuf> {
        let path = self.out.join(name);
        let dir = path.parent().unwrap_or(&self.out);
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
        Ok(path)
    }

    pub fn out_dir(&self) -> Outcome<&Path> {
        fs::create_dir_all(&self.out).map_err(|e| Failure::io(&self.out, e))?;
        Ok(&self.out)
    }

    pub fn write(&self, name: &str, bytes: &[u8]) -> Outcome<()> {
        let path = self.target(name)?;
        fs::write(&path, bytes).map_err(|e| Failure::io(&path, e))
    }

    pub fn write_json(&self, name: &str, value: &Value) -> Outcome<()> {
        self.write(name, &json_bytes(value))
    }

    pub fn finish(mut self) -> Outcome<()> {
        let workers = self.workers;
        self.config("workers", workers);
        let manifest = json!({
            "command": self.command,
            "config": self.config,
            "inputs": self.inputs,
            "toolkit": { "name": env!("CARGO_PKG_NAME"), "version": env!("CARGO_PKG_VERSION") },
        });
        self.write_json(MANIFEST_FILE, &manifest)
    }
}

/// A file that could not be matched, as listed in `unpaired.csv`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Unpaired {
    pub side: &'static str,
    pub file: String,
    pub reason: String,
}

pub const UNPAIRED_FILE: &str = "unpaired.csv";

pub fn unpaired_csv(rows: &mut [Unpaired]) -> Outcome<Vec<u8>> {
    rows.sort();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["side", "file", "reason"])?;
    for r in rows.iter() {
        w.write_record([r.side, r.file.as_str(), r.reason.as_str()])?;
    }
    w.into_inner().map_err(|e| Failure::invalid(e.to_string()))
}

pub fn file_label(path: &Path) -> String {
    path.file_name().map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}
