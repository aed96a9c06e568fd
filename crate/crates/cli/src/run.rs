use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const LOCK_FILE: &str = ".pcdforge.lock";
pub const CONFIG_FILE: &str = "config.toml";
pub const METADATA_FILE: &str = "metadata.json";

/// Output directory of one command, held under an exclusive lock file.
///
/// Everything written through it is deterministic except the metadata
/// sidecar, which carries the timestamps.
pub struct RunDir {
    path: PathBuf,
    command: String,
    args: Vec<String>,
    started: f64,
    checkpoints: Vec<CheckpointRef>,
}

#[derive(Debug, Clone, Serialize)]
struct CheckpointRef {
    role: String,
    path: String,
    sha256: String,
}

#[derive(Serialize)]
struct Metadata<'a> {
    command: &'a str,
    args: &'a [String],
    version: &'a str,
    started_unix_s: f64,
    finished_unix_s: f64,
    checkpoints: &'a [CheckpointRef],
}

fn now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

impl RunDir {
    /// Creates `path`, takes the lock and echoes the effective config.
    pub fn open(path: &Path, command: &str, config: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(path).map_err(|e| CliError::io(path, e))?;
        let lock = path.join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&lock) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => {
                return Err(CliError::Io(format!(
                    "{} is locked by another run (remove {} if it is stale)",
                    path.display(),
                    lock.display()
                )));
            }
            Err(e) => return Err(CliError::io(&lock, e)),
        }
        let run = Self {
            path: path.to_path_buf(),
            command: command.to_string(),
            args: std::env::args().skip(1).collect(),
            started: now(),
            checkpoints: Vec::new(),
        };
        run.write(CONFIG_FILE, &config.to_toml())?;
        Ok(run)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.path.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> Result<PathBuf, CliError> {
        let p = self.join(name);
        fs::write(&p, contents).map_err(|e| CliError::io(&p, e))?;
        Ok(p)
    }

    /// Hashes a checkpoint this run read or wrote, for the metadata sidecar.
    pub fn record_checkpoint(&mut self, role: &str, path: &Path) -> Result<String, CliError> {
        let sha256 = sha256_file(path)?;
        self.checkpoints.retain(|c| c.role != role);
        self.checkpoints.push(CheckpointRef {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: sha256.clone(),
        });
        Ok(sha256)
    }

    /// Writes the metadata sidecar and releases the lock.
    pub fn finish(self) -> Result<(), CliError> {
        let meta = Metadata {
            command: &self.command,
            args: &self.args,
            version: env!("CARGO_PKG_VERSION"),
            started_unix_s: self.started,
            finished_unix_s: now(),
            checkpoints: &self.checkpoints,
        };
        let json = serde_json::to_string_pretty(&meta).expect("metadata serializes");
        self.write(METADATA_FILE, &(json + "\n"))?;
        Ok(())
    }
}

impl Drop for RunDir {
    fn drop(&mut self) {
        let _ = fs::remove_file(self.path.join(LOCK_FILE));
    }
}
