use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use idla_core::fluctstats::{ErrorRecord, CSV_HEADER};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;

#[derive(Serialize)]
struct Artifact {
    path: String,
    sha256: String,
}

/// Collects artifacts of one command and writes `manifest.json`.
pub struct Run {
    pub dir: PathBuf,
    command: String,
    args: Vec<String>,
    started: Instant,
    artifacts: Vec<Artifact>,
}

impl Run {
    pub fn start(cfg: &RunConfig, command: &str) -> Result<Self> {
        fs::create_dir_all(&cfg.output_dir).with_context(|| format!("creating {}", cfg.output_dir.display()))?;
        Ok(Run {
            dir: cfg.output_dir.clone(),
            command: command.into(),
            args: std::env::args().collect(),
            started: Instant::now(),
            artifacts: Vec::new(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.record(name)?;
        Ok(path)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<PathBuf> {
        let mut text = serde_json::to_vec_pretty(value)?;
        text.push(b'\n');
        self.write(name, &text)
    }

    /// Registers an existing file under the output directory.
    pub fn record(&mut self, name: &str) -> Result<()> {
        let bytes = fs::read(self.path(name))?;
        self.artifacts.retain(|a| a.path != name);
        self.artifacts.push(Artifact { path: name.into(), sha256: sha256_hex(&bytes) });
        Ok(())
    }

    pub fn finish(self, cfg: &RunConfig, extra: serde_json::Value) -> Result<()> {
        #[derive(Serialize)]
        struct Manifest<'a> {
            tool: &'a str,
            version: &'a str,
            command: &'a str,
            args: &'a [String],
            config: &'a RunConfig,
            wall_time_seconds: f64,
            details: serde_json::Value,
            artifacts: &'a [Artifact],
        }
        let m = Manifest {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            command: &self.command,
            args: &self.args,
            config: cfg,
            wall_time_seconds: self.started.elapsed().as_secs_f64(),
            details: extra,
            artifacts: &self.artifacts,
        };
        let mut text = serde_json::to_vec_pretty(&m)?;
        text.push(b'\n');
        fs::write(self.path("manifest.json"), text)?;
        Ok(())
    }
}

/// Opens for appending, first closing any unterminated last line.
fn open_terminated(path: &Path) -> Result<File> {
    let torn = fs::read(path).map(|b| b.last().is_some_and(|&c| c != b'\n')).unwrap_or(false);
    let mut f = OpenOptions::new().create(true).append(true).open(path)?;
    if torn {
        writeln!(f)?;
    }
    Ok(f)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Append-only record store: `records.csv` plus `records.jsonl`.
pub struct RecordStore {
    csv: File,
    jsonl: File,
}

impl RecordStore {
    pub const CSV: &'static str = "records.csv";
    pub const JSONL: &'static str = "records.jsonl";

    pub fn open(dir: &Path) -> Result<Self> {
        let csv_path = dir.join(Self::CSV);
        let fresh = !csv_path.exists() || fs::metadata(&csv_path)?.len() == 0;
        let mut csv = open_terminated(&csv_path)?;
        if fresh {
            writeln!(csv, "{CSV_HEADER}")?;
        }
        let jsonl = open_terminated(&dir.join(Self::JSONL))?;
        Ok(RecordStore { csv, jsonl })
    }

    pub fn append(&mut self, r: &ErrorRecord) -> Result<()> {
        writeln!(self.csv, "{}", r.csv_row())?;
        r.write_jsonl(&mut self.jsonl)?;
        Ok(())
    }

    /// Records already present in the directory; a torn last line is ignored.
    pub fn load(dir: &Path) -> Result<Vec<ErrorRecord>> {
        let path = dir.join(Self::CSV);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let mut out = Vec::new();
        for line in BufReader::new(File::open(&path)?).lines().skip(1) {
            let line = line?;
            if let Ok(r) = ErrorRecord::parse_csv_row(&line) {
                out.push(r);
            }
        }
        Ok(out)
    }
}
