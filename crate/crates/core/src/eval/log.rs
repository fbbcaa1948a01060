//! JSONL episode logs, replay verification and the run manifest.

use std::fs;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::runner::EpisodeRecord;
use crate::env::{Env, EnvError};

#[derive(Debug, Error)]
pub enum LogError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}:{line}: {source}")]
    Json {
        path: PathBuf,
        line: usize,
        source: serde_json::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> LogError + '_ {
    move |source| LogError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One record per line, in the order given.
pub fn to_jsonl(records: &[EpisodeRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn write_jsonl(path: &Path, records: &[EpisodeRecord]) -> Result<(), LogError> {
    let file = fs::File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    w.write_all(to_jsonl(records).as_bytes()).map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

pub fn read_jsonl(path: &Path) -> Result<Vec<EpisodeRecord>, LogError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|source| LogError::Json {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?);
    }
    Ok(out)
}

/// First divergence between a record and its re-execution.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("step {timestep}: {field} logged as {logged}, replay gives {replayed}")]
pub struct ReplayMismatch {
    /// 0 when the divergence is in the episode outcome, not a step.
    pub timestep: u32,
    pub field: String,
    pub logged: String,
    pub replayed: String,
}

fn mismatch(timestep: u32, field: &str, logged: impl ToString, replayed: impl ToString) -> ReplayMismatch {
    ReplayMismatch {
        timestep,
        field: field.to_string(),
        logged: logged.to_string(),
        replayed: replayed.to_string(),
    }
}

/// Re-executes the logged actions in a fresh environment with the logged
/// seed and checks rewards, termination and score.
pub fn replay(record: &EpisodeRecord) -> Result<(), ReplayMismatch> {
    let env_err = |t: u32, e: EnvError| mismatch(t, "environment", "a legal step", e);
    let mut env = Env::reset_named(&record.environment, record.seed).map_err(|e| env_err(0, e))?;
    for step in &record.steps {
        if env.timestep() != step.timestep {
            return Err(mismatch(step.timestep, "timestep", step.timestep, env.timestep()));
        }
        let outcome = env.step(step.action).map_err(|e| env_err(step.timestep, e))?;
        if outcome.reward.to_bits() != step.reward.to_bits() {
            return Err(mismatch(step.timestep, "reward", step.reward, outcome.reward));
        }
    }
    let cause = env.termination();
    if cause != record.termination_cause {
        return Err(mismatch(0, "termination_cause", format!("{:?}", record.termination_cause), format!("{cause:?}")));
    }
    if record.incident.is_none() {
        let score = env.normalized_score().map_err(|e| env_err(0, e))?;
        if record.normalized_score.map(f64::to_bits) != Some(score.to_bits()) {
            let logged = record
                .normalized_score
                .map_or("none".to_string(), |s| s.to_string());
            return Err(mismatch(0, "normalized_score", logged, score));
        }
    } else if record.normalized_score.is_some() {
        return Err(mismatch(0, "normalized_score", "a score on an incident", "none"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the output directory, with `/` separators.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub episodes: u32,
    pub runs: u32,
    pub run_seed: u64,
    pub config: serde_json::Value,
    pub files: Vec<ManifestEntry>,
}

pub fn sha256_file(path: &Path) -> Result<(String, u64), LogError> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    Ok((hex::encode(Sha256::digest(&bytes)), bytes.len() as u64))
}

impl Manifest {
    pub fn new(episodes: u32, runs: u32, run_seed: u64, config: serde_json::Value) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            episodes,
            runs,
            run_seed,
            config,
            files: Vec::new(),
        }
    }

    /// Hashes `root/relative` and lists it.
    pub fn add_file(&mut self, root: &Path, relative: &str) -> Result<(), LogError> {
        let (sha256, bytes) = sha256_file(&root.join(relative))?;
        self.files.push(ManifestEntry {
            path: relative.to_string(),
            sha256,
            bytes,
        });
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(())
    }

    /// Files whose current hash differs from the listed one.
    pub fn verify(&self, root: &Path) -> Result<Vec<String>, LogError> {
        let mut stale = Vec::new();
        for f in &self.files {
            if sha256_file(&root.join(&f.path))?.0 != f.sha256 {
                stale.push(f.path.clone());
            }
        }
        Ok(stale)
    }

    pub fn write(&self, path: &Path) -> Result<(), LogError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes") + "\n";
        fs::write(path, text).map_err(io_err(path))
    }

    pub fn read(path: &Path) -> Result<Self, LogError> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        serde_json::from_str(&text).map_err(|source| LogError::Json {
            path: path.to_path_buf(),
            line: 1,
            source,
        })
    }
}
