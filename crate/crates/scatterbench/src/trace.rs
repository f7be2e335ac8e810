//! Append-only provenance ledger.
//!
//! Every run writes a JSON-lines ledger of structured step records:
//! what was attempted, what was found, which artifact files back the
//! current state, what limitations remain and what comes next. Each
//! record is tagged with one of four actor roles and one of three
//! research phases (12 valid combinations); step ids increase strictly
//! within a run and every evidence path must exist at write time.
//!
//! Timestamps are logical clock ticks, not wall time: runs with the
//! same configuration and seed must produce byte-identical ledgers.

use serde::{Deserialize, Serialize};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActorRole {
    LeadInvestigator,
    MethodBuilder,
    Experimentalist,
    CriticalReviewer,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TracePhase {
    Explore,
    Execute,
    Express,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceRecord {
    pub step_id: u64,
    pub actor_role: ActorRole,
    pub phase: TracePhase,
    pub attempted: String,
    pub found: String,
    /// Artifact paths relative to the run directory.
    pub evidence: Vec<String>,
    pub limitations: String,
    pub next_handoff: String,
    /// Logical clock tick (monotone within a run).
    pub timestamp: u64,
}

/// Strict schema validation of one ledger line.
pub fn parse_record(line: &str) -> Result<TraceRecord> {
    serde_json::from_str(line).map_err(|e| Error::Trace(format!("invalid record: {e}")))
}

fn validate_against_previous(record: &TraceRecord, last_step: Option<u64>) -> Result<()> {
    if let Some(last) = last_step {
        if record.step_id <= last {
            return Err(Error::Trace(format!(
                "step_id must increase: {} after {last}",
                record.step_id
            )));
        }
    }
    Ok(())
}

fn validate_evidence(record: &TraceRecord, root: &Path) -> Result<()> {
    for path in &record.evidence {
        if !root.join(path).exists() {
            return Err(Error::Trace(format!(
                "evidence path does not exist: {path}"
            )));
        }
    }
    Ok(())
}

/// Append-only JSON-lines ledger bound to a run directory.
#[derive(Debug)]
pub struct TraceLedger {
    path: PathBuf,
    root: PathBuf,
    last_step: Option<u64>,
}

impl TraceLedger {
    pub const FILE_NAME: &'static str = "trace.jsonl";

    /// Start a fresh ledger in `run_dir`.
    pub fn create(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(Self::FILE_NAME);
        File::create(&path)?;
        Ok(TraceLedger {
            path,
            root: run_dir.to_owned(),
            last_step: None,
        })
    }

    /// Reopen an existing ledger for appending (revalidates the tail).
    pub fn open(run_dir: &Path) -> Result<Self> {
        let path = run_dir.join(Self::FILE_NAME);
        let records = load_ledger(&path, run_dir)?;
        Ok(TraceLedger {
            path,
            root: run_dir.to_owned(),
            last_step: records.last().map(|r| r.step_id),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn append(&mut self, record: &TraceRecord) -> Result<()> {
        validate_against_previous(record, self.last_step)?;
        validate_evidence(record, &self.root)?;
        let line = serde_json::to_string(record)?;
        let mut file = OpenOptions::new().append(true).open(&self.path)?;
        writeln!(file, "{line}")?;
        self.last_step = Some(record.step_id);
        Ok(())
    }
}

/// Load and fully validate a ledger file: schema, strict step ordering
/// and evidence existence (relative to `root`).
pub fn load_ledger(path: &Path, root: &Path) -> Result<Vec<TraceRecord>> {
    let file = File::open(path)
        .map_err(|e| Error::Trace(format!("cannot open ledger {}: {e}", path.display())))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut last_step = None;
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = parse_record(&line)
            .map_err(|e| Error::Trace(format!("line {}: {e}", idx + 1)))?;
        validate_against_previous(&record, last_step)
            .map_err(|e| Error::Trace(format!("line {}: {e}", idx + 1)))?;
        validate_evidence(&record, root)
            .map_err(|e| Error::Trace(format!("line {}: {e}", idx + 1)))?;
        last_step = Some(record.step_id);
        records.push(record);
    }
    Ok(records)
}
