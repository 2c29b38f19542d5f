use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Done,
    Failed,
    /// Not attempted because an upstream cell failed.
    Skipped,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Done => "done",
            Status::Failed => "failed",
            Status::Skipped => "skipped",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "done" => Some(Status::Done),
            "failed" => Some(Status::Failed),
            "skipped" => Some(Status::Skipped),
            _ => None,
        }
    }
}

/// One unit of work: a stage applied to a sample, a model, or both.
#[derive(Clone, Debug, PartialEq)]
pub struct LedgerEntry {
    pub stage: String,
    pub key: String,
    pub status: Status,
    pub input_hash: String,
    pub output_hash: String,
    /// Relative paths of the files the cell wrote, `;`-separated on disk.
    pub outputs: Vec<String>,
    pub message: String,
    /// Whether the cell ran in the current invocation (not persisted).
    pub executed: bool,
}

pub const LEDGER_HEADER: &str = "stage\tkey\tstatus\tinput_hash\toutput_hash\toutputs\tmessage";

/// Status records keyed by `(stage, key)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunLedger {
    entries: BTreeMap<(String, String), LedgerEntry>,
}

fn clean(s: &str) -> String {
    s.replace(['\t', '\n', '\r'], " ")
}

impl RunLedger {
    pub fn get(&self, stage: &str, key: &str) -> Option<&LedgerEntry> {
        self.entries.get(&(stage.to_string(), key.to_string()))
    }

    pub fn record(&mut self, entry: LedgerEntry) {
        self.entries.insert((entry.stage.clone(), entry.key.clone()), entry);
    }

    pub fn entries(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.values()
    }

    pub fn stage(&self, stage: &str) -> impl Iterator<Item = &LedgerEntry> + '_ {
        let stage = stage.to_string();
        self.entries.values().filter(move |e| e.stage == stage)
    }

    pub fn executed(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.values().filter(|e| e.executed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &LedgerEntry> {
        self.entries.values().filter(|e| e.status == Status::Failed)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Forgets whether cells ran, keeping their records.
    pub fn clear_executed(&mut self) {
        for e in self.entries.values_mut() {
            e.executed = false;
        }
    }

    pub fn to_tsv(&self) -> String {
        let mut s = String::from(LEDGER_HEADER);
        s.push('\n');
        for e in self.entries.values() {
            writeln!(
                s,
                "{}\t{}\t{}\t{}\t{}\t{}\t{}",
                e.stage,
                e.key,
                e.status.as_str(),
                e.input_hash,
                e.output_hash,
                e.outputs.join(";"),
                clean(&e.message)
            )
            .unwrap();
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut ledger = RunLedger::default();
        let mut lines = text.lines();
        if lines.next() != Some(LEDGER_HEADER) {
            return Err(Error::parse(path, "missing ledger header"));
        }
        for (n, line) in lines.enumerate().filter(|(_, l)| !l.is_empty()) {
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 7 {
                return Err(Error::parse(path, format!("line {}: expected 7 fields", n + 2)));
            }
            let status = Status::parse(f[2]).ok_or_else(|| Error::parse(path, format!("line {}: bad status", n + 2)))?;
            ledger.record(LedgerEntry {
                stage: f[0].to_string(),
                key: f[1].to_string(),
                status,
                input_hash: f[3].to_string(),
                output_hash: f[4].to_string(),
                outputs: if f[5].is_empty() {
                    Vec::new()
                } else {
                    f[5].split(';').map(str::to_string).collect()
                },
                message: f[6].to_string(),
                executed: false,
            });
        }
        Ok(ledger)
    }

    pub fn load(path: &Path) -> Result<Self> {
        match std::fs::read_to_string(path) {
            Ok(text) => Self::parse(&text, path),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(RunLedger::default()),
            Err(e) => Err(Error::io(path, e)),
        }
    }
}
