//! Durable state: the append-only transaction log plus a small snapshot of
//! sessions. The log is the source of truth; everything else the service
//! knows is rebuilt from it on start-up.

use std::fs::{self, File, OpenOptions};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use apprentice_core::transactions::{read_log, write_record, LogError, TransactionRecord};
use serde::{Deserialize, Serialize};

use crate::platform::Session;

pub const LOG_FILE: &str = "transactions.jsonl";
pub const STATE_FILE: &str = "state.json";

/// What lives outside the log. `mastery` is a derived, human-readable copy;
/// it is rewritten on every save and never read back.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub sessions: Vec<Session>,
    #[serde(default)]
    pub mastery: serde_json::Value,
}

pub trait Storage: Send {
    /// Appends one record durably before returning.
    fn append(&mut self, record: &TransactionRecord) -> io::Result<()>;
    fn read_log(&self) -> io::Result<Vec<TransactionRecord>>;
    fn save(&mut self, snapshot: &Snapshot) -> io::Result<()>;
    fn load(&self) -> io::Result<Snapshot>;
}

fn log_error(e: LogError) -> io::Error {
    match e {
        LogError::Io(e) => e,
        other => io::Error::new(io::ErrorKind::InvalidData, other.to_string()),
    }
}

/// `transactions.jsonl` and `state.json` in one directory.
#[derive(Debug)]
pub struct DirStorage {
    dir: PathBuf,
    log: File,
}

impl DirStorage {
    pub fn open(dir: &Path) -> io::Result<Self> {
        fs::create_dir_all(dir)?;
        let log = OpenOptions::new().create(true).append(true).open(dir.join(LOG_FILE))?;
        Ok(DirStorage {
            dir: dir.to_path_buf(),
            log,
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}

impl Storage for DirStorage {
    fn append(&mut self, record: &TransactionRecord) -> io::Result<()> {
        let mut line = Vec::new();
        write_record(&mut line, record)?;
        self.log.write_all(&line)?;
        self.log.sync_data()
    }

    fn read_log(&self) -> io::Result<Vec<TransactionRecord>> {
        let f = File::open(self.dir.join(LOG_FILE))?;
        read_log(BufReader::new(f)).map_err(log_error)
    }

    /// Write-then-rename, so a crash leaves the old or the new snapshot.
    fn save(&mut self, snapshot: &Snapshot) -> io::Result<()> {
        let tmp = self.dir.join(format!("{STATE_FILE}.tmp"));
        let mut f = File::create(&tmp)?;
        serde_json::to_writer_pretty(&mut f, snapshot)?;
        f.write_all(b"\n")?;
        f.sync_data()?;
        fs::rename(tmp, self.dir.join(STATE_FILE))
    }

    fn load(&self) -> io::Result<Snapshot> {
        match fs::read_to_string(self.dir.join(STATE_FILE)) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(Snapshot::default()),
            Err(e) => Err(e),
        }
    }
}

/// Volatile storage for simulation and tests.
#[derive(Debug, Default, Clone)]
pub struct MemoryStorage {
    pub records: Vec<TransactionRecord>,
    pub snapshot: Snapshot,
}

impl Storage for MemoryStorage {
    fn append(&mut self, record: &TransactionRecord) -> io::Result<()> {
        self.records.push(record.clone());
        Ok(())
    }

    fn read_log(&self) -> io::Result<Vec<TransactionRecord>> {
        Ok(self.records.clone())
    }

    fn save(&mut self, snapshot: &Snapshot) -> io::Result<()> {
        self.snapshot = snapshot.clone();
        Ok(())
    }

    fn load(&self) -> io::Result<Snapshot> {
        Ok(self.snapshot.clone())
    }
}

/// Switches that make a wrapped storage fail on demand.
#[derive(Debug, Default, Clone)]
pub struct Faults {
    pub fail_append: Arc<AtomicBool>,
    pub fail_save: Arc<AtomicBool>,
}

impl Faults {
    pub fn set_append(&self, fail: bool) {
        self.fail_append.store(fail, Ordering::SeqCst);
    }

    pub fn set_save(&self, fail: bool) {
        self.fail_save.store(fail, Ordering::SeqCst);
    }
}

/// Fault-injection wrapper around another storage.
#[derive(Debug)]
pub struct FaultyStorage<S> {
    pub inner: S,
    pub faults: Faults,
}

fn injected() -> io::Error {
    io::Error::other("injected storage fault")
}

impl<S: Storage> Storage for FaultyStorage<S> {
    fn append(&mut self, record: &TransactionRecord) -> io::Result<()> {
        if self.faults.fail_append.load(Ordering::SeqCst) {
            return Err(injected());
        }
        self.inner.append(record)
    }

    fn read_log(&self) -> io::Result<Vec<TransactionRecord>> {
        self.inner.read_log()
    }

    fn save(&mut self, snapshot: &Snapshot) -> io::Result<()> {
        if self.faults.fail_save.load(Ordering::SeqCst) {
            return Err(injected());
        }
        self.inner.save(snapshot)
    }

    fn load(&self) -> io::Result<Snapshot> {
        self.inner.load()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use apprentice_core::transactions::{Action, Outcome};
    use chrono::{TimeZone, Utc};

    #[test]
    fn dir_storage_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let r = TransactionRecord::new(Utc.timestamp_opt(5, 0).unwrap(), "s", "x", Action::Access, Outcome::NotApplicable);
        {
            let mut s = DirStorage::open(dir.path()).unwrap();
            assert_eq!(s.load().unwrap(), Snapshot::default());
            s.append(&r).unwrap();
            s.append(&r).unwrap();
            s.save(&Snapshot::default()).unwrap();
        }
        let s = DirStorage::open(dir.path()).unwrap();
        assert_eq!(s.read_log().unwrap(), [r.clone(), r]);
        assert_eq!(s.load().unwrap(), Snapshot::default());
        assert!(!dir.path().join("state.json.tmp").exists());
    }
}
