//! File formats: network JSON, transaction JSON lines, schedule JSON.
//!
//! Writers emit compact JSON with a trailing newline; keys follow struct
//! declaration order (or id order for schedules) and floats use the shortest
//! representation that round-trips.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Network, Schedule, Transaction, TransactionSet};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

pub fn read_to_string(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| io_err(path, e))
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = Path::new(&tmp);
    {
        let mut f = fs::File::create(tmp).map_err(|e| io_err(tmp, e))?;
        f.write_all(bytes).map_err(|e| io_err(tmp, e))?;
        f.sync_all().map_err(|e| io_err(tmp, e))?;
    }
    fs::rename(tmp, path).map_err(|e| io_err(path, e))
}

pub fn to_json_line<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string(value)?;
    s.push('\n');
    Ok(s)
}

fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_str(&read_to_string(path)?)?)
}

pub fn network_to_string(net: &Network) -> Result<String> {
    to_json_line(net)
}

pub fn network_from_str(s: &str) -> Result<Network> {
    Ok(serde_json::from_str(s)?)
}

pub fn load_network(path: impl AsRef<Path>) -> Result<Network> {
    load_json(path.as_ref())
}

pub fn save_network(path: impl AsRef<Path>, net: &Network) -> Result<()> {
    write_atomic(path, network_to_string(net)?.as_bytes())
}

pub fn transactions_to_string(txns: &TransactionSet) -> Result<String> {
    let mut out = String::new();
    for t in txns {
        out.push_str(&to_json_line(t)?);
    }
    Ok(out)
}

pub fn transactions_from_str(s: &str) -> Result<TransactionSet> {
    let mut txns = Vec::new();
    for line in s.lines().filter(|l| !l.trim().is_empty()) {
        let t: Transaction = serde_json::from_str(line)?;
        txns.push(t);
    }
    TransactionSet::new(txns)
}

pub fn load_transactions(path: impl AsRef<Path>) -> Result<TransactionSet> {
    transactions_from_str(&read_to_string(path)?)
}

pub fn save_transactions(path: impl AsRef<Path>, txns: &TransactionSet) -> Result<()> {
    write_atomic(path, transactions_to_string(txns)?.as_bytes())
}

pub fn schedule_to_string(sched: &Schedule) -> Result<String> {
    to_json_line(sched)
}

pub fn schedule_from_str(s: &str) -> Result<Schedule> {
    Ok(serde_json::from_str(s)?)
}

pub fn load_schedule(path: impl AsRef<Path>) -> Result<Schedule> {
    load_json(path.as_ref())
}

pub fn save_schedule(path: impl AsRef<Path>, sched: &Schedule) -> Result<()> {
    write_atomic(path, schedule_to_string(sched)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_examples_parse_and_reprint() {
        let net = r#"{"mode":"consuming","nodes":[{"id":"A","capital":10.0},{"id":"B","capital":10.0}],"channels":[{"id":"e1","source":"A","target":"B","capacity":5.0}]}"#;
        let parsed = network_from_str(net).unwrap();
        assert_eq!(network_to_string(&parsed).unwrap(), format!("{net}\n"));

        let txn = r#"{"time":1,"source":"A","dest":"B","path":[{"channel":"e1","dir":"fwd"}],"value":3.0}"#;
        let parsed = transactions_from_str(txn).unwrap();
        assert_eq!(transactions_to_string(&parsed).unwrap(), format!("{txn}\n"));

        let sched = r#"{"e1":[{"time":2,"value":4.0}]}"#;
        let parsed = schedule_from_str(sched).unwrap();
        assert_eq!(schedule_to_string(&parsed).unwrap(), format!("{sched}\n"));
    }

    #[test]
    fn mode_defaults_to_consuming() {
        let net = network_from_str(r#"{"nodes":[],"channels":[]}"#).unwrap();
        assert_eq!(net.mode, crate::model::Mode::Consuming);
        let nc = network_from_str(r#"{"mode":"non-consuming","nodes":[],"channels":[]}"#).unwrap();
        assert_eq!(nc.mode, crate::model::Mode::NonConsuming);
    }

    #[test]
    fn atomic_write_creates_parent_dirs() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a/b/s.json");
        save_schedule(&path, &Schedule::new().with("e1", 1, 2.5)).unwrap();
        assert_eq!(load_schedule(&path).unwrap().len(), 1);
        assert!(!dir.path().join("a/b/s.json.tmp").exists());
    }
}
