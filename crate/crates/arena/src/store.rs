//! Append-only log of finished games, one JSON object per line.

use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Mutex, RwLock};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use gongzhu_core::engine::{parse_game, serialize_game, GameError};
use gongzhu_core::GameState;

pub const RECORDS_FILE: &str = "records.jsonl";

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("record {id} does not replay: {source}")]
    Replay { id: u64, source: GameError },
    #[error("record {id} stores scores {stored:?} but replays to {actual:?}")]
    Mismatch { id: u64, stored: [i32; 4], actual: [i32; 4] },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub id: u64,
    pub players: [String; 4],
    /// Engine one-line record.
    pub record: String,
    pub scores: [i32; 4],
    pub team_differential: i32,
    #[serde(default)]
    pub deal_seed: Option<u64>,
    pub started_ms: u64,
    pub finished_ms: u64,
}

impl MatchRecord {
    /// Record of a finished game. The id is assigned by the store.
    pub fn from_game(players: [String; 4], state: &GameState, deal_seed: Option<u64>, started_ms: u64) -> MatchRecord {
        let score = state.score().expect("finished game");
        MatchRecord {
            id: 0,
            players,
            record: serialize_game(state),
            scores: score.per_player,
            team_differential: score.differential(),
            deal_seed,
            started_ms,
            finished_ms: now_ms(),
        }
    }

    pub fn replay(&self) -> Result<GameState, StoreError> {
        parse_game(&self.record).map_err(|source| StoreError::Replay { id: self.id, source })
    }

    /// Re-score the stored plays and compare with the stored scores.
    pub fn verify(&self) -> Result<(), StoreError> {
        let state = self.replay()?;
        let actual = state
            .score()
            .map_err(|source| StoreError::Replay { id: self.id, source })?;
        if actual.per_player != self.scores || actual.differential() != self.team_differential {
            return Err(StoreError::Mismatch {
                id: self.id,
                stored: self.scores,
                actual: actual.per_player,
            });
        }
        Ok(())
    }
}

pub fn now_ms() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis() as u64)
        .unwrap_or(0)
}

/// Records on disk plus an in-memory index rebuilt on open.
pub struct Store {
    path: PathBuf,
    records: RwLock<Vec<MatchRecord>>,
    file: Mutex<File>,
}

impl Store {
    pub fn open(dir: impl AsRef<Path>) -> Result<Store, StoreError> {
        fs::create_dir_all(dir.as_ref())?;
        let path = dir.as_ref().join(RECORDS_FILE);
        let mut records = Vec::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                let rec: MatchRecord = serde_json::from_str(&line).map_err(|e| StoreError::Corrupt {
                    path: path.clone(),
                    line: i + 1,
                    message: e.to_string(),
                })?;
                records.push(rec);
            }
        }
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Store {
            path,
            records: RwLock::new(records),
            file: Mutex::new(file),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Assign the next id, write the record and index it.
    pub fn append(&self, mut record: MatchRecord) -> Result<MatchRecord, StoreError> {
        let mut file = self.file.lock().unwrap();
        let mut records = self.records.write().unwrap();
        record.id = records.last().map_or(1, |r| r.id + 1);
        let mut line = serde_json::to_string(&record).expect("records serialize");
        line.push('\n');
        file.write_all(line.as_bytes())?;
        file.flush()?;
        records.push(record.clone());
        Ok(record)
    }

    /// Snapshot of all records.
    pub fn all(&self) -> Vec<MatchRecord> {
        self.records.read().unwrap().clone()
    }

    pub fn get(&self, id: u64) -> Option<MatchRecord> {
        self.records.read().unwrap().iter().find(|r| r.id == id).cloned()
    }

    pub fn len(&self) -> usize {
        self.records.read().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn finished(seed: u64) -> GameState {
        let mut s = GameState::deal(seed);
        while !s.is_terminal() {
            let m = s.legal_moves().unwrap().highest().unwrap();
            s.play_mut(m).unwrap();
        }
        s
    }

    fn players() -> [String; 4] {
        ["a", "b", "a", "b"].map(String::from)
    }

    #[test]
    fn append_reopen_verify() {
        let dir = tempfile::tempdir().unwrap();
        {
            let store = Store::open(dir.path()).unwrap();
            for seed in 0..3 {
                let r = store
                    .append(MatchRecord::from_game(players(), &finished(seed), Some(seed), 0))
                    .unwrap();
                assert_eq!(r.id, seed + 1);
            }
        }
        let store = Store::open(dir.path()).unwrap();
        assert_eq!(store.len(), 3);
        for r in store.all() {
            r.verify().unwrap();
        }
        assert_eq!(store.get(2).unwrap().deal_seed, Some(1));
    }

    #[test]
    fn tampered_score_detected() {
        let mut r = MatchRecord::from_game(players(), &finished(4), None, 0);
        r.scores[0] += 1;
        assert!(matches!(r.verify(), Err(StoreError::Mismatch { .. })));
    }

    #[test]
    fn corrupt_line_reported() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join(RECORDS_FILE), "{not json}\n").unwrap();
        assert!(matches!(Store::open(dir.path()), Err(StoreError::Corrupt { line: 1, .. })));
    }
}
