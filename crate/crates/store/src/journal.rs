//! One append-only JSON-lines journal per collection. Every line is the full
//! current state of one record; on load the last line for a key wins. A line
//! `{"$deleted": key}` removes the key.

use std::collections::HashMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use parking_lot::RwLock;

use crate::{Record, StoreError};

#[derive(serde::Deserialize)]
#[serde(untagged)]
enum Line<T> {
    Tombstone {
        #[serde(rename = "$deleted")]
        deleted: String,
    },
    Record(T),
}

struct Entry<T> {
    /// Position of the record's first insertion; stable tie-breaker.
    seq: u64,
    record: T,
}

struct State<T> {
    records: HashMap<String, Entry<T>>,
    next_seq: u64,
    writer: BufWriter<File>,
}

pub(crate) struct Collection<T> {
    path: PathBuf,
    sync: bool,
    state: RwLock<State<T>>,
}

/// Reads a JSON-lines file, tolerating one torn trailing line (a write cut
/// short by a crash). Returns the parsed items and the byte length of the
/// intact prefix.
pub(crate) fn read_lines<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(Vec<T>, u64), StoreError> {
    let file = match File::open(path) {
        Ok(file) => file,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok((Vec::new(), 0)),
        Err(e) => return Err(StoreError::io(path, e)),
    };
    let mut reader = BufReader::new(file);
    let mut items = Vec::new();
    let mut good_len = 0u64;
    let mut line = String::new();
    let mut line_no = 0usize;
    loop {
        line.clear();
        let read = reader.read_line(&mut line).map_err(|e| StoreError::io(path, e))?;
        if read == 0 {
            break;
        }
        line_no += 1;
        let complete = line.ends_with('\n');
        if line.trim().is_empty() {
            good_len += read as u64;
            continue;
        }
        match (serde_json::from_str(line.trim_end()), complete) {
            (Ok(item), true) => {
                items.push(item);
                good_len += read as u64;
            }
            (_, false) => {
                tracing::warn!(path = %path.display(), line = line_no, "dropping torn trailing journal line");
                break;
            }
            (Err(e), true) => {
                return Err(StoreError::Corrupt {
                    path: path.to_owned(),
                    line: line_no,
                    message: e.to_string(),
                })
            }
        }
    }
    Ok((items, good_len))
}

/// Opens `path` for appending after truncating anything past `good_len`.
pub(crate) fn open_append(path: &Path, good_len: u64) -> Result<BufWriter<File>, StoreError> {
    let mut file = OpenOptions::new()
        .create(true)
        .read(true)
        .write(true)
        .truncate(false)
        .open(path)
        .map_err(|e| StoreError::io(path, e))?;
    let len = file.metadata().map_err(|e| StoreError::io(path, e))?.len();
    if len > good_len {
        file.set_len(good_len).map_err(|e| StoreError::io(path, e))?;
    }
    file.seek(SeekFrom::End(0)).map_err(|e| StoreError::io(path, e))?;
    Ok(BufWriter::new(file))
}

pub(crate) fn write_line<W: Write, T: serde::Serialize>(
    writer: &mut BufWriter<W>,
    item: &T,
    path: &Path,
) -> Result<(), StoreError> {
    let mut line = serde_json::to_vec(item).map_err(|e| StoreError::Encode(e.to_string()))?;
    line.push(b'\n');
    writer.write_all(&line).map_err(|e| StoreError::io(path, e))?;
    writer.flush().map_err(|e| StoreError::io(path, e))
}

pub(crate) fn sync(writer: &BufWriter<File>, path: &Path) -> Result<(), StoreError> {
    writer.get_ref().sync_data().map_err(|e| StoreError::io(path, e))
}

impl<T: Record> Collection<T> {
    pub(crate) fn open(dir: &Path, sync: bool) -> Result<Self, StoreError> {
        let path = dir.join(format!("{}.jsonl", T::COLLECTION));
        let (lines, good_len) = read_lines::<Line<T>>(&path)?;
        let mut records = HashMap::with_capacity(lines.len());
        let mut next_seq = 0;
        for line in lines {
            let record = match line {
                Line::Record(record) => record,
                Line::Tombstone { deleted } => {
                    records.remove(&deleted);
                    continue;
                }
            };
            let key = record.key().to_owned();
            match records.get_mut(&key) {
                Some(Entry { record: existing, .. }) => *existing = record,
                None => {
                    records.insert(key, Entry { seq: next_seq, record });
                    next_seq += 1;
                }
            }
        }
        let writer = open_append(&path, good_len)?;
        Ok(Self {
            path,
            sync,
            state: RwLock::new(State {
                records,
                next_seq,
                writer,
            }),
        })
    }

    pub(crate) fn get(&self, key: &str) -> Option<T> {
        self.state.read().records.get(key).map(|e| e.record.clone())
    }

    pub(crate) fn len(&self) -> usize {
        self.state.read().records.len()
    }

    /// Records matching `filter`, ordered by creation time then insertion.
    pub(crate) fn list<F: Fn(&T) -> bool>(&self, filter: F) -> Vec<T> {
        let state = self.state.read();
        let mut hits: Vec<(&Entry<T>, Option<_>)> = state
            .records
            .values()
            .filter(|e| filter(&e.record))
            .map(|e| (e, e.record.created_at()))
            .collect();
        hits.sort_by_key(|(e, created)| (*created, e.seq));
        hits.into_iter().map(|(e, _)| e.record.clone()).collect()
    }

    /// Upserts `record` after `check` approves it against the current
    /// contents. The check runs under the collection's write lock, so
    /// check-and-write is atomic with respect to other writers.
    pub(crate) fn put_checked<F>(&self, record: T, check: F) -> Result<(), StoreError>
    where
        F: FnOnce(Option<&T>, &mut dyn Iterator<Item = &T>) -> Result<(), StoreError>,
    {
        let mut state = self.state.write();
        let key = record.key().to_owned();
        {
            let existing = state.records.get(&key).map(|e| &e.record);
            let mut all = state.records.values().map(|e| &e.record);
            check(existing, &mut all)?;
        }
        self.append(&mut state, &record)?;
        let seq = state.next_seq;
        match state.records.get_mut(&key) {
            Some(entry) => entry.record = record,
            None => {
                state.records.insert(key, Entry { seq, record });
                state.next_seq += 1;
            }
        }
        Ok(())
    }

    pub(crate) fn put(&self, record: T) -> Result<(), StoreError> {
        self.put_checked(record, |_, _| Ok(()))
    }

    /// Applies `update` to the record under `key` only if `expect` holds for
    /// its current state.
    pub(crate) fn compare_and_update<P, U>(&self, key: &str, expect: P, update: U) -> Result<T, StoreError>
    where
        P: FnOnce(&T) -> Result<(), StoreError>,
        U: FnOnce(&mut T),
    {
        let mut state = self.state.write();
        let mut record = state
            .records
            .get(key)
            .map(|e| e.record.clone())
            .ok_or_else(|| StoreError::NotFound {
                collection: T::COLLECTION,
                id: key.to_owned(),
            })?;
        expect(&record)?;
        update(&mut record);
        self.append(&mut state, &record)?;
        state.records.get_mut(key).expect("checked above").record = record.clone();
        Ok(record)
    }

    /// Removes `key` if `expect` approves the current record.
    pub(crate) fn remove<P>(&self, key: &str, expect: P) -> Result<T, StoreError>
    where
        P: FnOnce(&T) -> Result<(), StoreError>,
    {
        let mut state = self.state.write();
        let entry = state.records.get(key).ok_or_else(|| StoreError::NotFound {
            collection: T::COLLECTION,
            id: key.to_owned(),
        })?;
        expect(&entry.record)?;
        write_line(&mut state.writer, &serde_json::json!({ "$deleted": key }), &self.path)?;
        if self.sync {
            sync(&state.writer, &self.path)?;
        }
        Ok(state.records.remove(key).expect("checked above").record)
    }

    fn append<R: serde::Serialize>(&self, state: &mut State<T>, record: &R) -> Result<(), StoreError> {
        write_line(&mut state.writer, record, &self.path)?;
        if self.sync {
            sync(&state.writer, &self.path)?;
        }
        Ok(())
    }

    /// Records in first-insertion order, for export and compaction.
    pub(crate) fn snapshot_in_insertion_order(&self) -> Vec<T> {
        let state = self.state.read();
        let mut entries: Vec<&Entry<T>> = state.records.values().collect();
        entries.sort_by_key(|e| e.seq);
        entries.into_iter().map(|e| e.record.clone()).collect()
    }

    /// Rewrites the journal with one line per live record.
    pub(crate) fn compact(&self) -> Result<usize, StoreError> {
        let mut state = self.state.write();
        let mut entries: Vec<&Entry<T>> = state.records.values().collect();
        entries.sort_by_key(|e| e.seq);
        let tmp = self.path.with_extension("jsonl.compact");
        {
            let file = File::create(&tmp).map_err(|e| StoreError::io(&tmp, e))?;
            let mut writer = BufWriter::new(file);
            for entry in &entries {
                write_line(&mut writer, &entry.record, &tmp)?;
            }
            sync(&writer, &tmp)?;
        }
        let count = entries.len();
        fs::rename(&tmp, &self.path).map_err(|e| StoreError::io(&self.path, e))?;
        let len = fs::metadata(&self.path).map_err(|e| StoreError::io(&self.path, e))?.len();
        state.writer = open_append(&self.path, len)?;
        Ok(count)
    }
}
