use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use parking_lot::RwLock;
use prepline_core::WatchEvent;

use crate::journal::{open_append, read_lines, sync, write_line};
use crate::StoreError;

pub(crate) const EVENTS_FILE: &str = "events.jsonl";

struct State {
    events: Vec<WatchEvent>,
    writer: BufWriter<File>,
}

/// Append-only behavior log. Read-back order is append order.
pub(crate) struct EventLog {
    path: PathBuf,
    sync: bool,
    state: RwLock<State>,
}

impl EventLog {
    pub(crate) fn open(dir: &Path, sync: bool) -> Result<Self, StoreError> {
        let path = dir.join(EVENTS_FILE);
        let (events, good_len) = read_lines(&path)?;
        let writer = open_append(&path, good_len)?;
        Ok(Self {
            path,
            sync,
            state: RwLock::new(State { events, writer }),
        })
    }

    pub(crate) fn append(&self, event: WatchEvent) -> Result<(), StoreError> {
        let mut state = self.state.write();
        write_line(&mut state.writer, &event, &self.path)?;
        if self.sync {
            sync(&state.writer, &self.path)?;
        }
        state.events.push(event);
        Ok(())
    }

    pub(crate) fn filter<F: Fn(&WatchEvent) -> bool>(&self, keep: F) -> Vec<WatchEvent> {
        self.state.read().events.iter().filter(|e| keep(e)).cloned().collect()
    }

    pub(crate) fn len(&self) -> usize {
        self.state.read().events.len()
    }
}
