//! Append-only per-cell journal that lets an interrupted sweep resume.
//!
//! Line one records the configuration the journal belongs to; every other
//! line is one finished cell. A torn final line is ignored on reload.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use anyhow::Context;
use poleshift::CellResult;
use serde::{Deserialize, Serialize};

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    journal_version: u32,
    config: String,
}

pub struct Journal {
    path: PathBuf,
    file: Mutex<File>,
}

pub type Cache = BTreeMap<(usize, usize), CellResult>;

impl Journal {
    /// Opens the journal at `path` for a run with the given configuration
    /// fingerprint. Returns the cells already recorded by a matching run;
    /// a journal from a different configuration is discarded.
    pub fn open(path: &Path, fingerprint: &str) -> anyhow::Result<(Self, Cache)> {
        let mut cache = Cache::new();
        let mut reuse = false;
        if path.exists() {
            let reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
            let mut lines = reader.lines();
            if let Some(Ok(first)) = lines.next() {
                if let Ok(h) = serde_json::from_str::<Header>(&first) {
                    reuse = h.config == fingerprint;
                }
            }
            if reuse {
                for line in lines.map_while(|l| l.ok()) {
                    if let Ok(cell) = serde_json::from_str::<CellResult>(&line) {
                        cache.insert((cell.i, cell.j), cell);
                    }
                }
            } else {
                eprintln!("journal {} belongs to a different configuration; starting over", path.display());
            }
        }
        let file = if reuse {
            // Rewrite without a possibly torn tail so appends start on a fresh line.
            let mut f = File::create(path)?;
            write_line(&mut f, &header(fingerprint)?)?;
            for cell in cache.values() {
                write_line(&mut f, &serde_json::to_string(cell)?)?;
            }
            OpenOptions::new().append(true).open(path)?
        } else {
            let mut f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            write_line(&mut f, &header(fingerprint)?)?;
            f
        };
        Ok((
            Self {
                path: path.to_path_buf(),
                file: Mutex::new(file),
            },
            cache,
        ))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Appends one cell as a single write.
    pub fn record(&self, cell: &CellResult) {
        let line = match serde_json::to_string(cell) {
            Ok(l) => l,
            Err(e) => {
                eprintln!("journal: cannot serialize cell ({}, {}): {e}", cell.i, cell.j);
                return;
            }
        };
        let mut file = self.file.lock().unwrap_or_else(|p| p.into_inner());
        if let Err(e) = write_line(&mut file, &line) {
            eprintln!("journal: write failed: {e}");
        }
    }
}

fn header(fingerprint: &str) -> anyhow::Result<String> {
    Ok(serde_json::to_string(&Header {
        journal_version: 1,
        config: fingerprint.to_string(),
    })?)
}

fn write_line(f: &mut File, line: &str) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(line.len() + 1);
    buf.extend_from_slice(line.as_bytes());
    buf.push(b'\n');
    f.write_all(&buf)?;
    f.flush()
}
