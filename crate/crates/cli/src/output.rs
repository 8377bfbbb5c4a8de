use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Where and how a command writes its artifacts.
#[derive(Debug, Clone)]
pub struct Sink {
    pub dir: PathBuf,
    pub format: Format,
}

impl Sink {
    pub fn new(dir: &Path, format: Format) -> anyhow::Result<Self> {
        fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            format,
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Writes `rows` as `<stem>.csv` or as `<stem>.json` (with `meta`
    /// merged into the top-level object), depending on the format.
    pub fn table<T: Serialize>(&self, stem: &str, rows: &[T], meta: Value) -> anyhow::Result<PathBuf> {
        match self.format {
            Format::Csv => {
                let path = self.path(&format!("{stem}.csv"));
                let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
                for row in rows {
                    w.serialize(row)?;
                }
                w.flush()?;
                Ok(path)
            }
            Format::Json => {
                let mut doc = json!({ "schema_version": SCHEMA_VERSION, "rows": rows });
                if let (Some(obj), Value::Object(extra)) = (doc.as_object_mut(), meta) {
                    obj.extend(extra);
                }
                self.json(stem, &doc)
            }
        }
    }

    /// Writes a JSON document; objects get a `schema_version` key.
    pub fn json<T: Serialize>(&self, stem: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut doc = serde_json::to_value(value)?;
        if let Some(obj) = doc.as_object_mut() {
            obj.entry("schema_version").or_insert(json!(SCHEMA_VERSION));
        }
        let path = self.path(&format!("{stem}.json"));
        let mut text = serde_json::to_string_pretty(&doc)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }

    pub fn text(&self, name: &str, body: &str) -> anyhow::Result<PathBuf> {
        let path = self.path(name);
        fs::write(&path, body).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
