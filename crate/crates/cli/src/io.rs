use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use eamt_core::corpus::{parse_dataset, DatasetEntry, Validation};
use serde::de::DeserializeOwned;
use serde::Serialize;

pub fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

/// Loads and validates a dataset, reporting skipped records on stderr.
pub fn load_dataset(path: &Path, strict: bool) -> Result<Vec<DatasetEntry>> {
    let mode = if strict {
        Validation::Strict
    } else {
        Validation::Lenient
    };
    let outcome = parse_dataset(&read_bytes(path)?, mode)
        .with_context(|| format!("invalid dataset {}", path.display()))?;
    if !outcome.rejected.is_empty() {
        eprintln!(
            "warning: {}: skipped {} invalid record(s)",
            path.display(),
            outcome.rejected.len()
        );
    }
    Ok(outcome.entries)
}

/// Reads a JSONL file of `T`, skipping blank lines.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = read_text(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .with_context(|| format!("{}:{}: invalid record", path.display(), i + 1))
        })
        .collect()
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    Ok(out)
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("cannot write {}", path.display()))
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(dir, name, &text)
}
