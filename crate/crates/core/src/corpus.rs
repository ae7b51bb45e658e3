//! Dataset records in the SemEval entity-translation format.
//!
//! Files are accepted either as JSON Lines (one object per line) or as a single
//! JSON array of objects. Output is always JSON Lines with the field order of
//! the original format. Text is never normalized on ingest: the mention check
//! is a byte-exact substring test, so `Girotondo` and `girotondo` stay distinct.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetReference {
    pub translation: String,
    pub mention: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub id: String,
    pub wikidata_id: String,
    pub entity_types: Vec<String>,
    pub source: String,
    pub targets: Vec<TargetReference>,
    pub source_locale: String,
    pub target_locale: String,
}

impl DatasetEntry {
    /// Checks the per-record invariants. Id uniqueness is a file-level property
    /// and is checked by [`parse_dataset`].
    pub fn validate(&self, line: usize) -> Result<(), CorpusError> {
        let malformed = |reason: &str| CorpusError::MalformedRecord {
            line,
            reason: reason.to_string(),
        };
        if self.id.is_empty() {
            return Err(malformed("empty id"));
        }
        if self.source.trim().is_empty() {
            return Err(malformed("source is empty"));
        }
        if self.targets.is_empty() {
            return Err(malformed("targets is empty"));
        }
        if self.source_locale.is_empty() || self.target_locale.is_empty() {
            return Err(malformed("empty locale"));
        }
        for (index, target) in self.targets.iter().enumerate() {
            if !target.translation.contains(target.mention.as_str()) {
                return Err(CorpusError::MentionNotInTranslation {
                    id: self.id.clone(),
                    index,
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CorpusError {
    #[error("record {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("duplicate id {0:?}")]
    DuplicateId(String),
    #[error("entry {id:?}: mention of target {index} does not occur in its translation")]
    MentionNotInTranslation { id: String, index: usize },
    #[error("input is not valid UTF-8: {0}")]
    Encoding(String),
    #[error("malformed JSON array document: {0}")]
    InvalidDocument(String),
}

/// Validation policy for [`parse_dataset`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Validation {
    /// The first invalid record aborts parsing.
    Strict,
    /// Invalid records are skipped and reported in [`ParseOutcome::rejected`].
    #[default]
    Lenient,
}

/// A record dropped in lenient mode. `line` is the 1-based line number for
/// JSONL input and the 1-based element position for JSON arrays.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub line: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseOutcome {
    pub entries: Vec<DatasetEntry>,
    pub rejected: Vec<Rejection>,
}

impl ParseOutcome {
    /// Number of records seen in the input (accepted + rejected).
    pub fn record_count(&self) -> usize {
        self.entries.len() + self.rejected.len()
    }
}

pub fn parse_dataset(raw: &[u8], mode: Validation) -> Result<ParseOutcome, CorpusError> {
    parse_dataset_with(raw, mode, Execution::default())
}

pub fn parse_dataset_with(
    raw: &[u8],
    mode: Validation,
    exec: Execution,
) -> Result<ParseOutcome, CorpusError> {
    let text = std::str::from_utf8(raw).map_err(|e| CorpusError::Encoding(e.to_string()))?;
    let text = text.strip_prefix('\u{feff}').unwrap_or(text);

    let parsed: Vec<(usize, Result<DatasetEntry, CorpusError>)> =
        if text.trim_start().starts_with('[') {
            let values: Vec<serde_json::Value> = serde_json::from_str(text)
                .map_err(|e| CorpusError::InvalidDocument(e.to_string()))?;
            let numbered: Vec<(usize, serde_json::Value)> = values
                .into_iter()
                .enumerate()
                .map(|(i, v)| (i + 1, v))
                .collect();
            exec.map(&numbered, |(line, value)| {
                let entry =
                    DatasetEntry::deserialize(value).map_err(|e| CorpusError::MalformedRecord {
                        line: *line,
                        reason: e.to_string(),
                    });
                (*line, entry.and_then(|e| e.validate(*line).map(|_| e)))
            })
        } else {
            let lines: Vec<(usize, &str)> = text
                .lines()
                .enumerate()
                .filter(|(_, l)| !l.trim().is_empty())
                .map(|(i, l)| (i + 1, l))
                .collect();
            exec.map(&lines, |(line, body)| {
                let entry = serde_json::from_str::<DatasetEntry>(body).map_err(|e| {
                    CorpusError::MalformedRecord {
                        line: *line,
                        reason: e.to_string(),
                    }
                });
                (*line, entry.and_then(|e| e.validate(*line).map(|_| e)))
            })
        };

    let mut outcome = ParseOutcome::default();
    let mut seen = HashSet::new();
    for (line, result) in parsed {
        let checked = result.and_then(|entry| {
            if seen.contains(&entry.id) {
                Err(CorpusError::DuplicateId(entry.id))
            } else {
                seen.insert(entry.id.clone());
                Ok(entry)
            }
        });
        match (checked, mode) {
            (Ok(entry), _) => outcome.entries.push(entry),
            (Err(err), Validation::Strict) => return Err(err),
            (Err(err), Validation::Lenient) => outcome.rejected.push(Rejection {
                line,
                reason: err.to_string(),
            }),
        }
    }
    Ok(outcome)
}

/// Serializes entries as JSON Lines, one newline-terminated object per entry.
pub fn write_dataset(entries: &[DatasetEntry]) -> String {
    let mut out = String::new();
    for entry in entries {
        // struct serialization of strings and vectors cannot fail
        out.push_str(&serde_json::to_string(entry).expect("entry serializes"));
        out.push('\n');
    }
    out
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn girotondo() -> DatasetEntry {
        DatasetEntry {
            id: "Q746666_0".into(),
            wikidata_id: "Q746666".into(),
            entity_types: vec!["Musical work".into()],
            source: "Can you sing the chorus of the folk song Ring a Ring o' Roses?".into(),
            targets: vec![
                TargetReference {
                    translation: "Puoi cantare il ritornello della canzone popolare Girotondo?"
                        .into(),
                    mention: "Girotondo".into(),
                },
                TargetReference {
                    translation: "Sai cantare il ritornello del girotondo, la canzone popolare?"
                        .into(),
                    mention: "girotondo".into(),
                },
            ],
            source_locale: "en".into(),
            target_locale: "it".into(),
        }
    }

    pub fn commander() -> DatasetEntry {
        DatasetEntry {
            id: "Qcmd_0".into(),
            wikidata_id: "Qcmd".into(),
            entity_types: vec!["Location".into()],
            source: "Who was the overall Commander of Allied Forces in Europe?".into(),
            targets: vec![TargetReference {
                translation: "Wer war der Oberbefehlshaber der alliierten Streitkräfte in Europa?"
                    .into(),
                mention: "Europa".into(),
            }],
            source_locale: "en".into(),
            target_locale: "de".into(),
        }
    }
}
