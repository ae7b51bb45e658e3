//! Multitask fine-tuning pairs.
//!
//! Input: `ner and translation: <source>`.
//! Target: `<source mentions> <SEP> <target mentions> <SEP> <tagged translation>`,
//! where mentions are joined by ` | ` and every entity in the translation is
//! wrapped as `<entity> mention </entity>`. All text is single-line with
//! whitespace runs collapsed.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::alignment::AlignedEntity;
use crate::corpus::DatasetEntry;
use crate::text::{normalize_whitespace, occurrences};

pub const TASK_PREFIX: &str = "ner and translation: ";
pub const SEP: &str = "<SEP>";
pub const ENTITY_OPEN: &str = "<entity>";
pub const ENTITY_CLOSE: &str = "</entity>";
pub const MENTION_SEPARATOR: &str = " | ";

const RESERVED: [&str; 3] = [SEP, ENTITY_OPEN, ENTITY_CLOSE];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("entry {entry_id:?}: mention {mention:?} does not occur in the translation")]
    MentionMissing { entry_id: String, mention: String },
    #[error(
        "entry {entry_id:?}: every occurrence of {mention:?} is already inside another entity"
    )]
    MentionShadowed { entry_id: String, mention: String },
    #[error("entry {entry_id:?} has no target reference {target_index}")]
    NoSuchTarget {
        entry_id: String,
        target_index: usize,
    },
    #[error("entry {entry_id:?}: {text:?} contains a reserved marker")]
    ReservedToken { entry_id: String, text: String },
    #[error("entry {entry_id:?}: empty entity mention")]
    EmptyMention { entry_id: String },
}

/// One entity as written to the examples file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityPair {
    pub source_mention: String,
    pub target_mention: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MultitaskExample {
    pub entry_id: String,
    pub target_index: usize,
    pub input_text: String,
    pub target_text: String,
    pub entities: Vec<EntityPair>,
}

pub fn build_example(
    entry: &DatasetEntry,
    target_index: usize,
    entities: &[AlignedEntity],
) -> Result<MultitaskExample, BuildError> {
    let target = entry
        .targets
        .get(target_index)
        .ok_or_else(|| BuildError::NoSuchTarget {
            entry_id: entry.id.clone(),
            target_index,
        })?;
    let translation = normalize_whitespace(&target.translation);
    check_reserved(&entry.id, &translation, false)?;

    let pairs: Vec<EntityPair> = entities
        .iter()
        .map(|e| EntityPair {
            source_mention: normalize_whitespace(&e.source_mention),
            target_mention: normalize_whitespace(&e.target_mention),
        })
        .collect();
    for pair in &pairs {
        if pair.source_mention.is_empty() || pair.target_mention.is_empty() {
            return Err(BuildError::EmptyMention {
                entry_id: entry.id.clone(),
            });
        }
        check_reserved(&entry.id, &pair.source_mention, true)?;
        check_reserved(&entry.id, &pair.target_mention, true)?;
    }

    let mentions: Vec<&str> = pairs.iter().map(|p| p.target_mention.as_str()).collect();
    let tagged = tag_mentions(&entry.id, &translation, &mentions)?;
    let ner = join_mentions(pairs.iter().map(|p| p.source_mention.as_str()));
    let translated = join_mentions(mentions.iter().copied());

    Ok(MultitaskExample {
        entry_id: entry.id.clone(),
        target_index,
        input_text: format!("{TASK_PREFIX}{}", normalize_whitespace(&entry.source)),
        target_text: format!("{ner} {SEP} {translated} {SEP} {tagged}"),
        entities: pairs,
    })
}

/// Wraps the first free occurrence of every entity's target mention in
/// `<entity> … </entity>`.
///
/// Longer mentions are placed first so a short mention never claims text that
/// a longer one needs; an occurrence overlapping an already tagged range is
/// skipped.
pub fn tag_translation(
    translation: &str,
    entities: &[AlignedEntity],
) -> Result<String, BuildError> {
    let mentions: Vec<&str> = entities.iter().map(|e| e.target_mention.as_str()).collect();
    tag_mentions("", translation, &mentions)
}

fn tag_mentions(
    entry_id: &str,
    translation: &str,
    mentions: &[&str],
) -> Result<String, BuildError> {
    let mut order: Vec<usize> = (0..mentions.len()).collect();
    // stable: equal lengths keep caller order
    order.sort_by_key(|&i| std::cmp::Reverse(mentions[i].len()));

    let mut taken: Vec<(usize, usize)> = Vec::with_capacity(mentions.len());
    for i in order {
        let mention = mentions[i];
        if mention.is_empty() {
            return Err(BuildError::EmptyMention {
                entry_id: entry_id.to_string(),
            });
        }
        let mut found_any = false;
        let free = occurrences(translation, mention).find(|&start| {
            found_any = true;
            let end = start + mention.len();
            taken.iter().all(|&(s, e)| end <= s || e <= start)
        });
        match free {
            Some(start) => taken.push((start, start + mention.len())),
            None if found_any => {
                return Err(BuildError::MentionShadowed {
                    entry_id: entry_id.to_string(),
                    mention: mention.to_string(),
                })
            }
            None => {
                return Err(BuildError::MentionMissing {
                    entry_id: entry_id.to_string(),
                    mention: mention.to_string(),
                })
            }
        }
    }
    taken.sort_unstable();

    let mut out = String::with_capacity(translation.len() + taken.len() * 20);
    let mut cursor = 0;
    for (start, end) in taken {
        out.push_str(&translation[cursor..start]);
        out.push_str(ENTITY_OPEN);
        out.push(' ');
        out.push_str(&translation[start..end]);
        out.push(' ');
        out.push_str(ENTITY_CLOSE);
        cursor = end;
    }
    out.push_str(&translation[cursor..]);
    Ok(out)
}

fn join_mentions<'a>(mentions: impl Iterator<Item = &'a str>) -> String {
    mentions.collect::<Vec<_>>().join(MENTION_SEPARATOR)
}

fn check_reserved(entry_id: &str, text: &str, is_mention: bool) -> Result<(), BuildError> {
    let clash = RESERVED.iter().any(|r| text.contains(r)) || (is_mention && text.contains('|'));
    if clash {
        return Err(BuildError::ReservedToken {
            entry_id: entry_id.to_string(),
            text: text.to_string(),
        });
    }
    Ok(())
}
