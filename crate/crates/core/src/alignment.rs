//! Source-side entity spans for the gold target mentions.
//!
//! Two channels feed this stage: LLM-proposed `(source, target)` mention pairs,
//! which are kept only if the source mention literally occurs in the source
//! sentence, and word alignments in Pharaoh format (`"0-0 1-1 4-3"`), which are
//! followed backwards from the gold target mention. [`merge_alignments`]
//! combines both, with the LLM channel taking precedence.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DatasetEntry;
use crate::text::whitespace_tokens;

/// Characters trimmed from both ends of a projected mention.
const PROJECTION_TRIM: &[char] = &['.', ',', ';', ':', '!', '?', '"', '\'', '(', ')'];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePair {
    pub entry_id: String,
    pub source_mention: String,
    pub target_mention: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Llm,
    Projected,
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Channel::Llm => "llm",
            Channel::Projected => "projected",
        })
    }
}

/// A source mention located in `DatasetEntry::source` and paired with a target mention.
///
/// `source_span` is a half-open byte range; `source[span.0..span.1] == source_mention`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedEntity {
    pub source_mention: String,
    pub source_span: (usize, usize),
    pub target_mention: String,
    pub channel: Channel,
}

impl AlignedEntity {
    /// True when the span really covers the mention in `source`.
    pub fn is_anchored_in(&self, source: &str) -> bool {
        !self.source_mention.is_empty()
            && source.get(self.source_span.0..self.source_span.1) == Some(&self.source_mention)
    }

    fn overlaps(&self, other: &AlignedEntity) -> bool {
        self.source_span.0 < other.source_span.1 && other.source_span.0 < self.source_span.1
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlignmentError {
    #[error("line {line}: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("invalid Pharaoh pair {0:?}")]
    BadPair(String),
    #[error("entry {entry_id:?} has no target reference {target_index}")]
    NoSuchTarget {
        entry_id: String,
        target_index: usize,
    },
    #[error("entry {entry_id:?}: alignment pair {source_token}-{target_token} out of range ({source_tokens} source / {target_tokens} target tokens)")]
    IndexOutOfRange {
        entry_id: String,
        source_token: usize,
        target_token: usize,
        source_tokens: usize,
        target_tokens: usize,
    },
}

/// Word alignment between an entry's source and one of its translations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenAlignment {
    pub entry_id: String,
    pub target_index: usize,
    /// `(source token, target token)` pairs over whitespace tokens.
    pub pairs: BTreeSet<(usize, usize)>,
}

/// Parses a Pharaoh pair list such as `"0-0 1-1 4-3"`.
pub fn parse_pharaoh(text: &str) -> Result<BTreeSet<(usize, usize)>, AlignmentError> {
    text.split_whitespace()
        .map(|pair| {
            let (s, t) = pair
                .split_once('-')
                .ok_or_else(|| AlignmentError::BadPair(pair.to_string()))?;
            let s = s
                .parse()
                .map_err(|_| AlignmentError::BadPair(pair.to_string()))?;
            let t = t
                .parse()
                .map_err(|_| AlignmentError::BadPair(pair.to_string()))?;
            Ok((s, t))
        })
        .collect()
}

impl FromStr for TokenAlignment {
    type Err = AlignmentError;

    /// One alignment-file record: `entry_id \t target_index \t pairs`.
    fn from_str(line: &str) -> Result<Self, Self::Err> {
        let malformed = |reason: &str| AlignmentError::Malformed {
            line: 0,
            reason: reason.to_string(),
        };
        let mut fields = line.trim_end_matches(['\r', '\n']).splitn(3, '\t');
        let entry_id = fields
            .next()
            .filter(|s| !s.is_empty())
            .ok_or_else(|| malformed("missing entry id"))?;
        let target_index = fields
            .next()
            .ok_or_else(|| malformed("missing target index"))?
            .trim()
            .parse()
            .map_err(|_| malformed("target index is not a nonnegative integer"))?;
        let pairs = parse_pharaoh(fields.next().unwrap_or(""))?;
        Ok(TokenAlignment {
            entry_id: entry_id.to_string(),
            target_index,
            pairs,
        })
    }
}

impl fmt::Display for TokenAlignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}\t", self.entry_id, self.target_index)?;
        for (i, (s, t)) in self.pairs.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}-{t}")?;
        }
        Ok(())
    }
}

/// Parses a whole alignment file, skipping blank lines. Line numbers in errors are 1-based.
pub fn parse_alignment_file(text: &str) -> Result<Vec<TokenAlignment>, AlignmentError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.parse::<TokenAlignment>().map_err(|e| match e {
                AlignmentError::Malformed { reason, .. } => AlignmentError::Malformed {
                    line: i + 1,
                    reason,
                },
                AlignmentError::BadPair(p) => AlignmentError::Malformed {
                    line: i + 1,
                    reason: format!("invalid Pharaoh pair {p:?}"),
                },
                other => other,
            })
        })
        .collect()
}

impl TokenAlignment {
    pub fn validate(&self, entry: &DatasetEntry) -> Result<(), AlignmentError> {
        let target =
            entry
                .targets
                .get(self.target_index)
                .ok_or_else(|| AlignmentError::NoSuchTarget {
                    entry_id: entry.id.clone(),
                    target_index: self.target_index,
                })?;
        let source_tokens = whitespace_tokens(&entry.source).len();
        let target_tokens = whitespace_tokens(&target.translation).len();
        for &(s, t) in &self.pairs {
            if s >= source_tokens || t >= target_tokens {
                return Err(AlignmentError::IndexOutOfRange {
                    entry_id: entry.id.clone(),
                    source_token: s,
                    target_token: t,
                    source_tokens,
                    target_tokens,
                });
            }
        }
        Ok(())
    }
}

/// Keeps the LLM candidates whose source mention occurs byte-exactly in the
/// source and whose target mention occurs in at least one reference.
///
/// Each survivor is anchored at the first occurrence of its source mention.
/// Candidates addressed to a different entry are ignored.
pub fn filter_llm_candidates(
    entry: &DatasetEntry,
    candidates: &[CandidatePair],
) -> Vec<AlignedEntity> {
    let mut kept: Vec<AlignedEntity> = candidates
        .iter()
        .filter(|c| c.entry_id == entry.id)
        .filter(|c| !c.target_mention.is_empty())
        .filter(|c| {
            entry
                .targets
                .iter()
                .any(|t| t.translation.contains(c.target_mention.as_str()))
        })
        .filter_map(|c| {
            if c.source_mention.is_empty() {
                return None;
            }
            let start = entry.source.find(c.source_mention.as_str())?;
            Some(AlignedEntity {
                source_mention: c.source_mention.clone(),
                source_span: (start, start + c.source_mention.len()),
                target_mention: c.target_mention.clone(),
                channel: Channel::Llm,
            })
        })
        .collect();
    kept.sort_by_key(|e| e.source_span.0);
    kept
}

/// Follows the alignment links of the gold mention of `targets[target_index]`
/// back to the source sentence.
///
/// Returns `Ok(None)` when no mention token is aligned, when the covered source
/// range is interrupted by a token aligned elsewhere, or when nothing is left
/// after trimming punctuation.
pub fn project_alignment(
    entry: &DatasetEntry,
    target_index: usize,
    alignment: &TokenAlignment,
) -> Result<Option<AlignedEntity>, AlignmentError> {
    let checked = TokenAlignment {
        target_index,
        ..alignment.clone()
    };
    checked.validate(entry)?;
    let target = &entry.targets[target_index];
    let Some(mention_start) = target.translation.find(target.mention.as_str()) else {
        return Ok(None);
    };
    let mention_end = mention_start + target.mention.len();
    if mention_start == mention_end {
        return Ok(None);
    }

    // target tokens whose byte range overlaps the mention
    let target_tokens = whitespace_tokens(&target.translation);
    let mention_tokens: BTreeSet<usize> = target_tokens
        .iter()
        .enumerate()
        .filter(|(_, &(s, e))| s < mention_end && mention_start < e)
        .map(|(i, _)| i)
        .collect();

    let linked: BTreeSet<usize> = alignment
        .pairs
        .iter()
        .filter(|(_, t)| mention_tokens.contains(t))
        .map(|&(s, _)| s)
        .collect();
    let (Some(&first), Some(&last)) = (linked.first(), linked.last()) else {
        return Ok(None);
    };

    let aligned_anywhere: BTreeSet<usize> = alignment.pairs.iter().map(|&(s, _)| s).collect();
    let contiguous = (first..=last).all(|k| linked.contains(&k) || !aligned_anywhere.contains(&k));
    if !contiguous {
        return Ok(None);
    }

    let source_tokens = whitespace_tokens(&entry.source);
    let raw_start = source_tokens[first].0;
    let raw_end = source_tokens[last].1;
    let raw = &entry.source[raw_start..raw_end];
    let trimmed_start = raw_start + (raw.len() - raw.trim_start_matches(PROJECTION_TRIM).len());
    let trimmed_end = raw_start + raw.trim_end_matches(PROJECTION_TRIM).len();
    if trimmed_start >= trimmed_end {
        return Ok(None);
    }
    Ok(Some(AlignedEntity {
        source_mention: entry.source[trimmed_start..trimmed_end].to_string(),
        source_span: (trimmed_start, trimmed_end),
        target_mention: target.mention.clone(),
        channel: Channel::Projected,
    }))
}

/// Union of both channels for one `(entry, target reference)`.
///
/// Duplicates by `(source_span, target_mention)` collapse to one element. A
/// projected entity whose span overlaps an LLM entity with the same target
/// mention is dropped. Output is ordered by span start.
pub fn merge_alignments(llm: &[AlignedEntity], projected: &[AlignedEntity]) -> Vec<AlignedEntity> {
    merge_with_conflicts(llm, projected).0
}

/// Like [`merge_alignments`], also returning the projected entities that lost
/// a conflict against an overlapping (but different) LLM span.
pub fn merge_with_conflicts(
    llm: &[AlignedEntity],
    projected: &[AlignedEntity],
) -> (Vec<AlignedEntity>, Vec<AlignedEntity>) {
    let mut merged: Vec<AlignedEntity> = Vec::with_capacity(llm.len() + projected.len());
    let mut conflicts = Vec::new();
    let same_key = |a: &AlignedEntity, b: &AlignedEntity| {
        a.source_span == b.source_span && a.target_mention == b.target_mention
    };
    for e in llm {
        if !merged.iter().any(|m| same_key(m, e)) {
            merged.push(e.clone());
        }
    }
    let llm_count = merged.len();
    for p in projected {
        if merged.iter().any(|m| same_key(m, p)) {
            continue;
        }
        let loses = merged[..llm_count]
            .iter()
            .any(|m| m.target_mention == p.target_mention && m.overlaps(p));
        if loses {
            conflicts.push(p.clone());
        } else {
            merged.push(p.clone());
        }
    }
    merged.sort_by(|a, b| {
        (a.source_span, &a.target_mention, a.channel).cmp(&(
            b.source_span,
            &b.target_mention,
            b.channel,
        ))
    });
    (merged, conflicts)
}

/// Aligned entities for one `(entry, target reference)` pair, the unit the
/// builder consumes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignedRecord {
    pub entry_id: String,
    pub target_index: usize,
    pub entities: Vec<AlignedEntity>,
}

/// Per-entry summary of [`align_entry`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignStats {
    pub llm: usize,
    pub projected: usize,
    pub conflicts: Vec<AlignedEntity>,
}

/// Runs filter, projection and merge for every target reference of `entry`.
///
/// LLM survivors are restricted to those whose target mention occurs in the
/// translation being aligned, so each record is directly buildable.
pub fn align_entry(
    entry: &DatasetEntry,
    candidates: &[CandidatePair],
    alignments: &[TokenAlignment],
) -> Result<(Vec<AlignedRecord>, AlignStats), AlignmentError> {
    let filtered = filter_llm_candidates(entry, candidates);
    let mut stats = AlignStats::default();
    let mut records = Vec::with_capacity(entry.targets.len());
    for (target_index, target) in entry.targets.iter().enumerate() {
        let llm: Vec<AlignedEntity> = filtered
            .iter()
            .filter(|e| target.translation.contains(e.target_mention.as_str()))
            .cloned()
            .collect();
        let mut projected = Vec::new();
        for alignment in alignments
            .iter()
            .filter(|a| a.entry_id == entry.id && a.target_index == target_index)
        {
            if let Some(found) = project_alignment(entry, target_index, alignment)? {
                projected.push(found);
            }
        }
        let (entities, conflicts) = merge_with_conflicts(&llm, &projected);
        stats.llm += entities
            .iter()
            .filter(|e| e.channel == Channel::Llm)
            .count();
        stats.projected += entities
            .iter()
            .filter(|e| e.channel == Channel::Projected)
            .count();
        stats.conflicts.extend(conflicts);
        debug_assert!(entities.iter().all(|e| e.is_anchored_in(&entry.source)));
        records.push(AlignedRecord {
            entry_id: entry.id.clone(),
            target_index,
            entities,
        });
    }
    // a stray alignment for a reference the entry does not have is an input error
    if let Some(bad) = alignments
        .iter()
        .find(|a| a.entry_id == entry.id && a.target_index >= entry.targets.len())
    {
        return Err(AlignmentError::NoSuchTarget {
            entry_id: entry.id.clone(),
            target_index: bad.target_index,
        });
    }
    Ok((records, stats))
}
