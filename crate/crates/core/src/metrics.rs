//! Corpus BLEU and entity-match scoring.
//!
//! BLEU follows the original corpus-level definition: modified n-gram
//! precisions clipped by the maximum count in any single reference, summed
//! over the corpus, combined by a uniform geometric mean and multiplied by the
//! brevity penalty `exp(1 - r/c)` (1 when `c > r`). `r` sums, per sentence, the
//! reference length closest to the hypothesis length, ties going to the shorter
//! reference. No smoothing unless [`BleuConfig::smoothing`] is set.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DatasetEntry;
use crate::exec::Execution;
use crate::parser::{
    parse_generation, parse_generation_strict, ParseError, ParsedGeneration, Structure,
};
use crate::text::normalize_whitespace;

/// Value substituted for a zero match count when smoothing is enabled.
pub const SMOOTHING_EPSILON: f64 = 1e-9;

const SPLIT_PUNCTUATION: &[char] = &['.', ',', '!', '?', ';', ':', '"', '(', ')', '[', ']'];

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("{hypotheses} hypotheses but {references} reference sets")]
    LengthMismatch {
        hypotheses: usize,
        references: usize,
    },
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("item {0} has no references")]
    EmptyReferences(usize),
    #[error("max_n must be at least 1")]
    InvalidOrder,
    #[error("no generation for entries: {}", .0.join(", "))]
    MissingGeneration(Vec<String>),
    #[error("generation refers to unknown entry {0:?}")]
    UnknownId(String),
    #[error("entry {entry_id:?}: target index {target_index:?} appears twice")]
    DuplicateGeneration {
        entry_id: String,
        target_index: Option<usize>,
    },
    #[error("entry {entry_id:?}: {source}")]
    Malformed {
        entry_id: String,
        source: ParseError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BleuConfig {
    pub max_n: usize,
    pub smoothing: bool,
    pub lowercase: bool,
    pub execution: Execution,
}

impl Default for BleuConfig {
    fn default() -> Self {
        BleuConfig {
            max_n: 4,
            smoothing: false,
            lowercase: false,
            execution: Execution::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuScore {
    /// In `[0, 1]`.
    pub score: f64,
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub hyp_length: usize,
    pub ref_length: usize,
    pub max_n: usize,
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
}

/// Splits on whitespace after isolating each of `.,!?;:"()[]` as its own token.
pub fn tokenize_for_bleu(text: &str) -> Vec<String> {
    tokenize_with(text, false)
}

pub fn tokenize_with(text: &str, lowercase: bool) -> Vec<String> {
    let mut spaced = String::with_capacity(text.len() + 8);
    for c in text.chars() {
        if SPLIT_PUNCTUATION.contains(&c) {
            spaced.push(' ');
            spaced.push(c);
            spaced.push(' ');
        } else {
            spaced.push(c);
        }
    }
    if lowercase {
        spaced = spaced.to_lowercase();
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

/// Sufficient statistics of one or more sentences.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Stats {
    matches: Vec<u64>,
    totals: Vec<u64>,
    hyp_len: usize,
    ref_len: usize,
}

impl Stats {
    fn zero(max_n: usize) -> Self {
        Stats {
            matches: vec![0; max_n],
            totals: vec![0; max_n],
            hyp_len: 0,
            ref_len: 0,
        }
    }

    fn add(mut self, other: Stats) -> Self {
        for (a, b) in self.matches.iter_mut().zip(other.matches) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(other.totals) {
            *a += b;
        }
        self.hyp_len += other.hyp_len;
        self.ref_len += other.ref_len;
        self
    }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            let key: Vec<&str> = window.iter().map(AsRef::as_ref).collect();
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

fn sentence_stats<S: AsRef<str>>(hyp: &[S], refs: &[Vec<S>], max_n: usize) -> Stats {
    let mut stats = Stats::zero(max_n);
    stats.hyp_len = hyp.len();
    stats.ref_len = refs
        .iter()
        .map(Vec::len)
        .min_by_key(|&len| (len.abs_diff(hyp.len()), len))
        .unwrap_or(0);
    for n in 1..=max_n {
        let hyp_counts = ngram_counts(hyp, n);
        let mut max_ref: HashMap<Vec<&str>, u64> = HashMap::new();
        for reference in refs {
            for (gram, count) in ngram_counts(reference, n) {
                let slot = max_ref.entry(gram).or_insert(0);
                *slot = (*slot).max(count);
            }
        }
        stats.totals[n - 1] = hyp.len().saturating_sub(n - 1) as u64;
        stats.matches[n - 1] = hyp_counts
            .iter()
            .map(|(gram, &count)| count.min(max_ref.get(gram).copied().unwrap_or(0)))
            .sum();
    }
    stats
}

/// Multi-reference corpus BLEU with default settings except `max_n`.
pub fn corpus_bleu<S: AsRef<str> + Sync>(
    hypotheses: &[Vec<S>],
    references: &[Vec<Vec<S>>],
    max_n: usize,
) -> Result<BleuScore, MetricsError> {
    corpus_bleu_with(
        hypotheses,
        references,
        &BleuConfig {
            max_n,
            ..BleuConfig::default()
        },
    )
}

pub fn corpus_bleu_with<S: AsRef<str> + Sync>(
    hypotheses: &[Vec<S>],
    references: &[Vec<Vec<S>>],
    config: &BleuConfig,
) -> Result<BleuScore, MetricsError> {
    let max_n = config.max_n;
    if max_n == 0 {
        return Err(MetricsError::InvalidOrder);
    }
    if hypotheses.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            hypotheses: hypotheses.len(),
            references: references.len(),
        });
    }
    if hypotheses.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    if let Some(i) = references.iter().position(Vec::is_empty) {
        return Err(MetricsError::EmptyReferences(i));
    }

    let items: Vec<(&Vec<S>, &Vec<Vec<S>>)> = hypotheses.iter().zip(references).collect();
    let stats = config.execution.map_reduce(
        &items,
        |(hyp, refs)| sentence_stats(hyp, refs, max_n),
        || Stats::zero(max_n),
        Stats::add,
    );
    Ok(finish(stats, config))
}

fn finish(stats: Stats, config: &BleuConfig) -> BleuScore {
    let precisions: Vec<f64> = stats
        .matches
        .iter()
        .zip(&stats.totals)
        .map(|(&m, &t)| match (m, t, config.smoothing) {
            (_, 0, false) => 0.0,
            (_, 0, true) => SMOOTHING_EPSILON,
            (0, t, true) => SMOOTHING_EPSILON / t as f64,
            (m, t, _) => m as f64 / t as f64,
        })
        .collect();

    let (c, r) = (stats.hyp_len, stats.ref_len);
    let brevity_penalty = if c > r {
        1.0
    } else if c == 0 {
        // empty output: nothing to penalize against, the score is 0 regardless
        if r == 0 {
            1.0
        } else {
            0.0
        }
    } else {
        (1.0 - r as f64 / c as f64).exp()
    };

    let score = if precisions.contains(&0.0) {
        0.0
    } else {
        let mean_log = precisions.iter().map(|p| p.ln()).sum::<f64>() / precisions.len() as f64;
        brevity_penalty * mean_log.exp()
    };

    BleuScore {
        score,
        precisions,
        brevity_penalty,
        hyp_length: c,
        ref_length: r,
        max_n: config.max_n,
        matches: stats.matches,
        totals: stats.totals,
    }
}

/// Fraction of items whose clean translation contains at least one of the
/// item's gold mentions (byte-exact). Empty gold mentions never count.
pub fn entity_match_rate(
    parsed: &[ParsedGeneration],
    gold: &[Vec<String>],
) -> Result<f64, MetricsError> {
    if parsed.len() != gold.len() {
        return Err(MetricsError::LengthMismatch {
            hypotheses: parsed.len(),
            references: gold.len(),
        });
    }
    if parsed.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let hits = parsed
        .iter()
        .zip(gold)
        .filter(|(p, mentions)| {
            mentions
                .iter()
                .any(|m| !m.is_empty() && p.clean_translation.contains(m.as_str()))
        })
        .count();
    Ok(hits as f64 / parsed.len() as f64)
}

/// One line of a generations file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub entry_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_index: Option<usize>,
    pub generation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub bleu: BleuScore,
    pub entity_match_rate: f64,
    pub n_items: usize,
    pub n_malformed: usize,
}

/// Scores a run against the entries of one split.
///
/// Every generation is one item, scored against all references of its entry.
/// Every entry of the split must have at least one generation.
pub fn score_run(
    generations: &[GenerationRecord],
    entries: &[DatasetEntry],
    config: &BleuConfig,
    strict: bool,
) -> Result<ScoreReport, MetricsError> {
    if generations.is_empty() {
        return Err(MetricsError::EmptyCorpus);
    }
    let by_id: HashMap<&str, &DatasetEntry> = entries.iter().map(|e| (e.id.as_str(), e)).collect();
    let mut seen: HashSet<(&str, Option<usize>)> = HashSet::new();
    for g in generations {
        if !by_id.contains_key(g.entry_id.as_str()) {
            return Err(MetricsError::UnknownId(g.entry_id.clone()));
        }
        if !seen.insert((g.entry_id.as_str(), g.target_index)) {
            return Err(MetricsError::DuplicateGeneration {
                entry_id: g.entry_id.clone(),
                target_index: g.target_index,
            });
        }
    }
    let covered: HashSet<&str> = generations.iter().map(|g| g.entry_id.as_str()).collect();
    let missing: Vec<String> = entries
        .iter()
        .filter(|e| !covered.contains(e.id.as_str()))
        .map(|e| e.id.clone())
        .collect();
    if !missing.is_empty() {
        return Err(MetricsError::MissingGeneration(missing));
    }

    let parsed: Vec<ParsedGeneration> = if strict {
        generations
            .iter()
            .map(|g| {
                parse_generation_strict(&g.generation).map_err(|source| MetricsError::Malformed {
                    entry_id: g.entry_id.clone(),
                    source,
                })
            })
            .collect::<Result<_, _>>()?
    } else {
        config
            .execution
            .map(generations, |g| parse_generation(&g.generation))
    };

    let lower = config.lowercase;
    let hypotheses: Vec<Vec<String>> = config
        .execution
        .map(&parsed, |p| tokenize_with(&p.clean_translation, lower));
    let references: Vec<Vec<Vec<String>>> = config.execution.map(generations, |g| {
        by_id[g.entry_id.as_str()]
            .targets
            .iter()
            .map(|t| tokenize_with(&normalize_whitespace(&t.translation), lower))
            .collect()
    });
    let gold: Vec<Vec<String>> = generations
        .iter()
        .map(|g| {
            by_id[g.entry_id.as_str()]
                .targets
                .iter()
                .map(|t| t.mention.clone())
                .collect()
        })
        .collect();

    let bleu = corpus_bleu_with(&hypotheses, &references, config)?;
    Ok(ScoreReport {
        bleu,
        entity_match_rate: entity_match_rate(&parsed, &gold)?,
        n_items: parsed.len(),
        n_malformed: parsed
            .iter()
            .filter(|p| p.structure != Structure::WellFormed)
            .count(),
    })
}
