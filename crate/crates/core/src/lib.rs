//! Corpus pipeline and evaluation harness for entity-aware machine translation.
//!
//! The crate covers every deterministic stage between a SemEval-style entity
//! translation dataset and a BLEU score:
//!
//! - [`corpus`]: load, validate and write dataset files (JSONL or JSON array).
//! - [`alignment`]: filter LLM candidate pairs, project Pharaoh token
//!   alignments and merge both channels into source-side entity spans.
//! - [`builder`]: emit multitask fine-tuning pairs
//!   (`NER <SEP> entity translations <SEP> tagged translation`).
//! - [`parser`]: decompose raw generations and recover the clean translation.
//! - [`metrics`]: multi-reference corpus BLEU and entity-match rate.
//! - [`splitter`]: seeded train/dev/test partitioning.
//!
//! Data-parallel loops go through [`exec`], which uses rayon when the
//! `parallel` feature is enabled and a plain sequential loop otherwise.

pub mod alignment;
pub mod builder;
pub mod corpus;
pub mod exec;
pub mod metrics;
pub mod parser;
pub mod splitter;
pub mod text;

pub use alignment::{
    align_entry, filter_llm_candidates, merge_alignments, project_alignment, AlignedEntity,
    AlignedRecord, AlignmentError, CandidatePair, Channel, TokenAlignment,
};
pub use builder::{build_example, tag_translation, BuildError, MultitaskExample, TASK_PREFIX};
pub use corpus::{
    parse_dataset, write_dataset, CorpusError, DatasetEntry, ParseOutcome, Rejection,
    TargetReference, Validation,
};
pub use exec::Execution;
pub use metrics::{
    corpus_bleu, entity_match_rate, score_run, tokenize_for_bleu, BleuConfig, BleuScore,
    GenerationRecord, MetricsError, ScoreReport,
};
pub use parser::{parse_generation, strip_entity_tags, ParseError, ParsedGeneration, Structure};
pub use splitter::{split_dataset, split_sizes, Split, SplitError, SplitManifest, SplitSpec};
