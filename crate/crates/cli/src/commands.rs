use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::Path;

use anyhow::{bail, Context, Result};
use eamt_core::alignment::{
    align_entry, parse_alignment_file, AlignedRecord, CandidatePair, TokenAlignment,
};
use eamt_core::corpus::{parse_dataset, write_dataset, Validation};
use eamt_core::metrics::{score_run, BleuConfig, GenerationRecord, ScoreReport};
use eamt_core::parser::{parse_generation, parse_generation_strict, ParsedGeneration};
use eamt_core::splitter::{split_dataset, SplitManifest, SplitSpec};
use eamt_core::{build_example, Execution};
use serde::Serialize;

use crate::io::{
    load_dataset, read_bytes, read_jsonl, read_text, to_jsonl, write_file, write_json,
};
use crate::GlobalOpts;

#[derive(Serialize)]
struct IngestReport<'a> {
    accepted: usize,
    rejected: usize,
    rejections: &'a [eamt_core::Rejection],
}

pub fn ingest(g: &GlobalOpts, dataset: &Path) -> Result<()> {
    let mode = if g.strict {
        Validation::Strict
    } else {
        Validation::Lenient
    };
    let outcome = parse_dataset(&read_bytes(dataset)?, mode)
        .with_context(|| format!("invalid dataset {}", dataset.display()))?;
    let report = IngestReport {
        accepted: outcome.entries.len(),
        rejected: outcome.rejected.len(),
        rejections: &outcome.rejected,
    };
    for r in &outcome.rejected {
        eprintln!("rejected record {}: {}", r.line, r.reason);
    }
    write_file(&g.out, "dataset.jsonl", &write_dataset(&outcome.entries))?;
    write_json(&g.out, "ingest_report.json", &report)?;
    println!(
        "accepted: {}  rejected: {}",
        report.accepted, report.rejected
    );
    Ok(())
}

#[derive(Serialize)]
struct AlignReport {
    entries: usize,
    records: usize,
    empty_records: usize,
    llm: usize,
    projected: usize,
    conflicts: usize,
}

pub fn align(
    g: &GlobalOpts,
    dataset: &Path,
    candidates: Option<&Path>,
    alignments: Option<&Path>,
) -> Result<()> {
    let entries = load_dataset(dataset, g.strict)?;
    let candidates: Vec<CandidatePair> = match candidates {
        Some(path) => read_jsonl(path)?,
        None => Vec::new(),
    };
    let alignments: Vec<TokenAlignment> = match alignments {
        Some(path) => parse_alignment_file(&read_text(path)?)
            .with_context(|| format!("invalid alignment file {}", path.display()))?,
        None => Vec::new(),
    };

    let known: HashSet<&str> = entries.iter().map(|e| e.id.as_str()).collect();
    let stray: Vec<&str> = candidates
        .iter()
        .map(|c| c.entry_id.as_str())
        .chain(alignments.iter().map(|a| a.entry_id.as_str()))
        .filter(|id| !known.contains(id))
        .collect();
    if let Some(first) = stray.first() {
        if g.strict {
            bail!("candidate or alignment refers to unknown entry {first:?}");
        }
        eprintln!(
            "warning: {} candidate/alignment record(s) refer to unknown entries",
            stray.len()
        );
    }

    let mut cands_by_id: HashMap<&str, Vec<CandidatePair>> = HashMap::new();
    for c in &candidates {
        cands_by_id
            .entry(c.entry_id.as_str())
            .or_default()
            .push(c.clone());
    }
    let mut aligns_by_id: HashMap<&str, Vec<TokenAlignment>> = HashMap::new();
    for a in &alignments {
        aligns_by_id
            .entry(a.entry_id.as_str())
            .or_default()
            .push(a.clone());
    }

    let results = Execution::default().map(&entries, |entry| {
        let id = entry.id.as_str();
        align_entry(
            entry,
            cands_by_id.get(id).map_or(&[][..], Vec::as_slice),
            aligns_by_id.get(id).map_or(&[][..], Vec::as_slice),
        )
    });

    let mut records: Vec<AlignedRecord> = Vec::new();
    let mut report = AlignReport {
        entries: entries.len(),
        records: 0,
        empty_records: 0,
        llm: 0,
        projected: 0,
        conflicts: 0,
    };
    for (entry, result) in entries.iter().zip(results) {
        let (recs, stats) = result?;
        for lost in &stats.conflicts {
            eprintln!(
                "conflict: {}: projected {:?} -> {:?} dropped, llm span wins",
                entry.id, lost.source_mention, lost.target_mention
            );
        }
        report.llm += stats.llm;
        report.projected += stats.projected;
        report.conflicts += stats.conflicts.len();
        records.extend(recs);
    }
    report.records = records.len();
    report.empty_records = records.iter().filter(|r| r.entities.is_empty()).count();

    write_file(&g.out, "aligned.jsonl", &to_jsonl(&records)?)?;
    write_json(&g.out, "align_report.json", &report)?;
    println!(
        "records: {}  llm: {}  projected: {}  conflicts: {}  empty: {}",
        report.records, report.llm, report.projected, report.conflicts, report.empty_records
    );
    Ok(())
}

#[derive(Serialize)]
struct Skipped {
    entry_id: String,
    target_index: usize,
    reason: String,
}

#[derive(Serialize)]
struct BuildReport {
    examples: usize,
    skipped: Vec<Skipped>,
}

pub fn build(g: &GlobalOpts, dataset: &Path, aligned: Option<&Path>) -> Result<()> {
    let entries = load_dataset(dataset, g.strict)?;
    let records: Vec<AlignedRecord> = match aligned {
        Some(path) => read_jsonl(path)?,
        None => Vec::new(),
    };
    let mut by_key: HashMap<(&str, usize), &AlignedRecord> = HashMap::new();
    for r in &records {
        if by_key
            .insert((r.entry_id.as_str(), r.target_index), r)
            .is_some()
        {
            bail!(
                "aligned file lists {} / {} twice",
                r.entry_id,
                r.target_index
            );
        }
    }

    let units: Vec<(usize, usize)> = entries
        .iter()
        .enumerate()
        .flat_map(|(i, e)| (0..e.targets.len()).map(move |t| (i, t)))
        .collect();
    let built = Execution::default().map(&units, |&(i, t)| {
        let entry = &entries[i];
        let entities = by_key
            .get(&(entry.id.as_str(), t))
            .map_or(&[][..], |r| r.entities.as_slice());
        build_example(entry, t, entities)
    });

    let mut examples = Vec::with_capacity(built.len());
    let mut report = BuildReport {
        examples: 0,
        skipped: Vec::new(),
    };
    for (&(i, t), result) in units.iter().zip(built) {
        match result {
            Ok(ex) => examples.push(ex),
            Err(err) if g.strict => return Err(err.into()),
            Err(err) => {
                eprintln!("skipped {} / {}: {err}", entries[i].id, t);
                report.skipped.push(Skipped {
                    entry_id: entries[i].id.clone(),
                    target_index: t,
                    reason: err.to_string(),
                });
            }
        }
    }
    report.examples = examples.len();
    write_file(&g.out, "examples.jsonl", &to_jsonl(&examples)?)?;
    write_json(&g.out, "build_report.json", &report)?;
    println!(
        "examples: {}  skipped: {}",
        report.examples,
        report.skipped.len()
    );
    Ok(())
}

pub fn split(g: &GlobalOpts, dataset: &Path, test_fraction: f64, dev_fraction: f64) -> Result<()> {
    let entries = load_dataset(dataset, g.strict)?;
    let spec = SplitSpec {
        seed: g.seed,
        first_test_fraction: test_fraction,
        second_dev_fraction: dev_fraction,
    };
    let split = split_dataset(&entries, &spec)?;
    let manifest = SplitManifest::new(&entries, &spec, &split);
    write_file(&g.out, "train.jsonl", &write_dataset(&split.train))?;
    write_file(&g.out, "dev.jsonl", &write_dataset(&split.dev))?;
    write_file(&g.out, "test.jsonl", &write_dataset(&split.test))?;
    write_json(&g.out, "split_manifest.json", &manifest)?;
    let (train, dev, test) = split.sizes();
    println!("train/dev/test: {train}/{dev}/{test}");
    Ok(())
}

#[derive(Serialize)]
struct ParsedRecord<'a> {
    entry_id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    target_index: Option<usize>,
    #[serde(flatten)]
    parsed: ParsedGeneration,
}

pub fn parse(g: &GlobalOpts, generations: &Path) -> Result<()> {
    let gens: Vec<GenerationRecord> = read_jsonl(generations)?;
    let parsed: Vec<ParsedGeneration> = if g.strict {
        gens.iter()
            .map(|r| {
                parse_generation_strict(&r.generation)
                    .with_context(|| format!("entry {}", r.entry_id))
            })
            .collect::<Result<_>>()?
    } else {
        Execution::default().map(&gens, |r| parse_generation(&r.generation))
    };
    let mut by_structure: BTreeMap<String, usize> = BTreeMap::new();
    for p in &parsed {
        let key = serde_json::to_value(p.structure)?
            .as_str()
            .unwrap_or_default()
            .to_string();
        *by_structure.entry(key).or_default() += 1;
    }
    let records: Vec<ParsedRecord> = gens
        .iter()
        .zip(parsed)
        .map(|(r, parsed)| ParsedRecord {
            entry_id: &r.entry_id,
            target_index: r.target_index,
            parsed,
        })
        .collect();
    write_file(&g.out, "parsed.jsonl", &to_jsonl(&records)?)?;
    let summary: Vec<String> = by_structure
        .iter()
        .map(|(k, v)| format!("{k}: {v}"))
        .collect();
    println!("parsed: {}  ({})", records.len(), summary.join(", "));
    Ok(())
}

#[derive(Serialize)]
struct ScoreFile<'a> {
    max_n: usize,
    smoothing: bool,
    lowercase: bool,
    #[serde(flatten)]
    report: &'a ScoreReport,
}

pub fn score(
    g: &GlobalOpts,
    generations: &Path,
    dataset: &Path,
    max_n: usize,
    smoothing: bool,
    lowercase: bool,
) -> Result<()> {
    let entries = load_dataset(dataset, g.strict)?;
    let gens: Vec<GenerationRecord> = read_jsonl(generations)?;
    let config = BleuConfig {
        max_n,
        smoothing,
        lowercase,
        ..BleuConfig::default()
    };
    let report = score_run(&gens, &entries, &config, g.strict)?;
    write_json(
        &g.out,
        "score.json",
        &ScoreFile {
            max_n,
            smoothing,
            lowercase,
            report: &report,
        },
    )?;
    print!("{}", render_table(&report));
    Ok(())
}

fn render_table(report: &ScoreReport) -> String {
    let b = &report.bleu;
    let precisions: Vec<String> = b
        .precisions
        .iter()
        .map(|p| format!("{:.2}", p * 100.0))
        .collect();
    format!(
        "items          {}\n\
         malformed      {}\n\
         BLEU           {:.2}\n\
         precisions     {}\n\
         brevity        {:.4} (hyp {} / ref {})\n\
         entity match   {:.2}\n",
        report.n_items,
        report.n_malformed,
        b.score * 100.0,
        precisions.join(" / "),
        b.brevity_penalty,
        b.hyp_length,
        b.ref_length,
        report.entity_match_rate * 100.0,
    )
}
