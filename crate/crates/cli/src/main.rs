//! `eamt`: file-based driver for the corpus pipeline.
//!
//! ```text
//! eamt ingest DATA.json            -> OUT/dataset.jsonl, OUT/ingest_report.json
//! eamt align  --dataset ... [--candidates C.jsonl] [--alignments A.tsv]
//! eamt build  --dataset ... [--aligned OUT/aligned.jsonl]
//! eamt split  --dataset ...
//! eamt parse  --generations G.jsonl
//! eamt score  --generations G.jsonl --dataset OUT/test.jsonl
//! ```

mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "eamt",
    version,
    about = "Entity-aware MT corpus pipeline and scorer"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct GlobalOpts {
    /// Abort on the first invalid record or malformed generation.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Seed for every randomized step; recorded in manifests.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a dataset file and rewrite it as JSONL.
    Ingest { dataset: PathBuf },
    /// Filter LLM candidates, project token alignments and merge both.
    Align {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        candidates: Option<PathBuf>,
        #[arg(long)]
        alignments: Option<PathBuf>,
    },
    /// Emit multitask fine-tuning examples.
    Build {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        aligned: Option<PathBuf>,
    },
    /// Partition a dataset into train/dev/test.
    Split {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 0.2)]
        test_fraction: f64,
        #[arg(long, default_value_t = 0.2)]
        dev_fraction: f64,
    },
    /// Decompose raw generations into their parts.
    Parse {
        #[arg(long)]
        generations: PathBuf,
    },
    /// Score generations against a dataset split.
    Score {
        #[arg(long)]
        generations: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        /// Replace zero n-gram matches by a tiny epsilon.
        #[arg(long)]
        smoothing: bool,
        #[arg(long)]
        lowercase: bool,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let g = &cli.global;
    let result = match cli.command {
        Command::Ingest { dataset } => commands::ingest(g, &dataset),
        Command::Align {
            dataset,
            candidates,
            alignments,
        } => commands::align(g, &dataset, candidates.as_deref(), alignments.as_deref()),
        Command::Build { dataset, aligned } => commands::build(g, &dataset, aligned.as_deref()),
        Command::Split {
            dataset,
            test_fraction,
            dev_fraction,
        } => commands::split(g, &dataset, test_fraction, dev_fraction),
        Command::Parse { generations } => commands::parse(g, &generations),
        Command::Score {
            generations,
            dataset,
            max_n,
            smoothing,
            lowercase,
        } => commands::score(g, &generations, &dataset, max_n, smoothing, lowercase),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
