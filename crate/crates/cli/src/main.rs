//! `softdistill` — train and evaluate soft-contrastive cross-lingual
//! sentence embeddings on parallel corpora.
//!
//! Exit codes: 0 success, 2 usage or configuration error, 3 numerical
//! failure (training divergence).

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use softdistill::eval::MarginMode;

#[derive(Parser)]
#[command(
    name = "softdistill",
    version,
    about = "Soft-contrastive cross-lingual embedding distillation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a student encoder from a run config.
    Train {
        /// Run configuration file (flat key=value).
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Exact output directory (default: <out>/<confighash>-<timestamp>).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate bitext retrieval accuracy and xSIM error on an aligned corpus.
    EvalBitext {
        #[arg(long)]
        checkpoint: PathBuf,
        /// Aligned corpus TSV (src <TAB> tgt).
        #[arg(long)]
        corpus: PathBuf,
        /// Gold alignment index file (`i <TAB> j`); identity if omitted.
        #[arg(long)]
        gold: Option<PathBuf>,
        /// Neighborhood size for margin scoring.
        #[arg(long, default_value_t = 4)]
        k: usize,
        /// Margin mode: ratio or cosine.
        #[arg(long, default_value = "ratio")]
        margin: String,
        /// Also write report.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate Spearman correlation on an STS file.
    EvalSts {
        #[arg(long)]
        checkpoint: PathBuf,
        /// STS TSV (sentence_a <TAB> sentence_b <TAB> score in [0,5]).
        #[arg(long)]
        sts: PathBuf,
        /// Also write report.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print hard/priority/average label matrices for one batch.
    InspectLabels {
        #[arg(long)]
        config: PathBuf,
        /// Number of leading corpus pairs to use.
        #[arg(long, default_value_t = 8)]
        batch: usize,
    },
    /// Generate a synthetic bilingual corpus, teacher table, and gold index.
    SampleData {
        #[arg(long, default_value_t = 20)]
        concepts: usize,
        #[arg(long, default_value_t = 600)]
        pairs: usize,
        /// Vocabulary size per language.
        #[arg(long, default_value_t = 100)]
        vocab: usize,
        /// Teacher noise level sigma.
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 16)]
        teacher_dim: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value = "aa")]
        src_lang: String,
        #[arg(long, default_value = "bb")]
        tgt_lang: String,
        /// Output directory for corpus.tsv, teacher.tsv, gold.tsv.
        #[arg(long, default_value = "synthetic-data")]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> softdistill::Result<()> {
    match cli.command {
        Command::Train { config, seed, out } => commands::cmd_train(&config, seed, out.as_deref()),
        Command::EvalBitext {
            checkpoint,
            corpus,
            gold,
            k,
            margin,
            out,
        } => {
            let margin: MarginMode = margin.parse()?;
            commands::cmd_eval_bitext(
                &checkpoint,
                &corpus,
                gold.as_deref(),
                k,
                margin,
                out.as_deref(),
            )
        }
        Command::EvalSts {
            checkpoint,
            sts,
            out,
        } => commands::cmd_eval_sts(&checkpoint, &sts, out.as_deref()),
        Command::InspectLabels { config, batch } => commands::cmd_inspect_labels(&config, batch),
        Command::SampleData {
            concepts,
            pairs,
            vocab,
            noise,
            teacher_dim,
            seed,
            src_lang,
            tgt_lang,
            out,
        } => commands::cmd_sample_data(
            concepts,
            pairs,
            vocab,
            noise,
            teacher_dim,
            seed,
            &src_lang,
            &tgt_lang,
            &out,
        ),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
