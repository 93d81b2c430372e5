//! `cuneilab` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error (reported as
//! `file:line: message`), 3 external translator failure.

mod commands;
mod config;
mod fail;
mod util;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::Config;

#[derive(Parser, Debug)]
#[command(name = "cuneilab", version, about = "Sequence labeling, augmentation and attribution for transliterated cuneiform")]
struct Cli {
    /// Flat `key = value` config file; flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Split a corpus into train/test files, or generate a synthetic one.
    Prepare(commands::corpus::PrepareArgs),
    /// Validate a rule file and print which rules fire on a sample.
    RulesLint(commands::corpus::RulesLintArgs),
    /// Train an HMM tagger.
    TrainHmm(commands::model::TrainHmmArgs),
    /// Train a rule-augmented CRF tagger.
    TrainCrf(commands::model::TrainCrfArgs),
    /// Tag plain-text phrases with a trained model.
    Tag(commands::model::TagArgs),
    /// Token-level precision/recall/F1 of predictions against gold.
    Eval(commands::eval::EvalArgs),
    /// Corpus-level BLEU of hypotheses against references.
    Bleu(commands::eval::BleuArgs),
    /// Cohen's kappa between two label files.
    Kappa(commands::eval::KappaArgs),
    /// Summarise human ratings: per-model means and annotator agreement.
    HumanEval(commands::eval::HumanEvalArgs),
    /// Collect eval results into one comparison table.
    Report(commands::eval::ReportArgs),
    /// Augment a monolingual (or tagged, for `ne`) corpus.
    Augment(commands::augment::AugmentArgs),
    /// Forward-translate a monolingual corpus shard by shard.
    FtRun(commands::augment::FtRunArgs),
    /// Attribute one tagging decision to the input tokens.
    Attribute(commands::interpret::AttributeArgs),
    /// Render an attribution map as HTML or ANSI.
    Render(commands::interpret::RenderArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    match cli.command {
        Command::Prepare(a) => commands::corpus::prepare(&cfg, a),
        Command::RulesLint(a) => commands::corpus::rules_lint(&cfg, a),
        Command::TrainHmm(a) => commands::model::train_hmm(&cfg, a),
        Command::TrainCrf(a) => commands::model::train_crf(&cfg, a),
        Command::Tag(a) => commands::model::tag(&cfg, a),
        Command::Eval(a) => commands::eval::eval(&cfg, a),
        Command::Bleu(a) => commands::eval::bleu(&cfg, a),
        Command::Kappa(a) => commands::eval::kappa(&cfg, a),
        Command::HumanEval(a) => commands::eval::human_eval(&cfg, a),
        Command::Report(a) => commands::eval::report(&cfg, a),
        Command::Augment(a) => commands::augment::augment(&cfg, a),
        Command::FtRun(a) => commands::augment::ft_run(&cfg, a),
        Command::Attribute(a) => commands::interpret::attribute(&cfg, a),
        Command::Render(a) => commands::interpret::render(&cfg, a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(fail::Exit::Usage as u8)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            // a closed downstream pipe is not our failure
            if err
                .downcast_ref::<std::io::Error>()
                .is_some_and(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
            {
                return ExitCode::SUCCESS;
            }
            eprintln!("error: {err:#}");
            ExitCode::from(fail::exit_code(&err) as u8)
        }
    }
}
