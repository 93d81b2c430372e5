use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::Result;
use clap::{Args, ValueEnum};
use cuneilab::corpus::{write_conll, Corpus, TaggedPhrase};
use cuneilab::crf::{
    default_templates, lexical_templates, train_crf as fit_crf, viterbi_crf, write_crf,
    OptimizerConfig, DEFAULT_L2_SIGMA2,
};
use cuneilab::hmm::{train_hmm as fit_hmm, viterbi_hmm, write_hmm};
use cuneilab::rules::RuleSet;

use super::corpus::load_rules;
use crate::config::Config;
use crate::fail::{data, usage};
use crate::util::{self, create, load_model, output, read_conll, read_lines, Model};

/// Add-k constant used when none is given.
pub const DEFAULT_SMOOTHING_K: f64 = 0.1;

#[derive(Args, Debug)]
pub struct TrainHmmArgs {
    /// Tagged training corpus (CoNLL).
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    tagset: Option<String>,
    /// Add-k smoothing constant.
    #[arg(long)]
    k: Option<f64>,
    /// Model file to write (config key `model`).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn train_hmm(cfg: &Config, a: TrainHmmArgs) -> Result<()> {
    let train = cfg.require_path(&a.train, "train", "--train")?;
    let out = cfg.require_path(&a.out, "model", "--out")?;
    let tagset = util::tagset(&cfg.value_or(&a.tagset, "tagset", "pos".to_string())?)?;
    let k = cfg.value_or(&a.k, "smoothing_k", DEFAULT_SMOOTHING_K)?;
    let corpus = read_conll(&train, &tagset)?;
    let model = fit_hmm(&corpus, &tagset, k).map_err(|e| data(&train, e))?;
    let mut w = create(&out)?;
    write_hmm(&model, &mut w).map_err(|e| data(&out, e))?;
    eprintln!("trained hmm on {} phrases (k = {k})", corpus.len());
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Optimizer {
    /// L-BFGS that also stops once the objective stalls.
    Lbfgs,
    /// Plain gradient descent with backtracking.
    Gd,
}

impl std::str::FromStr for Optimizer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug)]
pub struct TrainCrfArgs {
    #[arg(long)]
    train: Option<PathBuf>,
    #[arg(long)]
    tagset: Option<String>,
    /// Rule file; the built-in rules when omitted.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Lexical and context features only, no rule features.
    #[arg(long)]
    no_rules: bool,
    /// L2 prior variance.
    #[arg(long)]
    l2_sigma2: Option<f64>,
    #[arg(long, value_enum)]
    optimizer: Option<Optimizer>,
    #[arg(long)]
    max_iters: Option<usize>,
    /// Model file to write (config key `model`).
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn train_crf(cfg: &Config, a: TrainCrfArgs) -> Result<()> {
    let train = cfg.require_path(&a.train, "train", "--train")?;
    let out = cfg.require_path(&a.out, "model", "--out")?;
    let tagset = util::tagset(&cfg.value_or(&a.tagset, "tagset", "pos".to_string())?)?;
    let (rules, templates) = if a.no_rules {
        (RuleSet::empty(), lexical_templates())
    } else {
        let rules = load_rules(cfg.path(&a.rules, "rules").as_deref())?;
        let templates = default_templates(&rules);
        (rules, templates)
    };
    let sigma2 = cfg.value_or(&a.l2_sigma2, "l2_sigma2", DEFAULT_L2_SIGMA2)?;
    let mut opt = match cfg.value_or(&a.optimizer, "optimizer", Optimizer::Lbfgs)? {
        Optimizer::Lbfgs => OptimizerConfig::lbfgs(),
        Optimizer::Gd => OptimizerConfig::default(),
    };
    if let Some(n) = cfg.value(&a.max_iters, "max_iters")? {
        opt.max_iters = n;
    }
    let corpus = read_conll(&train, &tagset)?;
    let start = Instant::now();
    let (model, report) =
        fit_crf(&corpus, &tagset, &rules, &templates, sigma2, &opt).map_err(|e| data(&train, e))?;
    let mut w = create(&out)?;
    write_crf(&model, &mut w).map_err(|e| data(&out, e))?;
    eprintln!(
        "trained crf on {} phrases: {} features, {} iterations, objective {:.4}, converged {}, {:.1}s",
        corpus.len(),
        model.n_features(),
        report.iterations,
        report.final_objective(),
        report.converged,
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct TagArgs {
    /// CRF or HMM model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Phrases to tag, one per line.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Expected tag set; must match the model's.
    #[arg(long)]
    tagset: Option<String>,
    /// CoNLL output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn tag(cfg: &Config, a: TagArgs) -> Result<()> {
    let model_path = cfg.require_path(&a.model, "model", "--model")?;
    let input = cfg.require_path(&a.input, "input", "--in")?;
    let model = load_model(&model_path)?;
    if let Some(name) = cfg.value(&a.tagset, "tagset")? {
        let want = util::tagset(&name)?;
        if want.labels() != model.tagset().labels() {
            return Err(usage(format!(
                "model {} uses a different tag set than {name:?}",
                model_path.display()
            )));
        }
    }
    let phrases = read_lines(&input)?;
    let tagged: Vec<TaggedPhrase> = phrases
        .iter()
        .map(|p| {
            let tags = match &model {
                Model::Crf(m) => viterbi_crf(m, p).0,
                Model::Hmm(m) => viterbi_hmm(m, p).0,
            };
            TaggedPhrase {
                phrase: p.clone(),
                tags,
            }
        })
        .collect();
    let corpus = Corpus::new(phrases.config, tagged);
    let mut w = output(&a.out)?;
    write_conll(&corpus, model.tagset(), &mut w)?;
    w.flush()?;
    Ok(())
}
