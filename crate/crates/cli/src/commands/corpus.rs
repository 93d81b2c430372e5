use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::{Args, ValueEnum};
use cuneilab::corpus::{
    build_comp, parse_parallel_tsv, split_train_test, write_conll, write_monolingual,
    write_parallel_tsv, Corpus, CorpusConfig, TaggedPhrase, DEFAULT_TERMINATORS,
};
use cuneilab::rules::{apply_rules, default_rules, parse_rules, RuleSet};
use cuneilab::synth::{synth_monolingual, synth_resources, synth_tagged, DEFAULT_NOISE};

use crate::config::Config;
use crate::fail::{data, data_msg, usage};
use crate::util::{self, create, open, read_conll, read_lines, read_text, write_file};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InputFormat {
    Conll,
    Monolingual,
    Parallel,
}

impl std::str::FromStr for InputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, true)
    }
}

#[derive(Args, Debug)]
pub struct PrepareArgs {
    /// Input corpus; not needed with --synthetic.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<InputFormat>,
    /// Tag set of a CoNLL input (pos or ner).
    #[arg(long)]
    tagset: Option<String>,
    /// Generate this many rule-governed tagged phrases instead of reading
    /// --in; also writes matching augmentation resources and monolingual
    /// text.
    #[arg(long, value_name = "N")]
    synthetic: Option<usize>,
    /// Label noise for --synthetic.
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    test_fraction: Option<f64>,
    /// Merge segment pairs into sentence pairs before splitting (parallel).
    #[arg(long)]
    comp: bool,
    /// Bitext configuration of a parallel input.
    #[arg(long, default_value = "UrIIISeg")]
    bitext: CorpusConfig,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn write_tagged(dir: &Path, name: &str, corpus: &Corpus<TaggedPhrase>, tagset: &cuneilab::corpus::TagSet) -> Result<()> {
    let path = dir.join(name);
    write_conll(corpus, tagset, create(&path)?).map_err(|e| data(&path, e))
}

pub fn prepare(cfg: &Config, a: PrepareArgs) -> Result<()> {
    let out = cfg.require_path(&a.out, "out", "--out")?;
    let seed = util::seed(cfg, &a.seed)?;
    let fraction = cfg.value_or(&a.test_fraction, "test_fraction", 0.1)?;
    let tagset_name = cfg.value_or(&a.tagset, "tagset", "pos".to_string())?;
    let mut summary = Vec::new();

    if let Some(n) = a.synthetic {
        let noise = cfg.value_or(&a.noise, "noise", DEFAULT_NOISE)?;
        let tagset = util::tagset(&tagset_name)?;
        let synth = synth_tagged(n, seed, noise);
        let corpus = if tagset_name.eq_ignore_ascii_case("ner") {
            synth.ner
        } else {
            synth.pos
        };
        let (train, test) = split_train_test(&corpus, fraction, seed).map_err(|e| usage(e.to_string()))?;
        write_tagged(&out, "train.conll", &train, &tagset)?;
        write_tagged(&out, "test.conll", &test, &tagset)?;
        let test_lines = Corpus::new(test.config, test.entries.iter().map(|t| t.phrase.clone()).collect());
        write_monolingual(&test_lines, create(&out.join("test.txt"))?)?;
        write_monolingual(&synth_monolingual(n, seed.wrapping_add(1)), create(&out.join("mono.txt"))?)?;
        let res = synth_resources(seed.wrapping_add(2));
        if let Some(e) = &res.embeddings {
            write_file(&out.join("embeddings.vec"), e.to_text().as_bytes())?;
        }
        if let Some(s) = &res.synonyms {
            write_file(&out.join("synonyms.tsv"), s.to_text().as_bytes())?;
        }
        if let Some(e) = &res.entities {
            write_file(&out.join("entities.tsv"), e.to_text().as_bytes())?;
        }
        write_file(&out.join("rules.tsv"), cuneilab::rules::format_rules(&default_rules()).as_bytes())?;
        summary.push(("train", train.len()));
        summary.push(("test", test.len()));
    } else {
        let input = cfg.require_path(&a.input, "input", "--in")?;
        let format = cfg.value_or(&a.format, "format", InputFormat::Conll)?;
        match format {
            InputFormat::Conll => {
                let tagset = util::tagset(&tagset_name)?;
                let corpus = read_conll(&input, &tagset)?;
                let (train, test) = split_train_test(&corpus, fraction, seed).map_err(|e| data(&input, e))?;
                write_tagged(&out, "train.conll", &train, &tagset)?;
                write_tagged(&out, "test.conll", &test, &tagset)?;
                let lines = Corpus::new(test.config, test.entries.iter().map(|t| t.phrase.clone()).collect());
                write_monolingual(&lines, create(&out.join("test.txt"))?)?;
                summary.push(("train", train.len()));
                summary.push(("test", test.len()));
            }
            InputFormat::Monolingual => {
                let corpus = read_lines(&input)?;
                let (train, test) = split_train_test(&corpus, fraction, seed).map_err(|e| data(&input, e))?;
                write_monolingual(&train, create(&out.join("train.txt"))?)?;
                write_monolingual(&test, create(&out.join("test.txt"))?)?;
                summary.push(("train", train.len()));
                summary.push(("test", test.len()));
            }
            InputFormat::Parallel => {
                let mut corpus = parse_parallel_tsv(open(&input)?, a.bitext).map_err(|e| data(&input, e))?;
                if a.comp {
                    let merged = build_comp(&corpus, &DEFAULT_TERMINATORS);
                    if merged.trailing_unterminated {
                        eprintln!("warning: last sentence has no terminator");
                    }
                    summary.push(("segments", corpus.len()));
                    corpus = merged.corpus;
                }
                let (train, test) = split_train_test(&corpus, fraction, seed).map_err(|e| data(&input, e))?;
                write_parallel_tsv(&train, create(&out.join("train.tsv"))?)?;
                write_parallel_tsv(&test, create(&out.join("test.tsv"))?)?;
                summary.push(("train", train.len()));
                summary.push(("test", test.len()));
            }
        }
    }
    let mut stdout = std::io::stdout().lock();
    for (k, v) in summary {
        writeln!(stdout, "{k}\t{v}")?;
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct RulesLintArgs {
    /// Rule file (KIND, PATTERN, HINT, ID per tab-separated line); the
    /// built-in rules when omitted.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Sample phrases, one per line, to show which rules fire.
    #[arg(long)]
    sample: Option<PathBuf>,
    /// Print the rule set in file format instead of linting a sample.
    #[arg(long)]
    dump: bool,
}

pub fn load_rules(path: Option<&Path>) -> Result<RuleSet> {
    match path {
        None => Ok(default_rules()),
        Some(p) => parse_rules(&read_text(p)?).map_err(|e| data(p, e)),
    }
}

pub fn rules_lint(cfg: &Config, a: RulesLintArgs) -> Result<()> {
    let path = cfg.path(&a.rules, "rules");
    let rules = load_rules(path.as_deref())?;
    let mut out = std::io::stdout().lock();
    if a.dump {
        write!(out, "{}", cuneilab::rules::format_rules(&rules))?;
        return Ok(());
    }
    writeln!(out, "rules\t{}", rules.len())?;
    if let Some(sample) = &a.sample {
        let corpus = read_lines(sample)?;
        let mut fired = vec![0usize; rules.len()];
        for phrase in &corpus {
            for i in 0..phrase.len() {
                let ids = apply_rules(&rules, phrase, i).map_err(|e| data_msg(sample, e))?;
                for (k, r) in rules.rules().iter().enumerate() {
                    if ids.contains(r.id.as_str()) {
                        fired[k] += 1;
                    }
                }
                let ids: Vec<&str> = ids.into_iter().collect();
                writeln!(
                    out,
                    "{}\t{i}\t{}\t{}",
                    phrase.id,
                    phrase.surface(i).unwrap_or(""),
                    if ids.is_empty() { "-".to_string() } else { ids.join(",") }
                )?;
            }
        }
        for (r, n) in rules.rules().iter().zip(fired) {
            writeln!(out, "fired\t{}\t{n}", r.id)?;
        }
    }
    Ok(())
}
