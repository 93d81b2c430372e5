use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use cuneilab::augment::{
    ft_orchestrate, ne_substitute, run_plan, AugmentError, AugmentPlan, CharOp, EmbeddingTable,
    EntityLexicon, Resources, SynonymLexicon, Technique, TranslatorCommand,
};
use cuneilab::corpus::{write_conll, write_monolingual};

use crate::config::Config;
use crate::fail::{data, data_msg, external, usage};
use crate::util::{self, open, output, read_conll, read_lines};

#[derive(Args, Debug)]
pub struct AugmentArgs {
    /// Monolingual lines, or a CoNLL file with --conll.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Input is tagged CoNLL; only the `ne` technique applies.
    #[arg(long)]
    conll: bool,
    /// Tag set of a CoNLL input.
    #[arg(long)]
    tagset: Option<String>,
    /// Comma-separated `technique:multiplier` list over embedding, lexicon,
    /// charswap and ne. Default: embedding:4,lexicon:4,charswap:4.
    #[arg(long)]
    techniques: Option<String>,
    /// word2vec text-format vectors.
    #[arg(long)]
    embeddings: Option<PathBuf>,
    /// `word<TAB>syn1,syn2,...` lines.
    #[arg(long)]
    synonyms: Option<PathBuf>,
    /// `LABEL<TAB>surface` lines.
    #[arg(long)]
    entities: Option<PathBuf>,
    #[arg(long)]
    cosine_threshold: Option<f64>,
    /// Comma-separated character edits: substitute, delete, insert, swap.
    #[arg(long)]
    charswap_ops: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_techniques(spec: &str) -> Result<Vec<(Technique, usize)>> {
    spec.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (name, mult) = item.split_once(':').unwrap_or((item, "4"));
            let t: Technique = name.trim().parse().map_err(usage)?;
            let m: usize = mult
                .trim()
                .parse()
                .map_err(|_| usage(format!("bad multiplier in {item:?}")))?;
            Ok((t, m))
        })
        .collect()
}

fn load<T>(path: &Path, parse: impl FnOnce(std::io::BufReader<std::fs::File>) -> Result<T, AugmentError>) -> Result<T> {
    parse(open(path)?).map_err(|e| data(path, e))
}

pub fn augment(cfg: &Config, a: AugmentArgs) -> Result<()> {
    let input = cfg.require_path(&a.input, "input", "--in")?;
    let seed = util::seed(cfg, &a.seed)?;
    let techniques = match cfg.value(&a.techniques, "techniques")? {
        Some(spec) => parse_techniques(&spec)?,
        None => AugmentPlan::three_way(seed).techniques,
    };
    let mut plan = AugmentPlan::new(seed);
    for (t, m) in techniques {
        plan = plan.with(t, m);
    }
    if let Some(th) = cfg.value(&a.cosine_threshold, "cosine_threshold")? {
        plan.cosine_threshold = th;
    }
    if let Some(ops) = &a.charswap_ops {
        plan.charswap_ops = ops
            .split(',')
            .map(|s| s.trim().parse::<CharOp>().map_err(usage))
            .collect::<Result<_>>()?;
    }
    plan.validate().map_err(|e| usage(e.to_string()))?;

    let mut res = Resources::default();
    if let Some(p) = cfg.path(&a.embeddings, "embeddings") {
        res.embeddings = Some(load(&p, EmbeddingTable::parse)?);
    }
    if let Some(p) = cfg.path(&a.synonyms, "synonyms") {
        res.synonyms = Some(load(&p, SynonymLexicon::parse)?);
    }
    if let Some(p) = cfg.path(&a.entities, "entities") {
        res.entities = Some(load(&p, EntityLexicon::parse)?);
    }

    let mut w = output(&a.out)?;
    if a.conll {
        let tagset = util::tagset(&cfg.value_or(&a.tagset, "tagset", "ner".to_string())?)?;
        let [(Technique::NeSubstitution, mult)] = plan.techniques[..] else {
            return Err(usage("tagged input supports only --techniques ne:N"));
        };
        let entities = res
            .entities
            .as_ref()
            .ok_or_else(|| usage("the ne technique needs --entities"))?;
        let corpus = read_conll(&input, &tagset)?;
        let out = ne_substitute(&corpus, &tagset, entities, mult, seed).map_err(|e| data_msg(&input, e))?;
        write_conll(&out, &tagset, &mut w)?;
        w.flush()?;
        eprintln!("input_lines\t{}\noutput_lines\t{}", corpus.len(), out.len());
        return Ok(());
    }
    let corpus = read_lines(&input)?;
    let (out, report) = run_plan(&corpus, &plan, &res).map_err(|e| match e {
        AugmentError::MissingResource(t) => usage(format!("technique {t} needs its resource file")),
        other => data_msg(&input, other),
    })?;
    write_monolingual(&out, &mut w)?;
    w.flush()?;
    eprintln!("{report}");
    Ok(())
}

#[derive(Args, Debug)]
pub struct FtRunArgs {
    /// Monolingual source lines.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Translator command, run through `sh -c`; it reads source lines on
    /// standard input and writes one translation per line.
    #[arg(long)]
    translator: Option<String>,
    #[arg(long)]
    shard_size: Option<usize>,
    /// Run directory holding shards, the manifest and merged.tsv. Rerunning
    /// with the same directory resumes.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn ft_run(cfg: &Config, a: FtRunArgs) -> Result<()> {
    let input = cfg.require_path(&a.input, "input", "--in")?;
    let out = cfg.require_path(&a.out, "out", "--out")?;
    let translator = cfg
        .value(&a.translator, "translator")?
        .ok_or_else(|| usage("missing --translator"))?;
    let shard_size = cfg.value_or(&a.shard_size, "shard_size", 1000)?;
    if shard_size == 0 {
        return Err(usage("--shard-size must be positive"));
    }
    let corpus = read_lines(&input)?;
    let cmd = TranslatorCommand::new("sh", &["-c", &translator]);
    let (_, report) = ft_orchestrate(&corpus, &cmd, shard_size, &out).map_err(|e| match e {
        AugmentError::TranslatorFailed { .. } | AugmentError::LineCountMismatch { .. } => {
            external(e.to_string())
        }
        other => data_msg(&out, other),
    })?;
    let mut w = std::io::stdout().lock();
    writeln!(w, "shards\t{}", report.shards)?;
    writeln!(w, "translated\t{}", report.translated)?;
    writeln!(w, "skipped\t{}", report.skipped)?;
    writeln!(w, "pairs\t{}", report.pairs)?;
    writeln!(w, "merged\t{}", report.merged.display())?;
    Ok(())
}
