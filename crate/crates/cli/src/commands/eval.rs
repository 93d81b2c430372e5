use std::fmt::Write as _;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use anyhow::Result;
use clap::Args;
use cuneilab::corpus::{parse_conll, TagSet};
use cuneilab::metrics::{
    bleu as corpus_bleu, cohen_kappa, error_rate_percent, human_eval_report, parse_human_eval,
    prf1, sentence_bleu, Averaging,
};

use crate::config::Config;
use crate::fail::{data, data_at, data_msg, usage};
use crate::util::{self, open, output, read_conll};

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Gold CoNLL file.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Predicted CoNLL file, aligned phrase by phrase with the gold file.
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Tag set; inferred from the gold labels when omitted.
    #[arg(long)]
    tagset: Option<String>,
    /// weighted, micro or per-class (macro).
    #[arg(long = "avg")]
    averaging: Option<Averaging>,
    /// Name recorded in the result for `report`.
    #[arg(long, default_value = "model")]
    name: String,
    /// Also print the per-class table to standard error.
    #[arg(long)]
    table: bool,
    /// Manual audit: number of words checked (use with --wrong, without
    /// gold/pred files).
    #[arg(long, requires = "wrong")]
    scored: Option<usize>,
    /// Manual audit: number of misclassified words.
    #[arg(long, requires = "scored")]
    wrong: Option<usize>,
    /// Result file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn infer_tagset(gold: &Path) -> Result<TagSet> {
    for name in ["pos", "ner"] {
        let ts = util::tagset(name)?;
        if parse_conll(open(gold)?, &ts).is_ok() {
            return Ok(ts);
        }
    }
    Err(data_msg(gold, "labels match neither the pos nor the ner tag set"))
}

pub fn eval(cfg: &Config, a: EvalArgs) -> Result<()> {
    let mut text = String::new();
    if let (Some(scored), Some(wrong)) = (a.scored, a.wrong) {
        if wrong > scored {
            return Err(usage("--wrong exceeds --scored"));
        }
        writeln!(text, "scored {scored}")?;
        writeln!(text, "wrong {wrong}")?;
        writeln!(text, "error_rate_percent {:.2}", error_rate_percent(scored, wrong))?;
    } else {
        let gold = cfg.require_path(&a.gold, "gold", "--gold")?;
        let pred = cfg.require_path(&a.pred, "pred", "--pred")?;
        let tagset = match cfg.value(&a.tagset, "tagset")? {
            Some(name) => util::tagset(&name)?,
            None => infer_tagset(&gold)?,
        };
        let averaging = cfg.value_or(&a.averaging, "averaging", Averaging::Weighted)?;
        let g = read_conll(&gold, &tagset)?;
        let p = read_conll(&pred, &tagset)?;
        let report = prf1(&g.entries, &p.entries, &tagset).map_err(|e| data(&pred, e))?;
        let s = report.averaged(averaging);
        let avg_name = match averaging {
            Averaging::PerClass => "per-class",
            Averaging::Micro => "micro",
            Averaging::Weighted => "weighted",
        };
        writeln!(text, "model {}", a.name)?;
        writeln!(text, "tagset {}", tagset.name)?;
        writeln!(text, "averaging {avg_name}")?;
        writeln!(text, "precision {:.4}", s.precision)?;
        writeln!(text, "recall {:.4}", s.recall)?;
        writeln!(text, "f1 {:.4}", s.f1)?;
        writeln!(text, "tokens {}", report.confusion.total())?;
        writeln!(text, "errors {}", report.errors())?;
        if a.table {
            eprint!("{}", report.table());
        }
    }
    let mut w = output(&a.out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn read_nonempty_lines(path: &Path) -> Result<Vec<String>> {
    let mut lines = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| data_msg(path, e))?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            return Err(data_at(path, i + 1, "empty line"));
        }
        lines.push(line.to_string());
    }
    Ok(lines)
}

#[derive(Args, Debug)]
pub struct BleuArgs {
    /// Hypotheses, one segment per line.
    #[arg(long)]
    hyp: PathBuf,
    /// References, aligned line by line.
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    max_n: Option<usize>,
    /// Also print smoothed sentence-level BLEU per line.
    #[arg(long)]
    sentence: bool,
}

pub fn bleu(cfg: &Config, a: BleuArgs) -> Result<()> {
    let max_n = cfg.value_or(&a.max_n, "max_n", 4)?;
    let hyps = read_nonempty_lines(&a.hyp)?;
    let refs = read_nonempty_lines(&a.reference)?;
    let score = corpus_bleu(&hyps, &refs, max_n).map_err(|e| data(&a.hyp, e))?;
    let mut out = std::io::stdout().lock();
    if a.sentence {
        for (i, (h, r)) in hyps.iter().zip(&refs).enumerate() {
            writeln!(out, "sentence {} {:.4}", i + 1, sentence_bleu(h, r, max_n))?;
        }
    }
    writeln!(out, "segments {}", hyps.len())?;
    writeln!(out, "bleu {score:.4}")?;
    writeln!(out, "bleu_100 {:.2}", 100.0 * score)?;
    Ok(())
}

#[derive(Args, Debug)]
pub struct KappaArgs {
    /// First annotator's labels, one item per line.
    #[arg(long)]
    a: PathBuf,
    /// Second annotator's labels, aligned with the first.
    #[arg(long)]
    b: PathBuf,
}

pub fn kappa(_cfg: &Config, a: KappaArgs) -> Result<()> {
    let x = read_nonempty_lines(&a.a)?;
    let y = read_nonempty_lines(&a.b)?;
    let x: Vec<&str> = x.iter().map(|s| s.trim()).collect();
    let y: Vec<&str> = y.iter().map(|s| s.trim()).collect();
    let k = cohen_kappa(&x, &y).map_err(|e| data(&a.b, e))?;
    let agree = x.iter().zip(&y).filter(|(p, q)| p == q).count();
    println!("items {}", x.len());
    println!("agreement {:.4}", agree as f64 / x.len() as f64);
    println!("kappa {k:.4}");
    Ok(())
}

#[derive(Args, Debug)]
pub struct HumanEvalArgs {
    /// `model<TAB>example<TAB>annotator<TAB>score` lines, scores 1–3.
    #[arg(long = "in")]
    input: Option<PathBuf>,
}

pub fn human_eval(cfg: &Config, a: HumanEvalArgs) -> Result<()> {
    let input = cfg.require_path(&a.input, "input", "--in")?;
    let records = parse_human_eval(open(&input)?).map_err(|e| data(&input, e))?;
    let report = human_eval_report(&records).map_err(|e| data(&input, e))?;
    print!("{}", report.render());
    Ok(())
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Result files written by `eval`.
    #[arg(required = true)]
    results: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
struct EvalResult {
    model: String,
    tagset: String,
    averaging: String,
    precision: f64,
    recall: f64,
    f1: f64,
    tokens: u64,
}

fn parse_result(path: &Path) -> Result<EvalResult> {
    let text = util::read_text(path)?;
    let mut fields = std::collections::BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once(' ') else {
            return Err(data_at(path, i + 1, "expected `key value`"));
        };
        fields.insert(k.to_string(), (i + 1, v.trim().to_string()));
    }
    let get = |k: &str| {
        fields
            .get(k)
            .cloned()
            .ok_or_else(|| data_msg(path, format!("missing {k:?}; not an eval result")))
    };
    let num = |k: &str| -> Result<f64> {
        let (line, v) = get(k)?;
        v.parse::<f64>()
            .ok()
            .filter(|x| (0.0..=1.0).contains(x))
            .ok_or_else(|| data_at(path, line, format!("bad {k} {v:?}")))
    };
    let (tline, tokens) = get("tokens")?;
    Ok(EvalResult {
        model: get("model")?.1,
        tagset: get("tagset")?.1,
        averaging: get("averaging")?.1,
        precision: num("precision")?,
        recall: num("recall")?,
        f1: num("f1")?,
        tokens: tokens
            .parse()
            .map_err(|_| data_at(path, tline, format!("bad tokens {tokens:?}")))?,
    })
}

pub fn report(_cfg: &Config, a: ReportArgs) -> Result<()> {
    if a.results.is_empty() {
        return Err(usage("no eval result files given"));
    }
    let results = a
        .results
        .iter()
        .map(|p| parse_result(p))
        .collect::<Result<Vec<_>>>()?;
    let width = results.iter().map(|r| r.model.len()).max().unwrap_or(5).max(5);
    let mut text = String::new();
    writeln!(
        text,
        "{:<width$}  {:<6} {:<9} {:>9} {:>9} {:>9} {:>8}",
        "model", "tagset", "avg", "precision", "recall", "f1", "tokens"
    )?;
    for r in &results {
        writeln!(
            text,
            "{:<width$}  {:<6} {:<9} {:>9.4} {:>9.4} {:>9.4} {:>8}",
            r.model, r.tagset, r.averaging, r.precision, r.recall, r.f1, r.tokens
        )?;
    }
    writeln!(text)?;
    for r in &results {
        writeln!(text, "f1.{} {:.4}", r.model, r.f1)?;
    }
    // first of the best on ties
    let best = results
        .iter()
        .fold(&results[0], |b, r| if r.f1 > b.f1 { r } else { b });
    writeln!(text, "best {}", best.model)?;
    let mut w = output(&a.out)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}
