use std::io::Write;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use cuneilab::interpret::{
    leave_one_out, occlusion, parse_annotation_masks, plausibility, read_attribution,
    render as render_map, shapley, sign_occlusion, write_attribution, Correctness, CrfScorer,
    Decision, HmmScorer, InterpretError, Method, RenderFormat, ScoredModel, ShapleyMode,
};

use crate::config::Config;
use crate::fail::{data, usage};
use crate::util::{self, load_model, open, output, read_conll, read_lines, Model};

#[derive(Args, Debug)]
pub struct AttributeArgs {
    /// CRF or HMM model file.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Phrases, one per line.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// 1-based line of the phrase to explain.
    #[arg(long, default_value_t = 1)]
    phrase: usize,
    /// 0-based token position of the decision.
    #[arg(long)]
    position: usize,
    /// Label to explain; the model's own prediction when omitted.
    #[arg(long)]
    tag: Option<String>,
    /// occlusion, leave-one-out, shapley-exact or shapley-sampled:N.
    #[arg(long)]
    method: Option<Method>,
    /// Also compute per-sign occlusion scores.
    #[arg(long)]
    signs: bool,
    /// Gold CoNLL aligned with --in, to report whether the prediction is
    /// correct.
    #[arg(long)]
    gold: Option<PathBuf>,
    /// Annotated evidence (`id<TAB>i,j,...`) for a plausibility score.
    #[arg(long)]
    masks: Option<PathBuf>,
    /// Needed for shapley-sampled.
    #[arg(long)]
    seed: Option<u64>,
    /// Attribution file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn attribute(cfg: &Config, a: AttributeArgs) -> Result<()> {
    let model_path = cfg.require_path(&a.model, "model", "--model")?;
    let input = cfg.require_path(&a.input, "input", "--in")?;
    let method = cfg.value_or(&a.method, "method", Method::Occlusion)?;
    let mode = match method {
        Method::ShapleyExact => Some(ShapleyMode::Exact),
        Method::ShapleySampled(samples) => Some(ShapleyMode::Sampled {
            samples,
            seed: util::seed(cfg, &a.seed)?,
        }),
        _ => None,
    };
    let model = load_model(&model_path)?;
    let tagset = model.tagset().clone();
    let phrases = read_lines(&input)?;
    if a.phrase == 0 || a.phrase > phrases.len() {
        return Err(usage(format!("--phrase must be in 1..={}", phrases.len())));
    }
    let phrase = &phrases.entries[a.phrase - 1];
    if a.position >= phrase.len() {
        return Err(usage(format!(
            "--position {} is outside phrase {} ({} tokens)",
            a.position,
            a.phrase,
            phrase.len()
        )));
    }

    let crf;
    let hmm;
    let (scorer, predicted): (&dyn ScoredModel, Decision) = match &model {
        Model::Crf(m) => {
            crf = CrfScorer(m);
            let p = crf.predicted(phrase, a.position)?;
            (&crf, p)
        }
        Model::Hmm(m) => {
            hmm = HmmScorer(m);
            let p = hmm.predicted(phrase, a.position)?;
            (&hmm, p)
        }
    };
    let target = match &a.tag {
        None => predicted.clone(),
        Some(label) => {
            let tag = tagset
                .index_of(label)
                .ok_or_else(|| usage(format!("label {label:?} not in the model's tag set")))?;
            Decision::new(a.position, tag, &tagset)?
        }
    };

    let mut map = match (method, mode) {
        (Method::Occlusion, _) => occlusion(scorer, phrase, &target)?,
        (Method::LeaveOneOut, _) => leave_one_out(scorer, phrase, &target)?,
        (_, Some(mode)) => shapley(scorer, phrase, &target, mode).map_err(|e| match e {
            InterpretError::TooManyTokensForExact { .. } => usage(e.to_string()),
            other => other.into(),
        })?,
        _ => unreachable!("shapley methods carry a mode"),
    };
    if a.signs {
        map.sign_scores = Some(sign_occlusion(scorer, phrase, &target)?);
    }

    let mut w = output(&a.out)?;
    write_attribution(&map, &mut w)?;
    w.flush()?;

    eprintln!("target\t{target}");
    eprintln!("predicted\t{}", predicted.label);
    eprintln!("baseline\t{:.4}", map.baseline_score);
    let ranking: Vec<String> = map.ranking().iter().map(usize::to_string).collect();
    eprintln!("ranking\t{}", ranking.join(","));
    if let Some(gold_path) = &a.gold {
        let gold = read_conll(gold_path, &tagset)?;
        let g = gold.entries.get(a.phrase - 1).ok_or_else(|| usage("--gold has fewer phrases than --in"))?;
        if g.phrase.surfaces().ne(phrase.surfaces()) {
            return Err(usage(format!("--gold phrase {} differs from --in", a.phrase)));
        }
        let verdict = if g.tags[a.position] == predicted.tag { "correct" } else { "wrong" };
        eprintln!("correctness\t{verdict}");
    }
    if let Some(mask_path) = &a.masks {
        let masks = parse_annotation_masks(open(mask_path)?).map_err(|e| data(mask_path, e))?;
        match masks.iter().find(|m| m.phrase_id == phrase.id) {
            Some(m) => eprintln!("plausibility\t{:.4}", plausibility(&map, m).map_err(|e| data(mask_path, e))?),
            None => eprintln!("plausibility\tno annotation for {}", phrase.id),
        }
    }
    Ok(())
}

#[derive(Args, Debug)]
pub struct RenderArgs {
    /// Attribution file written by `attribute`.
    #[arg(long = "in")]
    input: PathBuf,
    /// html or ansi.
    #[arg(long, default_value = "html")]
    format: RenderFormat,
    /// correct, wrong or unknown.
    #[arg(long, default_value = "unknown")]
    correctness: Correctness,
    #[arg(long)]
    out: Option<PathBuf>,
}

pub fn render(_cfg: &Config, a: RenderArgs) -> Result<()> {
    let map = read_attribution(open(&a.input)?).map_err(|e| data(&a.input, e))?;
    let mut w = output(&a.out)?;
    w.write_all(&render_map(&map, a.format, a.correctness))?;
    w.flush()?;
    Ok(())
}
