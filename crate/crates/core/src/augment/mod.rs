//! Data augmentation: named-entity substitution on tagged data, text
//! perturbations on monolingual lines, and a forward-translation driver
//! around an external translator.

mod ft;
mod ne;
mod resources;
mod text;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::corpus::{Corpus, CorpusError, Phrase};
use crate::util::mix_seed;

pub use ft::{ft_orchestrate, FtReport, TranslatorCommand, FT_MANIFEST, FT_MERGED, FT_MAGIC};
pub use ne::ne_substitute;
pub use resources::{cosine, EmbeddingTable, EntityLexicon, SynonymLexicon};
pub use text::{
    apply_char_edit, charswap, embedding_substitute, lexicon_substitute, CharOp, ALL_CHAR_OPS,
};

pub const DEFAULT_MULTIPLIER: usize = 4;
pub const DEFAULT_COSINE_THRESHOLD: f64 = 0.8;

#[derive(Debug, Error)]
pub enum AugmentError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("vector for {word:?} has dimension {found}, expected {expected}")]
    DimensionMismatch {
        word: String,
        expected: usize,
        found: usize,
    },
    #[error("vector for {0:?} has a non-finite component")]
    NonFiniteVector(String),
    #[error("{0} resource is empty")]
    EmptyResource(&'static str),
    #[error("invalid resource: {0}")]
    InvalidResource(String),
    #[error("entity lexicon covers no entity label present in the corpus")]
    EmptyLexicon,
    #[error("line of {len} characters is too short for {op}")]
    LineTooShort { len: usize, op: CharOp },
    #[error("cosine threshold {0} is outside (0, 1]")]
    InvalidThreshold(f64),
    #[error("invalid plan: {0}")]
    InvalidPlan(String),
    #[error("technique {0} needs a resource that was not supplied")]
    MissingResource(Technique),
    #[error("translator failed on shard {shard} (exit code {code:?})")]
    TranslatorFailed { shard: usize, code: Option<i32> },
    #[error("translator returned {got} lines for shard {shard} of {expected} lines")]
    LineCountMismatch {
        shard: usize,
        expected: usize,
        got: usize,
    },
    #[error("manifest does not match this run: {0}")]
    ManifestMismatch(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Technique {
    EmbeddingNeighbor,
    Lexicon,
    CharSwap,
    NeSubstitution,
}

impl Technique {
    fn tag(self) -> &'static str {
        match self {
            Technique::EmbeddingNeighbor => "emb",
            Technique::Lexicon => "lex",
            Technique::CharSwap => "chr",
            Technique::NeSubstitution => "ne",
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Technique::EmbeddingNeighbor => "embedding",
            Technique::Lexicon => "lexicon",
            Technique::CharSwap => "charswap",
            Technique::NeSubstitution => "ne",
        })
    }
}

impl FromStr for Technique {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "embedding" => Ok(Technique::EmbeddingNeighbor),
            "lexicon" => Ok(Technique::Lexicon),
            "charswap" => Ok(Technique::CharSwap),
            "ne" => Ok(Technique::NeSubstitution),
            other => Err(format!("unknown technique {other:?}")),
        }
    }
}

/// Which techniques to run, how many variants each, and their knobs.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentPlan {
    /// Techniques in run order with their multipliers.
    pub techniques: Vec<(Technique, usize)>,
    pub seed: u64,
    pub cosine_threshold: f64,
    pub charswap_ops: Vec<CharOp>,
    pub charswap_edits: usize,
    /// Word replacements per variant for the substitution techniques.
    pub max_replacements: usize,
}

impl AugmentPlan {
    /// No techniques; running it returns the input unchanged.
    pub fn new(seed: u64) -> Self {
        AugmentPlan {
            techniques: Vec::new(),
            seed,
            cosine_threshold: DEFAULT_COSINE_THRESHOLD,
            charswap_ops: ALL_CHAR_OPS.to_vec(),
            charswap_edits: 1,
            max_replacements: 2,
        }
    }

    /// Embedding, lexicon and character perturbation at the default
    /// multiplier each: roughly twelve variants per line.
    pub fn three_way(seed: u64) -> Self {
        AugmentPlan::new(seed)
            .with(Technique::EmbeddingNeighbor, DEFAULT_MULTIPLIER)
            .with(Technique::Lexicon, DEFAULT_MULTIPLIER)
            .with(Technique::CharSwap, DEFAULT_MULTIPLIER)
    }

    /// Adds or replaces a technique.
    pub fn with(mut self, technique: Technique, multiplier: usize) -> Self {
        match self.techniques.iter_mut().find(|(t, _)| *t == technique) {
            Some(entry) => entry.1 = multiplier,
            None => self.techniques.push((technique, multiplier)),
        }
        self
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        if let Some((t, _)) = self.techniques.iter().find(|(_, m)| *m == 0) {
            return Err(AugmentError::InvalidPlan(format!("multiplier for {t} must be ≥ 1")));
        }
        if !(self.cosine_threshold > 0.0 && self.cosine_threshold <= 1.0) {
            return Err(AugmentError::InvalidThreshold(self.cosine_threshold));
        }
        let uses_charswap = self.techniques.iter().any(|(t, _)| *t == Technique::CharSwap);
        if uses_charswap && (self.charswap_ops.is_empty() || self.charswap_edits == 0) {
            return Err(AugmentError::InvalidPlan(
                "charswap needs at least one edit kind and one edit per line".into(),
            ));
        }
        Ok(())
    }
}

/// External resources a plan may draw on.
#[derive(Debug, Clone, Default)]
pub struct Resources {
    pub embeddings: Option<EmbeddingTable>,
    pub synonyms: Option<SynonymLexicon>,
    pub entities: Option<EntityLexicon>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AugmentReport {
    pub input_lines: usize,
    pub output_lines: usize,
    /// Variants kept per technique, in plan order.
    pub kept: Vec<(Technique, usize)>,
    /// Variants dropped because they equal an original line.
    pub dropped_duplicates: usize,
    /// Variants dropped because they no longer tokenize.
    pub dropped_invalid: usize,
}

impl AugmentReport {
    pub fn ratio(&self) -> f64 {
        self.output_lines as f64 / self.input_lines.max(1) as f64
    }
}

impl fmt::Display for AugmentReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "input_lines\t{}", self.input_lines)?;
        for (t, n) in &self.kept {
            writeln!(f, "kept_{t}\t{n}")?;
        }
        writeln!(f, "dropped_duplicates\t{}", self.dropped_duplicates)?;
        writeln!(f, "dropped_invalid\t{}", self.dropped_invalid)?;
        writeln!(f, "output_lines\t{}", self.output_lines)?;
        write!(f, "ratio\t{:.3}", self.ratio())
    }
}

/// Replaces every word that is a known entity with another entity of the
/// same label.
fn entity_variant(line: &str, lexicon: &EntityLexicon, seed: u64) -> String {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    line.split_whitespace()
        .map(|w| {
            lexicon
                .label_of(w)
                .and_then(|l| lexicon.candidates(l))
                .and_then(|c| c.choose(&mut rng))
                .map_or(w, String::as_str)
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn variant(
    technique: Technique,
    line: &str,
    plan: &AugmentPlan,
    resources: &Resources,
    seed: u64,
) -> Result<Option<String>, AugmentError> {
    let missing = || AugmentError::MissingResource(technique);
    Ok(Some(match technique {
        Technique::EmbeddingNeighbor => embedding_substitute(
            line,
            resources.embeddings.as_ref().ok_or_else(missing)?,
            plan.cosine_threshold,
            plan.max_replacements,
            seed,
        )?,
        Technique::Lexicon => lexicon_substitute(
            line,
            resources.synonyms.as_ref().ok_or_else(missing)?,
            plan.max_replacements,
            seed,
        ),
        Technique::CharSwap => match charswap(line, &plan.charswap_ops, plan.charswap_edits, seed) {
            Ok(s) => s,
            Err(AugmentError::LineTooShort { .. }) => return Ok(None),
            Err(e) => return Err(e),
        },
        Technique::NeSubstitution => {
            entity_variant(line, resources.entities.as_ref().ok_or_else(missing)?, seed)
        }
    }))
}

/// Runs every technique in the plan over a monolingual corpus.
///
/// The output holds the originals in order, then for each technique the
/// variants of every line (`multiplier` attempts per line). Variants equal to
/// any original line are dropped; duplicates among variants are kept.
/// Variant ids are `{id}~{technique}{k}`.
pub fn run_plan(
    corpus: &Corpus<Phrase>,
    plan: &AugmentPlan,
    resources: &Resources,
) -> Result<(Corpus<Phrase>, AugmentReport), AugmentError> {
    plan.validate()?;
    for &(t, _) in &plan.techniques {
        let present = match t {
            Technique::EmbeddingNeighbor => resources.embeddings.is_some(),
            Technique::Lexicon => resources.synonyms.is_some(),
            Technique::CharSwap => true,
            Technique::NeSubstitution => resources.entities.is_some(),
        };
        if !present {
            return Err(AugmentError::MissingResource(t));
        }
    }

    let originals: HashSet<&str> = corpus.iter().map(|p| p.source_line.as_str()).collect();
    let mut entries: Vec<Phrase> = corpus.entries.clone();
    let mut report = AugmentReport {
        input_lines: corpus.len(),
        output_lines: 0,
        kept: Vec::new(),
        dropped_duplicates: 0,
        dropped_invalid: 0,
    };

    for (t_index, &(technique, multiplier)) in plan.techniques.iter().enumerate() {
        let technique_seed = mix_seed(plan.seed, t_index as u64 + 1);
        let per_line: Vec<Vec<Option<Result<Phrase, ()>>>> = corpus
            .entries
            .par_iter()
            .enumerate()
            .map(|(i, phrase)| {
                let line_seed = mix_seed(technique_seed, i as u64);
                (0..multiplier)
                    .map(|k| {
                        let seed = mix_seed(line_seed, k as u64);
                        let Some(text) =
                            variant(technique, &phrase.source_line, plan, resources, seed)?
                        else {
                            return Ok(None);
                        };
                        if originals.contains(text.as_str()) {
                            return Ok(Some(Err(())));
                        }
                        let id = format!("{}~{}{k}", phrase.id, technique.tag());
                        Ok(Some(
                            Phrase::from_line(id, &text)
                                .map(|p| p.with_genre(phrase.genre))
                                .map_err(|_| ()),
                        ))
                    })
                    .collect::<Result<Vec<_>, AugmentError>>()
            })
            .collect::<Result<_, _>>()?;

        let mut kept = 0;
        for outcome in per_line.into_iter().flatten() {
            match outcome {
                Some(Ok(p)) => {
                    entries.push(p);
                    kept += 1;
                }
                Some(Err(())) => report.dropped_duplicates += 1,
                None => report.dropped_invalid += 1,
            }
        }
        report.kept.push((technique, kept));
    }
    report.output_lines = entries.len();
    Ok((Corpus::new(corpus.config, entries), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusConfig;

    fn corpus(lines: &[&str]) -> Corpus<Phrase> {
        Corpus::new(
            CorpusConfig::Monolingual,
            lines
                .iter()
                .enumerate()
                .map(|(i, l)| Phrase::from_line(format!("l{i}"), l).unwrap())
                .collect(),
        )
    }

    #[test]
    fn empty_plan_is_identity() {
        let c = corpus(&["a b", "c"]);
        let (out, report) = run_plan(&c, &AugmentPlan::new(1), &Resources::default()).unwrap();
        assert_eq!(out, c);
        assert_eq!(report.output_lines, 2);
    }

    #[test]
    fn missing_resources_are_reported() {
        let c = corpus(&["a b"]);
        let plan = AugmentPlan::new(1).with(Technique::Lexicon, 2);
        assert!(matches!(
            run_plan(&c, &plan, &Resources::default()),
            Err(AugmentError::MissingResource(Technique::Lexicon))
        ));
        let bad = AugmentPlan::new(1).with(Technique::CharSwap, 0);
        assert!(run_plan(&c, &bad, &Resources::default()).is_err());
    }

    #[test]
    fn duplicates_of_originals_are_dropped() {
        let c = corpus(&["barley rations", "barley allotments"]);
        let mut lex = SynonymLexicon::default();
        lex.insert("rations", &["allotments"]).unwrap();
        let res = Resources {
            synonyms: Some(lex),
            ..Default::default()
        };
        let plan = AugmentPlan::new(3).with(Technique::Lexicon, 2);
        let (out, report) = run_plan(&c, &plan, &res).unwrap();
        // every variant is an original line (or unchanged), so none survive
        assert_eq!(out.len(), 2);
        assert_eq!(report.dropped_duplicates, 4);
    }

    #[test]
    fn entity_variants_on_plain_lines() {
        let c = corpus(&["ki ur-bi2-lum{ki} mu"]);
        let mut ents = EntityLexicon::default();
        ents.insert("GN", "ur-bi2-lum{ki}").unwrap();
        ents.insert("GN", "nibru{ki}").unwrap();
        let res = Resources {
            entities: Some(ents),
            ..Default::default()
        };
        let plan = AugmentPlan::new(9).with(Technique::NeSubstitution, 4);
        let (out, _) = run_plan(&c, &plan, &res).unwrap();
        assert!(out.len() > 1);
        for p in out.iter().skip(1) {
            assert_eq!(p.source_line, "ki nibru{ki} mu");
            assert!(p.id.starts_with("l0~ne"));
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let c = corpus(&["ab cd ef", "gh-ij kl", "mn"]);
        let plan = AugmentPlan::new(5).with(Technique::CharSwap, 3);
        let a = run_plan(&c, &plan, &Resources::default()).unwrap();
        let b = run_plan(&c, &plan, &Resources::default()).unwrap();
        assert_eq!(a, b);
        let other = run_plan(&c, &AugmentPlan { seed: 6, ..plan }, &Resources::default()).unwrap();
        assert_ne!(a.0, other.0);
    }
}
