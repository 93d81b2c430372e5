//! Perturbation-based attribution for taggers.
//!
//! A model is anything implementing [`ScoredModel`]: given a phrase, a set of
//! masked positions and a target decision, it returns a confidence. Masked
//! tokens are replaced by [`MASK_SURFACE`], which fires no features.

mod io;
mod methods;
mod render;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{Phrase, Sign, SignKind, TagSet, Token};
use crate::crf::{marginals, viterbi_crf, CrfModel};
use crate::hmm::{viterbi_hmm, HmmModel};
use crate::MASK_SURFACE;

pub use io::{parse_annotation_masks, read_attribution, write_attribution, ATTR_MAGIC};
pub use methods::{
    leave_one_out, occlusion, shapley, sign_occlusion, ShapleyMode, MAX_EXACT_TOKENS,
};
pub use render::{plausibility, render, Correctness, RenderFormat};

#[derive(Debug, Error)]
pub enum InterpretError {
    #[error("exact Shapley values need at most {max} tokens, phrase has {len}")]
    TooManyTokensForExact { len: usize, max: usize },
    #[error("annotation is for phrase {mask:?} but the attribution is for {map:?}")]
    PhraseMismatch { map: String, mask: String },
    #[error("position {position} is outside a phrase of {len} tokens")]
    PositionOutOfRange { position: usize, len: usize },
    #[error("tag index {tag} is outside a tag set of {n_tags}")]
    TagOutOfRange { tag: usize, n_tags: usize },
    #[error("sampled Shapley values need at least one sample")]
    ZeroSamples,
    #[error("model score is not finite ({0})")]
    NonFiniteScore(f64),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The decision being explained: "the tag at `position` is `label`".
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Decision {
    pub position: usize,
    pub tag: usize,
    pub label: String,
}

impl Decision {
    pub fn new(position: usize, tag: usize, tagset: &TagSet) -> Result<Self, InterpretError> {
        let label = tagset.label(tag).ok_or(InterpretError::TagOutOfRange {
            tag,
            n_tags: tagset.len(),
        })?;
        Ok(Decision {
            position,
            tag,
            label: label.to_string(),
        })
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "tag of token {} = {}", self.position, self.label)
    }
}

/// Confidence of a model in a decision under token masking. Implementations
/// must be pure: equal inputs give equal scores.
pub trait ScoredModel: Sync {
    fn score(
        &self,
        phrase: &Phrase,
        masked: &[usize],
        target: &Decision,
    ) -> Result<f64, InterpretError>;
}

/// Adapts a closure to [`ScoredModel`].
pub struct FnScorer<F>(pub F);

impl<F> ScoredModel for FnScorer<F>
where
    F: Fn(&Phrase, &[usize], &Decision) -> f64 + Sync,
{
    fn score(&self, phrase: &Phrase, masked: &[usize], target: &Decision) -> Result<f64, InterpretError> {
        Ok((self.0)(phrase, masked, target))
    }
}

fn check_target(phrase: &Phrase, target: &Decision, n_tags: usize) -> Result<(), InterpretError> {
    if target.position >= phrase.len() {
        return Err(InterpretError::PositionOutOfRange {
            position: target.position,
            len: phrase.len(),
        });
    }
    if target.tag >= n_tags {
        return Err(InterpretError::TagOutOfRange {
            tag: target.tag,
            n_tags,
        });
    }
    Ok(())
}

/// Scores a decision by its CRF node marginal.
pub struct CrfScorer<'a>(pub &'a CrfModel);

impl CrfScorer<'_> {
    /// The Viterbi decision at `position`.
    pub fn predicted(&self, phrase: &Phrase, position: usize) -> Result<Decision, InterpretError> {
        if position >= phrase.len() {
            return Err(InterpretError::PositionOutOfRange {
                position,
                len: phrase.len(),
            });
        }
        let (path, _) = viterbi_crf(self.0, phrase);
        Decision::new(position, path[position], self.0.tagset())
    }
}

impl ScoredModel for CrfScorer<'_> {
    fn score(&self, phrase: &Phrase, masked: &[usize], target: &Decision) -> Result<f64, InterpretError> {
        check_target(phrase, target, self.0.n_tags())?;
        let m = marginals(self.0, &mask_phrase(phrase, masked)?);
        Ok(m.node[target.position][target.tag])
    }
}

/// Scores a decision by its HMM posterior.
pub struct HmmScorer<'a>(pub &'a HmmModel);

impl HmmScorer<'_> {
    pub fn predicted(&self, phrase: &Phrase, position: usize) -> Result<Decision, InterpretError> {
        if position >= phrase.len() {
            return Err(InterpretError::PositionOutOfRange {
                position,
                len: phrase.len(),
            });
        }
        let (path, _) = viterbi_hmm(self.0, phrase);
        Decision::new(position, path[position], self.0.tagset())
    }
}

impl ScoredModel for HmmScorer<'_> {
    fn score(&self, phrase: &Phrase, masked: &[usize], target: &Decision) -> Result<f64, InterpretError> {
        check_target(phrase, target, self.0.tagset().len())?;
        let post = self.0.posteriors(&mask_phrase(phrase, masked)?);
        let p = post[target.position][target.tag];
        if p.is_finite() {
            Ok(p)
        } else {
            Err(InterpretError::NonFiniteScore(p))
        }
    }
}

fn mask_token(index: usize) -> Token {
    Token {
        surface: MASK_SURFACE.to_string(),
        signs: vec![Sign {
            text: MASK_SURFACE.to_string(),
            kind: SignKind::Base,
            separator_before: String::new(),
        }],
        index,
    }
}

/// Copy of `phrase` with the tokens at `masked` replaced by the mask
/// surface. The source line is rebuilt from the tokens.
pub fn mask_phrase(phrase: &Phrase, masked: &[usize]) -> Result<Phrase, InterpretError> {
    let mut out = phrase.clone();
    if masked.is_empty() {
        return Ok(out);
    }
    for &i in masked {
        let slot = out.tokens.get_mut(i).ok_or(InterpretError::PositionOutOfRange {
            position: i,
            len: phrase.len(),
        })?;
        *slot = mask_token(i);
    }
    out.source_line = out.surfaces().collect::<Vec<_>>().join(" ");
    Ok(out)
}

/// Copy of `phrase` with one sign of one token replaced by the mask.
/// Determinatives keep their braces so the sign structure is unchanged.
pub fn mask_sign(phrase: &Phrase, token: usize, sign: usize) -> Result<Phrase, InterpretError> {
    let mut out = phrase.clone();
    let len = phrase.len();
    let t = out
        .tokens
        .get_mut(token)
        .ok_or(InterpretError::PositionOutOfRange { position: token, len })?;
    let n_signs = t.signs.len();
    let s = t.signs.get_mut(sign).ok_or(InterpretError::PositionOutOfRange {
        position: sign,
        len: n_signs,
    })?;
    s.text = match s.kind {
        SignKind::Base => MASK_SURFACE.to_string(),
        SignKind::Determinative => format!("{{{MASK_SURFACE}}}"),
    };
    t.surface = t.detokenize();
    out.source_line = out.surfaces().collect::<Vec<_>>().join(" ");
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Occlusion,
    LeaveOneOut,
    ShapleyExact,
    ShapleySampled(usize),
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Occlusion => f.write_str("occlusion"),
            Method::LeaveOneOut => f.write_str("leave-one-out"),
            Method::ShapleyExact => f.write_str("shapley-exact"),
            Method::ShapleySampled(n) => write!(f, "shapley-sampled:{n}"),
        }
    }
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "occlusion" => Ok(Method::Occlusion),
            "leave-one-out" => Ok(Method::LeaveOneOut),
            "shapley-exact" => Ok(Method::ShapleyExact),
            other => other
                .strip_prefix("shapley-sampled:")
                .and_then(|n| n.parse().ok())
                .map(Method::ShapleySampled)
                .ok_or_else(|| format!("unknown attribution method {other:?}")),
        }
    }
}

/// Signed per-token importance for one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct AttributionMap {
    pub phrase: Phrase,
    pub target: Decision,
    pub scores: Vec<f64>,
    /// Optional per-sign scores, `[token][sign]`.
    pub sign_scores: Option<Vec<Vec<f64>>>,
    pub method: Method,
    /// Score with nothing masked.
    pub baseline_score: f64,
}

impl AttributionMap {
    /// Positions ordered by decreasing score; ties by position.
    pub fn ranking(&self) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..self.scores.len()).collect();
        idx.sort_by(|&a, &b| self.scores[b].total_cmp(&self.scores[a]).then(a.cmp(&b)));
        idx
    }

    pub fn max_abs(&self) -> f64 {
        self.scores.iter().fold(0.0, |m, s| m.max(s.abs()))
    }
}

/// Human-marked evidence tokens for a phrase.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationMask {
    pub phrase_id: String,
    pub annotated: Vec<usize>,
}
