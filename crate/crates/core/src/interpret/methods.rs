use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{mask_sign, AttributionMap, Decision, InterpretError, Method, ScoredModel};
use crate::corpus::Phrase;
use crate::util::mix_seed;

pub const MAX_EXACT_TOKENS: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShapleyMode {
    Exact,
    Sampled { samples: usize, seed: u64 },
}

fn finite(x: f64) -> Result<f64, InterpretError> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(InterpretError::NonFiniteScore(x))
    }
}

fn scored<M: ScoredModel + ?Sized>(
    model: &M,
    phrase: &Phrase,
    masked: &[usize],
    target: &Decision,
) -> Result<f64, InterpretError> {
    finite(model.score(phrase, masked, target)?)
}

fn map(phrase: &Phrase, target: &Decision, scores: Vec<f64>, method: Method, base: f64) -> AttributionMap {
    AttributionMap {
        phrase: phrase.clone(),
        target: target.clone(),
        scores,
        sign_scores: None,
        method,
        baseline_score: base,
    }
}

/// `score(∅) − score({i})` for every position.
pub fn occlusion<M: ScoredModel + ?Sized>(
    model: &M,
    phrase: &Phrase,
    target: &Decision,
) -> Result<AttributionMap, InterpretError> {
    let base = scored(model, phrase, &[], target)?;
    let scores = (0..phrase.len())
        .into_par_iter()
        .map(|i| Ok(base - scored(model, phrase, &[i], target)?))
        .collect::<Result<Vec<_>, InterpretError>>()?;
    Ok(map(phrase, target, scores, Method::Occlusion, base))
}

/// Per-sign occlusion, `[token][sign]`: the score drop when one sign is
/// replaced by the mask.
pub fn sign_occlusion<M: ScoredModel + ?Sized>(
    model: &M,
    phrase: &Phrase,
    target: &Decision,
) -> Result<Vec<Vec<f64>>, InterpretError> {
    let base = scored(model, phrase, &[], target)?;
    phrase
        .tokens
        .iter()
        .enumerate()
        .map(|(t, tok)| {
            (0..tok.signs.len())
                .into_par_iter()
                .map(|s| Ok(base - scored(model, &mask_sign(phrase, t, s)?, &[], target)?))
                .collect()
        })
        .collect()
}

/// Score drop when token `i` is removed from the phrase. The target token
/// cannot be removed without losing the decision, so it is masked instead.
pub fn leave_one_out<M: ScoredModel + ?Sized>(
    model: &M,
    phrase: &Phrase,
    target: &Decision,
) -> Result<AttributionMap, InterpretError> {
    let base = scored(model, phrase, &[], target)?;
    let scores = (0..phrase.len())
        .into_par_iter()
        .map(|i| {
            if i == target.position {
                return Ok(base - scored(model, phrase, &[i], target)?);
            }
            let mut reduced = phrase.clone();
            reduced.tokens.remove(i);
            for (j, tok) in reduced.tokens.iter_mut().enumerate() {
                tok.index = j;
            }
            reduced.source_line = reduced.surfaces().collect::<Vec<_>>().join(" ");
            let mut shifted = target.clone();
            if i < target.position {
                shifted.position -= 1;
            }
            Ok(base - scored(model, &reduced, &[], &shifted)?)
        })
        .collect::<Result<Vec<_>, InterpretError>>()?;
    Ok(map(phrase, target, scores, Method::LeaveOneOut, base))
}

/// Shapley values of the positions, where a coalition `S` of present tokens
/// is worth `score(mask = complement of S)`.
pub fn shapley<M: ScoredModel + ?Sized>(
    model: &M,
    phrase: &Phrase,
    target: &Decision,
    mode: ShapleyMode,
) -> Result<AttributionMap, InterpretError> {
    let n = phrase.len();
    let base = scored(model, phrase, &[], target)?;
    match mode {
        ShapleyMode::Exact => {
            if n > MAX_EXACT_TOKENS {
                return Err(InterpretError::TooManyTokensForExact {
                    len: n,
                    max: MAX_EXACT_TOKENS,
                });
            }
            let scores = exact(model, phrase, target)?;
            Ok(map(phrase, target, scores, Method::ShapleyExact, base))
        }
        ShapleyMode::Sampled { samples, seed } => {
            if samples == 0 {
                return Err(InterpretError::ZeroSamples);
            }
            let scores = sampled(model, phrase, target, samples, seed)?;
            Ok(map(phrase, target, scores, Method::ShapleySampled(samples), base))
        }
    }
}

/// Masked positions for a coalition bitmask of present tokens.
fn complement(n: usize, present: u32) -> Vec<usize> {
    (0..n).filter(|&i| present & (1 << i) == 0).collect()
}

fn exact<M: ScoredModel + ?Sized>(
    model: &M,
    phrase: &Phrase,
    target: &Decision,
) -> Result<Vec<f64>, InterpretError> {
    let n = phrase.len();
    let values: Vec<f64> = (0..1u32 << n)
        .into_par_iter()
        .map(|s| scored(model, phrase, &complement(n, s), target))
        .collect::<Result<_, _>>()?;
    // weight(|S|) = |S|! (n − |S| − 1)! / n!
    let fact: Vec<f64> = (0..=n).scan(1.0, |acc, k| {
        if k > 0 {
            *acc *= k as f64;
        }
        Some(*acc)
    })
    .collect();
    let weight: Vec<f64> = (0..n)
        .map(|s| fact[s] * fact[n - s - 1] / fact[n])
        .collect();
    Ok((0..n)
        .map(|i| {
            let bit = 1u32 << i;
            (0..1u32 << n)
                .filter(|s| s & bit == 0)
                .map(|s| weight[s.count_ones() as usize] * (values[(s | bit) as usize] - values[s as usize]))
                .sum()
        })
        .collect())
}

/// Permutation sampling with antithetic pairs: odd samples walk the
/// reverse of the previous permutation, which cancels much of the
/// ordering noise.
fn sampled<M: ScoredModel + ?Sized>(
    model: &M,
    phrase: &Phrase,
    target: &Decision,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>, InterpretError> {
    let n = phrase.len();
    let all: Vec<usize> = (0..n).collect();
    let empty = scored(model, phrase, &all, target)?;
    let contributions: Vec<Vec<f64>> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut order: Vec<usize> = (0..n).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, (k / 2) as u64));
            order.shuffle(&mut rng);
            if k % 2 == 1 {
                order.reverse();
            }
            let mut present = vec![false; n];
            let mut prev = empty;
            let mut out = vec![0.0; n];
            for &i in &order {
                present[i] = true;
                let masked: Vec<usize> = (0..n).filter(|&j| !present[j]).collect();
                let v = scored(model, phrase, &masked, target)?;
                out[i] = v - prev;
                prev = v;
            }
            Ok(out)
        })
        .collect::<Result<_, InterpretError>>()?;
    let mut total = vec![0.0; n];
    for c in &contributions {
        for (t, x) in total.iter_mut().zip(c) {
            *t += x;
        }
    }
    Ok(total.into_iter().map(|t| t / samples as f64).collect())
}
