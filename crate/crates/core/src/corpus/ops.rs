use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Corpus, CorpusError, ParallelPair, Phrase, Token};

pub const DEFAULT_TERMINATORS: [&str; 4] = [".", ";", "!", "?"];

/// Result of merging segment-level pairs into sentence-level pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CompOutput {
    pub corpus: Corpus<ParallelPair>,
    /// Set when the last output pair was closed by the end of input rather
    /// than by a terminator on its target side.
    pub trailing_unterminated: bool,
}

/// Concatenates consecutive segments until a target ends with a terminator.
pub fn build_comp<S: AsRef<str>>(segments: &Corpus<ParallelPair>, terminators: &[S]) -> CompOutput {
    let ends_sentence = |target: &str| {
        let t = target.trim_end();
        terminators.iter().any(|term| t.ends_with(term.as_ref()))
    };

    let mut out = Vec::new();
    let mut group: Vec<&ParallelPair> = Vec::new();
    for pair in &segments.entries {
        group.push(pair);
        if ends_sentence(&pair.target) {
            out.push(merge_group(&group));
            group.clear();
        }
    }
    let trailing_unterminated = !group.is_empty();
    if trailing_unterminated {
        out.push(merge_group(&group));
    }
    CompOutput {
        corpus: Corpus::new(segments.config.completed(), out),
        trailing_unterminated,
    }
}

fn merge_group(group: &[&ParallelPair]) -> ParallelPair {
    if group.len() == 1 {
        return group[0].clone();
    }
    let first = &group[0].source;
    let tokens: Vec<Token> = group
        .iter()
        .flat_map(|p| p.source.tokens.iter())
        .enumerate()
        .map(|(index, t)| Token {
            index,
            ..t.clone()
        })
        .collect();
    let source_line = group
        .iter()
        .map(|p| p.source.source_line.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let target = group
        .iter()
        .map(|p| p.target.trim())
        .collect::<Vec<_>>()
        .join(" ");
    ParallelPair {
        source: Phrase {
            id: first.id.clone(),
            tokens,
            source_line,
            genre: first.genre,
        },
        target,
    }
}

/// Splits a corpus into consecutive chunks of `shard_size` entries.
pub fn shard<E: Clone>(
    corpus: &Corpus<E>,
    shard_size: usize,
) -> Result<Vec<Corpus<E>>, CorpusError> {
    if shard_size == 0 {
        return Err(CorpusError::ZeroShardSize);
    }
    Ok(corpus
        .entries
        .chunks(shard_size)
        .map(|chunk| Corpus::new(corpus.config, chunk.to_vec()))
        .collect())
}

/// Seeded random partition; both sides keep the input order.
///
/// The test side receives `round(n * test_fraction)` entries. Augmentation
/// must happen after this call, on each side separately.
pub fn split_train_test<E: Clone>(
    corpus: &Corpus<E>,
    test_fraction: f64,
    seed: u64,
) -> Result<(Corpus<E>, Corpus<E>), CorpusError> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(CorpusError::InvalidFraction(test_fraction));
    }
    if corpus.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    let n = corpus.len();
    let n_test = (n as f64 * test_fraction).round() as usize;
    if n_test == 0 || n_test == n {
        return Err(CorpusError::DegenerateSplit {
            total: n,
            train: n - n_test,
            test: n_test,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut is_test = vec![false; n];
    for &i in &order[..n_test] {
        is_test[i] = true;
    }
    let (mut train, mut test) = (Vec::with_capacity(n - n_test), Vec::with_capacity(n_test));
    for (entry, &t) in corpus.entries.iter().zip(&is_test) {
        if t {
            test.push(entry.clone());
        } else {
            train.push(entry.clone());
        }
    }
    Ok((
        Corpus::new(corpus.config, train),
        Corpus::new(corpus.config, test),
    ))
}
