//! First-order HMM tagger with add-k smoothing.
//!
//! All tables are stored as natural-log probabilities. Every tag reserves
//! emission mass for a single unknown-word outcome, so decoding never fails
//! on unseen tokens when `k > 0`. With `k = 0` unseen events are `-inf`.

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path;

use indexmap::IndexMap;
use thiserror::Error;

use crate::corpus::{Corpus, Phrase, TagSet, TaggedPhrase};
use crate::util::{join_floats, logsumexp, parse_floats};
use crate::MASK_SURFACE;

pub const HMM_MAGIC: &str = "#cuneilab-hmm v1";

#[derive(Debug, Error)]
pub enum HmmError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("tag index {index} outside tag set of {size} labels")]
    TagOutsideTagset { index: usize, size: usize },
    #[error("smoothing constant must be finite and non-negative, got {0}")]
    InvalidSmoothing(f64),
    #[error("invalid model tables: {0}")]
    InvalidTables(String),
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    tagset: TagSet,
    smoothing_k: f64,
    log_initial: Vec<f64>,
    /// `[from][to]`
    log_transition: Vec<Vec<f64>>,
    vocab: IndexMap<String, usize>,
    /// `[tag][word]`, with the unknown-word outcome at index `vocab.len()`.
    log_emission: Vec<Vec<f64>>,
}

/// Add-k relative frequencies in log space. A row with no observations
/// and `k = 0` falls back to uniform so it still normalises.
fn smoothed_log_row(counts: &[f64], k: f64) -> Vec<f64> {
    let total: f64 = counts.iter().sum::<f64>() + k * counts.len() as f64;
    if total == 0.0 {
        let uniform = -(counts.len() as f64).ln();
        return vec![uniform; counts.len()];
    }
    counts.iter().map(|&c| ((c + k) / total).ln()).collect()
}

pub fn train_hmm(
    corpus: &Corpus<TaggedPhrase>,
    tagset: &TagSet,
    smoothing_k: f64,
) -> Result<HmmModel, HmmError> {
    if !(smoothing_k.is_finite() && smoothing_k >= 0.0) {
        return Err(HmmError::InvalidSmoothing(smoothing_k));
    }
    if corpus.is_empty() {
        return Err(HmmError::EmptyCorpus);
    }
    let n_tags = tagset.len();
    let vocab: BTreeSet<&str> = corpus
        .iter()
        .flat_map(|e| e.phrase.surfaces())
        .collect();
    let vocab: IndexMap<String, usize> = vocab
        .into_iter()
        .enumerate()
        .map(|(i, w)| (w.to_string(), i))
        .collect();

    let mut initial = vec![0.0; n_tags];
    let mut transition = vec![vec![0.0; n_tags]; n_tags];
    // last column stays 0: the unknown word is never observed in training
    let mut emission = vec![vec![0.0; vocab.len() + 1]; n_tags];
    for entry in corpus {
        if let Some(&bad) = entry.tags.iter().find(|&&t| t >= n_tags) {
            return Err(HmmError::TagOutsideTagset {
                index: bad,
                size: n_tags,
            });
        }
        let Some(&first) = entry.tags.first() else {
            continue;
        };
        initial[first] += 1.0;
        for pair in entry.tags.windows(2) {
            transition[pair[0]][pair[1]] += 1.0;
        }
        for (surface, &tag) in entry.phrase.surfaces().zip(&entry.tags) {
            emission[tag][vocab[surface]] += 1.0;
        }
    }

    Ok(HmmModel {
        tagset: tagset.clone(),
        smoothing_k,
        log_initial: smoothed_log_row(&initial, smoothing_k),
        log_transition: transition
            .iter()
            .map(|row| smoothed_log_row(row, smoothing_k))
            .collect(),
        vocab,
        log_emission: emission
            .iter()
            .map(|row| smoothed_log_row(row, smoothing_k))
            .collect(),
    })
}

impl HmmModel {
    /// Builds a model from explicit probability tables. Each emission row
    /// has one entry per vocabulary word followed by the unknown-word
    /// probability. All rows must sum to 1 within 1e-9.
    pub fn from_probabilities(
        tagset: TagSet,
        initial: &[f64],
        transition: &[Vec<f64>],
        vocab: &[&str],
        emission: &[Vec<f64>],
    ) -> Result<Self, HmmError> {
        let n = tagset.len();
        let bad = |msg: String| HmmError::InvalidTables(msg);
        if initial.len() != n || transition.len() != n || emission.len() != n {
            return Err(bad("table sizes do not match the tag set".into()));
        }
        let check_row = |name: &str, row: &[f64], len: usize| {
            if row.len() != len {
                return Err(bad(format!("{name} row has {} entries, expected {len}", row.len())));
            }
            if row.iter().any(|p| !(0.0..=1.0).contains(p)) {
                return Err(bad(format!("{name} row has a value outside [0, 1]")));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(bad(format!("{name} row sums to {sum}")));
            }
            Ok(())
        };
        check_row("initial", initial, n)?;
        for row in transition {
            check_row("transition", row, n)?;
        }
        for row in emission {
            check_row("emission", row, vocab.len() + 1)?;
        }
        let vocab: IndexMap<String, usize> = vocab
            .iter()
            .enumerate()
            .map(|(i, w)| (w.to_string(), i))
            .collect();
        let ln_row = |row: &[f64]| row.iter().map(|p| p.ln()).collect::<Vec<_>>();
        Ok(HmmModel {
            tagset,
            smoothing_k: 0.0,
            log_initial: ln_row(initial),
            log_transition: transition.iter().map(|r| ln_row(r)).collect(),
            vocab,
            log_emission: emission.iter().map(|r| ln_row(r)).collect(),
        })
    }

    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }

    pub fn smoothing_k(&self) -> f64 {
        self.smoothing_k
    }

    pub fn vocab(&self) -> impl Iterator<Item = &str> {
        self.vocab.keys().map(String::as_str)
    }

    pub fn log_initial(&self, tag: usize) -> f64 {
        self.log_initial[tag]
    }

    pub fn log_transition(&self, from: usize, to: usize) -> f64 {
        self.log_transition[from][to]
    }

    /// Log emission probability; out-of-vocabulary surfaces use the
    /// unknown-word outcome and the mask surface is marginalised out (0).
    pub fn log_emission(&self, tag: usize, surface: &str) -> f64 {
        if surface == MASK_SURFACE {
            return 0.0;
        }
        let col = self.vocab.get(surface).copied().unwrap_or(self.vocab.len());
        self.log_emission[tag][col]
    }

    pub fn log_unknown(&self, tag: usize) -> f64 {
        self.log_emission[tag][self.vocab.len()]
    }

    fn emissions(&self, phrase: &Phrase) -> Vec<Vec<f64>> {
        phrase
            .surfaces()
            .map(|s| (0..self.tagset.len()).map(|t| self.log_emission(t, s)).collect())
            .collect()
    }

    /// Exact joint log-probability of a tag path.
    pub fn path_log_prob(&self, phrase: &Phrase, tags: &[usize]) -> f64 {
        assert_eq!(phrase.len(), tags.len());
        let mut score = 0.0;
        for (i, (surface, &tag)) in phrase.surfaces().zip(tags).enumerate() {
            score += if i == 0 {
                self.log_initial[tag]
            } else {
                self.log_transition[tags[i - 1]][tag]
            };
            score += self.log_emission(tag, surface);
        }
        score
    }

    fn forward(&self, em: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n_tags = self.tagset.len();
        let mut alpha: Vec<Vec<f64>> = Vec::with_capacity(em.len());
        alpha.push((0..n_tags).map(|t| self.log_initial[t] + em[0][t]).collect());
        for row in &em[1..] {
            let prev = alpha.last().expect("non-empty");
            let next = (0..n_tags)
                .map(|t| {
                    logsumexp((0..n_tags).map(|u| prev[u] + self.log_transition[u][t])) + row[t]
                })
                .collect();
            alpha.push(next);
        }
        alpha
    }

    fn backward(&self, em: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n_tags = self.tagset.len();
        let n = em.len();
        let mut beta = vec![vec![0.0; n_tags]; n];
        for i in (0..n.saturating_sub(1)).rev() {
            for u in 0..n_tags {
                beta[i][u] = logsumexp(
                    (0..n_tags).map(|t| self.log_transition[u][t] + em[i + 1][t] + beta[i + 1][t]),
                );
            }
        }
        beta
    }

    /// Per-position posterior tag distributions. Positions are normalised
    /// by the sequence likelihood; a zero-likelihood phrase yields NaN.
    pub fn posteriors(&self, phrase: &Phrase) -> Vec<Vec<f64>> {
        assert!(!phrase.is_empty(), "phrase must be non-empty");
        let em = self.emissions(phrase);
        let alpha = self.forward(&em);
        let beta = self.backward(&em);
        let log_z = logsumexp(alpha.last().expect("non-empty").iter().copied());
        alpha
            .iter()
            .zip(&beta)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x + y - log_z).exp()).collect())
            .collect()
    }
}

/// Most probable tag path and its joint log-probability.
///
/// Ties go to the lowest tag index, both at each back-pointer and at the
/// final position.
pub fn viterbi_hmm(model: &HmmModel, phrase: &Phrase) -> (Vec<usize>, f64) {
    assert!(!phrase.is_empty(), "phrase must be non-empty");
    let n_tags = model.tagset.len();
    let em = model.emissions(phrase);
    let mut delta: Vec<f64> = (0..n_tags).map(|t| model.log_initial[t] + em[0][t]).collect();
    let mut back: Vec<Vec<usize>> = Vec::with_capacity(phrase.len());
    for row in &em[1..] {
        let mut next = vec![f64::NEG_INFINITY; n_tags];
        let mut ptr = vec![0; n_tags];
        for t in 0..n_tags {
            let mut best = f64::NEG_INFINITY;
            for (u, &d) in delta.iter().enumerate() {
                let s = d + model.log_transition[u][t];
                if s > best {
                    best = s;
                    ptr[t] = u;
                }
            }
            next[t] = best + row[t];
        }
        back.push(ptr);
        delta = next;
    }
    let mut last = 0;
    for t in 1..n_tags {
        if delta[t] > delta[last] {
            last = t;
        }
    }
    let score = delta[last];
    let mut path = vec![last];
    for ptr in back.iter().rev() {
        let prev = ptr[*path.last().expect("non-empty")];
        path.push(prev);
    }
    path.reverse();
    (path, score)
}

/// Forward-algorithm `log P(tokens)`.
pub fn sequence_loglik(model: &HmmModel, phrase: &Phrase) -> f64 {
    assert!(!phrase.is_empty(), "phrase must be non-empty");
    let em = model.emissions(phrase);
    let alpha = model.forward(&em);
    logsumexp(alpha.last().expect("non-empty").iter().copied())
}

pub fn write_hmm<W: Write>(model: &HmmModel, mut w: W) -> Result<(), HmmError> {
    writeln!(w, "{HMM_MAGIC}")?;
    writeln!(w, "tagset\t{}", model.tagset.to_line())?;
    writeln!(w, "smoothing_k\t{}", model.smoothing_k)?;
    writeln!(w, "initial\t{}", join_floats(&model.log_initial))?;
    for (from, row) in model.log_transition.iter().enumerate() {
        writeln!(w, "transition\t{from}\t{}", join_floats(row))?;
    }
    let n_tags = model.tagset.len();
    for (word, &col) in &model.vocab {
        let column: Vec<f64> = (0..n_tags).map(|t| model.log_emission[t][col]).collect();
        writeln!(w, "emission\t{word}\t{}", join_floats(&column))?;
    }
    let unk: Vec<f64> = (0..n_tags).map(|t| model.log_unknown(t)).collect();
    writeln!(w, "unknown\t{}", join_floats(&unk))?;
    w.flush()?;
    Ok(())
}

pub fn read_hmm(text: &str) -> Result<HmmModel, HmmError> {
    let fail = |line: usize, reason: &str| HmmError::Format {
        line,
        reason: reason.to_string(),
    };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    match lines.next() {
        Some((_, l)) if l == HMM_MAGIC => {}
        _ => return Err(fail(1, "missing #cuneilab-hmm v1 header")),
    }
    let mut tagset = None;
    let mut smoothing_k = None;
    let mut initial = None;
    let mut transition: Vec<Vec<f64>> = Vec::new();
    let mut vocab = IndexMap::new();
    let mut columns: Vec<Vec<f64>> = Vec::new();
    let mut unknown = None;

    for (no, line) in lines {
        let (key, rest) = line.split_once('\t').ok_or_else(|| fail(no, "missing tab"))?;
        let floats = |s: &str| parse_floats(s).map_err(|e| fail(no, &e));
        match key {
            "tagset" => tagset = Some(TagSet::from_line(rest).map_err(|e| fail(no, &e))?),
            "smoothing_k" => {
                smoothing_k = Some(rest.parse::<f64>().map_err(|_| fail(no, "bad smoothing_k"))?)
            }
            "initial" => initial = Some(floats(rest)?),
            "transition" => {
                let (idx, row) = rest.split_once('\t').ok_or_else(|| fail(no, "missing tab"))?;
                if idx.parse::<usize>().ok() != Some(transition.len()) {
                    return Err(fail(no, "transition rows out of order"));
                }
                transition.push(floats(row)?);
            }
            "emission" => {
                let (word, col) = rest.split_once('\t').ok_or_else(|| fail(no, "missing tab"))?;
                let next = vocab.len();
                if vocab.insert(word.to_string(), next).is_some() {
                    return Err(fail(no, "duplicate vocabulary word"));
                }
                columns.push(floats(col)?);
            }
            "unknown" => unknown = Some(floats(rest)?),
            _ => return Err(fail(no, "unknown record")),
        }
    }
    let tagset = tagset.ok_or_else(|| fail(0, "missing tagset"))?;
    let n = tagset.len();
    let initial = initial.ok_or_else(|| fail(0, "missing initial"))?;
    let unknown = unknown.ok_or_else(|| fail(0, "missing unknown"))?;
    if initial.len() != n
        || transition.len() != n
        || transition.iter().any(|r| r.len() != n)
        || unknown.len() != n
        || columns.iter().any(|c| c.len() != n)
    {
        return Err(fail(0, "table sizes do not match the tag set"));
    }
    let log_emission = (0..n)
        .map(|t| {
            columns
                .iter()
                .map(|c| c[t])
                .chain(std::iter::once(unknown[t]))
                .collect()
        })
        .collect();
    Ok(HmmModel {
        tagset,
        smoothing_k: smoothing_k.ok_or_else(|| fail(0, "missing smoothing_k"))?,
        log_initial: initial,
        log_transition: transition,
        vocab,
        log_emission,
    })
}

pub fn save_hmm(model: &HmmModel, path: impl AsRef<Path>) -> Result<(), HmmError> {
    let mut buf = Vec::new();
    write_hmm(model, &mut buf)?;
    fs::write(path, buf)?;
    Ok(())
}

pub fn load_hmm(path: impl AsRef<Path>) -> Result<HmmModel, HmmError> {
    read_hmm(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusConfig;

    fn toy_tagset() -> TagSet {
        TagSet::custom("toy", &["A", "B"]).unwrap()
    }

    fn corpus(phrases: &[&[(&str, &str)]], tagset: &TagSet) -> Corpus<TaggedPhrase> {
        let entries = phrases
            .iter()
            .enumerate()
            .map(|(i, p)| TaggedPhrase::from_pairs(format!("p{i}"), p, tagset).unwrap())
            .collect();
        Corpus::new(CorpusConfig::Monolingual, entries)
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn forced_counts_without_smoothing() {
        let tagset = TagSet::pos();
        let n = tagset.index_of("N").unwrap();
        let model = train_hmm(&corpus(&[&[("a", "N")]], &tagset), &tagset, 0.0).unwrap();
        assert!(close(model.log_initial(n), 0.0));
        assert!(close(model.log_emission(n, "a"), 0.0));
        assert_eq!(model.log_unknown(n), f64::NEG_INFINITY);
    }

    #[test]
    fn symmetric_initial_distribution() {
        let tagset = TagSet::pos();
        let model = train_hmm(
            &corpus(&[&[("a", "N")], &[("a", "V")]], &tagset),
            &tagset,
            0.0,
        )
        .unwrap();
        for label in ["N", "V"] {
            let t = tagset.index_of(label).unwrap();
            assert!(close(model.log_initial(t).exp(), 0.5));
        }
        assert_eq!(model.log_initial(0), f64::NEG_INFINITY);
    }

    #[test]
    fn add_one_tables_match_hand_counts() {
        // A x, A y B x, B y
        let tagset = toy_tagset();
        let data = corpus(
            &[&[("x", "A")], &[("y", "A"), ("x", "B")], &[("y", "B")]],
            &tagset,
        );
        let m = train_hmm(&data, &tagset, 1.0).unwrap();
        // initial: A=2, B=1 -> (2+1)/(3+2), (1+1)/(3+2)
        assert!(close(m.log_initial(0).exp(), 3.0 / 5.0));
        assert!(close(m.log_initial(1).exp(), 2.0 / 5.0));
        // transitions from A: A->B once -> A: 1/3, B: 2/3; from B: none -> uniform
        assert!(close(m.log_transition(0, 0).exp(), 1.0 / 3.0));
        assert!(close(m.log_transition(0, 1).exp(), 2.0 / 3.0));
        assert!(close(m.log_transition(1, 0).exp(), 0.5));
        // emissions over {x, y, UNK}: A saw x,y; B saw x,y
        for t in 0..2 {
            assert!(close(m.log_emission(t, "x").exp(), 2.0 / 5.0));
            assert!(close(m.log_emission(t, "y").exp(), 2.0 / 5.0));
            assert!(close(m.log_unknown(t).exp(), 1.0 / 5.0));
            assert!(close(m.log_emission(t, "zzz").exp(), 1.0 / 5.0));
        }
    }

    fn two_state_model() -> HmmModel {
        HmmModel::from_probabilities(
            toy_tagset(),
            &[0.6, 0.4],
            &[vec![0.7, 0.3], vec![0.4, 0.6]],
            &["x", "y"],
            &[vec![0.9, 0.1, 0.0], vec![0.2, 0.8, 0.0]],
        )
        .unwrap()
    }

    #[test]
    fn single_step_argmax() {
        let model = HmmModel::from_probabilities(
            toy_tagset(),
            &[0.6, 0.4],
            &[vec![0.5, 0.5], vec![0.5, 0.5]],
            &["x"],
            &[vec![0.9, 0.1], vec![0.2, 0.8]],
        )
        .unwrap();
        let phrase = Phrase::from_line("p", "x").unwrap();
        let (tags, score) = viterbi_hmm(&model, &phrase);
        assert_eq!(tags, [0]);
        assert!(close(score, 0.54f64.ln()));
        assert!(close(sequence_loglik(&model, &phrase), (0.54f64 + 0.08).ln()));
    }

    #[test]
    fn two_step_example() {
        let model = two_state_model();
        let phrase = Phrase::from_line("p", "x y").unwrap();
        let (tags, score) = viterbi_hmm(&model, &phrase);
        assert_eq!(tags, [0, 1]);
        assert!(close(score, 0.1296f64.ln()));
        let ll = sequence_loglik(&model, &phrase);
        assert!(close(ll, 0.2090f64.ln()));
        let post = model.posteriors(&phrase);
        for row in &post {
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        // P(tag0 = A) = (AA + AB) / total
        assert!(close(post[0][0], (0.0378 + 0.1296) / 0.2090));
    }

    #[test]
    fn mask_is_marginalised() {
        let model = two_state_model();
        let masked = Phrase::from_surfaces("p", &[MASK_SURFACE]).unwrap();
        assert!(close(sequence_loglik(&model, &masked), 0.0));
    }

    #[test]
    fn rejects_bad_inputs() {
        let tagset = toy_tagset();
        let empty = Corpus::new(CorpusConfig::Monolingual, Vec::new());
        assert!(matches!(
            train_hmm(&empty, &tagset, 1.0),
            Err(HmmError::EmptyCorpus)
        ));
        let mut bad = corpus(&[&[("x", "A")]], &tagset);
        bad.entries[0].tags[0] = 5;
        assert!(matches!(
            train_hmm(&bad, &tagset, 1.0),
            Err(HmmError::TagOutsideTagset { index: 5, size: 2 })
        ));
        assert!(train_hmm(&bad, &tagset, -1.0).is_err());
        assert!(HmmModel::from_probabilities(
            tagset,
            &[0.5, 0.4],
            &[vec![0.5, 0.5], vec![0.5, 0.5]],
            &[],
            &[vec![1.0], vec![1.0]],
        )
        .is_err());
    }

    #[test]
    fn text_round_trip() {
        let tagset = TagSet::pos();
        let data = corpus(
            &[&[("ur-{d}asznan", "NE"), ("ba-hul", "V")], &[("gin", "N")]],
            &tagset,
        );
        let model = train_hmm(&data, &tagset, 0.5).unwrap();
        let mut buf = Vec::new();
        write_hmm(&model, &mut buf).unwrap();
        let back = read_hmm(std::str::from_utf8(&buf).unwrap()).unwrap();
        assert_eq!(back, model);
        let zero = train_hmm(&data, &tagset, 0.0).unwrap();
        let mut buf = Vec::new();
        write_hmm(&zero, &mut buf).unwrap();
        assert_eq!(read_hmm(std::str::from_utf8(&buf).unwrap()).unwrap(), zero);
        assert!(read_hmm("#cuneilab-hmm v2\n").is_err());
    }
}
