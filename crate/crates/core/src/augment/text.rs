//! Line-level perturbations: character edits, synonym substitution and
//! embedding-neighbour substitution. All are deterministic in the seed.

use std::fmt;
use std::str::FromStr;

use rand::seq::{IteratorRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::resources::{EmbeddingTable, SynonymLexicon};
use super::AugmentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CharOp {
    Substitute,
    Delete,
    Insert,
    SwapAdjacent,
}

pub const ALL_CHAR_OPS: [CharOp; 4] = [
    CharOp::Substitute,
    CharOp::Delete,
    CharOp::Insert,
    CharOp::SwapAdjacent,
];

impl fmt::Display for CharOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CharOp::Substitute => "substitute",
            CharOp::Delete => "delete",
            CharOp::Insert => "insert",
            CharOp::SwapAdjacent => "swap",
        })
    }
}

impl FromStr for CharOp {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "substitute" => Ok(CharOp::Substitute),
            "delete" => Ok(CharOp::Delete),
            "insert" => Ok(CharOp::Insert),
            "swap" => Ok(CharOp::SwapAdjacent),
            other => Err(format!("unknown character edit {other:?}")),
        }
    }
}

/// Applies one edit at a fixed position. `letter` is used by `Substitute`
/// and `Insert`; `Insert` accepts `position == len`.
pub fn apply_char_edit(
    chars: &mut Vec<char>,
    op: CharOp,
    position: usize,
    letter: char,
) -> Result<(), AugmentError> {
    let len = chars.len();
    let too_short = || AugmentError::LineTooShort { len, op };
    match op {
        CharOp::Substitute => *chars.get_mut(position).ok_or_else(too_short)? = letter,
        CharOp::Delete => {
            if position >= len || len < 2 {
                return Err(too_short());
            }
            chars.remove(position);
        }
        CharOp::Insert => {
            if position > len {
                return Err(too_short());
            }
            chars.insert(position, letter);
        }
        CharOp::SwapAdjacent => {
            if position + 1 >= len {
                return Err(too_short());
            }
            chars.swap(position, position + 1);
        }
    }
    Ok(())
}

/// Characters that random edits may touch: everything except whitespace
/// and the sign delimiters `{`, `}`, `-`, so edited transliterations still
/// tokenize into the same number of words and signs.
fn editable(c: char) -> bool {
    !c.is_whitespace() && !matches!(c, '{' | '}' | '-')
}

fn candidate_positions(chars: &[char], op: CharOp) -> Vec<usize> {
    let ed = |i: usize| chars.get(i).copied().is_some_and(editable);
    let n = chars.len();
    match op {
        CharOp::Substitute => (0..n).filter(|&i| ed(i)).collect(),
        CharOp::Delete => (0..n)
            .filter(|&i| ed(i) && ((i > 0 && ed(i - 1)) || ed(i + 1)))
            .collect(),
        CharOp::Insert => (0..=n)
            .filter(|&i| (i > 0 && ed(i - 1)) || ed(i))
            .collect(),
        CharOp::SwapAdjacent => (0..n.saturating_sub(1))
            .filter(|&i| ed(i) && ed(i + 1))
            .collect(),
    }
}

fn random_letter(rng: &mut ChaCha8Rng, avoid: Option<char>) -> char {
    loop {
        let c = rng.gen_range(b'a'..=b'z') as char;
        if Some(c) != avoid {
            return c;
        }
    }
}

/// Applies `per_line_edits` random character edits drawn from `ops`.
///
/// Each edit picks uniformly among the enabled operations that have a
/// legal position, then a uniform position. Substitutions always change
/// the character.
pub fn charswap(
    line: &str,
    ops: &[CharOp],
    per_line_edits: usize,
    seed: u64,
) -> Result<String, AugmentError> {
    if line.is_empty() {
        return Err(AugmentError::LineTooShort {
            len: 0,
            op: ops.first().copied().unwrap_or(CharOp::Insert),
        });
    }
    if ops.is_empty() {
        return Err(AugmentError::InvalidPlan("no character edits enabled".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chars: Vec<char> = line.chars().collect();
    for _ in 0..per_line_edits {
        let options: Vec<(CharOp, Vec<usize>)> = ops
            .iter()
            .map(|&op| (op, candidate_positions(&chars, op)))
            .filter(|(_, pos)| !pos.is_empty())
            .collect();
        let Some((op, positions)) = options.choose(&mut rng) else {
            return Err(AugmentError::LineTooShort {
                len: chars.len(),
                op: ops[0],
            });
        };
        let position = *positions.choose(&mut rng).expect("non-empty");
        let avoid = (*op == CharOp::Substitute).then(|| chars[position]);
        let letter = random_letter(&mut rng, avoid);
        apply_char_edit(&mut chars, *op, position, letter)?;
    }
    Ok(chars.into_iter().collect())
}

/// Byte ranges of whitespace-separated words.
fn word_spans(line: &str) -> Vec<(usize, usize)> {
    let mut spans = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                spans.push((s, i));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        spans.push((s, line.len()));
    }
    spans
}

/// Replaces up to `max_replacements` words that have candidates, keeping
/// the original spacing. `candidates` returns the options for a word.
fn substitute_words<'a, F>(
    line: &'a str,
    max_replacements: usize,
    seed: u64,
    candidates: F,
) -> String
where
    F: Fn(&'a str) -> Vec<String>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spans = word_spans(line);
    let options: Vec<(usize, Vec<String>)> = spans
        .iter()
        .enumerate()
        .map(|(i, &(s, e))| (i, candidates(&line[s..e])))
        .filter(|(_, c)| !c.is_empty())
        .collect();
    if options.is_empty() || max_replacements == 0 {
        return line.to_string();
    }
    let mut chosen: Vec<&(usize, Vec<String>)> = options
        .iter()
        .choose_multiple(&mut rng, max_replacements.min(options.len()));
    chosen.sort_by_key(|(i, _)| *i);
    let mut out = String::with_capacity(line.len());
    let mut cursor = 0;
    for (i, cands) in chosen {
        let (s, e) = spans[*i];
        out.push_str(&line[cursor..s]);
        out.push_str(cands.choose(&mut rng).expect("non-empty"));
        cursor = e;
    }
    out.push_str(&line[cursor..]);
    out
}

/// Synonym substitution from a lexicon.
pub fn lexicon_substitute(
    line: &str,
    lexicon: &SynonymLexicon,
    max_replacements: usize,
    seed: u64,
) -> String {
    substitute_words(line, max_replacements, seed, |w| {
        lexicon.get(w).map(<[String]>::to_vec).unwrap_or_default()
    })
}

/// Substitution by embedding neighbours with cosine similarity at least
/// `threshold`. Out-of-vocabulary words are left alone.
pub fn embedding_substitute(
    line: &str,
    table: &EmbeddingTable,
    threshold: f64,
    max_replacements: usize,
    seed: u64,
) -> Result<String, AugmentError> {
    if !(threshold > 0.0 && threshold <= 1.0) {
        return Err(AugmentError::InvalidThreshold(threshold));
    }
    Ok(substitute_words(line, max_replacements, seed, |w| {
        table
            .neighbors(w, threshold)
            .into_iter()
            .map(str::to_string)
            .collect()
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn forced_edits() {
        let mut ab: Vec<char> = "ab".chars().collect();
        apply_char_edit(&mut ab, CharOp::SwapAdjacent, 0, 'x').unwrap();
        assert_eq!(ab.iter().collect::<String>(), "ba");
        let mut abc: Vec<char> = "abc".chars().collect();
        apply_char_edit(&mut abc, CharOp::Delete, 1, 'x').unwrap();
        assert_eq!(abc.iter().collect::<String>(), "ac");
        let mut one = vec!['a'];
        assert!(apply_char_edit(&mut one, CharOp::SwapAdjacent, 0, 'x').is_err());
        assert!(apply_char_edit(&mut one, CharOp::Delete, 0, 'x').is_err());
        apply_char_edit(&mut one, CharOp::Insert, 1, 'z').unwrap();
        assert_eq!(one, ['a', 'z']);
    }

    #[test]
    fn swap_only_on_two_chars_is_exhaustive() {
        for seed in 0..20 {
            assert_eq!(charswap("ab", &[CharOp::SwapAdjacent], 1, seed).unwrap(), "ba");
        }
        assert!(matches!(
            charswap("a", &[CharOp::SwapAdjacent], 1, 0),
            Err(AugmentError::LineTooShort { .. })
        ));
        assert_eq!(charswap("a", &ALL_CHAR_OPS, 1, 0).unwrap().chars().count() >= 1, true);
    }

    #[test]
    fn delimiters_are_preserved() {
        for seed in 0..200 {
            let out = charswap("ur-bi2-lum{ki} ba-hul", &ALL_CHAR_OPS, 3, seed).unwrap();
            assert_eq!(out.matches('-').count(), 3, "{out}");
            assert_eq!(out.matches('{').count(), 1, "{out}");
            assert_eq!(out.split_whitespace().count(), 2, "{out}");
            crate::corpus::Phrase::from_line("p", &out).unwrap();
        }
    }

    #[test]
    fn lexicon_cases() {
        let empty = SynonymLexicon::default();
        assert_eq!(lexicon_substitute("barley  rations", &empty, 3, 1), "barley  rations");
        let mut lex = SynonymLexicon::default();
        lex.insert("rations", &["allotments"]).unwrap();
        assert_eq!(lexicon_substitute("barley rations", &lex, 3, 1), "barley allotments");
        assert_eq!(lexicon_substitute("barley rations", &lex, 0, 1), "barley rations");
    }

    #[test]
    fn embedding_cases() {
        let mut t = EmbeddingTable::new(2);
        t.insert("barley", vec![1.0, 0.0]).unwrap();
        t.insert("grain", vec![0.9, 0.1]).unwrap();
        t.insert("sheep", vec![0.0, 1.0]).unwrap();
        assert_eq!(
            embedding_substitute("barley for sheep", &t, 0.8, 5, 3).unwrap(),
            "grain for sheep"
        );
        assert_eq!(
            embedding_substitute("barley for sheep", &t, 1.0, 5, 3).unwrap(),
            "barley for sheep"
        );
        assert!(matches!(
            embedding_substitute("x", &t, 0.0, 1, 0),
            Err(AugmentError::InvalidThreshold(_))
        ));
    }
}
