//! Pluggable substitution resources: word vectors, synonym lists and
//! labelled entity lists.

use std::collections::BTreeMap;
use std::io::BufRead;

use indexmap::IndexMap;

use super::AugmentError;
use crate::corpus::tokenize_signs;
use crate::util::numbered_lines;

fn malformed(line: usize, reason: impl Into<String>) -> AugmentError {
    AugmentError::MalformedLine {
        line,
        reason: reason.into(),
    }
}

/// Word vectors in file order.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    vectors: IndexMap<String, Vec<f64>>,
    norms: Vec<f64>,
}

pub fn cosine(a: &[f64], b: &[f64]) -> Option<f64> {
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some(a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / (na * nb))
}

impl EmbeddingTable {
    pub fn new(dimension: usize) -> Self {
        EmbeddingTable {
            dimension,
            vectors: IndexMap::new(),
            norms: Vec::new(),
        }
    }

    pub fn insert(&mut self, word: &str, vector: Vec<f64>) -> Result<(), AugmentError> {
        if vector.len() != self.dimension {
            return Err(AugmentError::DimensionMismatch {
                word: word.to_string(),
                expected: self.dimension,
                found: vector.len(),
            });
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(AugmentError::NonFiniteVector(word.to_string()));
        }
        let norm = vector.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (idx, old) = self.vectors.insert_full(word.to_string(), vector);
        if old.is_some() {
            self.norms[idx] = norm;
        } else {
            self.norms.push(norm);
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }

    /// Words other than `word` whose cosine similarity to it is at least
    /// `threshold`, in table order. Zero vectors never match.
    pub fn neighbors(&self, word: &str, threshold: f64) -> Vec<&str> {
        let Some((idx, _, v)) = self.vectors.get_full(word) else {
            return Vec::new();
        };
        let nv = self.norms[idx];
        if nv == 0.0 {
            return Vec::new();
        }
        self.vectors
            .iter()
            .zip(&self.norms)
            .enumerate()
            .filter(|&(j, ((_, _), &nu))| j != idx && nu != 0.0)
            .filter(|&(_, ((_, u), &nu))| {
                let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
                dot / (nu * nv) >= threshold
            })
            .map(|(_, ((w, _), _))| w.as_str())
            .collect()
    }

    /// Reads the word2vec text format: a `count dimension` header, then
    /// `word v1 ... vD` per line.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, AugmentError> {
        let lines = numbered_lines(reader)?;
        let mut iter = lines.iter().filter(|(_, l)| !l.trim().is_empty());
        let (hline, header) = iter.next().ok_or(AugmentError::EmptyResource("embeddings"))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|x| x.parse().map_err(|_| malformed(*hline, "bad header")))
            .collect::<Result<_, _>>()?;
        let [count, dimension] = dims[..] else {
            return Err(malformed(*hline, "header must be `count dimension`"));
        };
        if dimension == 0 {
            return Err(malformed(*hline, "dimension must be positive"));
        }
        let mut table = EmbeddingTable::new(dimension);
        for (no, line) in iter {
            let mut parts = line.split_whitespace();
            let word = parts.next().expect("non-blank line");
            let vector = parts
                .map(|x| x.parse::<f64>().map_err(|_| malformed(*no, format!("bad number {x:?}"))))
                .collect::<Result<Vec<_>, _>>()?;
            table.insert(word, vector).map_err(|e| malformed(*no, e.to_string()))?;
        }
        if table.len() != count {
            return Err(malformed(
                *hline,
                format!("header promises {count} vectors, found {}", table.len()),
            ));
        }
        Ok(table)
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("{} {}\n", self.len(), self.dimension);
        for (w, v) in &self.vectors {
            out.push_str(w);
            for x in v {
                out.push(' ');
                out.push_str(&x.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Word to synonym list.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SynonymLexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl SynonymLexicon {
    /// Adds an entry; the word itself is dropped from its own list and an
    /// entry left empty is rejected.
    pub fn insert(&mut self, word: &str, synonyms: &[&str]) -> Result<(), AugmentError> {
        let list: Vec<String> = synonyms
            .iter()
            .map(|s| s.trim())
            .filter(|s| !s.is_empty() && *s != word)
            .map(str::to_string)
            .collect();
        if list.is_empty() {
            return Err(AugmentError::InvalidResource(format!(
                "{word:?} has no synonyms besides itself"
            )));
        }
        self.entries.insert(word.to_string(), list);
        Ok(())
    }

    pub fn get(&self, word: &str) -> Option<&[String]> {
        self.entries.get(word).map(Vec::as_slice)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `word<TAB>syn1,syn2,...` per line.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, AugmentError> {
        let mut lex = SynonymLexicon::default();
        for (no, line) in numbered_lines(reader)? {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, syns) = line
                .split_once('\t')
                .ok_or_else(|| malformed(no, "expected word<TAB>synonyms"))?;
            let syns: Vec<&str> = syns.split(',').collect();
            lex.insert(word.trim(), &syns)
                .map_err(|e| malformed(no, e.to_string()))?;
        }
        Ok(lex)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (word, syns) in &self.entries {
            out.push_str(&format!("{word}\t{}\n", syns.join(",")));
        }
        out
    }
}

/// Entity label to candidate surfaces, in file order per label.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct EntityLexicon {
    entries: BTreeMap<String, Vec<String>>,
}

impl EntityLexicon {
    pub fn insert(&mut self, label: &str, surface: &str) -> Result<(), AugmentError> {
        tokenize_signs(surface)
            .map_err(|e| AugmentError::InvalidResource(format!("{surface:?}: {e}")))?;
        if surface.contains(char::is_whitespace) {
            return Err(AugmentError::InvalidResource(format!(
                "entity {surface:?} contains whitespace"
            )));
        }
        let list = self.entries.entry(label.to_string()).or_default();
        if !list.iter().any(|s| s == surface) {
            list.push(surface.to_string());
        }
        Ok(())
    }

    pub fn candidates(&self, label: &str) -> Option<&[String]> {
        self.entries.get(label).map(Vec::as_slice)
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Label of a known entity surface; the first label in sorted order
    /// wins when a surface is listed more than once.
    pub fn label_of(&self, surface: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(_, list)| list.iter().any(|s| s == surface))
            .map(|(l, _)| l.as_str())
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `LABEL<TAB>surface` per line.
    pub fn parse<R: BufRead>(reader: R) -> Result<Self, AugmentError> {
        let mut lex = EntityLexicon::default();
        for (no, line) in numbered_lines(reader)? {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (label, surface) = line
                .split_once('\t')
                .ok_or_else(|| malformed(no, "expected LABEL<TAB>surface"))?;
            lex.insert(label.trim(), surface.trim())
                .map_err(|e| malformed(no, e.to_string()))?;
        }
        Ok(lex)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (label, list) in &self.entries {
            for s in list {
                out.push_str(&format!("{label}\t{s}\n"));
            }
        }
        out
    }
}
