//! Corpus data model, file formats and corpus-level transformations.

mod io;
mod ops;
mod sign;

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

pub use io::{
    load_corpus, parse_conll, parse_monolingual, parse_parallel_files, parse_parallel_tsv,
    read_corpus, save_corpus, write_conll, write_corpus, write_monolingual, write_parallel_tsv,
    CorpusKind, LoadedCorpus, CORPUS_MAGIC, CORPUS_VERSION,
};
pub use ops::{build_comp, shard, split_train_test, CompOutput, DEFAULT_TERMINATORS};
pub use sign::{detokenize, tokenize_signs, Sign, SignKind, Token};

/// Default upper bound on tokens per phrase.
pub const DEFAULT_MAX_TOKENS: usize = 64;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("empty surface")]
    EmptySurface,
    #[error("unbalanced braces in {surface:?}")]
    UnbalancedBraces { surface: String },
    #[error("empty sign at byte {offset} in {surface:?}")]
    EmptySign { surface: String, offset: usize },
    #[error("phrase has no tokens")]
    EmptyPhrase,
    #[error("phrase has {len} tokens, limit is {max}")]
    PhraseTooLong { len: usize, max: usize },
    #[error("line {line}: unknown label {label:?}")]
    UnknownLabel { line: usize, label: String },
    #[error("line {line}: malformed line: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("tag sequence length {tags} does not match {tokens} tokens")]
    TagLengthMismatch { tags: usize, tokens: usize },
    #[error("tag index {index} outside tag set of {size} labels")]
    TagOutOfRange { index: usize, size: usize },
    #[error("parallel inputs have {source_lines} source and {target_lines} target lines")]
    LineCountMismatch {
        source_lines: usize,
        target_lines: usize,
    },
    #[error("shard size must be positive")]
    ZeroShardSize,
    #[error("test fraction {0} outside (0, 1)")]
    InvalidFraction(f64),
    #[error("split of {total} entries leaves {train} train and {test} test")]
    DegenerateSplit {
        total: usize,
        train: usize,
        test: usize,
    },
    #[error("missing or unrecognised corpus header")]
    BadMagic,
    #[error("unsupported corpus format version {0:?}")]
    UnsupportedVersion(String),
    #[error("corpus kind {found} where {expected} was expected")]
    WrongKind {
        expected: CorpusKind,
        found: CorpusKind,
    },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

impl CorpusError {
    /// 1-based line number for errors tied to a position in an input file.
    pub fn line(&self) -> Option<usize> {
        match self {
            CorpusError::UnknownLabel { line, .. } | CorpusError::MalformedLine { line, .. } => {
                Some(*line)
            }
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Genre {
    UrIIIAdmin,
    #[default]
    Other,
}

impl fmt::Display for Genre {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Genre::UrIIIAdmin => "UrIIIAdmin",
            Genre::Other => "Other",
        })
    }
}

impl FromStr for Genre {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "UrIIIAdmin" => Ok(Genre::UrIIIAdmin),
            "Other" => Ok(Genre::Other),
            other => Err(format!("unknown genre {other:?}")),
        }
    }
}

/// A tokenized line of transliterated text.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Phrase {
    pub id: String,
    pub tokens: Vec<Token>,
    pub source_line: String,
    pub genre: Genre,
}

impl Phrase {
    /// Tokenizes a whitespace-separated line.
    pub fn from_line(id: impl Into<String>, line: &str) -> Result<Self, CorpusError> {
        Self::from_line_with_limit(id, line, DEFAULT_MAX_TOKENS)
    }

    pub fn from_line_with_limit(
        id: impl Into<String>,
        line: &str,
        max_tokens: usize,
    ) -> Result<Self, CorpusError> {
        let source_line = line.trim();
        let surfaces: Vec<&str> = source_line.split_whitespace().collect();
        let mut phrase = Self::from_surfaces_with_limit(id, &surfaces, max_tokens)?;
        phrase.source_line = source_line.to_string();
        Ok(phrase)
    }

    pub fn from_surfaces<S: AsRef<str>>(
        id: impl Into<String>,
        surfaces: &[S],
    ) -> Result<Self, CorpusError> {
        Self::from_surfaces_with_limit(id, surfaces, DEFAULT_MAX_TOKENS)
    }

    pub fn from_surfaces_with_limit<S: AsRef<str>>(
        id: impl Into<String>,
        surfaces: &[S],
        max_tokens: usize,
    ) -> Result<Self, CorpusError> {
        if surfaces.is_empty() {
            return Err(CorpusError::EmptyPhrase);
        }
        if surfaces.len() > max_tokens {
            return Err(CorpusError::PhraseTooLong {
                len: surfaces.len(),
                max: max_tokens,
            });
        }
        let tokens = surfaces
            .iter()
            .enumerate()
            .map(|(i, s)| Token::new(s.as_ref(), i))
            .collect::<Result<Vec<_>, _>>()?;
        let source_line = surfaces
            .iter()
            .map(AsRef::as_ref)
            .collect::<Vec<_>>()
            .join(" ");
        Ok(Phrase {
            id: id.into(),
            tokens,
            source_line,
            genre: Genre::Other,
        })
    }

    pub fn with_genre(mut self, genre: Genre) -> Self {
        self.genre = genre;
        self
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn surfaces(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(|t| t.surface.as_str())
    }

    pub fn surface(&self, position: usize) -> Option<&str> {
        self.tokens.get(position).map(|t| t.surface.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum TagSetName {
    Pos,
    Ner,
    Custom(String),
}

impl fmt::Display for TagSetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TagSetName::Pos => f.write_str("pos"),
            TagSetName::Ner => f.write_str("ner"),
            TagSetName::Custom(name) => f.write_str(name),
        }
    }
}

pub const POS_LABELS: [&str; 10] = ["AJ", "AV", "CNJ", "DET", "J", "N", "NE", "NU", "O", "V"];
pub const NER_LABELS: [&str; 13] = [
    "AN", "DN", "EN", "FN", "GN", "MN", "O", "ON", "PN", "RN", "SN", "TN", "WN",
];

/// A closed, ordered label inventory. Label order fixes tie-breaking in
/// every decoder, so it must never be reordered.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TagSet {
    pub name: TagSetName,
    labels: Vec<String>,
}

impl TagSet {
    pub fn pos() -> Self {
        TagSet {
            name: TagSetName::Pos,
            labels: POS_LABELS.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn ner() -> Self {
        TagSet {
            name: TagSetName::Ner,
            labels: NER_LABELS.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// An ad-hoc inventory; used for toy models and external label sets.
    pub fn custom<S: AsRef<str>>(name: &str, labels: &[S]) -> Result<Self, String> {
        let labels: Vec<String> = labels.iter().map(|s| s.as_ref().to_string()).collect();
        if labels.is_empty() {
            return Err("tag set needs at least one label".into());
        }
        for (i, label) in labels.iter().enumerate() {
            if label.is_empty() || label.contains(char::is_whitespace) {
                return Err(format!("invalid label {label:?}"));
            }
            if labels[..i].contains(label) {
                return Err(format!("duplicate label {label:?}"));
            }
        }
        let name = match name {
            "pos" if labels == POS_LABELS => TagSetName::Pos,
            "ner" if labels == NER_LABELS => TagSetName::Ner,
            "pos" | "ner" => return Err(format!("{name} tag set has a fixed inventory")),
            other => TagSetName::Custom(other.to_string()),
        };
        Ok(TagSet { name, labels })
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "pos" => Some(Self::pos()),
            "ner" => Some(Self::ner()),
            _ => None,
        }
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn label(&self, index: usize) -> Option<&str> {
        self.labels.get(index).map(String::as_str)
    }

    /// One-line form: `name<TAB>label label ...`.
    pub fn to_line(&self) -> String {
        format!("{}\t{}", self.name, self.labels.join(" "))
    }

    pub fn from_line(line: &str) -> Result<Self, String> {
        let (name, labels) = line
            .split_once('\t')
            .ok_or_else(|| format!("bad tag set line {line:?}"))?;
        let labels: Vec<&str> = labels.split(' ').filter(|s| !s.is_empty()).collect();
        TagSet::custom(name, &labels)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaggedPhrase {
    pub phrase: Phrase,
    pub tags: Vec<usize>,
}

impl TaggedPhrase {
    pub fn new(phrase: Phrase, tags: Vec<usize>, tagset: &TagSet) -> Result<Self, CorpusError> {
        if tags.len() != phrase.len() {
            return Err(CorpusError::TagLengthMismatch {
                tags: tags.len(),
                tokens: phrase.len(),
            });
        }
        if let Some(&bad) = tags.iter().find(|&&t| t >= tagset.len()) {
            return Err(CorpusError::TagOutOfRange {
                index: bad,
                size: tagset.len(),
            });
        }
        Ok(TaggedPhrase { phrase, tags })
    }

    /// Builds a tagged phrase from `(surface, label)` pairs.
    pub fn from_pairs<S: AsRef<str>, L: AsRef<str>>(
        id: impl Into<String>,
        pairs: &[(S, L)],
        tagset: &TagSet,
    ) -> Result<Self, CorpusError> {
        let surfaces: Vec<&str> = pairs.iter().map(|(s, _)| s.as_ref()).collect();
        let phrase = Phrase::from_surfaces(id, &surfaces)?;
        let tags = pairs
            .iter()
            .map(|(_, l)| {
                tagset
                    .index_of(l.as_ref())
                    .ok_or_else(|| CorpusError::UnknownLabel {
                        line: 0,
                        label: l.as_ref().to_string(),
                    })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(TaggedPhrase { phrase, tags })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ParallelPair {
    pub source: Phrase,
    pub target: String,
}

impl ParallelPair {
    pub fn new(source: Phrase, target: impl Into<String>) -> Result<Self, CorpusError> {
        let target = target.into();
        if target.trim().is_empty() {
            return Err(CorpusError::MalformedLine {
                line: 0,
                reason: "empty target side".into(),
            });
        }
        Ok(ParallelPair { source, target })
    }
}

/// Which bitext configuration (or monolingual data) a corpus represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CorpusConfig {
    UrIIISeg,
    UrIIIComp,
    AllSeg,
    AllComp,
    #[default]
    Monolingual,
}

impl CorpusConfig {
    /// The sentence-level counterpart of a segment-level configuration.
    pub fn completed(self) -> Self {
        match self {
            CorpusConfig::UrIIISeg => CorpusConfig::UrIIIComp,
            CorpusConfig::AllSeg => CorpusConfig::AllComp,
            other => other,
        }
    }
}

impl fmt::Display for CorpusConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusConfig::UrIIISeg => "UrIIISeg",
            CorpusConfig::UrIIIComp => "UrIIIComp",
            CorpusConfig::AllSeg => "AllSeg",
            CorpusConfig::AllComp => "AllComp",
            CorpusConfig::Monolingual => "Monolingual",
        })
    }
}

impl FromStr for CorpusConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "UrIIISeg" => CorpusConfig::UrIIISeg,
            "UrIIIComp" => CorpusConfig::UrIIIComp,
            "AllSeg" => CorpusConfig::AllSeg,
            "AllComp" => CorpusConfig::AllComp,
            "Monolingual" => CorpusConfig::Monolingual,
            other => return Err(format!("unknown corpus config {other:?}")),
        })
    }
}

/// A homogeneous, ordered collection of entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus<E> {
    pub config: CorpusConfig,
    pub entries: Vec<E>,
}

impl<E> Corpus<E> {
    pub fn new(config: CorpusConfig, entries: Vec<E>) -> Self {
        Corpus { config, entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, E> {
        self.entries.iter()
    }
}

impl<'a, E> IntoIterator for &'a Corpus<E> {
    type Item = &'a E;
    type IntoIter = std::slice::Iter<'a, E>;

    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagsets_have_fixed_inventories() {
        assert_eq!(TagSet::pos().labels().len(), 10);
        assert_eq!(TagSet::ner().labels().len(), 13);
        assert_eq!(TagSet::pos().index_of("NE"), Some(6));
        assert_eq!(TagSet::ner().index_of("GN"), Some(4));
        assert!(TagSet::custom("pos", &["N", "V"]).is_err());
        assert!(TagSet::custom("toy", &["A", "A"]).is_err());
        let line = TagSet::ner().to_line();
        assert_eq!(TagSet::from_line(&line).unwrap(), TagSet::ner());
    }

    #[test]
    fn phrase_length_limits() {
        assert!(matches!(
            Phrase::from_line("p", "   "),
            Err(CorpusError::EmptyPhrase)
        ));
        let long = vec!["a"; 65];
        assert!(matches!(
            Phrase::from_surfaces("p", &long),
            Err(CorpusError::PhraseTooLong { len: 65, max: 64 })
        ));
        let p = Phrase::from_line("p", "  ku3-babbar   gin ").unwrap();
        assert_eq!(p.len(), 2);
        assert_eq!(p.tokens[1].index, 1);
        assert_eq!(p.source_line, "ku3-babbar   gin");
    }

    #[test]
    fn tagged_phrase_checks_lengths() {
        let tagset = TagSet::pos();
        let phrase = Phrase::from_line("p", "a b").unwrap();
        assert!(TaggedPhrase::new(phrase.clone(), vec![0], &tagset).is_err());
        assert!(TaggedPhrase::new(phrase.clone(), vec![0, 10], &tagset).is_err());
        assert!(TaggedPhrase::new(phrase, vec![0, 9], &tagset).is_ok());
    }

    #[test]
    fn parallel_pair_rejects_blank_target() {
        let src = Phrase::from_line("p", "a").unwrap();
        assert!(ParallelPair::new(src.clone(), "  ").is_err());
        assert!(ParallelPair::new(src, "x").is_ok());
    }
}
