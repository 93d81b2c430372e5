//! Line-oriented text formats.
//!
//! Plain formats (CoNLL-style TSV, one-phrase-per-line, parallel TSV) carry
//! no header. Saved corpora start with `#cuneilab-corpus v1 kind=.. config=..`
//! and keep phrase ids and genres so they load back structurally equal.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use super::{
    Corpus, CorpusConfig, CorpusError, Genre, ParallelPair, Phrase, TagSet, TaggedPhrase,
};

pub const CORPUS_MAGIC: &str = "#cuneilab-corpus";
pub const CORPUS_VERSION: &str = "v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusKind {
    Monolingual,
    Tagged,
    Parallel,
}

impl fmt::Display for CorpusKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusKind::Monolingual => "monolingual",
            CorpusKind::Tagged => "tagged",
            CorpusKind::Parallel => "parallel",
        })
    }
}

impl FromStr for CorpusKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "monolingual" => Ok(CorpusKind::Monolingual),
            "tagged" => Ok(CorpusKind::Tagged),
            "parallel" => Ok(CorpusKind::Parallel),
            _ => Err(()),
        }
    }
}

/// A corpus of any entry kind, as stored in a saved corpus file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadedCorpus {
    Monolingual(Corpus<Phrase>),
    Tagged {
        corpus: Corpus<TaggedPhrase>,
        tagset: TagSet,
    },
    Parallel(Corpus<ParallelPair>),
}

impl LoadedCorpus {
    pub fn kind(&self) -> CorpusKind {
        match self {
            LoadedCorpus::Monolingual(_) => CorpusKind::Monolingual,
            LoadedCorpus::Tagged { .. } => CorpusKind::Tagged,
            LoadedCorpus::Parallel(_) => CorpusKind::Parallel,
        }
    }

    pub fn config(&self) -> CorpusConfig {
        match self {
            LoadedCorpus::Monolingual(c) => c.config,
            LoadedCorpus::Tagged { corpus, .. } => corpus.config,
            LoadedCorpus::Parallel(c) => c.config,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            LoadedCorpus::Monolingual(c) => c.len(),
            LoadedCorpus::Tagged { corpus, .. } => corpus.len(),
            LoadedCorpus::Parallel(c) => c.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn into_monolingual(self) -> Result<Corpus<Phrase>, CorpusError> {
        match self {
            LoadedCorpus::Monolingual(c) => Ok(c),
            other => Err(CorpusError::WrongKind {
                expected: CorpusKind::Monolingual,
                found: other.kind(),
            }),
        }
    }

    pub fn into_tagged(self) -> Result<(Corpus<TaggedPhrase>, TagSet), CorpusError> {
        match self {
            LoadedCorpus::Tagged { corpus, tagset } => Ok((corpus, tagset)),
            other => Err(CorpusError::WrongKind {
                expected: CorpusKind::Tagged,
                found: other.kind(),
            }),
        }
    }

    pub fn into_parallel(self) -> Result<Corpus<ParallelPair>, CorpusError> {
        match self {
            LoadedCorpus::Parallel(c) => Ok(c),
            other => Err(CorpusError::WrongKind {
                expected: CorpusKind::Parallel,
                found: other.kind(),
            }),
        }
    }
}

fn malformed(line: usize, reason: impl fmt::Display) -> CorpusError {
    CorpusError::MalformedLine {
        line,
        reason: reason.to_string(),
    }
}

/// Reads `TOKEN<TAB>LABEL` records with blank lines between phrases.
///
/// Lines starting with `#` before the first token of a block carry phrase
/// metadata (`# id=...`, `# genre=...`, `# source=...`); other comment lines
/// are ignored. Phrases without an id are numbered `s1`, `s2`, ...
pub fn parse_conll<R: BufRead>(
    reader: R,
    tagset: &TagSet,
) -> Result<Corpus<TaggedPhrase>, CorpusError> {
    parse_conll_from(reader, tagset, 0, CorpusConfig::Monolingual)
}

fn parse_conll_from<R: BufRead>(
    reader: R,
    tagset: &TagSet,
    line_offset: usize,
    config: CorpusConfig,
) -> Result<Corpus<TaggedPhrase>, CorpusError> {
    #[derive(Default)]
    struct Block {
        start: usize,
        surfaces: Vec<String>,
        tags: Vec<usize>,
        id: Option<String>,
        genre: Option<Genre>,
        source: Option<String>,
    }

    let mut entries = Vec::new();
    let mut block = Block::default();

    let finish = |block: Block, entries: &mut Vec<TaggedPhrase>| -> Result<(), CorpusError> {
        if block.surfaces.is_empty() {
            if block.id.is_some() || block.source.is_some() {
                return Err(malformed(block.start, "metadata without tokens"));
            }
            return Ok(());
        }
        let id = block
            .id
            .unwrap_or_else(|| format!("s{}", entries.len() + 1));
        let mut phrase =
            Phrase::from_surfaces(id, &block.surfaces).map_err(|e| malformed(block.start, e))?;
        if let Some(genre) = block.genre {
            phrase.genre = genre;
        }
        if let Some(source) = block.source {
            phrase.source_line = source;
        }
        entries.push(TaggedPhrase {
            phrase,
            tags: block.tags,
        });
        Ok(())
    };

    for (i, line) in reader.lines().enumerate() {
        let line_no = line_offset + i + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if line.trim().is_empty() {
            finish(std::mem::take(&mut block), &mut entries)?;
            continue;
        }
        if block.surfaces.is_empty() && block.start == 0 {
            block.start = line_no;
        }
        if let Some(meta) = line.strip_prefix('#') {
            if !block.surfaces.is_empty() {
                return Err(malformed(line_no, "comment inside a phrase"));
            }
            let meta = meta.trim_start();
            if let Some(id) = meta.strip_prefix("id=") {
                block.id = Some(id.to_string());
            } else if let Some(genre) = meta.strip_prefix("genre=") {
                block.genre = Some(genre.parse().map_err(|e| malformed(line_no, e))?);
            } else if let Some(source) = meta.strip_prefix("source=") {
                block.source = Some(source.to_string());
            }
            continue;
        }
        let mut fields = line.split('\t');
        let (token, label) = match (fields.next(), fields.next(), fields.next()) {
            (Some(t), Some(l), None) if !t.is_empty() && !l.is_empty() => (t, l),
            _ => return Err(malformed(line_no, "expected TOKEN<TAB>LABEL")),
        };
        let tag = tagset
            .index_of(label)
            .ok_or_else(|| CorpusError::UnknownLabel {
                line: line_no,
                label: label.to_string(),
            })?;
        if let Err(e) = super::tokenize_signs(token) {
            return Err(malformed(line_no, e));
        }
        block.surfaces.push(token.to_string());
        block.tags.push(tag);
    }
    finish(block, &mut entries)?;

    if entries.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(Corpus::new(config, entries))
}

pub fn write_conll<W: Write>(
    corpus: &Corpus<TaggedPhrase>,
    tagset: &TagSet,
    mut writer: W,
) -> Result<(), CorpusError> {
    for entry in &corpus.entries {
        write_conll_block(entry, tagset, &mut writer)?;
    }
    writer.flush()?;
    Ok(())
}

fn write_conll_block<W: Write>(
    entry: &TaggedPhrase,
    tagset: &TagSet,
    writer: &mut W,
) -> Result<(), CorpusError> {
    for (token, &tag) in entry.phrase.tokens.iter().zip(&entry.tags) {
        let label = tagset.label(tag).ok_or(CorpusError::TagOutOfRange {
            index: tag,
            size: tagset.len(),
        })?;
        writeln!(writer, "{}\t{}", token.surface, label)?;
    }
    writeln!(writer)?;
    Ok(())
}

/// One phrase per line; phrases are numbered `l1`, `l2`, ... by line.
pub fn parse_monolingual<R: BufRead>(reader: R) -> Result<Corpus<Phrase>, CorpusError> {
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            return Err(malformed(line_no, "empty line"));
        }
        let phrase =
            Phrase::from_line(format!("l{line_no}"), &line).map_err(|e| malformed(line_no, e))?;
        entries.push(phrase);
    }
    if entries.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(Corpus::new(CorpusConfig::Monolingual, entries))
}

pub fn write_monolingual<W: Write>(
    corpus: &Corpus<Phrase>,
    mut writer: W,
) -> Result<(), CorpusError> {
    for phrase in &corpus.entries {
        writeln!(writer, "{}", phrase.source_line)?;
    }
    writer.flush()?;
    Ok(())
}

/// Single-file bitext: `SOURCE<TAB>TARGET` per line.
pub fn parse_parallel_tsv<R: BufRead>(
    reader: R,
    config: CorpusConfig,
) -> Result<Corpus<ParallelPair>, CorpusError> {
    let mut entries = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let (source, target) = line
            .split_once('\t')
            .ok_or_else(|| malformed(line_no, "expected SOURCE<TAB>TARGET"))?;
        entries.push(parallel_entry(line_no, source, target)?);
    }
    if entries.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(Corpus::new(config, entries))
}

/// Two aligned files with equal line counts.
pub fn parse_parallel_files<S: BufRead, T: BufRead>(
    source: S,
    target: T,
    config: CorpusConfig,
) -> Result<Corpus<ParallelPair>, CorpusError> {
    let sources = source.lines().collect::<Result<Vec<_>, _>>()?;
    let targets = target.lines().collect::<Result<Vec<_>, _>>()?;
    if sources.len() != targets.len() {
        return Err(CorpusError::LineCountMismatch {
            source_lines: sources.len(),
            target_lines: targets.len(),
        });
    }
    let entries = sources
        .iter()
        .zip(&targets)
        .enumerate()
        .map(|(i, (s, t))| parallel_entry(i + 1, s, t))
        .collect::<Result<Vec<_>, _>>()?;
    if entries.is_empty() {
        return Err(CorpusError::EmptyCorpus);
    }
    Ok(Corpus::new(config, entries))
}

fn parallel_entry(line_no: usize, source: &str, target: &str) -> Result<ParallelPair, CorpusError> {
    if target.trim().is_empty() {
        return Err(malformed(line_no, "empty target side"));
    }
    if target.contains('\t') {
        return Err(malformed(line_no, "more than two columns"));
    }
    let phrase =
        Phrase::from_line(format!("l{line_no}"), source).map_err(|e| malformed(line_no, e))?;
    Ok(ParallelPair {
        source: phrase,
        target: target.to_string(),
    })
}

pub fn write_parallel_tsv<W: Write>(
    corpus: &Corpus<ParallelPair>,
    mut writer: W,
) -> Result<(), CorpusError> {
    for pair in &corpus.entries {
        writeln!(writer, "{}\t{}", pair.source.source_line, pair.target)?;
    }
    writer.flush()?;
    Ok(())
}

fn check_field(line: usize, value: &str) -> Result<(), CorpusError> {
    if value.contains(['\t', '\n', '\r']) {
        Err(malformed(line, format!("field {value:?} contains a tab or newline")))
    } else {
        Ok(())
    }
}

/// Writes a saved corpus (header plus body).
pub fn write_corpus<W: Write>(corpus: &LoadedCorpus, writer: W) -> Result<(), CorpusError> {
    let mut w = BufWriter::new(writer);
    writeln!(
        w,
        "{CORPUS_MAGIC} {CORPUS_VERSION} kind={} config={}",
        corpus.kind(),
        corpus.config()
    )?;
    match corpus {
        LoadedCorpus::Monolingual(c) => {
            for p in &c.entries {
                check_field(0, &p.id)?;
                writeln!(w, "{}\t{}\t{}", p.id, p.genre, p.source_line)?;
            }
        }
        LoadedCorpus::Parallel(c) => {
            for pair in &c.entries {
                let p = &pair.source;
                check_field(0, &p.id)?;
                check_field(0, &pair.target)?;
                writeln!(w, "{}\t{}\t{}\t{}", p.id, p.genre, p.source_line, pair.target)?;
            }
        }
        LoadedCorpus::Tagged { corpus, tagset } => {
            writeln!(w, "#tagset\t{}", tagset.to_line())?;
            for entry in &corpus.entries {
                let p = &entry.phrase;
                check_field(0, &p.id)?;
                writeln!(w, "# id={}", p.id)?;
                writeln!(w, "# genre={}", p.genre)?;
                writeln!(w, "# source={}", p.source_line)?;
                write_conll_block(entry, tagset, &mut w)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn save_corpus(corpus: &LoadedCorpus, path: impl AsRef<Path>) -> Result<(), CorpusError> {
    let file = File::create(path)?;
    write_corpus(corpus, file)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<LoadedCorpus, CorpusError> {
    let file = File::open(path)?;
    read_corpus(BufReader::new(file))
}

/// Reads a saved corpus written by [`write_corpus`].
pub fn read_corpus<R: BufRead>(mut reader: R) -> Result<LoadedCorpus, CorpusError> {
    let mut header = String::new();
    reader.read_line(&mut header)?;
    let mut parts = header.trim_end().split(' ');
    if parts.next() != Some(CORPUS_MAGIC) {
        return Err(CorpusError::BadMagic);
    }
    let version = parts.next().ok_or(CorpusError::BadMagic)?;
    if version != CORPUS_VERSION {
        return Err(CorpusError::UnsupportedVersion(version.to_string()));
    }
    let mut kind = None;
    let mut config = None;
    for part in parts {
        match part.split_once('=') {
            Some(("kind", v)) => kind = v.parse::<CorpusKind>().ok(),
            Some(("config", v)) => {
                config = Some(v.parse::<CorpusConfig>().map_err(|e| malformed(1, e))?)
            }
            _ => return Err(malformed(1, format!("unexpected header field {part:?}"))),
        }
    }
    let kind = kind.ok_or_else(|| malformed(1, "missing kind"))?;
    let config = config.ok_or_else(|| malformed(1, "missing config"))?;

    match kind {
        CorpusKind::Tagged => {
            let mut tagset_line = String::new();
            reader.read_line(&mut tagset_line)?;
            let tagset = tagset_line
                .trim_end_matches(['\n', '\r'])
                .strip_prefix("#tagset\t")
                .ok_or_else(|| malformed(2, "missing #tagset line"))
                .and_then(|rest| TagSet::from_line(rest).map_err(|e| malformed(2, e)))?;
            let corpus = match parse_conll_from(reader, &tagset, 2, config) {
                Err(CorpusError::EmptyCorpus) => Corpus::new(config, Vec::new()),
                other => other?,
            };
            Ok(LoadedCorpus::Tagged { corpus, tagset })
        }
        CorpusKind::Monolingual | CorpusKind::Parallel => {
            let columns = if kind == CorpusKind::Monolingual { 3 } else { 4 };
            let mut mono = Vec::new();
            let mut parallel = Vec::new();
            for (i, line) in reader.lines().enumerate() {
                let line_no = i + 2;
                let line = line?;
                let fields: Vec<&str> = line.split('\t').collect();
                if fields.len() != columns {
                    return Err(malformed(line_no, format!("expected {columns} columns")));
                }
                let genre: Genre = fields[1].parse().map_err(|e| malformed(line_no, e))?;
                let phrase = Phrase::from_line(fields[0], fields[2])
                    .map_err(|e| malformed(line_no, e))?
                    .with_genre(genre);
                if phrase.source_line != fields[2] {
                    return Err(malformed(line_no, "source line has surrounding whitespace"));
                }
                if kind == CorpusKind::Monolingual {
                    mono.push(phrase);
                } else {
                    let pair = parallel_entry(line_no, fields[2], fields[3])?;
                    parallel.push(ParallelPair {
                        source: phrase,
                        target: pair.target,
                    });
                }
            }
            Ok(if kind == CorpusKind::Monolingual {
                LoadedCorpus::Monolingual(Corpus::new(config, mono))
            } else {
                LoadedCorpus::Parallel(Corpus::new(config, parallel))
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Corpus<TaggedPhrase>, CorpusError> {
        parse_conll(text.as_bytes(), &TagSet::pos())
    }

    #[test]
    fn single_record() {
        let corpus = parse("ku3-babbar\tN\n\n").unwrap();
        assert_eq!(corpus.len(), 1);
        assert_eq!(corpus.entries[0].phrase.len(), 1);
        assert_eq!(corpus.entries[0].tags, vec![5]);
    }

    #[test]
    fn unknown_label_reports_its_line() {
        let text = "a\tN\nb\tV\n\nc\tXX\n\n";
        match parse(text) {
            Err(CorpusError::UnknownLabel { line, label }) => {
                assert_eq!(line, 4);
                assert_eq!(label, "XX");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_and_empty_inputs() {
        assert!(matches!(
            parse("a N\n"),
            Err(CorpusError::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            parse("a\tN\tX\n"),
            Err(CorpusError::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            parse("ok\tN\nur-{d\tN\n"),
            Err(CorpusError::MalformedLine { line: 2, .. })
        ));
        assert!(matches!(parse("\n\n"), Err(CorpusError::EmptyCorpus)));
    }

    #[test]
    fn final_block_without_blank_line() {
        let corpus = parse("a\tN\n\nb\tV\nc\tN").unwrap();
        assert_eq!(corpus.len(), 2);
        assert_eq!(corpus.entries[1].tags, vec![9, 5]);
    }

    #[test]
    fn monolingual_rejects_blank_lines() {
        assert!(matches!(
            parse_monolingual("a b\n\nc\n".as_bytes()),
            Err(CorpusError::MalformedLine { line: 2, .. })
        ));
        let c = parse_monolingual("a b\nc\n".as_bytes()).unwrap();
        assert_eq!(c.entries[1].id, "l2");
    }

    #[test]
    fn parallel_inputs() {
        let c = parse_parallel_tsv("a b\tx y\n".as_bytes(), CorpusConfig::AllSeg).unwrap();
        assert_eq!(c.entries[0].target, "x y");
        assert!(matches!(
            parse_parallel_tsv("a b\t \n".as_bytes(), CorpusConfig::AllSeg),
            Err(CorpusError::MalformedLine { line: 1, .. })
        ));
        assert!(matches!(
            parse_parallel_files("a\nb\n".as_bytes(), "x\n".as_bytes(), CorpusConfig::AllSeg),
            Err(CorpusError::LineCountMismatch { .. })
        ));
    }

    #[test]
    fn header_checks() {
        let mono = LoadedCorpus::Monolingual(Corpus::new(
            CorpusConfig::Monolingual,
            vec![
                Phrase::from_line("a", "x").unwrap(),
                Phrase::from_line("b", "y z").unwrap(),
                Phrase::from_line("c", "w").unwrap().with_genre(Genre::UrIIIAdmin),
            ],
        ));
        let mut buf = Vec::new();
        write_corpus(&mono, &mut buf).unwrap();
        assert_eq!(read_corpus(buf.as_slice()).unwrap(), mono);

        let text = String::from_utf8(buf).unwrap();
        let tampered = text.replacen(" v1 ", " v99 ", 1);
        assert!(matches!(
            read_corpus(tampered.as_bytes()),
            Err(CorpusError::UnsupportedVersion(v)) if v == "v99"
        ));
        assert!(matches!(
            read_corpus("hello\n".as_bytes()),
            Err(CorpusError::BadMagic)
        ));
    }
}
