use std::io::{BufRead, Write};

use super::{AnnotationMask, AttributionMap, Decision, InterpretError, Method};
use crate::corpus::{Genre, Phrase};
use crate::util::numbered_lines;

pub const ATTR_MAGIC: &str = "#cuneilab-attr v1";

/// Line-oriented text form:
///
/// ```text
/// #cuneilab-attr v1
/// phrase  <id>  <genre>  <source line>
/// target  <position>  <tag index>  <label>
/// method  <method>
/// baseline  <score>
/// token  <i>  <score>
/// sign  <i>  <j>  <score>
/// ```
/// Fields are tab-separated; `sign` lines appear only for sign-level maps.
pub fn write_attribution<W: Write>(map: &AttributionMap, mut w: W) -> Result<(), InterpretError> {
    writeln!(w, "{ATTR_MAGIC}")?;
    writeln!(w, "phrase\t{}\t{}\t{}", map.phrase.id, map.phrase.genre, map.phrase.source_line)?;
    writeln!(w, "target\t{}\t{}\t{}", map.target.position, map.target.tag, map.target.label)?;
    writeln!(w, "method\t{}", map.method)?;
    writeln!(w, "baseline\t{}", map.baseline_score)?;
    for (i, s) in map.scores.iter().enumerate() {
        writeln!(w, "token\t{i}\t{s}")?;
    }
    if let Some(signs) = &map.sign_scores {
        for (i, row) in signs.iter().enumerate() {
            for (j, s) in row.iter().enumerate() {
                writeln!(w, "sign\t{i}\t{j}\t{s}")?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_attribution<R: BufRead>(reader: R) -> Result<AttributionMap, InterpretError> {
    let lines = numbered_lines(reader)?;
    let bad = |line: usize, reason: &str| InterpretError::MalformedLine {
        line,
        reason: reason.to_string(),
    };
    let mut iter = lines.into_iter();
    match iter.next() {
        Some((_, l)) if l == ATTR_MAGIC => {}
        _ => return Err(bad(1, "missing #cuneilab-attr v1 header")),
    }
    let mut phrase = None;
    let mut target = None;
    let mut method = None;
    let mut baseline = None;
    let mut scores = Vec::new();
    let mut signs: Vec<Vec<f64>> = Vec::new();
    for (no, line) in iter {
        if line.is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split('\t').collect();
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad(no, "bad index"));
        let real = |s: &str| s.parse::<f64>().map_err(|_| bad(no, "bad number"));
        match f[..] {
            ["phrase", id, genre, source] => {
                let genre: Genre = genre.parse().map_err(|_| bad(no, "bad genre"))?;
                phrase = Some(
                    Phrase::from_line_with_limit(id, source, usize::MAX)
                        .map_err(|e| bad(no, &e.to_string()))?
                        .with_genre(genre),
                );
            }
            ["target", pos, tag, label] => {
                target = Some(Decision {
                    position: num(pos)?,
                    tag: num(tag)?,
                    label: label.to_string(),
                })
            }
            ["method", m] => method = Some(m.parse::<Method>().map_err(|e| bad(no, &e))?),
            ["baseline", s] => baseline = Some(real(s)?),
            ["token", i, s] => {
                if num(i)? != scores.len() {
                    return Err(bad(no, "token scores out of order"));
                }
                scores.push(real(s)?);
            }
            ["sign", i, j, s] => {
                let (i, j) = (num(i)?, num(j)?);
                if i == signs.len() && j == 0 {
                    signs.push(Vec::new());
                } else if i + 1 != signs.len() || j != signs[i].len() {
                    return Err(bad(no, "sign scores out of order"));
                }
                signs[i].push(real(s)?);
            }
            _ => return Err(bad(no, "unknown record")),
        }
    }
    let phrase = phrase.ok_or_else(|| bad(0, "missing phrase"))?;
    let target = target.ok_or_else(|| bad(0, "missing target"))?;
    if scores.len() != phrase.len() {
        return Err(bad(0, "token score count differs from phrase length"));
    }
    if target.position >= phrase.len() {
        return Err(bad(0, "target position outside the phrase"));
    }
    let sign_scores = if signs.is_empty() {
        None
    } else {
        if signs.len() != phrase.len()
            || signs.iter().zip(&phrase.tokens).any(|(r, t)| r.len() != t.signs.len())
        {
            return Err(bad(0, "sign scores do not match the phrase"));
        }
        Some(signs)
    };
    Ok(AttributionMap {
        phrase,
        target,
        scores,
        sign_scores,
        method: method.ok_or_else(|| bad(0, "missing method"))?,
        baseline_score: baseline.ok_or_else(|| bad(0, "missing baseline"))?,
    })
}

/// `phrase_id<TAB>idx1,idx2,...` per line; the index list may be empty.
pub fn parse_annotation_masks<R: BufRead>(reader: R) -> Result<Vec<AnnotationMask>, InterpretError> {
    let mut out = Vec::new();
    for (no, line) in numbered_lines(reader)? {
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, idx) = line.split_once('\t').unwrap_or((line.as_str(), ""));
        let id = id.trim();
        if id.is_empty() {
            return Err(InterpretError::MalformedLine {
                line: no,
                reason: "missing phrase id".into(),
            });
        }
        let annotated = idx
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<usize>().map_err(|_| InterpretError::MalformedLine {
                    line: no,
                    reason: format!("bad token index {s:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(AnnotationMask {
            phrase_id: id.to_string(),
            annotated,
        });
    }
    Ok(out)
}
