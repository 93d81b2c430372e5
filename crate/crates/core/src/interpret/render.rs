use std::fmt::Write as _;
use std::str::FromStr;

use super::{AnnotationMask, AttributionMap, InterpretError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenderFormat {
    Html,
    Ansi,
}

impl FromStr for RenderFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "html" => Ok(RenderFormat::Html),
            "ansi" => Ok(RenderFormat::Ansi),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

/// Whether the explained prediction matched the gold label.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Correctness {
    Correct,
    Wrong,
    Unknown,
}

impl Correctness {
    fn name(self) -> &'static str {
        match self {
            Correctness::Correct => "correct",
            Correctness::Wrong => "wrong",
            Correctness::Unknown => "unknown",
        }
    }

    fn color(self) -> (u8, u8, u8) {
        match self {
            Correctness::Correct => (0, 128, 0),
            Correctness::Wrong => (192, 0, 0),
            Correctness::Unknown => (96, 96, 96),
        }
    }
}

impl FromStr for Correctness {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "correct" => Ok(Correctness::Correct),
            "wrong" => Ok(Correctness::Wrong),
            "unknown" => Ok(Correctness::Unknown),
            other => Err(format!("unknown correctness {other:?}")),
        }
    }
}

/// Share of positive attribution mass that falls on annotated tokens.
/// Zero when there is no positive mass at all.
pub fn plausibility(map: &AttributionMap, mask: &AnnotationMask) -> Result<f64, InterpretError> {
    if map.phrase.id != mask.phrase_id {
        return Err(InterpretError::PhraseMismatch {
            map: map.phrase.id.clone(),
            mask: mask.phrase_id.clone(),
        });
    }
    if let Some(&bad) = mask.annotated.iter().find(|&&i| i >= map.scores.len()) {
        return Err(InterpretError::PositionOutOfRange {
            position: bad,
            len: map.scores.len(),
        });
    }
    let total: f64 = map.scores.iter().map(|s| s.max(0.0)).sum();
    let mut annotated = mask.annotated.clone();
    annotated.sort_unstable();
    annotated.dedup();
    let on: f64 = annotated.iter().map(|&i| map.scores[i].max(0.0)).sum();
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok(on / total)
}

/// Background colour: white blended toward pure green (positive) or pure
/// red (negative) by `|s| / max|s|`.
fn shade(score: f64, max_abs: f64) -> (u8, u8, u8) {
    let a = if max_abs > 0.0 { (score.abs() / max_abs).min(1.0) } else { 0.0 };
    let fade = (255.0 * (1.0 - a)).round() as u8;
    if score > 0.0 {
        (fade, 255, fade)
    } else if score < 0.0 {
        (255, fade, fade)
    } else {
        (255, 255, 255)
    }
}

fn escape(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for c in s.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            c => out.push(c),
        }
    }
    out
}

/// Saliency view of an attribution map. HTML output is a standalone page
/// with inline styles only; ANSI output uses 24-bit background colours.
pub fn render(map: &AttributionMap, format: RenderFormat, correctness: Correctness) -> Vec<u8> {
    let max_abs = map.max_abs();
    let header = format!(
        "{} ({}) · {} · baseline {:.4}",
        map.target,
        correctness.name(),
        map.method,
        map.baseline_score
    );
    let mut out = String::new();
    match format {
        RenderFormat::Html => {
            let (r, g, b) = correctness.color();
            out.push_str("<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n");
            let _ = writeln!(out, "<title>attribution {}</title>", escape(&map.phrase.id));
            out.push_str("</head>\n<body style=\"font-family:monospace;background:#ffffff;color:#000000\">\n");
            let _ = writeln!(
                out,
                "<div style=\"border:2px solid #{r:02x}{g:02x}{b:02x};color:#{r:02x}{g:02x}{b:02x};padding:4px;margin-bottom:8px\">{}</div>",
                escape(&header)
            );
            out.push_str("<p style=\"line-height:2\">\n");
            for (i, (tok, &s)) in map.phrase.tokens.iter().zip(&map.scores).enumerate() {
                let (r, g, b) = shade(s, max_abs);
                let outline = if i == map.target.position {
                    ";outline:1px solid #000000"
                } else {
                    ""
                };
                let _ = writeln!(
                    out,
                    "<span style=\"background-color:#{r:02x}{g:02x}{b:02x};padding:2px{outline}\" title=\"{s:.4}\">{}</span>",
                    escape(&tok.surface)
                );
            }
            out.push_str("</p>\n</body>\n</html>\n");
        }
        RenderFormat::Ansi => {
            let (r, g, b) = correctness.color();
            let _ = writeln!(out, "\x1b[1;38;2;{r};{g};{b}m{header}\x1b[0m");
            let spans: Vec<String> = map
                .phrase
                .tokens
                .iter()
                .zip(&map.scores)
                .map(|(tok, &s)| {
                    let (r, g, b) = shade(s, max_abs);
                    format!("\x1b[38;2;0;0;0;48;2;{r};{g};{b}m{}\x1b[0m", tok.surface)
                })
                .collect();
            out.push_str(&spans.join(" "));
            out.push('\n');
        }
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Phrase;
    use crate::interpret::{Decision, Method};

    fn map(scores: &[f64]) -> AttributionMap {
        let words: Vec<String> = (0..scores.len()).map(|i| format!("w{i}")).collect();
        AttributionMap {
            phrase: Phrase::from_surfaces("p", &words).unwrap(),
            target: Decision {
                position: 0,
                tag: 0,
                label: "PN".into(),
            },
            scores: scores.to_vec(),
            sign_scores: None,
            method: Method::Occlusion,
            baseline_score: 0.9,
        }
    }

    fn mask(ix: &[usize]) -> AnnotationMask {
        AnnotationMask {
            phrase_id: "p".into(),
            annotated: ix.to_vec(),
        }
    }

    #[test]
    fn plausibility_cases() {
        assert_eq!(plausibility(&map(&[0.5, -0.2, 0.5]), &mask(&[0])).unwrap(), 0.5);
        assert_eq!(plausibility(&map(&[0.5, -0.2, 0.0]), &mask(&[0])).unwrap(), 1.0);
        assert_eq!(plausibility(&map(&[0.5, 0.1]), &mask(&[])).unwrap(), 0.0);
        assert_eq!(plausibility(&map(&[-0.5, 0.0]), &mask(&[1])).unwrap(), 0.0);
        let other = AnnotationMask {
            phrase_id: "q".into(),
            annotated: vec![],
        };
        assert!(matches!(
            plausibility(&map(&[1.0]), &other),
            Err(InterpretError::PhraseMismatch { .. })
        ));
    }

    #[test]
    fn extremes_and_zeros() {
        let html = String::from_utf8(render(&map(&[1.0, -1.0]), RenderFormat::Html, Correctness::Correct)).unwrap();
        assert!(html.contains("background-color:#00ff00"));
        assert!(html.contains("background-color:#ff0000"));
        let html = String::from_utf8(render(&map(&[0.0, 0.0]), RenderFormat::Html, Correctness::Unknown)).unwrap();
        assert_eq!(html.matches("background-color:#ffffff").count(), 2);
        assert!(!html.contains("http"));
        assert!(!html.contains("<script"));
        let ansi = render(&map(&[1.0, -1.0]), RenderFormat::Ansi, Correctness::Wrong);
        assert!(String::from_utf8(ansi).unwrap().contains("48;2;0;255;0m"));
    }

    #[test]
    fn half_intensity() {
        assert_eq!(shade(0.5, 1.0), (128, 255, 128));
        assert_eq!(shade(-0.25, 1.0), (255, 191, 191));
    }
}
