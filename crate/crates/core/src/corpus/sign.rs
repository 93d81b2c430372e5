//! Sign-level decomposition of transliterated words.
//!
//! A surface such as `ur-bi2-lum{ki}` is split on hyphens that occur outside
//! braces. Every `{...}` group becomes its own determinative sign. Each sign
//! remembers the separator that preceded it so the surface can be rebuilt
//! byte for byte.

use std::fmt;

use super::CorpusError;

/// Whether a sign is a pronounced base sign or a bracketed classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignKind {
    Base,
    Determinative,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Sign {
    /// Sign text. Determinatives keep their braces (`{d}`).
    pub text: String,
    pub kind: SignKind,
    /// Either `""` or `"-"`.
    pub separator_before: String,
}

impl Sign {
    pub fn is_determinative(&self) -> bool {
        self.kind == SignKind::Determinative
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Token {
    pub surface: String,
    pub signs: Vec<Sign>,
    /// 0-based position in the owning phrase.
    pub index: usize,
}

impl Token {
    pub fn new(surface: &str, index: usize) -> Result<Self, CorpusError> {
        let mut token = tokenize_signs(surface)?;
        token.index = index;
        Ok(token)
    }

    /// Rebuilds the surface from the signs and their recorded separators.
    pub fn detokenize(&self) -> String {
        detokenize(&self.signs)
    }

    pub fn has_determinative(&self) -> bool {
        self.signs.iter().any(Sign::is_determinative)
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.surface)
    }
}

pub fn detokenize(signs: &[Sign]) -> String {
    let mut out = String::new();
    for sign in signs {
        out.push_str(&sign.separator_before);
        out.push_str(&sign.text);
    }
    out
}

/// Splits a transliterated word into signs.
///
/// Hyphens separate base signs; `{...}` groups are atomic determinatives and
/// may attach to either side of a base sign without a hyphen. Empty base
/// signs (leading, trailing or doubled hyphens) are rejected because they
/// cannot be represented without breaking the separator invariant.
pub fn tokenize_signs(surface: &str) -> Result<Token, CorpusError> {
    if surface.is_empty() {
        return Err(CorpusError::EmptySurface);
    }
    let mut signs = Vec::new();
    let mut base = String::new();
    // Separator seen since the last emitted sign.
    let mut pending_sep = "";
    let mut chars = surface.char_indices().peekable();

    let flush_base =
        |base: &mut String, pending_sep: &mut &str, signs: &mut Vec<Sign>| {
            if !base.is_empty() {
                signs.push(Sign {
                    text: std::mem::take(base),
                    kind: SignKind::Base,
                    separator_before: pending_sep.to_string(),
                });
                *pending_sep = "";
            }
        };

    while let Some((offset, ch)) = chars.next() {
        match ch {
            '{' => {
                flush_base(&mut base, &mut pending_sep, &mut signs);
                let mut text = String::from('{');
                let mut closed = false;
                for (_, inner) in chars.by_ref() {
                    match inner {
                        '}' => {
                            text.push('}');
                            closed = true;
                            break;
                        }
                        '{' => {
                            return Err(CorpusError::UnbalancedBraces {
                                surface: surface.to_string(),
                            })
                        }
                        other => text.push(other),
                    }
                }
                if !closed {
                    return Err(CorpusError::UnbalancedBraces {
                        surface: surface.to_string(),
                    });
                }
                signs.push(Sign {
                    text,
                    kind: SignKind::Determinative,
                    separator_before: pending_sep.to_string(),
                });
                pending_sep = "";
            }
            '}' => {
                return Err(CorpusError::UnbalancedBraces {
                    surface: surface.to_string(),
                })
            }
            '-' => {
                if base.is_empty() && (signs.is_empty() || !pending_sep.is_empty()) {
                    return Err(CorpusError::EmptySign {
                        surface: surface.to_string(),
                        offset,
                    });
                }
                flush_base(&mut base, &mut pending_sep, &mut signs);
                pending_sep = "-";
            }
            other => base.push(other),
        }
    }
    flush_base(&mut base, &mut pending_sep, &mut signs);
    if !pending_sep.is_empty() {
        return Err(CorpusError::EmptySign {
            surface: surface.to_string(),
            offset: surface.len(),
        });
    }

    Ok(Token {
        surface: surface.to_string(),
        signs,
        index: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn texts(token: &Token) -> Vec<(&str, SignKind)> {
        token
            .signs
            .iter()
            .map(|s| (s.text.as_str(), s.kind))
            .collect()
    }

    #[test]
    fn splits_plain_hyphenated_word() {
        let t = tokenize_signs("ku3-babbar").unwrap();
        assert_eq!(
            texts(&t),
            vec![("ku3", SignKind::Base), ("babbar", SignKind::Base)]
        );
    }

    #[test]
    fn determinative_between_signs() {
        let t = tokenize_signs("ur-{d}asznan").unwrap();
        assert_eq!(
            texts(&t),
            vec![
                ("ur", SignKind::Base),
                ("{d}", SignKind::Determinative),
                ("asznan", SignKind::Base)
            ]
        );
        assert_eq!(t.signs[1].separator_before, "-");
        assert_eq!(t.signs[2].separator_before, "");
        assert_eq!(t.detokenize(), "ur-{d}asznan");
    }

    #[test]
    fn trailing_determinative() {
        let t = tokenize_signs("ur-bi2-lum{ki}").unwrap();
        assert_eq!(
            texts(&t),
            vec![
                ("ur", SignKind::Base),
                ("bi2", SignKind::Base),
                ("lum", SignKind::Base),
                ("{ki}", SignKind::Determinative)
            ]
        );
        assert_eq!(t.detokenize(), "ur-bi2-lum{ki}");
    }

    #[test]
    fn rejects_bad_surfaces() {
        assert!(matches!(tokenize_signs(""), Err(CorpusError::EmptySurface)));
        for bad in ["ur-{d", "ur}", "{d{x}}", "lum{ki"] {
            assert!(
                matches!(
                    tokenize_signs(bad),
                    Err(CorpusError::UnbalancedBraces { .. })
                ),
                "{bad}"
            );
        }
        for bad in ["-ur", "ur-", "ur--bi2"] {
            assert!(
                matches!(tokenize_signs(bad), Err(CorpusError::EmptySign { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn lone_determinative_is_a_sign() {
        let t = tokenize_signs("{d}").unwrap();
        assert_eq!(texts(&t), vec![("{d}", SignKind::Determinative)]);
        let t = tokenize_signs("{d}-ab").unwrap();
        assert_eq!(t.detokenize(), "{d}-ab");
    }
}
