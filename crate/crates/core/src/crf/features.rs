//! Feature templates and feature-string extraction.
//!
//! Every feature is derived from one source token. When that token is the
//! mask surface the feature is simply not emitted, so occluding a token is
//! the same as deleting its features.

use std::fmt;

use crate::corpus::{Phrase, SignKind, Token};
use crate::rules::{Rule, RuleKind, RuleSet};
use crate::MASK_SURFACE;

/// Longest prefix/suffix template.
pub const MAX_AFFIX: usize = 4;

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FeatureTemplate {
    WordIdentity,
    /// Bag of signs of the token at the given offset (-1, 0 or +1).
    SignIdentity(i8),
    /// First `k` characters, `1 <= k <= 4`.
    Prefix(usize),
    /// Last `k` characters, `1 <= k <= 4`.
    Suffix(usize),
    ContainsDeterminative,
    IsNumericSign,
    RuleFeature(Rule),
    PrevWordIdentity,
    NextWordIdentity,
    /// Enables learned tag-to-tag transition weights.
    TagBigram,
}

impl FeatureTemplate {
    pub fn validate(&self) -> Result<(), String> {
        match self {
            FeatureTemplate::SignIdentity(o) if !(-1..=1).contains(o) => {
                Err(format!("sign offset {o} outside -1..=1"))
            }
            FeatureTemplate::Prefix(k) | FeatureTemplate::Suffix(k)
                if *k == 0 || *k > MAX_AFFIX =>
            {
                Err(format!("affix length {k} outside 1..={MAX_AFFIX}"))
            }
            _ => Ok(()),
        }
    }

    /// Tab-separated serialized form (without the leading record key).
    pub fn to_record(&self) -> String {
        match self {
            FeatureTemplate::WordIdentity => "WordIdentity".into(),
            FeatureTemplate::SignIdentity(o) => format!("SignIdentity\t{o}"),
            FeatureTemplate::Prefix(k) => format!("Prefix\t{k}"),
            FeatureTemplate::Suffix(k) => format!("Suffix\t{k}"),
            FeatureTemplate::ContainsDeterminative => "ContainsDeterminative".into(),
            FeatureTemplate::IsNumericSign => "IsNumericSign".into(),
            FeatureTemplate::RuleFeature(r) => format!(
                "RuleFeature\t{}\t{}\t{}\t{}",
                r.kind, r.pattern, r.hint, r.id
            ),
            FeatureTemplate::PrevWordIdentity => "PrevWordIdentity".into(),
            FeatureTemplate::NextWordIdentity => "NextWordIdentity".into(),
            FeatureTemplate::TagBigram => "TagBigram".into(),
        }
    }

    pub fn from_record(record: &str) -> Result<Self, String> {
        let fields: Vec<&str> = record.split('\t').collect();
        let int = |s: Option<&&str>| {
            s.and_then(|s| s.parse::<i64>().ok())
                .ok_or_else(|| format!("bad template {record:?}"))
        };
        let template = match (fields[0], fields.len()) {
            ("WordIdentity", 1) => FeatureTemplate::WordIdentity,
            ("SignIdentity", 2) => FeatureTemplate::SignIdentity(
                i8::try_from(int(fields.get(1))?).map_err(|e| e.to_string())?,
            ),
            ("Prefix", 2) => FeatureTemplate::Prefix(
                usize::try_from(int(fields.get(1))?).map_err(|e| e.to_string())?,
            ),
            ("Suffix", 2) => FeatureTemplate::Suffix(
                usize::try_from(int(fields.get(1))?).map_err(|e| e.to_string())?,
            ),
            ("ContainsDeterminative", 1) => FeatureTemplate::ContainsDeterminative,
            ("IsNumericSign", 1) => FeatureTemplate::IsNumericSign,
            ("RuleFeature", 5) => {
                let kind: RuleKind = fields[1]
                    .parse()
                    .map_err(|_| format!("unknown rule kind {:?}", fields[1]))?;
                FeatureTemplate::RuleFeature(
                    Rule::new(kind, fields[2], fields[3], fields[4]).map_err(|e| e.to_string())?,
                )
            }
            ("PrevWordIdentity", 1) => FeatureTemplate::PrevWordIdentity,
            ("NextWordIdentity", 1) => FeatureTemplate::NextWordIdentity,
            ("TagBigram", 1) => FeatureTemplate::TagBigram,
            _ => return Err(format!("unknown template {record:?}")),
        };
        template.validate()?;
        Ok(template)
    }
}

impl fmt::Display for FeatureTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_record().replace('\t', " "))
    }
}

/// Lexical templates without rules: word, neighbours, signs at -1/0/+1,
/// affixes of length 1-4, determinative and numeral flags, tag bigrams.
pub fn lexical_templates() -> Vec<FeatureTemplate> {
    let mut templates = vec![
        FeatureTemplate::WordIdentity,
        FeatureTemplate::PrevWordIdentity,
        FeatureTemplate::NextWordIdentity,
        FeatureTemplate::SignIdentity(-1),
        FeatureTemplate::SignIdentity(0),
        FeatureTemplate::SignIdentity(1),
    ];
    templates.extend((1..=MAX_AFFIX).map(FeatureTemplate::Prefix));
    templates.extend((1..=MAX_AFFIX).map(FeatureTemplate::Suffix));
    templates.extend([
        FeatureTemplate::ContainsDeterminative,
        FeatureTemplate::IsNumericSign,
        FeatureTemplate::TagBigram,
    ]);
    templates
}

/// One rule-feature template per rule, in rule order.
pub fn rule_templates(ruleset: &RuleSet) -> Vec<FeatureTemplate> {
    ruleset
        .rules()
        .iter()
        .cloned()
        .map(FeatureTemplate::RuleFeature)
        .collect()
}

/// The lexical templates followed by one template per rule.
pub fn default_templates(ruleset: &RuleSet) -> Vec<FeatureTemplate> {
    let mut templates = lexical_templates();
    templates.extend(rule_templates(ruleset));
    templates
}

fn visible(phrase: &Phrase, position: isize) -> Option<&Token> {
    if position < 0 {
        return None;
    }
    phrase
        .tokens
        .get(position as usize)
        .filter(|t| t.surface != MASK_SURFACE)
}

fn is_numeric(token: &Token) -> bool {
    token
        .signs
        .iter()
        .any(|s| s.kind == SignKind::Base && s.text.starts_with(|c: char| c.is_ascii_digit()))
}

/// Feature strings for `position`, sorted and de-duplicated.
///
/// # Panics
///
/// Panics if `position` is out of range.
pub fn feature_strings(
    templates: &[FeatureTemplate],
    phrase: &Phrase,
    position: usize,
) -> Vec<String> {
    assert!(position < phrase.len(), "position out of range");
    let pos = position as isize;
    let current = visible(phrase, pos);
    let mut out = Vec::new();
    for template in templates {
        match template {
            FeatureTemplate::WordIdentity => {
                if let Some(t) = current {
                    out.push(format!("w={}", t.surface));
                }
            }
            FeatureTemplate::PrevWordIdentity => {
                if position == 0 {
                    out.push("w-1=<s>".to_string());
                } else if let Some(t) = visible(phrase, pos - 1) {
                    out.push(format!("w-1={}", t.surface));
                }
            }
            FeatureTemplate::NextWordIdentity => {
                if position + 1 == phrase.len() {
                    out.push("w+1=</s>".to_string());
                } else if let Some(t) = visible(phrase, pos + 1) {
                    out.push(format!("w+1={}", t.surface));
                }
            }
            FeatureTemplate::SignIdentity(offset) => {
                if let Some(t) = visible(phrase, pos + *offset as isize) {
                    for sign in &t.signs {
                        out.push(format!("s{offset:+}={}", sign.text));
                    }
                }
            }
            FeatureTemplate::Prefix(k) => {
                if let Some(t) = current {
                    if t.surface.chars().count() >= *k {
                        let prefix: String = t.surface.chars().take(*k).collect();
                        out.push(format!("p{k}={prefix}"));
                    }
                }
            }
            FeatureTemplate::Suffix(k) => {
                if let Some(t) = current {
                    let n = t.surface.chars().count();
                    if n >= *k {
                        let suffix: String = t.surface.chars().skip(n - k).collect();
                        out.push(format!("x{k}={suffix}"));
                    }
                }
            }
            FeatureTemplate::ContainsDeterminative => {
                if let Some(t) = current {
                    if t.has_determinative() {
                        out.push("det".to_string());
                        for sign in t.signs.iter().filter(|s| s.is_determinative()) {
                            out.push(format!("det={}", sign.text));
                        }
                    }
                }
            }
            FeatureTemplate::IsNumericSign => {
                if current.is_some_and(is_numeric) {
                    out.push("num".to_string());
                }
            }
            FeatureTemplate::RuleFeature(rule) => {
                if rule.fires(phrase, position) {
                    out.push(format!("rule={}", rule.id));
                }
            }
            FeatureTemplate::TagBigram => {}
        }
    }
    out.sort();
    out.dedup();
    out
}
