//! Hand-written transliteration rules, compiled into binary feature
//! detectors for the CRF.
//!
//! Rules are independent: each one either fires at a position or not, and
//! the fired set does not depend on rule order. They carry a label hint but
//! never decide a tag on their own; the CRF learns how much to trust them.

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

use crate::corpus::{Phrase, NER_LABELS, POS_LABELS};
use crate::MASK_SURFACE;

/// Hints that are not labels of either tag set.
pub const PSEUDO_HINTS: [&str; 2] = ["YEAR", "MONTH"];

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("line {line}: unknown rule kind {kind:?}")]
    UnknownRuleKind { line: usize, kind: String },
    #[error("duplicate rule id {0:?}")]
    DuplicateId(String),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("rule {id:?}: {reason}")]
    InvalidRule { id: String, reason: String },
    #[error("position {position} out of range for phrase of {len} tokens")]
    IndexOutOfRange { position: usize, len: usize },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RuleKind {
    Prefix,
    Suffix,
    Contains,
    Equals,
    /// Fires on the token right after a token equal to the pattern.
    PrevEquals,
    /// Fires on the token right before a token equal to the pattern.
    NextEquals,
}

impl fmt::Display for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RuleKind::Prefix => "Prefix",
            RuleKind::Suffix => "Suffix",
            RuleKind::Contains => "Contains",
            RuleKind::Equals => "Equals",
            RuleKind::PrevEquals => "PrevEquals",
            RuleKind::NextEquals => "NextEquals",
        })
    }
}

impl FromStr for RuleKind {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "Prefix" => RuleKind::Prefix,
            "Suffix" => RuleKind::Suffix,
            "Contains" => RuleKind::Contains,
            "Equals" => RuleKind::Equals,
            "PrevEquals" => RuleKind::PrevEquals,
            "NextEquals" => RuleKind::NextEquals,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub kind: RuleKind,
    pub pattern: String,
    pub hint: String,
    pub id: String,
}

impl Rule {
    pub fn new(kind: RuleKind, pattern: &str, hint: &str, id: &str) -> Result<Self, RuleError> {
        let invalid = |reason: &str| RuleError::InvalidRule {
            id: id.to_string(),
            reason: reason.to_string(),
        };
        if id.is_empty() || id.contains(char::is_whitespace) {
            return Err(invalid("id must be non-empty without whitespace"));
        }
        if pattern.is_empty() {
            return Err(invalid("empty pattern"));
        }
        if pattern.contains(['\t', '\n', '\r']) {
            return Err(invalid("pattern contains a tab or newline"));
        }
        let known_hint = POS_LABELS.contains(&hint)
            || NER_LABELS.contains(&hint)
            || PSEUDO_HINTS.contains(&hint);
        if !known_hint {
            return Err(invalid(&format!("unknown hint {hint:?}")));
        }
        Ok(Rule {
            kind,
            pattern: pattern.to_string(),
            hint: hint.to_string(),
            id: id.to_string(),
        })
    }

    /// Whether the rule fires for the token at `position`. Masked tokens
    /// never fire anything, and neither do context rules whose neighbour
    /// falls outside the phrase.
    pub fn fires(&self, phrase: &Phrase, position: usize) -> bool {
        let Some(surface) = phrase.surface(position) else {
            return false;
        };
        if surface == MASK_SURFACE {
            return false;
        }
        let p = self.pattern.as_str();
        match self.kind {
            RuleKind::Prefix => surface.starts_with(p),
            RuleKind::Suffix => surface.ends_with(p),
            RuleKind::Contains => surface.contains(p),
            RuleKind::Equals => surface == p,
            RuleKind::PrevEquals => position
                .checked_sub(1)
                .and_then(|prev| phrase.surface(prev))
                .is_some_and(|s| s == p),
            RuleKind::NextEquals => phrase.surface(position + 1).is_some_and(|s| s == p),
        }
    }

    fn to_tsv(&self) -> String {
        format!("{}\t{}\t{}\t{}", self.kind, self.pattern, self.hint, self.id)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RuleSet {
    rules: Vec<Rule>,
}

impl RuleSet {
    pub fn new(rules: Vec<Rule>) -> Result<Self, RuleError> {
        let mut seen = HashSet::new();
        for rule in &rules {
            if !seen.insert(rule.id.as_str()) {
                return Err(RuleError::DuplicateId(rule.id.clone()));
            }
        }
        Ok(RuleSet { rules })
    }

    pub fn empty() -> Self {
        RuleSet::default()
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&Rule> {
        self.rules.iter().find(|r| r.id == id)
    }
}

/// The built-in transliteration rules.
///
/// `{d}` yields two rules (personal and divine name) and the `mu`/`iti`
/// cues mark only the token right after the cue word.
pub fn default_rules() -> RuleSet {
    use RuleKind::*;
    let spec = [
        (Prefix, "ur-", "PN", "prefix-ur-pn"),
        (Prefix, "lu2-", "PN", "prefix-lu2-pn"),
        (Prefix, "dumu", "PN", "prefix-dumu-pn"),
        (PrevEquals, "mu", "YEAR", "after-mu-year"),
        (PrevEquals, "iti", "MONTH", "after-iti-month"),
        (Contains, "ki", "GN", "contains-ki-gn"),
        (Suffix, "-hul", "V", "suffix-hul-v"),
        (Contains, "{d}", "PN", "contains-d-pn"),
        (Contains, "{d}", "DN", "contains-d-dn"),
        (NextEquals, "gin", "N", "before-gin-n"),
    ];
    let rules = spec
        .iter()
        .map(|&(kind, pattern, hint, id)| Rule::new(kind, pattern, hint, id))
        .collect::<Result<Vec<_>, _>>()
        .expect("built-in rules are valid");
    RuleSet::new(rules).expect("built-in rule ids are unique")
}

/// Ids of every rule that fires at `position`, in sorted order.
pub fn apply_rules<'a>(
    ruleset: &'a RuleSet,
    phrase: &Phrase,
    position: usize,
) -> Result<BTreeSet<&'a str>, RuleError> {
    if position >= phrase.len() {
        return Err(RuleError::IndexOutOfRange {
            position,
            len: phrase.len(),
        });
    }
    Ok(ruleset
        .rules
        .iter()
        .filter(|r| r.fires(phrase, position))
        .map(|r| r.id.as_str())
        .collect())
}

/// Parses `KIND<TAB>PATTERN<TAB>HINT<TAB>ID` lines. Blank lines and lines
/// starting with `#` are skipped.
pub fn parse_rules(text: &str) -> Result<RuleSet, RuleError> {
    let mut rules = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(RuleError::MalformedLine {
                line: line_no,
                reason: format!("expected 4 tab-separated fields, found {}", fields.len()),
            });
        }
        let kind = fields[0]
            .parse::<RuleKind>()
            .map_err(|_| RuleError::UnknownRuleKind {
                line: line_no,
                kind: fields[0].to_string(),
            })?;
        let rule = Rule::new(kind, fields[1], fields[2], fields[3]).map_err(|e| {
            RuleError::MalformedLine {
                line: line_no,
                reason: e.to_string(),
            }
        })?;
        rules.push(rule);
    }
    RuleSet::new(rules)
}

pub fn format_rules(ruleset: &RuleSet) -> String {
    let mut out = String::new();
    for rule in &ruleset.rules {
        out.push_str(&rule.to_tsv());
        out.push('\n');
    }
    out
}

pub fn load_rules(path: impl AsRef<Path>) -> Result<RuleSet, RuleError> {
    parse_rules(&fs::read_to_string(path)?)
}

pub fn save_rules(ruleset: &RuleSet, path: impl AsRef<Path>) -> Result<(), RuleError> {
    fs::write(path, format_rules(ruleset))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phrase(words: &[&str]) -> Phrase {
        Phrase::from_surfaces("t", words).unwrap()
    }

    fn fired(words: &[&str], position: usize) -> Vec<String> {
        let rules = default_rules();
        apply_rules(&rules, &phrase(words), position)
            .unwrap()
            .into_iter()
            .map(str::to_string)
            .collect()
    }

    #[test]
    fn default_rule_inventory() {
        let rules = default_rules();
        // three name prefixes, two cue words, ki, -hul, {d} twice, gin
        assert_eq!(rules.len(), 10);
        let kinds: Vec<_> = rules.rules().iter().map(|r| r.kind).collect();
        assert_eq!(kinds.iter().filter(|k| **k == RuleKind::Prefix).count(), 3);
    }

    #[test]
    fn divine_determinative_fires_both_hints() {
        assert_eq!(
            fired(&["ur-{d}asznan"], 0),
            ["contains-d-dn", "contains-d-pn", "prefix-ur-pn"]
        );
    }

    #[test]
    fn context_rules() {
        assert_eq!(fired(&["e2", "gin"], 0), ["before-gin-n"]);
        assert_eq!(fired(&["mu", "us2-sa"], 1), ["after-mu-year"]);
        assert_eq!(fired(&["iti", "ezem-mah"], 1), ["after-iti-month"]);
        assert!(fired(&["mu", "us2-sa"], 0).is_empty());
        assert!(fired(&["ku3-babbar"], 0).is_empty());
    }

    #[test]
    fn place_name_also_looks_like_personal_name() {
        assert_eq!(
            fired(&["ur-bi2-lum{ki}"], 0),
            ["contains-ki-gn", "prefix-ur-pn"]
        );
    }

    #[test]
    fn suffix_and_mask() {
        assert_eq!(fired(&["ba-hul"], 0), ["suffix-hul-v"]);
        assert!(fired(&[MASK_SURFACE, "gin"], 0).is_empty());
        assert!(fired(&["mu", MASK_SURFACE], 1).is_empty());
    }

    #[test]
    fn out_of_range_position() {
        let rules = default_rules();
        assert!(matches!(
            apply_rules(&rules, &phrase(&["a"]), 1),
            Err(RuleError::IndexOutOfRange { position: 1, len: 1 })
        ));
    }

    #[test]
    fn tsv_round_trip_and_errors() {
        let rules = default_rules();
        assert_eq!(parse_rules(&format_rules(&rules)).unwrap(), rules);
        assert!(matches!(
            parse_rules("FOO\tx\tN\tr1\n"),
            Err(RuleError::UnknownRuleKind { line: 1, .. })
        ));
        assert!(matches!(
            parse_rules("Prefix\tx\tN\tr1\nSuffix\ty\tV\tr1\n"),
            Err(RuleError::DuplicateId(id)) if id == "r1"
        ));
        assert!(matches!(
            parse_rules("# comment\n\nPrefix\tx\tZZ\tr1\n"),
            Err(RuleError::MalformedLine { line: 3, .. })
        ));
        assert!(matches!(
            parse_rules("Prefix\t\tN\tr1\n"),
            Err(RuleError::MalformedLine { line: 1, .. })
        ));
    }
}
