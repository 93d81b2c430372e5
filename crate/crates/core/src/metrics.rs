//! Evaluation metrics: token-level precision/recall/F1, BLEU, Cohen's
//! kappa and the three-point human-evaluation aggregate.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::hash::Hash;
use std::io::BufRead;

use thiserror::Error;

use crate::corpus::{TagSet, TaggedPhrase};
use crate::util::numbered_lines;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("gold and predicted data are not aligned: {0}")]
    AlignmentMismatch(String),
    #[error("inputs have {left} and {right} items")]
    LengthMismatch { left: usize, right: usize },
    #[error("empty input")]
    EmptyInput,
    #[error("line {line}: score {score} outside 1..=3")]
    ScoreOutOfRange { line: usize, score: i64 },
    #[error("annotators {0:?} and {1:?} share no rated examples")]
    NoOverlap(String, String),
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Averaging {
    PerClass,
    Micro,
    Weighted,
}

impl std::str::FromStr for Averaging {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per-class" | "perclass" | "class" => Ok(Averaging::PerClass),
            "micro" => Ok(Averaging::Micro),
            "weighted" => Ok(Averaging::Weighted),
            other => Err(format!("unknown averaging {other:?}")),
        }
    }
}

/// Gold-by-predicted token counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub tagset: TagSet,
    /// `[gold][pred]`
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(tagset: TagSet) -> Self {
        let n = tagset.len();
        ConfusionMatrix {
            tagset,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn add(&mut self, gold: usize, pred: usize) {
        self.counts[gold][pred] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn support(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn predicted(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassScores {
    pub label: String,
    pub scores: Scores,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prf1Report {
    pub confusion: ConfusionMatrix,
    pub per_class: Vec<ClassScores>,
    pub micro: Scores,
    pub weighted: Scores,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        0.0
    } else {
        num / den
    }
}

fn f1(p: f64, r: f64) -> f64 {
    ratio(2.0 * p * r, p + r)
}

impl Prf1Report {
    pub fn from_confusion(confusion: ConfusionMatrix) -> Self {
        let n = confusion.counts.len();
        let per_class: Vec<ClassScores> = (0..n)
            .map(|c| {
                let tp = confusion.counts[c][c] as f64;
                let precision = ratio(tp, confusion.predicted(c) as f64);
                let recall = ratio(tp, confusion.support(c) as f64);
                ClassScores {
                    label: confusion.tagset.label(c).unwrap_or("?").to_string(),
                    scores: Scores {
                        precision,
                        recall,
                        f1: f1(precision, recall),
                    },
                    support: confusion.support(c),
                }
            })
            .collect();
        let total = confusion.total() as f64;
        let accuracy = ratio(confusion.correct() as f64, total);
        let micro = Scores {
            precision: accuracy,
            recall: accuracy,
            f1: accuracy,
        };
        let weigh = |get: fn(&Scores) -> f64| {
            per_class
                .iter()
                .map(|c| c.support as f64 * get(&c.scores))
                .sum::<f64>()
                / if total == 0.0 { 1.0 } else { total }
        };
        let weighted = Scores {
            precision: weigh(|s| s.precision),
            recall: weigh(|s| s.recall),
            f1: weigh(|s| s.f1),
        };
        Prf1Report {
            confusion,
            per_class,
            micro,
            weighted,
        }
    }

    /// Averaged scores; `PerClass` falls back to the unweighted mean over
    /// classes with support.
    pub fn averaged(&self, averaging: Averaging) -> Scores {
        match averaging {
            Averaging::Micro => self.micro,
            Averaging::Weighted => self.weighted,
            Averaging::PerClass => {
                let present: Vec<&ClassScores> =
                    self.per_class.iter().filter(|c| c.support > 0).collect();
                let n = present.len().max(1) as f64;
                Scores {
                    precision: present.iter().map(|c| c.scores.precision).sum::<f64>() / n,
                    recall: present.iter().map(|c| c.scores.recall).sum::<f64>() / n,
                    f1: present.iter().map(|c| c.scores.f1).sum::<f64>() / n,
                }
            }
        }
    }

    pub fn class(&self, label: &str) -> Option<&ClassScores> {
        self.per_class.iter().find(|c| c.label == label)
    }

    pub fn errors(&self) -> u64 {
        self.confusion.total() - self.confusion.correct()
    }

    /// Aligned per-class table followed by the averaged rows.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<10} {:>9} {:>9} {:>9} {:>8}",
            "label", "precision", "recall", "f1", "support"
        );
        for c in self.per_class.iter().filter(|c| c.support > 0 || c.scores.precision > 0.0) {
            let _ = writeln!(
                out,
                "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>8}",
                c.label, c.scores.precision, c.scores.recall, c.scores.f1, c.support
            );
        }
        let total = self.confusion.total();
        for (name, s) in [
            ("macro", self.averaged(Averaging::PerClass)),
            ("micro", self.micro),
            ("weighted", self.weighted),
        ] {
            let _ = writeln!(
                out,
                "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>8}",
                name, s.precision, s.recall, s.f1, total
            );
        }
        out
    }
}

/// Token-level precision/recall/F1 between aligned gold and predicted
/// corpora. Undefined ratios (0/0) count as 0.
pub fn prf1(
    gold: &[TaggedPhrase],
    pred: &[TaggedPhrase],
    tagset: &TagSet,
) -> Result<Prf1Report, MetricsError> {
    if gold.len() != pred.len() {
        return Err(MetricsError::AlignmentMismatch(format!(
            "{} gold phrases, {} predicted",
            gold.len(),
            pred.len()
        )));
    }
    let mut confusion = ConfusionMatrix::new(tagset.clone());
    for (i, (g, p)) in gold.iter().zip(pred).enumerate() {
        if g.tags.len() != p.tags.len() || g.phrase.len() != p.phrase.len() {
            return Err(MetricsError::AlignmentMismatch(format!(
                "phrase {} ({:?}) has {} gold and {} predicted tags",
                i + 1,
                g.phrase.id,
                g.tags.len(),
                p.tags.len()
            )));
        }
        if g.phrase.surfaces().ne(p.phrase.surfaces()) {
            return Err(MetricsError::AlignmentMismatch(format!(
                "phrase {} ({:?}) has different tokens",
                i + 1,
                g.phrase.id
            )));
        }
        for (&gt, &pt) in g.tags.iter().zip(&p.tags) {
            if gt >= tagset.len() || pt >= tagset.len() {
                return Err(MetricsError::AlignmentMismatch(format!(
                    "tag index outside tag set in phrase {}",
                    i + 1
                )));
            }
            confusion.add(gt, pt);
        }
    }
    Ok(Prf1Report::from_confusion(confusion))
}

/// Percentage of misclassified words in a manual audit.
pub fn error_rate_percent(scored: usize, wrong: usize) -> f64 {
    100.0 * ratio(wrong as f64, scored as f64)
}

fn ngram_counts<'a>(tokens: &'a [&'a str], n: usize) -> HashMap<&'a [&'a str], usize> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Matched (clipped) and total hypothesis n-gram counts per order.
fn bleu_stats(hyp: &str, reference: &str, max_n: usize) -> (Vec<(usize, usize)>, usize, usize) {
    let h: Vec<&str> = hyp.split_whitespace().collect();
    let r: Vec<&str> = reference.split_whitespace().collect();
    let stats = (1..=max_n)
        .map(|n| {
            let hc = ngram_counts(&h, n);
            let rc = ngram_counts(&r, n);
            let matched = hc
                .iter()
                .map(|(g, &c)| c.min(rc.get(g).copied().unwrap_or(0)))
                .sum();
            (matched, h.len().saturating_sub(n - 1))
        })
        .collect();
    (stats, h.len(), r.len())
}

fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 {
        return 0.0;
    }
    (1.0 - ref_len as f64 / hyp_len as f64).min(0.0).exp()
}

/// Corpus-level BLEU in `[0, 1]` with uniform weights over `1..=max_n`.
///
/// Orders for which the hypotheses contain no n-grams at all are left out
/// of the geometric mean, which keeps the score defined for very short
/// segments.
pub fn bleu<S: AsRef<str>, T: AsRef<str>>(
    hypotheses: &[S],
    references: &[T],
    max_n: usize,
) -> Result<f64, MetricsError> {
    if hypotheses.len() != references.len() {
        return Err(MetricsError::LengthMismatch {
            left: hypotheses.len(),
            right: references.len(),
        });
    }
    if hypotheses.is_empty() || max_n == 0 {
        return Err(MetricsError::EmptyInput);
    }
    let mut matched = vec![0usize; max_n];
    let mut total = vec![0usize; max_n];
    let (mut hyp_len, mut ref_len) = (0, 0);
    for (h, r) in hypotheses.iter().zip(references) {
        let (stats, hl, rl) = bleu_stats(h.as_ref(), r.as_ref(), max_n);
        for (n, (m, t)) in stats.into_iter().enumerate() {
            matched[n] += m;
            total[n] += t;
        }
        hyp_len += hl;
        ref_len += rl;
    }
    let orders: Vec<usize> = (0..max_n).filter(|&n| total[n] > 0).collect();
    if orders.is_empty() || orders.iter().any(|&n| matched[n] == 0) {
        return Ok(0.0);
    }
    let log_mean = orders
        .iter()
        .map(|&n| (matched[n] as f64 / total[n] as f64).ln())
        .sum::<f64>()
        / orders.len() as f64;
    Ok(brevity_penalty(hyp_len, ref_len) * log_mean.exp())
}

/// Sentence-level BLEU with add-one smoothing on orders `n >= 2`.
pub fn sentence_bleu(hypothesis: &str, reference: &str, max_n: usize) -> f64 {
    let (stats, hl, rl) = bleu_stats(hypothesis, reference, max_n);
    if hl == 0 || stats.is_empty() {
        return 0.0;
    }
    let mut log_sum = 0.0;
    for (i, &(m, t)) in stats.iter().enumerate() {
        let p = if i == 0 {
            ratio(m as f64, t as f64)
        } else {
            (m as f64 + 1.0) / (t as f64 + 1.0)
        };
        if p == 0.0 {
            return 0.0;
        }
        log_sum += p.ln();
    }
    brevity_penalty(hl, rl) * (log_sum / stats.len() as f64).exp()
}

/// Cohen's kappa between two raters. Returns 1 when both raters always
/// use the same single label.
pub fn cohen_kappa<L: Eq + Hash>(a: &[L], b: &[L]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let mut count_a: HashMap<&L, usize> = HashMap::new();
    let mut count_b: HashMap<&L, usize> = HashMap::new();
    for x in a {
        *count_a.entry(x).or_default() += 1;
    }
    for y in b {
        *count_b.entry(y).or_default() += 1;
    }
    let p_o = agree / n;
    let p_e = count_a
        .iter()
        .map(|(label, &ca)| ca as f64 * count_b.get(label).copied().unwrap_or(0) as f64)
        .sum::<f64>()
        / (n * n);
    if (1.0 - p_e).abs() < f64::EPSILON {
        return Ok(if p_o == 1.0 { 1.0 } else { 0.0 });
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HumanEvalRecord {
    pub model_id: String,
    pub example_id: String,
    pub annotator_id: String,
    /// 3 good, 2 partially correct, 1 incorrect.
    pub score: u8,
}

impl HumanEvalRecord {
    pub fn new(model: &str, example: &str, annotator: &str, score: i64) -> Result<Self, MetricsError> {
        if !(1..=3).contains(&score) {
            return Err(MetricsError::ScoreOutOfRange { line: 0, score });
        }
        Ok(HumanEvalRecord {
            model_id: model.to_string(),
            example_id: example.to_string(),
            annotator_id: annotator.to_string(),
            score: score as u8,
        })
    }
}

/// Reads `model<TAB>example<TAB>annotator<TAB>score` lines; blank lines and
/// `#` comments are skipped.
pub fn parse_human_eval<R: BufRead>(reader: R) -> Result<Vec<HumanEvalRecord>, MetricsError> {
    let mut records = Vec::new();
    for (line, text) in numbered_lines(reader)? {
        if text.trim().is_empty() || text.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = text.split('\t').collect();
        if fields.len() != 4 {
            return Err(MetricsError::MalformedLine {
                line,
                reason: "expected 4 tab-separated fields".into(),
            });
        }
        let score: i64 = fields[3].trim().parse().map_err(|_| MetricsError::MalformedLine {
            line,
            reason: format!("bad score {:?}", fields[3]),
        })?;
        let record =
            HumanEvalRecord::new(fields[0], fields[1], fields[2], score).map_err(|e| match e {
                MetricsError::ScoreOutOfRange { score, .. } => {
                    MetricsError::ScoreOutOfRange { line, score }
                }
                other => other,
            })?;
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PairKappa {
    pub annotators: (String, String),
    pub shared: usize,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HumanEvalReport {
    /// Model id to (mean score, number of ratings).
    pub model_means: BTreeMap<String, (f64, usize)>,
    pub pairwise: Vec<PairKappa>,
}

impl HumanEvalReport {
    pub fn mean_kappa(&self) -> Option<f64> {
        if self.pairwise.is_empty() {
            None
        } else {
            Some(self.pairwise.iter().map(|p| p.kappa).sum::<f64>() / self.pairwise.len() as f64)
        }
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<24} {:>7} {:>7}", "model", "mean", "ratings");
        for (model, (mean, n)) in &self.model_means {
            let _ = writeln!(out, "{model:<24} {mean:>7.3} {n:>7}");
        }
        for p in &self.pairwise {
            let _ = writeln!(
                out,
                "kappa {} {} {:.3} (shared {})",
                p.annotators.0, p.annotators.1, p.kappa, p.shared
            );
        }
        if let Some(k) = self.mean_kappa() {
            let _ = writeln!(out, "mean_kappa {k:.3}");
        }
        out
    }
}

/// Per-model mean rating and kappa for every annotator pair, computed over
/// the (model, example) items both annotators rated.
pub fn human_eval_report(records: &[HumanEvalRecord]) -> Result<HumanEvalReport, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut sums: BTreeMap<String, (u64, usize)> = BTreeMap::new();
    let mut by_annotator: BTreeMap<&str, BTreeMap<(&str, &str), u8>> = BTreeMap::new();
    for r in records {
        if !(1..=3).contains(&r.score) {
            return Err(MetricsError::ScoreOutOfRange {
                line: 0,
                score: r.score as i64,
            });
        }
        let e = sums.entry(r.model_id.clone()).or_default();
        e.0 += r.score as u64;
        e.1 += 1;
        by_annotator
            .entry(&r.annotator_id)
            .or_default()
            .insert((&r.model_id, &r.example_id), r.score);
    }
    let model_means = sums
        .into_iter()
        .map(|(m, (sum, n))| (m, (sum as f64 / n as f64, n)))
        .collect();

    let annotators: Vec<&str> = by_annotator.keys().copied().collect();
    let mut pairwise = Vec::new();
    for (i, &a) in annotators.iter().enumerate() {
        for &b in &annotators[i + 1..] {
            let ra = &by_annotator[a];
            let rb = &by_annotator[b];
            let shared: BTreeSet<_> = ra.keys().filter(|k| rb.contains_key(*k)).collect();
            if shared.is_empty() {
                return Err(MetricsError::NoOverlap(a.to_string(), b.to_string()));
            }
            let xs: Vec<u8> = shared.iter().map(|k| ra[*k]).collect();
            let ys: Vec<u8> = shared.iter().map(|k| rb[*k]).collect();
            pairwise.push(PairKappa {
                annotators: (a.to_string(), b.to_string()),
                shared: shared.len(),
                kappa: cohen_kappa(&xs, &ys)?,
            });
        }
    }
    Ok(HumanEvalReport {
        model_means,
        pairwise,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Phrase;

    fn tagged(labels: &[&str], tagset: &TagSet) -> TaggedPhrase {
        let surfaces: Vec<String> = (0..labels.len()).map(|i| format!("w{i}")).collect();
        TaggedPhrase {
            phrase: Phrase::from_surfaces("p", &surfaces).unwrap(),
            tags: labels.iter().map(|l| tagset.index_of(l).unwrap()).collect(),
        }
    }

    #[test]
    fn identity_scores_one() {
        let tagset = TagSet::pos();
        let gold = vec![tagged(&["N", "V", "NE"], &tagset)];
        let report = prf1(&gold, &gold, &tagset).unwrap();
        for avg in [Averaging::PerClass, Averaging::Micro, Averaging::Weighted] {
            let s = report.averaged(avg);
            assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        }
    }

    #[test]
    fn hand_computed_weighted_f1() {
        let tagset = TagSet::pos();
        let gold = vec![tagged(&["N", "V", "N", "NE"], &tagset)];
        let pred = vec![tagged(&["N", "V", "V", "NE"], &tagset)];
        let report = prf1(&gold, &pred, &tagset).unwrap();
        assert!((report.class("N").unwrap().scores.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((report.class("V").unwrap().scores.f1 - 2.0 / 3.0).abs() < 1e-12);
        assert!((report.class("NE").unwrap().scores.f1 - 1.0).abs() < 1e-12);
        assert!((report.weighted.f1 - 0.75).abs() < 1e-12);
        assert!((report.micro.f1 - 0.75).abs() < 1e-12);
        assert_eq!(report.errors(), 1);
    }

    #[test]
    fn misaligned_inputs() {
        let tagset = TagSet::pos();
        let gold = vec![tagged(&["N", "V"], &tagset)];
        let pred = vec![tagged(&["N"], &tagset)];
        assert!(matches!(
            prf1(&gold, &pred, &tagset),
            Err(MetricsError::AlignmentMismatch(_))
        ));
        assert!(prf1(&gold, &[], &tagset).is_err());
    }

    #[test]
    fn audit_arithmetic() {
        assert!((error_rate_percent(496, 8) - 1.6129).abs() < 1e-4);
        assert!((error_rate_percent(496, 6) - 1.2097).abs() < 1e-4);
        assert_eq!(error_rate_percent(0, 0), 0.0);
    }

    #[test]
    fn bleu_examples() {
        let s = "the cat sat on the mat";
        assert_eq!(bleu(&[s], &[s], 4).unwrap(), 1.0);
        let short = bleu(&["the cat"], &["the cat sat"], 4).unwrap();
        assert!((short - (-0.5f64).exp()).abs() < 1e-12);
        assert!((short - 0.6065).abs() < 1e-4);
        assert_eq!(bleu(&["a b c d"], &["e f g h"], 4).unwrap(), 0.0);
        assert!(bleu(&["a"], &["a", "b"], 4).is_err());
        assert!(bleu::<&str, &str>(&[], &[], 4).is_err());
    }

    #[test]
    fn sentence_bleu_smoothing() {
        let s = "the cat sat on the mat";
        assert!((sentence_bleu(s, s, 4) - 1.0).abs() < 1e-12);
        let partial = sentence_bleu("the cat sat", "the cat sat down", 4);
        assert!(partial > 0.0 && partial < 1.0);
        assert_eq!(sentence_bleu("dog", "cat", 4), 0.0);
    }

    #[test]
    fn kappa_examples() {
        assert_eq!(cohen_kappa(&[1, 2, 1, 2], &[1, 2, 1, 2]).unwrap(), 1.0);
        let k = cohen_kappa(&[3, 3, 2, 1], &[3, 2, 2, 1]).unwrap();
        assert!((k - 0.4375 / 0.6875).abs() < 1e-12);
        assert_eq!(cohen_kappa(&[2, 2], &[2, 2]).unwrap(), 1.0);
        assert!(cohen_kappa(&[1], &[1, 2]).is_err());
        assert!(cohen_kappa::<u8>(&[], &[]).is_err());
    }

    #[test]
    fn human_eval_aggregation() {
        let recs: Vec<_> = [3, 3, 3]
            .iter()
            .enumerate()
            .map(|(i, &s)| HumanEvalRecord::new("m", &format!("e{i}"), "a", s).unwrap())
            .collect();
        let report = human_eval_report(&recs).unwrap();
        assert_eq!(report.model_means["m"], (3.0, 3));
        assert!(report.render().contains("3.000"));

        let text = "m\te1\ta\t3\nm\te2\ta\t1\nm\te1\tb\t3\nm\te2\tb\t1\n";
        let recs = parse_human_eval(text.as_bytes()).unwrap();
        let report = human_eval_report(&recs).unwrap();
        assert_eq!(report.pairwise.len(), 1);
        assert_eq!(report.pairwise[0].kappa, 1.0);

        assert!(matches!(
            parse_human_eval("m\te\ta\t4\n".as_bytes()),
            Err(MetricsError::ScoreOutOfRange { line: 1, score: 4 })
        ));
        let disjoint = vec![
            HumanEvalRecord::new("m", "e1", "a", 2).unwrap(),
            HumanEvalRecord::new("m", "e2", "b", 2).unwrap(),
        ];
        assert!(matches!(
            human_eval_report(&disjoint),
            Err(MetricsError::NoOverlap(..))
        ));
    }
}
