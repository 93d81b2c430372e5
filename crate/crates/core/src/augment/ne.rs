use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::resources::EntityLexicon;
use super::AugmentError;
use crate::corpus::{Corpus, Phrase, TagSet, TaggedPhrase};
use crate::util::mix_seed;

/// Labels that name entities; `O` never does.
fn covered<'a>(lexicon: &'a EntityLexicon, label: &str) -> Option<&'a [String]> {
    if label == "O" {
        return None;
    }
    lexicon.candidates(label).filter(|c| !c.is_empty())
}

/// Named-entity substitution on tagged data.
///
/// Each variant replaces every token whose label the lexicon covers with a
/// same-label surface; tags are copied unchanged. A phrase yields at most
/// `multiplier` variants, after dropping any identical to the original or
/// to an earlier variant. Output is the originals followed by all variants,
/// grouped by phrase; variant ids are `{id}~ne{k}`.
pub fn ne_substitute(
    corpus: &Corpus<TaggedPhrase>,
    tagset: &TagSet,
    lexicon: &EntityLexicon,
    multiplier: usize,
    seed: u64,
) -> Result<Corpus<TaggedPhrase>, AugmentError> {
    if multiplier == 0 {
        return Err(AugmentError::InvalidPlan("multiplier must be ≥ 1".into()));
    }
    let label_of = |t: usize| tagset.label(t).unwrap_or("O");
    let any_covered = corpus
        .iter()
        .flat_map(|tp| tp.tags.iter())
        .any(|&t| covered(lexicon, label_of(t)).is_some());
    if !any_covered {
        return Err(AugmentError::EmptyLexicon);
    }

    let mut entries = corpus.entries.clone();
    for (i, tp) in corpus.iter().enumerate() {
        let slots: Vec<(usize, &[String])> = tp
            .tags
            .iter()
            .enumerate()
            .filter_map(|(pos, &t)| covered(lexicon, label_of(t)).map(|c| (pos, c)))
            .collect();
        if slots.is_empty() {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, i as u64));
        let original: Vec<&str> = tp.phrase.surfaces().collect();
        let mut seen: HashSet<Vec<&str>> = HashSet::from([original.clone()]);
        for k in 0..multiplier {
            let mut surfaces = original.clone();
            for &(pos, cands) in &slots {
                surfaces[pos] = cands.choose(&mut rng).expect("non-empty").as_str();
            }
            if !seen.insert(surfaces.clone()) {
                continue;
            }
            let phrase = Phrase::from_surfaces_with_limit(
                format!("{}~ne{k}", tp.phrase.id),
                &surfaces,
                usize::MAX,
            )?
            .with_genre(tp.phrase.genre);
            entries.push(TaggedPhrase {
                phrase,
                tags: tp.tags.clone(),
            });
        }
    }
    Ok(Corpus::new(corpus.config, entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::CorpusConfig;

    fn one(pairs: &[(&str, &str)]) -> Corpus<TaggedPhrase> {
        Corpus::new(
            CorpusConfig::Monolingual,
            vec![TaggedPhrase::from_pairs("p", pairs, &TagSet::ner()).unwrap()],
        )
    }

    #[test]
    fn single_candidate() {
        let mut lex = EntityLexicon::default();
        lex.insert("GN", "nibru{ki}").unwrap();
        let out = ne_substitute(&one(&[("ur-bi2-lum{ki}", "GN")]), &TagSet::ner(), &lex, 3, 0)
            .unwrap();
        assert_eq!(out.len(), 2);
        assert_eq!(out.entries[1].phrase.source_line, "nibru{ki}");
        assert_eq!(out.entries[1].tags, out.entries[0].tags);
        assert_eq!(out.entries[1].phrase.id, "p~ne0");
    }

    #[test]
    fn no_entities_no_variants() {
        let mut lex = EntityLexicon::default();
        lex.insert("GN", "nibru{ki}").unwrap();
        let c = Corpus::new(
            CorpusConfig::Monolingual,
            vec![
                TaggedPhrase::from_pairs("a", &[("ur-bi2-lum{ki}", "GN")], &TagSet::ner()).unwrap(),
                TaggedPhrase::from_pairs("b", &[("sze", "O"), ("ba", "O")], &TagSet::ner()).unwrap(),
            ],
        );
        let out = ne_substitute(&c, &TagSet::ner(), &lex, 2, 0).unwrap();
        assert!(out.iter().all(|tp| !tp.phrase.id.starts_with("b~")));
        assert!(matches!(
            ne_substitute(&one(&[("sze", "O")]), &TagSet::ner(), &lex, 2, 0),
            Err(AugmentError::EmptyLexicon)
        ));
    }
}
