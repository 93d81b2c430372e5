use std::collections::HashMap;

use cuneilab::augment::{EmbeddingTable, EntityLexicon, SynonymLexicon};
use cuneilab::corpus::{
    build_comp, parse_conll, parse_monolingual, parse_parallel_tsv, read_corpus, shard,
    split_train_test, tokenize_signs, write_conll, write_corpus, write_monolingual,
    write_parallel_tsv, Corpus, CorpusConfig, Genre, LoadedCorpus, ParallelPair, Phrase, TagSet,
    TaggedPhrase, DEFAULT_TERMINATORS,
};
use cuneilab::rules::{format_rules, parse_rules, Rule, RuleKind, RuleSet};
use proptest::prelude::*;

fn base_sign() -> impl Strategy<Value = String> {
    prop_oneof![
        "[a-z]{1,4}[0-9]?",
        Just("5(disz)".to_string()),
        Just("sze3".to_string()),
    ]
}

fn determinative() -> impl Strategy<Value = String> {
    prop_oneof![Just("{d}"), Just("{ki}"), Just("{gesz}"), Just("{lu2}")].prop_map(str::to_string)
}

/// Transliterated words: hyphen-joined base signs with optional
/// determinatives glued to either end.
fn surface() -> impl Strategy<Value = String> {
    (
        prop::option::of(determinative()),
        prop::collection::vec(base_sign(), 1..4),
        prop::option::of(determinative()),
    )
        .prop_map(|(pre, signs, post)| {
            format!("{}{}{}", pre.unwrap_or_default(), signs.join("-"), post.unwrap_or_default())
        })
}

fn tagged(tagset: TagSet) -> impl Strategy<Value = Corpus<TaggedPhrase>> {
    let n_tags = tagset.len();
    prop::collection::vec((prop::collection::vec(surface(), 1..8), any::<u64>()), 1..12).prop_map(
        move |rows| {
            let entries = rows
                .into_iter()
                .enumerate()
                .map(|(i, (surfaces, bits))| {
                    let tags = (0..surfaces.len()).map(|j| (bits >> (j * 4)) as usize % n_tags).collect();
                    TaggedPhrase {
                        phrase: Phrase::from_surfaces(format!("s{}", i + 1), &surfaces).unwrap(),
                        tags,
                    }
                })
                .collect();
            Corpus::new(CorpusConfig::Monolingual, entries)
        },
    )
}

fn lines(prefix: &'static str) -> impl Strategy<Value = Corpus<Phrase>> {
    prop::collection::vec(prop::collection::vec(surface(), 1..8), 1..15).prop_map(move |rows| {
        let entries = rows
            .iter()
            .enumerate()
            .map(|(i, s)| Phrase::from_surfaces(format!("{prefix}{}", i + 1), s).unwrap())
            .collect();
        Corpus::new(CorpusConfig::Monolingual, entries)
    })
}

fn target() -> impl Strategy<Value = String> {
    (
        prop::collection::vec("[A-Za-z]{1,6}", 1..5),
        prop::option::of(prop::sample::select(DEFAULT_TERMINATORS.to_vec())),
    )
        .prop_map(|(words, term)| {
            let mut t = words.join(" ");
            if let Some(term) = term {
                t.push_str(term);
            }
            t
        })
}

fn bitext() -> impl Strategy<Value = Corpus<ParallelPair>> {
    prop::collection::vec((prop::collection::vec(surface(), 1..6), target()), 1..25).prop_map(|rows| {
        let entries = rows
            .into_iter()
            .enumerate()
            .map(|(i, (s, t))| ParallelPair::new(Phrase::from_surfaces(format!("l{}", i + 1), &s).unwrap(), t).unwrap())
            .collect();
        Corpus::new(CorpusConfig::UrIIISeg, entries)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn signs_detokenize_to_the_surface(s in surface()) {
        let token = tokenize_signs(&s).unwrap();
        prop_assert_eq!(token.detokenize(), s.clone());
        let hyphens = s.matches('-').count();
        let dets = s.matches('{').count();
        prop_assert_eq!(token.signs.len(), hyphens + 1 + dets);
    }

    #[test]
    fn conll_round_trip(c in tagged(TagSet::pos())) {
        let ts = TagSet::pos();
        let mut buf = Vec::new();
        write_conll(&c, &ts, &mut buf).unwrap();
        prop_assert_eq!(parse_conll(&buf[..], &ts).unwrap(), c);
    }

    #[test]
    fn monolingual_round_trip(c in lines("l")) {
        let mut buf = Vec::new();
        write_monolingual(&c, &mut buf).unwrap();
        prop_assert_eq!(parse_monolingual(&buf[..]).unwrap(), c);
    }

    #[test]
    fn parallel_round_trip(c in bitext()) {
        let mut buf = Vec::new();
        write_parallel_tsv(&c, &mut buf).unwrap();
        prop_assert_eq!(parse_parallel_tsv(&buf[..], c.config).unwrap(), c);
    }

    #[test]
    fn saved_corpus_keeps_metadata(c in tagged(TagSet::ner()), genre_bits in any::<u32>()) {
        let mut c = c;
        for (i, e) in c.entries.iter_mut().enumerate() {
            e.phrase.id = format!("P{}-{i}", genre_bits % 97);
            if genre_bits >> (i % 32) & 1 == 1 {
                e.phrase.genre = Genre::UrIIIAdmin;
            }
        }
        let loaded = LoadedCorpus::Tagged { corpus: c, tagset: TagSet::ner() };
        let mut buf = Vec::new();
        write_corpus(&loaded, &mut buf).unwrap();
        prop_assert_eq!(read_corpus(&buf[..]).unwrap(), loaded);
    }

    #[test]
    fn comp_conserves_tokens_and_words(c in bitext()) {
        let out = build_comp(&c, &DEFAULT_TERMINATORS);
        let flat = |c: &Corpus<ParallelPair>| -> (Vec<String>, Vec<String>) {
            (
                c.iter().flat_map(|p| p.source.surfaces().map(str::to_string)).collect(),
                c.iter().flat_map(|p| p.target.split_whitespace().map(str::to_string)).collect(),
            )
        };
        prop_assert_eq!(flat(&out.corpus), flat(&c));
        prop_assert_eq!(out.corpus.config, CorpusConfig::UrIIIComp);
        prop_assert!(out.corpus.len() <= c.len());
        for p in &out.corpus.entries {
            for (i, t) in p.source.tokens.iter().enumerate() {
                prop_assert_eq!(t.index, i);
            }
        }
    }

    #[test]
    fn shards_concatenate_back(c in lines("l"), size in 1usize..6) {
        let parts = shard(&c, size).unwrap();
        prop_assert_eq!(parts.len(), c.len().div_ceil(size));
        prop_assert!(parts.iter().all(|p| !p.is_empty() && p.len() <= size));
        let joined: Vec<Phrase> = parts.into_iter().flat_map(|p| p.entries).collect();
        prop_assert_eq!(joined, c.entries);
    }

    #[test]
    fn split_partitions_in_order(c in lines("l"), frac in 0.05f64..0.95, seed in any::<u64>()) {
        let n_test = (c.len() as f64 * frac).round() as usize;
        match split_train_test(&c, frac, seed) {
            Err(_) => prop_assert!(n_test == 0 || n_test == c.len()),
            Ok((train, test)) => {
                prop_assert_eq!(test.len(), n_test);
                prop_assert_eq!(train.len() + test.len(), c.len());
                // both sides are subsequences of the input
                let pos: HashMap<&str, usize> =
                    c.iter().enumerate().map(|(i, p)| (p.id.as_str(), i)).collect();
                for side in [&train, &test] {
                    let idx: Vec<usize> = side.iter().map(|p| pos[p.id.as_str()]).collect();
                    prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
                }
                prop_assert_eq!(split_train_test(&c, frac, seed).unwrap(), (train, test));
            }
        }
    }

    #[test]
    fn rules_round_trip(
        rows in prop::collection::vec(
            (0usize..6, "[a-z{}0-9-]{1,6}", prop::sample::select(vec!["PN", "GN", "DN", "N", "V", "YEAR", "MONTH"])),
            0..10,
        )
    ) {
        let kinds = [
            RuleKind::Prefix,
            RuleKind::Suffix,
            RuleKind::Contains,
            RuleKind::Equals,
            RuleKind::PrevEquals,
            RuleKind::NextEquals,
        ];
        let rules: Vec<Rule> = rows
            .iter()
            .enumerate()
            .map(|(i, (k, pattern, hint))| Rule::new(kinds[*k], pattern, hint, &format!("r{i}")).unwrap())
            .collect();
        let set = RuleSet::new(rules).unwrap();
        prop_assert_eq!(parse_rules(&format_rules(&set)).unwrap(), set);
    }

    #[test]
    fn lexicons_round_trip(
        words in prop::collection::btree_map("[a-z]{1,5}[0-9]?", prop::collection::vec("[a-z]{1,5}", 1..4), 1..10),
        dim in 1usize..5,
        seed in any::<u64>(),
    ) {
        let mut syn = SynonymLexicon::default();
        let mut ent = EntityLexicon::default();
        let mut emb = EmbeddingTable::new(dim);
        for (i, (w, alts)) in words.iter().enumerate() {
            let alts: Vec<&str> = alts.iter().map(String::as_str).filter(|a| a != w).collect();
            if !alts.is_empty() {
                syn.insert(w, &alts).unwrap();
            }
            ent.insert(["PN", "GN", "DN"][i % 3], w).unwrap();
            let v: Vec<f64> = (0..dim).map(|d| ((seed >> (d + i) % 60) % 1000) as f64 / 250.0 - 2.0).collect();
            emb.insert(w, v).unwrap();
        }
        prop_assert_eq!(SynonymLexicon::parse(syn.to_text().as_bytes()).unwrap(), syn);
        prop_assert_eq!(EntityLexicon::parse(ent.to_text().as_bytes()).unwrap(), ent);
        prop_assert_eq!(EmbeddingTable::parse(emb.to_text().as_bytes()).unwrap(), emb);
    }
}

#[test]
fn comp_merges_until_a_terminator() {
    let pair = |id: &str, s: &str, t: &str| ParallelPair::new(Phrase::from_line(id, s).unwrap(), t).unwrap();
    let segs = Corpus::new(
        CorpusConfig::AllSeg,
        vec![
            pair("a", "udu", "one sheep"),
            pair("b", "ki ab-ba-sa6-ga", "from Abbasaga."),
            pair("c", "mu-kux(DU)", "delivery"),
        ],
    );
    let out = build_comp(&segs, &DEFAULT_TERMINATORS);
    assert_eq!(out.corpus.config, CorpusConfig::AllComp);
    assert_eq!(out.corpus.len(), 2);
    assert_eq!(out.corpus.entries[0].target, "one sheep from Abbasaga.");
    assert_eq!(out.corpus.entries[0].source.len(), 3);
    assert!(out.trailing_unterminated);
}

#[test]
fn phrase_ids_survive_parse_of_metadata() {
    let text = "# id=P100\n# genre=UrIIIAdmin\nudu\tN\n\n# id=P101\nsze\tN\n";
    let c = parse_conll(text.as_bytes(), &TagSet::pos()).unwrap();
    assert_eq!(c.entries[0].phrase.id, "P100");
    assert_eq!(c.entries[0].phrase.genre, Genre::UrIIIAdmin);
    assert_eq!(c.entries[1].phrase.id, "P101");
}
