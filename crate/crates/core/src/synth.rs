//! Seeded generator of Ur III–style administrative phrases with POS and
//! NER tags, for tests, demos and the end-to-end pipeline.
//!
//! Tags follow the same regularities the default rules describe (name
//! prefixes, `{d}` and `{ki}` determinatives, year and month formulae after
//! `mu` and `iti`, `-hul` verbs, the word before `gin`) while the names
//! themselves are composed from syllables, so most test names are unseen in
//! training. A small fraction of labels is flipped at random.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::augment::{EmbeddingTable, EntityLexicon, Resources, SynonymLexicon};
use crate::corpus::{Corpus, CorpusConfig, Genre, Phrase, TagSet, TaggedPhrase};
use crate::util::mix_seed;

pub const DEFAULT_NOISE: f64 = 0.01;

const COMMODITIES: &[&str] = &[
    "udu", "masz2", "sila4", "gu4", "ab2", "u8", "ud5", "sze", "ku3-babbar", "i3", "zi3",
    "kasz", "ninda", "siki", "tug2", "gesz",
];
const UNITS: &[&str] = &["gur", "sila3", "ma-na", "gin2", "gu2"];
const ADJECTIVES: &[&str] = &["niga", "gal", "tur", "sig5", "babbar", "gi6", "u2"];
const OFFICIALS: &[&str] = &["kas4", "sukkal", "dub-sar", "muhaldim", "sipa", "ensi2", "nu-banda3"];
const DEATH_VERBS: &[&str] = &["ba-zi", "ba-ug7", "ba-an-zi", "zi-ga"];
const HUL_VERBS: &[&str] = &["mu-hul", "ba-hul", "in-hul"];
const DN_STEMS: &[&str] = &[
    "{d}nanna", "{d}utu", "{d}en-lil2", "{d}nin-lil2", "{d}inanna", "{d}ba-ba6", "{d}lamma",
    "{d}nin-gir2-su", "{d}nin-urta", "{d}isztaran", "{d}dumu-zi", "{d}asznan", "{d}szara2",
    "{d}nisaba", "{d}nanse", "{d}en-ki", "{d}iszkur", "{d}nergal",
];
const RULERS: &[&str] = &[
    "{d}szul-gi", "{d}amar-{d}suen", "{d}szu-{d}suen", "i-bi2-{d}suen", "ur-{d}namma",
];
const MONTHS: &[&str] = &[
    "sze-sag11-ku5", "masz-da3-gu7", "ses-da-gu7", "u5-bi2-gu7", "ki-siki-{d}nin-a-zu",
    "ezem-{d}nin-a-zu", "a2-ki-ti", "ezem-{d}szul-gi", "ezem-mah", "ezem-an-na",
    "ezem-me-ki-gal2", "sze-kin-ku5", "diri",
];
const PLACES: &[&str] = &[
    "nibru{ki}", "uri5{ki}", "umma{ki}", "gir2-su{ki}", "lagasz{ki}", "puzur4-isz-{d}da-gan{ki}",
    "ma-ri2{ki}", "an-sza-an{ki}", "ku-ta{ki}", "si-mu-ru-um{ki}", "ur-bi2-lum{ki}",
];
const SYLLABLES: &[&str] = &[
    "a", "ab", "al", "am", "an", "ba", "be", "bi2", "da", "di", "du", "e", "ga", "gi", "gu",
    "ha", "hu", "i", "il", "in", "ka", "ku", "la", "li", "lu", "ma", "me", "mi", "na", "ni",
    "nu", "ra", "ri", "ru", "sa", "si", "su", "sza", "szi", "szu", "ta", "ti", "tu", "za",
    "zi", "zu",
];
/// Common nouns of the phrase frames; all are synonym-lexicon entries.
const FRAME_NOUNS: &[&str] = &["ki", "giri3", "dumu", "kiszib3", "lugal", "e2", "lu2", "szu", "iti", "mu"];

/// POS and NER label per token; the NER label is `O` for non-names.
type Slot = (String, &'static str, &'static str);

fn pick<'a>(rng: &mut ChaCha8Rng, xs: &[&'a str]) -> &'a str {
    xs.choose(rng).expect("non-empty list")
}

fn syllables(rng: &mut ChaCha8Rng, lo: usize, hi: usize) -> String {
    let n = rng.gen_range(lo..=hi);
    (0..n).map(|_| pick(rng, SYLLABLES)).collect::<Vec<_>>().join("-")
}

fn numeral(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..4) {
        0 | 1 => format!("{}(disz)", rng.gen_range(1..=9)),
        2 => format!("{}(u)", rng.gen_range(1..=5)),
        _ => format!("{}(asz)", rng.gen_range(1..=5)),
    }
}

fn personal_name(rng: &mut ChaCha8Rng) -> String {
    match rng.gen_range(0..8) {
        0 => format!("ur-{}", pick(rng, DN_STEMS)),
        1 => format!("lu2-{}", pick(rng, DN_STEMS)),
        2 => format!("lu2-{}", syllables(rng, 1, 2)),
        3 => format!("dumu-{}", syllables(rng, 1, 2)),
        4 => format!("lugal-{}", syllables(rng, 1, 2)),
        5 => format!(
            "{}{}",
            pick(rng, &["puzur4-", "szu-", "i-di3-", "a-hu-", "nin-"]),
            pick(rng, DN_STEMS)
        ),
        6 => format!("ur-{}", syllables(rng, 1, 2)),
        _ => syllables(rng, 2, 4),
    }
}

fn place_name(rng: &mut ChaCha8Rng) -> String {
    if rng.gen_bool(0.5) {
        pick(rng, PLACES).to_string()
    } else {
        format!("{}{{ki}}", syllables(rng, 1, 3))
    }
}

fn s(surface: impl Into<String>, pos: &'static str, ner: &'static str) -> Slot {
    (surface.into(), pos, ner)
}

fn noun(w: &str) -> Slot {
    s(w, "N", "O")
}

/// One phrase from a weighted choice of administrative frames.
fn frame(rng: &mut ChaCha8Rng) -> Vec<Slot> {
    let mut out = Vec::new();
    let commodity_line = |rng: &mut ChaCha8Rng, out: &mut Vec<Slot>| {
        out.push(s(numeral(rng), "NU", "O"));
        if rng.gen_bool(0.3) {
            out.push(noun(pick(rng, UNITS)));
        }
        out.push(noun(pick(rng, COMMODITIES)));
        if rng.gen_bool(0.4) {
            out.push(s(pick(rng, ADJECTIVES), "AJ", "O"));
        }
    };
    match rng.gen_range(0..100) {
        0..=19 => {
            commodity_line(rng, &mut out);
            if rng.gen_bool(0.4) {
                out.push(s("u3", "CNJ", "O"));
                commodity_line(rng, &mut out);
            }
        }
        20..=29 => {
            out.push(noun("ki"));
            out.push(s(format!("{}-ta", personal_name(rng)), "NE", "PN"));
        }
        30..=39 => {
            out.push(s(personal_name(rng), "NE", "PN"));
            out.push(s("i3-dab5", "V", "O"));
        }
        40..=47 => {
            out.push(noun("giri3"));
            out.push(s(personal_name(rng), "NE", "PN"));
            if rng.gen_bool(0.5) {
                out.push(noun("dumu"));
                out.push(s(personal_name(rng), "NE", "PN"));
            }
        }
        48..=57 => {
            out.push(noun("mu"));
            out.push(s(pick(rng, RULERS), "NE", "RN"));
            out.push(noun(pick(rng, &["lugal", "lugal-e"])));
            if rng.gen_bool(0.6) {
                out.push(s(place_name(rng), "NE", "GN"));
                out.push(s(pick(rng, HUL_VERBS), "V", "O"));
            }
        }
        58..=65 => {
            out.push(noun("iti"));
            out.push(s(pick(rng, MONTHS), "NE", "MN"));
        }
        66..=71 => {
            out.push(noun("lu2"));
            out.push(noun(pick(rng, OFFICIALS)));
            out.push(s("gin", "V", "O"));
        }
        72..=79 => {
            commodity_line(rng, &mut out);
            out.push(s(pick(rng, DEATH_VERBS), "V", "O"));
        }
        80..=85 => {
            out.push(noun("e2"));
            out.push(s(pick(rng, DN_STEMS), "NE", "DN"));
        }
        86..=89 => {
            out.push(s(format!("e2-{}", pick(rng, DN_STEMS)), "NE", "TN"));
            out.push(s("ba-an-ku4", "V", "O"));
        }
        90..=94 => {
            out.push(noun("szu"));
            out.push(s("ba-ti", "V", "O"));
            if rng.gen_bool(0.5) {
                out.push(s(place_name(rng), "NE", "GN"));
            }
        }
        _ => {
            out.push(s(numeral(rng), "NU", "O"));
            out.push(noun("sze"));
            out.push(noun("gur"));
            out.push(s(format!("a-sza3-{}", syllables(rng, 1, 2)), "NE", "FN"));
        }
    }
    if rng.gen_bool(0.03) {
        let at = rng.gen_range(0..=out.len());
        out.insert(at, s("x", "O", "O"));
    }
    out
}

fn flip(rng: &mut ChaCha8Rng, label: &'static str, inventory: &[&'static str]) -> &'static str {
    loop {
        let other = pick(rng, inventory);
        if other != label {
            return other;
        }
    }
}

const POS_USED: &[&str] = &["AJ", "CNJ", "N", "NE", "NU", "O", "V"];
const NER_USED: &[&str] = &["DN", "FN", "GN", "MN", "O", "PN", "RN", "TN"];

/// Parallel POS and NER views of the same generated phrases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynthCorpus {
    pub pos: Corpus<TaggedPhrase>,
    pub ner: Corpus<TaggedPhrase>,
}

/// `n` tagged phrases. Each label is replaced by a different label with
/// probability `noise`, independently for POS and NER.
pub fn synth_tagged(n: usize, seed: u64, noise: f64) -> SynthCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x6e6f697365));
    let (pos_set, ner_set) = (TagSet::pos(), TagSet::ner());
    let mut pos = Vec::with_capacity(n);
    let mut ner = Vec::with_capacity(n);
    for i in 0..n {
        let slots = frame(&mut rng);
        let surfaces: Vec<&str> = slots.iter().map(|(w, _, _)| w.as_str()).collect();
        let phrase = Phrase::from_surfaces(format!("s{i}"), &surfaces)
            .expect("generated surfaces are well formed")
            .with_genre(Genre::UrIIIAdmin);
        let mut tags = |set: &TagSet, used: &[&'static str], f: fn(&Slot) -> &'static str| {
            slots
                .iter()
                .map(|slot| {
                    let mut label = f(slot);
                    if noise > 0.0 && noise_rng.gen_bool(noise) {
                        label = flip(&mut noise_rng, label, used);
                    }
                    set.index_of(label).expect("label in inventory")
                })
                .collect::<Vec<_>>()
        };
        let p = tags(&pos_set, POS_USED, |x| x.1);
        let e = tags(&ner_set, NER_USED, |x| x.2);
        pos.push(TaggedPhrase::new(phrase.clone(), p, &pos_set).expect("valid tags"));
        ner.push(TaggedPhrase::new(phrase, e, &ner_set).expect("valid tags"));
    }
    SynthCorpus {
        pos: Corpus::new(CorpusConfig::Monolingual, pos),
        ner: Corpus::new(CorpusConfig::Monolingual, ner),
    }
}

/// `n` untagged lines, each two to four phrases long.
pub fn synth_monolingual(n: usize, seed: u64) -> Corpus<Phrase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let entries = (0..n)
        .map(|i| {
            let k = rng.gen_range(2..=4);
            let words: Vec<String> = (0..k).flat_map(|_| frame(&mut rng)).map(|(w, _, _)| w).collect();
            Phrase::from_surfaces(format!("l{}", i + 1), &words)
                .expect("generated surfaces are well formed")
                .with_genre(Genre::UrIIIAdmin)
        })
        .collect();
    Corpus::new(CorpusConfig::Monolingual, entries)
}

/// Word classes whose members are interchangeable for augmentation.
fn word_classes() -> Vec<Vec<&'static str>> {
    vec![
        COMMODITIES.to_vec(),
        UNITS.to_vec(),
        ADJECTIVES.to_vec(),
        OFFICIALS.to_vec(),
        DEATH_VERBS.to_vec(),
        HUL_VERBS.to_vec(),
        FRAME_NOUNS.to_vec(),
        vec!["i3-dab5", "ba-ti", "ba-an-ku4", "gin"],
    ]
}

/// Synonyms, embeddings and an entity list matching the generator's
/// vocabulary. Embeddings cluster each word class around its own axis so
/// same-class cosines sit near 0.95 and cross-class cosines near 0.
pub fn synth_resources(seed: u64) -> Resources {
    let classes = word_classes();
    let mut synonyms = SynonymLexicon::default();
    for class in &classes {
        for (i, w) in class.iter().enumerate() {
            let alts: Vec<&str> = (1..=2).map(|d| class[(i + d) % class.len()]).collect();
            synonyms.insert(w, &alts).expect("classes have distinct members");
        }
    }

    let dim = classes.len() * 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut embeddings = EmbeddingTable::new(dim);
    for (c, class) in classes.iter().enumerate() {
        for w in class {
            let v: Vec<f64> = (0..dim)
                .map(|d| if d == c { 1.0 } else { 0.0 } + rng.gen_range(-0.08..0.08))
                .collect();
            embeddings.insert(w, v).expect("fixed dimension");
        }
    }

    let mut entities = EntityLexicon::default();
    for (label, list) in [("DN", DN_STEMS), ("RN", RULERS), ("MN", MONTHS), ("GN", PLACES)] {
        for w in list {
            entities.insert(label, w).expect("well-formed entity");
        }
    }
    for _ in 0..40 {
        entities.insert("PN", &personal_name(&mut rng)).expect("well-formed entity");
    }
    Resources {
        embeddings: Some(embeddings),
        synonyms: Some(synonyms),
        entities: Some(entities),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rules::{apply_rules, default_rules};

    #[test]
    fn deterministic_and_well_formed() {
        let a = synth_tagged(200, 7, DEFAULT_NOISE);
        assert_eq!(a, synth_tagged(200, 7, DEFAULT_NOISE));
        assert_ne!(a, synth_tagged(200, 8, DEFAULT_NOISE));
        for (p, e) in a.pos.iter().zip(&a.ner) {
            assert_eq!(p.phrase, e.phrase);
            assert_eq!(p.tags.len(), p.phrase.len());
        }
    }

    #[test]
    fn rules_agree_with_clean_tags() {
        let rules = default_rules();
        let c = synth_tagged(500, 3, 0.0);
        let ner = TagSet::ner();
        for tp in &c.ner {
            for i in 0..tp.phrase.len() {
                let fired = apply_rules(&rules, &tp.phrase, i).unwrap();
                let label = ner.label(tp.tags[i]).unwrap();
                if tp.phrase.surface(i) == Some("x") {
                    // damaged-sign placeholder
                    continue;
                }
                if fired.contains("after-iti-month") {
                    assert_eq!(label, "MN");
                }
                if fired.contains("after-mu-year") {
                    assert_eq!(label, "RN");
                }
            }
        }
    }

    #[test]
    fn resources_cover_the_vocabulary() {
        let r = synth_resources(1);
        let emb = r.embeddings.unwrap();
        assert!(emb.neighbors("udu", 0.8).contains(&"masz2"));
        assert!(!emb.neighbors("udu", 0.8).contains(&"niga"));
        let lines = synth_monolingual(50, 2);
        let syn = r.synonyms.unwrap();
        for p in &lines {
            assert!(p.surfaces().any(|w| syn.get(w).is_some()), "{}", p.source_line);
        }
    }
}
