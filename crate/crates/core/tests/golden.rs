//! Attribution output pinned against a checked-in golden file.
//!
//! Regenerate with `UPDATE_GOLDEN=1 cargo test -p cuneilab --test golden`
//! and review the diff before committing.

use std::collections::BTreeSet;
use std::path::PathBuf;

use cuneilab::corpus::{Phrase, TagSet};
use cuneilab::crf::{feature_strings, lexical_templates, CrfModel};
use cuneilab::interpret::{
    leave_one_out, occlusion, render, shapley, sign_occlusion, write_attribution, AttributionMap,
    Correctness, CrfScorer, RenderFormat, ShapleyMode,
};

const FLOAT_TOL: f64 = 1e-9;

/// A fixed CRF over NER tags with weights from a cheap integer recipe, so
/// the golden output depends only on inference, not on training.
fn model(phrase: &Phrase) -> CrfModel {
    let templates = lexical_templates();
    let feats: BTreeSet<String> = (0..phrase.len())
        .flat_map(|i| feature_strings(&templates, phrase, i))
        .collect();
    let mut m = CrfModel::new(TagSet::ner(), templates, feats, 1.0).unwrap();
    let w = (0..m.weights().len()).map(|j| ((j * 37 + 11) % 17) as f64 / 4.0 - 2.0).collect();
    m.set_weights(w).unwrap();
    m
}

fn section(out: &mut String, title: &str, map: &AttributionMap) {
    let mut buf = Vec::new();
    write_attribution(map, &mut buf).unwrap();
    out.push_str(&format!("== {title}\n"));
    out.push_str(&String::from_utf8(buf).unwrap());
}

fn produce() -> String {
    let phrase = Phrase::from_line("golden", "1(disz) udu ki ab-ba-sa6-ga-ta {d}szul-gi mu-kux(DU)").unwrap();
    let model = model(&phrase);
    let scorer = CrfScorer(&model);
    let target = scorer.predicted(&phrase, 3).unwrap();

    let mut out = String::new();
    section(&mut out, "occlusion", &occlusion(&scorer, &phrase, &target).unwrap());
    section(&mut out, "leave-one-out", &leave_one_out(&scorer, &phrase, &target).unwrap());
    let mut exact = shapley(&scorer, &phrase, &target, ShapleyMode::Exact).unwrap();
    section(&mut out, "shapley", &exact);
    exact.sign_scores = Some(sign_occlusion(&scorer, &phrase, &target).unwrap());
    section(&mut out, "shapley with signs", &exact);
    out.push_str("== html\n");
    out.push_str(&String::from_utf8(render(&exact, RenderFormat::Html, Correctness::Correct)).unwrap());
    out.push_str("\n== ansi\n");
    out.push_str(&String::from_utf8(render(&exact, RenderFormat::Ansi, Correctness::Wrong)).unwrap());
    out
}

/// Fields match exactly, except numbers, which may drift in the last bits
/// across platforms' `exp`/`ln`.
fn same_field(a: &str, b: &str) -> bool {
    a == b
        || matches!((a.parse::<f64>(), b.parse::<f64>()), (Ok(x), Ok(y)) if (x - y).abs() <= FLOAT_TOL)
}

#[test]
fn attribution_matches_golden() {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/attribution.txt");
    let got = produce();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &got).unwrap();
        return;
    }
    let want = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e}; run with UPDATE_GOLDEN=1 to create it", path.display()));
    let (gl, wl): (Vec<&str>, Vec<&str>) = (got.lines().collect(), want.lines().collect());
    assert_eq!(gl.len(), wl.len(), "line count differs from golden");
    for (n, (g, w)) in gl.iter().zip(&wl).enumerate() {
        let (gf, wf): (Vec<&str>, Vec<&str>) = (g.split('\t').collect(), w.split('\t').collect());
        assert!(
            gf.len() == wf.len() && gf.iter().zip(&wf).all(|(a, b)| same_field(a, b)),
            "golden line {}:\n  got  {g}\n  want {w}",
            n + 1
        );
    }
}

#[test]
fn golden_output_is_reproducible() {
    assert_eq!(produce(), produce());
}
