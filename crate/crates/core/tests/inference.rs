use cuneilab::corpus::{Corpus, CorpusConfig, Phrase, TagSet, TaggedPhrase};
use cuneilab::crf::{
    lexical_templates, nll_and_gradient, train_crf, viterbi_crf, CrfModel, OptimizerConfig,
    WeightInit,
};
use cuneilab::hmm::{sequence_loglik, train_hmm, HmmModel};
use cuneilab::rules::RuleSet;
use cuneilab::synth::{synth_tagged, DEFAULT_NOISE};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn toy(n: usize) -> TagSet {
    let labels: Vec<String> = (0..n).map(|i| format!("T{i}")).collect();
    TagSet::custom("toy", &labels).unwrap()
}

fn paths(n_tags: usize, len: usize) -> Vec<Vec<usize>> {
    (0..n_tags.pow(len as u32))
        .map(|mut code| {
            let mut p = vec![0; len];
            for slot in p.iter_mut().rev() {
                *slot = code % n_tags;
                code /= n_tags;
            }
            p
        })
        .collect()
}

fn logsumexp(xs: impl Iterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.collect();
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn random_tagged(rng: &mut ChaCha8Rng, words: &[&str], n_tags: usize, n: usize) -> Corpus<TaggedPhrase> {
    let entries = (0..n)
        .map(|i| {
            let len = rng.gen_range(1..6);
            let surfaces: Vec<&str> = (0..len).map(|_| *words.choose(rng).unwrap()).collect();
            TaggedPhrase {
                phrase: Phrase::from_surfaces(format!("s{i}"), &surfaces).unwrap(),
                tags: (0..len).map(|_| rng.gen_range(0..n_tags)).collect(),
            }
        })
        .collect();
    Corpus::new(CorpusConfig::Monolingual, entries)
}

#[test]
fn hmm_posteriors_and_likelihood_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let words = ["udu", "sze", "gin", "ki"];
    for _ in 0..100 {
        let n_tags = rng.gen_range(1..=4);
        let train = random_tagged(&mut rng, &words[..3], n_tags, 8);
        let model = train_hmm(&train, &toy(n_tags), rng.gen_range(0.01..2.0)).unwrap();
        let len = rng.gen_range(1..=5);
        let surfaces: Vec<&str> = (0..len).map(|_| *words.choose(&mut rng).unwrap()).collect();
        let phrase = Phrase::from_surfaces("q", &surfaces).unwrap();
        let joint: Vec<(Vec<usize>, f64)> = paths(n_tags, len)
            .into_iter()
            .map(|p| {
                let s = model.path_log_prob(&phrase, &p);
                (p, s)
            })
            .collect();
        let log_z = logsumexp(joint.iter().map(|(_, s)| *s));
        assert!((sequence_loglik(&model, &phrase) - log_z).abs() < 1e-9);
        let post = model.posteriors(&phrase);
        for (i, row) in post.iter().enumerate() {
            for (t, &p) in row.iter().enumerate() {
                let want: f64 = joint
                    .iter()
                    .filter(|(path, _)| path[i] == t)
                    .map(|(_, s)| (s - log_z).exp())
                    .sum();
                assert!((p - want).abs() < 1e-9, "posterior[{i}][{t}] {p} vs {want}");
            }
        }
    }
}

#[test]
fn hmm_tables_are_add_k_counts() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let words = ["a", "b", "c", "d"];
    for _ in 0..50 {
        let n_tags = rng.gen_range(1..=4);
        let k = [0.0, 0.1, 1.0][rng.gen_range(0..3)];
        let n = rng.gen_range(1..10);
        let corpus = random_tagged(&mut rng, &words, n_tags, n);
        let model = train_hmm(&corpus, &toy(n_tags), k).unwrap();
        let vocab: Vec<&str> = model.vocab().collect();

        let mut init = vec![0.0; n_tags];
        let mut trans = vec![vec![0.0; n_tags]; n_tags];
        let mut emit = vec![vec![0.0; vocab.len()]; n_tags];
        for tp in &corpus {
            init[tp.tags[0]] += 1.0;
            for w in tp.tags.windows(2) {
                trans[w[0]][w[1]] += 1.0;
            }
            for (s, &t) in tp.phrase.surfaces().zip(&tp.tags) {
                emit[t][vocab.iter().position(|v| *v == s).unwrap()] += 1.0;
            }
        }
        // outcomes per row: tags, tags, vocab + UNK
        let expect = |counts: &[f64], outcomes: usize, c: f64| {
            let total: f64 = counts.iter().sum::<f64>() + k * outcomes as f64;
            if total == 0.0 {
                -(outcomes as f64).ln()
            } else {
                ((c + k) / total).ln()
            }
        };
        let near = |a: f64, b: f64| (a == b) || (a - b).abs() < 1e-12;
        for t in 0..n_tags {
            assert!(near(model.log_initial(t), expect(&init, n_tags, init[t])));
            for u in 0..n_tags {
                assert!(near(model.log_transition(t, u), expect(&trans[t], n_tags, trans[t][u])));
            }
            for (j, w) in vocab.iter().enumerate() {
                assert!(near(model.log_emission(t, w), expect(&emit[t], vocab.len() + 1, emit[t][j])));
            }
            assert!(near(model.log_unknown(t), expect(&emit[t], vocab.len() + 1, 0.0)));
            let mass: f64 = vocab.iter().map(|w| model.log_emission(t, w).exp()).sum::<f64>()
                + model.log_unknown(t).exp();
            assert!((mass - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn hmm_from_tables_rejects_unnormalised_rows() {
    let ts = toy(2);
    let ok = HmmModel::from_probabilities(
        ts.clone(),
        &[0.5, 0.5],
        &[vec![0.9, 0.1], vec![0.2, 0.8]],
        &["x"],
        &[vec![0.7, 0.3], vec![0.4, 0.6]],
    );
    assert!(ok.is_ok());
    let bad = HmmModel::from_probabilities(
        ts,
        &[0.5, 0.6],
        &[vec![0.9, 0.1], vec![0.2, 0.8]],
        &["x"],
        &[vec![0.7, 0.3], vec![0.4, 0.6]],
    );
    assert!(bad.is_err());
}

#[test]
fn crf_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let words = ["ur-{d}nanna", "udu", "mu", "uri5{ki}", "ba-hul", "5(disz)"];
    let templates = lexical_templates();
    for _ in 0..10 {
        let n_tags = rng.gen_range(2..=3);
        let batch = random_tagged(&mut rng, &words, n_tags, 3);
        let feats: std::collections::BTreeSet<String> = batch
            .iter()
            .flat_map(|tp| {
                (0..tp.phrase.len()).flat_map(|i| cuneilab::crf::feature_strings(&templates, &tp.phrase, i))
            })
            .collect();
        let mut model = CrfModel::new(toy(n_tags), templates.clone(), feats, 2.0).unwrap();
        let w0: Vec<f64> = model.weights().iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
        model.set_weights(w0.clone()).unwrap();
        let (_, grad) = nll_and_gradient(&model, &batch.entries).unwrap();
        let h = 1e-5;
        for j in (0..w0.len()).step_by(3) {
            let mut f = |x: f64| {
                let mut w = w0.clone();
                w[j] = x;
                model.set_weights(w).unwrap();
                nll_and_gradient(&model, &batch.entries).unwrap().0
            };
            let numeric = (f(w0[j] + h) - f(w0[j] - h)) / (2.0 * h);
            let rel = (grad[j] - numeric).abs() / grad[j].abs().max(numeric.abs()).max(1e-6);
            assert!(rel < 1e-4, "weight {j}: {} vs {numeric}", grad[j]);
        }
    }
}

#[test]
fn crf_training_is_convex_across_initialisations() {
    let corpus = synth_tagged(150, 4, DEFAULT_NOISE).pos;
    let tagset = TagSet::pos();
    let templates = lexical_templates();
    let fit = |init| {
        let config = OptimizerConfig {
            init,
            tolerance: 1e-6,
            objective_tolerance: 0.0,
            max_iters: 2000,
            ..OptimizerConfig::lbfgs()
        };
        train_crf(&corpus, &tagset, &RuleSet::empty(), &templates, 1.0, &config).unwrap()
    };
    let (a, ra) = fit(WeightInit::Zeros);
    let (b, rb) = fit(WeightInit::Uniform { seed: 9, scale: 1.0 });
    assert!(ra.converged && rb.converged, "{} / {} iterations", ra.iterations, rb.iterations);
    let (fa, fb) = (ra.final_objective(), rb.final_objective());
    assert!((fa - fb).abs() <= 1e-6 * fa.abs().max(1.0), "objectives {fa} vs {fb}");
    let gap = a.weights().iter().zip(b.weights()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap < 1e-3, "weights differ by {gap}");
    for tp in &corpus {
        assert_eq!(viterbi_crf(&a, &tp.phrase).0, viterbi_crf(&b, &tp.phrase).0);
    }
    // monotone objective for both runs
    for r in [&ra, &rb] {
        assert!(r.objective_history.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }
}
