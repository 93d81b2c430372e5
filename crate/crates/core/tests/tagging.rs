use std::time::Instant;

use cuneilab::corpus::{Corpus, TagSet, TaggedPhrase};
use cuneilab::crf::{default_templates, train_crf, viterbi_crf, OptimizerConfig, DEFAULT_L2_SIGMA2};
use cuneilab::hmm::{train_hmm, viterbi_hmm};
use cuneilab::metrics::{prf1, Averaging};
use cuneilab::rules::default_rules;
use cuneilab::synth::{synth_tagged, DEFAULT_NOISE};

fn retag(gold: &Corpus<TaggedPhrase>, f: impl Fn(&TaggedPhrase) -> Vec<usize>) -> Vec<TaggedPhrase> {
    gold.iter()
        .map(|tp| TaggedPhrase {
            phrase: tp.phrase.clone(),
            tags: f(tp),
        })
        .collect()
}

#[test]
fn crf_with_rules_beats_hmm_on_synthetic_data() {
    let rules = default_rules();
    for (name, tagset) in [("pos", TagSet::pos()), ("ner", TagSet::ner())] {
        let pick = |c: cuneilab::synth::SynthCorpus| if name == "pos" { c.pos } else { c.ner };
        let train = pick(synth_tagged(1500, 11, DEFAULT_NOISE));
        let test = pick(synth_tagged(500, 12, DEFAULT_NOISE));
        let t = Instant::now();
        let (crf, report) = train_crf(
            &train,
            &tagset,
            &rules,
            &default_templates(&rules),
            DEFAULT_L2_SIGMA2,
            &OptimizerConfig::lbfgs(),
        )
        .unwrap();
        let elapsed = t.elapsed();
        let hmm = train_hmm(&train, &tagset, 0.1).unwrap();
        let crf_pred = retag(&test, |tp| viterbi_crf(&crf, &tp.phrase).0);
        let hmm_pred = retag(&test, |tp| viterbi_hmm(&hmm, &tp.phrase).0);
        let crf_f1 = prf1(&test.entries, &crf_pred, &tagset).unwrap().averaged(Averaging::Weighted).f1;
        let hmm_f1 = prf1(&test.entries, &hmm_pred, &tagset).unwrap().averaged(Averaging::Weighted).f1;
        eprintln!(
            "{name}: crf {crf_f1:.4} hmm {hmm_f1:.4} iters {} converged {} train {elapsed:?}",
            report.iterations, report.converged
        );
        assert!(crf_f1 >= 0.95);
        assert!(crf_f1 > hmm_f1);
    }
}
