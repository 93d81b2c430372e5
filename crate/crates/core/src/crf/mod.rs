//! Linear-chain conditional random field.
//!
//! A path score is the sum of state weights (one per active feature and
//! tag) and transition weights (one per adjacent tag pair). The model
//! normalises over all tag sequences with the forward recursion and is
//! trained by minimising the L2-regularised negative conditional
//! log-likelihood.

mod features;
mod io;
mod lattice;
mod train;

use indexmap::IndexSet;
use thiserror::Error;

use crate::corpus::{Phrase, TagSet};

pub use features::{
    default_templates, feature_strings, lexical_templates, rule_templates, FeatureTemplate,
    MAX_AFFIX,
};
pub use io::{load_crf, read_crf, save_crf, write_crf, CRF_MAGIC};
pub use lattice::{Lattice, Marginals};
pub use train::{
    nll_and_gradient, train_crf, OptimizerConfig, OptimizerMethod, TrainReport, WeightInit,
};

/// Default L2 prior variance.
pub const DEFAULT_L2_SIGMA2: f64 = 10.0;

#[derive(Debug, Error)]
pub enum CrfError {
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("phrase {id:?} has {tags} tags for {tokens} tokens")]
    LabelLengthMismatch {
        id: String,
        tags: usize,
        tokens: usize,
    },
    #[error("tag index {index} outside tag set of {size} labels")]
    TagOutOfRange { index: usize, size: usize },
    #[error("position {position} out of range for phrase of {len} tokens")]
    IndexOutOfRange { position: usize, len: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("objective diverged at iteration {iteration}: {detail}")]
    DivergenceDetected { iteration: usize, detail: String },
    #[error("line {line}: {reason}")]
    Format { line: usize, reason: String },
    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),
}

/// Sorted ids of the known features active at one position.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FeatureVector {
    pub ids: Vec<usize>,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn value(&self, id: usize) -> f64 {
        if self.ids.binary_search(&id).is_ok() {
            1.0
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrfModel {
    tagset: TagSet,
    templates: Vec<FeatureTemplate>,
    features: IndexSet<String>,
    /// State weights `[feature * n_tags + tag]` followed by transition
    /// weights `[from * n_tags + to]`.
    weights: Vec<f64>,
    l2_sigma2: f64,
}

impl CrfModel {
    /// A model with all weights at zero.
    pub fn new(
        tagset: TagSet,
        templates: Vec<FeatureTemplate>,
        features: impl IntoIterator<Item = String>,
        l2_sigma2: f64,
    ) -> Result<Self, CrfError> {
        if !(l2_sigma2.is_finite() && l2_sigma2 > 0.0) {
            return Err(CrfError::InvalidConfig(format!(
                "l2_sigma2 must be positive, got {l2_sigma2}"
            )));
        }
        for t in &templates {
            t.validate().map_err(CrfError::InvalidConfig)?;
        }
        let features: IndexSet<String> = features.into_iter().collect();
        let n_tags = tagset.len();
        let weights = vec![0.0; (features.len() + n_tags) * n_tags];
        Ok(CrfModel {
            tagset,
            templates,
            features,
            weights,
            l2_sigma2,
        })
    }

    pub fn tagset(&self) -> &TagSet {
        &self.tagset
    }

    pub fn templates(&self) -> &[FeatureTemplate] {
        &self.templates
    }

    pub fn n_tags(&self) -> usize {
        self.tagset.len()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    pub fn feature_id(&self, feature: &str) -> Option<usize> {
        self.features.get_index_of(feature)
    }

    pub fn feature_name(&self, id: usize) -> Option<&str> {
        self.features.get_index(id).map(String::as_str)
    }

    pub fn l2_sigma2(&self) -> f64 {
        self.l2_sigma2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn set_weights(&mut self, weights: Vec<f64>) -> Result<(), CrfError> {
        if weights.len() != self.weights.len() {
            return Err(CrfError::InvalidConfig(format!(
                "expected {} weights, got {}",
                self.weights.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(CrfError::InvalidConfig("weights must be finite".into()));
        }
        self.weights = weights;
        Ok(())
    }

    pub fn has_transitions(&self) -> bool {
        self.templates.contains(&FeatureTemplate::TagBigram)
    }

    fn transition_offset(&self) -> usize {
        self.features.len() * self.n_tags()
    }

    pub fn state_weight(&self, feature: usize, tag: usize) -> f64 {
        self.weights[feature * self.n_tags() + tag]
    }

    pub fn set_state_weight(&mut self, feature: usize, tag: usize, w: f64) {
        let n = self.n_tags();
        self.weights[feature * n + tag] = w;
    }

    pub fn transition_weight(&self, from: usize, to: usize) -> f64 {
        self.weights[self.transition_offset() + from * self.n_tags() + to]
    }

    pub fn set_transition_weight(&mut self, from: usize, to: usize, w: f64) {
        let i = self.transition_offset() + from * self.n_tags() + to;
        self.weights[i] = w;
    }

    pub(crate) fn transitions(&self) -> &[f64] {
        &self.weights[self.transition_offset()..]
    }

    /// Known features active at `position`; unseen feature strings are
    /// dropped.
    pub fn extract_features(
        &self,
        phrase: &Phrase,
        position: usize,
    ) -> Result<FeatureVector, CrfError> {
        if position >= phrase.len() {
            return Err(CrfError::IndexOutOfRange {
                position,
                len: phrase.len(),
            });
        }
        let mut ids: Vec<usize> = feature_strings(&self.templates, phrase, position)
            .iter()
            .filter_map(|f| self.feature_id(f))
            .collect();
        ids.sort_unstable();
        Ok(FeatureVector { ids })
    }

    pub(crate) fn phrase_features(&self, phrase: &Phrase) -> Vec<FeatureVector> {
        (0..phrase.len())
            .map(|i| self.extract_features(phrase, i).expect("position in range"))
            .collect()
    }

    pub(crate) fn state_scores(&self, feats: &[FeatureVector]) -> Vec<Vec<f64>> {
        let n = self.n_tags();
        feats
            .iter()
            .map(|fv| {
                let mut row = vec![0.0; n];
                for &f in &fv.ids {
                    let w = &self.weights[f * n..(f + 1) * n];
                    for (r, w) in row.iter_mut().zip(w) {
                        *r += w;
                    }
                }
                row
            })
            .collect()
    }

    /// Score lattice for one phrase.
    pub fn lattice(&self, phrase: &Phrase) -> Lattice {
        assert!(!phrase.is_empty(), "phrase must be non-empty");
        let feats = self.phrase_features(phrase);
        Lattice::new(self.state_scores(&feats), self.transitions().to_vec())
    }
}

/// Log partition function via the forward recursion.
pub fn log_partition(model: &CrfModel, phrase: &Phrase) -> f64 {
    model.lattice(phrase).log_partition()
}

/// Node and edge posteriors via forward-backward.
pub fn marginals(model: &CrfModel, phrase: &Phrase) -> Marginals {
    model.lattice(phrase).marginals()
}

/// Highest-scoring tag path and its additive score; ties go to the lowest
/// tag index.
pub fn viterbi_crf(model: &CrfModel, phrase: &Phrase) -> (Vec<usize>, f64) {
    model.lattice(phrase).viterbi()
}

/// Additive score of a given tag path.
pub fn path_score(model: &CrfModel, phrase: &Phrase, tags: &[usize]) -> f64 {
    model.lattice(phrase).path_score(tags)
}
