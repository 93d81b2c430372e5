//! Statistical sequence labeling and corpus tooling for transliterated
//! cuneiform text.
//!
//! The crate covers the non-neural half of an information-extraction
//! pipeline: corpus formats and transformations ([`corpus`]), rule features
//! ([`rules`]), an HMM baseline ([`hmm`]), a linear-chain CRF ([`crf`]),
//! evaluation ([`metrics`]), data augmentation and a forward-translation
//! driver ([`augment`]), and perturbation-based attribution with saliency
//! rendering ([`interpret`]). [`synth`] generates rule-governed toy corpora.

pub mod augment;
pub mod corpus;
pub mod crf;
pub mod hmm;
pub mod interpret;
pub mod metrics;
pub mod rules;
pub mod synth;

mod util;

/// Reserved surface used to occlude a token. It fires no lexical features.
pub const MASK_SURFACE: &str = "⟨mask⟩";
