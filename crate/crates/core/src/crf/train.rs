//! Regularised conditional maximum likelihood.
//!
//! The objective is `sum(log Z(x) - score(x, y)) + |w|^2 / (2 sigma^2)`,
//! which is convex in the weights. Its gradient is expected minus empirical
//! feature counts plus `w / sigma^2`.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{CrfError, CrfModel, FeatureTemplate, FeatureVector, Lattice};
use crate::corpus::{Corpus, TagSet, TaggedPhrase};
use crate::rules::RuleSet;

/// Number of contiguous batch partitions for the gradient. Fixed so the
/// summation order does not depend on the thread count.
const PARTITIONS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OptimizerMethod {
    Lbfgs { memory: usize },
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightInit {
    Zeros,
    /// Independent uniform draws in `[-scale, scale]`.
    Uniform { seed: u64, scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerConfig {
    pub method: OptimizerMethod,
    pub max_iters: usize,
    /// Stop once the gradient's max-norm drops below this.
    pub tolerance: f64,
    /// Also stop once the objective improves by less than this fraction
    /// over the last `OBJECTIVE_WINDOW` iterations; 0 disables the test.
    pub objective_tolerance: f64,
    pub init: WeightInit,
    pub max_line_search: usize,
}

impl Default for OptimizerConfig {
    /// Batch gradient descent with backtracking, stopping on the gradient
    /// norm or after 200 iterations.
    fn default() -> Self {
        OptimizerConfig {
            method: OptimizerMethod::GradientDescent,
            max_iters: 200,
            tolerance: 1e-4,
            objective_tolerance: 0.0,
            init: WeightInit::Zeros,
            max_line_search: 40,
        }
    }
}

impl OptimizerConfig {
    /// L-BFGS with ten correction pairs that also stops once the objective
    /// stalls; far quicker than the default on corpora of thousands of
    /// phrases.
    pub fn lbfgs() -> Self {
        OptimizerConfig {
            method: OptimizerMethod::Lbfgs { memory: 10 },
            objective_tolerance: 1e-5,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub iterations: usize,
    /// Objective after initialisation and after every accepted step.
    pub objective_history: Vec<f64>,
    pub converged: bool,
    pub gradient_norm: f64,
}

impl TrainReport {
    pub fn final_objective(&self) -> f64 {
        *self.objective_history.last().expect("history is never empty")
    }
}

struct Instance {
    feats: Vec<FeatureVector>,
    gold: Vec<usize>,
}

struct Objective {
    instances: Vec<Instance>,
    n_tags: usize,
    n_features: usize,
    sigma2: f64,
    transitions: bool,
}

impl Objective {
    fn dim(&self) -> usize {
        (self.n_features + self.n_tags) * self.n_tags
    }

    fn partial(&self, instances: &[Instance], w: &[f64]) -> (f64, Vec<f64>) {
        let n = self.n_tags;
        let offset = self.n_features * n;
        let mut grad = vec![0.0; self.dim()];
        let mut nll = 0.0;
        for inst in instances {
            let state: Vec<Vec<f64>> = inst
                .feats
                .iter()
                .map(|fv| {
                    let mut row = vec![0.0; n];
                    for &f in &fv.ids {
                        for (r, wt) in row.iter_mut().zip(&w[f * n..(f + 1) * n]) {
                            *r += wt;
                        }
                    }
                    row
                })
                .collect();
            let lattice = Lattice::new(state, w[offset..].to_vec());
            let m = lattice.marginals();
            nll += m.log_z - lattice.path_score(&inst.gold);
            for (i, fv) in inst.feats.iter().enumerate() {
                let gold = inst.gold[i];
                for &f in &fv.ids {
                    let g = &mut grad[f * n..(f + 1) * n];
                    for (gt, p) in g.iter_mut().zip(&m.node[i]) {
                        *gt += p;
                    }
                    g[gold] -= 1.0;
                }
            }
            if self.transitions {
                let g = &mut grad[offset..];
                for (i, edge) in m.edge.iter().enumerate() {
                    for (gt, p) in g.iter_mut().zip(edge) {
                        *gt += p;
                    }
                    g[inst.gold[i] * n + inst.gold[i + 1]] -= 1.0;
                }
            }
        }
        (nll, grad)
    }

    fn eval(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let chunk = self.instances.len().div_ceil(PARTITIONS).max(1);
        let parts: Vec<(f64, Vec<f64>)> = self
            .instances
            .par_chunks(chunk)
            .map(|c| self.partial(c, w))
            .collect();
        let mut nll = 0.0;
        let mut grad = vec![0.0; self.dim()];
        for (part_nll, part_grad) in parts {
            nll += part_nll;
            for (g, p) in grad.iter_mut().zip(&part_grad) {
                *g += p;
            }
        }
        let mut reg = 0.0;
        for (g, &wi) in grad.iter_mut().zip(w) {
            reg += wi * wi;
            *g += wi / self.sigma2;
        }
        if !self.transitions {
            let offset = self.n_features * self.n_tags;
            grad[offset..].iter_mut().for_each(|g| *g = 0.0);
        }
        (nll + reg / (2.0 * self.sigma2), grad)
    }
}

fn check_entry(entry: &TaggedPhrase, n_tags: usize) -> Result<(), CrfError> {
    if entry.tags.len() != entry.phrase.len() {
        return Err(CrfError::LabelLengthMismatch {
            id: entry.phrase.id.clone(),
            tags: entry.tags.len(),
            tokens: entry.phrase.len(),
        });
    }
    if let Some(&bad) = entry.tags.iter().find(|&&t| t >= n_tags) {
        return Err(CrfError::TagOutOfRange {
            index: bad,
            size: n_tags,
        });
    }
    Ok(())
}

fn objective_for(model: &CrfModel, batch: &[TaggedPhrase]) -> Result<Objective, CrfError> {
    let instances = batch
        .iter()
        .map(|entry| {
            check_entry(entry, model.n_tags())?;
            Ok(Instance {
                feats: model.phrase_features(&entry.phrase),
                gold: entry.tags.clone(),
            })
        })
        .collect::<Result<Vec<_>, CrfError>>()?;
    Ok(Objective {
        instances,
        n_tags: model.n_tags(),
        n_features: model.n_features(),
        sigma2: model.l2_sigma2(),
        transitions: model.has_transitions(),
    })
}

/// Regularised negative log-likelihood of `batch` and its gradient at the
/// model's current weights.
pub fn nll_and_gradient(
    model: &CrfModel,
    batch: &[TaggedPhrase],
) -> Result<(f64, Vec<f64>), CrfError> {
    if batch.is_empty() {
        return Err(CrfError::EmptyCorpus);
    }
    Ok(objective_for(model, batch)?.eval(model.weights()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// L-BFGS two-loop recursion; returns the search direction `-H g`.
fn lbfgs_direction(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|qi| *qi *= gamma);
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

pub const OBJECTIVE_WINDOW: usize = 10;

fn minimize(
    objective: &Objective,
    x0: Vec<f64>,
    config: &OptimizerConfig,
) -> Result<(Vec<f64>, TrainReport), CrfError> {
    const ARMIJO: f64 = 1e-4;
    let memory_size = match config.method {
        OptimizerMethod::Lbfgs { memory } => memory,
        OptimizerMethod::GradientDescent => 0,
    };
    let mut x = x0;
    let (mut f, mut g) = objective.eval(&x);
    if !f.is_finite() {
        return Err(CrfError::DivergenceDetected {
            iteration: 0,
            detail: format!("initial objective is {f}"),
        });
    }
    let mut history = vec![f];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < config.max_iters {
        if max_norm(&g) < config.tolerance {
            converged = true;
            break;
        }
        let mut direction = lbfgs_direction(&g, &memory);
        let mut slope = dot(&g, &direction);
        if memory.is_empty() || slope >= 0.0 {
            memory.clear();
            direction = g.iter().map(|x| -x).collect();
            slope = dot(&g, &direction);
        }
        let mut step = if memory.is_empty() {
            (1.0 / slope.abs().sqrt()).min(1.0)
        } else {
            1.0
        };

        let mut accepted = None;
        for _ in 0..config.max_line_search {
            let candidate: Vec<f64> = x.iter().zip(&direction).map(|(a, d)| a + step * d).collect();
            let (fc, gc) = objective.eval(&candidate);
            if fc.is_finite() && fc <= f + ARMIJO * step * slope {
                accepted = Some((candidate, fc, gc));
                break;
            }
            step *= 0.5;
        }
        let Some((x_new, f_new, g_new)) = accepted else {
            if !memory.is_empty() {
                // retry once along the steepest-descent direction
                memory.clear();
                continue;
            }
            // No decrease along the negative gradient: numerically at the
            // optimum for this precision.
            break;
        };
        if f_new > f {
            return Err(CrfError::DivergenceDetected {
                iteration: iterations,
                detail: format!("objective rose from {f} to {f_new}"),
            });
        }
        iterations += 1;
        if memory_size > 0 {
            let s: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-12 {
                if memory.len() == memory_size {
                    memory.pop_front();
                }
                memory.push_back((s, y, 1.0 / sy));
            }
        }
        x = x_new;
        f = f_new;
        g = g_new;
        history.push(f);
        if config.objective_tolerance > 0.0 && history.len() > OBJECTIVE_WINDOW {
            let old = history[history.len() - 1 - OBJECTIVE_WINDOW];
            if (old - f) / f.abs().max(1.0) < config.objective_tolerance {
                converged = true;
                break;
            }
        }
    }
    if !converged && max_norm(&g) < config.tolerance {
        converged = true;
    }
    Ok((
        x,
        TrainReport {
            iterations,
            objective_history: history,
            converged,
            gradient_norm: max_norm(&g),
        },
    ))
}

/// Trains a CRF on `corpus`.
///
/// The feature dictionary is every feature string seen in the training
/// data under `templates` plus one rule template per rule in `ruleset`;
/// it is frozen once training starts.
pub fn train_crf(
    corpus: &Corpus<TaggedPhrase>,
    tagset: &TagSet,
    ruleset: &RuleSet,
    templates: &[FeatureTemplate],
    l2_sigma2: f64,
    config: &OptimizerConfig,
) -> Result<(CrfModel, TrainReport), CrfError> {
    if corpus.is_empty() {
        return Err(CrfError::EmptyCorpus);
    }
    if config.tolerance <= 0.0 || config.max_line_search == 0 || !(config.objective_tolerance >= 0.0) {
        return Err(CrfError::InvalidConfig(
            "tolerance and line-search budget must be positive".into(),
        ));
    }
    let mut all_templates = templates.to_vec();
    for rule in ruleset.rules() {
        let t = FeatureTemplate::RuleFeature(rule.clone());
        if !all_templates.contains(&t) {
            all_templates.push(t);
        }
    }
    let mut dictionary = indexmap::IndexSet::new();
    for entry in corpus {
        check_entry(entry, tagset.len())?;
        for i in 0..entry.phrase.len() {
            for f in super::feature_strings(&all_templates, &entry.phrase, i) {
                dictionary.insert(f);
            }
        }
    }
    let mut model = CrfModel::new(tagset.clone(), all_templates, dictionary, l2_sigma2)?;
    let objective = objective_for(&model, &corpus.entries)?;

    let dim = objective.dim();
    let mut x0 = match config.init {
        WeightInit::Zeros => vec![0.0; dim],
        WeightInit::Uniform { seed, scale } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..dim).map(|_| rng.gen_range(-scale..=scale)).collect()
        }
    };
    if !objective.transitions {
        let offset = objective.n_features * objective.n_tags;
        x0[offset..].iter_mut().for_each(|w| *w = 0.0);
    }
    let (weights, report) = minimize(&objective, x0, config)?;
    model.set_weights(weights)?;
    Ok((model, report))
}
