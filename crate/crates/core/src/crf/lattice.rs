use crate::util::logsumexp;

/// Per-position state scores plus a shared transition matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    /// `[position][tag]`
    pub state: Vec<Vec<f64>>,
    /// `[from * n_tags + to]`
    pub transition: Vec<f64>,
    n_tags: usize,
}

/// Posterior distributions for one phrase.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginals {
    /// `[position][tag]`
    pub node: Vec<Vec<f64>>,
    /// `[position][from * n_tags + to]` for the edge between `position`
    /// and `position + 1`.
    pub edge: Vec<Vec<f64>>,
    pub log_z: f64,
}

impl Lattice {
    pub fn new(state: Vec<Vec<f64>>, transition: Vec<f64>) -> Self {
        assert!(!state.is_empty(), "lattice needs at least one position");
        let n_tags = state[0].len();
        assert!(n_tags > 0);
        assert!(state.iter().all(|r| r.len() == n_tags));
        assert_eq!(transition.len(), n_tags * n_tags);
        Lattice {
            state,
            transition,
            n_tags,
        }
    }

    pub fn len(&self) -> usize {
        self.state.len()
    }

    pub fn is_empty(&self) -> bool {
        self.state.is_empty()
    }

    pub fn n_tags(&self) -> usize {
        self.n_tags
    }

    fn trans(&self, from: usize, to: usize) -> f64 {
        self.transition[from * self.n_tags + to]
    }

    /// `alpha[i][t]`: log-sum of scores of all prefixes ending in `t` at `i`.
    pub fn forward(&self) -> Vec<Vec<f64>> {
        let n = self.n_tags;
        let mut alpha = Vec::with_capacity(self.len());
        alpha.push(self.state[0].clone());
        for row in &self.state[1..] {
            let prev: &Vec<f64> = alpha.last().expect("non-empty");
            let next: Vec<f64> = (0..n)
                .map(|t| logsumexp((0..n).map(|u| prev[u] + self.trans(u, t))) + row[t])
                .collect();
            alpha.push(next);
        }
        alpha
    }

    /// `beta[i][t]`: log-sum of scores of all suffixes after `i` given `t`.
    pub fn backward(&self) -> Vec<Vec<f64>> {
        let n = self.n_tags;
        let len = self.len();
        let mut beta = vec![vec![0.0; n]; len];
        for i in (0..len - 1).rev() {
            for u in 0..n {
                beta[i][u] = logsumexp(
                    (0..n).map(|t| self.trans(u, t) + self.state[i + 1][t] + beta[i + 1][t]),
                );
            }
        }
        beta
    }

    pub fn log_partition(&self) -> f64 {
        logsumexp(self.forward().last().expect("non-empty").iter().copied())
    }

    /// The same quantity computed from the backward recursion.
    pub fn log_partition_backward(&self) -> f64 {
        let beta = self.backward();
        logsumexp((0..self.n_tags).map(|t| self.state[0][t] + beta[0][t]))
    }

    pub fn marginals(&self) -> Marginals {
        let n = self.n_tags;
        let alpha = self.forward();
        let beta = self.backward();
        let log_z = logsumexp(alpha.last().expect("non-empty").iter().copied());
        let node = alpha
            .iter()
            .zip(&beta)
            .map(|(a, b)| (0..n).map(|t| (a[t] + b[t] - log_z).exp()).collect())
            .collect();
        let edge = (0..self.len() - 1)
            .map(|i| {
                let mut e = vec![0.0; n * n];
                for u in 0..n {
                    for t in 0..n {
                        e[u * n + t] = (alpha[i][u]
                            + self.trans(u, t)
                            + self.state[i + 1][t]
                            + beta[i + 1][t]
                            - log_z)
                            .exp();
                    }
                }
                e
            })
            .collect();
        Marginals { node, edge, log_z }
    }

    pub fn path_score(&self, tags: &[usize]) -> f64 {
        assert_eq!(tags.len(), self.len());
        tags.iter()
            .enumerate()
            .map(|(i, &t)| {
                let trans = if i == 0 { 0.0 } else { self.trans(tags[i - 1], t) };
                self.state[i][t] + trans
            })
            .sum()
    }

    /// Max-score path; at every comparison the lowest tag index wins ties.
    pub fn viterbi(&self) -> (Vec<usize>, f64) {
        let n = self.n_tags;
        let mut delta = self.state[0].clone();
        let mut back: Vec<Vec<usize>> = Vec::with_capacity(self.len());
        for row in &self.state[1..] {
            let mut next = vec![0.0; n];
            let mut ptr = vec![0usize; n];
            for t in 0..n {
                let mut best = delta[0] + self.trans(0, t);
                for (u, &d) in delta.iter().enumerate().skip(1) {
                    let s = d + self.trans(u, t);
                    if s > best {
                        best = s;
                        ptr[t] = u;
                    }
                }
                next[t] = best + row[t];
            }
            back.push(ptr);
            delta = next;
        }
        let mut last = 0;
        for t in 1..n {
            if delta[t] > delta[last] {
                last = t;
            }
        }
        let score = delta[last];
        let mut path = vec![last];
        for ptr in back.iter().rev() {
            let prev = ptr[*path.last().expect("non-empty")];
            path.push(prev);
        }
        path.reverse();
        (path, score)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_position() {
        let l = Lattice::new(vec![vec![0.0, 1.0]], vec![0.0; 4]);
        assert_eq!(l.viterbi(), (vec![1], 1.0));
        let expected = (1.0 + 1f64.exp()).ln();
        assert!((l.log_partition() - expected).abs() < 1e-12);
        assert!((l.log_partition_backward() - expected).abs() < 1e-12);
        assert!(l.marginals().edge.is_empty());
    }

    #[test]
    fn constant_shift_keeps_argmax() {
        let state = vec![vec![0.3, -0.2, 0.1], vec![0.0, 0.5, -1.0], vec![0.2, 0.2, 0.4]];
        let trans = vec![0.1, -0.3, 0.2, 0.0, 0.4, -0.1, 0.3, 0.0, -0.2];
        let base = Lattice::new(state.clone(), trans.clone());
        let mut shifted_state = state;
        for s in &mut shifted_state[1] {
            *s += 7.25;
        }
        let shifted = Lattice::new(shifted_state, trans);
        let (p0, s0) = base.viterbi();
        let (p1, s1) = shifted.viterbi();
        assert_eq!(p0, p1);
        assert!((s1 - s0 - 7.25).abs() < 1e-12);
    }
}
