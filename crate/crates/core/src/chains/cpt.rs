//! Metropolis chain on permutations for the conditional permutation test.
//!
//! The target is `P(σ) ∝ Π_j Q(X_{σ(j)} | Z_j)`. Only the `n × n` table
//! `log Q(X_i | Z_j)` is needed, so the chain does not know the model behind
//! it.

use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::{Direction, Kernel};

/// Row-major table `q_log[i * n + j] = log Q(X_i | Z_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CptChain {
    n: usize,
    q_log: Vec<f64>,
}

impl CptChain {
    pub fn new(n: usize, q_log: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Argument("empty permutation chain".into()));
        }
        if q_log.len() != n * n {
            return Err(Error::Dimension(format!("{} log-density entries for n = {n}", q_log.len())));
        }
        if let Some(p) = q_log.iter().position(|v| !v.is_finite()) {
            return Err(Error::Argument(format!(
                "log Q(X_{} | Z_{}) is not finite",
                p / n,
                p % n
            )));
        }
        Ok(Self { n, q_log })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn q_log(&self, x_index: usize, z_index: usize) -> f64 {
        self.q_log[x_index * self.n + z_index]
    }

    /// `Σ_j log Q(X_{σ(j)} | Z_j)`, from scratch.
    pub fn log_weight(&self, perm: &[usize]) -> f64 {
        perm.iter().enumerate().map(|(j, &i)| self.q_log(i, j)).sum()
    }

    pub fn identity_state(&self) -> PermutationState {
        PermutationState::new((0..self.n).collect(), self).expect("identity is a bijection")
    }
}

/// A permutation with its cached log weight.
#[derive(Debug, Clone, PartialEq)]
pub struct PermutationState {
    perm: Vec<usize>,
    log_weight: f64,
}

impl PermutationState {
    pub fn new(perm: Vec<usize>, chain: &CptChain) -> Result<Self> {
        if perm.len() != chain.len() {
            return Err(Error::Dimension(format!("permutation of length {} for n = {}", perm.len(), chain.len())));
        }
        let mut seen = vec![false; perm.len()];
        for &i in &perm {
            if i >= perm.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::Argument("not a bijection".into()));
            }
        }
        let log_weight = chain.log_weight(&perm);
        Ok(Self { perm, log_weight })
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn log_weight(&self) -> f64 {
        self.log_weight
    }
}

/// Propose swapping `σ(j)` and `σ(k)` for uniform `j, k` (possibly equal) and
/// accept with probability `min(1, e^Δ)`. The cached weight is updated with
/// the four affected terms only.
pub fn cpt_swap_step<R: Rng + ?Sized>(state: &mut PermutationState, chain: &CptChain, rng: &mut R) {
    let n = chain.len();
    let j = rng.random_range(0..n);
    let k = rng.random_range(0..n);
    if j == k {
        return;
    }
    let (sj, sk) = (state.perm[j], state.perm[k]);
    let delta = chain.q_log(sk, j) + chain.q_log(sj, k) - chain.q_log(sj, j) - chain.q_log(sk, k);
    if delta >= 0.0 || rng.random::<f64>() < delta.exp() {
        state.perm.swap(j, k);
        state.log_weight += delta;
    }
}

impl Kernel for CptChain {
    type State = PermutationState;

    #[inline]
    fn step<R: Rng + ?Sized>(&self, state: &mut PermutationState, _direction: Direction, rng: &mut R) {
        cpt_swap_step(state, self, rng);
    }

    fn is_reversible(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn construction_errors() {
        assert!(CptChain::new(2, vec![0.0, 1.0, f64::NEG_INFINITY, 0.0]).is_err());
        assert!(CptChain::new(2, vec![0.0; 3]).is_err());
        let c = CptChain::new(2, vec![0.0; 4]).unwrap();
        assert!(PermutationState::new(vec![0, 0], &c).is_err());
        assert!(PermutationState::new(vec![0, 2], &c).is_err());
    }

    #[test]
    fn constant_table_is_uniform_over_s3() {
        let chain = CptChain::new(3, vec![-0.7; 9]).unwrap();
        let mut s = chain.identity_state();
        let mut rng = Stream::new(21).rng();
        let mut counts = std::collections::HashMap::new();
        let steps = 1_000_000;
        for _ in 0..steps {
            cpt_swap_step(&mut s, &chain, &mut rng);
            *counts.entry(s.perm().to_vec()).or_insert(0usize) += 1;
        }
        assert_eq!(counts.len(), 6);
        // Transition spectrum is {1, 1/3, -1/3}: integrated autocorrelation
        // of any occupancy indicator is at most (1 + 1/3) / (1 - 1/3) = 2.
        let p = 1.0 / 6.0;
        let se = (2.0 * p * (1.0 - p) / steps as f64).sqrt();
        for (perm, c) in counts {
            let f = c as f64 / steps as f64;
            assert!((f - p).abs() < 4.0 * se, "{perm:?}: {f}");
        }
    }

    #[test]
    fn cached_weight_tracks_recomputation() {
        let n = 8;
        let mut rng = Stream::new(22).rng();
        let q: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
        let chain = CptChain::new(n, q).unwrap();
        let mut s = chain.identity_state();
        for _ in 0..1_000_000 {
            cpt_swap_step(&mut s, &chain, &mut rng);
        }
        assert!((s.log_weight() - chain.log_weight(s.perm())).abs() <= 1e-6);
    }

    #[test]
    fn identity_proposal_leaves_state() {
        let chain = CptChain::new(1, vec![0.3]).unwrap();
        let mut s = chain.identity_state();
        let before = s.clone();
        cpt_swap_step(&mut s, &chain, &mut Stream::new(0).rng());
        assert_eq!(s, before);
    }
}
