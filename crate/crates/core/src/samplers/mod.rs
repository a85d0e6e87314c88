//! Samplers producing `X̃_1, .., X̃_M` from the observed `X_0`.
//!
//! All samplers except [`sample_sequential`] are exchangeable under the null
//! `X_0 ~ π`. The sequential sampler is kept as the invalid baseline and its
//! sample sets are flagged accordingly.

mod format;
mod tree;

pub use format::{parse_tree, write_tree};
pub use tree::{build_path_tree, build_split_star, build_star_tree, sample_tree, MarkedTree, TreeViolation};

use rand::seq::SliceRandom;

use crate::kernel::{DirectSampler, Direction, Kernel, KernelPair};
use crate::par::Execution;
use crate::rng::Stream;

/// Spokes handled by one substream in the parallel sampler.
pub const SPOKE_BLOCK: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Iid,
    Sequential,
    Parallel,
    PermutedSerial,
    Tree,
}

impl Method {
    pub fn is_exchangeable(self) -> bool {
        !matches!(self, Method::Sequential)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Iid => "iid",
            Method::Sequential => "sequential",
            Method::Parallel => "parallel",
            Method::PermutedSerial => "permuted-serial",
            Method::Tree => "tree",
        }
    }
}

/// `X_0` together with the generated draws and how they were produced.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet<S> {
    pub observed: S,
    pub draws: Vec<S>,
    pub method: Method,
    /// `σ` over `{0..M}` for permuted serial and tree methods.
    pub permutation: Option<Vec<usize>>,
    /// `m* = σ(0)`.
    pub anchor: Option<usize>,
    /// `L`; `None` for i.i.d. and tree samplers (trees encode their own steps).
    pub step_size: Option<usize>,
    pub seed: u64,
    /// `X*` of the parallel method.
    pub hub: Option<S>,
    /// `Y_0..Y_M` for permuted serial, `Y_v` per vertex for trees.
    pub chain: Option<Vec<S>>,
    /// Whether the generating kernel was reversible (`K̂ = K`).
    pub reversible_kernel: bool,
}

impl<S> SampleSet<S> {
    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn is_exchangeable(&self) -> bool {
        self.method.is_exchangeable()
    }

    fn bare(observed: S, draws: Vec<S>, method: Method, seed: u64) -> Self {
        Self {
            observed,
            draws,
            method,
            permutation: None,
            anchor: None,
            step_size: None,
            seed,
            hub: None,
            chain: None,
            reversible_kernel: false,
        }
    }
}

/// Standard Monte Carlo: `M` exact draws from `π`, independent of `x0`.
pub fn sample_iid<D: DirectSampler>(target: &D, x0: D::State, m: usize, stream: &Stream) -> SampleSet<D::State> {
    let mut rng = stream.rng();
    let draws = (0..m).map(|_| target.sample(&mut rng)).collect();
    SampleSet::bare(x0, draws, Method::Iid, stream.seed())
}

/// One forward chain of `K^L` started at `x0`. Not exchangeable.
pub fn sample_sequential<K: Kernel>(
    pair: &KernelPair<K>,
    x0: K::State,
    m: usize,
    stream: &Stream,
) -> SampleSet<K::State> {
    let mut rng = stream.rng();
    let mut draws = Vec::with_capacity(m);
    let mut current = x0.clone();
    for _ in 0..m {
        pair.advance(&mut current, Direction::Forward, &mut rng);
        draws.push(current.clone());
    }
    let mut set = SampleSet::bare(x0, draws, Method::Sequential, stream.seed());
    set.step_size = Some(pair.step_size());
    set.reversible_kernel = pair.is_reversible();
    set
}

/// Hub-and-spoke sampler: `X* ~ K̂^L(x0, ·)`, then `M` independent spokes
/// `X̃_i ~ K^L(X*, ·)`.
pub fn sample_parallel<K: Kernel>(
    pair: &KernelPair<K>,
    x0: K::State,
    m: usize,
    stream: &Stream,
) -> SampleSet<K::State> {
    sample_parallel_with(pair, x0, m, stream, Execution::default())
}

/// [`sample_parallel`] with an explicit execution mode. Spoke block `b` uses
/// substream `b + 1` and the hub uses substream 0, so every mode returns the
/// same sample set.
pub fn sample_parallel_with<K: Kernel>(
    pair: &KernelPair<K>,
    x0: K::State,
    m: usize,
    stream: &Stream,
    execution: Execution,
) -> SampleSet<K::State> {
    let hub = pair.step_power(&x0, Direction::Reverse, &mut stream.split(0).rng());
    let mut draws = vec![hub.clone(); m];
    let execution = if m <= SPOKE_BLOCK { Execution::Sequential } else { execution };
    execution.for_each_chunk(&mut draws, SPOKE_BLOCK, |block, spokes| {
        let mut rng = stream.split(block as u64 + 1).rng();
        for spoke in spokes {
            pair.advance(spoke, Direction::Forward, &mut rng);
        }
    });
    let mut set = SampleSet::bare(x0, draws, Method::Parallel, stream.seed());
    set.hub = Some(hub);
    set.step_size = Some(pair.step_size());
    set.reversible_kernel = pair.is_reversible();
    set
}

/// Permuted serial sampler: uniform `σ` on `{0..M}`, `Y_{m*} = x0` with
/// `m* = σ(0)`, `m*` reverse and `M - m*` forward steps of `K^L`, then
/// `X̃_i = Y_{σ(i)}`.
pub fn sample_permuted_serial<K: Kernel>(
    pair: &KernelPair<K>,
    x0: K::State,
    m: usize,
    stream: &Stream,
) -> SampleSet<K::State> {
    let mut rng = stream.rng();
    let mut sigma: Vec<usize> = (0..=m).collect();
    sigma.shuffle(&mut rng);
    let anchor = sigma[0];

    let mut ys: Vec<Option<K::State>> = vec![None; m + 1];
    ys[anchor] = Some(x0.clone());
    let mut current = x0.clone();
    for j in (0..anchor).rev() {
        pair.advance(&mut current, Direction::Reverse, &mut rng);
        ys[j] = Some(current.clone());
    }
    let mut current = x0.clone();
    for slot in ys.iter_mut().skip(anchor + 1) {
        pair.advance(&mut current, Direction::Forward, &mut rng);
        *slot = Some(current.clone());
    }
    let chain: Vec<K::State> = ys.into_iter().map(|y| y.expect("every index visited")).collect();
    let draws = sigma[1..].iter().map(|&j| chain[j].clone()).collect();

    let mut set = SampleSet::bare(x0, draws, Method::PermutedSerial, stream.seed());
    set.permutation = Some(sigma);
    set.anchor = Some(anchor);
    set.step_size = Some(pair.step_size());
    set.chain = Some(chain);
    set.reversible_kernel = pair.is_reversible();
    set
}
