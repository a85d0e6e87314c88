//! Markov transition kernels.
//!
//! Finite-state kernels are row-stochastic matrices ([`DiscreteKernel`]) over
//! the states of a [`DiscreteDistribution`]. Any kernel, finite or not,
//! implements [`Kernel`], which exposes one forward step (the kernel itself)
//! and one reverse step (its reversal with respect to the target).
//! [`KernelPair`] bundles a kernel with the number of applications `L` that
//! make up one logical step.

use rand::Rng;

use crate::error::{Error, Result};

/// Tolerance for exact algebraic identities on matrices.
pub const EXACT_TOL: f64 = 1e-12;
/// Tolerance for identities checked after repeated matrix products.
pub const PRODUCT_TOL: f64 = 1e-10;

/// A finite probability law. States are indices `0..len()`; each carries an
/// integer label used for display and for statistics such as `T(x) = x`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    labels: Vec<i64>,
    mass: Vec<f64>,
    cumulative: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn new(labels: Vec<i64>, mass: Vec<f64>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::InvalidDistribution("no states".into()));
        }
        if labels.len() != mass.len() {
            return Err(Error::Dimension(format!(
                "{} labels but {} masses",
                labels.len(),
                mass.len()
            )));
        }
        if let Some(i) = mass.iter().position(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidDistribution(format!(
                "mass of state {i} is {}",
                mass[i]
            )));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidDistribution(format!("masses sum to {total}")));
        }
        let mut sorted = labels.clone();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidDistribution("duplicate state label".into()));
        }
        let cumulative = mass
            .iter()
            .scan(0.0, |acc, m| {
                *acc += m;
                Some(*acc)
            })
            .collect();
        Ok(Self {
            labels,
            mass,
            cumulative,
        })
    }

    /// Normalizes nonnegative weights.
    pub fn from_weights(labels: Vec<i64>, weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Self::new(labels, weights.iter().map(|w| w / total).collect())
    }

    /// Uniform law on labels `0..n`.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new((0..n as i64).collect(), vec![1.0 / n as f64; n])
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn mass(&self, state: usize) -> f64 {
        self.mass[state]
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn label(&self, state: usize) -> i64 {
        self.labels[state]
    }

    pub fn index_of(&self, label: i64) -> Option<usize> {
        self.labels.iter().position(|&l| l == label)
    }

    /// `E[label]`.
    pub fn mean_label(&self) -> f64 {
        self.labels
            .iter()
            .zip(&self.mass)
            .map(|(&l, &m)| l as f64 * m)
            .sum()
    }
}

/// Exact sampling from a law, where that is possible.
pub trait DirectSampler: Sync {
    type State: Clone + Send + Sync;
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Self::State;
}

impl DirectSampler for DiscreteDistribution {
    type State = usize;

    /// Inverse-CDF lookup.
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let i = self.cumulative.partition_point(|&c| c <= u);
        if i < self.len() {
            i
        } else {
            // u beyond the rounded total: last state with positive mass
            self.mass.iter().rposition(|&m| m > 0.0).unwrap_or(0)
        }
    }
}

/// Row-stochastic transition matrix, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    n: usize,
    entries: Vec<f64>,
}

impl DiscreteKernel {
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        if let Some(i) = rows.iter().position(|r| r.len() != n) {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {n}",
                rows[i].len()
            )));
        }
        Self::from_flat(n, rows.into_iter().flatten().collect())
    }

    pub fn from_flat(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidKernel("no states".into()));
        }
        if entries.len() != n * n {
            return Err(Error::Dimension(format!(
                "{} entries for a {n}x{n} kernel",
                entries.len()
            )));
        }
        if let Some(p) = entries.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidKernel(format!(
                "entry ({}, {}) is {}",
                p / n,
                p % n,
                entries[p]
            )));
        }
        let k = Self { n, entries };
        for i in 0..n {
            let s: f64 = k.row(i).iter().sum();
            if (s - 1.0).abs() > EXACT_TOL {
                return Err(Error::InvalidKernel(format!("row {i} sums to {s}")));
            }
        }
        Ok(k)
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![0.0; n * n];
        for i in 0..n {
            entries[i * n + i] = 1.0;
        }
        Self { n, entries }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn entry(&self, from: usize, to: usize) -> f64 {
        self.entries[from * self.n + to]
    }

    pub fn row(&self, from: usize) -> &[f64] {
        &self.entries[from * self.n..(from + 1) * self.n]
    }

    /// Matrix product `self · other`.
    pub fn compose(&self, other: &DiscreteKernel) -> Result<DiscreteKernel> {
        if self.n != other.n {
            return Err(Error::Dimension(format!("{} vs {} states", self.n, other.n)));
        }
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.entries[i * n + k];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += a * other.entries[k * n + j];
                }
            }
        }
        Ok(DiscreteKernel { n, entries: out })
    }

    /// `K^steps` by repeated squaring. `steps = 0` gives the identity.
    pub fn power(&self, steps: usize) -> DiscreteKernel {
        let mut result = DiscreteKernel::identity(self.n);
        let mut base = self.clone();
        let mut e = steps;
        while e > 0 {
            if e & 1 == 1 {
                result = result.compose(&base).expect("same dimension");
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base).expect("same dimension");
            }
        }
        result
    }

    /// Row vector times matrix: `(mu K)(y) = sum_x mu(x) k(x, y)`.
    pub fn push_forward(&self, mu: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n];
        for (x, &m) in mu.iter().enumerate() {
            if m == 0.0 {
                continue;
            }
            for y in 0..n {
                out[y] += m * self.entries[x * n + y];
            }
        }
        out
    }

    /// The unique stationary law, found by solving `pi (K - I) = 0`,
    /// `sum pi = 1` with partial pivoting. Fails when it is not unique.
    pub fn stationary(&self) -> Result<DiscreteDistribution> {
        let n = self.n;
        // Transposed system: rows are equations indexed by y.
        let mut a = vec![0.0; n * n];
        let mut b = vec![0.0; n];
        for y in 0..n {
            for x in 0..n {
                a[y * n + x] = self.entry(x, y) - if x == y { 1.0 } else { 0.0 };
            }
        }
        for x in 0..n {
            a[(n - 1) * n + x] = 1.0;
        }
        b[n - 1] = 1.0;
        for col in 0..n {
            let pivot = (col..n)
                .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
                .expect("nonempty range");
            if a[pivot * n + col].abs() < 1e-14 {
                return Err(Error::InvalidKernel("stationary law is not unique".into()));
            }
            if pivot != col {
                for j in 0..n {
                    a.swap(pivot * n + j, col * n + j);
                }
                b.swap(pivot, col);
            }
            for r in 0..n {
                if r == col {
                    continue;
                }
                let factor = a[r * n + col] / a[col * n + col];
                if factor == 0.0 {
                    continue;
                }
                for j in col..n {
                    a[r * n + j] -= factor * a[col * n + j];
                }
                b[r] -= factor * b[col];
            }
        }
        let mut pi: Vec<f64> = (0..n).map(|i| (b[i] / a[i * n + i]).max(0.0)).collect();
        let total: f64 = pi.iter().sum();
        pi.iter_mut().for_each(|p| *p /= total);
        DiscreteDistribution::new((0..n as i64).collect(), pi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StationarityReport {
    pub stationary: bool,
    pub max_residual: f64,
}

/// Checks `max_y |f(y) - sum_x f(x) k(x, y)| <= tol`.
pub fn is_stationary(
    kernel: &DiscreteKernel,
    target: &DiscreteDistribution,
    tol: f64,
) -> Result<StationarityReport> {
    check_dims(kernel, target)?;
    let pushed = kernel.push_forward(target.masses());
    let max_residual = pushed
        .iter()
        .zip(target.masses())
        .map(|(p, f)| (p - f).abs())
        .fold(0.0, f64::max);
    Ok(StationarityReport {
        stationary: max_residual <= tol,
        max_residual,
    })
}

/// The reversal `k̂(y, x) = f(x) k(x, y) / f(y)`.
pub fn reversal(kernel: &DiscreteKernel, target: &DiscreteDistribution) -> Result<DiscreteKernel> {
    check_dims(kernel, target)?;
    if let Some(state) = target.masses().iter().position(|&m| m <= 0.0) {
        return Err(Error::ReversalUndefined { state });
    }
    let report = is_stationary(kernel, target, EXACT_TOL)?;
    if !report.stationary {
        return Err(Error::StationarityViolation {
            residual: report.max_residual,
        });
    }
    let n = kernel.len();
    let f = target.masses();
    let mut entries = vec![0.0; n * n];
    for y in 0..n {
        for x in 0..n {
            entries[y * n + x] = f[x] * kernel.entry(x, y) / f[y];
        }
    }
    // Rows sum to (fK)(y)/f(y), which is 1 up to the stationarity residual.
    for y in 0..n {
        let s: f64 = entries[y * n..(y + 1) * n].iter().sum();
        entries[y * n..(y + 1) * n].iter_mut().for_each(|e| *e /= s);
    }
    Ok(DiscreteKernel { n, entries })
}

/// `max_{x,y} |f(x) k(x, y) - f(y) k̂(y, x)|`.
pub fn detailed_balance_residual(
    forward: &DiscreteKernel,
    reverse: &DiscreteKernel,
    target: &DiscreteDistribution,
) -> f64 {
    let n = forward.len();
    let f = target.masses();
    let mut worst = 0.0f64;
    for x in 0..n {
        for y in 0..n {
            worst = worst.max((f[x] * forward.entry(x, y) - f[y] * reverse.entry(y, x)).abs());
        }
    }
    worst
}

/// Largest entrywise difference between two kernels of equal size.
pub fn max_abs_diff(a: &DiscreteKernel, b: &DiscreteKernel) -> f64 {
    a.entries
        .iter()
        .zip(&b.entries)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn check_dims(kernel: &DiscreteKernel, target: &DiscreteDistribution) -> Result<()> {
    if kernel.len() != target.len() {
        return Err(Error::Dimension(format!(
            "kernel has {} states, target has {}",
            kernel.len(),
            target.len()
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// A step of `K`.
    Forward,
    /// A step of the reversal `K̂`.
    Reverse,
}

/// A transition kernel together with its reversal.
///
/// Implementations are immutable and shared across threads; all randomness
/// comes from the caller's generator.
pub trait Kernel: Sync + Send {
    type State: Clone + Send + Sync;

    /// One step of `K` or `K̂`, in place.
    fn step<R: Rng + ?Sized>(&self, state: &mut Self::State, direction: Direction, rng: &mut R);

    /// Whether `K̂ = K`.
    fn is_reversible(&self) -> bool;

    /// `(K, K̂)` as matrices, for finite kernels only.
    fn matrices(&self) -> Option<(&DiscreteKernel, &DiscreteKernel)> {
        None
    }
}

/// A kernel plus the number of applications `L` per logical step.
#[derive(Debug, Clone)]
pub struct KernelPair<K> {
    kernel: K,
    step_size: usize,
}

impl<K: Kernel> KernelPair<K> {
    pub fn new(kernel: K, step_size: usize) -> Result<Self> {
        if step_size == 0 {
            return Err(Error::Argument("step size L must be at least 1".into()));
        }
        Ok(Self { kernel, step_size })
    }

    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    pub fn step_size(&self) -> usize {
        self.step_size
    }

    pub fn is_reversible(&self) -> bool {
        self.kernel.is_reversible()
    }

    /// `L` steps in the given direction, in place.
    pub fn advance<R: Rng + ?Sized>(&self, state: &mut K::State, direction: Direction, rng: &mut R) {
        for _ in 0..self.step_size {
            self.kernel.step(state, direction, rng);
        }
    }

    /// The state after `L` steps from `start`.
    pub fn step_power<R: Rng + ?Sized>(
        &self,
        start: &K::State,
        direction: Direction,
        rng: &mut R,
    ) -> K::State {
        let mut s = start.clone();
        self.advance(&mut s, direction, rng);
        s
    }

    /// `(K^L, K̂^L)`; unsupported for kernels without a matrix form.
    pub fn power_matrices(&self) -> Result<(DiscreteKernel, DiscreteKernel)> {
        let (k, khat) = self
            .kernel
            .matrices()
            .ok_or(Error::Unsupported("kernel has no matrix representation"))?;
        Ok((k.power(self.step_size), khat.power(self.step_size)))
    }
}

/// Alias-free row sampler: cumulative sums over the nonzero entries of each
/// row.
#[derive(Debug, Clone)]
struct RowTable {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    cumulative: Vec<f64>,
}

impl RowTable {
    fn new(k: &DiscreteKernel) -> Self {
        let mut offsets = vec![0];
        let mut targets = Vec::new();
        let mut cumulative = Vec::new();
        for i in 0..k.len() {
            let mut acc = 0.0;
            for (j, &p) in k.row(i).iter().enumerate() {
                if p > 0.0 {
                    acc += p;
                    targets.push(j);
                    cumulative.push(acc);
                }
            }
            offsets.push(targets.len());
        }
        Self {
            offsets,
            targets,
            cumulative,
        }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, row: usize, rng: &mut R) -> usize {
        let (lo, hi) = (self.offsets[row], self.offsets[row + 1]);
        if hi - lo == 1 {
            return self.targets[lo];
        }
        let u: f64 = rng.random();
        let cums = &self.cumulative[lo..hi];
        let pos = cums.partition_point(|&c| c <= u).min(hi - lo - 1);
        self.targets[lo + pos]
    }
}

/// A finite kernel with its reversal, ready for sampling.
#[derive(Debug, Clone)]
pub struct FiniteChain {
    forward: DiscreteKernel,
    reverse: DiscreteKernel,
    target: DiscreteDistribution,
    reversible: bool,
    forward_rows: RowTable,
    reverse_rows: RowTable,
}

impl FiniteChain {
    /// Computes the reversal; fails if `target` is not stationary or has a
    /// zero-mass state.
    pub fn new(kernel: DiscreteKernel, target: DiscreteDistribution) -> Result<Self> {
        let reverse = reversal(&kernel, &target)?;
        let reversible = max_abs_diff(&kernel, &reverse) <= EXACT_TOL;
        Ok(Self {
            forward_rows: RowTable::new(&kernel),
            reverse_rows: RowTable::new(&reverse),
            forward: kernel,
            reverse,
            target,
            reversible,
        })
    }

    pub fn forward(&self) -> &DiscreteKernel {
        &self.forward
    }

    pub fn reverse(&self) -> &DiscreteKernel {
        &self.reverse
    }

    pub fn target(&self) -> &DiscreteDistribution {
        &self.target
    }
}

impl Kernel for FiniteChain {
    type State = usize;

    #[inline]
    fn step<R: Rng + ?Sized>(&self, state: &mut usize, direction: Direction, rng: &mut R) {
        *state = match direction {
            Direction::Forward => self.forward_rows.sample(*state, rng),
            Direction::Reverse => self.reverse_rows.sample(*state, rng),
        };
    }

    fn is_reversible(&self) -> bool {
        self.reversible
    }

    fn matrices(&self) -> Option<(&DiscreteKernel, &DiscreteKernel)> {
        Some((&self.forward, &self.reverse))
    }
}
