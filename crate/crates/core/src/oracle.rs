//! Exact brute-force computations on tiny instances.
//!
//! Everything here enumerates all randomness explicitly (the law of `X_0`,
//! every kernel transition, every permutation) and works from the kernel
//! matrices alone. Nothing calls the samplers, so the results are an
//! independent check on them.

use std::collections::{BTreeMap, BTreeSet};

use crate::chains::{BinaryMatrix, CptChain};
use crate::error::{Error, Result};
use crate::kernel::{DiscreteDistribution, DiscreteKernel};
use crate::pvalue::{p_mc, Alpha};
use crate::samplers::MarkedTree;

/// Largest number of state assignments an enumeration may visit.
pub const MAX_TUPLES: u128 = 1_000_000;

/// Joint pmf of `(X_0, X̃_1, .., X̃_M)` over state indices.
#[derive(Debug, Clone, PartialEq)]
pub struct JointLaw {
    arity: usize,
    mass: BTreeMap<Vec<usize>, f64>,
}

impl JointLaw {
    fn new(arity: usize) -> Self {
        Self {
            arity,
            mass: BTreeMap::new(),
        }
    }

    fn add(&mut self, tuple: Vec<usize>, p: f64) {
        if p != 0.0 {
            *self.mass.entry(tuple).or_insert(0.0) += p;
        }
    }

    /// `M + 1`.
    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn mass(&self, tuple: &[usize]) -> f64 {
        self.mass.get(tuple).copied().unwrap_or(0.0)
    }

    pub fn support(&self) -> impl Iterator<Item = (&Vec<usize>, &f64)> {
        self.mass.iter()
    }

    pub fn total(&self) -> f64 {
        self.mass.values().sum()
    }

    /// Law of coordinate `coord` over `n` states.
    pub fn marginal(&self, coord: usize, n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n];
        for (t, p) in &self.mass {
            out[t[coord]] += p;
        }
        out
    }

    /// Largest tuple-wise difference to another law.
    pub fn max_abs_diff(&self, other: &JointLaw) -> f64 {
        let keys: BTreeSet<&Vec<usize>> = self.mass.keys().chain(other.mass.keys()).collect();
        keys.into_iter()
            .map(|k| (self.mass(k) - other.mass(k)).abs())
            .fold(0.0, f64::max)
    }
}

/// Which sampler's law to compute.
#[derive(Debug, Clone)]
pub enum SamplerSpec {
    Iid,
    Sequential,
    Parallel,
    PermutedSerial,
    /// Each edge is one step of `K^L`.
    Tree(MarkedTree),
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current: Vec<usize> = (0..n).collect();
    loop {
        out.push(current.clone());
        // next lexicographic permutation
        let Some(i) = (1..n).rev().find(|&i| current[i - 1] < current[i]) else {
            return out;
        };
        let j = (i..n).rev().find(|&j| current[j] > current[i - 1]).expect("pivot exists");
        current.swap(i - 1, j);
        current[i..].reverse();
    }
}

/// Every assignment of `n` states to `len` slots, in odometer order.
fn assignments(n: usize, len: usize) -> impl Iterator<Item = Vec<usize>> {
    let total = (n as u128).pow(len as u32) as usize;
    (0..total).map(move |mut code| {
        let mut v = vec![0; len];
        for slot in v.iter_mut() {
            *slot = code % n;
            code /= n;
        }
        v
    })
}

fn guard(n: usize, slots: usize) -> Result<()> {
    let needed = (n as u128).checked_pow(slots as u32).unwrap_or(u128::MAX);
    if needed > MAX_TUPLES {
        return Err(Error::Intractable {
            needed,
            limit: MAX_TUPLES,
        });
    }
    Ok(())
}

/// Exact joint law of `(X_0, X̃_1, .., X̃_M)` when `X_0 ~ π`.
pub fn exact_joint(
    spec: &SamplerSpec,
    kernel: &DiscreteKernel,
    target: &DiscreteDistribution,
    m: usize,
    step: usize,
) -> Result<JointLaw> {
    let n = kernel.len();
    if target.len() != n {
        return Err(Error::Dimension(format!("kernel has {n} states, target has {}", target.len())));
    }
    if step == 0 {
        return Err(Error::Argument("step must be at least 1".into()));
    }
    let f = target.masses();
    let k = kernel.power(step);
    // k̂(y, x) = f(x) k(x, y) / f(y), written out here rather than borrowed
    let khat = |y: usize, x: usize| {
        if f[y] == 0.0 {
            0.0
        } else {
            f[x] * k.entry(x, y) / f[y]
        }
    };
    let mut law = JointLaw::new(m + 1);

    match spec {
        SamplerSpec::Iid => {
            guard(n, m + 1)?;
            for t in assignments(n, m + 1) {
                let p = t.iter().map(|&x| f[x]).product();
                law.add(t, p);
            }
        }
        SamplerSpec::Sequential => {
            guard(n, m + 1)?;
            for t in assignments(n, m + 1) {
                let p = f[t[0]] * t.windows(2).map(|w| k.entry(w[0], w[1])).product::<f64>();
                law.add(t, p);
            }
        }
        SamplerSpec::Parallel => {
            guard(n, m + 2)?;
            for t in assignments(n, m + 1) {
                let p: f64 = (0..n)
                    .map(|hub| f[t[0]] * khat(t[0], hub) * t[1..].iter().map(|&x| k.entry(hub, x)).product::<f64>())
                    .sum();
                law.add(t, p);
            }
        }
        SamplerSpec::PermutedSerial => {
            guard(n, m + 1)?;
            let perms = permutations(m + 1);
            let weight = 1.0 / perms.len() as f64;
            for y in assignments(n, m + 1) {
                for sigma in &perms {
                    let anchor = sigma[0];
                    let mut p = weight * f[y[anchor]];
                    for j in 0..anchor {
                        p *= khat(y[j + 1], y[j]);
                    }
                    for j in anchor + 1..=m {
                        p *= k.entry(y[j - 1], y[j]);
                    }
                    law.add(sigma.iter().map(|&s| y[s]).collect(), p);
                }
            }
        }
        SamplerSpec::Tree(tree) => {
            if tree.draw_count() != m {
                return Err(Error::Argument(format!("tree has {} draws, M = {m}", tree.draw_count())));
            }
            guard(n, tree.vertex_count())?;
            let perms = permutations(m + 1);
            let weight = 1.0 / perms.len() as f64;
            let marks = tree.marks();
            // (child, parent, along-edge) lists for each possible root mark
            let orientations: Vec<Vec<(usize, usize, bool)>> =
                marks.iter().map(|&root| orient(tree, root)).collect();
            for y in assignments(n, tree.vertex_count()) {
                for sigma in &perms {
                    let root_mark = sigma[0];
                    let mut p = weight * f[y[marks[root_mark]]];
                    for &(child, parent, along) in &orientations[root_mark] {
                        p *= if along {
                            k.entry(y[parent], y[child])
                        } else {
                            khat(y[parent], y[child])
                        };
                        if p == 0.0 {
                            break;
                        }
                    }
                    law.add(sigma.iter().map(|&s| y[marks[s]]).collect(), p);
                }
            }
        }
    }
    Ok(law)
}

/// Depth-first orientation of the tree away from `root`.
fn orient(tree: &MarkedTree, root: usize) -> Vec<(usize, usize, bool)> {
    let mut out = Vec::new();
    let mut stack = vec![root];
    let mut seen = vec![false; tree.vertex_count()];
    seen[root] = true;
    while let Some(u) = stack.pop() {
        for &(a, b) in tree.edges() {
            let (other, along) = if a == u {
                (b, true)
            } else if b == u {
                (a, false)
            } else {
                continue;
            };
            if !seen[other] {
                seen[other] = true;
                out.push((other, u, along));
                stack.push(other);
            }
        }
    }
    out
}

/// `max_τ TV(law, law ∘ τ)` over all permutations `τ` of the coordinates.
pub fn exchangeability_distance(law: &JointLaw) -> f64 {
    let mut worst = 0.0f64;
    for tau in permutations(law.arity) {
        let permute = |t: &Vec<usize>| -> Vec<usize> { tau.iter().map(|&i| t[i]).collect() };
        let mut keys: BTreeSet<Vec<usize>> = law.mass.keys().cloned().collect();
        keys.extend(law.mass.keys().map(permute));
        let tv = 0.5
            * keys
                .iter()
                .map(|t| (law.mass(t) - law.mass(&permute(t))).abs())
                .sum::<f64>();
        worst = worst.max(tv);
    }
    worst
}

/// `P(p_MC ≤ α)` under the law, with `p_MC` from the first coordinate versus
/// the rest.
pub fn exact_rejection_probability<F>(law: &JointLaw, statistic: F, alpha: Alpha) -> Result<f64>
where
    F: Fn(usize) -> f64,
{
    let mut total = 0.0;
    for (t, &p) in &law.mass {
        let values: Vec<f64> = t.iter().map(|&x| statistic(x)).collect();
        if p_mc(values[0], &values[1..])?.le(alpha) {
            total += p;
        }
    }
    Ok(total)
}

/// All binary matrices with the given margins, by row-wise backtracking.
pub fn enumerate_fiber(row_sums: &[usize], col_sums: &[usize]) -> Result<Vec<BinaryMatrix>> {
    let (rows, cols) = (row_sums.len(), col_sums.len());
    if rows > 5 || cols > 5 {
        return Err(Error::Intractable {
            needed: 1u128 << (rows * cols).min(127),
            limit: 1 << 25,
        });
    }
    let mut out = Vec::new();
    if row_sums.iter().sum::<usize>() != col_sums.iter().sum::<usize>() {
        return Ok(out);
    }
    let mut data = vec![0u8; rows * cols];
    let mut remaining = col_sums.to_vec();
    fill_row(0, row_sums, &mut remaining, &mut data, cols, &mut out);
    Ok(out)
}

fn fill_row(
    r: usize,
    row_sums: &[usize],
    remaining: &mut [usize],
    data: &mut [u8],
    cols: usize,
    out: &mut Vec<BinaryMatrix>,
) {
    if r == row_sums.len() {
        if remaining.iter().all(|&c| c == 0) {
            out.push(BinaryMatrix::new(row_sums.len(), cols, data.to_vec()).expect("valid entries"));
        }
        return;
    }
    for subset in 0u32..(1 << cols) {
        if subset.count_ones() as usize != row_sums[r] {
            continue;
        }
        if (0..cols).any(|c| subset >> c & 1 == 1 && remaining[c] == 0) {
            continue;
        }
        for c in 0..cols {
            let bit = (subset >> c & 1) as u8;
            data[r * cols + c] = bit;
            remaining[c] -= bit as usize;
        }
        fill_row(r + 1, row_sums, remaining, data, cols, out);
        for c in 0..cols {
            remaining[c] += data[r * cols + c] as usize;
            data[r * cols + c] = 0;
        }
    }
}

/// States and one-step transition matrix of the CPT swap chain, built by
/// enumerating all `n²` proposals from every permutation.
pub fn cpt_transition_matrix(chain: &CptChain) -> Result<(Vec<Vec<usize>>, DiscreteKernel)> {
    let n = chain.len();
    guard(n, n)?;
    let perms = permutations(n);
    let index: BTreeMap<Vec<usize>, usize> = perms.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
    let s = perms.len();
    let mut rows = vec![vec![0.0; s]; s];
    let proposal = 1.0 / (n * n) as f64;
    for (a, sigma) in perms.iter().enumerate() {
        let w = chain.log_weight(sigma);
        for j in 0..n {
            for k in 0..n {
                if j == k {
                    rows[a][a] += proposal;
                    continue;
                }
                let mut tau = sigma.clone();
                tau.swap(j, k);
                let accept = (chain.log_weight(&tau) - w).exp().min(1.0);
                rows[a][index[&tau]] += proposal * accept;
                rows[a][a] += proposal * (1.0 - accept);
            }
        }
    }
    Ok((perms, DiscreteKernel::new(rows)?))
}

/// `P(σ) ∝ exp(Σ_j log Q(X_{σ(j)} | Z_j))` over [`permutations`] order.
pub fn cpt_target(chain: &CptChain) -> Result<DiscreteDistribution> {
    let n = chain.len();
    guard(n, n)?;
    let perms = permutations(n);
    let logs: Vec<f64> = perms.iter().map(|p| chain.log_weight(p)).collect();
    let top = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    DiscreteDistribution::from_weights((0..perms.len() as i64).collect(), &weights)
}

/// Exact CPT p-value `Σ_σ P(σ) 1[T(σ) ≥ T(id)]`, as a ratio of summed weights.
pub fn cpt_exact_pvalue<F>(chain: &CptChain, statistic: F) -> Result<f64>
where
    F: Fn(&[usize]) -> f64,
{
    let n = chain.len();
    guard(n, n)?;
    let identity: Vec<usize> = (0..n).collect();
    let t0 = statistic(&identity);
    let logs: Vec<(Vec<usize>, f64)> = permutations(n).into_iter().map(|p| {
        let l = chain.log_weight(&p);
        (p, l)
    }).collect();
    let top = logs.iter().map(|(_, l)| *l).fold(f64::NEG_INFINITY, f64::max);
    let (mut upper, mut total) = (0.0, 0.0);
    for (p, l) in &logs {
        let w = (l - top).exp();
        total += w;
        if statistic(p) >= t0 {
            upper += w;
        }
    }
    Ok(upper / total)
}

/// Plain permutation-test p-value: fraction of all `n!` permutations with
/// `T(σ) ≥ T(id)`.
pub fn permutation_test_exact<F>(n: usize, statistic: F) -> Result<f64>
where
    F: Fn(&[usize]) -> f64,
{
    guard(n, n)?;
    let identity: Vec<usize> = (0..n).collect();
    let t0 = statistic(&identity);
    let perms = permutations(n);
    let hits = perms.iter().filter(|p| statistic(p) >= t0).count();
    Ok(hits as f64 / perms.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn permutation_listing() {
        assert_eq!(permutations(1), vec![vec![0]]);
        let p3 = permutations(3);
        assert_eq!(p3.len(), 6);
        assert_eq!(p3[0], vec![0, 1, 2]);
        assert_eq!(p3[5], vec![2, 1, 0]);
        assert_eq!(permutations(5).len(), 120);
    }

    #[test]
    fn identity_kernel_concentrates_on_constant_tuples() {
        let pi = DiscreteDistribution::new(vec![0, 1, 2], vec![0.2, 0.3, 0.5]).unwrap();
        let id = DiscreteKernel::identity(3);
        for spec in [SamplerSpec::Sequential, SamplerSpec::Parallel, SamplerSpec::PermutedSerial] {
            let law = exact_joint(&spec, &id, &pi, 2, 1).unwrap();
            for (t, p) in law.support() {
                assert!(t.iter().all(|&x| x == t[0]));
                assert!((p - pi.mass(t[0])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn iid_is_product_law() {
        let pi = DiscreteDistribution::new(vec![0, 1], vec![0.25, 0.75]).unwrap();
        let law = exact_joint(&SamplerSpec::Iid, &DiscreteKernel::identity(2), &pi, 2, 1).unwrap();
        assert!((law.mass(&[1, 0, 1]) - 0.75 * 0.25 * 0.75).abs() < 1e-16);
        assert!(exchangeability_distance(&law) < 1e-16);
    }

    #[test]
    fn rejection_probability_at_alpha_one() {
        let pi = DiscreteDistribution::uniform(3).unwrap();
        let law = exact_joint(&SamplerSpec::Iid, &DiscreteKernel::identity(3), &pi, 2, 1).unwrap();
        let p = exact_rejection_probability(&law, |x| x as f64, "1".parse().unwrap()).unwrap();
        assert!((p - 1.0).abs() < 1e-15);
    }

    #[test]
    fn guard_trips() {
        let pi = DiscreteDistribution::uniform(10).unwrap();
        let r = exact_joint(&SamplerSpec::Sequential, &DiscreteKernel::identity(10), &pi, 6, 1);
        assert!(matches!(r, Err(Error::Intractable { .. })));
    }

    #[test]
    fn fiber_examples() {
        assert_eq!(enumerate_fiber(&[1, 1, 1], &[1, 1, 1]).unwrap().len(), 6);
        let single = enumerate_fiber(&[2, 2], &[2, 2]).unwrap();
        assert_eq!(single.len(), 1);
        assert_eq!(single[0].data(), &[1, 1, 1, 1]);
        assert_eq!(enumerate_fiber(&[1, 1], &[1, 1]).unwrap().len(), 2);
        assert!(enumerate_fiber(&[2, 1], &[1, 1]).unwrap().is_empty());
        assert!(enumerate_fiber(&[3, 0], &[1, 1]).unwrap().is_empty());
    }
}
