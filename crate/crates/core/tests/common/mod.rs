//! Discrete fixtures shared by the integration tests.
#![allow(dead_code)]

use mcmc_sigtest::kernel::{DiscreteDistribution, DiscreteKernel, FiniteChain};

/// Non-reversible lazy cycle with unequal masses, `π = (3/7, 2/7, 2/7)`.
/// The sequential sampler is not exchangeable on it.
pub fn asymmetric() -> (DiscreteKernel, DiscreteDistribution) {
    let k = DiscreteKernel::new(vec![vec![0.4, 0.0, 0.6], vec![0.9, 0.1, 0.0], vec![0.0, 0.9, 0.1]]).unwrap();
    let pi = DiscreteDistribution::new(vec![0, 1, 2], vec![3.0 / 7.0, 2.0 / 7.0, 2.0 / 7.0]).unwrap();
    (k, pi)
}

/// Metropolis kernel for `π = (0.5, 0.3, 0.2)` with a uniform proposal over
/// all three states.
pub fn metropolis() -> (DiscreteKernel, DiscreteDistribution) {
    let f: [f64; 3] = [0.5, 0.3, 0.2];
    let mut rows = vec![vec![0.0; 3]; 3];
    for x in 0..3 {
        for y in 0..3 {
            if x != y {
                rows[x][y] = (f[y] / f[x]).min(1.0) / 3.0;
            }
        }
        rows[x][x] = 1.0 - rows[x].iter().sum::<f64>();
    }
    let pi = DiscreteDistribution::new(vec![0, 1, 2], f.to_vec()).unwrap();
    (DiscreteKernel::new(rows).unwrap(), pi)
}

/// Dense non-reversible kernel; `π` from its left eigenvector.
pub fn dense() -> (DiscreteKernel, DiscreteDistribution) {
    let k = DiscreteKernel::new(vec![vec![0.2, 0.5, 0.3], vec![0.4, 0.1, 0.5], vec![0.3, 0.4, 0.3]]).unwrap();
    let pi = k.stationary().unwrap();
    (k, pi)
}

/// `K = [[0.9, 0.1], [0.2, 0.8]]`, `π = (2/3, 1/3)`.
pub fn two_state() -> (DiscreteKernel, DiscreteDistribution) {
    let k = DiscreteKernel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let pi = DiscreteDistribution::new(vec![0, 1], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
    (k, pi)
}

pub fn three_state_fixtures() -> Vec<(&'static str, DiscreteKernel, DiscreteDistribution)> {
    let (a, pa) = asymmetric();
    let (m, pm) = metropolis();
    let (d, pd) = dense();
    vec![("asymmetric", a, pa), ("metropolis", m, pm), ("dense", d, pd)]
}

pub fn chain(fixture: (DiscreteKernel, DiscreteDistribution)) -> FiniteChain {
    FiniteChain::new(fixture.0, fixture.1).unwrap()
}

/// Prints one verdict line and returns the verdict.
pub fn verdict(criterion: u32, name: &str, passed: bool, detail: &str) -> bool {
    let tag = if passed { "PASS" } else { "FAIL" };
    println!("{tag} criterion {criterion} ({name}): {detail}");
    passed
}
