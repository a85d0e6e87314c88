//! Equal mixture of two discretized normals on `{1, .., 100}` and the `±1`
//! Metropolis–Hastings kernel that targets it.

use crate::error::{Error, Result};
use crate::kernel::{DiscreteDistribution, DiscreteKernel, FiniteChain};

/// Component means.
pub const BIMODAL_MODES: [f64; 2] = [25.0, 75.0];
const COMPONENT_SD: f64 = 6.0;

fn normal_density(x: f64, mean: f64, sd: f64) -> f64 {
    let z = (x - mean) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

/// `π(x) ∝ φ(x; 25, 6²)/2 + φ(x; 75, 6²)/2` on `{1, .., 100}`; state `i`
/// has label `i + 1`.
pub fn bimodal_target() -> DiscreteDistribution {
    let labels: Vec<i64> = (1..=100).collect();
    let weights: Vec<f64> = labels
        .iter()
        .map(|&x| {
            BIMODAL_MODES
                .iter()
                .map(|&m| 0.5 * normal_density(x as f64, m, COMPONENT_SD))
                .sum()
        })
        .collect();
    DiscreteDistribution::from_weights(labels, &weights).expect("positive weights")
}

/// Metropolis–Hastings with proposal `x ± 1` (probability 1/2 each) and
/// acceptance `min(1, π(x')/π(x))`. Proposals that leave the state space are
/// rejected, so the end states hold with the remaining probability.
pub fn mh_pm1_kernel(target: &DiscreteDistribution) -> Result<DiscreteKernel> {
    let n = target.len();
    if let Some(state) = target.masses().iter().position(|&m| m <= 0.0) {
        return Err(Error::InvalidKernel(format!("state {state} has zero mass")));
    }
    let accept = |from: usize, to: usize| (target.mass(to) / target.mass(from)).min(1.0);
    let mut rows = vec![vec![0.0; n]; n];
    for (x, row) in rows.iter_mut().enumerate() {
        let up = if x + 1 < n { 0.5 * accept(x, x + 1) } else { 0.0 };
        let down = if x > 0 { 0.5 * accept(x, x - 1) } else { 0.0 };
        if x + 1 < n {
            row[x + 1] = up;
        }
        if x > 0 {
            row[x - 1] = down;
        }
        row[x] = 1.0 - up - down;
    }
    DiscreteKernel::new(rows)
}

/// The `±1` chain on the bimodal target.
pub fn bimodal_chain() -> FiniteChain {
    let target = bimodal_target();
    let kernel = mh_pm1_kernel(&target).expect("bimodal target has full support");
    FiniteChain::new(kernel, target).expect("Metropolis-Hastings kernel is stationary")
}
