//! Power of the parallel method on the AR(1) chain against a mean shift.

use rand_distr::{Distribution, StandardNormal as Gaussian};

use crate::chains::Ar1Kernel;
use crate::error::Result;
use crate::kernel::KernelPair;
use crate::par::Execution;
use crate::pvalue::{analytic_power, power_parallel_limit, Alpha, TestOutcome};
use crate::rng::Stream;
use crate::samplers::sample_parallel_with;

use super::{binomial_se, Artifact, Check, ExperimentConfig};

/// Largest tolerated gap between simulated and limiting power.
pub const POWER_TOLERANCE: f64 = 0.02;
/// Largest tolerated gap to the analytic power at the end of the `ρ = 0.7`
/// curve.
pub const OPTIMAL_GAP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPoint {
    pub rho: f64,
    pub step: usize,
    pub theoretical: f64,
    pub rejections: usize,
    pub tests: usize,
}

impl PowerPoint {
    pub fn empirical(&self) -> f64 {
        self.rejections as f64 / self.tests as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerCurve {
    pub mu: f64,
    pub alpha: Alpha,
    pub m: usize,
    /// Power of the analytic test, the limit as `L → ∞`.
    pub optimal: f64,
    pub points: Vec<PowerPoint>,
}

/// `X_0 ~ N(μ, 1)`, `T(x) = x`, parallel method with `M` spokes; rejection
/// rate per `(ρ, L)` next to the `M → ∞` limit. The first level in the
/// config is used.
pub fn run_power_curve(config: &ExperimentConfig) -> Result<PowerCurve> {
    let alpha = config.alphas[0];
    let m = config.single_m();
    let master = Stream::new(config.seed);
    let mut points = Vec::new();
    for (i, &rho) in config.rho.iter().enumerate() {
        let kernel = Ar1Kernel::new(rho)?;
        for (j, &step) in config.step.iter().enumerate() {
            let pair = KernelPair::new(kernel, step)?;
            let grid = master.split(i as u64).split(j as u64);
            let rejected: Vec<Result<bool>> = config.execution.map(config.reps, |r| {
                let s = grid.split(r as u64);
                let z: f64 = Gaussian.sample(&mut s.split(0).rng());
                let set = sample_parallel_with(&pair, config.mu + z, m, &s.split(1), Execution::Sequential);
                Ok(TestOutcome::evaluate(&set, |x| *x)?.rejects(alpha))
            });
            let rejections = rejected.into_iter().collect::<Result<Vec<_>>>()?.into_iter().filter(|&b| b).count();
            points.push(PowerPoint {
                rho,
                step,
                theoretical: power_parallel_limit(config.mu, alpha.value(), rho, step),
                rejections,
                tests: config.reps,
            });
        }
    }
    Ok(PowerCurve {
        mu: config.mu,
        alpha,
        m,
        optimal: analytic_power(config.mu, alpha.value()),
        points,
    })
}

impl Artifact for PowerCurve {
    fn columns(&self) -> Vec<&'static str> {
        vec!["rho", "L", "theoretical", "empirical", "se", "tests", "optimal"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.points
            .iter()
            .map(|p| {
                vec![
                    p.rho.to_string(),
                    p.step.to_string(),
                    p.theoretical.to_string(),
                    p.empirical().to_string(),
                    binomial_se(p.theoretical, p.tests).to_string(),
                    p.tests.to_string(),
                    self.optimal.to_string(),
                ]
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        let mut checks: Vec<Check> = self
            .points
            .iter()
            .map(|p| {
                let gap = (p.empirical() - p.theoretical).abs();
                Check::new(
                    format!("power at rho {} L {}", p.rho, p.step),
                    gap <= POWER_TOLERANCE,
                    format!("empirical {:.4} vs limit {:.4}", p.empirical(), p.theoretical),
                )
            })
            .collect();
        let end = self.points.iter().filter(|p| p.rho == 0.7).max_by_key(|p| p.step);
        if let Some(last) = end.filter(|p| p.step >= 10) {
            let gap = (last.theoretical - self.optimal).abs();
            checks.push(Check::new(
                format!("rho 0.7 limit near optimal by L {}", last.step),
                gap <= OPTIMAL_GAP,
                format!("limit {:.6} vs optimal {:.6}", last.theoretical, self.optimal),
            ));
        }
        checks
    }
}
