//! Conditional permutation test with a Gaussian `X | Z` model.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::chains::{CptChain, PermutationState};
use crate::error::Result;
use crate::kernel::KernelPair;
use crate::par::Execution;
use crate::pvalue::{Alpha, McPValue, TestOutcome};
use crate::rng::Stream;
use crate::samplers::sample_parallel_with;

use super::matrix_gof::Batch;
use super::{validity_check, Artifact, Check, ExperimentConfig};

/// `X | Z ~ N(θ Z, 1)`.
pub const THETA: f64 = 1.0;
/// Noise sd of the alternative `Y = X + noise`. Pilot: seed 7, 200
/// alternative replications at `n = 50`, `M = 99`, `L = 200`; the largest
/// value on a 0.25 grid with power at least 0.95.
pub const DEFAULT_NOISE_SD: f64 = 1.75;
/// Required alternative rejection rate at the first level.
pub const MIN_POWER: f64 = 0.9;

/// One synthetic data set.
#[derive(Debug, Clone, PartialEq)]
pub struct CptData {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub z: Vec<f64>,
}

impl CptData {
    /// `Z ~ N(0, 1)`, `X = θZ + ε`; under the null `Y = Z + η`, otherwise
    /// `Y = X + noise_sd · η`.
    pub fn generate<R: Rng + ?Sized>(n: usize, batch: Batch, noise_sd: f64, rng: &mut R) -> Self {
        let mut draw = || -> f64 { StandardNormal.sample(rng) };
        let z: Vec<f64> = (0..n).map(|_| draw()).collect();
        let x: Vec<f64> = z.iter().map(|&zi| THETA * zi + draw()).collect();
        let y = match batch {
            Batch::Null => z.iter().map(|&zi| zi + draw()).collect(),
            Batch::Alternative => x.iter().map(|&xi| xi + noise_sd * draw()).collect(),
        };
        Self { x, y, z }
    }

    /// `log Q(X_i | Z_j)` up to a constant.
    pub fn chain(&self) -> Result<CptChain> {
        let n = self.x.len();
        let mut q = Vec::with_capacity(n * n);
        for &xi in &self.x {
            for &zj in &self.z {
                let r = xi - THETA * zj;
                q.push(-0.5 * r * r);
            }
        }
        CptChain::new(n, q)
    }

    /// Residuals of `Y` after least squares on `(1, Z)`.
    pub fn y_residuals(&self) -> Vec<f64> {
        let (mz, my) = (mean(&self.z), mean(&self.y));
        let szz: f64 = self.z.iter().map(|z| (z - mz) * (z - mz)).sum();
        let szy: f64 = self.z.iter().zip(&self.y).map(|(z, y)| (z - mz) * (y - my)).sum();
        let slope = if szz > 0.0 { szy / szz } else { 0.0 };
        self.z.iter().zip(&self.y).map(|(z, y)| y - my - slope * (z - mz)).collect()
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// `|corr(X_σ - θZ, r_Y)|`.
pub fn residual_correlation(data: &CptData, y_resid: &[f64], perm: &[usize]) -> f64 {
    let u: Vec<f64> = perm.iter().zip(&data.z).map(|(&i, z)| data.x[i] - THETA * z).collect();
    let (mu, mv) = (mean(&u), mean(y_resid));
    let (mut suv, mut suu, mut svv) = (0.0, 0.0, 0.0);
    for (a, b) in u.iter().zip(y_resid) {
        suv += (a - mu) * (b - mv);
        suu += (a - mu) * (a - mu);
        svv += (b - mv) * (b - mv);
    }
    if suu == 0.0 || svv == 0.0 {
        return 0.0;
    }
    (suv / (suu * svv).sqrt()).abs()
}

/// Parallel-method CPT p-value from the identity permutation.
pub fn cpt_pvalue(data: &CptData, m: usize, step: usize, stream: &Stream) -> Result<McPValue> {
    let chain = data.chain()?;
    let start = chain.identity_state();
    let pair = KernelPair::new(chain, step)?;
    let resid = data.y_residuals();
    let set = sample_parallel_with(&pair, start, m, stream, Execution::Sequential);
    let stat = |s: &PermutationState| residual_correlation(data, &resid, s.perm());
    Ok(TestOutcome::evaluate(&set, stat)?.p_mc)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CptRow {
    pub batch: Batch,
    pub rep: usize,
    pub p_mc: McPValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CptDemo {
    pub alphas: Vec<Alpha>,
    pub rows: Vec<CptRow>,
}

impl CptDemo {
    pub fn rejections(&self, batch: Batch, alpha: Alpha) -> (usize, usize) {
        let in_batch = self.rows.iter().filter(|r| r.batch == batch);
        let total = in_batch.clone().count();
        (in_batch.filter(|r| r.p_mc.le(alpha)).count(), total)
    }
}

/// Null and alternative batches of `reps` data sets of size `n`.
pub fn run_cpt_demo(config: &ExperimentConfig) -> Result<CptDemo> {
    let (m, step) = (config.single_m(), config.single_step());
    let master = Stream::new(config.seed);
    let results: Vec<Result<[CptRow; 2]>> = config.execution.map(config.reps, |rep| {
        let s = master.split(rep as u64);
        let row = |batch: Batch, k: u64| -> Result<CptRow> {
            let data = CptData::generate(config.n, batch, config.effect, &mut s.split(k).rng());
            Ok(CptRow {
                batch,
                rep,
                p_mc: cpt_pvalue(&data, m, step, &s.split(k + 1))?,
            })
        };
        Ok([row(Batch::Null, 0)?, row(Batch::Alternative, 2)?])
    });
    let mut rows = Vec::with_capacity(2 * config.reps);
    for r in results {
        rows.extend(r?);
    }
    Ok(CptDemo {
        alphas: config.alphas.clone(),
        rows,
    })
}

impl Artifact for CptDemo {
    fn columns(&self) -> Vec<&'static str> {
        vec!["batch", "rep", "exceedances", "M", "p_mc"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.batch.name().to_string(),
                    r.rep.to_string(),
                    r.p_mc.exceedances().to_string(),
                    r.p_mc.draws().to_string(),
                    r.p_mc.value().to_string(),
                ]
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        let mut checks: Vec<Check> = self
            .alphas
            .iter()
            .map(|&a| {
                let (k, n) = self.rejections(Batch::Null, a);
                validity_check(format!("null validity at alpha {a}"), k, n, a)
            })
            .collect();
        if let Some(&a) = self.alphas.first() {
            let (k, n) = self.rejections(Batch::Alternative, a);
            let rate = k as f64 / n as f64;
            checks.push(Check::new(
                format!("alternative power at alpha {a}"),
                rate >= MIN_POWER,
                format!("rate {rate:.4} vs {MIN_POWER}"),
            ));
        }
        checks
    }
}
