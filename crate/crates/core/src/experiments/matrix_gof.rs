//! Conditional goodness of fit for binary matrices given their margins.

use rand::Rng;

use crate::chains::{checkerboard_swap_step, cooccurrence_sum_of_squares, BinaryMatrix, SwapChain};
use crate::error::Result;
use crate::kernel::KernelPair;
use crate::pvalue::{Alpha, McPValue, TestOutcome};
use crate::rng::Stream;
use crate::samplers::sample_permuted_serial;

use super::{validity_check, Artifact, Check, ExperimentConfig};

/// Entry density of the synthetic matrices.
pub const DENSITY: f64 = 0.4;
/// Column pairs `(0, 1), (2, 3), ..` that carry the planted association.
pub const PLANTED_PAIRS: usize = 6;
/// Copy probability of the planted pairs. Pilot: seed 7, 200 replications
/// per candidate on a 20 × 12 grid with `M = 99`, `L = 50`, warmup 1000;
/// smallest value on a 0.1 grid with power at least 0.7.
pub const DEFAULT_EFFECT: f64 = 0.7;
/// Required alternative rejection rate at the first level.
pub const MIN_POWER: f64 = 0.5;

/// Alternative generator: in each planted pair the second column copies the
/// first with probability `copy`, otherwise both are independent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantedPairs {
    pub pairs: usize,
    pub copy: f64,
}

impl PlantedPairs {
    pub fn generate<R: Rng + ?Sized>(&self, rows: usize, cols: usize, rng: &mut R) -> BinaryMatrix {
        let mut data = vec![0u8; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                data[r * cols + c] = u8::from(rng.random::<f64>() < DENSITY);
            }
            for k in 0..self.pairs.min(cols / 2) {
                if rng.random::<f64>() < self.copy {
                    data[r * cols + 2 * k + 1] = data[r * cols + 2 * k];
                }
            }
        }
        BinaryMatrix::new(rows, cols, data).expect("binary entries")
    }
}

/// Margins of an i.i.d. Bernoulli matrix, then `warmup` swap steps from the
/// canonical matrix with those margins.
pub fn null_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, warmup: usize, rng: &mut R) -> Result<BinaryMatrix> {
    let seed = PlantedPairs { pairs: 0, copy: 0.0 }.generate(rows, cols, rng);
    let mut m = BinaryMatrix::with_margins(seed.row_sums(), seed.col_sums())?;
    for _ in 0..warmup {
        checkerboard_swap_step(&mut m, rng);
    }
    Ok(m)
}

/// Permuted serial p-value of the co-occurrence sum of squares.
pub fn matrix_pvalue(observed: &BinaryMatrix, m: usize, step: usize, stream: &Stream) -> Result<McPValue> {
    let pair = KernelPair::new(SwapChain, step)?;
    let set = sample_permuted_serial(&pair, observed.clone(), m, stream);
    Ok(TestOutcome::evaluate(&set, cooccurrence_sum_of_squares)?.p_mc)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Batch {
    Null,
    Alternative,
}

impl Batch {
    pub fn name(self) -> &'static str {
        match self {
            Batch::Null => "null",
            Batch::Alternative => "alternative",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatrixRow {
    pub batch: Batch,
    pub rep: usize,
    pub p_mc: McPValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatrixGof {
    pub alphas: Vec<Alpha>,
    pub rows: Vec<MatrixRow>,
}

impl MatrixGof {
    pub fn rejections(&self, batch: Batch, alpha: Alpha) -> (usize, usize) {
        let in_batch = self.rows.iter().filter(|r| r.batch == batch);
        let total = in_batch.clone().count();
        (in_batch.filter(|r| r.p_mc.le(alpha)).count(), total)
    }
}

/// Null and planted-alternative batches of `reps` matrices each.
pub fn run_matrix_gof(config: &ExperimentConfig) -> Result<MatrixGof> {
    let (m, step) = (config.single_m(), config.single_step());
    let planted = PlantedPairs {
        pairs: PLANTED_PAIRS,
        copy: config.effect,
    };
    let master = Stream::new(config.seed);
    let results: Vec<Result<[MatrixRow; 2]>> = config.execution.map(config.reps, |rep| {
        let s = master.split(rep as u64);
        let null = null_matrix(config.rows, config.cols, config.warmup, &mut s.split(0).rng())?;
        let alt = planted.generate(config.rows, config.cols, &mut s.split(1).rng());
        Ok([
            MatrixRow {
                batch: Batch::Null,
                rep,
                p_mc: matrix_pvalue(&null, m, step, &s.split(2))?,
            },
            MatrixRow {
                batch: Batch::Alternative,
                rep,
                p_mc: matrix_pvalue(&alt, m, step, &s.split(3))?,
            },
        ])
    });
    let mut rows = Vec::with_capacity(2 * config.reps);
    for r in results {
        rows.extend(r?);
    }
    Ok(MatrixGof {
        alphas: config.alphas.clone(),
        rows,
    })
}

impl Artifact for MatrixGof {
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

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_matrix_gives_unit_p() {
        let full = BinaryMatrix::from_rows(&[vec![1, 1, 1], vec![1, 1, 1]]).unwrap();
        let p = matrix_pvalue(&full, 25, 10, &Stream::new(3)).unwrap();
        assert_eq!(p.value(), 1.0);
    }

    #[test]
    fn generators_keep_shape() {
        let mut rng = Stream::new(4).rng();
        let null = null_matrix(6, 5, 1000, &mut rng).unwrap();
        assert_eq!((null.rows(), null.cols()), (6, 5));
        assert!(null.margins_consistent());
        let copy_all = PlantedPairs { pairs: 2, copy: 1.0 }.generate(8, 5, &mut rng);
        for r in 0..8 {
            assert_eq!(copy_all.get(r, 0), copy_all.get(r, 1));
            assert_eq!(copy_all.get(r, 2), copy_all.get(r, 3));
        }
    }
}
