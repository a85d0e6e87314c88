//! Seeded experiment drivers and their CSV output.
//!
//! Each driver returns a typed result that also implements [`Artifact`], the
//! table-plus-thresholds view used by the command line. Replication `r` always
//! draws from substream `r` of the master seed, so output does not depend on
//! scheduling.

mod bimodal;
mod cpt_demo;
mod matrix_gof;
mod power;

pub use bimodal::{
    run_bimodal_table, run_consistency, run_pinfty, run_sqrt_epsilon_demo, AtomGroup, BimodalTable, Cell, ConsistencyRow,
    ConsistencyStudy, PInfinityStudy, PinftyChain, SqrtEpsilonDemo, SqrtEpsilonRow, TableCell, CONSISTENCY_SHARE,
    CONSISTENCY_TOLERANCE,
};
pub use cpt_demo::{cpt_pvalue, residual_correlation, run_cpt_demo, CptData, CptDemo, CptRow};
pub use matrix_gof::{matrix_pvalue, null_matrix, run_matrix_gof, Batch, MatrixGof, MatrixRow, PlantedPairs};
pub use power::{run_power_curve, PowerCurve, PowerPoint, OPTIMAL_GAP, POWER_TOLERANCE};

use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::par::Execution;
use crate::pvalue::Alpha;

/// `git describe` output captured at build time, or the package version.
pub const VERSION: &str = match option_env!("MCMC_SIGTEST_DESCRIBE") {
    Some(v) => v,
    None => env!("CARGO_PKG_VERSION"),
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    BimodalTable,
    PowerCurve,
    Consistency,
    MatrixGof,
    CptDemo,
    SqrtEpsilon,
    PInfinity,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::BimodalTable => "bimodal-table",
            Experiment::PowerCurve => "power-curve",
            Experiment::Consistency => "consistency",
            Experiment::MatrixGof => "matrix-gof",
            Experiment::CptDemo => "cpt-demo",
            Experiment::SqrtEpsilon => "sqrt-eps",
            Experiment::PInfinity => "pinfty",
        }
    }
}

/// Settings shared by all drivers. Fields an experiment does not use are
/// ignored by it but still echoed in the CSV preamble.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub seed: u64,
    pub reps: usize,
    /// Draws per test. The consistency study uses the whole list.
    pub m: Vec<usize>,
    /// Kernel steps per draw. The power curve uses the whole list.
    pub step: Vec<usize>,
    pub alphas: Vec<Alpha>,
    pub rho: Vec<f64>,
    pub mu: f64,
    pub rows: usize,
    pub cols: usize,
    pub n: usize,
    /// Observed label for the conditional experiments.
    pub x0: i64,
    /// Alternative effect size for the matrix and CPT demos.
    pub effect: f64,
    /// Swap steps used to draw a null matrix.
    pub warmup: usize,
    /// Chain used by the limiting p-value study.
    pub chain: PinftyChain,
    pub execution: Execution,
}

fn alpha(s: &str) -> Alpha {
    s.parse().expect("literal level")
}

impl ExperimentConfig {
    /// Defaults for one experiment.
    pub fn new(experiment: Experiment) -> Self {
        let mut c = Self {
            experiment,
            seed: 20_240_601,
            reps: 2500,
            m: vec![99],
            step: vec![100],
            alphas: vec![alpha("0.05")],
            rho: vec![0.7, 0.9, 0.99],
            mu: 2.0,
            rows: 20,
            cols: 12,
            n: 50,
            x0: 90,
            effect: 0.0,
            warmup: 100_000,
            chain: PinftyChain::default(),
            execution: Execution::default(),
        };
        match experiment {
            Experiment::BimodalTable => {}
            Experiment::PowerCurve => {
                c.reps = 2000;
                c.m = vec![2000];
                c.step = (1..=10).collect();
            }
            Experiment::Consistency => {
                c.reps = 100;
                c.m = vec![100, 200, 500, 1000, 2000, 5000];
            }
            Experiment::MatrixGof => {
                c.reps = 500;
                c.step = vec![50];
                c.effect = matrix_gof::DEFAULT_EFFECT;
            }
            Experiment::CptDemo => {
                c.reps = 500;
                c.step = vec![200];
                c.effect = cpt_demo::DEFAULT_NOISE_SD;
            }
            Experiment::SqrtEpsilon => {
                c.reps = 10_000;
                c.m = vec![999];
                c.step = vec![10];
                c.alphas = vec![alpha("0.01"), alpha("0.05"), alpha("0.1")];
            }
            Experiment::PInfinity => {
                c.reps = 10_000;
                c.m = vec![10_000];
                c.step = vec![1];
                c.x0 = 1;
            }
        }
        c
    }

    /// Rejects settings no driver can run with.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Argument(msg));
        if self.reps == 0 {
            return bad("replication count must be at least 1".into());
        }
        if self.m.is_empty() || self.step.is_empty() || self.alphas.is_empty() {
            return bad("M, L and alpha lists must be non-empty".into());
        }
        if self.step.contains(&0) {
            return bad("L must be at least 1".into());
        }
        if let Some(a) = self.alphas.iter().find(|a| !a.is_proper()) {
            return bad(format!("alpha {a} outside (0, 1)"));
        }
        if let Some(r) = self.rho.iter().find(|r| !(r.abs() < 1.0)) {
            return bad(format!("rho {r} outside (-1, 1)"));
        }
        if !self.mu.is_finite() || !self.effect.is_finite() {
            return bad("mu and effect must be finite".into());
        }
        if self.rows < 2 || self.cols < 2 {
            return bad("matrix needs at least 2 rows and 2 columns".into());
        }
        if !(3..=200).contains(&self.n) {
            return bad(format!("n = {} outside 3..=200", self.n));
        }
        let single = |name: &str, v: &[usize]| {
            if v.len() == 1 {
                Ok(())
            } else {
                bad(format!("{} takes a single {name}", self.experiment.name()))
            }
        };
        match self.experiment {
            Experiment::PowerCurve => single("M", &self.m),
            Experiment::Consistency => single("L", &self.step),
            _ => single("M", &self.m).and_then(|_| single("L", &self.step)),
        }
    }

    pub(crate) fn single_m(&self) -> usize {
        self.m[0]
    }

    pub(crate) fn single_step(&self) -> usize {
        self.step[0]
    }

    /// One-line `key=value` echo of the settings.
    pub fn echo(&self) -> String {
        let list = |v: &[usize]| v.iter().map(usize::to_string).collect::<Vec<_>>().join(";");
        let alphas = self.alphas.iter().map(Alpha::to_string).collect::<Vec<_>>().join(";");
        let rho = self.rho.iter().map(f64::to_string).collect::<Vec<_>>().join(";");
        format!(
            "experiment={} seed={} reps={} M={} L={} alpha={} rho={} mu={} rows={} cols={} n={} x0={} effect={} warmup={} chain={}",
            self.experiment.name(),
            self.seed,
            self.reps,
            list(&self.m),
            list(&self.step),
            alphas,
            rho,
            self.mu,
            self.rows,
            self.cols,
            self.n,
            self.x0,
            self.effect,
            self.warmup,
            self.chain.name(),
        )
    }
}

/// A named threshold and whether the run met it.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{verdict} {}: {}", self.name, self.detail)
    }
}

/// Tabular output plus the thresholds checked by `--check`.
pub trait Artifact {
    fn columns(&self) -> Vec<&'static str>;
    fn rows(&self) -> Vec<Vec<String>>;
    fn checks(&self) -> Vec<Check>;
}

/// Writes a `#` preamble line with the version and config echo, then the
/// header and rows as RFC 4180 CSV with LF line endings.
pub fn write_csv<W: Write>(artifact: &dyn Artifact, config: &ExperimentConfig, mut out: W) -> Result<()> {
    writeln!(out, "# mcmc-sigtest {VERSION} {}", config.echo())?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(artifact.columns())?;
    for row in artifact.rows() {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Runs the configured experiment.
pub fn run(config: &ExperimentConfig) -> Result<Box<dyn Artifact>> {
    config.validate()?;
    Ok(match config.experiment {
        Experiment::BimodalTable => Box::new(run_bimodal_table(config)?),
        Experiment::PowerCurve => Box::new(run_power_curve(config)?),
        Experiment::Consistency => Box::new(run_consistency(config)?),
        Experiment::MatrixGof => Box::new(run_matrix_gof(config)?),
        Experiment::CptDemo => Box::new(run_cpt_demo(config)?),
        Experiment::SqrtEpsilon => Box::new(run_sqrt_epsilon_demo(config)?),
        Experiment::PInfinity => Box::new(run_pinfty(config)?),
    })
}

/// Binomial standard error of a rate.
pub fn binomial_se(rate: f64, trials: usize) -> f64 {
    (rate * (1.0 - rate) / trials as f64).sqrt()
}

/// `rate ≤ α + 3·SE`, with the SE taken at the nominal level.
pub(crate) fn validity_check(name: String, rejections: usize, trials: usize, alpha: Alpha) -> Check {
    let rate = rejections as f64 / trials as f64;
    let bound = alpha.value() + 3.0 * binomial_se(alpha.value(), trials);
    Check::new(name, rate <= bound, format!("rate {rate:.4} vs bound {bound:.4}"))
}
