//! Experiments on the bimodal `±1` chain and the two-state fixture.

use crate::chains::bimodal_chain;
use crate::error::{Error, Result};
use crate::kernel::{DirectSampler, DiscreteDistribution, DiscreteKernel, FiniteChain, KernelPair};
use crate::par::Execution;
use crate::pvalue::{p_analytic, p_infinity_discrete, sqrt_epsilon_pvalue, Alpha, Atom, McPValue, TestOutcome};
use crate::rng::Stream;
use crate::samplers::{sample_iid, sample_parallel_with, sample_permuted_serial, sample_sequential, Method};

use super::{binomial_se, validity_check, Artifact, Check, ExperimentConfig};

/// Larger labels are more extreme.
fn index_statistic(x: &usize) -> f64 {
    *x as f64
}

const TABLE_METHODS: [Method; 3] = [Method::Iid, Method::Parallel, Method::PermutedSerial];
const TABLE_SPLIT_LABEL: i64 = 50;
/// Published cells (percent) for `M = 99`, `L = 100`, `α = 0.05`:
/// `(method, x0 ≤ 50, x0 > 50)`.
const PUBLISHED_TABLE: [(Method, f64, f64); 3] = [
    (Method::Iid, 0.0, 4.4),
    (Method::Parallel, 2.4, 2.2),
    (Method::PermutedSerial, 2.6, 2.0),
];
const PUBLISHED_TOLERANCE_PP: f64 = 1.5;

fn table_label(method: Method) -> &'static str {
    match method {
        Method::Iid => "standard",
        other => other.name(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    /// `X_0 ≤ 50`.
    Low,
    /// `X_0 > 50`.
    High,
    Overall,
}

impl Cell {
    pub fn name(self) -> &'static str {
        match self {
            Cell::Low => "x0<=50",
            Cell::High => "x0>50",
            Cell::Overall => "overall",
        }
    }
}

/// Rejections in one cell, as a share of all replications.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableCell {
    pub method: Method,
    pub alpha: Alpha,
    pub cell: Cell,
    pub rejections: usize,
    pub total: usize,
}

impl TableCell {
    pub fn percent(&self) -> f64 {
        100.0 * self.rejections as f64 / self.total as f64
    }

    pub fn se_pp(&self) -> f64 {
        100.0 * binomial_se(self.rejections as f64 / self.total as f64, self.total)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BimodalTable {
    pub m: usize,
    pub step: usize,
    pub cells: Vec<TableCell>,
}

impl BimodalTable {
    pub fn cell(&self, method: Method, alpha: Alpha, cell: Cell) -> Option<&TableCell> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.alpha == alpha && c.cell == cell)
    }
}

/// `X_0 ~ π` on the bimodal target, then one p-value per sampler; rejections
/// are tabulated by which half `X_0` fell in.
pub fn run_bimodal_table(config: &ExperimentConfig) -> Result<BimodalTable> {
    let chain = bimodal_chain();
    let target = chain.target().clone();
    let (m, step) = (config.single_m(), config.single_step());
    let pair = KernelPair::new(chain, step)?;
    let master = Stream::new(config.seed);

    let runs: Vec<Result<(i64, Vec<McPValue>)>> = config.execution.map(config.reps, |r| {
        let s = master.split(r as u64);
        let x0 = target.sample(&mut s.split(0).rng());
        let sets = [
            sample_iid(&target, x0, m, &s.split(1)),
            sample_parallel_with(&pair, x0, m, &s.split(2), Execution::Sequential),
            sample_permuted_serial(&pair, x0, m, &s.split(3)),
        ];
        let ps = sets
            .iter()
            .map(|set| TestOutcome::evaluate(set, index_statistic).map(|o| o.p_mc))
            .collect::<Result<Vec<_>>>()?;
        Ok((target.label(x0), ps))
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::new();
    for &alpha in &config.alphas {
        for (k, &method) in TABLE_METHODS.iter().enumerate() {
            let count = |keep: &dyn Fn(i64) -> bool| {
                runs.iter().filter(|(label, ps)| keep(*label) && ps[k].le(alpha)).count()
            };
            for (cell, rejections) in [
                (Cell::Low, count(&|l| l <= TABLE_SPLIT_LABEL)),
                (Cell::High, count(&|l| l > TABLE_SPLIT_LABEL)),
                (Cell::Overall, count(&|_| true)),
            ] {
                cells.push(TableCell {
                    method,
                    alpha,
                    cell,
                    rejections,
                    total: runs.len(),
                });
            }
        }
    }
    Ok(BimodalTable { m, step, cells })
}

impl Artifact for BimodalTable {
    fn columns(&self) -> Vec<&'static str> {
        vec!["method", "alpha", "cell", "rejections", "reps", "percent", "se_pp"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.cells
            .iter()
            .map(|c| {
                vec![
                    table_label(c.method).to_string(),
                    c.alpha.to_string(),
                    c.cell.name().to_string(),
                    c.rejections.to_string(),
                    c.total.to_string(),
                    format!("{:.2}", c.percent()),
                    format!("{:.2}", c.se_pp()),
                ]
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        let mut checks = Vec::new();
        for c in self.cells.iter().filter(|c| c.cell == Cell::Overall && c.method.is_exchangeable()) {
            checks.push(validity_check(
                format!("{} validity at alpha {}", table_label(c.method), c.alpha),
                c.rejections,
                c.total,
                c.alpha,
            ));
        }
        let published: Alpha = "0.05".parse().expect("literal level");
        if self.m != 99 || self.step != 100 {
            return checks;
        }
        for (method, low, high) in PUBLISHED_TABLE {
            let (Some(l), Some(h), Some(o)) = (
                self.cell(method, published, Cell::Low),
                self.cell(method, published, Cell::High),
                self.cell(method, published, Cell::Overall),
            ) else {
                continue;
            };
            let name = table_label(method);
            if method == Method::Iid {
                checks.push(Check::new(
                    format!("{name} x0<=50 cell is zero"),
                    l.rejections == 0,
                    format!("{} rejections", l.rejections),
                ));
                let target = low + high;
                checks.push(Check::new(
                    format!("{name} overall near published"),
                    (o.percent() - target).abs() <= PUBLISHED_TOLERANCE_PP,
                    format!("{:.2}% vs {target}%", o.percent()),
                ));
            } else {
                for (cell, want) in [(l, low), (h, high)] {
                    checks.push(Check::new(
                        format!("{name} {} near published", cell.cell.name()),
                        (cell.percent() - want).abs() <= PUBLISHED_TOLERANCE_PP,
                        format!("{:.2}% vs {want}%", cell.percent()),
                    ));
                }
            }
            checks.push(Check::new(
                format!("{name} overall at most 5% + 1.5 pp"),
                o.percent() <= 5.0 + PUBLISHED_TOLERANCE_PP,
                format!("{:.2}%", o.percent()),
            ));
        }
        checks
    }
}

/// Largest tolerated `|p_MC - p_A|` at the largest `M`.
pub const CONSISTENCY_TOLERANCE: f64 = 0.02;
/// Required share of replications meeting each consistency threshold.
pub const CONSISTENCY_SHARE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyRow {
    pub method: Method,
    pub m: usize,
    pub rep: usize,
    pub p_mc: f64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConsistencyStudy {
    pub x0_label: i64,
    pub step: usize,
    pub p_analytic: f64,
    /// Limiting law of the parallel p-value at this `x0` and `L`.
    pub atoms: Vec<Atom>,
    pub rows: Vec<ConsistencyRow>,
}

impl ConsistencyStudy {
    /// Errors for one method and `M`, indexed by replication.
    pub fn errors(&self, method: Method, m: usize) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|r| r.method == method && r.m == m)
            .map(|r| r.abs_error)
            .collect()
    }

    /// `E|p_∞ - p_A|` for the parallel method.
    pub fn parallel_limit_error(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.probability * (a.value - self.p_analytic).abs())
            .sum()
    }

    fn m_range(&self) -> Option<(usize, usize)> {
        let ms = self.rows.iter().map(|r| r.m);
        Some((ms.clone().min()?, ms.max()?))
    }
}

fn bimodal_state(target: &DiscreteDistribution, label: i64) -> Result<usize> {
    target
        .index_of(label)
        .ok_or_else(|| Error::Argument(format!("x0 = {label} is not a bimodal state")))
}

/// Fixed `X_0`; permuted serial and parallel p-values over a list of `M`,
/// compared with the exact tail probability.
pub fn run_consistency(config: &ExperimentConfig) -> Result<ConsistencyStudy> {
    let chain = bimodal_chain();
    let target = chain.target().clone();
    let x0 = bimodal_state(&target, config.x0)?;
    let step = config.single_step();
    let pair = KernelPair::new(chain, step)?;
    let p_a = p_analytic(&target, |x| x as f64, x0 as f64)?;
    let atoms = p_infinity_discrete(&pair, |x| x as f64, x0)?;
    let master = Stream::new(config.seed);
    let ms = &config.m;

    let per_rep: Vec<Result<Vec<ConsistencyRow>>> = config.execution.map(config.reps, |rep| {
        let s = master.split(rep as u64);
        let mut rows = Vec::with_capacity(2 * ms.len());
        for (k, &m) in ms.iter().enumerate() {
            let serial = sample_permuted_serial(&pair, x0, m, &s.split(2 * k as u64));
            let parallel = sample_parallel_with(&pair, x0, m, &s.split(2 * k as u64 + 1), Execution::Sequential);
            for set in [serial, parallel] {
                let p = TestOutcome::evaluate(&set, index_statistic)?.p_mc.value();
                rows.push(ConsistencyRow {
                    method: set.method,
                    m,
                    rep,
                    p_mc: p,
                    abs_error: (p - p_a).abs(),
                });
            }
        }
        Ok(rows)
    });
    let mut rows = Vec::new();
    for r in per_rep {
        rows.extend(r?);
    }
    Ok(ConsistencyStudy {
        x0_label: config.x0,
        step,
        p_analytic: p_a,
        atoms,
        rows,
    })
}

impl Artifact for ConsistencyStudy {
    fn columns(&self) -> Vec<&'static str> {
        vec!["method", "M", "rep", "p_mc", "p_analytic", "abs_error"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                vec![
                    r.method.name().to_string(),
                    r.m.to_string(),
                    r.rep.to_string(),
                    r.p_mc.to_string(),
                    self.p_analytic.to_string(),
                    r.abs_error.to_string(),
                ]
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        let Some((lo, hi)) = self.m_range() else {
            return Vec::new();
        };
        let large = self.errors(Method::PermutedSerial, hi);
        let small = self.errors(Method::PermutedSerial, lo);
        let close = large.iter().filter(|&&e| e <= CONSISTENCY_TOLERANCE).count();
        let mut checks = vec![Check::new(
            format!("permuted-serial |p_mc - p_A| <= {CONSISTENCY_TOLERANCE} at M={hi}"),
            close as f64 >= CONSISTENCY_SHARE * large.len() as f64,
            format!("{close} of {}", large.len()),
        )];
        if lo < hi {
            let improved = large.iter().zip(&small).filter(|(l, s)| l < s).count();
            checks.push(Check::new(
                format!("permuted-serial error at M={hi} below M={lo}"),
                improved as f64 >= CONSISTENCY_SHARE * large.len() as f64,
                format!("{improved} of {} paired repeats", large.len()),
            ));
        }
        checks
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtEpsilonRow {
    pub alpha: Alpha,
    pub raw_rejections: usize,
    pub corrected_rejections: usize,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SqrtEpsilonDemo {
    pub rows: Vec<SqrtEpsilonRow>,
    /// Replications where `sqrt(2 p_MC) ≥ p_MC`.
    pub corrected_dominates: usize,
    pub reps: usize,
}

/// One sequential run per replication from `X_0 ~ π`; raw and
/// `sqrt(2 p_MC)`-corrected rejection rates.
pub fn run_sqrt_epsilon_demo(config: &ExperimentConfig) -> Result<SqrtEpsilonDemo> {
    let chain = bimodal_chain();
    let target = chain.target().clone();
    let pair = KernelPair::new(chain, config.single_step())?;
    let m = config.single_m();
    let master = Stream::new(config.seed);

    let runs: Vec<Result<(f64, f64)>> = config.execution.map(config.reps, |r| {
        let s = master.split(r as u64);
        let x0 = target.sample(&mut s.split(0).rng());
        let set = sample_sequential(&pair, x0, m, &s.split(1));
        let outcome = TestOutcome::evaluate(&set, index_statistic)?;
        let corrected = sqrt_epsilon_pvalue(&set, &outcome)?;
        Ok((outcome.p_mc.value(), corrected))
    });
    let runs = runs.into_iter().collect::<Result<Vec<_>>>()?;
    let rows = config
        .alphas
        .iter()
        .map(|&alpha| SqrtEpsilonRow {
            alpha,
            raw_rejections: runs.iter().filter(|(p, _)| *p <= alpha.value()).count(),
            corrected_rejections: runs.iter().filter(|(_, q)| *q <= alpha.value()).count(),
            reps: runs.len(),
        })
        .collect();
    Ok(SqrtEpsilonDemo {
        rows,
        corrected_dominates: runs.iter().filter(|(p, q)| q >= p).count(),
        reps: runs.len(),
    })
}

impl Artifact for SqrtEpsilonDemo {
    fn columns(&self) -> Vec<&'static str> {
        vec!["alpha", "reps", "raw_rate", "corrected_rate", "se_at_alpha", "corrected_ge_raw"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        self.rows
            .iter()
            .map(|r| {
                let rate = |k: usize| (k as f64 / r.reps as f64).to_string();
                vec![
                    r.alpha.to_string(),
                    r.reps.to_string(),
                    rate(r.raw_rejections),
                    rate(r.corrected_rejections),
                    binomial_se(r.alpha.value(), r.reps).to_string(),
                    self.corrected_dominates.to_string(),
                ]
            })
            .collect()
    }

    fn checks(&self) -> Vec<Check> {
        let mut checks: Vec<Check> = self
            .rows
            .iter()
            .map(|r| {
                validity_check(
                    format!("corrected validity at alpha {}", r.alpha),
                    r.corrected_rejections,
                    r.reps,
                    r.alpha,
                )
            })
            .collect();
        checks.push(Check::new(
            "corrected p at least raw p",
            self.corrected_dominates == self.reps,
            format!("{} of {}", self.corrected_dominates, self.reps),
        ));
        checks
    }
}

/// Finite chains with an exactly computable limiting parallel p-value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PinftyChain {
    /// `K = [[0.9, 0.1], [0.2, 0.8]]`, `π = (2/3, 1/3)`, labels 0 and 1.
    #[default]
    TwoState,
    Bimodal,
}

impl PinftyChain {
    pub fn name(self) -> &'static str {
        match self {
            PinftyChain::TwoState => "two-state",
            PinftyChain::Bimodal => "bimodal",
        }
    }

    pub fn build(self) -> FiniteChain {
        match self {
            PinftyChain::TwoState => {
                let k = DiscreteKernel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).expect("stochastic rows");
                let target = DiscreteDistribution::new(vec![0, 1], vec![2.0 / 3.0, 1.0 / 3.0]).expect("valid pmf");
                FiniteChain::new(k, target).expect("stationary fixture")
            }
            PinftyChain::Bimodal => bimodal_chain(),
        }
    }
}

/// Atoms sharing one value of `p_∞`, with the simulated share of p-values
/// nearest to it.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomGroup {
    pub value: f64,
    pub probability: f64,
    pub simulated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PInfinityStudy {
    pub chain: PinftyChain,
    pub x0_label: i64,
    pub m: usize,
    pub step: usize,
    pub atoms: Vec<Atom>,
    pub hub_labels: Vec<i64>,
    pub groups: Vec<AtomGroup>,
    pub reps: usize,
}

impl PInfinityStudy {
    /// `(count - n p) / sqrt(n p (1 - p))` per group.
    pub fn z_scores(&self) -> Vec<f64> {
        let n = self.reps as f64;
        self.groups
            .iter()
            .map(|g| {
                let sd = (n * g.probability * (1.0 - g.probability)).sqrt();
                let diff = g.simulated as f64 - n * g.probability;
                if sd == 0.0 {
                    if diff == 0.0 {
                        0.0
                    } else {
                        f64::INFINITY
                    }
                } else {
                    diff / sd
                }
            })
            .collect()
    }
}

/// Exact atoms of `p_∞` at a fixed `X_0`, and a parallel-method simulation
/// whose p-values are assigned to the nearest atom value.
pub fn run_pinfty(config: &ExperimentConfig) -> Result<PInfinityStudy> {
    let which = config.chain;
    let chain = which.build();
    let target = chain.target().clone();
    let x0 = target
        .index_of(config.x0)
        .ok_or_else(|| Error::Argument(format!("x0 = {} is not a {} state", config.x0, which.name())))?;
    let (m, step) = (config.single_m(), config.single_step());
    let pair = KernelPair::new(chain, step)?;
    let atoms = p_infinity_discrete(&pair, |x| x as f64, x0)?;

    let mut sorted = atoms.clone();
    sorted.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut groups: Vec<AtomGroup> = Vec::new();
    for a in sorted {
        match groups.last_mut() {
            Some(g) if (a.value - g.value).abs() <= 1e-12 => g.probability += a.probability,
            _ => groups.push(AtomGroup {
                value: a.value,
                probability: a.probability,
                simulated: 0,
            }),
        }
    }

    let master = Stream::new(config.seed);
    let ps: Vec<Result<f64>> = config.execution.map(config.reps, |r| {
        let set = sample_parallel_with(&pair, x0, m, &master.split(r as u64), Execution::Sequential);
        Ok(TestOutcome::evaluate(&set, index_statistic)?.p_mc.value())
    });
    for p in ps {
        let p = p?;
        let nearest = groups
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| (a.value - p).abs().total_cmp(&(b.value - p).abs()))
            .map(|(i, _)| i)
            .expect("at least one atom");
        groups[nearest].simulated += 1;
    }
    let hub_labels = atoms.iter().map(|a| target.label(a.hub)).collect();
    Ok(PInfinityStudy {
        chain: which,
        x0_label: config.x0,
        m,
        step,
        atoms,
        hub_labels,
        groups,
        reps: config.reps,
    })
}

impl Artifact for PInfinityStudy {
    fn columns(&self) -> Vec<&'static str> {
        vec!["kind", "hub", "value", "probability", "simulated", "simulated_share", "z"]
    }

    fn rows(&self) -> Vec<Vec<String>> {
        let mut rows: Vec<Vec<String>> = self
            .atoms
            .iter()
            .zip(&self.hub_labels)
            .map(|(a, hub)| {
                vec![
                    "atom".into(),
                    hub.to_string(),
                    a.value.to_string(),
                    a.probability.to_string(),
                    String::new(),
                    String::new(),
                    String::new(),
                ]
            })
            .collect();
        for (g, z) in self.groups.iter().zip(self.z_scores()) {
            rows.push(vec![
                "group".into(),
                String::new(),
                g.value.to_string(),
                g.probability.to_string(),
                g.simulated.to_string(),
                (g.simulated as f64 / self.reps as f64).to_string(),
                format!("{z:.3}"),
            ]);
        }
        rows
    }

    fn checks(&self) -> Vec<Check> {
        self.groups
            .iter()
            .zip(self.z_scores())
            .map(|(g, z)| {
                Check::new(
                    format!("share near p_inf atom {:.6}", g.value),
                    z.abs() <= 4.0,
                    format!("z = {z:.3}"),
                )
            })
            .collect()
    }
}
