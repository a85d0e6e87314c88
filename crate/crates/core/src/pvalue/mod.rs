//! Monte Carlo and analytic p-values.
//!
//! [`McPValue`] keeps `p_MC = (#{i : T̃_i ≥ T_0} + 1) / (M + 1)` as an exact
//! integer ratio; comparisons against a level [`Alpha`] are done in integer
//! arithmetic so `p ≤ 0.05` never depends on rounding.

pub mod normal;

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kernel::{DiscreteDistribution, Kernel, KernelPair};
use crate::samplers::{Method, SampleSet};

/// Exact Monte Carlo p-value `(exceedances + 1) / (draws + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct McPValue {
    exceedances: u64,
    draws: u64,
}

impl McPValue {
    pub fn new(exceedances: u64, draws: u64) -> Result<Self> {
        if exceedances > draws {
            return Err(Error::Argument(format!("{exceedances} exceedances among {draws} draws")));
        }
        Ok(Self { exceedances, draws })
    }

    pub fn exceedances(&self) -> u64 {
        self.exceedances
    }

    pub fn draws(&self) -> u64 {
        self.draws
    }

    pub fn numerator(&self) -> u64 {
        self.exceedances + 1
    }

    pub fn denominator(&self) -> u64 {
        self.draws + 1
    }

    /// Reduced ratio.
    pub fn ratio(&self) -> Ratio<u64> {
        Ratio::new(self.numerator(), self.denominator())
    }

    pub fn value(&self) -> f64 {
        self.numerator() as f64 / self.denominator() as f64
    }

    /// `p ≤ α`, exactly.
    pub fn le(&self, alpha: Alpha) -> bool {
        let a = alpha.ratio();
        (self.numerator() as u128) * (*a.denom() as u128) <= (*a.numer() as u128) * (self.denominator() as u128)
    }
}

impl PartialOrd for McPValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for McPValue {
    fn cmp(&self, other: &Self) -> Ordering {
        let l = self.numerator() as u128 * other.denominator() as u128;
        let r = other.numerator() as u128 * self.denominator() as u128;
        l.cmp(&r)
    }
}

impl fmt::Display for McPValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.numerator(), self.denominator())
    }
}

/// A significance level held as an exact rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Alpha(Ratio<u64>);

impl Alpha {
    pub fn new(numer: u64, denom: u64) -> Result<Self> {
        if denom == 0 {
            return Err(Error::Argument("alpha with zero denominator".into()));
        }
        Ok(Alpha(Ratio::new(numer, denom)))
    }

    pub fn ratio(&self) -> Ratio<u64> {
        self.0
    }

    pub fn value(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }

    /// Levels strictly inside `(0, 1)`.
    pub fn is_proper(&self) -> bool {
        *self.0.numer() > 0 && self.0.numer() < self.0.denom()
    }
}

impl FromStr for Alpha {
    type Err = Error;

    /// Accepts decimals (`0.05`, `1`) and fractions (`1/3`).
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = || Error::Argument(format!("cannot parse `{s}` as a level"));
        if let Some((n, d)) = s.split_once('/') {
            let n = n.trim().parse::<u64>().map_err(|_| bad())?;
            let d = d.trim().parse::<u64>().map_err(|_| bad())?;
            return Alpha::new(n, d);
        }
        let (int, frac) = s.split_once('.').unwrap_or((s, ""));
        if int.is_empty() && frac.is_empty() || frac.len() > 18 {
            return Err(bad());
        }
        if !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let denom = 10u64.pow(frac.len() as u32);
        let int_part = if int.is_empty() { 0 } else { int.parse::<u64>().map_err(|_| bad())? };
        let frac_part = if frac.is_empty() { 0 } else { frac.parse::<u64>().map_err(|_| bad())? };
        let numer = int_part.checked_mul(denom).and_then(|v| v.checked_add(frac_part)).ok_or_else(bad)?;
        Alpha::new(numer, denom)
    }
}

impl TryFrom<f64> for Alpha {
    type Error = Error;

    /// Uses the shortest decimal that round-trips to `x`, so `0.05` maps to
    /// exactly 5/100.
    fn try_from(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::Argument(format!("level {x} is not a nonnegative number")));
        }
        format!("{x}").parse()
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

fn check_not_nan<D: fmt::Display>(t: f64, what: impl FnOnce() -> D) -> Result<()> {
    if t.is_nan() {
        return Err(Error::InvalidStatistic(format!("{} is NaN", what())));
    }
    Ok(())
}

/// Monte Carlo p-value; ties count against `t0`.
pub fn p_mc(t0: f64, t_draws: &[f64]) -> Result<McPValue> {
    check_not_nan(t0, || "T_0")?;
    let mut exceed = 0u64;
    for (i, &t) in t_draws.iter().enumerate() {
        check_not_nan(t, || format!("T_{}", i + 1))?;
        if t >= t0 {
            exceed += 1;
        }
    }
    McPValue::new(exceed, t_draws.len() as u64)
}

/// Monte Carlo p-value with ties broken uniformly at random: `T_0` takes a
/// uniform rank among the draws equal to it. Under exchangeability this is
/// exactly uniform on `{1/(M+1), .., 1}`.
pub fn p_mc_randomized<R: Rng + ?Sized>(t0: f64, t_draws: &[f64], rng: &mut R) -> Result<McPValue> {
    check_not_nan(t0, || "T_0")?;
    let (mut greater, mut equal) = (0u64, 0u64);
    for (i, &t) in t_draws.iter().enumerate() {
        check_not_nan(t, || format!("T_{}", i + 1))?;
        match t.partial_cmp(&t0).expect("checked finite") {
            Ordering::Greater => greater += 1,
            Ordering::Equal => equal += 1,
            Ordering::Less => {}
        }
    }
    let extra = rng.random_range(0..=equal);
    McPValue::new(greater + extra, t_draws.len() as u64)
}

/// Statistic values of a sample set and the resulting p-values.
#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub t0: f64,
    pub t_draws: Vec<f64>,
    pub p_mc: McPValue,
    pub p_analytic: Option<f64>,
}

impl TestOutcome {
    pub fn evaluate<S, F>(set: &SampleSet<S>, statistic: F) -> Result<Self>
    where
        F: Fn(&S) -> f64,
    {
        let t0 = statistic(&set.observed);
        let t_draws: Vec<f64> = set.draws.iter().map(&statistic).collect();
        let p = p_mc(t0, &t_draws)?;
        Ok(Self {
            t0,
            t_draws,
            p_mc: p,
            p_analytic: None,
        })
    }

    pub fn with_analytic(mut self, p: f64) -> Self {
        self.p_analytic = Some(p);
        self
    }

    pub fn rejects(&self, alpha: Alpha) -> bool {
        self.p_mc.le(alpha)
    }

    /// Decisions over a grid of levels.
    pub fn decisions(&self, alphas: &[Alpha]) -> Vec<bool> {
        alphas.iter().map(|&a| self.rejects(a)).collect()
    }
}

/// `π({x : T(x) ≥ t0})` for a finite target; `statistic` is evaluated on
/// state indices.
pub fn p_analytic<F>(target: &DiscreteDistribution, statistic: F, t0: f64) -> Result<f64>
where
    F: Fn(usize) -> f64,
{
    check_not_nan(t0, || "T_0")?;
    let mut tail = 0.0;
    for x in 0..target.len() {
        let t = statistic(x);
        check_not_nan(t, || format!("T(state {x})"))?;
        if t >= t0 {
            tail += target.mass(x);
        }
    }
    Ok(tail.min(1.0))
}

/// `min(1, sqrt(2p))`.
pub fn sqrt_epsilon(p: f64) -> f64 {
    (2.0 * p).sqrt().min(1.0)
}

/// The corrected p-value `sqrt(2 p_MC)` for a single sequential run. Refuses
/// sample sets from other samplers or from non-reversible kernels.
pub fn sqrt_epsilon_pvalue<S>(set: &SampleSet<S>, outcome: &TestOutcome) -> Result<f64> {
    if set.method != Method::Sequential {
        return Err(Error::Argument(format!(
            "sqrt-epsilon correction applies to sequential runs, not {}",
            set.method.name()
        )));
    }
    if !set.reversible_kernel {
        return Err(Error::Argument("sqrt-epsilon correction needs a reversible kernel".into()));
    }
    Ok(sqrt_epsilon(outcome.p_mc.value()))
}

/// Maximized p-value over a finite family of nulls.
pub fn p_max(p_values: &[f64]) -> Result<f64> {
    if p_values.is_empty() {
        return Err(Error::Argument("p_max of an empty family".into()));
    }
    if let Some(p) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::Argument(format!("p-value {p} outside [0, 1]")));
    }
    Ok(p_values.iter().copied().fold(f64::NEG_INFINITY, f64::max))
}

/// One atom of the limiting parallel-method p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Atom {
    /// Hub state `X*`.
    pub hub: usize,
    /// `K^L(X*, {y : T(y) ≥ T(x0)})`.
    pub value: f64,
    /// `K̂^L(x0, X*)`.
    pub probability: f64,
}

/// Exact law of `p_∞` for the parallel method on a finite kernel: one atom per
/// reachable hub state.
pub fn p_infinity_discrete<K, F>(pair: &KernelPair<K>, statistic: F, x0: usize) -> Result<Vec<Atom>>
where
    K: Kernel,
    F: Fn(usize) -> f64,
{
    let (k_l, khat_l) = pair.power_matrices()?;
    let n = k_l.len();
    if x0 >= n {
        return Err(Error::Dimension(format!("state {x0} outside {n} states")));
    }
    let t0 = statistic(x0);
    check_not_nan(t0, || "T_0")?;
    let mut upper = vec![false; n];
    for (y, slot) in upper.iter_mut().enumerate() {
        let t = statistic(y);
        check_not_nan(t, || format!("T(state {y})"))?;
        *slot = t >= t0;
    }
    Ok((0..n)
        .filter(|&s| khat_l.entry(x0, s) > 0.0)
        .map(|s| Atom {
            hub: s,
            value: (0..n).filter(|&y| upper[y]).map(|y| k_l.entry(s, y)).sum::<f64>().min(1.0),
            probability: khat_l.entry(x0, s),
        })
        .collect())
}

/// `p_∞ = 1 - Φ(sqrt(1 - ρ^{2L}) x0 - ρ^L z*)` for the AR(1) parallel test.
pub fn p_infinity_ar1(x0: f64, rho: f64, step: usize, z_star: f64) -> f64 {
    let rl = rho.powi(step as i32);
    normal::sf((1.0 - rl * rl).sqrt() * x0 - rl * z_star)
}

/// Limiting power of the parallel AR(1) test against `N(μ, 1)`:
/// `1 - Φ(Φ⁻¹(1 - α) - sqrt(1 - ρ^{2L}) μ)`.
pub fn power_parallel_limit(mu: f64, alpha: f64, rho: f64, step: usize) -> f64 {
    let rl = rho.powi(step as i32);
    normal::sf(normal::quantile(1.0 - alpha) - (1.0 - rl * rl).sqrt() * mu)
}

/// Power of the analytic test `p_A ≤ α` against `N(μ, 1)`.
pub fn analytic_power(mu: f64, alpha: f64) -> f64 {
    normal::sf(normal::quantile(1.0 - alpha) - mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{DiscreteKernel, FiniteChain};
    use crate::rng::Stream;
    use proptest::prelude::*;

    fn a(s: &str) -> Alpha {
        s.parse().unwrap()
    }

    #[test]
    fn p_mc_examples() {
        assert_eq!(p_mc(5.0, &[1.0, 2.0, 3.0, 4.0]).unwrap().ratio(), Ratio::new(1, 5));
        assert_eq!(p_mc(2.0, &[2.0, 1.0, 3.0]).unwrap().ratio(), Ratio::new(3, 4));
        // T_0 third largest of 100 values
        let mut draws: Vec<f64> = (0..97).map(f64::from).collect();
        draws.extend([200.0, 300.0]);
        let p = p_mc(150.0, &draws).unwrap();
        assert_eq!(p.ratio(), Ratio::new(3, 100));
        assert!(p.le(a("0.03")));
        assert!(!p.le(a("0.029")));
        assert_eq!(p_mc(1.0, &[]).unwrap().value(), 1.0);
    }

    #[test]
    fn nan_statistic_is_rejected() {
        assert!(matches!(p_mc(f64::NAN, &[1.0]), Err(Error::InvalidStatistic(_))));
        assert!(matches!(p_mc(1.0, &[0.0, f64::NAN]), Err(Error::InvalidStatistic(_))));
    }

    #[test]
    fn alpha_parsing_is_exact() {
        assert_eq!(a("0.05").ratio(), Ratio::new(1, 20));
        assert_eq!(a("1/3").ratio(), Ratio::new(1, 3));
        assert_eq!(a("1").ratio(), Ratio::new(1, 1));
        assert_eq!(Alpha::try_from(0.1).unwrap(), a("0.1"));
        assert!("x".parse::<Alpha>().is_err());
        assert!("-0.1".parse::<Alpha>().is_err());
        assert!(a("0.05").is_proper() && !a("1").is_proper());
        // 5/100 ≤ 0.05 holds exactly
        assert!(McPValue::new(4, 99).unwrap().le(a("0.05")));
        assert!(!McPValue::new(5, 99).unwrap().le(a("0.05")));
    }

    #[test]
    fn analytic_examples() {
        let uniform = DiscreteDistribution::new((1..=100).collect(), vec![0.01; 100]).unwrap();
        let t = |x: usize| (x + 1) as f64;
        assert!((p_analytic(&uniform, t, 91.0).unwrap() - 0.10).abs() < 1e-12);
        assert_eq!(p_analytic(&uniform, t, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn sqrt_epsilon_examples() {
        assert!((sqrt_epsilon(0.02) - 0.2).abs() < 1e-15);
        assert_eq!(sqrt_epsilon(0.5), 1.0);
        assert!((sqrt_epsilon(0.00125) - 0.05).abs() < 1e-15);
    }

    #[test]
    fn p_max_examples() {
        assert_eq!(p_max(&[0.01, 0.2, 0.05]).unwrap(), 0.2);
        assert_eq!(p_max(&[0.37]).unwrap(), 0.37);
        assert!(p_max(&[]).is_err());
        assert!(p_max(&[0.1, 1.2]).is_err());
        // nulls N(m, 1), m in {-1, 0, 1}, observed x0 = 3
        let tails: Vec<f64> = [-1.0, 0.0, 1.0].iter().map(|m| normal::sf(3.0 - m)).collect();
        assert_eq!(p_max(&tails).unwrap(), normal::sf(2.0));
    }

    #[test]
    fn p_infinity_ar1_examples() {
        for x0 in [-1.0, 0.5, 2.5] {
            assert!((p_infinity_ar1(x0, 0.0, 3, 1.7) - normal::sf(x0)).abs() < 1e-16);
        }
        assert_eq!(p_infinity_ar1(0.0, 0.8, 4, 0.0), 0.5);
        // 40-digit reference: 1 - Φ(sqrt(0.19)·2 - 0.9)
        assert!((p_infinity_ar1(2.0, 0.9, 1, 1.0) - 0.51125674131847422126).abs() < 1e-15);
    }

    #[test]
    fn power_limits() {
        for mu in [0.5, 2.0] {
            assert!((power_parallel_limit(mu, 0.05, 0.0, 1) - analytic_power(mu, 0.05)).abs() < 1e-15);
            assert!((power_parallel_limit(mu, 0.05, 1.0 - 1e-12, 1) - 0.05).abs() < 1e-5);
        }
    }

    #[test]
    fn p_infinity_identity_is_point_mass_at_one() {
        let chain = FiniteChain::new(DiscreteKernel::identity(3), DiscreteDistribution::uniform(3).unwrap()).unwrap();
        let pair = KernelPair::new(chain, 4).unwrap();
        let atoms = p_infinity_discrete(&pair, |x| x as f64, 1).unwrap();
        assert_eq!(atoms, vec![Atom { hub: 1, value: 1.0, probability: 1.0 }]);
    }

    #[test]
    fn p_infinity_two_state_by_hand() {
        let k = DiscreteKernel::new(vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
        let target = DiscreteDistribution::new(vec![0, 1], vec![2.0 / 3.0, 1.0 / 3.0]).unwrap();
        let pair = KernelPair::new(FiniteChain::new(k, target).unwrap(), 1).unwrap();
        let atoms = p_infinity_discrete(&pair, |x| x as f64, 1).unwrap();
        // K̂ = K here; hub 0 w.p. 0.2 with value k(0,1) = 0.1, hub 1 w.p. 0.8 with value 0.8
        assert_eq!(atoms.len(), 2);
        assert!((atoms[0].probability - 0.2).abs() < 1e-15 && (atoms[0].value - 0.1).abs() < 1e-15);
        assert!((atoms[1].probability - 0.8).abs() < 1e-15 && (atoms[1].value - 0.8).abs() < 1e-15);
    }

    #[test]
    fn randomized_p_is_uniform_over_ranks() {
        // all ties: rank uniform over {1..M+1}
        let mut rng = Stream::new(8).rng();
        let mut counts = [0usize; 4];
        for _ in 0..40_000 {
            let p = p_mc_randomized(1.0, &[1.0, 1.0, 1.0], &mut rng).unwrap();
            counts[p.exceedances() as usize] += 1;
        }
        for c in counts {
            let se = (40_000.0f64 * 0.25 * 0.75).sqrt();
            assert!((c as f64 - 10_000.0).abs() < 4.0 * se, "{counts:?}");
        }
    }

    proptest! {
        #[test]
        fn p_mc_bounds_and_symmetry(t0 in -10.0f64..10.0, mut draws in proptest::collection::vec(-10.0f64..10.0, 0..40), shift in 0.0f64..5.0) {
            let p = p_mc(t0, &draws).unwrap();
            let m = draws.len() as u64;
            prop_assert!(p.numerator() >= 1 && p.numerator() <= m + 1);
            prop_assert_eq!(p.denominator(), m + 1);
            draws.reverse();
            prop_assert_eq!(p_mc(t0, &draws).unwrap(), p);
            // nonincreasing in t0
            prop_assert!(p_mc(t0 + shift, &draws).unwrap() <= p);
        }
    }
}
