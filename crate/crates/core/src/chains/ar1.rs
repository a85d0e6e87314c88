use rand::Rng;
use rand_distr::StandardNormal as Gaussian;

use crate::error::{Error, Result};
use crate::kernel::{DirectSampler, Direction, Kernel};

/// `X' = ρX + sqrt(1 - ρ²) Z`. Reversible with respect to `N(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ar1Kernel {
    rho: f64,
    innovation_sd: f64,
}

impl Ar1Kernel {
    pub fn new(rho: f64) -> Result<Self> {
        if !(rho.abs() < 1.0) {
            return Err(Error::Argument(format!("AR(1) needs |rho| < 1, got {rho}")));
        }
        Ok(Self {
            rho,
            innovation_sd: (1.0 - rho * rho).sqrt(),
        })
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn ar1_step<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> f64 {
        let z: f64 = rng.sample(Gaussian);
        self.rho * x + self.innovation_sd * z
    }
}

impl Kernel for Ar1Kernel {
    type State = f64;

    #[inline]
    fn step<R: Rng + ?Sized>(&self, state: &mut f64, _direction: Direction, rng: &mut R) {
        *state = self.ar1_step(*state, rng);
    }

    fn is_reversible(&self) -> bool {
        true
    }
}

/// Exact sampler for the AR(1) stationary law `N(0, 1)`.
#[derive(Debug, Clone, Copy, Default)]
pub struct StandardNormal;

impl DirectSampler for StandardNormal {
    type State = f64;

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        rng.sample(Gaussian)
    }
}
