//! Standard normal density, distribution and quantile functions.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `Φ(x)`.
pub fn cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

/// `1 - Φ(x)` without cancellation in the upper tail.
pub fn sf(x: f64) -> f64 {
    0.5 * libm::erfc(x * FRAC_1_SQRT_2)
}

/// `Φ⁻¹(p)` for `p` in `(0, 1)`: bisection to a bracket, then Newton.
pub fn quantile(p: f64) -> f64 {
    assert!(p > 0.0 && p < 1.0, "quantile needs p in (0, 1), got {p}");
    if p > 0.5 {
        return -lower_quantile(1.0 - p);
    }
    lower_quantile(p)
}

fn lower_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0f64, 0.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut x = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = pdf(x);
        if d == 0.0 {
            break;
        }
        let next = x - (cdf(x) - p) / d;
        if !(lo..=hi).contains(&next) {
            break;
        }
        x = next;
    }
    x
}
