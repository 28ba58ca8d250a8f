//! Standard normal density, distribution and quantile functions.
//!
//! `erfc` comes from `libm` (musl port, about 1 ulp); the initial quantile
//! guess comes from `statrs` and is polished by one Newton step. The
//! log-survival function switches to a continued fraction for the Mills ratio
//! in the far tail so that hazards stay finite where `erfc` underflows.

use libm::erfc;
use statrs::function::erf::erfc_inv;
use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

/// ln(sqrt(2π))
pub const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

// Below this the erfc route is exact enough; above it we use the Mills ratio.
const MILLS_SWITCH: f64 = 5.0;
const MILLS_TERMS: u32 = 120;

#[inline]
pub fn pdf(x: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * x * x).exp()
}

#[inline]
pub fn ln_pdf(x: f64) -> f64 {
    -0.5 * x * x - LN_SQRT_2PI
}

#[inline]
pub fn cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Upper tail 1 − Φ(x), computed without cancellation.
#[inline]
pub fn sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// Mills ratio (1 − Φ(x)) / φ(x) for large positive x.
fn mills_ratio(x: f64) -> f64 {
    let mut t = x;
    for k in (1..=MILLS_TERMS).rev() {
        t = x + f64::from(k) / t;
    }
    1.0 / t
}

/// ln(1 − Φ(x)), finite for every finite x.
pub fn ln_sf(x: f64) -> f64 {
    if x < MILLS_SWITCH {
        sf(x).ln()
    } else {
        ln_pdf(x) + mills_ratio(x).ln()
    }
}

/// ln Φ(x), finite for every finite x.
#[inline]
pub fn ln_cdf(x: f64) -> f64 {
    ln_sf(-x)
}

/// Standard normal quantile. Returns ±∞ at p = 1 and p = 0, NaN outside [0, 1].
pub fn quantile(p: f64) -> f64 {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let z = -SQRT_2 * erfc_inv(2.0 * p);
    // one Newton polish against the tail that carries the precision
    let step = if z <= 0.0 {
        (cdf(z) - p) / pdf(z)
    } else {
        -(sf(z) - (1.0 - p)) / pdf(z)
    };
    if step.is_finite() {
        z - step
    } else {
        z
    }
}
