//! Single-component Birnbaum–Saunders distribution.
//!
//! `T ~ BS(α, β)` has cdf `Φ(a_t)` with `a_t = (sqrt(t/β) − sqrt(β/t))/α`;
//! β is the median and α the shape.

use crate::bessel::k_ratio_half;
use crate::error::{Error, Result};
use crate::normal;
use crate::optim::bisect;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BsParams {
    alpha: f64,
    beta: f64,
}

impl BsParams {
    pub fn new(alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::params(format!(
                "alpha must be finite and positive, got {alpha}"
            )));
        }
        if !(beta.is_finite() && beta > 0.0) {
            return Err(Error::params(format!(
                "beta must be finite and positive, got {beta}"
            )));
        }
        Ok(Self { alpha, beta })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    #[inline]
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// ln β, the location of the log-transformed variable.
    #[inline]
    pub fn gamma(&self) -> f64 {
        self.beta.ln()
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.alpha, beta)
    }

    // Unchecked versions used on hot paths once `t` is known to be positive.

    #[inline]
    pub(crate) fn a(&self, t: f64) -> f64 {
        ((t / self.beta).sqrt() - (self.beta / t).sqrt()) / self.alpha
    }

    #[inline]
    pub(crate) fn capital_a(&self, t: f64) -> f64 {
        (t + self.beta) / (2.0 * self.alpha * self.beta.sqrt() * t * t.sqrt())
    }

    #[inline]
    pub(crate) fn ln_pdf_unchecked(&self, t: f64) -> f64 {
        let a = self.a(t);
        normal::ln_pdf(a) + self.capital_a(t).ln()
    }

    /// d/dt of the density: `−φ(a)[a·A² + t^{−5/2}(t+3β)/(4αβ^{1/2})]`.
    #[inline]
    pub(crate) fn pdf_derivative_unchecked(&self, t: f64) -> f64 {
        let a = self.a(t);
        let cap = self.capital_a(t);
        let curvature =
            (t + 3.0 * self.beta) / (4.0 * self.alpha * self.beta.sqrt() * t * t * t.sqrt());
        -normal::pdf(a) * (a * cap * cap + curvature)
    }
}

fn check_t(t: f64) -> Result<()> {
    if t.is_finite() && t > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "argument must be finite and positive, got {t}"
        )))
    }
}

/// `a_t(α, β) = (sqrt(t/β) − sqrt(β/t))/α`.
pub fn a_fn(t: f64, params: &BsParams) -> Result<f64> {
    check_t(t)?;
    Ok(params.a(t))
}

/// `A_t(α, β) = t^{−3/2}(t + β)/(2αβ^{1/2})`, the derivative of `a_t` in t.
pub fn capital_a_fn(t: f64, params: &BsParams) -> Result<f64> {
    check_t(t)?;
    Ok(params.capital_a(t))
}

pub fn bs_pdf(t: f64, params: &BsParams) -> Result<f64> {
    check_t(t)?;
    Ok(normal::pdf(params.a(t)) * params.capital_a(t))
}

pub fn bs_ln_pdf(t: f64, params: &BsParams) -> Result<f64> {
    check_t(t)?;
    Ok(params.ln_pdf_unchecked(t))
}

pub fn bs_cdf(t: f64, params: &BsParams) -> Result<f64> {
    check_t(t)?;
    Ok(normal::cdf(params.a(t)))
}

pub fn bs_sf(t: f64, params: &BsParams) -> Result<f64> {
    check_t(t)?;
    Ok(normal::sf(params.a(t)))
}

/// Closed-form inverse of the cdf, `(β/4)(αz + sqrt(α²z² + 4))²`, followed by
/// one Newton step on the cdf.
pub fn bs_quantile(p: f64, params: &BsParams) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain(format!(
            "probability must lie in (0, 1), got {p}"
        )));
    }
    let z = normal::quantile(p);
    let half = 0.5 * params.alpha * z;
    let root = (half * half + 1.0).sqrt();
    // (half + root)² without cancellation for negative z
    let factor = if half >= 0.0 {
        half + root
    } else {
        1.0 / (root - half)
    };
    let t = params.beta * factor * factor;
    let dens = normal::pdf(params.a(t)) * params.capital_a(t);
    let resid = if p <= 0.5 {
        normal::cdf(params.a(t)) - p
    } else {
        (1.0 - p) - normal::sf(params.a(t))
    };
    let polished = t - resid / dens;
    if polished.is_finite() && polished > 0.0 {
        Ok(polished)
    } else {
        Ok(t)
    }
}

/// Maps a standard normal draw to a BS variate:
/// `X = αZ/2`, `T = β(1 + 2X² + 2X sqrt(1 + X²)) = β(X + sqrt(1 + X²))²`.
#[inline]
pub(crate) fn transform_normal(z: f64, params: &BsParams) -> f64 {
    let x = 0.5 * params.alpha * z;
    let root = (1.0 + x * x).sqrt();
    let factor = if x >= 0.0 { x + root } else { 1.0 / (root - x) };
    params.beta * (factor * factor)
}

/// `n` i.i.d. draws; consumes exactly `n` standard normals from `rng`.
pub fn bs_sample<R: Rng + ?Sized>(n: usize, params: &BsParams, rng: &mut R) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let z: f64 = rng.sample(StandardNormal);
            transform_normal(z, params)
        })
        .collect()
}

/// Mode m ∈ (0, β): the root of `(β − m)(m + β)² = α²βm(m + 3β)`.
///
/// Solved for u = m/β on `(ε, 1 − ε)`, which makes the result exactly
/// proportional to β.
pub fn bs_mode(params: &BsParams) -> f64 {
    const EPS: f64 = 1e-12;
    let a2 = params.alpha * params.alpha;
    let residual = |u: f64| (1.0 - u) * (u + 1.0) * (u + 1.0) - a2 * u * (u + 3.0);
    let u = bisect(residual, EPS, 1.0 - EPS, 1e-12);
    params.beta * u
}

/// α implied by a mode m < β: `α² = (β − m)(m + β)²/(βm(m + 3β))`.
pub fn alpha_from_mode(m: f64, beta: f64) -> Result<f64> {
    if !(m > 0.0 && beta > 0.0 && m < beta) {
        return Err(Error::domain(format!(
            "mode parameterization requires 0 < m < beta, got m = {m}, beta = {beta}"
        )));
    }
    let a2 = (beta - m) * (m + beta) * (m + beta) / (beta * m * (m + 3.0 * beta));
    Ok(a2.sqrt())
}

/// Density parameterized by mode and median.
pub fn bs_pdf_mode_param(t: f64, m: f64, beta: f64) -> Result<f64> {
    check_t(t)?;
    let alpha = alpha_from_mode(m, beta)?;
    if alpha == 0.0 {
        return Err(Error::domain("mode equals beta to machine precision"));
    }
    bs_pdf(t, &BsParams::new(alpha, beta)?)
}

/// `E(T^s) = β^s [K_{(2s+1)/2}(α⁻²) + K_{(2s−1)/2}(α⁻²)] / (2K_{1/2}(α⁻²))`.
pub fn bs_moment(s: f64, params: &BsParams) -> Result<f64> {
    if !s.is_finite() {
        return Err(Error::domain(format!(
            "moment order must be finite, got {s}"
        )));
    }
    let x = 1.0 / (params.alpha * params.alpha);
    let ratio = 0.5 * (k_ratio_half(s + 0.5, x) + k_ratio_half(s - 0.5, x));
    let value = (params.gamma() * s).exp() * ratio;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::domain(format!(
            "moment of order {s} is not finite for {params:?}"
        )))
    }
}

/// Density of W = ln T: `(1/2)φ(ξ₂)ξ₁`, `ξ₂ = (2/α)sinh((w−γ)/2)`, `ξ₁ = (2/α)cosh((w−γ)/2)`.
pub fn log_bs_pdf(w: f64, alpha: f64, gamma: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::params(format!(
            "alpha must be finite and positive, got {alpha}"
        )));
    }
    let half = 0.5 * (w - gamma);
    let xi2 = 2.0 / alpha * half.sinh();
    let xi1 = 2.0 / alpha * half.cosh();
    Ok(0.5 * normal::pdf(xi2) * xi1)
}

/// `1/(αβ sqrt(2π))`, the density at the median.
pub fn pdf_at_median(params: &BsParams) -> f64 {
    1.0 / (params.alpha * params.beta * (2.0 * PI).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn p(a: f64, b: f64) -> BsParams {
        BsParams::new(a, b).unwrap()
    }

    #[test]
    fn rejects_bad_params() {
        assert!(BsParams::new(0.0, 1.0).is_err());
        assert!(BsParams::new(1.0, -1.0).is_err());
        assert!(BsParams::new(f64::NAN, 1.0).is_err());
        assert!(BsParams::new(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn a_fn_examples() {
        let q = p(0.7, 3.0);
        assert_eq!(a_fn(3.0, &q).unwrap(), 0.0);
        let v = a_fn(2.0, &p(0.5, 1.0)).unwrap();
        assert!((v - std::f64::consts::SQRT_2).abs() < 1e-12);
        let v = a_fn(0.25, &p(1.0, 1.0)).unwrap();
        assert!((v + 1.5).abs() < 1e-15);
        assert!(a_fn(0.0, &q).is_err());
        assert!(a_fn(-1.0, &q).is_err());
    }

    #[test]
    fn capital_a_examples() {
        let q = p(0.8, 2.5);
        assert!((capital_a_fn(2.5, &q).unwrap() - 1.0 / (0.8 * 2.5)).abs() < 1e-15);
        assert!((capital_a_fn(1.0, &p(0.5, 1.0)).unwrap() - 2.0).abs() < 1e-15);
        for &t in &[0.05, 0.3, 1.0, 4.0, 20.0] {
            let h = 1e-5 * t;
            let fd = (q.a(t + h) - q.a(t - h)) / (2.0 * h);
            let exact = capital_a_fn(t, &q).unwrap();
            assert!(((fd - exact) / exact).abs() < 1e-6, "t = {t}");
        }
    }

    #[test]
    fn pdf_examples() {
        let q = p(0.3, 2.0);
        assert!((bs_pdf(2.0, &q).unwrap() - pdf_at_median(&q)).abs() < 1e-15);
        assert!((bs_pdf(1.0, &p(0.5, 1.0)).unwrap() - 0.797_884_560_802_865_4).abs() < 1e-12);
        assert!(bs_pdf(0.0, &q).is_err());
    }

    #[test]
    fn cdf_examples() {
        let q = p(0.5, 1.0);
        assert_eq!(bs_cdf(1.0, &q).unwrap(), 0.5);
        assert!((bs_cdf(2.0, &q).unwrap() - 0.921_350_396_474_857_4).abs() < 1e-12);
        assert!(bs_cdf(1e-12, &q).unwrap() < 1e-100);
        assert_eq!(bs_cdf(1e12, &q).unwrap(), 1.0);
    }

    #[test]
    fn quantile_examples() {
        let q = p(0.5, 1.0);
        assert!((bs_quantile(0.5, &q).unwrap() - 1.0).abs() < 1e-15);
        assert!((bs_quantile(0.921_350, &q).unwrap() - 2.0).abs() < 1e-4);
        for &t in &[0.1, 1.0, 10.0] {
            let back = bs_quantile(bs_cdf(t, &q).unwrap(), &q).unwrap();
            assert!((back - t).abs() < 1e-8 * t.max(1.0), "t = {t}: {back}");
        }
        assert!(bs_quantile(0.0, &q).is_err());
        assert!(bs_quantile(1.0, &q).is_err());
    }

    #[test]
    fn sample_determinism_and_scaling() {
        let q = p(0.25, 1.0);
        let a = bs_sample(100, &q, &mut stream(9));
        let b = bs_sample(100, &q, &mut stream(9));
        assert_eq!(a, b);
        assert!(a.iter().all(|&x| x > 0.0));
        assert!(bs_sample(0, &q, &mut stream(9)).is_empty());
        let scaled = bs_sample(100, &p(0.25, 3.5), &mut stream(9));
        for (x, y) in a.iter().zip(&scaled) {
            assert!((3.5 * x - y).abs() <= 4.0 * f64::EPSILON * y);
        }
    }

    #[test]
    fn transform_extreme_negative_draw_is_positive() {
        let q = p(2.0, 1.0);
        let t = transform_normal(-30.0, &q);
        assert!(t > 0.0 && t.is_finite());
        // a_t recovers α·Z/α = Z
        assert!((q.a(t) + 30.0).abs() < 1e-9);
    }

    #[test]
    fn mode_examples() {
        // α → 0: mode → β
        assert!((bs_mode(&p(1e-8, 2.0)) - 2.0).abs() < 1e-9);

        // bisection oracle on (0, β) for α = 0.5, β = 1
        let g = |m: f64| (1.0 - m) * (m + 1.0).powi(2) - 0.25 * m * (m + 3.0);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        let m = bs_mode(&p(0.5, 1.0));
        assert!((m - lo).abs() < 1e-11);
        // grid argmax of the density
        let q = p(0.5, 1.0);
        let n = 100_000;
        let (a, b) = (0.5, 1.0);
        let step = (b - a) / n as f64;
        let best = (0..=n)
            .map(|i| a + i as f64 * step)
            .max_by(|x, y| bs_pdf(*x, &q).unwrap().total_cmp(&bs_pdf(*y, &q).unwrap()))
            .unwrap();
        assert!((best - m).abs() <= step);

        let base = bs_mode(&p(0.9, 1.0));
        for &c in &[0.01, 3.0, 250.0] {
            let scaled = bs_mode(&p(0.9, c));
            assert!((scaled - c * base).abs() <= 1e-12 * c);
        }
    }

    #[test]
    fn mode_param_examples() {
        assert!(bs_pdf_mode_param(1.0, 2.0, 2.0).is_err());
        assert!(bs_pdf_mode_param(1.0, 3.0, 2.0).is_err());
        // m near β: implied α ≈ 0, density peaked at β
        let alpha = alpha_from_mode(0.999 * 7.0, 7.0).unwrap();
        let u: f64 = 0.999;
        let expect = ((1.0 - u) * (1.0 + u).powi(2) / (u * (u + 3.0))).sqrt();
        assert!((alpha - expect).abs() < 1e-12 && alpha < 0.032);
        assert!(
            bs_pdf_mode_param(7.0, 0.999 * 7.0, 7.0).unwrap()
                > bs_pdf_mode_param(6.0, 0.999 * 7.0, 7.0).unwrap() * 1e4
        );
        // grid argmax equals m
        let (m, beta) = (2.0, 7.0);
        let n = 100_000;
        let step = 6.0 / n as f64;
        let best = (0..=n)
            .map(|i| 0.5 + i as f64 * step)
            .max_by(|x, y| {
                bs_pdf_mode_param(*x, m, beta)
                    .unwrap()
                    .total_cmp(&bs_pdf_mode_param(*y, m, beta).unwrap())
            })
            .unwrap();
        assert!((best - m).abs() <= step);
    }

    #[test]
    fn moment_closed_forms() {
        let q = p(0.5, 2.0);
        assert!((bs_moment(1.0, &q).unwrap() - 2.25).abs() < 1e-14);
        for &(a, b) in &[(0.1, 1.0), (0.5, 2.0), (1.3, 0.4), (3.0, 5.0)] {
            let q = p(a, b);
            let m1 = b * (1.0 + a * a / 2.0);
            let m2 = b * b * (1.0 + 2.0 * a * a + 1.5 * a.powi(4));
            assert!(((bs_moment(1.0, &q).unwrap() - m1) / m1).abs() < 1e-10);
            assert!(((bs_moment(2.0, &q).unwrap() - m2) / m2).abs() < 1e-10);
            // Var(T) = (αβ)²(1 + 5α²/4)
            let var = bs_moment(2.0, &q).unwrap() - bs_moment(1.0, &q).unwrap().powi(2);
            let expect = (a * b).powi(2) * (1.0 + 1.25 * a * a);
            assert!(((var - expect) / expect).abs() < 1e-9);
        }
        // E(T^0) = 1 and E(T^{-1}) = (1 + α²/2)/β via the reciprocal property
        let q = p(0.6, 3.0);
        assert!((bs_moment(0.0, &q).unwrap() - 1.0).abs() < 1e-14);
        assert!((bs_moment(-1.0, &q).unwrap() - (1.0 + 0.18) / 3.0).abs() < 1e-14);
        // non-half-integer order goes through the integral route; check against
        // trapezoid integration of t^s f(t) in log space
        let s = 0.7;
        let h = 1e-3;
        let num: f64 = (-20_000..20_000)
            .map(|i| {
                let w = q.gamma() + i as f64 * h;
                let t = w.exp();
                t.powf(s) * bs_pdf(t, &q).unwrap() * t * h
            })
            .sum();
        assert!(((bs_moment(s, &q).unwrap() - num) / num).abs() < 1e-8);
    }

    #[test]
    fn moment_small_alpha_does_not_overflow() {
        let q = p(1e-3, 4.0);
        let m = bs_moment(1.0, &q).unwrap();
        assert!((m - 4.0 * (1.0 + 5e-7)).abs() < 1e-12);
    }

    #[test]
    fn log_pdf_examples() {
        let (alpha, gamma) = (0.4, 0.3);
        let peak = log_bs_pdf(gamma, alpha, gamma).unwrap();
        assert!((peak - 1.0 / (alpha * (2.0 * PI).sqrt())).abs() < 1e-15);
        for &d in &[0.01, 0.3, 1.7] {
            let l = log_bs_pdf(gamma - d, alpha, gamma).unwrap();
            let r = log_bs_pdf(gamma + d, alpha, gamma).unwrap();
            assert!((l - r).abs() <= 1e-15 * l.max(1e-300));
        }
        assert!(log_bs_pdf(0.0, -1.0, 0.0).is_err());
    }
}
