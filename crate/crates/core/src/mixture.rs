//! Finite mixtures of Birnbaum–Saunders components (FM-BS).

use crate::bs::{self, transform_normal, BsParams};
use crate::error::{Error, Result};
use crate::normal;
use crate::optim::bisect;
use crate::quad::{integrate, QuadOptions};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

const WEIGHT_SUM_TOL: f64 = 1e-12;
const MODE_GRID_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureParams {
    weights: Vec<f64>,
    components: Vec<BsParams>,
}

impl MixtureParams {
    /// Weights must be positive and sum to one within 1e-12; they are
    /// renormalized so the stored sum is exact to rounding.
    pub fn new(weights: Vec<f64>, components: Vec<BsParams>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::params("a mixture needs at least one component"));
        }
        if weights.len() != components.len() {
            return Err(Error::params(format!(
                "{} weights for {} components",
                weights.len(),
                components.len()
            )));
        }
        if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
            return Err(Error::params(format!(
                "mixing weights must be positive, got {w}"
            )));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::params(format!(
                "mixing weights sum to {total}, not 1"
            )));
        }
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            weights,
            components,
        })
    }

    /// Builds from separate α and β vectors.
    pub fn from_vectors(weights: &[f64], alphas: &[f64], betas: &[f64]) -> Result<Self> {
        if alphas.len() != betas.len() {
            return Err(Error::params("alpha and beta vectors differ in length"));
        }
        let components = alphas
            .iter()
            .zip(betas)
            .map(|(&a, &b)| BsParams::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        Self::new(weights.to_vec(), components)
    }

    /// Two-component mixture `(p₁, α₁, α₂, β₁, β₂)` as tabulated in the literature.
    pub fn two_component(p1: f64, a1: f64, a2: f64, b1: f64, b2: f64) -> Result<Self> {
        Self::from_vectors(&[p1, 1.0 - p1], &[a1, a2], &[b1, b2])
    }

    pub fn single(params: BsParams) -> Self {
        Self {
            weights: vec![1.0],
            components: vec![params],
        }
    }

    #[inline]
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn components(&self) -> &[BsParams] {
        &self.components
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.components.iter().map(BsParams::alpha).collect()
    }

    pub fn betas(&self) -> Vec<f64> {
        self.components.iter().map(BsParams::beta).collect()
    }

    /// Number of free parameters, 3G − 1.
    pub fn n_free_params(&self) -> usize {
        3 * self.n_components() - 1
    }

    /// Free parameter vector `(p₁..p_{G−1}, α₁..α_G, β₁..β_G)`.
    pub fn theta(&self) -> Vec<f64> {
        let g = self.n_components();
        let mut out = Vec::with_capacity(3 * g - 1);
        out.extend_from_slice(&self.weights[..g - 1]);
        out.extend(self.components.iter().map(BsParams::alpha));
        out.extend(self.components.iter().map(BsParams::beta));
        out
    }

    /// Names matching [`theta`](Self::theta), e.g. `p1, alpha1, alpha2, beta1, beta2`.
    pub fn theta_names(g: usize) -> Vec<String> {
        let mut names: Vec<String> = (1..g).map(|j| format!("p{j}")).collect();
        names.extend((1..=g).map(|j| format!("alpha{j}")));
        names.extend((1..=g).map(|j| format!("beta{j}")));
        names
    }

    /// Reorders components; `order[k]` is the old index placed at position k.
    pub fn permuted(&self, order: &[usize]) -> Self {
        Self {
            weights: order.iter().map(|&i| self.weights[i]).collect(),
            components: order.iter().map(|&i| self.components[i]).collect(),
        }
    }

    /// Canonical label order: β ascending, ties broken by α then weight.
    pub fn canonical_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.n_components()).collect();
        order.sort_by(|&i, &j| {
            let (a, b) = (&self.components[i], &self.components[j]);
            a.beta()
                .total_cmp(&b.beta())
                .then(a.alpha().total_cmp(&b.alpha()))
                .then(self.weights[i].total_cmp(&self.weights[j]))
        });
        order
    }

    pub fn canonicalized(&self) -> Self {
        self.permuted(&self.canonical_order())
    }

    /// Per-component `ln p_j + ln f_j(y)`; `y` must be positive.
    #[inline]
    pub(crate) fn weighted_ln_densities(&self, y: f64, out: &mut [f64]) {
        for ((o, w), c) in out.iter_mut().zip(&self.weights).zip(&self.components) {
            *o = w.ln() + c.ln_pdf_unchecked(y);
        }
    }
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn check_y(y: f64) -> Result<()> {
    if y.is_finite() && y > 0.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "argument must be finite and positive, got {y}"
        )))
    }
}

pub fn mix_pdf(y: f64, params: &MixtureParams) -> Result<f64> {
    check_y(y)?;
    Ok(params
        .weights
        .iter()
        .zip(&params.components)
        .map(|(w, c)| w * normal::pdf(c.a(y)) * c.capital_a(y))
        .sum())
}

/// ln of the mixture density via log-sum-exp over components.
pub fn mix_ln_pdf(y: f64, params: &MixtureParams) -> Result<f64> {
    check_y(y)?;
    let mut buf = vec![0.0; params.n_components()];
    params.weighted_ln_densities(y, &mut buf);
    Ok(log_sum_exp(&buf))
}

/// Derivative of the mixture density in y.
pub fn mix_pdf_derivative(y: f64, params: &MixtureParams) -> Result<f64> {
    check_y(y)?;
    Ok(params
        .weights
        .iter()
        .zip(&params.components)
        .map(|(w, c)| w * c.pdf_derivative_unchecked(y))
        .sum())
}

pub fn mix_cdf(y: f64, params: &MixtureParams) -> Result<f64> {
    check_y(y)?;
    Ok(params
        .weights
        .iter()
        .zip(&params.components)
        .map(|(w, c)| w * normal::cdf(c.a(y)))
        .sum())
}

pub fn mix_survival(y: f64, params: &MixtureParams) -> Result<f64> {
    check_y(y)?;
    Ok(params
        .weights
        .iter()
        .zip(&params.components)
        .map(|(w, c)| w * normal::sf(c.a(y)))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HazardEval {
    pub value: f64,
    /// The survival function underflows to zero in plain arithmetic; `value`
    /// was still obtained from log-space survival terms.
    pub survival_underflow: bool,
}

/// Hazard `f(y)/S(y)` with both numerator and denominator kept in logs.
pub fn mix_hazard_detailed(y: f64, params: &MixtureParams) -> Result<HazardEval> {
    check_y(y)?;
    let g = params.n_components();
    let mut num = vec![0.0; g];
    params.weighted_ln_densities(y, &mut num);
    let den: Vec<f64> = params
        .weights
        .iter()
        .zip(&params.components)
        .map(|(w, c)| w.ln() + normal::ln_sf(c.a(y)))
        .collect();
    let ln_s = log_sum_exp(&den);
    let value = if ln_s == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (log_sum_exp(&num) - ln_s).exp()
    };
    Ok(HazardEval {
        value,
        survival_underflow: ln_s.exp() == 0.0,
    })
}

pub fn mix_hazard(y: f64, params: &MixtureParams) -> Result<f64> {
    mix_hazard_detailed(y, params).map(|h| h.value)
}

/// Limit of the hazard as y → ∞ for two components. The component with the
/// larger α²β has the heavier tail and fixes the limit at `1/(2α²β)`.
pub fn hazard_limit(params: &MixtureParams) -> Result<f64> {
    if params.n_components() != 2 {
        return Err(Error::Unsupported(format!(
            "hazard limit is defined for G = 2, got G = {}",
            params.n_components()
        )));
    }
    let (c1, c2) = (params.components[0], params.components[1]);
    let k1 = c1.alpha() * c1.alpha() * c1.beta();
    let k2 = c2.alpha() * c2.alpha() * c2.beta();
    let p = params.weights[0];
    if (k1 - k2).abs() <= 1e-12 * k1.max(k2) {
        let ratio = (1.0 / (c2.alpha() * c2.alpha()) - 1.0 / (c1.alpha() * c1.alpha())).exp()
            * c1.alpha()
            * c1.beta().sqrt()
            / (c2.alpha() * c2.beta().sqrt());
        let d = p / (p + (1.0 - p) * ratio);
        Ok(d / (2.0 * k1) + (1.0 - d) / (2.0 * k2))
    } else if k2 < k1 {
        Ok(1.0 / (2.0 * k1))
    } else {
        Ok(1.0 / (2.0 * k2))
    }
}

fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (llo + (lhi - llo) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Roots of the density derivative on the log grid, split into
/// (maxima, minima), each ascending.
fn stationary_points(params: &MixtureParams) -> (Vec<f64>, Vec<f64>) {
    let lo = params
        .components
        .iter()
        .map(bs::bs_mode)
        .fold(f64::INFINITY, f64::min)
        / 10.0;
    let hi = params
        .components
        .iter()
        .map(BsParams::beta)
        .fold(0.0, f64::max)
        * 10.0;
    let deriv = |y: f64| {
        params
            .weights
            .iter()
            .zip(&params.components)
            .map(|(w, c)| w * c.pdf_derivative_unchecked(y))
            .sum::<f64>()
    };
    let grid = log_grid(lo, hi, MODE_GRID_POINTS);
    let mut maxima = Vec::new();
    let mut minima = Vec::new();
    let mut last: Option<(f64, f64)> = None;
    for &y in &grid {
        let d = deriv(y);
        if d == 0.0 || !d.is_finite() {
            continue;
        }
        if let Some((y_prev, d_prev)) = last {
            if (d_prev > 0.0) != (d > 0.0) {
                let root = bisect(deriv, y_prev, y, 1e-10 * y_prev);
                if d_prev > 0.0 {
                    maxima.push(root);
                } else {
                    minima.push(root);
                }
            }
        }
        last = Some((y, d));
    }
    (maxima, minima)
}

/// All local maxima of the mixture density, ascending.
pub fn mix_modes(params: &MixtureParams) -> Vec<f64> {
    stationary_points(params).0
}

/// Local minima between modes (antimodes), ascending.
pub fn mix_antimodes(params: &MixtureParams) -> Vec<f64> {
    stationary_points(params).1
}

/// Root of `F(y) = 1/2`; it lies between the smallest and largest component median.
pub fn mix_median(params: &MixtureParams) -> f64 {
    let lo = params
        .components
        .iter()
        .map(BsParams::beta)
        .fold(f64::INFINITY, f64::min);
    let hi = params
        .components
        .iter()
        .map(BsParams::beta)
        .fold(0.0, f64::max);
    if lo == hi {
        return lo;
    }
    let f = |y: f64| {
        params
            .weights
            .iter()
            .zip(&params.components)
            .map(|(w, c)| w * normal::cdf(c.a(y)))
            .sum::<f64>()
            - 0.5
    };
    bisect(f, lo, hi, 1e-15 * hi)
}

pub fn mix_moment(s: f64, params: &MixtureParams) -> Result<f64> {
    params
        .weights
        .iter()
        .zip(&params.components)
        .map(|(w, c)| bs::bs_moment(s, c).map(|m| w * m))
        .sum()
}

/// Draws values and latent component labels (0-based).
///
/// The stream is consumed as n normals followed by n uniforms, so a mixture
/// whose first weight rounds to one reproduces `bs_sample` of component 1.
pub fn mix_sample_labeled<R: Rng + ?Sized>(
    n: usize,
    params: &MixtureParams,
    rng: &mut R,
) -> (Vec<f64>, Vec<usize>) {
    let normals: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
    let mut cumulative = Vec::with_capacity(params.n_components());
    let mut acc = 0.0;
    for w in &params.weights {
        acc += w;
        cumulative.push(acc);
    }
    let last = params.n_components() - 1;
    let labels: Vec<usize> = (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            cumulative.iter().position(|&c| u < c).unwrap_or(last)
        })
        .collect();
    let values = normals
        .iter()
        .zip(&labels)
        .map(|(&z, &j)| transform_normal(z, &params.components[j]))
        .collect();
    (values, labels)
}

pub fn mix_sample<R: Rng + ?Sized>(n: usize, params: &MixtureParams, rng: &mut R) -> Vec<f64> {
    mix_sample_labeled(n, params, rng).0
}

// Beyond |z| = 10 the standard normal density is below 1e-22.
const STRESS_Z_LIMIT: f64 = 10.0;

/// Stress–strength reliability `R = P(Y < X)` for independent mixtures.
///
/// Each `R_jl = ∫ f_{X,j}(x) F_{Y,l}(x) dx` is integrated after the substitution
/// `z = a_x(α_j, β_j)`, which turns it into `∫ φ(z) Φ(a_{x(z)}(γ_l, θ_l)) dz`.
pub fn stress_strength(strength: &MixtureParams, stress: &MixtureParams) -> Result<f64> {
    let opts = QuadOptions {
        abs_tol: 1e-9,
        rel_tol: 0.0,
        max_intervals: 2000,
    };
    let mut total = 0.0;
    for (p, cx) in strength.weights.iter().zip(&strength.components) {
        for (q, cy) in stress.weights.iter().zip(&stress.components) {
            let integrand = |z: f64| {
                let x = transform_normal(z, cx);
                normal::pdf(z) * normal::cdf(cy.a(x))
            };
            let r = integrate(integrand, -STRESS_Z_LIMIT, STRESS_Z_LIMIT, opts)?;
            total += p * q * r.value;
        }
    }
    Ok(total.clamp(0.0, 1.0))
}
