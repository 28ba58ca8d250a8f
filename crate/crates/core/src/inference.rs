//! Standard errors, information criteria and bootstrap procedures.
//!
//! The score is taken with respect to the free parameters
//! `(p₁..p_{G−1}, α₁..α_G, β₁..β_G)`; the last weight is `1 − Σ p_j`.

use crate::em::{fit, EmConfig, FitResult};
use crate::error::{Error, Result};
use crate::mixture::{log_sum_exp, mix_sample, MixtureParams};
use crate::normal;
use crate::rng::{derive_seed, stream};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Share of replicates allowed to fail before a bootstrap run is abandoned.
pub const MAX_FAILURE_SHARE: f64 = 0.10;
const CENTERING_THRESHOLD: f64 = 1e-4;

/// Gradient of `ln f(y)` with respect to the free parameters.
pub fn score_vector(y: f64, params: &MixtureParams) -> Result<Vec<f64>> {
    if !(y.is_finite() && y > 0.0) {
        return Err(Error::domain(format!(
            "observation must be positive and finite, got {y}"
        )));
    }
    let mut buf = vec![0.0; params.n_components()];
    let mut out = vec![0.0; params.n_free_params()];
    score_into(y, params, &mut buf, &mut out);
    Ok(out)
}

fn score_into(y: f64, params: &MixtureParams, post: &mut [f64], out: &mut [f64]) {
    let g = params.n_components();
    params.weighted_ln_densities(y, post);
    let lse = log_sum_exp(post);
    for z in post.iter_mut() {
        *z = (*z - lse).exp();
    }
    let w = params.weights();
    let last = post[g - 1] / w[g - 1];
    for j in 0..g - 1 {
        out[j] = post[j] / w[j] - last;
    }
    for (j, c) in params.components().iter().enumerate() {
        let (alpha, beta) = (c.alpha(), c.beta());
        let a = c.a(y);
        let da_dbeta = -((y / beta).sqrt() + (beta / y).sqrt()) / (2.0 * alpha * beta);
        out[g - 1 + j] = post[j] * (a * a - 1.0) / alpha;
        out[2 * g - 1 + j] = post[j] * ((beta - y) / (2.0 * beta * (y + beta)) - a * da_dbeta);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InfoMatrix {
    pub matrix: DMatrix<f64>,
    /// The centring term `−(1/n) S Sᵀ` was applied because the summed score
    /// `S` was not negligible.
    pub centered: bool,
}

/// Empirical information `Σ s_i s_iᵀ`. Away from a stationary point (summed
/// score norm above 1e-4·n) the centred form `Σ s_i s_iᵀ − S Sᵀ/n` is used.
pub fn info_matrix(data: &[f64], params: &MixtureParams) -> Result<InfoMatrix> {
    build_info(data, params, true)
}

/// Plain outer-product sum `Σ s_i s_iᵀ` with no centring.
pub fn outer_product_info(data: &[f64], params: &MixtureParams) -> Result<InfoMatrix> {
    build_info(data, params, false)
}

fn build_info(data: &[f64], params: &MixtureParams, auto_center: bool) -> Result<InfoMatrix> {
    if data.is_empty() {
        return Err(Error::domain("data set is empty"));
    }
    let k = params.n_free_params();
    let mut outer = DMatrix::<f64>::zeros(k, k);
    let mut total = DVector::<f64>::zeros(k);
    let mut post = vec![0.0; params.n_components()];
    let mut s = vec![0.0; k];
    for &y in data {
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::domain(format!(
                "observation must be positive and finite, got {y}"
            )));
        }
        score_into(y, params, &mut post, &mut s);
        let v = DVector::from_column_slice(&s);
        outer.ger(1.0, &v, &v, 1.0);
        total += &v;
    }
    let n = data.len() as f64;
    let centered = auto_center && total.norm() > CENTERING_THRESHOLD * n;
    if centered {
        outer.ger(-1.0 / n, &total, &total, 1.0);
    }
    // enforce exact symmetry against rounding in the rank-one updates
    let sym = (&outer + outer.transpose()) * 0.5;
    Ok(InfoMatrix {
        matrix: sym,
        centered,
    })
}

/// Square roots of the diagonal of the inverse information.
pub fn standard_errors(info: &InfoMatrix) -> Result<Vec<f64>> {
    let m = &info.matrix;
    let eig = m.clone().symmetric_eigen();
    let min = eig.eigenvalues.min();
    let max = eig.eigenvalues.max();
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    let singular = || Error::SingularInformation {
        min_eigenvalue: min,
        condition,
    };
    if !(min > 0.0) || condition > 1e16 {
        return Err(singular());
    }
    let inv = m.clone().cholesky().ok_or_else(singular)?.inverse();
    Ok(inv.diagonal().iter().map(|v| v.sqrt()).collect())
}

/// Symmetric normal-theory intervals `estimate ± z_{(1+level)/2}·se`.
pub fn wald_ci(estimates: &[f64], ses: &[f64], level: f64) -> Result<Vec<(f64, f64)>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::params(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    if estimates.len() != ses.len() {
        return Err(Error::params(
            "estimates and standard errors differ in length",
        ));
    }
    let z = normal::quantile(0.5 * (1.0 + level));
    Ok(estimates
        .iter()
        .zip(ses)
        .map(|(e, s)| (e - z * s, e + z * s))
        .collect())
}

/// `AIC = −2ℓ + 2ρ`, `BIC = −2ℓ + ρ ln n`.
pub fn aic_bic(loglik: f64, n_params: usize, n_obs: usize) -> (f64, f64) {
    let rho = n_params as f64;
    (
        -2.0 * loglik + 2.0 * rho,
        -2.0 * loglik + rho * (n_obs as f64).ln(),
    )
}

/// Type-7 percentile of unsorted values.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    crate::init::quantile_sorted(&v, q)
}

fn sample_sd(values: &[f64]) -> f64 {
    let m = values.len() as f64;
    if values.len() < 2 {
        return 0.0;
    }
    let mean = values.iter().sum::<f64>() / m;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
}

fn check_failures(failed: usize, total: usize) -> Result<()> {
    if failed as f64 > MAX_FAILURE_SHARE * total as f64 {
        Err(Error::TooManyFailures { failed, total })
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSe {
    pub ses: Vec<f64>,
    /// (2.5%, 97.5%) percentile interval per parameter.
    pub cis: Vec<(f64, f64)>,
    pub replicates: usize,
    pub failed: usize,
    pub seed: u64,
}

/// Parametric bootstrap: draw `b` samples of the data size from the fitted
/// mixture, refit each with `config`, and summarize the refitted parameters.
/// Replicate `k` uses a seed derived from `(seed, k)`.
pub fn bootstrap_se(
    data: &[f64],
    fitted: &FitResult,
    b: usize,
    config: &EmConfig,
    seed: u64,
) -> Result<BootstrapSe> {
    if b < 2 {
        return Err(Error::params("bootstrap needs at least two replicates"));
    }
    let n = data.len();
    let g = fitted.params.n_components();
    let thetas: Vec<Option<Vec<f64>>> = (0..b as u64)
        .into_par_iter()
        .map(|k| {
            let rep_seed = derive_seed(seed, &[k]);
            let sample = mix_sample(n, &fitted.params, &mut stream(rep_seed));
            let cfg = EmConfig {
                seed: rep_seed,
                ..*config
            };
            fit(&sample, g, &cfg).ok().map(|f| f.params.theta())
        })
        .collect();
    let ok: Vec<Vec<f64>> = thetas.into_iter().flatten().collect();
    let failed = b - ok.len();
    check_failures(failed, b)?;
    let k = fitted.params.n_free_params();
    let mut ses = Vec::with_capacity(k);
    let mut cis = Vec::with_capacity(k);
    for i in 0..k {
        let column: Vec<f64> = ok.iter().map(|t| t[i]).collect();
        ses.push(sample_sd(&column));
        cis.push((percentile(&column, 0.025), percentile(&column, 0.975)));
    }
    Ok(BootstrapSe {
        ses,
        cis,
        replicates: ok.len(),
        failed,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapTestResult {
    pub stat_obs: f64,
    pub stats_boot: Vec<f64>,
    pub p_value: f64,
    pub b: usize,
    pub seed: u64,
    pub g_null: usize,
    pub g_alt: usize,
    pub loglik_null: f64,
    pub loglik_alt: f64,
    /// Replicates whose alternative fit ended below the null fit; their
    /// statistic was set to zero.
    pub floored: usize,
    pub failed: usize,
}

/// Monte Carlo p-value `(1 + #{stat_b ≥ stat_obs}) / (B + 1)`.
pub fn bootstrap_p_value(stat_obs: f64, stats_boot: &[f64]) -> f64 {
    let exceed = stats_boot.iter().filter(|&&s| s >= stat_obs).count();
    (1 + exceed) as f64 / (stats_boot.len() + 1) as f64
}

enum Replicate {
    Stat { value: f64, floored: bool },
    Failed,
}

/// Parametric bootstrap likelihood-ratio test of `g_null` against `g_alt`
/// components. Replicate `k` simulates from the fitted null model with a
/// seed derived from `(seed, k)` and refits both models.
pub fn bootstrap_lrt(
    data: &[f64],
    g_null: usize,
    g_alt: usize,
    b: usize,
    config: &EmConfig,
    seed: u64,
) -> Result<BootstrapTestResult> {
    if !(g_alt > g_null && g_null >= 1) {
        return Err(Error::params(format!(
            "need g_alt > g_null >= 1, got g_null = {g_null}, g_alt = {g_alt}"
        )));
    }
    if b < 1 {
        return Err(Error::params("bootstrap needs at least one replicate"));
    }
    let null_fit = fit(data, g_null, config)?;
    let alt_fit = fit(data, g_alt, config)?;
    let stat_obs = (2.0 * (alt_fit.loglik - null_fit.loglik)).max(0.0);
    let n = data.len();

    let reps: Vec<Replicate> = (0..b as u64)
        .into_par_iter()
        .map(|k| {
            let rep_seed = derive_seed(seed, &[k]);
            let sample = mix_sample(n, &null_fit.params, &mut stream(rep_seed));
            let cfg = EmConfig {
                seed: rep_seed,
                ..*config
            };
            let Ok(null) = fit(&sample, g_null, &cfg) else {
                return Replicate::Failed;
            };
            match fit(&sample, g_alt, &cfg) {
                Ok(alt) => {
                    let raw = 2.0 * (alt.loglik - null.loglik);
                    Replicate::Stat {
                        value: raw.max(0.0),
                        floored: raw < 0.0,
                    }
                }
                // a vanishing extra component means no improvement over the null
                Err(_) => Replicate::Stat {
                    value: 0.0,
                    floored: true,
                },
            }
        })
        .collect();

    let mut stats_boot = Vec::with_capacity(b);
    let mut floored = 0;
    let mut failed = 0;
    for r in reps {
        match r {
            Replicate::Stat { value, floored: f } => {
                stats_boot.push(value);
                floored += usize::from(f);
            }
            Replicate::Failed => failed += 1,
        }
    }
    check_failures(failed, b)?;
    Ok(BootstrapTestResult {
        stat_obs,
        p_value: bootstrap_p_value(stat_obs, &stats_boot),
        b: stats_boot.len(),
        stats_boot,
        seed,
        g_null,
        g_alt,
        loglik_null: null_fit.loglik,
        loglik_alt: alt_fit.loglik,
        floored,
        failed,
    })
}
