//! ECM maximum-likelihood fitting.
//!
//! Each cycle computes responsibilities (E-step), updates α and the weights
//! in closed form with β fixed (CM-step 1), then maximizes the expected
//! complete-data log-likelihood over each β_j separately (CM-step 2).
//! Iteration stops on Aitken's accelerated log-likelihood estimate.

use crate::bs::BsParams;
use crate::error::{Error, Result};
use crate::init::{initialize, moment_init, quantile_partition, InitStrategy, Partition};
use crate::mixture::{log_sum_exp, MixtureParams};
use crate::optim::brent_min;
use serde::{Deserialize, Serialize};

pub const ALPHA_FLOOR: f64 = 1e-6;
pub const DEGENERATE_MASS: f64 = 1e-10;
const BRENT_REL_TOL: f64 = 1e-10;
const BRENT_MAX_ITER: usize = 200;
const BRACKET_EXPANSIONS: i32 = 5;
// A Brent minimum this close to a bracket end is treated as a boundary hit.
const EDGE_REL: f64 = 1e-7;

/// Posterior membership probabilities, n × G, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Responsibilities {
    values: Vec<f64>,
    g: usize,
}

impl Responsibilities {
    /// Checks that entries lie in [0, 1] and rows sum to one within 1e-12.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let g = rows.first().map_or(0, Vec::len);
        if g == 0 {
            return Err(Error::params(
                "responsibilities need at least one row and column",
            ));
        }
        let mut values = Vec::with_capacity(rows.len() * g);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != g {
                return Err(Error::params(format!(
                    "row {i} has {} entries, expected {g}",
                    row.len()
                )));
            }
            if row.iter().any(|z| !(0.0..=1.0).contains(z))
                || (row.iter().sum::<f64>() - 1.0).abs() > 1e-12
            {
                return Err(Error::params(format!(
                    "row {i} is not a probability vector"
                )));
            }
            values.extend_from_slice(row);
        }
        Ok(Self { values, g })
    }

    pub fn n_obs(&self) -> usize {
        self.values.len() / self.g
    }

    pub fn n_components(&self) -> usize {
        self.g
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.g..(i + 1) * self.g]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.g + j]
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().skip(j).step_by(self.g).copied()
    }

    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.g];
        for row in self.values.chunks_exact(self.g) {
            for (s, z) in sums.iter_mut().zip(row) {
                *s += z;
            }
        }
        sums
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub init: InitStrategy,
    pub seed: u64,
    pub beta_bracket_factor: f64,
    /// On the k-bumps path, derive starting α from the bump maxima instead of
    /// modified moments.
    pub bump_mode_alpha: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 2000,
            init: InitStrategy::KBumps,
            seed: 0,
            beta_bracket_factor: 4.0,
            bump_mode_alpha: false,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::params(format!(
                "tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::params("max_iter must be at least 1"));
        }
        if !(self.beta_bracket_factor > 1.0 && self.beta_bracket_factor.is_finite()) {
            return Err(Error::params(format!(
                "beta bracket factor must exceed 1, got {}",
                self.beta_bracket_factor
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub loglik: f64,
    pub theta: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub params: MixtureParams,
    pub loglik: f64,
    pub trace: Vec<TraceEntry>,
    pub iterations: usize,
    pub converged: bool,
    pub rate_r: Option<f64>,
    pub init: InitStrategy,
    /// k-bumps found too few bumps and the quantile split was used.
    pub init_fallback: bool,
    /// A component vanished and the fit was restarted from the quantile split.
    pub restarted: bool,
}

fn check_data(data: &[f64]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::domain("data set is empty"));
    }
    if let Some((i, y)) = data
        .iter()
        .enumerate()
        .find(|(_, y)| !(y.is_finite() && **y > 0.0))
    {
        return Err(Error::domain(format!(
            "observation {i} is not positive and finite: {y}"
        )));
    }
    Ok(())
}

/// Log-likelihood `Σ_i ln f(y_i)` with log-sum-exp over components.
pub fn loglik(data: &[f64], params: &MixtureParams) -> Result<f64> {
    check_data(data)?;
    Ok(loglik_unchecked(data, params))
}

fn loglik_unchecked(data: &[f64], params: &MixtureParams) -> f64 {
    let mut buf = vec![0.0; params.n_components()];
    data.iter()
        .map(|&y| {
            params.weighted_ln_densities(y, &mut buf);
            log_sum_exp(&buf)
        })
        .sum()
}

fn e_step_with_loglik(data: &[f64], params: &MixtureParams) -> (Responsibilities, f64) {
    let g = params.n_components();
    let ln_w: Vec<f64> = params.weights().iter().map(|w| w.ln()).collect();
    let mut values = vec![0.0; data.len() * g];
    let mut total = 0.0;
    for (row, &y) in values.chunks_exact_mut(g).zip(data) {
        for ((z, lw), c) in row.iter_mut().zip(&ln_w).zip(params.components()) {
            *z = lw + c.ln_pdf_unchecked(y);
        }
        let lse = log_sum_exp(row);
        total += lse;
        if lse.is_finite() {
            let mut sum = 0.0;
            for z in row.iter_mut() {
                *z = (*z - lse).exp();
                sum += *z;
            }
            for z in row.iter_mut() {
                *z /= sum;
            }
        } else {
            // every component underflowed; fall back to the prior weights
            row.copy_from_slice(params.weights());
        }
    }
    (Responsibilities { values, g }, total)
}

pub fn e_step(data: &[f64], params: &MixtureParams) -> Result<Responsibilities> {
    check_data(data)?;
    Ok(e_step_with_loglik(data, params).0)
}

fn check_shapes(data: &[f64], resp: &Responsibilities, g: usize) -> Result<()> {
    if resp.n_obs() != data.len() {
        return Err(Error::params("responsibilities and data differ in length"));
    }
    if resp.n_components() != g {
        return Err(Error::params(
            "responsibilities and parameters differ in component count",
        ));
    }
    Ok(())
}

/// Closed-form α and weight updates for fixed β:
/// `α_j² = Σ ẑ_ij (y_i/β_j + β_j/y_i − 2) / Σ ẑ_ij`, `p_j = Σ ẑ_ij / n`.
pub fn cm_step1(
    data: &[f64],
    resp: &Responsibilities,
    betas: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_shapes(data, resp, betas.len())?;
    let n = data.len() as f64;
    let mass = resp.column_sums();
    if let Some(j) = mass.iter().position(|&m| m < DEGENERATE_MASS) {
        return Err(Error::DegenerateComponent {
            component: j,
            mass: mass[j],
        });
    }
    let mut alphas = Vec::with_capacity(betas.len());
    for (j, &beta) in betas.iter().enumerate() {
        let ss: f64 = resp
            .column(j)
            .zip(data)
            .map(|(z, &y)| z * (y / beta + beta / y - 2.0))
            .sum();
        alphas.push((ss / mass[j]).max(0.0).sqrt().max(ALPHA_FLOOR));
    }
    let weights = mass.iter().map(|m| m / n).collect();
    Ok((alphas, weights))
}

/// Per-component objective maximized in CM-step 2,
/// `Σ_i ẑ_ij [−½ ln β + ln(y_i + β) − (y_i/β + β/y_i − 2)/(2α²)]`.
pub fn q_beta(data: &[f64], resp: &Responsibilities, j: usize, alpha: f64, beta: f64) -> f64 {
    let inv = 1.0 / (2.0 * alpha * alpha);
    let half_ln_beta = 0.5 * beta.ln();
    resp.column(j)
        .zip(data)
        .map(|(z, &y)| {
            if z == 0.0 {
                0.0
            } else {
                z * (-half_ln_beta + (y + beta).ln() - inv * (y / beta + beta / y - 2.0))
            }
        })
        .sum()
}

fn beta_bounds(data: &[f64]) -> (f64, f64) {
    let lo = data.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = data.iter().copied().fold(0.0, f64::max);
    (lo / 10.0, hi * 10.0)
}

fn maximize_beta(
    data: &[f64],
    resp: &Responsibilities,
    j: usize,
    alpha: f64,
    beta_prev: f64,
    factor: f64,
    bounds: (f64, f64),
) -> Result<f64> {
    let start = beta_prev.clamp(bounds.0, bounds.1);
    let neg_q = |b: f64| -q_beta(data, resp, j, alpha, b);
    for k in 1..=BRACKET_EXPANSIONS {
        let width = factor.powi(k);
        let lo = (start / width).max(bounds.0);
        let hi = (start * width).min(bounds.1);
        let m = brent_min(neg_q, lo, hi, BRENT_REL_TOL, BRENT_MAX_ITER);
        let at_lo = lo > bounds.0 && m.x - lo <= EDGE_REL * m.x;
        let at_hi = hi < bounds.1 && hi - m.x <= EDGE_REL * m.x;
        if !(at_lo || at_hi) {
            // generalized EM: never accept a step that lowers the objective
            return Ok(if m.fx <= neg_q(beta_prev) {
                m.x
            } else {
                beta_prev
            });
        }
    }
    Err(Error::BracketExhausted { component: j })
}

/// Maximizes the CM-step 2 objective over each β_j on a bracket around the
/// previous value. Components without responsibility mass keep their β.
pub fn cm_step2(
    data: &[f64],
    resp: &Responsibilities,
    alphas: &[f64],
    betas_prev: &[f64],
    bracket_factor: f64,
) -> Result<Vec<f64>> {
    check_shapes(data, resp, betas_prev.len())?;
    if alphas.len() != betas_prev.len() {
        return Err(Error::params("alpha and beta vectors differ in length"));
    }
    let bounds = beta_bounds(data);
    let mass = resp.column_sums();
    (0..betas_prev.len())
        .map(|j| {
            if mass[j] == 0.0 {
                Ok(betas_prev[j])
            } else {
                maximize_beta(
                    data,
                    resp,
                    j,
                    alphas[j],
                    betas_prev[j],
                    bracket_factor,
                    bounds,
                )
            }
        })
        .collect()
}

/// Aitken stopping rule. Returns the decision and the extrapolated limit
/// `ℓ∞ = ℓ_k + (ℓ_{k+1} − ℓ_k)/(1 − c)`, `c = (ℓ_{k+1} − ℓ_k)/(ℓ_k − ℓ_{k−1})`.
/// Falls back to `|ℓ_{k+1} − ℓ_k| < tol` when c ≥ 1 or the gap is ~0.
pub fn aitken_stop(l_prev2: f64, l_prev: f64, l_curr: f64, tol: f64) -> (bool, f64) {
    let gap_prev = l_prev - l_prev2;
    let gap = l_curr - l_prev;
    let tiny = f64::EPSILON * l_prev.abs().max(1.0);
    if gap_prev.abs() > tiny {
        let c = gap / gap_prev;
        if c < 1.0 {
            let l_inf = l_prev + gap / (1.0 - c);
            return ((l_curr - l_inf).abs() < tol, l_inf);
        }
    }
    (gap.abs() < tol, l_curr)
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Mean of the last (up to) three step ratios `‖θ_{t+1} − θ_t‖ / ‖θ_t − θ_{t−1}‖`.
/// Needs at least three vectors; a vanishing denominator gives 0.
pub fn convergence_rate(thetas: &[Vec<f64>]) -> Option<f64> {
    if thetas.len() < 3 {
        return None;
    }
    let steps: Vec<f64> = thetas.windows(2).map(|w| distance(&w[1], &w[0])).collect();
    let scale = thetas.last().map_or(1.0, |t| {
        t.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0)
    });
    let ratios: Vec<f64> = steps
        .windows(2)
        .rev()
        .take(3)
        .map(|w| {
            if w[0] <= 1e-15 * scale {
                0.0
            } else {
                w[1] / w[0]
            }
        })
        .collect();
    Some(ratios.iter().sum::<f64>() / ratios.len() as f64)
}

/// One full ECM cycle from `params`: E-step, CM-step 1, CM-step 2. Returns the
/// new parameters and the log-likelihood at the input parameters.
pub fn ecm_cycle(
    data: &[f64],
    params: &MixtureParams,
    bracket_factor: f64,
) -> Result<(MixtureParams, f64)> {
    check_data(data)?;
    let (resp, ll) = e_step_with_loglik(data, params);
    Ok((cycle_from(data, &resp, params, bracket_factor)?, ll))
}

fn cycle_from(
    data: &[f64],
    resp: &Responsibilities,
    params: &MixtureParams,
    bracket_factor: f64,
) -> Result<MixtureParams> {
    let betas = params.betas();
    let (alphas, weights) = cm_step1(data, resp, &betas)?;
    let betas = cm_step2(data, resp, &alphas, &betas, bracket_factor)?;
    MixtureParams::from_vectors(&weights, &alphas, &betas)
}

fn closing_step1(
    data: &[f64],
    resp: &Responsibilities,
    params: &MixtureParams,
) -> Result<MixtureParams> {
    let betas = params.betas();
    let (alphas, weights) = cm_step1(data, resp, &betas)?;
    MixtureParams::from_vectors(&weights, &alphas, &betas)
}

struct Run {
    params: MixtureParams,
    loglik: f64,
    trace: Vec<TraceEntry>,
    iterations: usize,
    converged: bool,
}

fn iterate(data: &[f64], start: &MixtureParams, config: &EmConfig) -> Result<Run> {
    let mut params = start.canonicalized();
    let (mut resp, mut ll) = e_step_with_loglik(data, &params);
    let mut trace = vec![TraceEntry {
        loglik: ll,
        theta: params.theta(),
    }];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < config.max_iter {
        params = cycle_from(data, &resp, &params, config.beta_bracket_factor)?;
        (resp, ll) = e_step_with_loglik(data, &params);
        if !ll.is_finite() {
            return Err(Error::FitFailed(format!(
                "log-likelihood became {ll} at iteration {}",
                iterations + 1
            )));
        }
        iterations += 1;
        trace.push(TraceEntry {
            loglik: ll,
            theta: params.theta(),
        });
        let k = trace.len();
        if k >= 3 && aitken_stop(trace[k - 3].loglik, trace[k - 2].loglik, ll, config.tol).0 {
            converged = true;
            break;
        }
    }
    // a closing CM-step 1 makes α and the weights exact for the final β
    let closed = closing_step1(data, &resp, &params)?;
    let closed_ll = loglik_unchecked(data, &closed);
    if closed_ll >= ll {
        params = closed;
        ll = closed_ll;
        trace.push(TraceEntry {
            loglik: ll,
            theta: params.theta(),
        });
    }
    Ok(Run {
        params,
        loglik: ll,
        trace,
        iterations,
        converged,
    })
}

fn finish(run: Run, init: InitStrategy, init_fallback: bool, restarted: bool) -> FitResult {
    let order = run.params.canonical_order();
    let params = run.params.permuted(&order);
    let thetas: Vec<Vec<f64>> = run.trace.iter().map(|t| t.theta.clone()).collect();
    FitResult {
        params,
        loglik: run.loglik,
        rate_r: convergence_rate(&thetas),
        trace: run.trace,
        iterations: run.iterations,
        converged: run.converged,
        init,
        init_fallback,
        restarted,
    }
}

fn check_fit_inputs(data: &[f64], g: usize, config: &EmConfig) -> Result<()> {
    config.validate()?;
    check_data(data)?;
    if g == 0 {
        return Err(Error::params("number of components must be at least 1"));
    }
    if data.len() < 3 * g {
        return Err(Error::params(format!(
            "{} observations are too few for {g} components (need at least {})",
            data.len(),
            3 * g
        )));
    }
    Ok(())
}

fn run_with_restart(
    data: &[f64],
    g: usize,
    start: MixtureParams,
    config: &EmConfig,
    init_fallback: bool,
) -> Result<FitResult> {
    match iterate(data, &start, config) {
        Ok(run) => Ok(finish(run, config.init, init_fallback, false)),
        Err(first @ Error::DegenerateComponent { .. }) => {
            let retry = moment_init(data, &quantile_partition(data, g)?)?;
            match iterate(data, &retry, config) {
                Ok(run) => Ok(finish(run, config.init, init_fallback, true)),
                Err(second) => Err(Error::FitFailed(format!(
                    "{first}; restart from the quantile split also failed: {second}"
                ))),
            }
        }
        Err(e) => Err(e),
    }
}

/// Fits a G-component mixture starting from the configured initialization.
pub fn fit(data: &[f64], g: usize, config: &EmConfig) -> Result<FitResult> {
    check_fit_inputs(data, g, config)?;
    let init = initialize(data, g, config.init, config.seed, config.bump_mode_alpha)?;
    run_with_restart(data, g, init.params, config, init.fallback)
}

/// Fits starting from a given hard partition.
pub fn fit_from_partition(
    data: &[f64],
    partition: &Partition,
    config: &EmConfig,
) -> Result<FitResult> {
    let g = partition.n_clusters();
    check_fit_inputs(data, g, config)?;
    run_with_restart(data, g, moment_init(data, partition)?, config, false)
}

/// Fits starting from explicit parameter values.
pub fn fit_from_params(
    data: &[f64],
    start: &MixtureParams,
    config: &EmConfig,
) -> Result<FitResult> {
    let g = start.n_components();
    check_fit_inputs(data, g, config)?;
    run_with_restart(data, g, start.clone(), config, false)
}

/// Convenience for a single BS fit.
pub fn fit_single(data: &[f64], config: &EmConfig) -> Result<BsParams> {
    Ok(fit(data, 1, config)?.params.components()[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mixture::mix_sample;
    use crate::normal::LN_SQRT_2PI;
    use crate::rng::stream;
    use rand::Rng;

    fn bs(a: f64, b: f64) -> BsParams {
        BsParams::new(a, b).unwrap()
    }

    #[test]
    fn loglik_examples() {
        let (a, b) = (0.4, 2.5);
        let p = MixtureParams::single(bs(a, b));
        let l = loglik(&[b], &p).unwrap();
        assert!((l + (a * b).ln() + LN_SQRT_2PI).abs() < 1e-14);

        let data = mix_sample(
            50,
            &MixtureParams::two_component(0.3, 0.2, 0.5, 1.0, 4.0).unwrap(),
            &mut stream(3),
        );
        let doubled: Vec<f64> = data.iter().chain(&data).copied().collect();
        let q = MixtureParams::two_component(0.5, 0.3, 0.3, 1.2, 3.0).unwrap();
        let ratio = loglik(&doubled, &q).unwrap() / loglik(&data, &q).unwrap();
        assert!((ratio - 2.0).abs() < 1e-13);
        assert!(loglik(&[1.0, -1.0], &q).is_err());
    }

    #[test]
    fn e_step_examples() {
        let data = [0.3, 1.0, 7.0];
        let r = e_step(&data, &MixtureParams::single(bs(0.5, 1.0))).unwrap();
        assert!(r.column(0).all(|z| z == 1.0));

        let same = MixtureParams::from_vectors(&[0.5, 0.5], &[0.3, 0.3], &[2.0, 2.0]).unwrap();
        let r = e_step(&data, &same).unwrap();
        assert!((0..3).all(|i| r.get(i, 0) == 0.5 && r.get(i, 1) == 0.5));

        // direct evaluation: f1(5) = 3.2636e-12, f2(5) = 0.319154
        let p = MixtureParams::two_component(0.5, 0.25, 0.25, 1.0, 5.0).unwrap();
        let r = e_step(&[5.0], &p).unwrap();
        assert!((r.get(0, 1) - 0.999_999_999_989_774_2).abs() < 1e-15);

        // far from every component: rows stay finite and normalized
        let r = e_step(&[1e-300, 1e300], &p).unwrap();
        for i in 0..2 {
            assert!(r.row(i).iter().all(|z| z.is_finite()));
            assert!((r.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cm_step1_examples() {
        let data = [1.0, 2.0, 3.0];
        let resp =
            Responsibilities::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        match cm_step1(&data, &resp, &[1.0, 2.0]) {
            Err(Error::DegenerateComponent { component, .. }) => assert_eq!(component, 1),
            other => panic!("expected degenerate component, got {other:?}"),
        }

        let resp = Responsibilities::from_rows(&[vec![1.0], vec![1.0]]).unwrap();
        let (alphas, weights) = cm_step1(&[2.0, 2.0], &resp, &[2.0]).unwrap();
        assert_eq!(alphas, vec![ALPHA_FLOOR]);
        assert_eq!(weights, vec![1.0]);

        let rows = vec![
            vec![0.2, 0.8],
            vec![0.6, 0.4],
            vec![0.9, 0.1],
            vec![0.5, 0.5],
        ];
        let resp = Responsibilities::from_rows(&rows).unwrap();
        let (_, w) = cm_step1(&[1.0, 2.0, 3.0, 4.0], &resp, &[1.5, 3.0]).unwrap();
        assert!((w[0] - 0.55).abs() < 1e-15 && (w[1] - 0.45).abs() < 1e-15);
    }

    #[test]
    fn cm_step2_matches_grid_argmax() {
        let (y, alpha) = (2.0, 0.5);
        let resp = Responsibilities::from_rows(&[vec![1.0]]).unwrap();
        let b = cm_step2(&[y], &resp, &[alpha], &[1.5], 4.0).unwrap()[0];
        let (lo, hi) = (y / 10.0, y * 10.0);
        let n = 1_000_000;
        let step = (hi - lo) / n as f64;
        let objective =
            |b: f64| -0.5 * b.ln() + (y + b).ln() - (y / b + b / y - 2.0) / (2.0 * alpha * alpha);
        let grid_best = (0..=n)
            .map(|i| lo + i as f64 * step)
            .max_by(|a, c| objective(*a).total_cmp(&objective(*c)))
            .unwrap();
        assert!((b - grid_best).abs() <= step, "{b} vs {grid_best}");
    }

    #[test]
    fn cm_step2_keeps_empty_components() {
        let data = [1.0, 1.5, 2.0];
        let resp =
            Responsibilities::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        let b = cm_step2(&data, &resp, &[0.3, 0.3], &[1.2, 9.0], 4.0).unwrap();
        assert_eq!(b[1], 9.0);
    }

    #[test]
    fn cm_step2_never_lowers_q() {
        let mut rng = stream(11);
        for _ in 0..100 {
            let g = rng.random_range(1..=3);
            let n = rng.random_range(5..40);
            let data: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..10.0)).collect();
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let raw: Vec<f64> = (0..g).map(|_| rng.random_range(0.01..1.0)).collect();
                    let s: f64 = raw.iter().sum();
                    raw.iter().map(|r| r / s).collect()
                })
                .collect();
            let resp = Responsibilities::from_rows(&rows).unwrap();
            let alphas: Vec<f64> = (0..g).map(|_| rng.random_range(0.1..2.0)).collect();
            let prev: Vec<f64> = (0..g).map(|_| rng.random_range(0.2..9.0)).collect();
            let next = cm_step2(&data, &resp, &alphas, &prev, 4.0).unwrap();
            for j in 0..g {
                let before = q_beta(&data, &resp, j, alphas[j], prev[j]);
                let after = q_beta(&data, &resp, j, alphas[j], next[j]);
                assert!(after >= before - 1e-12);
            }
        }
    }

    #[test]
    fn aitken_examples() {
        let (stop, l_inf) = aitken_stop(-100.0, -90.0, -85.0, 1e-6);
        assert!(!stop);
        assert!((l_inf + 80.0).abs() < 1e-12);

        assert!(aitken_stop(-5.0, -5.0, -5.0, 1e-6).0);

        let (stop, l_inf) = aitken_stop(0.0, 1.0, 1.1, 1e-6);
        assert!(!stop);
        assert!((l_inf - (1.0 + 0.1 / 0.9)).abs() < 1e-12);
        assert!(((1.1 - l_inf).abs() - 0.011_111_111_111_111).abs() < 1e-12);
    }

    #[test]
    fn convergence_rate_examples() {
        let star = [0.3, 1.0, -2.0];
        let v = [1.0, 0.5, -0.25];
        let trace: Vec<Vec<f64>> = (0..12)
            .map(|t| {
                star.iter()
                    .zip(&v)
                    .map(|(s, d)| s + 0.5f64.powi(t) * d)
                    .collect()
            })
            .collect();
        assert!((convergence_rate(&trace).unwrap() - 0.5).abs() < 1e-10);
        assert_eq!(convergence_rate(&vec![star.to_vec(); 5]), Some(0.0));
        assert_eq!(convergence_rate(&trace[..2]), None);
    }

    #[test]
    fn single_component_profile_identity() {
        let data = crate::bs::bs_sample(400, &bs(0.6, 3.0), &mut stream(5));
        let fit = fit(&data, 1, &EmConfig::default()).unwrap();
        assert!(fit.converged);
        let c = fit.params.components()[0];
        let b = c.beta();
        let a2 = data.iter().map(|y| y / b + b / y - 2.0).sum::<f64>() / data.len() as f64;
        assert!((c.alpha() * c.alpha() - a2).abs() < 1e-8);
    }

    #[test]
    fn trace_is_ascending_and_fixed_point_holds() {
        let truth = MixtureParams::two_component(0.6, 0.25, 0.5, 0.5, 1.5).unwrap();
        let data = mix_sample(300, &truth, &mut stream(21));
        let cfg = EmConfig::default();
        let fit = fit(&data, 2, &cfg).unwrap();
        for w in fit.trace.windows(2) {
            assert!(w[1].loglik >= w[0].loglik - 1e-10);
        }
        assert!(fit.iterations <= cfg.max_iter);
        assert!(fit.params.betas()[0] <= fit.params.betas()[1]);
        let (next, _) = ecm_cycle(&data, &fit.params, cfg.beta_bracket_factor).unwrap();
        let moved = loglik(&data, &next).unwrap() - fit.loglik;
        assert!(moved.abs() < 10.0 * cfg.tol, "moved {moved}");
    }

    #[test]
    fn permuted_partition_gives_identical_fit() {
        let truth = MixtureParams::two_component(0.8, 0.25, 0.25, 1.0, 5.0).unwrap();
        let data = mix_sample(200, &truth, &mut stream(8));
        let part = quantile_partition(&data, 2).unwrap();
        let swapped = part.relabeled(&[1, 0]).unwrap();
        let cfg = EmConfig::default();
        let a = fit_from_partition(&data, &part, &cfg).unwrap();
        let b = fit_from_partition(&data, &swapped, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_small_samples_and_bad_config() {
        assert!(fit(&[1.0, 2.0, 3.0, 4.0, 5.0], 2, &EmConfig::default()).is_err());
        let cfg = EmConfig {
            tol: 0.0,
            ..EmConfig::default()
        };
        assert!(fit(&[1.0, 2.0, 3.0], 1, &cfg).is_err());
    }
}
