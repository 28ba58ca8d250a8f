//! Monte Carlo studies of estimator behaviour.
//!
//! A cell is one (scenario, n, strategy) combination. Each replicate draws a
//! sample from the scenario truth, fits it, matches fitted components to true
//! ones by β and records estimates and information-based standard errors.
//! Data seeds depend on the scenario, n and replicate index only, so every
//! strategy in a grid sees the same samples.

use crate::em::{fit, EmConfig};
use crate::error::{Error, Result};
use crate::inference::{info_matrix, standard_errors, wald_ci, MAX_FAILURE_SHARE};
use crate::init::InitStrategy;
use crate::mixture::{mix_sample, MixtureParams};
use crate::rng::{derive_seed, label_tag, stream};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Separation {
    /// poorly separated
    PS,
    /// well separated
    WS,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub label: String,
    pub separation: Separation,
    pub truth: MixtureParams,
}

impl Scenario {
    pub fn new(label: impl Into<String>, separation: Separation, truth: MixtureParams) -> Self {
        Self {
            label: label.into(),
            separation,
            truth,
        }
    }

    /// Poorly separated: `(p₁, α₁, α₂, β₁, β₂) = (0.6, 0.25, 0.5, 0.5, 1.5)`.
    pub fn scenario1() -> Self {
        let truth = MixtureParams::two_component(0.6, 0.25, 0.5, 0.5, 1.5).expect("valid truth");
        Self::new("scenario1", Separation::PS, truth)
    }

    /// Well separated: `(0.8, 0.25, 0.25, 1.0, 5.0)`.
    pub fn scenario2() -> Self {
        let truth = MixtureParams::two_component(0.8, 0.25, 0.25, 1.0, 5.0).expect("valid truth");
        Self::new("scenario2", Separation::WS, truth)
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "1" | "scenario1" | "ps" => Ok(Self::scenario1()),
            "2" | "scenario2" | "ws" => Ok(Self::scenario2()),
            other => Err(Error::params(format!("unknown scenario '{other}'"))),
        }
    }
}

/// Fitting procedure under study.
pub trait Estimator: Sync {
    fn estimate(&self, data: &[f64], g: usize, seed: u64) -> Result<MixtureParams>;

    /// Standard errors of the free parameter vector at `params`.
    fn standard_errors(&self, data: &[f64], params: &MixtureParams) -> Result<Vec<f64>>;
}

/// ECM with information-matrix standard errors.
#[derive(Debug, Clone, Copy)]
pub struct EcmEstimator {
    pub config: EmConfig,
}

impl Estimator for EcmEstimator {
    fn estimate(&self, data: &[f64], g: usize, seed: u64) -> Result<MixtureParams> {
        let cfg = EmConfig {
            seed,
            ..self.config
        };
        Ok(fit(data, g, &cfg)?.params)
    }

    fn standard_errors(&self, data: &[f64], params: &MixtureParams) -> Result<Vec<f64>> {
        standard_errors(&info_matrix(data, params)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamSummary {
    pub name: String,
    pub truth: f64,
    pub mean: f64,
    pub bias: f64,
    pub rmse: f64,
    pub mc_sd: f64,
    pub mean_im_se: f64,
    pub cov: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub scenario: String,
    pub n: usize,
    pub replicates: usize,
    pub strategy: String,
    pub failures: usize,
    /// More than 10% of replicates failed.
    pub unreliable: bool,
    pub params: Vec<ParamSummary>,
}

impl SimulationReport {
    pub fn param(&self, name: &str) -> Option<&ParamSummary> {
        self.params.iter().find(|p| p.name == name)
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for rest in permutations(k - 1) {
        for pos in 0..=rest.len() {
            let mut p = rest.clone();
            p.insert(pos, k - 1);
            out.push(p);
        }
    }
    out
}

/// Reorders fitted components so that `Σ_j |β̂_j − β_j|` against the truth is
/// minimal. `order[j]` is the fitted component assigned to true component j.
pub fn match_to_truth(fitted: &MixtureParams, truth: &MixtureParams) -> Vec<usize> {
    let fb = fitted.betas();
    let tb = truth.betas();
    let cost = |p: &[usize]| -> f64 { p.iter().zip(&tb).map(|(&i, t)| (fb[i] - t).abs()).sum() };
    permutations(fb.len())
        .into_iter()
        .min_by(|a, b| cost(a).total_cmp(&cost(b)).then(a.cmp(b)))
        .expect("at least one permutation")
}

struct Replicate {
    theta: Vec<f64>,
    ses: Vec<f64>,
}

fn run_replicate(
    scenario: &Scenario,
    n: usize,
    rep: u64,
    strategy_tag: u64,
    estimator: &dyn Estimator,
    master_seed: u64,
) -> Result<Replicate> {
    let tag = label_tag(&scenario.label);
    let data_seed = derive_seed(master_seed, &[tag, n as u64, rep]);
    let fit_seed = derive_seed(master_seed, &[tag, n as u64, rep, strategy_tag]);
    let data = mix_sample(n, &scenario.truth, &mut stream(data_seed));
    let g = scenario.truth.n_components();
    let fitted = estimator.estimate(&data, g, fit_seed)?;
    if fitted.n_components() != g {
        return Err(Error::FitFailed(
            "estimator returned the wrong number of components".into(),
        ));
    }
    let matched = fitted.permuted(&match_to_truth(&fitted, &scenario.truth));
    let ses = estimator.standard_errors(&data, &matched)?;
    Ok(Replicate {
        theta: matched.theta(),
        ses,
    })
}

fn summarize(names: &[String], truth: &[f64], reps: &[Replicate]) -> Result<Vec<ParamSummary>> {
    let m = reps.len() as f64;
    let mut out = Vec::with_capacity(truth.len());
    for (i, (name, &t)) in names.iter().zip(truth).enumerate() {
        let est: Vec<f64> = reps.iter().map(|r| r.theta[i]).collect();
        let mean = est.iter().sum::<f64>() / m;
        let mse = est.iter().map(|e| (e - t).powi(2)).sum::<f64>() / m;
        let var = if reps.len() > 1 {
            est.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        let mean_im_se = reps.iter().map(|r| r.ses[i]).sum::<f64>() / m;
        let mut covered = 0usize;
        for r in reps {
            let ci = wald_ci(&[r.theta[i]], &[r.ses[i]], 0.95)?[0];
            covered += usize::from(ci.0 <= t && t <= ci.1);
        }
        out.push(ParamSummary {
            name: name.clone(),
            truth: t,
            mean,
            bias: mean - t,
            rmse: mse.sqrt(),
            mc_sd: var.sqrt(),
            mean_im_se,
            cov: covered as f64 / m,
        });
    }
    Ok(out)
}

/// Runs one cell with an arbitrary estimator. `strategy` only labels the
/// report and perturbs the fitting seed; data seeds ignore it.
pub fn run_cell_with(
    scenario: &Scenario,
    n: usize,
    replicates: usize,
    strategy: &str,
    estimator: &dyn Estimator,
    master_seed: u64,
) -> Result<SimulationReport> {
    if replicates < 10 {
        return Err(Error::params(format!(
            "a cell needs at least 10 replicates, got {replicates}"
        )));
    }
    let g = scenario.truth.n_components();
    if n < 3 * g {
        return Err(Error::params(format!(
            "sample size {n} is too small for {g} components"
        )));
    }
    let strategy_tag = label_tag(strategy);
    let results: Vec<Result<Replicate>> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| run_replicate(scenario, n, rep, strategy_tag, estimator, master_seed))
        .collect();
    let reps: Vec<Replicate> = results.into_iter().filter_map(Result::ok).collect();
    let failures = replicates - reps.len();
    if reps.is_empty() {
        return Err(Error::TooManyFailures {
            failed: failures,
            total: replicates,
        });
    }
    let names = MixtureParams::theta_names(g);
    let params = summarize(&names, &scenario.truth.theta(), &reps)?;
    Ok(SimulationReport {
        scenario: scenario.label.clone(),
        n,
        replicates,
        strategy: strategy.to_string(),
        failures,
        unreliable: failures as f64 > MAX_FAILURE_SHARE * replicates as f64,
        params,
    })
}

/// Runs one cell with ECM under the given initialization strategy.
pub fn run_cell(
    scenario: &Scenario,
    n: usize,
    replicates: usize,
    strategy: InitStrategy,
    config: &EmConfig,
    master_seed: u64,
) -> Result<SimulationReport> {
    let estimator = EcmEstimator {
        config: EmConfig {
            init: strategy,
            ..*config
        },
    };
    run_cell_with(
        scenario,
        n,
        replicates,
        strategy.as_str(),
        &estimator,
        master_seed,
    )
}

/// Cartesian product of scenarios × sample sizes × strategies, in that order.
pub fn run_grid(
    scenarios: &[Scenario],
    ns: &[usize],
    strategies: &[InitStrategy],
    replicates: usize,
    config: &EmConfig,
    master_seed: u64,
) -> Result<Vec<SimulationReport>> {
    let mut out = Vec::with_capacity(scenarios.len() * ns.len() * strategies.len());
    for scenario in scenarios {
        for &n in ns {
            for &strategy in strategies {
                out.push(run_cell(
                    scenario,
                    n,
                    replicates,
                    strategy,
                    config,
                    master_seed,
                )?);
            }
        }
    }
    Ok(out)
}
