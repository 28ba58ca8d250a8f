use crate::error::CliError;
use crate::input::{parse_params, read_data};
use crate::output::{csv_text, emit, json_document, real, table_text, RunManifest};
use crate::{FitArgs, Format, OutputArgs};
use bsmix::bs::bs_quantile;
use bsmix::em::{fit as fit_mixture, EmConfig, FitResult};
use bsmix::inference::{
    aic_bic, bootstrap_lrt, bootstrap_se, info_matrix, standard_errors, wald_ci, BootstrapSe,
};
use bsmix::mixture::{
    mix_cdf, mix_hazard, mix_pdf, mix_sample_labeled, mix_survival, stress_strength,
};
use bsmix::rng::stream;
use bsmix::study::{run_cell, Scenario, SimulationReport};
use bsmix::{InitStrategy, MixtureParams};
use chrono::Utc;
use serde::Serialize;
use serde_json::json;
use std::path::Path;

fn validated(fit: &FitArgs, seed: u64) -> Result<EmConfig, CliError> {
    let cfg = fit.config(seed);
    cfg.validate().map_err(|e| CliError::input(e.to_string()))?;
    Ok(cfg)
}

fn bad_request(e: bsmix::Error) -> CliError {
    match e {
        bsmix::Error::InvalidParams(_) | bsmix::Error::Domain(_) | bsmix::Error::Unsupported(_) => {
            CliError::input(e.to_string())
        }
        other => CliError::Numerical(other),
    }
}

/// Serializes `result` as JSON, or renders `rows` as CSV or a table.
#[allow(clippy::too_many_arguments)]
fn finish(
    out: &OutputArgs,
    default: Format,
    manifest: &RunManifest,
    result: impl Serialize,
    preamble: &str,
    header: &[&str],
    rows: &[Vec<String>],
) -> Result<(), CliError> {
    let format = out.format.unwrap_or(default);
    let body = match format {
        Format::Json => json_document(manifest, result)?,
        Format::Csv => csv_text(header, rows)?,
        Format::Table => format!("{preamble}{}", table_text(header, rows)),
    };
    emit(
        &body,
        out.output.as_deref(),
        manifest,
        format == Format::Json,
    )
}

fn opt(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

#[derive(Debug, Serialize)]
struct ParamRow {
    name: String,
    estimate: f64,
    se: Option<f64>,
    ci_lower: Option<f64>,
    ci_upper: Option<f64>,
    bootstrap_se: Option<f64>,
    bootstrap_lower: Option<f64>,
    bootstrap_upper: Option<f64>,
}

#[derive(Debug, Serialize)]
struct FitReport {
    n: usize,
    components: usize,
    weights: Vec<f64>,
    alphas: Vec<f64>,
    betas: Vec<f64>,
    parameters: Vec<ParamRow>,
    loglik: f64,
    aic: f64,
    bic: f64,
    iterations: usize,
    converged: bool,
    rate_r: Option<f64>,
    init: InitStrategy,
    init_fallback: bool,
    restarted: bool,
    information_centered: Option<bool>,
    se_error: Option<String>,
    bootstrap: Option<BootstrapSe>,
    seed: u64,
}

fn fit_report(data: &[f64], f: &FitResult, boot: Option<BootstrapSe>, seed: u64) -> FitReport {
    let theta = f.params.theta();
    let g = f.params.n_components();
    let (ses, centered, se_error) =
        match info_matrix(data, &f.params).and_then(|i| Ok((standard_errors(&i)?, i.centered))) {
            Ok((s, c)) => (Some(s), Some(c), None),
            Err(e) => (None, None, Some(e.to_string())),
        };
    let cis = ses.as_ref().and_then(|s| wald_ci(&theta, s, 0.95).ok());
    let parameters = MixtureParams::theta_names(g)
        .into_iter()
        .enumerate()
        .map(|(i, name)| ParamRow {
            name,
            estimate: theta[i],
            se: ses.as_ref().map(|s| s[i]),
            ci_lower: cis.as_ref().map(|c| c[i].0),
            ci_upper: cis.as_ref().map(|c| c[i].1),
            bootstrap_se: boot.as_ref().map(|b| b.ses[i]),
            bootstrap_lower: boot.as_ref().map(|b| b.cis[i].0),
            bootstrap_upper: boot.as_ref().map(|b| b.cis[i].1),
        })
        .collect();
    let (aic, bic) = aic_bic(f.loglik, f.params.n_free_params(), data.len());
    FitReport {
        n: data.len(),
        components: g,
        weights: f.params.weights().to_vec(),
        alphas: f.params.alphas(),
        betas: f.params.betas(),
        parameters,
        loglik: f.loglik,
        aic,
        bic,
        iterations: f.iterations,
        converged: f.converged,
        rate_r: f.rate_r,
        init: f.init,
        init_fallback: f.init_fallback,
        restarted: f.restarted,
        information_centered: centered,
        se_error,
        bootstrap: boot,
        seed,
    }
}

pub fn fit(
    input: &Path,
    g: usize,
    bootstrap: Option<usize>,
    args: &FitArgs,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let started = Utc::now();
    let data = read_data(input)?;
    let cfg = validated(args, out.seed)?;
    let f = fit_mixture(&data, g, &cfg).map_err(bad_request)?;
    let boot = bootstrap
        .map(|b| bootstrap_se(&data, &f, b, &cfg, out.seed))
        .transpose()?;
    let report = fit_report(&data, &f, boot, out.seed);
    let manifest = RunManifest::new(
        "fit",
        Some(input),
        json!({ "components": g, "bootstrap": bootstrap, "em": cfg }),
        out.seed,
        started,
    );
    let header = [
        "parameter",
        "estimate",
        "se",
        "ci_lower",
        "ci_upper",
        "bootstrap_se",
        "bootstrap_lower",
        "bootstrap_upper",
    ];
    let rows: Vec<Vec<String>> = report
        .parameters
        .iter()
        .map(|p| {
            vec![
                p.name.clone(),
                real(p.estimate),
                opt(p.se),
                opt(p.ci_lower),
                opt(p.ci_upper),
                opt(p.bootstrap_se),
                opt(p.bootstrap_lower),
                opt(p.bootstrap_upper),
            ]
        })
        .collect();
    let mut preamble = format!(
        "n = {}, G = {}, init = {}{}\nloglik = {}  AIC = {}  BIC = {}\niterations = {} (converged: {})  r = {}\n",
        report.n,
        g,
        report.init,
        if report.init_fallback { " (quantile fallback)" } else { "" },
        real(report.loglik),
        real(report.aic),
        real(report.bic),
        report.iterations,
        report.converged,
        report.rate_r.map(real).unwrap_or_else(|| "n/a".into()),
    );
    if let Some(e) = &report.se_error {
        preamble += &format!("standard errors unavailable: {e}\n");
    }
    preamble += "\n";
    finish(
        out,
        Format::Table,
        &manifest,
        &report,
        &preamble,
        &header,
        &rows,
    )
}

#[derive(Debug, Serialize)]
struct SelectRow {
    components: usize,
    status: String,
    loglik: Option<f64>,
    aic: Option<f64>,
    bic: Option<f64>,
    iterations: Option<usize>,
    converged: Option<bool>,
    rate_r: Option<f64>,
    best_aic: bool,
    best_bic: bool,
}

#[derive(Debug, Serialize)]
struct SelectReport {
    n: usize,
    rows: Vec<SelectRow>,
    warnings: Vec<String>,
}

fn argmin(rows: &[SelectRow], key: impl Fn(&SelectRow) -> Option<f64>) -> Option<usize> {
    rows.iter()
        .enumerate()
        .filter_map(|(i, r)| key(r).map(|v| (i, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
}

pub fn select(
    input: &Path,
    g_min: usize,
    g_max: usize,
    args: &FitArgs,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let started = Utc::now();
    if g_min == 0 || g_min > g_max {
        return Err(CliError::input(format!(
            "invalid component range {g_min}..={g_max}"
        )));
    }
    let data = read_data(input)?;
    let cfg = validated(args, out.seed)?;
    let mut rows = Vec::new();
    for g in g_min..=g_max {
        let row = match fit_mixture(&data, g, &cfg) {
            Ok(f) => {
                let (aic, bic) = aic_bic(f.loglik, f.params.n_free_params(), data.len());
                SelectRow {
                    components: g,
                    status: "ok".into(),
                    loglik: Some(f.loglik),
                    aic: Some(aic),
                    bic: Some(bic),
                    iterations: Some(f.iterations),
                    converged: Some(f.converged),
                    rate_r: f.rate_r,
                    best_aic: false,
                    best_bic: false,
                }
            }
            Err(e) => SelectRow {
                components: g,
                status: format!("failed: {e}"),
                loglik: None,
                aic: None,
                bic: None,
                iterations: None,
                converged: None,
                rate_r: None,
                best_aic: false,
                best_bic: false,
            },
        };
        rows.push(row);
    }
    if let Some(i) = argmin(&rows, |r| r.aic) {
        rows[i].best_aic = true;
    }
    if let Some(i) = argmin(&rows, |r| r.bic) {
        rows[i].best_bic = true;
    }
    let mut warnings = Vec::new();
    for w in rows.windows(2) {
        if let (Some(a), Some(b)) = (w[0].loglik, w[1].loglik) {
            if a > b + 1e-6 {
                warnings.push(format!(
                    "loglik decreases from G={} to G={} ({} > {}); the larger fit is likely a local optimum",
                    w[0].components,
                    w[1].components,
                    real(a),
                    real(b)
                ));
            }
        }
    }
    for w in &warnings {
        eprintln!("bsmix: warning: {w}");
    }
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    let total = rows.len();
    let report = SelectReport {
        n: data.len(),
        rows,
        warnings,
    };
    let manifest = RunManifest::new(
        "select",
        Some(input),
        json!({ "g_min": g_min, "g_max": g_max, "em": cfg }),
        out.seed,
        started,
    );
    let header = [
        "G",
        "status",
        "loglik",
        "aic",
        "bic",
        "iterations",
        "converged",
        "r",
        "best_aic",
        "best_bic",
    ];
    let table: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|r| {
            vec![
                r.components.to_string(),
                r.status.clone(),
                opt(r.loglik),
                opt(r.aic),
                opt(r.bic),
                r.iterations.map(|i| i.to_string()).unwrap_or_default(),
                r.converged.map(|c| c.to_string()).unwrap_or_default(),
                opt(r.rate_r),
                if r.best_aic {
                    "*".into()
                } else {
                    String::new()
                },
                if r.best_bic {
                    "*".into()
                } else {
                    String::new()
                },
            ]
        })
        .collect();
    let preamble = format!("n = {}\n\n", report.n);
    finish(
        out,
        Format::Table,
        &manifest,
        &report,
        &preamble,
        &header,
        &table,
    )?;
    match failed {
        0 => Ok(()),
        f if f == total => Err(CliError::Numerical(bsmix::Error::FitFailed(
            "every fit in the sweep failed".into(),
        ))),
        f => Err(CliError::Partial(format!(
            "{f} of {total} fits in the sweep failed"
        ))),
    }
}

pub fn lrt(
    input: &Path,
    g_null: usize,
    g_alt: usize,
    b: usize,
    args: &FitArgs,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let started = Utc::now();
    let data = read_data(input)?;
    let cfg = validated(args, out.seed)?;
    let result = bootstrap_lrt(&data, g_null, g_alt, b, &cfg, out.seed).map_err(bad_request)?;
    let manifest = RunManifest::new(
        "lrt",
        Some(input),
        json!({ "g_null": g_null, "g_alt": g_alt, "bootstrap": b, "em": cfg }),
        out.seed,
        started,
    );
    let header = [
        "g_null",
        "g_alt",
        "loglik_null",
        "loglik_alt",
        "statistic",
        "p_value",
        "replicates",
        "floored",
        "failed",
    ];
    let rows = vec![vec![
        g_null.to_string(),
        g_alt.to_string(),
        real(result.loglik_null),
        real(result.loglik_alt),
        real(result.stat_obs),
        real(result.p_value),
        result.b.to_string(),
        result.floored.to_string(),
        result.failed.to_string(),
    ]];
    finish(out, Format::Json, &manifest, &result, "", &header, &rows)
}

#[derive(Debug, Clone, Copy)]
pub struct GridSpec {
    pub from: Option<f64>,
    pub to: Option<f64>,
    pub points: usize,
    pub log: bool,
}

impl GridSpec {
    /// Defaults span the 0.1% quantile of the lowest component to the 99.9%
    /// quantile of the highest.
    fn resolve(&self, m: &MixtureParams) -> Result<Vec<f64>, CliError> {
        let lo = match self.from {
            Some(v) => v,
            None => m
                .components()
                .iter()
                .map(|c| bs_quantile(0.001, c))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min),
        };
        let hi = match self.to {
            Some(v) => v,
            None => m
                .components()
                .iter()
                .map(|c| bs_quantile(0.999, c))
                .collect::<Result<Vec<_>, _>>()?
                .into_iter()
                .fold(0.0, f64::max),
        };
        if self.points == 0 {
            return Err(CliError::input("grid needs at least one point"));
        }
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(CliError::input(format!("invalid grid range [{lo}, {hi}]")));
        }
        if self.points == 1 {
            return Ok(vec![lo]);
        }
        let k = (self.points - 1) as f64;
        Ok((0..self.points)
            .map(|i| {
                let t = i as f64 / k;
                if self.log {
                    (lo.ln() + t * (hi.ln() - lo.ln())).exp()
                } else {
                    lo + t * (hi - lo)
                }
            })
            .collect())
    }
}

#[derive(Debug, Serialize)]
struct CurveRow {
    y: f64,
    pdf: f64,
    cdf: f64,
    sf: f64,
    hf: f64,
}

pub fn curves(
    params: Option<&str>,
    input: Option<&Path>,
    g: usize,
    grid: &GridSpec,
    args: &FitArgs,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let started = Utc::now();
    let (m, fitted_from) = match (params, input) {
        (Some(s), _) => (parse_params(s)?, None),
        (None, Some(path)) => {
            let data = read_data(path)?;
            let cfg = validated(args, out.seed)?;
            (
                fit_mixture(&data, g, &cfg).map_err(bad_request)?.params,
                Some(cfg),
            )
        }
        (None, None) => return Err(CliError::input("give --params or --input")),
    };
    let ys = grid.resolve(&m)?;
    let rows = ys
        .iter()
        .map(|&y| {
            Ok(CurveRow {
                y,
                pdf: mix_pdf(y, &m)?,
                cdf: mix_cdf(y, &m)?,
                sf: mix_survival(y, &m)?,
                hf: mix_hazard(y, &m)?,
            })
        })
        .collect::<Result<Vec<_>, bsmix::Error>>()?;
    let manifest = RunManifest::new(
        "curves",
        input,
        json!({
            "params": m,
            "fit": fitted_from,
            "grid": { "from": ys[0], "to": ys[ys.len() - 1], "points": grid.points, "log": grid.log },
        }),
        out.seed,
        started,
    );
    let table: Vec<Vec<String>> = rows
        .iter()
        .map(|r| vec![real(r.y), real(r.pdf), real(r.cdf), real(r.sf), real(r.hf)])
        .collect();
    finish(
        out,
        Format::Csv,
        &manifest,
        &rows,
        "",
        &["y", "pdf", "cdf", "sf", "hf"],
        &table,
    )
}

pub fn simulate(
    params: Option<&str>,
    scenario: Option<&str>,
    n: usize,
    labels: bool,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let started = Utc::now();
    let m = match (params, scenario) {
        (Some(s), _) => parse_params(s)?,
        (None, Some(name)) => {
            Scenario::by_name(name)
                .map_err(|e| CliError::input(e.to_string()))?
                .truth
        }
        (None, None) => return Err(CliError::input("give --params or --scenario")),
    };
    if n == 0 {
        return Err(CliError::input("sample size must be positive"));
    }
    let (ys, comps) = mix_sample_labeled(n, &m, &mut stream(out.seed));
    let manifest = RunManifest::new(
        "simulate",
        None,
        json!({ "params": m, "n": n }),
        out.seed,
        started,
    );
    let header: &[&str] = if labels { &["y", "component"] } else { &["y"] };
    let rows: Vec<Vec<String>> = ys
        .iter()
        .zip(&comps)
        .map(|(y, c)| {
            let mut row = vec![real(*y)];
            if labels {
                row.push(c.to_string());
            }
            row
        })
        .collect();
    let result = if labels {
        json!({ "y": ys, "component": comps })
    } else {
        json!({ "y": ys })
    };
    finish(out, Format::Csv, &manifest, result, "", header, &rows)
}

#[derive(Debug, Serialize)]
struct StudyReport {
    cells: Vec<SimulationReport>,
    failed_cells: Vec<String>,
}

pub fn study(
    scenarios: &[String],
    sizes: &[usize],
    strategies: &[InitStrategy],
    replicates: usize,
    config: EmConfig,
    out: &OutputArgs,
) -> Result<(), CliError> {
    let started = Utc::now();
    config
        .validate()
        .map_err(|e| CliError::input(e.to_string()))?;
    if replicates < 10 {
        return Err(CliError::input(
            "a study needs at least 10 replicates per cell",
        ));
    }
    let scenarios = scenarios
        .iter()
        .map(|s| Scenario::by_name(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::input(e.to_string()))?;
    let mut cells = Vec::new();
    let mut failed_cells = Vec::new();
    for sc in &scenarios {
        for &n in sizes {
            for &strategy in strategies {
                match run_cell(sc, n, replicates, strategy, &config, out.seed) {
                    Ok(cell) => cells.push(cell),
                    Err(e) => failed_cells.push(format!("{} n={n} {strategy}: {e}", sc.label)),
                }
            }
        }
    }
    let unreliable = cells.iter().filter(|c| c.unreliable).count();
    let manifest = RunManifest::new(
        "study",
        None,
        json!({
            "scenarios": scenarios,
            "sizes": sizes,
            "strategies": strategies,
            "replicates": replicates,
            "em": config,
        }),
        out.seed,
        started,
    );
    let header = [
        "scenario",
        "n",
        "strategy",
        "replicates",
        "failures",
        "unreliable",
        "parameter",
        "truth",
        "mean",
        "bias",
        "rmse",
        "mc_sd",
        "im_se",
        "cov",
    ];
    let mut rows = Vec::new();
    for c in &cells {
        for p in &c.params {
            rows.push(vec![
                c.scenario.clone(),
                c.n.to_string(),
                c.strategy.clone(),
                c.replicates.to_string(),
                c.failures.to_string(),
                c.unreliable.to_string(),
                p.name.clone(),
                real(p.truth),
                real(p.mean),
                real(p.bias),
                real(p.rmse),
                real(p.mc_sd),
                real(p.mean_im_se),
                real(p.cov),
            ]);
        }
    }
    for f in &failed_cells {
        eprintln!("bsmix: cell failed: {f}");
    }
    let report = StudyReport {
        cells,
        failed_cells,
    };
    finish(out, Format::Csv, &manifest, &report, "", &header, &rows)?;
    let bad = unreliable + report.failed_cells.len();
    if bad > 0 {
        return Err(CliError::Partial(format!(
            "{bad} cell(s) failed or unreliable"
        )));
    }
    Ok(())
}

pub fn reliability(strength: &str, stress: &str, out: &OutputArgs) -> Result<(), CliError> {
    let started = Utc::now();
    let x = parse_params(strength)?;
    let y = parse_params(stress)?;
    let r = stress_strength(&x, &y)?;
    let manifest = RunManifest::new(
        "reliability",
        None,
        json!({ "strength": x, "stress": y }),
        out.seed,
        started,
    );
    let result = json!({ "r": r });
    finish(
        out,
        Format::Json,
        &manifest,
        result,
        "",
        &["r"],
        &[vec![real(r)]],
    )
}
