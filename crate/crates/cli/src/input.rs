//! Data files and parameter strings.

use crate::error::CliError;
use bsmix::MixtureParams;
use std::path::Path;

/// Parses a one-column data set. A single non-numeric first line is taken as a
/// header; blank lines are skipped. Every other line must hold one positive
/// finite number.
pub fn parse_data(text: &str) -> Result<Vec<f64>, CliError> {
    let mut values = Vec::new();
    let mut bad = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim().trim_matches('"').trim();
        if line.is_empty() {
            continue;
        }
        match line.parse::<f64>() {
            Ok(v) if v.is_finite() && v > 0.0 => values.push(v),
            Ok(_) => bad.push(idx + 1),
            Err(_) if idx == 0 => {}
            Err(_) => bad.push(idx + 1),
        }
    }
    if !bad.is_empty() {
        let shown: Vec<String> = bad.iter().take(20).map(|l| l.to_string()).collect();
        let more = if bad.len() > 20 {
            format!(" (and {} more)", bad.len() - 20)
        } else {
            String::new()
        };
        return Err(CliError::input(format!(
            "non-numeric or non-positive values on line(s) {}{more}",
            shown.join(", ")
        )));
    }
    if values.is_empty() {
        return Err(CliError::input("no observations found"));
    }
    Ok(values)
}

pub fn read_data(path: &Path) -> Result<Vec<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
    parse_data(&text).map_err(|e| match e {
        CliError::Input(msg) => CliError::input(format!("{}: {msg}", path.display())),
        other => other,
    })
}

fn parse_list(part: &str, what: &str) -> Result<Vec<f64>, CliError> {
    part.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::input(format!("bad {what} value '{}'", s.trim())))
        })
        .collect()
}

/// Parses `p1,...;alpha1,...;beta1,...`. The weight list may omit the last
/// weight, which is then `1 − Σ p`.
pub fn parse_params(s: &str) -> Result<MixtureParams, CliError> {
    let parts: Vec<&str> = s.split(';').collect();
    if parts.len() != 3 {
        return Err(CliError::input(format!(
            "parameters must look like 'p1,...;alpha1,...;beta1,...', got '{s}'"
        )));
    }
    let alphas = parse_list(parts[1], "alpha")?;
    let betas = parse_list(parts[2], "beta")?;
    let g = alphas.len();
    if betas.len() != g {
        return Err(CliError::input(format!(
            "{g} alpha value(s) but {} beta value(s)",
            betas.len()
        )));
    }
    let mut weights = if parts[0].trim().is_empty() {
        Vec::new()
    } else {
        parse_list(parts[0], "weight")?
    };
    if weights.len() + 1 == g {
        weights.push(1.0 - weights.iter().sum::<f64>());
    }
    if weights.len() != g {
        return Err(CliError::input(format!(
            "expected {} or {g} weight(s) for {g} component(s), got {}",
            g - 1,
            weights.len()
        )));
    }
    MixtureParams::from_vectors(&weights, &alphas, &betas)
        .map_err(|e| CliError::input(e.to_string()))
}
