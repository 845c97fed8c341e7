//! Plain-text, reloadable model artifacts.
//!
//! Floats are rendered with Rust's shortest round-trip formatting, so a
//! reloaded model is bit-identical to the one written.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use rumorlens::learn::FittedModel;

pub fn render_models(models: &[(&str, &FittedModel)]) -> String {
    let mut out = String::new();
    for (name, m) in models {
        out.push_str(&format!("[model {name}]\n"));
        out.push_str(&format!("lambda = {}\n", m.lambda));
        out.push_str(&format!("intercept = {}\n", m.intercept));
        out.push_str(&format!("loglik = {}\n", m.loglik));
        out.push_str(&format!("null_loglik = {}\n", m.null_loglik));
        out.push_str(&format!("n_train = {}\n", m.n_train));
        out.push_str(&format!("converged = {}\n", m.converged));
        // feature lines are tab-separated because n-gram names may contain
        // spaces: name, coefficient, mean, sd, dropped flag
        for fname in &m.feature_names {
            let coef = m.coefficient(fname);
            let (mean, sd) = m
                .standardization
                .get(fname)
                .copied()
                .unwrap_or((0.0, 0.0));
            let dropped = m.dropped.contains(fname);
            out.push_str(&format!("feature\t{fname}\t{coef}\t{mean}\t{sd}\t{dropped}\n"));
        }
        out.push('\n');
    }
    out
}

pub fn parse_models(text: &str) -> Result<BTreeMap<String, FittedModel>> {
    let mut out = BTreeMap::new();
    let mut current: Option<(String, FittedModel)> = None;
    let flush = |cur: &mut Option<(String, FittedModel)>,
                     out: &mut BTreeMap<String, FittedModel>| {
        if let Some((name, model)) = cur.take() {
            out.insert(name, model);
        }
    };
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("[model ") {
            let name = rest
                .strip_suffix(']')
                .with_context(|| format!("line {lineno}: malformed model header"))?;
            flush(&mut current, &mut out);
            current = Some((
                name.to_string(),
                FittedModel {
                    intercept: 0.0,
                    coefficients: BTreeMap::new(),
                    feature_names: Vec::new(),
                    dropped: Vec::new(),
                    lambda: 0.0,
                    loglik: 0.0,
                    null_loglik: 0.0,
                    n_train: 0,
                    standardization: BTreeMap::new(),
                    converged: false,
                },
            ));
            continue;
        }
        let Some((_, model)) = current.as_mut() else {
            bail!("line {lineno}: content before first [model] header");
        };
        if let Some(rest) = line.strip_prefix("feature\t") {
            let parts: Vec<&str> = rest.split('\t').collect();
            if parts.len() != 5 {
                bail!("line {lineno}: feature line needs 5 tab-separated fields");
            }
            let name = parts[0].to_string();
            let coef: f64 = parts[1].parse().context("coefficient")?;
            let mean: f64 = parts[2].parse().context("mean")?;
            let sd: f64 = parts[3].parse().context("sd")?;
            let dropped: bool = parts[4].parse().context("dropped flag")?;
            model.feature_names.push(name.clone());
            model.coefficients.insert(name.clone(), coef);
            if dropped {
                model.dropped.push(name);
            } else {
                model.standardization.insert(name, (mean, sd));
            }
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {lineno}: expected `key = value`");
        };
        let (k, v) = (k.trim(), v.trim());
        match k {
            "lambda" => model.lambda = v.parse().context("lambda")?,
            "intercept" => model.intercept = v.parse().context("intercept")?,
            "loglik" => model.loglik = v.parse().context("loglik")?,
            "null_loglik" => model.null_loglik = v.parse().context("null_loglik")?,
            "n_train" => model.n_train = v.parse().context("n_train")?,
            "converged" => model.converged = v.parse().context("converged")?,
            other => bail!("line {lineno}: unknown model key {other:?}"),
        }
    }
    flush(&mut current, &mut out);
    if out.is_empty() {
        bail!("no models found in artifact");
    }
    Ok(out)
}
