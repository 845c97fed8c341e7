//! Model selection: greedy forward AIC over a feature registry and
//! cross-validated lambda for the regularized fits.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

use super::logistic::{aic, evaluate, fit_logistic, FitParams, FittedModel};
use super::matrix::DenseMatrix;

#[derive(Debug, Clone)]
pub struct ForwardSelection {
    /// Column indices in the order they were added.
    pub selected: Vec<usize>,
    /// Unpenalized fit on the selected columns.
    pub model: FittedModel,
    pub aic: f64,
    /// AIC after each accepted step, starting with the intercept-only model.
    pub trace: Vec<f64>,
}

/// Greedy forward selection under AIC: starts from the intercept-only
/// model, at each step adds the feature whose lambda=0 refit lowers AIC the
/// most, and stops when no candidate strictly lowers it. Ties go to the
/// earlier registry index.
pub fn forward_select_aic(
    x: &DenseMatrix,
    y: &[u8],
    names: &[String],
    params: &FitParams,
) -> Result<ForwardSelection> {
    if params.lambda != 0.0 {
        return Err(Error::InvalidInput(
            "forward selection refits are unpenalized".into(),
        ));
    }
    let mut selected: Vec<usize> = Vec::new();
    let mut model = fit_logistic(&DenseMatrix::zeros(y.len(), 0), y, &[], params)?;
    let mut best_aic = aic(&model);
    let mut trace = vec![best_aic];

    loop {
        let mut best: Option<(usize, f64, FittedModel)> = None;
        for j in 0..x.n_cols {
            if selected.contains(&j) {
                continue;
            }
            let mut cols = selected.clone();
            cols.push(j);
            let sub = x.select_columns(&cols);
            let sub_names: Vec<String> = cols.iter().map(|&c| names[c].clone()).collect();
            let candidate = fit_logistic(&sub, y, &sub_names, params)?;
            let a = aic(&candidate);
            // strict improvement over the incumbent; among candidates the
            // strictly lower AIC wins, so ties keep the earlier index
            if a < best_aic && best.as_ref().map_or(true, |(_, ba, _)| a < *ba) {
                best = Some((j, a, candidate));
            }
        }
        match best {
            Some((j, a, m)) => {
                selected.push(j);
                best_aic = a;
                model = m;
                trace.push(a);
            }
            None => break,
        }
    }
    Ok(ForwardSelection {
        selected,
        model,
        aic: best_aic,
        trace,
    })
}

/// Picks lambda from `grid` by mean accuracy over 5 shuffled folds. Ties
/// prefer the larger lambda (the sparser model).
pub fn cv_lambda(
    x: &DenseMatrix,
    y: &[u8],
    names: &[String],
    grid: &[f64],
    seed: u64,
) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty lambda grid".into()));
    }
    let n = y.len();
    if n < 10 {
        return Err(Error::InvalidInput(
            "need at least 10 observations for 5-fold cv".into(),
        ));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let folds: Vec<Vec<usize>> = (0..5)
        .map(|f| order.iter().copied().skip(f).step_by(5).collect())
        .collect();

    let mut best: Option<(f64, f64)> = None; // (lambda, mean accuracy)
    for &lambda in grid {
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(Error::InvalidInput(format!("bad lambda {lambda}")));
        }
        let mut total = 0.0;
        for fold in &folds {
            let test: Vec<usize> = fold.clone();
            let train: Vec<usize> = (0..n).filter(|i| !test.contains(i)).collect();
            let xt = x.select_rows(&train);
            let yt: Vec<u8> = train.iter().map(|&i| y[i]).collect();
            let model = fit_logistic(&xt, &yt, names, &FitParams::with_lambda(lambda))?;
            let xv = x.select_rows(&test);
            let yv: Vec<u8> = test.iter().map(|&i| y[i]).collect();
            total += evaluate(&model, &xv, &yv, 0.5)?.accuracy;
        }
        let mean = total / folds.len() as f64;
        let better = match best {
            None => true,
            Some((bl, ba)) => mean > ba || (mean == ba && lambda > bl),
        };
        if better {
            best = Some((lambda, mean));
        }
    }
    Ok(best.expect("non-empty grid").0)
}
