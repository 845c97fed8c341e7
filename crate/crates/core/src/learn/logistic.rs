//! L1-regularized logistic regression.
//!
//! The objective is `(1/n) * sum_i log(1 + exp(-yt_i * (b0 + x_i . b))) +
//! lambda * ||b||_1` with `yt in {-1,+1}`, minimized by cyclic coordinate
//! descent with soft-thresholding on a quadratic majorization (curvature
//! bound 1/4). Features are standardized internally; the intercept is
//! unpenalized; reported coefficients are back-transformed to the original
//! scale.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::{Error, Result};

use super::matrix::DenseMatrix;

#[derive(Debug, Clone)]
pub struct FitParams {
    pub lambda: f64,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for FitParams {
    fn default() -> Self {
        FitParams {
            lambda: 0.0,
            max_iter: 10_000,
            tol: 1e-7,
        }
    }
}

impl FitParams {
    pub fn with_lambda(lambda: f64) -> Self {
        FitParams {
            lambda,
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FittedModel {
    pub intercept: f64,
    /// Unstandardized coefficients; dropped (constant) columns carry 0.
    pub coefficients: BTreeMap<String, f64>,
    /// Input feature order, used to interpret prediction rows.
    pub feature_names: Vec<String>,
    /// Constant columns excluded from the fit.
    pub dropped: Vec<String>,
    pub lambda: f64,
    /// Mean log-likelihood per observation (<= 0).
    pub loglik: f64,
    /// Mean log-likelihood of the intercept-only model.
    pub null_loglik: f64,
    pub n_train: usize,
    /// Per-feature (mean, sd) used for internal standardization.
    pub standardization: BTreeMap<String, (f64, f64)>,
    pub converged: bool,
}

impl FittedModel {
    pub fn coefficient(&self, name: &str) -> f64 {
        self.coefficients.get(name).copied().unwrap_or(0.0)
    }

    pub fn nonzero_count(&self) -> usize {
        self.coefficients.values().filter(|c| **c != 0.0).count()
    }

    /// Linear predictor for a raw (unstandardized) row in `feature_names`
    /// order.
    pub fn linear_predictor(&self, row: &[f64]) -> f64 {
        let mut eta = self.intercept;
        for (name, &x) in self.feature_names.iter().zip(row) {
            eta += self.coefficient(name) * x;
        }
        eta
    }

    pub fn predict_proba(&self, row: &[f64]) -> f64 {
        sigmoid(self.linear_predictor(row))
    }
}

#[inline]
fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// log(1 + exp(t)) without overflow.
#[inline]
fn log1pexp(t: f64) -> f64 {
    if t > 30.0 {
        t
    } else {
        t.exp().ln_1p()
    }
}

fn soft_threshold(z: f64, lambda: f64) -> f64 {
    if z > lambda {
        z - lambda
    } else if z < -lambda {
        z + lambda
    } else {
        0.0
    }
}

fn validate(x: &DenseMatrix, y: &[u8], names: &[String]) -> Result<()> {
    if x.n_rows != y.len() {
        return Err(Error::InvalidInput(format!(
            "{} rows but {} labels",
            x.n_rows,
            y.len()
        )));
    }
    if names.len() != x.n_cols {
        return Err(Error::InvalidInput(format!(
            "{} columns but {} feature names",
            x.n_cols,
            names.len()
        )));
    }
    if y.is_empty() {
        return Err(Error::InvalidInput("empty training set".into()));
    }
    if !x.is_finite() {
        return Err(Error::InvalidInput("non-finite design matrix".into()));
    }
    if y.iter().any(|&v| v > 1) {
        return Err(Error::InvalidInput("labels must be 0 or 1".into()));
    }
    let pos = y.iter().filter(|&&v| v == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(Error::InvalidInput("single-class training set".into()));
    }
    Ok(())
}

struct Standardized {
    xs: DenseMatrix,
    kept: Vec<usize>,
    dropped: Vec<usize>,
    stats: Vec<(f64, f64)>, // (mean, sd) per input column
}

fn standardize(x: &DenseMatrix) -> Standardized {
    let n = x.n_rows as f64;
    let mut stats = Vec::with_capacity(x.n_cols);
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for j in 0..x.n_cols {
        let col = x.column(j);
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        stats.push((mean, sd));
        if sd > 1e-12 {
            kept.push(j);
        } else {
            dropped.push(j);
        }
    }
    let mut xs = DenseMatrix::zeros(x.n_rows, kept.len());
    for i in 0..x.n_rows {
        for (k, &j) in kept.iter().enumerate() {
            let (mean, sd) = stats[j];
            xs.set(i, k, (x.get(i, j) - mean) / sd);
        }
    }
    Standardized {
        xs,
        kept,
        dropped,
        stats,
    }
}

/// Mean negative log-likelihood and its gradient w.r.t. (intercept, beta),
/// on the matrix exactly as given (no standardization). Used as the smooth
/// part of the objective; gradient element 0 is the intercept.
pub fn negloglik_and_grad(
    x: &DenseMatrix,
    y: &[u8],
    intercept: f64,
    beta: &[f64],
) -> (f64, Vec<f64>) {
    let n = x.n_rows as f64;
    let mut f = 0.0;
    let mut grad = vec![0.0; beta.len() + 1];
    for i in 0..x.n_rows {
        let mut eta = intercept;
        for (j, &b) in beta.iter().enumerate() {
            eta += b * x.get(i, j);
        }
        let yt = if y[i] == 1 { 1.0 } else { -1.0 };
        f += log1pexp(-yt * eta);
        let r = sigmoid(eta) - y[i] as f64;
        grad[0] += r;
        for (j, g) in grad.iter_mut().skip(1).enumerate() {
            *g += r * x.get(i, j);
        }
    }
    f /= n;
    for g in grad.iter_mut() {
        *g /= n;
    }
    (f, grad)
}

fn mean_logloss(eta: &[f64], y: &[u8]) -> f64 {
    let mut f = 0.0;
    for (&e, &yi) in eta.iter().zip(y) {
        let yt = if yi == 1 { 1.0 } else { -1.0 };
        f += log1pexp(-yt * e);
    }
    f / y.len() as f64
}

/// Largest lambda with a fully-zero solution:
/// `max_j |x~_j^T (y - ybar)| / n` over standardized columns.
pub fn lambda_max(x: &DenseMatrix, y: &[u8]) -> f64 {
    let st = standardize(x);
    let n = x.n_rows as f64;
    let ybar = y.iter().map(|&v| v as f64).sum::<f64>() / n;
    let mut best: f64 = 0.0;
    for k in 0..st.xs.n_cols {
        let mut dot = 0.0;
        for i in 0..st.xs.n_rows {
            dot += st.xs.get(i, k) * (y[i] as f64 - ybar);
        }
        best = best.max((dot / n).abs());
    }
    best
}

/// Fits the L1 logistic model. Constant columns are dropped (recorded on
/// the model); non-convergence is flagged, not silent.
pub fn fit_logistic(
    x: &DenseMatrix,
    y: &[u8],
    names: &[String],
    params: &FitParams,
) -> Result<FittedModel> {
    validate(x, y, names)?;
    if !params.lambda.is_finite() || params.lambda < 0.0 {
        return Err(Error::InvalidInput("lambda must be finite and >= 0".into()));
    }
    let st = standardize(x);
    let xs = &st.xs;
    let n = x.n_rows;
    let nf = n as f64;
    let p = xs.n_cols;
    let lambda = params.lambda;

    let mut beta0 = 0.0f64;
    let mut beta = vec![0.0f64; p];
    let mut eta = vec![0.0f64; n];
    // curvature bound: sigma' <= 1/4 and standardized columns have
    // mean-square exactly 1
    const L: f64 = 0.25;

    let mut prev_obj = mean_logloss(&eta, y); // lambda term is 0 at start
    let mut converged = false;

    for _sweep in 0..params.max_iter {
        let mut max_change = 0.0f64;

        // intercept (unpenalized): iterate the majorized step to a much
        // tighter tolerance than the coefficients, so the zero-coefficient
        // limit recovers the exact class-balance log-odds
        let mut total0 = 0.0;
        for _ in 0..200 {
            let mut g0 = 0.0;
            for (e, &yi) in eta.iter().zip(y) {
                g0 += sigmoid(*e) - yi as f64;
            }
            g0 /= nf;
            let delta = -g0 / L;
            if delta.abs() < 1e-14 {
                break;
            }
            beta0 += delta;
            total0 += delta.abs();
            for e in eta.iter_mut() {
                *e += delta;
            }
        }
        max_change = max_change.max(total0);

        for j in 0..p {
            let mut g = 0.0;
            for i in 0..n {
                g += xs.get(i, j) * (sigmoid(eta[i]) - y[i] as f64);
            }
            g /= nf;
            let z = L * beta[j] - g;
            let new = soft_threshold(z, lambda) / L;
            let delta = new - beta[j];
            if delta != 0.0 {
                beta[j] = new;
                for i in 0..n {
                    eta[i] += delta * xs.get(i, j);
                }
            }
            max_change = max_change.max(delta.abs());
        }

        // the majorized step never increases the objective
        let obj = mean_logloss(&eta, y) + lambda * beta.iter().map(|b| b.abs()).sum::<f64>();
        debug_assert!(
            obj <= prev_obj + 1e-8 * (1.0 + prev_obj.abs()),
            "objective increased: {prev_obj} -> {obj}"
        );
        prev_obj = obj;

        if max_change < params.tol {
            converged = true;
            break;
        }
    }

    let loglik = -mean_logloss(&eta, y);
    let ybar = y.iter().map(|&v| v as f64).sum::<f64>() / nf;
    let null_loglik = ybar * ybar.ln() + (1.0 - ybar) * (1.0 - ybar).ln();

    // back-transform to the original feature scale
    let mut coefficients = BTreeMap::new();
    let mut standardization = BTreeMap::new();
    let mut intercept = beta0;
    for (k, &j) in st.kept.iter().enumerate() {
        let (mean, sd) = st.stats[j];
        let unstd = beta[k] / sd;
        coefficients.insert(names[j].clone(), unstd);
        standardization.insert(names[j].clone(), (mean, sd));
        intercept -= unstd * mean;
    }
    let mut dropped = Vec::new();
    for &j in &st.dropped {
        coefficients.insert(names[j].clone(), 0.0);
        standardization.insert(names[j].clone(), st.stats[j]);
        dropped.push(names[j].clone());
    }

    Ok(FittedModel {
        intercept,
        coefficients,
        feature_names: names.to_vec(),
        dropped,
        lambda,
        loglik,
        null_loglik,
        n_train: n,
        standardization,
        converged,
    })
}

/// McFadden pseudo-R^2: `1 - loglik / null_loglik`.
pub fn mcfadden_r2(model: &FittedModel) -> Result<f64> {
    if model.null_loglik == 0.0 {
        return Err(Error::Undefined("null log-likelihood is zero".into()));
    }
    Ok(1.0 - model.loglik / model.null_loglik)
}

/// AIC with `k = nonzero coefficients + 1` and the log-likelihood summed
/// over observations (the model stores the mean, hence the `* n`).
pub fn aic(model: &FittedModel) -> f64 {
    let k = (model.nonzero_count() + 1) as f64;
    2.0 * k - 2.0 * model.loglik * model.n_train as f64
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    pub fn_: usize,
}

/// Confusion counts and accuracy on raw test rows (the model applies its
/// own training standardization via the back-transformed coefficients).
pub fn evaluate(model: &FittedModel, x: &DenseMatrix, y: &[u8], threshold: f64) -> Result<Evaluation> {
    if x.n_rows != y.len() {
        return Err(Error::InvalidInput("row/label mismatch".into()));
    }
    if x.n_cols != model.feature_names.len() {
        return Err(Error::InvalidInput("column/feature mismatch".into()));
    }
    let mut e = Evaluation::default();
    for (i, &yi) in y.iter().enumerate() {
        let pred = model.predict_proba(x.row(i)) >= threshold;
        match (pred, yi == 1) {
            (true, true) => e.tp += 1,
            (true, false) => e.fp += 1,
            (false, true) => e.fn_ += 1,
            (false, false) => e.tn += 1,
        }
    }
    e.accuracy = (e.tp + e.tn) as f64 / y.len() as f64;
    Ok(e)
}

#[derive(Debug, Clone)]
pub struct WaldRow {
    pub name: String,
    pub coefficient: f64,
    pub std_error: f64,
    pub p_value: f64,
    pub stars: &'static str,
}

pub fn significance_stars(p: f64) -> &'static str {
    if p < 0.0001 {
        "***"
    } else if p < 0.001 {
        "**"
    } else if p < 0.01 {
        "*"
    } else if p < 0.05 {
        "."
    } else {
        ""
    }
}

fn invert(mut a: Vec<Vec<f64>>) -> Option<Vec<Vec<f64>>> {
    let n = a.len();
    let mut inv: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = a[i][col];
                if f != 0.0 {
                    for j in 0..n {
                        a[i][j] -= f * a[col][j];
                        inv[i][j] -= f * inv[col][j];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// Standard errors and Wald p-values from the observed Fisher information
/// of an unpenalized fit, on the original feature scale. Intended for the
/// lambda=0 refit on selected features; this is post-selection inference
/// and reports should say so. The intercept is row 0.
pub fn wald_inference(x: &DenseMatrix, y: &[u8], model: &FittedModel) -> Result<Vec<WaldRow>> {
    if x.n_rows != y.len() || x.n_cols != model.feature_names.len() {
        return Err(Error::InvalidInput("design does not match model".into()));
    }
    let p1 = x.n_cols + 1;
    let mut info = vec![vec![0.0; p1]; p1];
    for i in 0..x.n_rows {
        let prob = model.predict_proba(x.row(i));
        let w = prob * (1.0 - prob);
        let mut z = Vec::with_capacity(p1);
        z.push(1.0);
        z.extend_from_slice(x.row(i));
        for a in 0..p1 {
            for b in 0..p1 {
                info[a][b] += w * z[a] * z[b];
            }
        }
    }
    let cov = invert(info);
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let mut rows = Vec::with_capacity(p1);
    for k in 0..p1 {
        let (name, coef) = if k == 0 {
            ("(Intercept)".to_string(), model.intercept)
        } else {
            let n = model.feature_names[k - 1].clone();
            let c = model.coefficient(&n);
            (n, c)
        };
        let se = match &cov {
            Some(c) if c[k][k] > 0.0 => c[k][k].sqrt(),
            _ => f64::INFINITY,
        };
        let p_value = if se.is_finite() && se > 0.0 {
            2.0 * (1.0 - normal.cdf((coef / se).abs()))
        } else {
            1.0
        };
        rows.push(WaldRow {
            name,
            coefficient: coef,
            std_error: se,
            p_value,
            stars: significance_stars(p_value),
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn full_shrinkage_recovers_class_balance() {
        let x = DenseMatrix::from_rows(&[
            vec![1.0, 0.5],
            vec![2.0, -0.5],
            vec![3.0, 1.5],
            vec![4.0, 0.0],
            vec![5.0, 2.0],
        ])
        .unwrap();
        let y = vec![1, 0, 1, 1, 0];
        let lmax = lambda_max(&x, &y);
        let model = fit_logistic(&x, &y, &names(2), &FitParams::with_lambda(lmax * 1.01)).unwrap();
        assert!(model.coefficients.values().all(|&c| c == 0.0));
        let p: f64 = 3.0 / 5.0;
        assert!((model.intercept - (p / (1.0 - p)).ln()).abs() < 1e-9);
    }

    #[test]
    fn gradient_matches_finite_differences_tiny() {
        let x = DenseMatrix::from_rows(&[vec![0.3, -1.0], vec![-0.8, 0.4], vec![1.2, 0.9]]).unwrap();
        let y = vec![1, 0, 1];
        let beta0 = 0.2;
        let beta = vec![-0.5, 0.7];
        let (_, grad) = negloglik_and_grad(&x, &y, beta0, &beta);
        let h = 1e-6;
        let (fp, _) = negloglik_and_grad(&x, &y, beta0 + h, &beta);
        let (fm, _) = negloglik_and_grad(&x, &y, beta0 - h, &beta);
        assert!((grad[0] - (fp - fm) / (2.0 * h)).abs() < 1e-8);
    }

    #[test]
    fn single_class_is_error() {
        let x = DenseMatrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(fit_logistic(&x, &[1, 1], &names(1), &FitParams::default()).is_err());
    }

    #[test]
    fn non_finite_input_is_error() {
        let x = DenseMatrix::from_rows(&[vec![f64::NAN], vec![2.0]]).unwrap();
        assert!(fit_logistic(&x, &[1, 0], &names(1), &FitParams::default()).is_err());
    }

    #[test]
    fn constant_column_dropped_with_zero_coefficient() {
        let x = DenseMatrix::from_rows(&[vec![1.0, 7.0], vec![2.0, 7.0], vec![3.0, 7.0], vec![4.0, 7.0]])
            .unwrap();
        let y = vec![0, 0, 1, 1];
        let model = fit_logistic(&x, &y, &names(2), &FitParams::default()).unwrap();
        assert_eq!(model.dropped, vec!["f1".to_string()]);
        assert_eq!(model.coefficient("f1"), 0.0);
        assert!(model.coefficient("f0") > 0.0);
    }

    #[test]
    fn aic_intercept_only_closed_form() {
        // 10 balanced points, one useless constant-ish feature shrunk away
        let x = DenseMatrix::zeros(10, 0);
        let y = vec![0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let model = fit_logistic(&x, &y, &[], &FitParams::default()).unwrap();
        assert!((model.loglik - 0.5f64.ln()).abs() < 1e-9);
        let expected = 2.0 - 2.0 * 10.0 * 0.5f64.ln();
        assert!((aic(&model) - expected).abs() < 1e-8);
    }

    #[test]
    fn mcfadden_limits() {
        let x = DenseMatrix::from_rows(&[vec![0.0], vec![0.0], vec![1.0], vec![1.0]]).unwrap();
        // feature carries no information: loglik == null -> R2 ~ 0
        let model = fit_logistic(&x, &[0, 1, 0, 1], &names(1), &FitParams::default()).unwrap();
        assert!(mcfadden_r2(&model).unwrap().abs() < 1e-6);
        // perfectly predictive feature -> R2 near 1
        let model = fit_logistic(
            &x,
            &[0, 0, 1, 1],
            &names(1),
            &FitParams {
                lambda: 0.0,
                max_iter: 20_000,
                tol: 1e-9,
            },
        )
        .unwrap();
        assert!(mcfadden_r2(&model).unwrap() > 0.95);
    }

    #[test]
    fn evaluation_counts() {
        let x = DenseMatrix::from_rows(&[vec![-2.0], vec![-1.0], vec![1.0], vec![2.0]]).unwrap();
        let y = vec![0, 0, 1, 1];
        let model = fit_logistic(&x, &y, &names(1), &FitParams::default()).unwrap();
        let e = evaluate(&model, &x, &y, 0.5).unwrap();
        assert_eq!(e.accuracy, 1.0);
        assert_eq!(e.tp, 2);
        assert_eq!(e.tn, 2);
    }

    #[test]
    fn prediction_invariant_under_row_shuffle_at_lambda_zero() {
        let rows = vec![
            vec![0.1, 1.0],
            vec![-0.4, 0.2],
            vec![0.9, -0.3],
            vec![1.4, 0.8],
            vec![-1.1, -0.6],
            vec![0.3, -1.2],
        ];
        let y = vec![1, 0, 1, 1, 0, 0];
        let params = FitParams {
            lambda: 0.0,
            max_iter: 50_000,
            tol: 1e-10,
        };
        let x = DenseMatrix::from_rows(&rows).unwrap();
        let a = fit_logistic(&x, &y, &names(2), &params).unwrap();

        let perm = [3usize, 0, 5, 1, 4, 2];
        let rows2: Vec<Vec<f64>> = perm.iter().map(|&i| rows[i].clone()).collect();
        let y2: Vec<u8> = perm.iter().map(|&i| y[i]).collect();
        let x2 = DenseMatrix::from_rows(&rows2).unwrap();
        let b = fit_logistic(&x2, &y2, &names(2), &params).unwrap();

        let probe = vec![0.5, -0.5];
        assert!((a.predict_proba(&probe) - b.predict_proba(&probe)).abs() < 1e-7);
    }

    #[test]
    fn probabilities_in_open_unit_interval() {
        let x = DenseMatrix::from_rows(&[vec![-3.0], vec![-1.0], vec![1.0], vec![3.0]]).unwrap();
        let model = fit_logistic(&x, &[0, 0, 1, 1], &names(1), &FitParams::default()).unwrap();
        for i in 0..x.n_rows {
            let p = model.predict_proba(x.row(i));
            assert!(p > 0.0 && p < 1.0);
        }
    }

    #[test]
    fn wald_rows_shape_and_stars() {
        let x = DenseMatrix::from_rows(&[
            vec![0.1],
            vec![0.3],
            vec![-0.2],
            vec![1.1],
            vec![0.9],
            vec![1.4],
        ])
        .unwrap();
        let y = vec![0, 0, 0, 1, 1, 1];
        let model = fit_logistic(&x, &y, &names(1), &FitParams::default()).unwrap();
        let rows = wald_inference(&x, &y, &model).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].name, "(Intercept)");
        assert_eq!(significance_stars(0.00001), "***");
        assert_eq!(significance_stars(0.0005), "**");
        assert_eq!(significance_stars(0.005), "*");
        assert_eq!(significance_stars(0.03), ".");
        assert_eq!(significance_stars(0.5), "");
    }
}
