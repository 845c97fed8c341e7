//! Numerical core: n-gram vectorization, L1 logistic regression by cyclic
//! coordinate descent, class rebalancing, forward AIC selection, the
//! cascaded relevance classifiers, and user-group derivation.

mod cascade;
mod logistic;
mod matrix;
mod ngram;
mod sampling;
mod select;

pub use cascade::{
    derive_groups, train_cascade, CascadeConfig, ControlLabel, ControlPrediction, PostJudgment,
    RelevanceCascade, RumorLabel, RumorPrediction, UserGroup,
};
pub use logistic::{
    aic, evaluate, fit_logistic, lambda_max, mcfadden_r2, negloglik_and_grad, significance_stars,
    wald_inference, Evaluation, FitParams, FittedModel, WaldRow,
};
pub use matrix::{DenseMatrix, SparseMatrix};
pub use ngram::{project_ngrams, vectorize_ngrams};
pub use sampling::{smote, undersample, SmoteOutput};
pub use select::{cv_lambda, forward_select_aic};
