//! Cascaded relevance classifiers over 1-3-gram features, and the
//! derivation of user groups from per-post judgments.
//!
//! Rumor side: a binary "about a cure" model, then a 3-class one-vs-rest
//! model over {claims cure, prevention, debunking} on the cure posts.
//! Control side: binary cancer, binary personal, binary suggests-cure
//! models, each trained on SMOTE-balanced data. Every model is an n-gram
//! logistic fit with lambda chosen by 5-fold cross-validated accuracy.

use std::collections::BTreeMap;

use crate::{Error, Result};

use super::logistic::{fit_logistic, FitParams, FittedModel};
use super::matrix::DenseMatrix;
use super::ngram::{project_ngrams, vectorize_ngrams};
use super::sampling::smote;
use super::select::cv_lambda;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RumorLabel {
    NotCure,
    ClaimsCure,
    Prevention,
    Debunking,
}

impl RumorLabel {
    pub const CURE_KINDS: [RumorLabel; 3] = [
        RumorLabel::ClaimsCure,
        RumorLabel::Prevention,
        RumorLabel::Debunking,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RumorLabel::NotCure => "not_cure",
            RumorLabel::ClaimsCure => "claims_cure",
            RumorLabel::Prevention => "prevention",
            RumorLabel::Debunking => "debunking",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "not_cure" => Ok(RumorLabel::NotCure),
            "claims_cure" => Ok(RumorLabel::ClaimsCure),
            "prevention" => Ok(RumorLabel::Prevention),
            "debunking" => Ok(RumorLabel::Debunking),
            other => Err(Error::InvalidInput(format!("unknown rumor label {other:?}"))),
        }
    }
}

/// Control-side annotation: cancer relevance plus two flags that only
/// apply to cancer posts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ControlLabel {
    pub cancer: bool,
    pub personal: bool,
    pub suggests_cure: bool,
}

impl ControlLabel {
    pub fn as_str(self) -> &'static str {
        match (self.cancer, self.personal, self.suggests_cure) {
            (false, _, _) => "not_cancer",
            (true, false, false) => "cancer",
            (true, true, false) => "cancer_personal",
            (true, false, true) => "cancer_cure",
            (true, true, true) => "cancer_personal_cure",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let l = |cancer, personal, suggests_cure| ControlLabel {
            cancer,
            personal,
            suggests_cure,
        };
        match s {
            "not_cancer" => Ok(l(false, false, false)),
            "cancer" => Ok(l(true, false, false)),
            "cancer_personal" => Ok(l(true, true, false)),
            "cancer_cure" => Ok(l(true, false, true)),
            "cancer_personal_cure" => Ok(l(true, true, true)),
            other => Err(Error::InvalidInput(format!(
                "unknown control label {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CascadeConfig {
    /// Geometric grid searched by 5-fold cross-validated accuracy.
    pub lambda_grid: Vec<f64>,
    pub min_df: usize,
    pub seed: u64,
    pub smote_k: usize,
}

impl Default for CascadeConfig {
    fn default() -> Self {
        CascadeConfig {
            lambda_grid: vec![1e-4, 1e-3, 1e-2, 1e-1],
            min_df: 2,
            seed: 0,
            smote_k: 5,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RelevanceCascade {
    pub rumor_vocab: Vec<String>,
    pub about_cure: FittedModel,
    /// One-vs-rest models in `RumorLabel::CURE_KINDS` order.
    pub kind_models: Vec<FittedModel>,
    pub control_vocab: Vec<String>,
    pub cancer: FittedModel,
    pub personal: FittedModel,
    pub suggests_cure: FittedModel,
    /// SMOTE adjustments applied while balancing control training sets.
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RumorPrediction {
    pub about_cure: bool,
    /// Argmax over the cure kinds; None when not about a cure.
    pub kind: Option<RumorLabel>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlPrediction {
    pub cancer: bool,
    pub personal: bool,
    pub suggests_cure: bool,
}

/// Combined judgment of one post by both cascades.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct PostJudgment {
    pub claims_cure: bool,
    pub cancer: bool,
    pub personal_cancer: bool,
    pub suggests_cure: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum UserGroup {
    Rumor,
    ControlPersonal,
    ControlNonPersonal,
    Excluded,
}

impl UserGroup {
    pub fn as_str(self) -> &'static str {
        match self {
            UserGroup::Rumor => "rumor",
            UserGroup::ControlPersonal => "control_personal",
            UserGroup::ControlNonPersonal => "control_non_personal",
            UserGroup::Excluded => "excluded",
        }
    }
}

fn sigmoid(t: f64) -> f64 {
    1.0 / (1.0 + (-t).exp())
}

fn sparse_proba(model: &FittedModel, entries: &[(usize, f64)], vocab: &[String]) -> f64 {
    let mut eta = model.intercept;
    for &(j, v) in entries {
        eta += v * model.coefficient(&vocab[j]);
    }
    sigmoid(eta)
}

/// Fits one binary n-gram model: cv-picked lambda, then the final fit on
/// the full training matrix.
fn fit_binary(
    x: &DenseMatrix,
    y: &[u8],
    vocab: &[String],
    config: &CascadeConfig,
    seed: u64,
) -> Result<FittedModel> {
    let lambda = cv_lambda(x, y, vocab, &config.lambda_grid, seed)?;
    fit_logistic(x, y, vocab, &FitParams::with_lambda(lambda))
}

/// Appends SMOTE rows so both classes reach the majority count.
fn balance(
    x: &DenseMatrix,
    y: &[u8],
    seed: u64,
    k: usize,
    warnings: &mut Vec<String>,
) -> Result<(DenseMatrix, Vec<u8>)> {
    let pos: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let neg: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::InvalidInput("single-class training set".into()));
    }
    let (minority, min_label) = if pos.len() < neg.len() {
        (&pos, 1u8)
    } else if neg.len() < pos.len() {
        (&neg, 0u8)
    } else {
        return Ok((x.clone(), y.to_vec()));
    };
    let needed = y.len() - 2 * minority.len();
    let rows: Vec<Vec<f64>> = minority.iter().map(|&i| x.row(i).to_vec()).collect();
    let out = smote(&rows, needed, k, seed)?;
    if let Some(w) = out.warning {
        warnings.push(w);
    }
    let mut all: Vec<Vec<f64>> = x.rows().map(|r| r.to_vec()).collect();
    let mut labels = y.to_vec();
    for r in out.rows {
        all.push(r);
        labels.push(min_label);
    }
    Ok((DenseMatrix::from_rows(&all)?, labels))
}

/// Trains both cascades from tokenized, majority-voted training posts.
pub fn train_cascade(
    rumor_train: &[(Vec<String>, RumorLabel)],
    control_train: &[(Vec<String>, ControlLabel)],
    config: &CascadeConfig,
) -> Result<RelevanceCascade> {
    if rumor_train.is_empty() || control_train.is_empty() {
        return Err(Error::InvalidInput("empty cascade training set".into()));
    }
    let mut warnings = Vec::new();

    // rumor side
    let rumor_docs: Vec<Vec<String>> = rumor_train.iter().map(|(d, _)| d.clone()).collect();
    let (rx, rumor_vocab) = vectorize_ngrams(&rumor_docs, config.min_df)?;
    let rx = rx.to_dense();
    let y_cure: Vec<u8> = rumor_train
        .iter()
        .map(|(_, l)| (*l != RumorLabel::NotCure) as u8)
        .collect();
    let about_cure = fit_binary(&rx, &y_cure, &rumor_vocab, config, config.seed)?;

    let cure_rows: Vec<usize> = (0..rumor_train.len()).filter(|&i| y_cure[i] == 1).collect();
    if cure_rows.is_empty() {
        return Err(Error::InvalidInput("no cure-topic training posts".into()));
    }
    let rx_cure = rx.select_rows(&cure_rows);
    let mut kind_models = Vec::new();
    for (k, kind) in RumorLabel::CURE_KINDS.iter().enumerate() {
        let yk: Vec<u8> = cure_rows
            .iter()
            .map(|&i| (rumor_train[i].1 == *kind) as u8)
            .collect();
        kind_models.push(fit_binary(
            &rx_cure,
            &yk,
            &rumor_vocab,
            config,
            config.seed.wrapping_add(1 + k as u64),
        )?);
    }

    // control side
    let control_docs: Vec<Vec<String>> = control_train.iter().map(|(d, _)| d.clone()).collect();
    let (cx, control_vocab) = vectorize_ngrams(&control_docs, config.min_df)?;
    let cx = cx.to_dense();

    let y_cancer: Vec<u8> = control_train.iter().map(|(_, l)| l.cancer as u8).collect();
    let (bx, by) = balance(&cx, &y_cancer, config.seed.wrapping_add(10), config.smote_k, &mut warnings)?;
    let cancer = fit_binary(&bx, &by, &control_vocab, config, config.seed.wrapping_add(11))?;

    let cancer_rows: Vec<usize> = (0..control_train.len())
        .filter(|&i| y_cancer[i] == 1)
        .collect();
    if cancer_rows.is_empty() {
        return Err(Error::InvalidInput("no cancer training posts".into()));
    }
    let cx_cancer = cx.select_rows(&cancer_rows);

    let y_personal: Vec<u8> = cancer_rows
        .iter()
        .map(|&i| control_train[i].1.personal as u8)
        .collect();
    let (bx, by) = balance(&cx_cancer, &y_personal, config.seed.wrapping_add(20), config.smote_k, &mut warnings)?;
    let personal = fit_binary(&bx, &by, &control_vocab, config, config.seed.wrapping_add(21))?;

    let y_sc: Vec<u8> = cancer_rows
        .iter()
        .map(|&i| control_train[i].1.suggests_cure as u8)
        .collect();
    let (bx, by) = balance(&cx_cancer, &y_sc, config.seed.wrapping_add(30), config.smote_k, &mut warnings)?;
    let suggests_cure = fit_binary(&bx, &by, &control_vocab, config, config.seed.wrapping_add(31))?;

    Ok(RelevanceCascade {
        rumor_vocab,
        about_cure,
        kind_models,
        control_vocab,
        cancer,
        personal,
        suggests_cure,
        warnings,
    })
}

impl RelevanceCascade {
    pub fn predict_rumor(&self, tokens: &[String]) -> Result<RumorPrediction> {
        let proj = project_ngrams(std::slice::from_ref(&tokens.to_vec()), &self.rumor_vocab)?;
        let entries = &proj.rows[0];
        let about = sparse_proba(&self.about_cure, entries, &self.rumor_vocab) >= 0.5;
        let kind = if about {
            let mut best = (RumorLabel::CURE_KINDS[0], f64::NEG_INFINITY);
            for (model, &kind) in self.kind_models.iter().zip(&RumorLabel::CURE_KINDS) {
                let p = sparse_proba(model, entries, &self.rumor_vocab);
                if p > best.1 {
                    best = (kind, p);
                }
            }
            Some(best.0)
        } else {
            None
        };
        Ok(RumorPrediction {
            about_cure: about,
            kind,
        })
    }

    pub fn predict_control(&self, tokens: &[String]) -> Result<ControlPrediction> {
        let proj = project_ngrams(std::slice::from_ref(&tokens.to_vec()), &self.control_vocab)?;
        let entries = &proj.rows[0];
        let cancer = sparse_proba(&self.cancer, entries, &self.control_vocab) >= 0.5;
        let (personal, suggests) = if cancer {
            (
                sparse_proba(&self.personal, entries, &self.control_vocab) >= 0.5,
                sparse_proba(&self.suggests_cure, entries, &self.control_vocab) >= 0.5,
            )
        } else {
            (false, false)
        };
        Ok(ControlPrediction {
            cancer,
            personal,
            suggests_cure: suggests,
        })
    }

    /// Combines both cascades. A post counts as cure-suggesting when the
    /// control cascade flags it, or when the rumor cascade finds it is
    /// about a cure at all (claiming, prevention, or debunking): control
    /// users must never post about a cure, so a debunking-only user ends
    /// up Excluded rather than Control.
    pub fn judge(&self, tokens: &[String]) -> Result<PostJudgment> {
        let r = self.predict_rumor(tokens)?;
        let c = self.predict_control(tokens)?;
        Ok(PostJudgment {
            claims_cure: r.about_cure && r.kind == Some(RumorLabel::ClaimsCure),
            cancer: c.cancer,
            personal_cancer: c.cancer && c.personal,
            suggests_cure: (c.cancer && c.suggests_cure) || r.about_cure,
        })
    }
}

/// Partitions users into groups: Rumor (any claims-cure post) takes
/// precedence; Control needs a cancer post and no cure-suggesting posts,
/// split on the personal flag; everyone else is Excluded.
pub fn derive_groups(
    judgments: &BTreeMap<String, Vec<PostJudgment>>,
) -> BTreeMap<String, UserGroup> {
    judgments
        .iter()
        .map(|(user, posts)| {
            let group = if posts.iter().any(|p| p.claims_cure) {
                UserGroup::Rumor
            } else if posts.iter().any(|p| p.cancer) && !posts.iter().any(|p| p.suggests_cure) {
                if posts.iter().any(|p| p.personal_cancer) {
                    UserGroup::ControlPersonal
                } else {
                    UserGroup::ControlNonPersonal
                }
            } else {
                UserGroup::Excluded
            };
            (user.clone(), group)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    /// Separable fixture with distinct vocabularies per class.
    fn rumor_fixture() -> Vec<(Vec<String>, RumorLabel)> {
        let mut out = Vec::new();
        for i in 0..8 {
            out.push((toks(&format!("weather rain sunny day{i}")), RumorLabel::NotCure));
            out.push((
                toks(&format!("miracle cure heals tumors fast{i}")),
                RumorLabel::ClaimsCure,
            ));
            out.push((
                toks(&format!("diet prevents cancer risk lower{i}")),
                RumorLabel::Prevention,
            ));
            out.push((
                toks(&format!("myth debunked false hoax claim{i}")),
                RumorLabel::Debunking,
            ));
        }
        out
    }

    fn control_fixture() -> Vec<(Vec<String>, ControlLabel)> {
        let mut out = Vec::new();
        let l = |c, p, s| ControlLabel {
            cancer: c,
            personal: p,
            suggests_cure: s,
        };
        for i in 0..8 {
            out.push((toks(&format!("football match score goal{i}")), l(false, false, false)));
            out.push((toks(&format!("cancer research funding news{i}")), l(true, false, false)));
            out.push((
                toks(&format!("my mom cancer diagnosis chemo{i}")),
                l(true, true, false),
            ));
            out.push((
                toks(&format!("cancer try this remedy cure{i}")),
                l(true, false, true),
            ));
        }
        out
    }

    #[test]
    fn memorizes_separable_training_posts() {
        let rumor = rumor_fixture();
        let control = control_fixture();
        let cascade = train_cascade(&rumor, &control, &CascadeConfig::default()).unwrap();
        for (doc, label) in &rumor {
            let pred = cascade.predict_rumor(doc).unwrap();
            assert_eq!(pred.about_cure, *label != RumorLabel::NotCure, "{doc:?}");
            if pred.about_cure {
                assert_eq!(pred.kind, Some(*label), "{doc:?}");
            }
        }
        for (doc, label) in &control {
            let pred = cascade.predict_control(doc).unwrap();
            assert_eq!(pred.cancer, label.cancer, "{doc:?}");
            if label.cancer {
                assert_eq!(pred.personal, label.personal, "{doc:?}");
                assert_eq!(pred.suggests_cure, label.suggests_cure, "{doc:?}");
            }
        }
    }

    #[test]
    fn single_class_training_is_error() {
        let rumor: Vec<(Vec<String>, RumorLabel)> = (0..20)
            .map(|i| (toks(&format!("cure word{i} heal")), RumorLabel::ClaimsCure))
            .collect();
        let err = train_cascade(&rumor, &control_fixture(), &CascadeConfig::default());
        assert!(err.is_err());
    }

    #[test]
    fn label_round_trip() {
        for l in [
            RumorLabel::NotCure,
            RumorLabel::ClaimsCure,
            RumorLabel::Prevention,
            RumorLabel::Debunking,
        ] {
            assert_eq!(RumorLabel::parse(l.as_str()).unwrap(), l);
        }
        for s in [
            "not_cancer",
            "cancer",
            "cancer_personal",
            "cancer_cure",
            "cancer_personal_cure",
        ] {
            assert_eq!(ControlLabel::parse(s).unwrap().as_str(), s);
        }
        assert!(RumorLabel::parse("bogus").is_err());
    }

    #[test]
    fn group_rules() {
        let j = |claims, cancer, personal, suggests| PostJudgment {
            claims_cure: claims,
            cancer,
            personal_cancer: personal,
            suggests_cure: suggests,
        };
        let mut m = BTreeMap::new();
        // one claims-cure and one prevention-ish post -> Rumor
        m.insert("u1".to_string(), vec![j(true, true, false, true), j(false, false, false, false)]);
        // cancer posts, none cure-suggesting, one personal -> ControlPersonal
        m.insert("u2".to_string(), vec![j(false, true, true, false), j(false, true, false, false)]);
        // cancer posts, none personal -> ControlNonPersonal
        m.insert("u3".to_string(), vec![j(false, true, false, false)]);
        // only an irrelevant post -> Excluded
        m.insert("u4".to_string(), vec![j(false, false, false, false)]);
        // cancer post but also a cure-suggesting one -> Excluded
        m.insert("u5".to_string(), vec![j(false, true, false, true)]);
        let g = derive_groups(&m);
        assert_eq!(g["u1"], UserGroup::Rumor);
        assert_eq!(g["u2"], UserGroup::ControlPersonal);
        assert_eq!(g["u3"], UserGroup::ControlNonPersonal);
        assert_eq!(g["u4"], UserGroup::Excluded);
        assert_eq!(g["u5"], UserGroup::Excluded);
        assert_eq!(g.len(), m.len());
    }
}
