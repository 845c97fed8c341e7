//! Desk-scale pipeline for modeling users prone to posting unproven health
//! "cure" claims on social media.
//!
//! The crate is organized around the stages of that pipeline:
//!
//! - [`corpus`]: post/profile/annotation archives and crowd-label aggregation
//! - [`querylang`]: boolean topic-query grammar and corpus matching
//! - [`userfilter`]: organization, name-dictionary, and tweeting-rate filters
//! - [`lexicon`]: category lexicons, word lists, and medical-domain matching
//! - [`features`]: tokenization and per-post / per-user feature extraction
//! - [`learn`]: n-gram vectorization, L1 logistic regression, SMOTE,
//!   forward AIC selection, relevance cascades, and user-group derivation
//! - [`stats`]: Mann-Whitney U, Bonferroni, box statistics, follower matching
//! - [`synth`]: deterministic synthetic fixture generation for tests and demos

pub mod corpus;
pub mod error;
pub mod features;
pub mod learn;
pub mod lexicon;
pub mod querylang;
pub mod stats;
pub mod synth;
pub mod userfilter;

pub use error::Error;

pub type Result<T> = std::result::Result<T, Error>;
