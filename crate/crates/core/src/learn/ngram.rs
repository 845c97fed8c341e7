//! Binary-presence n-gram features over tokenized documents.

use std::collections::{BTreeMap, BTreeSet};

use crate::{Error, Result};

use super::matrix::SparseMatrix;

fn doc_ngrams(tokens: &[String], max_n: usize) -> BTreeSet<String> {
    let mut grams = BTreeSet::new();
    for n in 1..=max_n {
        if tokens.len() < n {
            break;
        }
        for window in tokens.windows(n) {
            grams.insert(window.join(" "));
        }
    }
    grams
}

/// Builds a binary 1..=3-gram vocabulary over `docs`, keeping grams that
/// occur in at least `min_df` documents, sorted lexicographically. Returns
/// the presence matrix and the vocabulary.
pub fn vectorize_ngrams(
    docs: &[Vec<String>],
    min_df: usize,
) -> Result<(SparseMatrix, Vec<String>)> {
    if docs.is_empty() {
        return Err(Error::InvalidInput("empty document collection".into()));
    }
    let per_doc: Vec<BTreeSet<String>> = docs.iter().map(|d| doc_ngrams(d, 3)).collect();
    let mut df: BTreeMap<&str, usize> = BTreeMap::new();
    for grams in &per_doc {
        for g in grams {
            *df.entry(g).or_insert(0) += 1;
        }
    }
    let vocab: Vec<String> = df
        .iter()
        .filter(|(_, &c)| c >= min_df)
        .map(|(g, _)| g.to_string())
        .collect();
    let index: BTreeMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, g)| (g.as_str(), i))
        .collect();
    let rows: Vec<Vec<(usize, f64)>> = per_doc
        .iter()
        .map(|grams| {
            grams
                .iter()
                .filter_map(|g| index.get(g.as_str()).map(|&j| (j, 1.0)))
                .collect()
        })
        .collect();
    let matrix = SparseMatrix::new(vocab.len(), rows)?;
    Ok((matrix, vocab))
}

/// Projects documents onto an existing vocabulary (test-time path): grams
/// absent from the vocabulary are dropped.
pub fn project_ngrams(docs: &[Vec<String>], vocab: &[String]) -> Result<SparseMatrix> {
    let index: BTreeMap<&str, usize> = vocab
        .iter()
        .enumerate()
        .map(|(i, g)| (g.as_str(), i))
        .collect();
    let rows: Vec<Vec<(usize, f64)>> = docs
        .iter()
        .map(|d| {
            doc_ngrams(d, 3)
                .iter()
                .filter_map(|g| index.get(g.as_str()).map(|&j| (j, 1.0)))
                .collect()
        })
        .collect();
    SparseMatrix::new(vocab.len(), rows)
}
