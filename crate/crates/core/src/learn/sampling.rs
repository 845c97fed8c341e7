//! Class rebalancing: SMOTE oversampling and seeded undersampling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct SmoteOutput {
    /// Synthetic rows, in the original (unstandardized) feature space.
    pub rows: Vec<Vec<f64>>,
    /// Set when `k` had to be lowered because the class is too small.
    pub warning: Option<String>,
}

fn column_stats(rows: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let n = rows.len() as f64;
    let p = rows[0].len();
    (0..p)
        .map(|j| {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / n;
            (mean, var.sqrt())
        })
        .collect()
}

/// Squared distance in standardized space; constant columns contribute 0.
fn dist2(a: &[f64], b: &[f64], stats: &[(f64, f64)]) -> f64 {
    a.iter()
        .zip(b)
        .zip(stats)
        .map(|((&x, &y), &(_, sd))| {
            if sd > 1e-12 {
                ((x - y) / sd).powi(2)
            } else {
                0.0
            }
        })
        .sum()
}

/// Generates `n_synthetic` rows by interpolating each base minority row
/// toward one of its `k` nearest minority neighbors (distances measured in
/// standardized space, interpolation done in the original space). Base rows
/// are taken round-robin in input order; the neighbor and the interpolation
/// fraction come from the seeded generator.
pub fn smote(
    minority: &[Vec<f64>],
    n_synthetic: usize,
    k: usize,
    seed: u64,
) -> Result<SmoteOutput> {
    if minority.len() < 2 {
        return Err(Error::InvalidInput(
            "smote requires at least 2 minority rows".into(),
        ));
    }
    let p = minority[0].len();
    if minority.iter().any(|r| r.len() != p) {
        return Err(Error::InvalidInput("ragged minority rows".into()));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be positive".into()));
    }
    let mut warning = None;
    let k_eff = if k > minority.len() - 1 {
        let k_eff = minority.len() - 1;
        warning = Some(format!(
            "smote: k lowered from {k} to {k_eff} (only {} minority rows)",
            minority.len()
        ));
        k_eff
    } else {
        k
    };

    let stats = column_stats(minority);
    // k nearest neighbors per row, ties broken by index
    let neighbors: Vec<Vec<usize>> = (0..minority.len())
        .map(|i| {
            let mut order: Vec<usize> = (0..minority.len()).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| {
                dist2(&minority[i], &minority[a], &stats)
                    .partial_cmp(&dist2(&minority[i], &minority[b], &stats))
                    .unwrap()
                    .then(a.cmp(&b))
            });
            order.truncate(k_eff);
            order
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n_synthetic);
    for s in 0..n_synthetic {
        let base = s % minority.len();
        let nn = neighbors[base][rng.gen_range(0..k_eff)];
        let u: f64 = rng.gen();
        let row: Vec<f64> = minority[base]
            .iter()
            .zip(&minority[nn])
            .map(|(&x, &y)| x + u * (y - x))
            .collect();
        rows.push(row);
    }
    Ok(SmoteOutput { rows, warning })
}

/// Keeps a seeded uniform sample of `n_target` ids, returned sorted.
pub fn undersample(ids: &[usize], n_target: usize, seed: u64) -> Result<Vec<usize>> {
    if n_target > ids.len() {
        return Err(Error::InvalidInput(format!(
            "cannot undersample {} ids to {n_target}",
            ids.len()
        )));
    }
    let mut pool = ids.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // partial Fisher-Yates: the first n_target slots are the sample
    for i in 0..n_target {
        let j = rng.gen_range(i..pool.len());
        pool.swap(i, j);
    }
    let mut kept = pool[..n_target].to_vec();
    kept.sort_unstable();
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn synthetic_rows_are_convex_combinations() {
        let minority = vec![
            vec![0.0, 0.0],
            vec![10.0, 0.0],
            vec![0.0, 10.0],
            vec![10.0, 10.0],
        ];
        let out = smote(&minority, 20, 2, 7).unwrap();
        assert_eq!(out.rows.len(), 20);
        assert!(out.warning.is_none());
        for row in &out.rows {
            for &v in row {
                assert!((0.0..=10.0).contains(&v));
            }
        }
    }

    #[test]
    fn determinism_by_seed() {
        let minority = vec![vec![1.0], vec![2.0], vec![5.0]];
        let a = smote(&minority, 9, 2, 42).unwrap();
        let b = smote(&minority, 9, 2, 42).unwrap();
        assert_eq!(a.rows, b.rows);
        let c = smote(&minority, 9, 2, 43).unwrap();
        assert_ne!(a.rows, c.rows);
    }

    #[test]
    fn k_lowered_with_warning() {
        let minority = vec![vec![0.0], vec![1.0], vec![2.0]];
        let out = smote(&minority, 4, 5, 1).unwrap();
        assert!(out.warning.unwrap().contains("lowered"));
    }

    #[test]
    fn too_few_rows_is_error() {
        assert!(smote(&[vec![1.0]], 3, 2, 1).is_err());
    }

    #[test]
    fn undersample_sorted_subset_and_errors() {
        let ids: Vec<usize> = (0..50).collect();
        let kept = undersample(&ids, 10, 3).unwrap();
        assert_eq!(kept.len(), 10);
        assert!(kept.windows(2).all(|w| w[0] < w[1]));
        assert!(kept.iter().all(|i| ids.contains(i)));
        assert_eq!(undersample(&ids, 10, 3).unwrap(), kept);
        assert!(undersample(&ids, 51, 3).is_err());
    }
}
