//! Group-comparison statistics: Mann-Whitney U with Bonferroni correction,
//! box statistics with 90th-percentile trimming, follower matching, and
//! word-frequency tables.

use std::collections::BTreeMap;

use statrs::distribution::{ContinuousCDF, Normal};

use crate::lexicon::WordList;
use crate::{Error, Result};

/// U statistic of group `a` against group `b` (greater-than pairs plus
/// half the ties).
fn u_of(a: &[f64], b: &[f64]) -> f64 {
    let mut u = 0.0;
    for &x in a {
        for &y in b {
            if x > y {
                u += 1.0;
            } else if x == y {
                u += 0.5;
            }
        }
    }
    u
}

fn exact_p(a: &[f64], b: &[f64], u_obs: f64) -> f64 {
    let mut combined: Vec<f64> = a.iter().chain(b).copied().collect();
    combined.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let n = a.len();
    let total = combined.len();
    let nm = (a.len() * b.len()) as f64;

    // walk all C(total, n) index subsets for group a
    let mut idx: Vec<usize> = (0..n).collect();
    let mut low = 0u64; // arrangements with U_a <= u_obs
    let mut high = 0u64; // arrangements with U_a >= nm - u_obs
    let mut count = 0u64;
    loop {
        let ga: Vec<f64> = idx.iter().map(|&i| combined[i]).collect();
        let gb: Vec<f64> = (0..total)
            .filter(|i| !idx.contains(i))
            .map(|i| combined[i])
            .collect();
        let u = u_of(&ga, &gb);
        if u <= u_obs + 1e-12 {
            low += 1;
        }
        if u >= nm - u_obs - 1e-12 {
            high += 1;
        }
        count += 1;

        // next combination in lexicographic order
        let mut i = n;
        loop {
            if i == 0 {
                return ((low + high) as f64 / count as f64).min(1.0);
            }
            i -= 1;
            if idx[i] != i + total - n {
                break;
            }
        }
        idx[i] += 1;
        for j in i + 1..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn normal_approx_p(a: &[f64], b: &[f64], u_obs: f64) -> f64 {
    let n = a.len() as f64;
    let m = b.len() as f64;
    let big_n = n + m;
    let mut combined: Vec<f64> = a.iter().chain(b).copied().collect();
    combined.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < combined.len() {
        let mut j = i;
        while j < combined.len() && combined[j] == combined[i] {
            j += 1;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }
    let mean = n * m / 2.0;
    let var = n * m / 12.0 * ((big_n + 1.0) - tie_term / (big_n * (big_n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    // u_obs = min(U_a, U_b) <= mean; continuity correction toward the mean
    let z = (u_obs - mean + 0.5) / var.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    (2.0 * normal.cdf(z)).min(1.0)
}

/// Two-sided Mann-Whitney test. U is min(U_a, U_b). Exact enumeration of
/// all group arrangements when the pooled size is at most 12; otherwise a
/// normal approximation with tie-corrected variance and continuity
/// correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidInput("empty group".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite observation".into()));
    }
    let ua = u_of(a, b);
    let ub = a.len() as f64 * b.len() as f64 - ua;
    let u = ua.min(ub);
    let p = if a.len() + b.len() <= 12 {
        exact_p(a, b, u)
    } else {
        normal_approx_p(a, b, u)
    };
    Ok((u, p))
}

/// `min(1, p * m)`, order preserved.
pub fn bonferroni(pvals: &[f64], m: usize) -> Vec<f64> {
    pvals.iter().map(|p| (p * m as f64).min(1.0)).collect()
}

/// Linear interpolation between closest ranks: the q-quantile sits at
/// fractional position (n-1)q of the sorted sample.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + frac * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoxStats {
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub p90: f64,
    /// Values at or below the 90th percentile (display trimming; tests run
    /// on the untrimmed data).
    pub trimmed: Vec<f64>,
}

pub fn box_stats(values: &[f64]) -> Result<BoxStats> {
    if values.is_empty() {
        return Err(Error::InvalidInput("empty sample".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite observation".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let q1 = quantile(&sorted, 0.25);
    let median = quantile(&sorted, 0.5);
    let q3 = quantile(&sorted, 0.75);
    let iqr = q3 - q1;
    let lo_fence = q1 - 1.5 * iqr;
    let hi_fence = q3 + 1.5 * iqr;
    let whisker_low = *sorted
        .iter()
        .find(|&&v| v >= lo_fence)
        .expect("non-empty sample");
    let whisker_high = *sorted
        .iter()
        .rev()
        .find(|&&v| v <= hi_fence)
        .expect("non-empty sample");
    let p90 = quantile(&sorted, 0.9);
    let trimmed = sorted.iter().copied().filter(|&v| v <= p90).collect();
    Ok(BoxStats {
        median,
        q1,
        q3,
        whisker_low,
        whisker_high,
        p90,
        trimmed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FollowerMatching {
    pub pairs: Vec<(String, String)>,
    /// Rumor users left over once controls are exhausted.
    pub unmatched: Vec<String>,
}

/// 1:1 matching without replacement: rumor users in ascending follower
/// order each take the unmatched control with the smallest absolute
/// follower difference (ties to the smaller control id).
pub fn match_on_followers(
    rumor: &[(String, f64)],
    control: &[(String, f64)],
) -> Result<FollowerMatching> {
    if rumor.is_empty() || control.is_empty() {
        return Err(Error::InvalidInput("empty group".into()));
    }
    let mut order: Vec<&(String, f64)> = rumor.iter().collect();
    order.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let mut available: Vec<&(String, f64)> = control.iter().collect();
    available.sort_by(|a, b| a.0.cmp(&b.0));
    let mut pairs = Vec::new();
    let mut unmatched = Vec::new();
    for (rid, rf) in order {
        if available.is_empty() {
            unmatched.push(rid.clone());
            continue;
        }
        let best = available
            .iter()
            .enumerate()
            .min_by(|(_, a), (_, b)| {
                (a.1 - rf)
                    .abs()
                    .partial_cmp(&(b.1 - rf).abs())
                    .unwrap()
                    .then(a.0.cmp(&b.0))
            })
            .map(|(i, _)| i)
            .expect("non-empty pool");
        let (cid, _) = available.remove(best);
        pairs.push((rid.clone(), cid.clone()));
    }
    Ok(FollowerMatching { pairs, unmatched })
}

/// Top-k case-folded word frequencies as percentages of all non-stopword
/// word tokens. `words` must already be folded word tokens. Ties at equal
/// count break lexicographically.
pub fn word_frequencies(words: &[String], stopwords: &WordList, k: usize) -> Vec<(String, f64)> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0usize;
    for w in words {
        if stopwords.contains(w) {
            continue;
        }
        *counts.entry(w).or_insert(0) += 1;
        total += 1;
    }
    if total == 0 {
        return Vec::new();
    }
    let mut rows: Vec<(&str, usize)> = counts.into_iter().collect();
    rows.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    rows.truncate(k);
    rows.into_iter()
        .map(|(w, c)| (w.to_string(), 100.0 * c as f64 / total as f64))
        .collect()
}

/// Renders one frequency row, e.g. "love 1.95%".
pub fn frequency_row(word: &str, pct: f64) -> String {
    format!("{word} {pct:.2}%")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn mann_whitney_disjoint_small() {
        let (u, p) = mann_whitney_u(&[1.0, 2.0], &[3.0, 4.0]).unwrap();
        assert_eq!(u, 0.0);
        assert_abs_diff_eq!(p, 2.0 / 6.0, epsilon = 1e-12);
    }

    #[test]
    fn mann_whitney_symmetry() {
        let a = [1.0, 5.0, 3.0];
        let b = [2.0, 4.0, 6.0, 8.0];
        let (u1, p1) = mann_whitney_u(&a, &b).unwrap();
        let (u2, p2) = mann_whitney_u(&b, &a).unwrap();
        assert_eq!(u1, u2);
        assert_abs_diff_eq!(p1, p2, epsilon = 1e-12);
    }

    #[test]
    fn mann_whitney_identical_groups() {
        let a = [1.0, 2.0, 3.0];
        let (u, p) = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(u, a.len() as f64 * a.len() as f64 / 2.0);
        assert_abs_diff_eq!(p, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mann_whitney_normal_branch_reasonable() {
        // clearly separated large groups: p should be tiny
        let a: Vec<f64> = (0..20).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..20).map(|i| 100.0 + i as f64).collect();
        let (u, p) = mann_whitney_u(&a, &b).unwrap();
        assert_eq!(u, 0.0);
        assert!(p < 1e-6);
    }

    #[test]
    fn mann_whitney_empty_group_is_error() {
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    #[test]
    fn bonferroni_cases() {
        assert_eq!(bonferroni(&[0.01], 3), vec![0.03]);
        assert_eq!(bonferroni(&[0.5, 0.9], 2), vec![1.0, 1.0]);
        assert_eq!(bonferroni(&[0.2], 1), vec![0.2]);
    }

    #[test]
    fn box_stats_one_to_ten() {
        let v: Vec<f64> = (1..=10).map(|i| i as f64).collect();
        let s = box_stats(&v).unwrap();
        assert_abs_diff_eq!(s.median, 5.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q1, 3.25, epsilon = 1e-12);
        assert_abs_diff_eq!(s.q3, 7.75, epsilon = 1e-12);
        assert_abs_diff_eq!(s.p90, 9.1, epsilon = 1e-12);
        assert_eq!(s.trimmed, (1..=9).map(|i| i as f64).collect::<Vec<_>>());
    }

    #[test]
    fn box_stats_degenerate() {
        let s = box_stats(&[4.0, 4.0, 4.0]).unwrap();
        assert_eq!((s.median, s.q1, s.q3), (4.0, 4.0, 4.0));
        let s = box_stats(&[7.0]).unwrap();
        assert_eq!(s.whisker_low, 7.0);
        assert_eq!(s.whisker_high, 7.0);
        assert_eq!(s.trimmed, vec![7.0]);
    }

    #[test]
    fn follower_matching_rules() {
        let r = |id: &str, f: f64| (id.to_string(), f);
        let m = match_on_followers(&[r("r1", 10.0)], &[r("c1", 9.0), r("c2", 20.0)]).unwrap();
        assert_eq!(m.pairs, vec![("r1".to_string(), "c1".to_string())]);

        let m = match_on_followers(&[r("r1", 10.0), r("r2", 5.0)], &[r("c1", 9.0)]).unwrap();
        // r2 (fewer followers) goes first and takes the only control
        assert_eq!(m.pairs, vec![("r2".to_string(), "c1".to_string())]);
        assert_eq!(m.unmatched, vec!["r1".to_string()]);

        // equidistant controls: smaller id wins
        let m = match_on_followers(&[r("r1", 10.0)], &[r("c2", 12.0), r("c1", 8.0)]).unwrap();
        assert_eq!(m.pairs[0].1, "c1");
    }

    #[test]
    fn follower_matching_no_repeats() {
        let rumor: Vec<(String, f64)> = (0..5).map(|i| (format!("r{i}"), i as f64)).collect();
        let control: Vec<(String, f64)> = (0..5).map(|i| (format!("c{i}"), 4.0 - i as f64)).collect();
        let m = match_on_followers(&rumor, &control).unwrap();
        let mut ids: Vec<&String> = m.pairs.iter().map(|(_, c)| c).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), m.pairs.len());
    }

    #[test]
    fn word_frequency_counts() {
        let none = WordList::new("stopwords", Vec::<String>::new());
        let words: Vec<String> = ["a", "a", "b"].iter().map(|s| s.to_string()).collect();
        let rows = word_frequencies(&words, &none, 20);
        assert_eq!(rows[0].0, "a");
        assert_abs_diff_eq!(rows[0].1, 200.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(rows[1].1, 100.0 / 3.0, epsilon = 1e-9);
        let total: f64 = rows.iter().map(|(_, p)| p).sum();
        assert_abs_diff_eq!(total, 100.0, epsilon = 1e-9);

        let stops = WordList::new("stopwords", ["a", "b"]);
        assert!(word_frequencies(&words, &stops, 20).is_empty());
    }

    #[test]
    fn frequency_row_format() {
        assert_eq!(frequency_row("love", 1.9512), "love 1.95%");
    }

    #[test]
    fn exact_matches_normal_approximately() {
        // spot check: on moderately separated 6+6 data the exact and the
        // approximate branch should not disagree wildly
        let a = [1.0, 2.0, 3.5, 4.0, 5.5, 7.0];
        let b = [2.5, 3.0, 4.5, 6.0, 6.5, 8.0];
        let ua = u_of(&a, &b);
        let u = ua.min(36.0 - ua);
        let pe = exact_p(&a, &b, u);
        let pn = normal_approx_p(&a, &b, u);
        assert!((pe - pn).abs() < 0.02, "exact {pe} vs normal {pn}");
    }
}
