//! Kendall τ_b, Spearman and Pearson correlation.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// Each coefficient fails independently with [`Error::Undefined`] when an
/// input needed for it has zero variance.
#[derive(Debug)]
pub struct RankCorrelations {
    pub kendall_tau_b: Result<f64>,
    pub srcc: Result<f64>,
    pub plcc: Result<f64>,
}

fn check(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Param(format!("length mismatch: {} vs {}", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::Param("need at least two observations".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Param("non-finite observation".into()));
    }
    Ok(())
}

pub fn rank_correlations(x: &[f64], y: &[f64]) -> Result<RankCorrelations> {
    check(x, y)?;
    Ok(RankCorrelations {
        kendall_tau_b: kendall_tau_b(x, y),
        srcc: spearman(x, y),
        plcc: pearson(x, y),
    })
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x, y)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Undefined("correlation of a constant series".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// 1-based ranks, ties sharing their average rank.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x, y)?;
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Sum of `t(t−1)/2` over runs of equal adjacent keys.
fn tied_pairs<T>(sorted: &[T], eq: impl Fn(&T, &T) -> bool) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if eq(&w[0], &w[1]) {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort counting inversions (strict `>` only).
fn count_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = count_swaps(&mut v[..mid], buf) + count_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Tie-corrected Kendall τ_b in O(n log n).
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<f64> {
    check(x, y)?;
    let n = x.len() as u64;
    let n0 = n * (n - 1) / 2;
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let n1 = tied_pairs(&pairs, |a, b| a.0 == b.0);
    let n3 = tied_pairs(&pairs, |a, b| a == b);
    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = count_swaps(&mut ys, &mut buf);
    let n2 = tied_pairs(&ys, |a, b| a.partial_cmp(b) == Some(Ordering::Equal));
    if n1 == n0 || n2 == n0 {
        return Err(Error::Undefined("Kendall tau of a constant series".into()));
    }
    // concordant − discordant over pairs untied in both
    let num = n0 as i128 - n1 as i128 - n2 as i128 + n3 as i128 - 2 * swaps as i128;
    let den = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok((num as f64 / den).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_tau_b(x: &[f64], y: &[f64]) -> f64 {
        let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let sx = (x[i] - x[j]).signum() * (x[i] != x[j]) as i32 as f64;
                let sy = (y[i] - y[j]).signum() * (y[i] != y[j]) as i32 as f64;
                match (sx == 0.0, sy == 0.0) {
                    (true, true) => {}
                    (true, false) => tx += 1,
                    (false, true) => ty += 1,
                    _ if sx == sy => c += 1,
                    _ => d += 1,
                }
            }
        }
        (c - d) as f64 / (((c + d + tx) * (c + d + ty)) as f64).sqrt()
    }

    #[test]
    fn perfect_agreement_and_reversal() {
        let r = rank_correlations(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(r.kendall_tau_b.unwrap(), 1.0);
        assert_eq!(r.srcc.unwrap(), 1.0);
        assert_eq!(r.plcc.unwrap(), 1.0);
        let r = rank_correlations(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert_eq!(r.kendall_tau_b.unwrap(), -1.0);
        assert_eq!(r.srcc.unwrap(), -1.0);
        assert_eq!(r.plcc.unwrap(), -1.0);
    }

    #[test]
    fn tied_example_matches_pair_enumeration() {
        let x = [1.0, 1.0, 2.0, 3.0];
        let y = [1.0, 2.0, 2.0, 3.0];
        let oracle = brute_tau_b(&x, &y);
        // 4 concordant, 0 discordant, 1 x-tie, 1 y-tie: 4 / sqrt(5·5)
        assert!((oracle - 0.8).abs() < 1e-12);
        assert_eq!(kendall_tau_b(&x, &y).unwrap(), oracle);
    }

    #[test]
    fn constant_series_undefined_per_coefficient() {
        let r = rank_correlations(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(r.kendall_tau_b, Err(Error::Undefined(_))));
        assert!(matches!(r.srcc, Err(Error::Undefined(_))));
        assert!(matches!(r.plcc, Err(Error::Undefined(_))));
    }

    #[test]
    fn bad_lengths() {
        assert!(matches!(rank_correlations(&[1.0], &[1.0]), Err(Error::Param(_))));
        assert!(matches!(rank_correlations(&[1.0, 2.0], &[1.0]), Err(Error::Param(_))));
    }

    #[test]
    fn ranks_average_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
    }
}
