//! One-tailed Wilcoxon signed-rank test for paired samples.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Largest sample handled by exact enumeration.
pub const EXACT_LIMIT: usize = 20;
/// Fewest non-zero differences accepted.
pub const MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Exact,
    Normal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignedRank {
    /// Non-zero differences used.
    pub n: usize,
    /// Sum of ranks of positive differences (baseline above variant).
    pub w_plus: f64,
    pub w_minus: f64,
    /// `P(W+ >= observed)` under the null.
    pub p_value: f64,
    pub method: Method,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WilcoxonResult {
    Test(SignedRank),
    InsufficientData { nonzero: usize },
}

impl WilcoxonResult {
    pub fn p_value(&self) -> Option<f64> {
        match self {
            WilcoxonResult::Test(t) => Some(t.p_value),
            WilcoxonResult::InsufficientData { .. } => None,
        }
    }
}

/// Non-zero differences `baseline - variant` and their average ranks by
/// absolute value.
pub fn signed_ranks(pairs: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut d: Vec<f64> = pairs.iter().map(|&(b, v)| b - v).filter(|&x| x != 0.0).collect();
    d.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
    let mut ranks = vec![0.0; d.len()];
    let mut i = 0;
    while i < d.len() {
        let mut j = i;
        while j + 1 < d.len() && d[j + 1].abs() == d[i].abs() {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        ranks[i..=j].iter_mut().for_each(|r| *r = avg);
        i = j + 1;
    }
    (d, ranks)
}

fn statistic(d: &[f64], ranks: &[f64]) -> (f64, f64) {
    let plus = d.iter().zip(ranks).filter(|(x, _)| **x > 0.0).map(|(_, r)| r).sum();
    let minus = d.iter().zip(ranks).filter(|(x, _)| **x < 0.0).map(|(_, r)| r).sum();
    (plus, minus)
}

/// Exact upper-tail probability by counting sign assignments. Ranks are
/// doubled so average ranks stay integral.
pub fn exact_upper_tail(ranks: &[f64], w_plus: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut ways = vec![0f64; total + 1];
    ways[0] = 1.0;
    for &r in &doubled {
        for s in (r..=total).rev() {
            ways[s] += ways[s - r];
        }
    }
    let obs = (w_plus * 2.0).round() as usize;
    let hits: f64 = ways[obs.min(total + 1)..].iter().sum();
    hits / 2f64.powi(ranks.len() as i32)
}

/// Normal approximation with tie and continuity corrections.
pub fn normal_upper_tail(ranks: &[f64], w_plus: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
        let t = j as f64;
        tie_term += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    let z = (w_plus - mean - 0.5) / var.sqrt();
    let std = Normal::standard();
    1.0 - std.cdf(z)
}

/// Tests whether the variant values are stochastically smaller than the
/// baseline values.
pub fn wilcoxon_one_tailed(pairs: &[(f64, f64)]) -> WilcoxonResult {
    let (d, ranks) = signed_ranks(pairs);
    if d.len() < MIN_PAIRS {
        return WilcoxonResult::InsufficientData { nonzero: d.len() };
    }
    let (w_plus, w_minus) = statistic(&d, &ranks);
    let (p_value, method) = if d.len() <= EXACT_LIMIT {
        (exact_upper_tail(&ranks, w_plus), Method::Exact)
    } else {
        (normal_upper_tail(&ranks, w_plus), Method::Normal)
    };
    WilcoxonResult::Test(SignedRank {
        n: d.len(),
        w_plus,
        w_minus,
        p_value: p_value.clamp(0.0, 1.0),
        method,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_positive_differences() {
        let pairs: Vec<_> = (1..=5).map(|i| (10.0 + i as f64, 10.0)).collect();
        let r = wilcoxon_one_tailed(&pairs);
        assert_eq!(r.p_value(), Some(0.03125));
    }

    #[test]
    fn zeros_are_insufficient() {
        let pairs = vec![(1.0, 1.0); 12];
        assert_eq!(
            wilcoxon_one_tailed(&pairs),
            WilcoxonResult::InsufficientData { nonzero: 0 }
        );
    }

    #[test]
    fn ties_share_ranks() {
        let (_, ranks) = signed_ranks(&[(3.0, 1.0), (1.0, 3.0), (5.0, 4.0)]);
        assert_eq!(ranks, vec![1.0, 2.5, 2.5]);
    }

    #[test]
    fn large_sample_uses_normal() {
        let pairs: Vec<_> = (0..30)
            .map(|i| (i as f64 * 0.1 + 1.0, if i % 3 == 0 { 2.0 } else { 0.0 }))
            .collect();
        match wilcoxon_one_tailed(&pairs) {
            WilcoxonResult::Test(t) => {
                assert_eq!(t.method, Method::Normal);
                assert!(t.p_value > 0.0 && t.p_value < 1.0);
            }
            r => panic!("{r:?}"),
        }
    }
}
