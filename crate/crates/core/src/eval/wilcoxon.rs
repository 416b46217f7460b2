//! Two-tailed Wilcoxon signed-rank test for paired per-query scores.

use statrs::distribution::{ContinuousCDF, Normal};

use super::EvalError;

/// Above this many non-zero differences the normal approximation is used.
pub const EXACT_LIMIT: usize = 25;

/// Default Bonferroni factor (number of test collections compared).
pub const DEFAULT_CORRECTION: f64 = 4.0;

const SIGNIFICANCE: f64 = 0.05;

/// Differences closer than this are treated as equal; metric values such as
/// `3/5 - 1/5` and `2/5 - 0/5` otherwise differ in the last bit.
const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignificanceResult {
    pub p_value: f64,
    pub significant_95: bool,
    pub significant_bonferroni: bool,
    pub n_effective: usize,
    /// Sum of ranks of positive differences (`a - b > 0`).
    pub w_plus: f64,
}

/// Ranks of the absolute differences with ties averaged, doubled so they are integers.
fn doubled_ranks(abs: &[f64]) -> Vec<u64> {
    let mut order: Vec<usize> = (0..abs.len()).collect();
    order.sort_by(|&i, &j| abs[i].total_cmp(&abs[j]));
    let mut ranks = vec![0u64; abs.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && abs[order[end]] - abs[order[start]] <= TIE_EPS {
            end += 1;
        }
        // positions start+1 ..= end share the average rank (start+1+end)/2
        let doubled = (start + 1 + end) as u64;
        for &i in &order[start..end] {
            ranks[i] = doubled;
        }
        start = end;
    }
    ranks
}

pub fn wilcoxon_signed_rank(
    a: &[f64],
    b: &[f64],
    correction: f64,
) -> Result<SignificanceResult, EvalError> {
    if a.len() != b.len() {
        return Err(EvalError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(EvalError::Empty);
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| d.abs() > TIE_EPS)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(SignificanceResult {
            p_value: 1.0,
            significant_95: false,
            significant_bonferroni: false,
            n_effective: 0,
            w_plus: 0.0,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let ranks = doubled_ranks(&abs);
    let w2: u64 = diffs
        .iter()
        .zip(&ranks)
        .filter(|(d, _)| **d > 0.0)
        .map(|(_, r)| r)
        .sum();
    let p_value = if n <= EXACT_LIMIT {
        exact_p_value(&ranks, w2)
    } else {
        normal_p_value(&ranks, w2)
    };
    Ok(SignificanceResult {
        p_value,
        significant_95: p_value < SIGNIFICANCE,
        significant_bonferroni: p_value < SIGNIFICANCE / correction,
        n_effective: n,
        w_plus: w2 as f64 / 2.0,
    })
}

/// Exact null distribution of the doubled statistic by dynamic programming
/// over the (integer) doubled ranks.
fn exact_p_value(ranks: &[u64], w2: u64) -> f64 {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0f64; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0usize;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let all: f64 = counts.iter().sum();
    let lower: f64 = counts[..=w2 as usize].iter().sum();
    let upper: f64 = counts[w2 as usize..].iter().sum();
    (2.0 * lower.min(upper) / all).min(1.0)
}

fn normal_p_value(ranks: &[u64], w2: u64) -> f64 {
    let n = ranks.len() as f64;
    let w = w2 as f64 / 2.0;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_adjust = 0.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_unstable();
    let mut i = 0;
    while i < sorted.len() {
        let j = sorted[i..].iter().take_while(|&&r| r == sorted[i]).count();
        let t = j as f64;
        tie_adjust += t * t * t - t;
        i += j;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_adjust / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
    let std_normal = Normal::new(0.0, 1.0).expect("valid normal");
    (2.0 * (1.0 - std_normal.cdf(z))).min(1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_samples() {
        let r = wilcoxon_signed_rank(&[0.2, 0.4], &[0.2, 0.4], 4.0).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(!r.significant_95);
        assert_eq!(r.n_effective, 0);
    }

    #[test]
    fn five_positive_differences() {
        let a = [1.0, 2.0, 3.0, 4.0, 5.0];
        let b = [0.0; 5];
        let r = wilcoxon_signed_rank(&a, &b, 4.0).unwrap();
        assert_abs_diff_eq!(r.p_value, 2.0 / 32.0, epsilon = 1e-15);
        assert!(!r.significant_95);
        assert_eq!(r.w_plus, 15.0);
    }

    #[test]
    fn six_positive_differences_significant() {
        let a = [0.6, 0.8, 0.4, 1.0, 0.6, 0.4];
        let b = [0.0; 6];
        let r = wilcoxon_signed_rank(&a, &b, 4.0).unwrap();
        assert_abs_diff_eq!(r.p_value, 2.0 / 64.0, epsilon = 1e-15);
        assert!(r.significant_95);
        assert!(!r.significant_bonferroni);
    }

    #[test]
    fn float_noise_ties() {
        let ranks = doubled_ranks(&[(0.6f64 - 0.2).abs(), 0.4, 0.2]);
        assert_eq!(ranks, vec![5, 5, 2]);
    }

    #[test]
    fn symmetric_in_arguments() {
        let a = [0.2, 0.4, 0.8, 0.6, 0.0, 1.0, 0.2];
        let b = [0.4, 0.4, 0.2, 0.0, 0.2, 0.6, 0.6];
        let x = wilcoxon_signed_rank(&a, &b, 4.0).unwrap();
        let y = wilcoxon_signed_rank(&b, &a, 4.0).unwrap();
        assert_eq!(x.p_value, y.p_value);
    }

    #[test]
    fn normal_approximation_for_large_samples() {
        let a: Vec<f64> = (0..40).map(|i| (i % 7) as f64 / 10.0 + 0.05).collect();
        let b: Vec<f64> = (0..40).map(|i| (i % 5) as f64 / 10.0).collect();
        let r = wilcoxon_signed_rank(&a, &b, 4.0).unwrap();
        assert!(r.n_effective > EXACT_LIMIT);
        assert!((0.0..=1.0).contains(&r.p_value));
        let strong = wilcoxon_signed_rank(&vec![1.0; 30], &vec![0.0; 30], 4.0).unwrap();
        assert!(strong.significant_bonferroni);
    }

    #[test]
    fn errors() {
        assert_eq!(
            wilcoxon_signed_rank(&[1.0], &[], 4.0),
            Err(EvalError::LengthMismatch(1, 0))
        );
        assert_eq!(wilcoxon_signed_rank(&[], &[], 4.0), Err(EvalError::Empty));
    }
}
