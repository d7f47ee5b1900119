//! Gaussian calibration of cascades that end in Student's t.
//!
//! The rank components of a cascade are distribution-free, but `t` is not, so
//! the null distribution of the whole tuple is taken under i.i.d. standard
//! normal observations and estimated by simulation. Draws are split into
//! fixed chunks; chunk `c` uses stream `c` of a ChaCha8 generator keyed by the
//! seed, so the estimate depends only on the seed and the number of draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::Precision;
use crate::order::{compare, lex_tuple, OrdValue};

use super::cascade::{student_t_f64, CascadeStatistic, RankEvaluator};
use super::sample::TwoSample;

const CHUNK: u64 = 1000;
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Debug, Clone)]
pub struct McEstimate {
    pub observed: OrdValue,
    pub count: u64,
    pub draws: u64,
    pub estimate: f64,
    pub std_error: f64,
    /// Wilson score interval at 95%.
    pub ci95: (f64, f64),
    pub imprecise: bool,
}

fn wilson(count: u64, draws: u64) -> (f64, f64) {
    let n = draws as f64;
    let p = count as f64 / n;
    let z2 = Z95 * Z95;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = Z95 / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    let lo = if count == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if count == draws { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

fn x_ranks(values: &[f64], m: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks: Vec<usize> = order
        .iter()
        .enumerate()
        .filter(|(_, &i)| i < m)
        .map(|(r, _)| r + 1)
        .collect();
    ranks.sort_unstable();
    ranks
}

/// Estimates `P[V' ≤ V]` where `V'` is the cascade evaluated on `m + n`
/// independent standard normal draws, the first `m` taking the x-role.
pub fn mc_gaussian_pvalue(
    sample: &TwoSample,
    cascade: &CascadeStatistic,
    draws: u64,
    seed: u64,
    precision: Precision,
) -> Result<McEstimate> {
    if draws == 0 {
        return Err(Error::InvalidSample("the number of draws must be at least 1".into()));
    }
    let (m, total) = (sample.m(), sample.total());
    let observed = cascade.evaluate(sample, precision)?;
    let eval = RankEvaluator::new(&cascade.rank_schemes(), total, precision)?;
    let with_t = cascade.has_t();

    let chunks: Vec<u64> = (0..draws.div_ceil(CHUNK)).collect();
    let tallies = chunks
        .into_par_iter()
        .map(|c| -> Result<(u64, bool)> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c);
            let size = CHUNK.min(draws - c * CHUNK);
            let mut below = 0u64;
            let mut imprecise = false;
            let mut buf = vec![0f64; total];
            for _ in 0..size {
                for v in buf.iter_mut() {
                    *v = StandardNormal.sample(&mut rng);
                }
                let mut parts = eval.parts(&x_ranks(&buf, m));
                if with_t {
                    parts.push(student_t_f64(&buf[..m], &buf[m..], precision)?);
                }
                let value = lex_tuple(parts)?;
                let cmp = compare(&value, &observed)?;
                if cmp.ordering.is_le() {
                    below += 1;
                }
                imprecise |= cmp.imprecise && cmp.ordering.is_eq();
            }
            Ok((below, imprecise))
        })
        .collect::<Result<Vec<_>>>()?;

    let count: u64 = tallies.iter().map(|t| t.0).sum();
    let estimate = count as f64 / draws as f64;
    Ok(McEstimate {
        observed,
        count,
        draws,
        estimate,
        std_error: (estimate * (1.0 - estimate) / draws as f64).sqrt(),
        ci95: wilson(count, draws),
        imprecise: tallies.iter().any(|t| t.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank_perm::enumerate::{exact_perm_pvalue, EnumConfig};
    use num_rational::BigRational;
    use num_traits::ToPrimitive;

    fn p() -> Precision {
        Precision::default()
    }

    #[test]
    fn extreme_t_gives_estimate_near_one() {
        let s = TwoSample::from_decimals(&["1000", "1001", "1002"], &["0", "0.001", "0.002"]).unwrap();
        let est = mc_gaussian_pvalue(&s, &"t".parse().unwrap(), 2000, 7, p()).unwrap();
        assert_eq!(est.count, 2000);
        assert_eq!(est.estimate, 1.0);
        assert!(est.ci95.0 > 0.99);
    }

    #[test]
    fn deterministic_for_a_seed() {
        let s = TwoSample::from_decimals(&["0.3", "1.7", "-0.2"], &["0.1", "0.9", "2.5", "-1"]).unwrap();
        let c: CascadeStatistic = "wilcoxon,t".parse().unwrap();
        let a = mc_gaussian_pvalue(&s, &c, 2500, 42, p()).unwrap();
        let b = mc_gaussian_pvalue(&s, &c, 2500, 42, p()).unwrap();
        assert_eq!((a.count, a.observed.to_string()), (b.count, b.observed.to_string()));
        let other = mc_gaussian_pvalue(&s, &c, 2500, 43, p()).unwrap();
        assert_ne!(a.count, other.count);
    }

    #[test]
    fn rank_component_is_distribution_free() {
        // R_x is maximal and unique there, and t is far in the upper tail,
        // so P[(R', t') ≤ (R, t)] coincides with the exact P[R' ≤ R] = 1
        let s = TwoSample::from_decimals(
            &["1000", "1001", "1002", "1003"],
            &["0", "0.001", "0.002", "0.003"],
        )
        .unwrap();
        let exact = exact_perm_pvalue(&s, &"wilcoxon".parse().unwrap(), &EnumConfig::default()).unwrap();
        let est = mc_gaussian_pvalue(&s, &"wilcoxon,t".parse().unwrap(), 4000, 11, p()).unwrap();
        let target = exact.p_value.to_f64().unwrap();
        assert!((est.estimate - target).abs() <= 3.0 * est.std_error.max(1.0 / 4000.0));
    }

    #[test]
    fn bracketed_by_strict_and_weak_rank_tails() {
        // P[R' < R] ≤ P[(R', t') ≤ (R, t)] ≤ P[R' ≤ R] for any observed t
        let s = TwoSample::from_decimals(&["0.3", "2.2", "-0.4"], &["0.1", "0.9", "2.5", "-1"]).unwrap();
        let cfg = EnumConfig::default();
        let weak = exact_perm_pvalue(&s, &"wilcoxon".parse().unwrap(), &cfg).unwrap();
        // strict tail from the same enumeration: drop the observed rank sum's atom
        let r = crate::rank_perm::sample::rank_sum(&s);
        let dist = crate::rank_perm::enumerate::PermutationDistribution::new(3, 4, &"wilcoxon".parse().unwrap(), &cfg).unwrap();
        let strict = dist
            .values()
            .iter()
            .filter(|v| matches!(v.leaves()[0], OrdValue::Rank(x) if (*x as u64) < r))
            .count();
        let strict = BigRational::new(strict.into(), dist.len().into()).to_f64().unwrap();
        let est = mc_gaussian_pvalue(&s, &"wilcoxon,t".parse().unwrap(), 20000, 5, p()).unwrap();
        let se3 = 3.0 * est.std_error;
        assert!(est.estimate >= strict - se3, "{} < {strict}", est.estimate);
        assert!(est.estimate <= weak.p_value.to_f64().unwrap() + se3);
    }

    #[test]
    fn wilson_interval_contains_estimate() {
        for (k, n) in [(0u64, 10u64), (5, 10), (10, 10), (1, 1000)] {
            let (lo, hi) = wilson(k, n);
            let p = k as f64 / n as f64;
            assert!(lo <= p && p <= hi && (0.0..=1.0).contains(&lo) && hi <= 1.0);
        }
    }

    #[test]
    fn rejects_zero_draws() {
        let s = TwoSample::from_decimals(&["0", "2"], &["1", "3"]).unwrap();
        assert!(mc_gaussian_pvalue(&s, &"t".parse().unwrap(), 0, 1, p()).is_err());
    }
}
