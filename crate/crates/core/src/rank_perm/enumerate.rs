//! Exact permutation distributions by full enumeration of the
//! `C(m+n, m)` ways to assign the x-role.
//!
//! Subsets are indexed in lexicographic order of their ascending rank lists.
//! Workers take disjoint index ranges, unrank the first subset of their range
//! and step through the rest; results are stitched back in index order, so
//! the output does not depend on the number of threads.

use num_bigint::BigUint;
use num_rational::BigRational;
use num_traits::ToPrimitive;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numeric::Precision;
use crate::order::{compare, OrdValue, TieKeys};
use crate::rational::binomial;

use super::cascade::{CascadeStatistic, RankEvaluator};
use super::sample::TwoSample;

pub const DEFAULT_MAX_ENUM: u64 = 10_000_000;
const CHUNK: u64 = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumConfig {
    pub precision: Precision,
    pub max_enum: u64,
}

impl Default for EnumConfig {
    fn default() -> Self {
        EnumConfig {
            precision: Precision::default(),
            max_enum: DEFAULT_MAX_ENUM,
        }
    }
}

fn subset_count(m: usize, n: usize, cap: u64) -> Result<u64> {
    let total = binomial((m + n) as u64, m as u64);
    match total.to_u64() {
        Some(c) if c <= cap => Ok(c),
        _ => Err(Error::SizeLimit {
            total: m + n,
            m,
            count: total.to_string(),
            cap,
        }),
    }
}

/// The `index`-th `m`-subset of `1..=total` in lexicographic order.
pub fn unrank_subset(total: usize, m: usize, mut index: u64) -> Vec<usize> {
    let mut out = Vec::with_capacity(m);
    let mut next = 1;
    while out.len() < m {
        let remaining = m - out.len() - 1;
        // subsets that start with `next` at this position
        let with_next = binomial((total - next) as u64, remaining as u64).to_u64().unwrap_or(u64::MAX);
        if index < with_next {
            out.push(next);
        } else {
            index -= with_next;
        }
        next += 1;
    }
    out
}

/// Advances to the next subset in lexicographic order; false after the last.
fn next_subset(ranks: &mut [usize], total: usize) -> bool {
    let m = ranks.len();
    for i in (0..m).rev() {
        if ranks[i] < total - (m - 1 - i) {
            ranks[i] += 1;
            for j in i + 1..m {
                ranks[j] = ranks[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Applies `f` to every subset, in parallel, returning results by index.
fn map_subsets<T: Send>(m: usize, n: usize, count: u64, f: impl Fn(&[usize]) -> T + Sync) -> Vec<T> {
    let total = m + n;
    let chunks: Vec<u64> = (0..count.div_ceil(CHUNK)).collect();
    let parts: Vec<Vec<T>> = chunks
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(count);
            let mut ranks = unrank_subset(total, m, start);
            let mut out = Vec::with_capacity((end - start) as usize);
            for i in start..end {
                out.push(f(&ranks));
                if i + 1 < end {
                    next_subset(&mut ranks, total);
                }
            }
            out
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// The null distribution of a rank cascade: every assignment of the x-role,
/// each with weight `1 / C(m+n, m)`.
#[derive(Debug, Clone)]
pub struct PermutationDistribution {
    m: usize,
    n: usize,
    cascade: CascadeStatistic,
    values: Vec<OrdValue>,
}

impl PermutationDistribution {
    pub fn new(m: usize, n: usize, cascade: &CascadeStatistic, config: &EnumConfig) -> Result<Self> {
        if cascade.has_t() {
            return Err(Error::TCascadeNotExact);
        }
        if m == 0 || n == 0 {
            return Err(Error::InvalidSample(format!("m = {m}, n = {n}: both groups need observations")));
        }
        let count = subset_count(m, n, config.max_enum)?;
        let eval = RankEvaluator::new(&cascade.rank_schemes(), m + n, config.precision)?;
        let values = map_subsets(m, n, count, |ranks| eval.tuple(ranks));
        Ok(PermutationDistribution {
            m,
            n,
            cascade: cascade.clone(),
            values,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn cascade(&self) -> &CascadeStatistic {
        &self.cascade
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn weight(&self) -> BigRational {
        BigRational::new(1.into(), self.values.len().into())
    }

    pub fn values(&self) -> &[OrdValue] {
        &self.values
    }

    /// The x-ranks of subset `index`.
    pub fn subset(&self, index: usize) -> Vec<usize> {
        unrank_subset(self.m + self.n, self.m, index as u64)
    }
}

/// Result of an exact permutation test.
#[derive(Debug, Clone)]
pub struct ExactPValue {
    pub observed: OrdValue,
    pub p_value: BigRational,
    pub count: u64,
    pub enumerated: u64,
    pub imprecise: bool,
}

/// `P[V' ≤ V]` for the cascade value `V` over all `C(m+n, m)` role
/// assignments, as an exact rational. Cascades ending in `t` have no
/// distribution-free null and are rejected.
pub fn exact_perm_pvalue(
    sample: &TwoSample,
    cascade: &CascadeStatistic,
    config: &EnumConfig,
) -> Result<ExactPValue> {
    if cascade.has_t() {
        return Err(Error::TCascadeNotExact);
    }
    let (m, n) = (sample.m(), sample.n());
    let count = subset_count(m, n, config.max_enum)?;
    let eval = RankEvaluator::new(&cascade.rank_schemes(), m + n, config.precision)?;
    let observed = eval.tuple(&sample.x_ranks());
    let flags = map_subsets(m, n, count, |ranks| {
        let c = compare(&eval.tuple(ranks), &observed).expect("same cascade, same shape");
        (c.ordering.is_le(), c.imprecise && c.ordering.is_eq())
    });
    let below = flags.iter().filter(|f| f.0).count() as u64;
    Ok(ExactPValue {
        observed,
        p_value: BigRational::new(below.into(), count.into()),
        count: below,
        enumerated: count,
        imprecise: flags.iter().any(|f| f.1),
    })
}

/// Role assignments whose cascade values tie.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TieGroup {
    /// `P[V ≤ v]` for the shared value.
    pub p_value: BigRational,
    pub subsets: Vec<Vec<usize>>,
}

/// The two role assignments on either side of the `k`-th smallest position in
/// the sorted permutation distribution. `k / C` is attained exactly when they
/// do not tie.
#[derive(Debug, Clone)]
pub struct Boundary {
    pub k: usize,
    pub below_ranks: Vec<usize>,
    pub below: OrdValue,
    pub above_ranks: Vec<usize>,
    pub above: OrdValue,
    pub tied: bool,
}

#[derive(Debug, Clone)]
pub struct AttainableSet {
    pub m: usize,
    pub n: usize,
    pub cascade: CascadeStatistic,
    pub enumerated: u64,
    /// The range of the induced p-function, ascending.
    pub values: Vec<BigRational>,
    /// Every `ε` in `values` satisfies `P[p̂ ≤ ε] = ε`.
    pub range_exact: bool,
    /// Whether some tie rests on the tolerance rather than exact equality.
    pub imprecise: bool,
    pub residual_ties: Vec<TieGroup>,
    sorted: Vec<usize>,
    dist: PermutationDistribution,
}

/// The range of the induced p-function of a rank cascade for group sizes
/// `m`, `n`. It depends on the data only through `m` and `n`.
pub fn attainable_pvalues(m: usize, n: usize, cascade: &CascadeStatistic, config: &EnumConfig) -> Result<AttainableSet> {
    let dist = PermutationDistribution::new(m, n, cascade, config)?;
    let refs: Vec<&OrdValue> = dist.values().iter().collect();
    let keys = TieKeys::new(&refs)?;
    let groups = keys.groups();
    let total = dist.len();
    let c = BigRational::from_integer(total.into());

    let mut values = Vec::with_capacity(groups.len());
    let mut phat = vec![0usize; total];
    let mut residual_ties = Vec::new();
    let mut sorted = Vec::with_capacity(total);
    let mut cum = 0usize;
    for g in &groups {
        cum += g.len();
        let p = BigRational::from_integer(cum.into()) / &c;
        for &i in g {
            phat[i] = cum;
        }
        if g.len() > 1 {
            residual_ties.push(TieGroup {
                p_value: p.clone(),
                subsets: g.iter().map(|&i| dist.subset(i)).collect(),
            });
        }
        sorted.extend_from_slice(g);
        values.push(p);
    }

    // P[p̂ ≤ ε] counted afresh from the per-assignment p-values
    let mut counts = phat.clone();
    counts.sort_unstable();
    let range_exact = values.iter().all(|eps| {
        let below = counts.partition_point(|&k| BigRational::new(k.into(), total.into()) <= *eps);
        BigRational::new(below.into(), total.into()) == *eps
    });

    Ok(AttainableSet {
        m,
        n,
        cascade: cascade.clone(),
        enumerated: total as u64,
        values,
        range_exact,
        imprecise: keys.imprecise(),
        residual_ties,
        sorted,
        dist,
    })
}

/// Difference between an attainable set and a published reference list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceComparison {
    /// Upper end of the window compared, the largest reference value.
    pub window: BigRational,
    /// In the reference but not in the computed set.
    pub missing: Vec<BigRational>,
    /// Computed within the window but not in the reference.
    pub unexpected: Vec<BigRational>,
}

impl ReferenceComparison {
    pub fn matches(&self) -> bool {
        self.missing.is_empty() && self.unexpected.is_empty()
    }
}

impl AttainableSet {
    pub fn distribution(&self) -> &PermutationDistribution {
        &self.dist
    }

    pub fn contains(&self, p: &BigRational) -> bool {
        self.values.binary_search(p).is_ok()
    }

    pub fn is_superset_of(&self, other: &AttainableSet) -> bool {
        other.values.iter().all(|p| self.contains(p))
    }

    /// Values attained here but not in `baseline`.
    pub fn added_relative_to(&self, baseline: &AttainableSet) -> Vec<BigRational> {
        self.values.iter().filter(|p| !baseline.contains(p)).cloned().collect()
    }

    /// Whether every attained value has probability exactly `1/C`, i.e. the
    /// set is `{k/C : k = 1..=C}`.
    pub fn is_uniform(&self) -> bool {
        self.residual_ties.is_empty() && self.values.len() as u64 == self.enumerated
    }

    /// Sorted positions `k` and `k+1` (1-based) of the distribution.
    pub fn boundary(&self, k: usize) -> Option<Boundary> {
        if k == 0 || k >= self.sorted.len() {
            return None;
        }
        let (lo, hi) = (self.sorted[k - 1], self.sorted[k]);
        let below = self.dist.values()[lo].clone();
        let above = self.dist.values()[hi].clone();
        let k_over_c = BigRational::new(k.into(), self.sorted.len().into());
        Some(Boundary {
            k,
            below_ranks: self.dist.subset(lo),
            above_ranks: self.dist.subset(hi),
            below,
            above,
            tied: !self.contains(&k_over_c),
        })
    }

    /// Compares `candidates` (typically the values added by this cascade)
    /// with `reference` inside `[0, window]`, the window defaulting to the
    /// largest reference value.
    pub fn reference_comparison(
        candidates: &[BigRational],
        reference: &[BigRational],
        window: Option<&BigRational>,
    ) -> ReferenceComparison {
        let window = window
            .cloned()
            .or_else(|| reference.iter().max().cloned())
            .unwrap_or_else(|| BigRational::from_integer(0.into()));
        let missing = reference
            .iter()
            .filter(|r| **r <= window && !candidates.contains(r))
            .cloned()
            .collect();
        let unexpected = candidates
            .iter()
            .filter(|c| **c <= window && !reference.contains(c))
            .cloned()
            .collect();
        ReferenceComparison {
            window,
            missing,
            unexpected,
        }
    }
}

/// `C(m+n, m)` without the cap, for reporting.
pub fn enumeration_size(m: usize, n: usize) -> BigUint {
    binomial((m + n) as u64, m as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rank_perm::scores::ScoreScheme;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn cascade(s: &str) -> CascadeStatistic {
        s.parse().unwrap()
    }

    fn cfg() -> EnumConfig {
        EnumConfig::default()
    }

    #[test]
    fn unranking_agrees_with_stepping() {
        let (total, m) = (7, 3);
        let mut ranks = vec![1, 2, 3];
        let mut idx = 0u64;
        loop {
            assert_eq!(unrank_subset(total, m, idx), ranks);
            idx += 1;
            if !next_subset(&mut ranks, total) {
                break;
            }
        }
        assert_eq!(idx, 35);
    }

    #[test]
    fn smallest_cases() {
        let s = TwoSample::from_decimals(&["0"], &["1"]).unwrap();
        let p = exact_perm_pvalue(&s, &cascade("wilcoxon"), &cfg()).unwrap();
        assert_eq!(p.p_value, q(1, 2));

        let s = TwoSample::from_decimals(&["1", "2", "3"], &["4", "5", "6", "7", "8"]).unwrap();
        let p = exact_perm_pvalue(&s, &cascade("wilcoxon"), &cfg()).unwrap();
        assert_eq!(p.p_value, q(1, 56));

        let set = attainable_pvalues(1, 1, &cascade("wilcoxon"), &cfg()).unwrap();
        assert_eq!(set.values, vec![q(1, 2), q(1, 1)]);
    }

    #[test]
    fn rejections() {
        let s = TwoSample::from_decimals(&["0", "5"], &["1", "2"]).unwrap();
        assert!(matches!(exact_perm_pvalue(&s, &cascade("wilcoxon,t"), &cfg()), Err(Error::TCascadeNotExact)));
        let small = EnumConfig { max_enum: 5, ..cfg() };
        assert!(matches!(exact_perm_pvalue(&s, &cascade("wilcoxon"), &small), Err(Error::SizeLimit { .. })));
        assert!(matches!(attainable_pvalues(30, 30, &cascade("wilcoxon"), &cfg()), Err(Error::SizeLimit { .. })));
    }

    #[test]
    fn wilcoxon_six_six_prefix() {
        let set = attainable_pvalues(6, 6, &cascade("wilcoxon"), &cfg()).unwrap();
        let prefix: Vec<BigRational> = [1, 2, 4, 7, 12, 19, 30, 43, 61].iter().map(|&k| q(k, 924)).collect();
        assert_eq!(&set.values[..9], &prefix[..]);
        assert_eq!(set.values.len(), 37);
        assert!(set.range_exact);
        assert!(!set.imprecise);
    }

    #[test]
    fn savage_breaks_every_tie() {
        let set = attainable_pvalues(6, 6, &cascade("wilcoxon,savage"), &cfg()).unwrap();
        assert!(set.is_uniform());
        let all: Vec<BigRational> = (1..=924).map(|k| q(k, 924)).collect();
        assert_eq!(set.values, all);
    }

    #[test]
    fn boundaries() {
        let set = attainable_pvalues(6, 6, &cascade("wilcoxon"), &cfg()).unwrap();
        // 3/924 is not attained: positions 3 and 4 both have R_x = 23
        let b = set.boundary(3).unwrap();
        assert!(b.tied);
        assert_eq!(b.below.to_string(), "(23)");
        assert_eq!(b.above.to_string(), "(23)");
        assert_eq!(b.below_ranks, vec![1, 2, 3, 4, 5, 8]);
        assert_eq!(b.above_ranks, vec![1, 2, 3, 4, 6, 7]);
        assert!(!set.boundary(4).unwrap().tied);
        assert!(set.boundary(0).is_none());
        assert!(set.boundary(924).is_none());
    }

    #[test]
    fn reference_comparison_window() {
        let cands = vec![q(1, 10), q(2, 10), q(9, 10)];
        let cmp = AttainableSet::reference_comparison(&cands, &[q(1, 10), q(3, 10)], None);
        assert_eq!(cmp.missing, vec![q(3, 10)]);
        assert_eq!(cmp.unexpected, vec![q(2, 10)]);
        assert!(!cmp.matches());
        let wide = AttainableSet::reference_comparison(&cands, &[q(1, 10)], Some(&q(1, 1)));
        assert_eq!(wide.unexpected, vec![q(2, 10), q(9, 10)]);
        assert!(AttainableSet::reference_comparison(&cands[..1], &[q(1, 10)], None).matches());
    }

    /// Independent count of `R' ≤ R` from the multiset of subset sums.
    fn rank_sum_oracle(m: usize, n: usize, r: u64) -> u64 {
        let total = m + n;
        (0u32..(1 << total))
            .filter(|mask| mask.count_ones() as usize == m)
            .filter(|mask| (0..total).filter(|b| mask & (1 << b) != 0).map(|b| b as u64 + 1).sum::<u64>() <= r)
            .count() as u64
    }

    fn sample_strategy() -> impl Strategy<Value = TwoSample> {
        (1usize..=5, 1usize..=5)
            .prop_flat_map(|(m, n)| (Just(m), proptest::collection::hash_set(-1000i64..1000, m + n)))
            .prop_flat_map(|(m, set)| (Just(m), Just(set.into_iter().collect::<Vec<_>>()).prop_shuffle()))
            .prop_map(|(m, v)| {
                let v: Vec<BigRational> = v.into_iter().map(|x| BigRational::from_integer(x.into())).collect();
                TwoSample::new(v[..m].to_vec(), v[m..].to_vec()).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn wilcoxon_matches_oracle_and_is_symmetric(s in sample_strategy()) {
            let (m, n) = (s.m(), s.n());
            let c = cascade("wilcoxon");
            let p = exact_perm_pvalue(&s, &c, &cfg()).unwrap();
            let r = crate::rank_perm::sample::rank_sum(&s);
            prop_assert_eq!(p.count, rank_sum_oracle(m, n, r));

            // symmetric about m(N+1)/2: P[R' ≤ r] = P[R' ≥ m(N+1) - r]
            let dist = PermutationDistribution::new(m, n, &c, &cfg()).unwrap();
            let sums: Vec<i64> = dist.values().iter().map(|v| match v.leaves()[0] {
                OrdValue::Rank(r) => *r,
                other => panic!("{other}"),
            }).collect();
            let mirror = (m * (m + n + 1)) as i64 - r as i64;
            let upper = sums.iter().filter(|&&v| v >= mirror).count() as u64;
            prop_assert_eq!(upper, p.count);
        }

        #[test]
        fn invariant_under_monotone_maps(s in sample_strategy(), scale in 1i64..50, shift in -100i64..100) {
            let c = cascade("wilcoxon,fyt,laplace");
            let base = exact_perm_pvalue(&s, &c, &cfg()).unwrap();
            let cubed = s.map(|x| x * x * x * BigRational::from_integer(scale.into()) + BigRational::from_integer(shift.into())).unwrap();
            let moved = exact_perm_pvalue(&cubed, &c, &cfg()).unwrap();
            prop_assert_eq!(base.p_value, moved.p_value);
        }

        #[test]
        fn refinement_only_adds_values(m in 1usize..=5, n in 1usize..=5, extra in 1usize..5) {
            let base = CascadeStatistic::scores(&[ScoreScheme::WilcoxonRanks]).unwrap();
            let longer = base.extended(crate::rank_perm::cascade::CascadeComponent::Scores(ScoreScheme::ALL[extra])).unwrap();
            let a = attainable_pvalues(m, n, &base, &cfg()).unwrap();
            let b = attainable_pvalues(m, n, &longer, &cfg()).unwrap();
            prop_assert!(b.is_superset_of(&a));
            prop_assert!(a.range_exact && b.range_exact);
        }

        #[test]
        fn refinement_never_raises_the_pvalue(s in sample_strategy()) {
            let a = exact_perm_pvalue(&s, &cascade("wilcoxon"), &cfg()).unwrap();
            let b = exact_perm_pvalue(&s, &cascade("wilcoxon,fyt"), &cfg()).unwrap();
            prop_assert!(b.p_value <= a.p_value);
        }
    }
}
