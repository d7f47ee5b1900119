//! Rank score schemes.
//!
//! Each scheme is a strictly increasing map from rank `i ∈ 1..=N` to a score;
//! a two-sample statistic sums the scores of the x-group's ranks.
//!
//! | scheme     | score of rank `i` among `N`                      | kind     |
//! |------------|--------------------------------------------------|----------|
//! | `wilcoxon` | `i`                                              | integer  |
//! | `fyt`      | `E[Z_(i:N)]`, expected normal order statistic     | float    |
//! | `vdw`      | `Φ⁻¹(i/(N+1))`                                    | float    |
//! | `laplace`  | Laplace quantile at `i/(N+1)`                     | float    |
//! | `savage`   | `Σ_{j=N+1-i}^{N} 1/j`, expected exponential order statistic | rational |
//!
//! The first four are antisymmetric about the middle rank (`wilcoxon` after
//! centring), so reflected rank sets can tie in all of them at once. `savage`
//! is skewed and separates such sets.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use astro_float::BigFloat;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numeric::{expected_normal_order_statistics, Normal, Precision, RM};
use crate::order::{OrdValue, Score};

use super::sample::TwoSample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScoreScheme {
    WilcoxonRanks,
    NormalScoresFyt,
    VanDerWaerden,
    LaplaceScores,
    Savage,
}

impl ScoreScheme {
    pub const ALL: [ScoreScheme; 5] = [
        ScoreScheme::WilcoxonRanks,
        ScoreScheme::NormalScoresFyt,
        ScoreScheme::VanDerWaerden,
        ScoreScheme::LaplaceScores,
        ScoreScheme::Savage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScoreScheme::WilcoxonRanks => "wilcoxon",
            ScoreScheme::NormalScoresFyt => "fyt",
            ScoreScheme::VanDerWaerden => "vdw",
            ScoreScheme::LaplaceScores => "laplace",
            ScoreScheme::Savage => "savage",
        }
    }
}

impl fmt::Display for ScoreScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScoreScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScoreScheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s.trim())
            .ok_or_else(|| Error::InvalidCascade(format!("unknown score scheme `{s}`")))
    }
}

/// Scores for ranks `1..=N`, index `i - 1`.
#[derive(Debug, Clone)]
pub enum ScoreVector {
    Ranks(usize),
    Exact(Vec<BigRational>),
    Float(Vec<BigFloat>, Precision),
}

impl ScoreVector {
    pub fn len(&self) -> usize {
        match self {
            ScoreVector::Ranks(n) => *n,
            ScoreVector::Exact(v) => v.len(),
            ScoreVector::Float(v, _) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn score(&self, rank: usize) -> OrdValue {
        match self {
            ScoreVector::Ranks(_) => OrdValue::Rank(rank as i64),
            ScoreVector::Exact(v) => OrdValue::Rational(v[rank - 1].clone()),
            ScoreVector::Float(v, p) => OrdValue::Score(Score::new(v[rank - 1].clone(), *p)),
        }
    }

    /// Sum of the scores of `ranks`, accumulated in the order given.
    /// Callers pass ranks ascending so that equal rank sets always produce
    /// bit-identical sums.
    pub fn sum(&self, ranks: &[usize]) -> OrdValue {
        match self {
            ScoreVector::Ranks(_) => OrdValue::Rank(ranks.iter().map(|&r| r as i64).sum()),
            ScoreVector::Exact(v) => {
                OrdValue::Rational(ranks.iter().fold(BigRational::zero(), |acc, &r| acc + &v[r - 1]))
            }
            ScoreVector::Float(v, p) => {
                let bits = p.bits();
                let mut acc = BigFloat::from_word(0, bits);
                for &r in ranks {
                    acc = acc.add(&v[r - 1], bits, RM);
                }
                OrdValue::Score(Score::new(acc, *p))
            }
        }
    }
}

type CacheKey = (ScoreScheme, usize, Precision);

fn cache() -> &'static Mutex<HashMap<CacheKey, Arc<ScoreVector>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<ScoreVector>>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// Score vector of `scheme` for a pooled sample of size `total`, cached per
/// `(scheme, total, precision)`.
pub fn score_vector(scheme: ScoreScheme, total: usize, precision: Precision) -> Result<Arc<ScoreVector>> {
    let key = (scheme, total, precision);
    if let Some(v) = cache().lock().expect("score cache poisoned").get(&key) {
        return Ok(Arc::clone(v));
    }
    let computed = Arc::new(compute_scores(scheme, total, precision)?);
    let mut guard = cache().lock().expect("score cache poisoned");
    Ok(Arc::clone(guard.entry(key).or_insert(computed)))
}

fn compute_scores(scheme: ScoreScheme, total: usize, precision: Precision) -> Result<ScoreVector> {
    let n = total;
    Ok(match scheme {
        ScoreScheme::WilcoxonRanks => ScoreVector::Ranks(n),
        ScoreScheme::Savage => {
            let mut out = Vec::with_capacity(n);
            let mut acc = BigRational::zero();
            for i in 1..=n {
                acc += BigRational::new(1.into(), ((n + 1 - i) as u64).into());
                out.push(acc.clone());
            }
            ScoreVector::Exact(out)
        }
        ScoreScheme::NormalScoresFyt => {
            ScoreVector::Float(expected_normal_order_statistics(n, precision)?, precision)
        }
        ScoreScheme::VanDerWaerden => {
            let mut normal = Normal::new(precision.bits())?;
            let lower = (1..=n / 2)
                .map(|i| normal.quantile(&BigRational::new(i.into(), (n + 1).into())))
                .collect::<Result<Vec<_>>>()?;
            ScoreVector::Float(mirror(lower, n, precision), precision)
        }
        ScoreScheme::LaplaceScores => {
            // Q(p) = ln(2p) below the median, -ln(2(1-p)) above it
            let mut normal = Normal::new(precision.bits())?;
            let lower = (1..=n / 2)
                .map(|i| normal.ln(&BigRational::new((2 * i).into(), (n + 1).into())))
                .collect::<Result<Vec<_>>>()?;
            ScoreVector::Float(mirror(lower, n, precision), precision)
        }
    })
}

/// Completes an antisymmetric score vector from its lower half.
fn mirror(lower: Vec<BigFloat>, n: usize, precision: Precision) -> Vec<BigFloat> {
    let mut out = lower.clone();
    if n % 2 == 1 {
        out.push(BigFloat::from_word(0, precision.bits()));
    }
    out.extend(lower.iter().rev().map(BigFloat::neg));
    out
}

/// Sum of the x-group's scores. Wilcoxon sums are integer ranks, Savage sums
/// exact rationals, the rest multi-precision scores.
pub fn score_sum(sample: &TwoSample, scheme: ScoreScheme, precision: Precision) -> Result<OrdValue> {
    let scores = score_vector(scheme, sample.total(), precision)?;
    Ok(scores.sum(&sample.x_ranks()))
}
