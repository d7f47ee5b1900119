use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use astro_float::BigFloat;
use num_rational::BigRational;
use num_traits::Zero;

use crate::error::{Error, Result};
use crate::numeric::{from_rational, Precision, RM};
use crate::order::{lex_tuple, OrdValue, Score};

use super::sample::TwoSample;
use super::scores::{score_vector, ScoreScheme, ScoreVector};

const GUARD_BITS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CascadeComponent {
    Scores(ScoreScheme),
    StudentT,
}

impl CascadeComponent {
    pub fn name(self) -> &'static str {
        match self {
            CascadeComponent::Scores(s) => s.name(),
            CascadeComponent::StudentT => "t",
        }
    }
}

impl FromStr for CascadeComponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "t" => Ok(CascadeComponent::StudentT),
            other => other.parse().map(CascadeComponent::Scores),
        }
    }
}

/// A tuple of two-sample statistics compared lexicographically: later
/// components only matter where all earlier ones tie.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CascadeStatistic {
    components: Vec<CascadeComponent>,
}

impl CascadeStatistic {
    /// Student's t may appear once, as the last component: it is the only
    /// component that is not a function of the ranks.
    pub fn new(components: Vec<CascadeComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidCascade("a cascade needs at least one component".into()));
        }
        let t_count = components.iter().filter(|c| **c == CascadeComponent::StudentT).count();
        if t_count > 1 {
            return Err(Error::InvalidCascade("`t` may appear only once".into()));
        }
        if t_count == 1 && components.last() != Some(&CascadeComponent::StudentT) {
            return Err(Error::InvalidCascade("`t` must be the last component".into()));
        }
        Ok(CascadeStatistic { components })
    }

    pub fn scores(schemes: &[ScoreScheme]) -> Result<Self> {
        Self::new(schemes.iter().copied().map(CascadeComponent::Scores).collect())
    }

    pub fn components(&self) -> &[CascadeComponent] {
        &self.components
    }

    pub fn has_t(&self) -> bool {
        self.components.last() == Some(&CascadeComponent::StudentT)
    }

    /// The rank-based components, i.e. everything before a trailing `t`.
    pub fn rank_schemes(&self) -> Vec<ScoreScheme> {
        self.components
            .iter()
            .filter_map(|c| match c {
                CascadeComponent::Scores(s) => Some(*s),
                CascadeComponent::StudentT => None,
            })
            .collect()
    }

    /// This cascade followed by `extra`.
    pub fn extended(&self, extra: CascadeComponent) -> Result<Self> {
        let mut components = self.components.clone();
        components.push(extra);
        Self::new(components)
    }

    /// The cascade value on the observed sample.
    pub fn evaluate(&self, sample: &TwoSample, precision: Precision) -> Result<OrdValue> {
        let eval = RankEvaluator::new(&self.rank_schemes(), sample.total(), precision)?;
        let mut parts = eval.parts(&sample.x_ranks());
        if self.has_t() {
            parts.push(student_t(sample, precision)?);
        }
        lex_tuple(parts)
    }
}

impl FromStr for CascadeStatistic {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let components = s
            .split(',')
            .map(str::trim)
            .filter(|c| !c.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        Self::new(components)
    }
}

impl fmt::Display for CascadeStatistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.components.iter().map(|c| c.name()).collect();
        f.write_str(&names.join(","))
    }
}

/// Evaluates the rank-based components of a cascade on a set of x-ranks.
#[derive(Debug, Clone)]
pub(crate) struct RankEvaluator {
    vectors: Vec<Arc<ScoreVector>>,
}

impl RankEvaluator {
    pub(crate) fn new(schemes: &[ScoreScheme], total: usize, precision: Precision) -> Result<Self> {
        let vectors = schemes
            .iter()
            .map(|&s| score_vector(s, total, precision))
            .collect::<Result<Vec<_>>>()?;
        Ok(RankEvaluator { vectors })
    }

    /// One value per component; `ranks` must be ascending.
    pub(crate) fn parts(&self, ranks: &[usize]) -> Vec<OrdValue> {
        self.vectors.iter().map(|v| v.sum(ranks)).collect()
    }

    pub(crate) fn tuple(&self, ranks: &[usize]) -> OrdValue {
        lex_tuple(self.parts(ranks)).expect("rank cascades are non-empty")
    }
}

/// `t = (x̄ - ȳ) / S` with `S² = Σ(xᵢ - x̄)² + Σ(yⱼ - ȳ)²`. The constant
/// factor of the textbook statistic is dropped; it does not change the order.
/// Means and `S²` are exact, the square root runs with guard bits.
pub fn student_t(sample: &TwoSample, precision: Precision) -> Result<OrdValue> {
    let mean = |v: &[BigRational]| v.iter().sum::<BigRational>() / BigRational::from_integer(v.len().into());
    let ss = |v: &[BigRational], c: &BigRational| {
        v.iter().map(|x| (x - c) * (x - c)).sum::<BigRational>()
    };
    let (mx, my) = (mean(sample.xs()), mean(sample.ys()));
    let s2 = ss(sample.xs(), &mx) + ss(sample.ys(), &my);
    if s2.is_zero() {
        return Err(Error::DegenerateSpread);
    }
    let wp = precision.bits() + GUARD_BITS;
    let s = from_rational(&s2, wp).sqrt(wp, RM);
    let t = from_rational(&(mx - my), wp).div(&s, wp, RM);
    Ok(OrdValue::Score(Score::new(t, precision)))
}

/// `t` on floating-point draws, converted exactly before the arithmetic.
pub(crate) fn student_t_f64(xs: &[f64], ys: &[f64], precision: Precision) -> Result<OrdValue> {
    let wp = precision.bits() + GUARD_BITS;
    let conv = |v: &[f64]| v.iter().map(|&x| BigFloat::from_f64(x, wp)).collect::<Vec<_>>();
    let (xs, ys) = (conv(xs), conv(ys));
    let mean = |v: &[BigFloat]| {
        let mut acc = BigFloat::from_word(0, wp);
        for x in v {
            acc = acc.add(x, wp, RM);
        }
        acc.div(&BigFloat::from_u64(v.len() as u64, wp), wp, RM)
    };
    let ss = |v: &[BigFloat], c: &BigFloat| {
        let mut acc = BigFloat::from_word(0, wp);
        for x in v {
            let d = x.sub(c, wp, RM);
            acc = acc.add(&d.mul(&d, wp, RM), wp, RM);
        }
        acc
    };
    let (mx, my) = (mean(&xs), mean(&ys));
    let s2 = ss(&xs, &mx).add(&ss(&ys, &my), wp, RM);
    if s2.is_zero() {
        return Err(Error::DegenerateSpread);
    }
    let t = mx.sub(&my, wp, RM).div(&s2.sqrt(wp, RM), wp, RM);
    Ok(OrdValue::Score(Score::new(t, precision)))
}
