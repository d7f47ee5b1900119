//! Finite probability trials and p-functions over them.
//!
//! A [`FiniteTrial`] is a finite sample space with exact rational outcome
//! probabilities and the discrete σ-algebra. A [`Statistic`] maps every
//! outcome to an [`OrdValue`]; its induced p-function is
//! `p̂(x) = P[f ≤ f(x)]`.
//!
//! All probabilities stay exact, so the classification of a p-function as
//! invalid, conservative or range-exact is decided by rational equality.

use std::cmp::Ordering;

use indexmap::IndexMap;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::order::{OrdValue, Shape, TieKeys};
use crate::rational::is_unit_interval;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteTrial {
    outcomes: IndexMap<String, BigRational>,
}

impl FiniteTrial {
    /// Probabilities must be non-negative and sum to exactly one; labels must
    /// be distinct and there must be at least one outcome.
    pub fn new<L: Into<String>>(outcomes: impl IntoIterator<Item = (L, BigRational)>) -> Result<Self> {
        let mut map = IndexMap::new();
        for (label, prob) in outcomes {
            let label = label.into();
            if prob.is_negative() {
                return Err(Error::InvalidTrial(format!(
                    "outcome `{label}` has negative probability {prob}"
                )));
            }
            if map.insert(label.clone(), prob).is_some() {
                return Err(Error::InvalidTrial(format!("duplicate label `{label}`")));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidTrial("a trial needs at least one outcome".into()));
        }
        let total: BigRational = map.values().sum();
        if !total.is_one() {
            return Err(Error::InvalidTrial(format!("probabilities sum to {total}, not 1")));
        }
        Ok(FiniteTrial { outcomes: map })
    }

    /// Uniform trial on the given labels.
    pub fn uniform<L: Into<String>>(labels: impl IntoIterator<Item = L>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        let p = BigRational::new(1.into(), (labels.len().max(1) as u64).into());
        Self::new(labels.into_iter().map(|l| (l, p.clone())))
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.outcomes.keys().map(String::as_str)
    }

    pub fn outcomes(&self) -> impl Iterator<Item = (&str, &BigRational)> {
        self.outcomes.iter().map(|(l, p)| (l.as_str(), p))
    }

    pub fn prob(&self, label: &str) -> Option<&BigRational> {
        self.outcomes.get(label)
    }

    pub fn zero_probability_labels(&self) -> Vec<&str> {
        self.outcomes
            .iter()
            .filter(|(_, p)| p.is_zero())
            .map(|(l, _)| l.as_str())
            .collect()
    }
}

/// A test statistic: one value per outcome, all of the same shape.
#[derive(Debug, Clone)]
pub struct Statistic {
    values: IndexMap<String, OrdValue>,
    shape: Shape,
}

impl Statistic {
    pub fn new<L: Into<String>>(values: impl IntoIterator<Item = (L, OrdValue)>) -> Result<Self> {
        let mut map = IndexMap::new();
        let mut shape: Option<Shape> = None;
        for (label, value) in values {
            let label = label.into();
            let s = value.shape();
            match &shape {
                Some(expected) if *expected != s => {
                    return Err(Error::ShapeMismatch {
                        left: expected.to_string(),
                        right: format!("{s} (outcome `{label}`)"),
                    })
                }
                None => shape = Some(s),
                _ => {}
            }
            if map.insert(label.clone(), value).is_some() {
                return Err(Error::InvalidTrial(format!("statistic lists `{label}` twice")));
            }
        }
        let shape = shape.ok_or_else(|| Error::InvalidTrial("empty statistic".into()))?;
        Ok(Statistic { values: map, shape })
    }

    /// Views a p-function as a rational-valued statistic.
    pub fn from_pfunction(pfunc: &PFunction) -> Self {
        Statistic {
            values: pfunc
                .values
                .iter()
                .map(|(l, v)| (l.clone(), OrdValue::Rational(v.clone())))
                .collect(),
            shape: Shape::Rational,
        }
    }

    pub fn get(&self, label: &str) -> Option<&OrdValue> {
        self.values.get(label)
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &OrdValue)> {
        self.values.iter().map(|(l, v)| (l.as_str(), v))
    }

    /// The statistic's values in trial order, checking it is total on the
    /// trial and defined nowhere else.
    pub(crate) fn aligned<'a>(&'a self, trial: &FiniteTrial) -> Result<Vec<&'a OrdValue>> {
        let values = trial
            .labels()
            .map(|l| self.values.get(l).ok_or_else(|| Error::MissingOutcome(l.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if let Some(extra) = self.values.keys().find(|l| trial.prob(l).is_none()) {
            return Err(Error::UnknownOutcome(extra.clone()));
        }
        Ok(values)
    }
}

/// Outcomes grouped into classes of equal statistic value, ascending, with
/// the exact mass of each class.
pub(crate) struct LevelSets {
    /// Outcome indices (trial order) per class.
    pub(crate) groups: Vec<Vec<usize>>,
    pub(crate) masses: Vec<BigRational>,
    pub(crate) imprecise: bool,
}

pub(crate) fn level_sets(trial: &FiniteTrial, stat: &Statistic) -> Result<LevelSets> {
    let values = stat.aligned(trial)?;
    let keys = TieKeys::new(&values)?;
    let probs: Vec<&BigRational> = trial.outcomes.values().collect();
    let groups = keys.groups();
    let masses = groups
        .iter()
        .map(|g| g.iter().map(|&i| probs[i]).sum())
        .collect();
    Ok(LevelSets {
        groups,
        masses,
        imprecise: keys.imprecise(),
    })
}

/// A map from outcomes to `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PFunction {
    values: IndexMap<String, BigRational>,
    imprecise_tie: bool,
}

impl PFunction {
    pub fn new<L: Into<String>>(values: impl IntoIterator<Item = (L, BigRational)>) -> Result<Self> {
        let mut map = IndexMap::new();
        for (label, value) in values {
            let label = label.into();
            if !is_unit_interval(&value) {
                return Err(Error::ValueOutOfRange {
                    label,
                    value: value.to_string(),
                });
            }
            map.insert(label, value);
        }
        Ok(PFunction {
            values: map,
            imprecise_tie: false,
        })
    }

    pub fn get(&self, label: &str) -> Option<&BigRational> {
        self.values.get(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BigRational)> {
        self.values.iter().map(|(l, v)| (l.as_str(), v))
    }

    pub fn values(&self) -> &IndexMap<String, BigRational> {
        &self.values
    }

    /// Set when some tie in the underlying statistic was established by score
    /// tolerance rather than exact equality.
    pub fn imprecise_tie(&self) -> bool {
        self.imprecise_tie
    }

    fn aligned<'a>(&'a self, trial: &FiniteTrial) -> Result<Vec<&'a BigRational>> {
        trial
            .labels()
            .map(|l| self.values.get(l).ok_or_else(|| Error::MissingOutcome(l.to_string())))
            .collect()
    }
}

/// `p̂(x) = P[f ≤ f(x)]` for every outcome.
pub fn induce_phat(trial: &FiniteTrial, stat: &Statistic) -> Result<PFunction> {
    let levels = level_sets(trial, stat)?;
    let labels: Vec<&String> = trial.outcomes.keys().collect();
    let mut values = vec![BigRational::zero(); trial.len()];
    let mut cumulative = BigRational::zero();
    for (group, mass) in levels.groups.iter().zip(&levels.masses) {
        cumulative += mass;
        for &i in group {
            values[i] = cumulative.clone();
        }
    }
    Ok(PFunction {
        values: labels.into_iter().cloned().zip(values).collect(),
        imprecise_tie: levels.imprecise,
    })
}

/// The distribution of `f`: distinct values ascending with their exact
/// probabilities.
pub fn induced_measure(trial: &FiniteTrial, stat: &Statistic) -> Result<Vec<(OrdValue, BigRational)>> {
    let levels = level_sets(trial, stat)?;
    let values = stat.aligned(trial)?;
    Ok(levels
        .groups
        .iter()
        .zip(levels.masses)
        .map(|(g, m)| (values[g[0]].clone(), m))
        .collect())
}

/// Whether inducing from the induced p-function reproduces it exactly. Any
/// induced statistic is self-induced, so this returns `true` for every
/// input; it exists as a runtime check of that fact.
pub fn check_idempotence(trial: &FiniteTrial, stat: &Statistic) -> Result<bool> {
    let once = induce_phat(trial, stat)?;
    let twice = induce_phat(trial, &Statistic::from_pfunction(&once))?;
    Ok(once.values == twice.values)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PFunctionClass {
    /// `P[p ≤ witness] = mass > witness`.
    NotPFunction {
        witness: BigRational,
        mass: BigRational,
    },
    Conservative,
    RangeExact,
}

impl PFunctionClass {
    pub fn name(&self) -> &'static str {
        match self {
            PFunctionClass::NotPFunction { .. } => "NotPFunction",
            PFunctionClass::Conservative => "Conservative",
            PFunctionClass::RangeExact => "RangeExact",
        }
    }

    pub fn is_valid(&self) -> bool {
        !matches!(self, PFunctionClass::NotPFunction { .. })
    }
}

/// `(v, P[p ≤ v])` for each distinct value `v` taken on an outcome of
/// positive probability, ascending.
fn support_cdf(trial: &FiniteTrial, pfunc: &PFunction) -> Result<Vec<(BigRational, BigRational)>> {
    let values = pfunc.aligned(trial)?;
    let mut pairs: Vec<(&BigRational, &BigRational)> = values
        .into_iter()
        .zip(trial.outcomes.values())
        .collect();
    pairs.sort_by(|a, b| a.0.cmp(b.0));
    let mut out = Vec::new();
    let mut cumulative = BigRational::zero();
    for level in pairs.chunk_by(|a, b| a.0 == b.0) {
        let mass: BigRational = level.iter().map(|(_, p)| *p).sum();
        cumulative += &mass;
        if mass.is_positive() {
            out.push((level[0].0.clone(), cumulative.clone()));
        }
    }
    Ok(out)
}

/// Classifies by the CDF of `pfunc` at its attained values.
///
/// The CDF is a right-continuous step function, so `P[p ≤ ε] ≤ ε` for all
/// `ε ∈ [0, 1]` holds iff it holds at every attained value. Values taken only
/// on zero-probability outcomes are not steps of the CDF and are ignored.
pub fn classify_pfunction(trial: &FiniteTrial, pfunc: &PFunction) -> Result<PFunctionClass> {
    let mut exact = true;
    for (v, mass) in support_cdf(trial, pfunc)? {
        match mass.cmp(&v) {
            Ordering::Greater => {
                return Ok(PFunctionClass::NotPFunction { witness: v, mass });
            }
            Ordering::Less => exact = false,
            Ordering::Equal => {}
        }
    }
    Ok(if exact {
        PFunctionClass::RangeExact
    } else {
        PFunctionClass::Conservative
    })
}

/// Per outcome, whether `P[p ≤ p(x)] = p(x)` (an exact p-value) as opposed to
/// a strict inequality (conservative) or a violation.
pub fn outcome_exactness(trial: &FiniteTrial, pfunc: &PFunction) -> Result<IndexMap<String, Ordering>> {
    let values = pfunc.aligned(trial)?;
    let probs: Vec<&BigRational> = trial.outcomes.values().collect();
    Ok(trial
        .labels()
        .zip(&values)
        .map(|(label, v)| {
            let mass: BigRational = values
                .iter()
                .zip(&probs)
                .filter(|(w, _)| **w <= *v)
                .map(|(_, p)| *p)
                .sum();
            (label.to_string(), mass.cmp(v))
        })
        .collect())
}

/// `P[p ≤ ε]`.
pub fn cdf_at(trial: &FiniteTrial, pfunc: &PFunction, eps: &BigRational) -> Result<BigRational> {
    let values = pfunc.aligned(trial)?;
    Ok(values
        .into_iter()
        .zip(trial.outcomes.values())
        .filter(|(v, _)| *v <= eps)
        .map(|(_, p)| p)
        .sum())
}

/// `x ↦ min(1, c·p(x))` for `c ≥ 1`.
pub fn scale_pfunction(pfunc: &PFunction, c: &BigRational) -> Result<PFunction> {
    if *c < BigRational::one() {
        return Err(Error::ScaleBelowOne(c.to_string()));
    }
    let one = BigRational::one();
    Ok(PFunction {
        values: pfunc
            .values
            .iter()
            .map(|(l, v)| (l.clone(), (c * v).min(one.clone())))
            .collect(),
        imprecise_tie: pfunc.imprecise_tie,
    })
}

/// Label of the product outcome `(a, b)`.
pub fn product_label(a: &str, b: &str) -> String {
    format!("{a}×{b}")
}

/// The product trial, labelled `a×b`. Fails only if two label pairs render
/// to the same string, which requires labels containing `×`.
pub fn product_trial(first: &FiniteTrial, second: &FiniteTrial) -> Result<FiniteTrial> {
    FiniteTrial::new(first.outcomes().flat_map(|(a, p)| {
        second
            .outcomes()
            .map(move |(b, q)| (product_label(a, b), p * q))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn trial(items: &[(&str, i64, i64)]) -> FiniteTrial {
        FiniteTrial::new(items.iter().map(|&(l, n, d)| (l, q(n, d)))).unwrap()
    }

    fn ranks(items: &[(&str, i64)]) -> Statistic {
        Statistic::new(items.iter().map(|&(l, r)| (l, OrdValue::Rank(r)))).unwrap()
    }

    /// Direct summation: `Σ_y P(y) [f(y) ≤ f(x)]`.
    fn phat_oracle(t: &FiniteTrial, s: &Statistic) -> Vec<BigRational> {
        t.labels()
            .map(|x| {
                let fx = s.get(x).unwrap();
                t.outcomes()
                    .filter(|(y, _)| {
                        crate::order::compare(s.get(y).unwrap(), fx).unwrap().ordering != Ordering::Greater
                    })
                    .map(|(_, p)| p.clone())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn trial_validation() {
        assert!(FiniteTrial::new(Vec::<(&str, BigRational)>::new()).is_err());
        assert!(FiniteTrial::new([("a", q(1, 2)), ("a", q(1, 2))]).is_err());
        assert!(FiniteTrial::new([("a", q(1, 2)), ("b", q(1, 3))]).is_err());
        assert!(FiniteTrial::new([("a", q(3, 2)), ("b", q(-1, 2))]).is_err());
        let t = trial(&[("a", 1, 1), ("z", 0, 1)]);
        assert_eq!(t.zero_probability_labels(), vec!["z"]);
    }

    #[test]
    fn induced_phat_examples() {
        let t = trial(&[("a", 1, 2), ("b", 1, 4), ("c", 1, 4)]);
        let f = ranks(&[("a", 1), ("b", 2), ("c", 3)]);
        let p = induce_phat(&t, &f).unwrap();
        let got: Vec<_> = p.iter().map(|(_, v)| v.clone()).collect();
        assert_eq!(got, phat_oracle(&t, &f));
        assert_eq!(got, vec![q(1, 2), q(3, 4), q(1, 1)]);

        let constant = ranks(&[("a", 7), ("b", 7), ("c", 7)]);
        let p = induce_phat(&t, &constant).unwrap();
        assert!(p.iter().all(|(_, v)| v.is_one()));

        let single = trial(&[("a", 1, 1)]);
        let p = induce_phat(&single, &ranks(&[("a", -4)])).unwrap();
        assert_eq!(p.get("a"), Some(&q(1, 1)));
    }

    #[test]
    fn totality_is_checked() {
        let t = trial(&[("a", 1, 2), ("b", 1, 2)]);
        assert_eq!(
            induce_phat(&t, &ranks(&[("a", 1)])).unwrap_err(),
            Error::MissingOutcome("b".into())
        );
        assert_eq!(
            induce_phat(&t, &ranks(&[("a", 1), ("b", 2), ("c", 3)])).unwrap_err(),
            Error::UnknownOutcome("c".into())
        );
        let mixed = Statistic::new([("a", OrdValue::Rank(1)), ("b", OrdValue::Rational(q(1, 2)))]);
        assert!(matches!(mixed.unwrap_err(), Error::ShapeMismatch { .. }));
    }

    #[test]
    fn induced_measure_examples() {
        let t = trial(&[("a", 1, 2), ("b", 1, 4), ("c", 1, 4)]);
        let m = induced_measure(&t, &ranks(&[("a", 1), ("b", 1), ("c", 2)])).unwrap();
        let masses: Vec<_> = m.iter().map(|(_, p)| p.clone()).collect();
        assert_eq!(masses, vec![q(3, 4), q(1, 4)]);
        assert_eq!(m[0].0.to_string(), "1");

        let m = induced_measure(&t, &ranks(&[("a", 3), ("b", 1), ("c", 2)])).unwrap();
        let masses: Vec<_> = m.iter().map(|(_, p)| p.clone()).collect();
        assert_eq!(masses, vec![q(1, 4), q(1, 4), q(1, 2)]);

        let m = induced_measure(&t, &ranks(&[("a", 0), ("b", 0), ("c", 0)])).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].1, q(1, 1));
    }

    #[test]
    fn idempotence_examples() {
        let t = trial(&[("a", 1, 2), ("b", 1, 4), ("c", 1, 4)]);
        assert!(check_idempotence(&t, &ranks(&[("a", 1), ("b", 2), ("c", 3)])).unwrap());
        assert!(check_idempotence(&t, &ranks(&[("a", 5), ("b", 5), ("c", 5)])).unwrap());
    }

    #[test]
    fn classification_examples() {
        let t = trial(&[("a", 1, 2), ("b", 1, 4), ("c", 1, 4)]);
        let p = induce_phat(&t, &ranks(&[("a", 2), ("b", 1), ("c", 3)])).unwrap();
        assert_eq!(classify_pfunction(&t, &p).unwrap(), PFunctionClass::RangeExact);

        let fair = trial(&[("h", 1, 2), ("t", 1, 2)]);
        let ones = PFunction::new([("h", q(1, 1)), ("t", q(1, 1))]).unwrap();
        assert_eq!(classify_pfunction(&fair, &ones).unwrap(), PFunctionClass::RangeExact);

        let single = trial(&[("a", 1, 1)]);
        let half = PFunction::new([("a", q(1, 2))]).unwrap();
        assert_eq!(
            classify_pfunction(&single, &half).unwrap(),
            PFunctionClass::NotPFunction { witness: q(1, 2), mass: q(1, 1) }
        );

        let conservative = PFunction::new([("h", q(3, 4)), ("t", q(1, 1))]).unwrap();
        assert_eq!(classify_pfunction(&fair, &conservative).unwrap(), PFunctionClass::Conservative);
        let flags = outcome_exactness(&fair, &conservative).unwrap();
        assert_eq!(flags["h"], Ordering::Less);
        assert_eq!(flags["t"], Ordering::Equal);
    }

    #[test]
    fn zero_probability_outcomes_do_not_affect_classification() {
        let t = trial(&[("a", 1, 1), ("z", 0, 1)]);
        let p = PFunction::new([("a", q(1, 1)), ("z", q(1, 4))]).unwrap();
        assert_eq!(classify_pfunction(&t, &p).unwrap(), PFunctionClass::RangeExact);
    }

    #[test]
    fn scaling_examples() {
        let p = PFunction::new([("a", q(1, 2)), ("b", q(3, 4)), ("c", q(1, 1))]).unwrap();
        assert_eq!(scale_pfunction(&p, &q(1, 1)).unwrap(), p);
        let doubled = scale_pfunction(&p, &q(2, 1)).unwrap();
        assert!(doubled.iter().all(|(_, v)| v.is_one()));
        assert_eq!(scale_pfunction(&p, &q(1, 2)).unwrap_err(), Error::ScaleBelowOne("1/2".into()));

        let t = trial(&[("a", 1, 2), ("b", 1, 4), ("c", 1, 4)]);
        for c in [q(1, 1), q(3, 2), q(2, 1), q(10, 1)] {
            assert!(classify_pfunction(&t, &scale_pfunction(&p, &c).unwrap()).unwrap().is_valid());
        }
        assert!(PFunction::new([("a", q(5, 4))]).is_err());
    }

    #[test]
    fn product_examples() {
        let coin = trial(&[("h", 1, 2), ("t", 1, 2)]);
        let both = product_trial(&coin, &coin).unwrap();
        assert_eq!(both.len(), 4);
        assert!(both.outcomes().all(|(_, p)| *p == q(1, 4)));

        let t = trial(&[("a", 1, 3), ("b", 2, 3)]);
        let u = trial(&[("c", 1, 2), ("d", 1, 2)]);
        let prod = product_trial(&t, &u).unwrap();
        let got: Vec<_> = prod.outcomes().map(|(l, p)| (l.to_string(), p.clone())).collect();
        // pairwise product oracle
        let expected: Vec<_> = [("a", q(1, 3)), ("b", q(2, 3))]
            .iter()
            .flat_map(|(a, p)| [("c", q(1, 2)), ("d", q(1, 2))].map(|(b, r)| (product_label(a, b), p * r)))
            .collect();
        assert_eq!(got, expected);
        assert_eq!(prod.prob(&product_label("a", "c")), Some(&q(1, 6)));

        let single = trial(&[("s", 1, 1)]);
        let copy = product_trial(&t, &single).unwrap();
        let probs: Vec<_> = copy.outcomes().map(|(_, p)| p.clone()).collect();
        assert_eq!(probs, vec![q(1, 3), q(2, 3)]);
    }
}
