//! Totally ordered codomain values.
//!
//! A statistic takes values in one of four shapes: exact rationals, integer
//! ranks, multi-precision scores, or lexicographic tuples of these. Values of
//! different shapes never compare; conversions are explicit.
//!
//! Scores are the only inexact values. Two scores whose relative distance is
//! at most `10^(2 - digits)` compare equal, and the comparison is marked
//! imprecise so that callers can report ties that were decided by tolerance
//! rather than by exact equality.
//!
//! Lexicographic products of short orders are short, so any tuple built here
//! is an admissible codomain. Nothing in the code checks shortness; finite data
//! cannot violate it.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;

use astro_float::BigFloat;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::numeric::{self, Precision, RM};

/// A multi-precision real value tagged with the number of significant digits
/// it is trusted to.
#[derive(Debug, Clone)]
pub struct Score {
    value: BigFloat,
    precision: Precision,
}

impl Score {
    pub fn new(value: BigFloat, precision: Precision) -> Self {
        let mut value = value;
        let _ = value.set_precision(precision.bits(), RM);
        Score { value, precision }
    }

    pub fn from_rational(q: &BigRational, precision: Precision) -> Self {
        Score {
            value: numeric::from_rational(q, precision.bits()),
            precision,
        }
    }

    pub fn zero(precision: Precision) -> Self {
        Score {
            value: BigFloat::from_word(0, precision.bits()),
            precision,
        }
    }

    pub fn value(&self) -> &BigFloat {
        &self.value
    }

    pub fn precision(&self) -> Precision {
        self.precision
    }

    /// The exact binary value, not the decimal it approximates.
    pub fn to_rational(&self) -> BigRational {
        numeric::to_rational(&self.value)
    }

    pub fn add(&self, other: &Score) -> Score {
        let precision = self.precision.min(other.precision);
        Score {
            value: self.value.add(&other.value, precision.bits(), RM),
            precision,
        }
    }

    fn exact_cmp(&self, other: &Score) -> Ordering {
        match self.value.cmp(&other.value) {
            Some(c) if c < 0 => Ordering::Less,
            Some(c) if c > 0 => Ordering::Greater,
            _ => Ordering::Equal,
        }
    }

    /// Whether the two scores lie within the tie tolerance of the coarser
    /// precision: `|a - b| <= 10^(2-digits) * max(|a|, |b|, 1)`.
    pub fn tied_with(&self, other: &Score) -> bool {
        let precision = self.precision.min(other.precision);
        let bits = precision.bits();
        let diff = self.value.sub(&other.value, bits, RM).abs();
        let one = BigFloat::from_word(1, bits);
        let scale = self.value.abs().max(&other.value.abs()).max(&one);
        let bound = tolerance(precision).mul(&scale, bits, RM);
        diff.cmp(&bound).is_some_and(|c| c <= 0)
    }
}

thread_local! {
    static TOLERANCES: RefCell<HashMap<Precision, BigFloat>> = RefCell::new(HashMap::new());
}

fn tolerance(precision: Precision) -> BigFloat {
    TOLERANCES.with(|cache| {
        cache
            .borrow_mut()
            .entry(precision)
            .or_insert_with(|| precision.tolerance())
            .clone()
    })
}

/// Components of a lexicographic tuple. Always non-empty.
#[derive(Debug, Clone)]
pub struct LexTuple(Vec<OrdValue>);

impl LexTuple {
    pub fn components(&self) -> &[OrdValue] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone)]
pub enum OrdValue {
    Rational(BigRational),
    Score(Score),
    Rank(i64),
    Tuple(LexTuple),
}

/// Structural type of an [`OrdValue`]; only values of equal shape compare.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Shape {
    Rational,
    Score,
    Rank,
    Tuple(Vec<Shape>),
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Rational => f.write_str("rational"),
            Shape::Score => f.write_str("score"),
            Shape::Rank => f.write_str("rank"),
            Shape::Tuple(parts) => {
                f.write_str("(")?;
                for (i, p) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Result of comparing two values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Comparison {
    pub ordering: Ordering,
    /// Some score component was declared equal by tolerance only.
    pub imprecise: bool,
}

/// Builds the lexicographic product of `components`.
pub fn lex_tuple(components: Vec<OrdValue>) -> Result<OrdValue> {
    if components.is_empty() {
        return Err(Error::EmptyTuple);
    }
    Ok(OrdValue::Tuple(LexTuple(components)))
}

/// Compares two values of the same shape. Tuples are decided by their first
/// unequal component.
pub fn compare(a: &OrdValue, b: &OrdValue) -> Result<Comparison> {
    let (sa, sb) = (a.shape(), b.shape());
    if sa != sb {
        return Err(Error::ShapeMismatch {
            left: sa.to_string(),
            right: sb.to_string(),
        });
    }
    let mut imprecise = false;
    for (x, y) in a.leaves().into_iter().zip(b.leaves()) {
        let ordering = match (x, y) {
            (OrdValue::Rational(p), OrdValue::Rational(q)) => p.cmp(q),
            (OrdValue::Rank(p), OrdValue::Rank(q)) => p.cmp(q),
            (OrdValue::Score(p), OrdValue::Score(q)) => {
                let exact = p.exact_cmp(q);
                if exact != Ordering::Equal && p.tied_with(q) {
                    imprecise = true;
                    Ordering::Equal
                } else {
                    exact
                }
            }
            _ => unreachable!("shapes were checked"),
        };
        if ordering != Ordering::Equal {
            return Ok(Comparison {
                ordering,
                imprecise,
            });
        }
    }
    Ok(Comparison {
        ordering: Ordering::Equal,
        imprecise,
    })
}

impl OrdValue {
    pub fn shape(&self) -> Shape {
        match self {
            OrdValue::Rational(_) => Shape::Rational,
            OrdValue::Score(_) => Shape::Score,
            OrdValue::Rank(_) => Shape::Rank,
            OrdValue::Tuple(t) => Shape::Tuple(t.0.iter().map(OrdValue::shape).collect()),
        }
    }

    /// Non-tuple components in lexicographic priority order. Nested tuples
    /// are flattened, which does not change the order.
    pub fn leaves(&self) -> Vec<&OrdValue> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves<'a>(&'a self, out: &mut Vec<&'a OrdValue>) {
        match self {
            OrdValue::Tuple(t) => t.0.iter().for_each(|c| c.collect_leaves(out)),
            leaf => out.push(leaf),
        }
    }

    /// Exact rational value of a rational or rank; `None` for scores and
    /// tuples.
    pub fn as_exact_rational(&self) -> Option<BigRational> {
        match self {
            OrdValue::Rational(q) => Some(q.clone()),
            OrdValue::Rank(r) => Some(BigRational::from_integer((*r).into())),
            _ => None,
        }
    }

    /// Explicit rank-to-rational conversion.
    pub fn rank_to_rational(&self) -> Option<OrdValue> {
        match self {
            OrdValue::Rank(r) => Some(OrdValue::Rational(BigRational::from_integer((*r).into()))),
            _ => None,
        }
    }
}

impl fmt::Display for OrdValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OrdValue::Rational(q) => write!(f, "{q}"),
            OrdValue::Rank(r) => write!(f, "{r}"),
            OrdValue::Score(s) => f.write_str(&numeric::format_sci(&s.value, s.precision.digits())),
            OrdValue::Tuple(t) => {
                f.write_str("(")?;
                for (i, c) in t.0.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Integer sort keys for a batch of same-shape values.
///
/// Each leaf position is ranked separately; score leaves that are chained
/// together by tolerance ties share one rank. Comparing the keys
/// lexicographically is then a genuine total preorder that agrees with
/// [`compare`] whenever tolerance ties are transitive on the batch, which is
/// the case unless the data contain near-ties at the tolerance scale.
#[derive(Debug, Clone)]
pub struct TieKeys {
    keys: Vec<Vec<u32>>,
    imprecise: bool,
}

impl TieKeys {
    pub fn new(values: &[&OrdValue]) -> Result<Self> {
        let Some(first) = values.first() else {
            return Ok(TieKeys {
                keys: Vec::new(),
                imprecise: false,
            });
        };
        let shape = first.shape();
        for v in values.iter().skip(1) {
            let s = v.shape();
            if s != shape {
                return Err(Error::ShapeMismatch {
                    left: shape.to_string(),
                    right: s.to_string(),
                });
            }
        }
        let leaves: Vec<Vec<&OrdValue>> = values.iter().map(|v| v.leaves()).collect();
        let arity = leaves[0].len();
        let mut keys = vec![vec![0u32; arity]; values.len()];
        let mut imprecise = false;
        let mut order: Vec<usize> = (0..values.len()).collect();
        for pos in 0..arity {
            order.sort_by(|&i, &j| exact_leaf_cmp(leaves[i][pos], leaves[j][pos]));
            let mut cluster = 0u32;
            for w in 0..order.len() {
                if w > 0 {
                    let prev = leaves[order[w - 1]][pos];
                    let cur = leaves[order[w]][pos];
                    if exact_leaf_cmp(prev, cur) != Ordering::Equal {
                        match (prev, cur) {
                            (OrdValue::Score(p), OrdValue::Score(c)) if p.tied_with(c) => {
                                imprecise = true;
                            }
                            _ => cluster += 1,
                        }
                    }
                }
                keys[order[w]][pos] = cluster;
            }
        }
        Ok(TieKeys { keys, imprecise })
    }

    pub fn key(&self, i: usize) -> &[u32] {
        &self.keys[i]
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    /// Whether some tie in the batch rests on tolerance rather than equality.
    pub fn imprecise(&self) -> bool {
        self.imprecise
    }

    /// Indices sorted ascending by key, ties in index order, grouped into
    /// equivalence classes.
    pub fn groups(&self) -> Vec<Vec<usize>> {
        let mut order: Vec<usize> = (0..self.keys.len()).collect();
        order.sort_by(|&i, &j| self.keys[i].cmp(&self.keys[j]).then(i.cmp(&j)));
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for i in order {
            match groups.last_mut() {
                Some(g) if self.keys[g[0]] == self.keys[i] => g.push(i),
                _ => groups.push(vec![i]),
            }
        }
        groups
    }
}

fn exact_leaf_cmp(a: &OrdValue, b: &OrdValue) -> Ordering {
    match (a, b) {
        (OrdValue::Rational(p), OrdValue::Rational(q)) => p.cmp(q),
        (OrdValue::Rank(p), OrdValue::Rank(q)) => p.cmp(q),
        (OrdValue::Score(p), OrdValue::Score(q)) => p.exact_cmp(q),
        _ => unreachable!("shapes were checked"),
    }
}
