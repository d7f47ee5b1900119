//! Randomized and mid p-values.
//!
//! Breaking ties of a statistic `f` with an independent uniform `r` gives the
//! lexicographic statistic `F(x, r) = (f(x), r)`. Its induced p-function has
//! the closed form `P[f < f(x)] + r·P[f = f(x)]`, and it is exact:
//! `P̄[F̂ ≤ ε] = ε` for every `ε ∈ [0, 1]`. Both facts are checked here
//! without sampling `r`: the first on a finite grid of `r` values, the second
//! by integrating over `r` in closed form.
//!
//! The mid p-value fixes `r = 1/2`. It is not a p-function in general.

use indexmap::IndexMap;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};
use crate::order::{lex_tuple, OrdValue};
use crate::rational::is_unit_interval;
use crate::trial::{
    classify_pfunction, induce_phat, level_sets, product_label, product_trial, FiniteTrial,
    PFunction, PFunctionClass, Statistic,
};

/// `P[f < f(x)]` and `P[f = f(x)]` for one outcome.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailPair {
    pub low: BigRational,
    pub atom: BigRational,
}

impl TailPair {
    /// `P[f ≤ f(x)]`.
    pub fn upper(&self) -> BigRational {
        &self.low + &self.atom
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomizedPFunction {
    entries: IndexMap<String, TailPair>,
    imprecise_tie: bool,
}

impl RandomizedPFunction {
    pub fn get(&self, label: &str) -> Option<&TailPair> {
        self.entries.get(label)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TailPair)> {
        self.entries.iter().map(|(l, t)| (l.as_str(), t))
    }

    pub fn imprecise_tie(&self) -> bool {
        self.imprecise_tie
    }

    fn pair(&self, label: &str) -> Result<&TailPair> {
        self.entries
            .get(label)
            .ok_or_else(|| Error::UnknownOutcome(label.to_string()))
    }
}

pub fn build_randomized(trial: &FiniteTrial, stat: &Statistic) -> Result<RandomizedPFunction> {
    let levels = level_sets(trial, stat)?;
    let labels: Vec<&str> = trial.labels().collect();
    let mut pairs = vec![None; trial.len()];
    let mut below = BigRational::zero();
    for (group, mass) in levels.groups.iter().zip(&levels.masses) {
        for &i in group {
            pairs[i] = Some(TailPair {
                low: below.clone(),
                atom: mass.clone(),
            });
        }
        below += mass;
    }
    Ok(RandomizedPFunction {
        entries: labels
            .into_iter()
            .map(String::from)
            .zip(pairs.into_iter().map(|p| p.expect("every outcome is in a level")))
            .collect(),
        imprecise_tie: levels.imprecise,
    })
}

/// `low(x) + r·atom(x)`.
pub fn randomized_pvalue(rpf: &RandomizedPFunction, label: &str, r: &BigRational) -> Result<BigRational> {
    if !is_unit_interval(r) {
        return Err(Error::ROutOfRange(r.to_string()));
    }
    let t = rpf.pair(label)?;
    Ok(&t.low + r * &t.atom)
}

/// `low(x) + atom(x)/2`, the mean of `P[f < f(x)]` and `P[f ≤ f(x)]`.
pub fn mid_pvalue(rpf: &RandomizedPFunction, label: &str) -> Result<BigRational> {
    let t = rpf.pair(label)?;
    Ok(&t.low + &t.atom / BigInt::from(2))
}

pub fn mid_pfunction(rpf: &RandomizedPFunction) -> PFunction {
    PFunction::new(
        rpf.entries
            .iter()
            .map(|(l, t)| (l.clone(), &t.low + &t.atom / BigInt::from(2))),
    )
    .expect("mid p-values lie in [0, 1]")
}

pub fn midp_validity_check(trial: &FiniteTrial, stat: &Statistic) -> Result<PFunctionClass> {
    let rpf = build_randomized(trial, stat)?;
    classify_pfunction(trial, &mid_pfunction(&rpf))
}

/// Label of grid point `k/n` in the tie-breaking trial.
fn grid_label(k: usize, n: usize) -> String {
    format!("{k}/{n}")
}

/// Checks that the lexicographic refinement `F(x, k/N) = (f(x), k/N)` on
/// `Ω × {1/N, …, N/N}` (uniform grid weights) induces exactly the closed form
/// `low(x) + (k/N)·atom(x)` at every grid point.
pub fn lex_equivalence_check(trial: &FiniteTrial, stat: &Statistic, grid_n: usize) -> Result<bool> {
    if grid_n == 0 {
        return Err(Error::EmptyGrid);
    }
    let grid_points: Vec<BigRational> = (1..=grid_n)
        .map(|k| BigRational::new(k.into(), grid_n.into()))
        .collect();
    let grid = FiniteTrial::uniform((1..=grid_n).map(|k| grid_label(k, grid_n)))?;
    let product = product_trial(trial, &grid)?;
    let mut refined = Vec::with_capacity(product.len());
    for x in trial.labels() {
        let fx = stat.get(x).ok_or_else(|| Error::MissingOutcome(x.to_string()))?;
        for (k, r) in grid_points.iter().enumerate() {
            let value = lex_tuple(vec![fx.clone(), OrdValue::Rational(r.clone())])?;
            refined.push((product_label(x, &grid_label(k + 1, grid_n)), value));
        }
    }
    let lexicographic = induce_phat(&product, &Statistic::new(refined)?)?;
    let rpf = build_randomized(trial, stat)?;
    for x in trial.labels() {
        for (k, r) in grid_points.iter().enumerate() {
            let label = product_label(x, &grid_label(k + 1, grid_n));
            let closed_form = randomized_pvalue(&rpf, x, r)?;
            if lexicographic.get(&label) != Some(&closed_form) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// `P̄[F̂ ≤ ε]` under `P × Uniform[0, 1]`, integrated over `r` exactly.
///
/// For an outcome with `atom > 0` the set of `r` with
/// `low + r·atom ≤ ε` has measure `clamp((ε - low)/atom, 0, 1)`; with
/// `atom = 0` (only possible for zero-probability outcomes) it is all or
/// nothing according to `low ≤ ε`.
pub fn exactness_cdf(rpf: &RandomizedPFunction, trial: &FiniteTrial, eps: &BigRational) -> Result<BigRational> {
    if !is_unit_interval(eps) {
        return Err(Error::EpsOutOfRange(eps.to_string()));
    }
    let zero = BigRational::zero();
    let one = BigRational::one();
    let mut total = BigRational::zero();
    for (label, p) in trial.outcomes() {
        let t = rpf.pair(label)?;
        let measure = if t.atom.is_positive() {
            ((eps - &t.low) / &t.atom).clamp(zero.clone(), one.clone())
        } else if t.low <= *eps {
            one.clone()
        } else {
            zero.clone()
        };
        total += p * measure;
    }
    Ok(total)
}

/// Deterministic source of tie-breaking numbers `k / 2^64`, `k` a 64-bit
/// ChaCha20 draw.
pub struct UniformSource {
    rng: ChaCha20Rng,
}

impl UniformSource {
    pub fn new(seed: u64) -> Self {
        UniformSource {
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    pub fn next_r(&mut self) -> BigRational {
        let k = self.rng.next_u64();
        BigRational::new(BigInt::from(k), BigInt::one() << 64)
    }
}
