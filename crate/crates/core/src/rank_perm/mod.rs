//! Two-sample rank statistics and their exact permutation distributions.
//!
//! A [`TwoSample`] holds two groups of distinct observations. Rank statistics
//! sum a [`ScoreScheme`] over the ranks of the first group; a
//! [`CascadeStatistic`] compares several of them lexicographically, optionally
//! finishing with Student's t. Rank cascades have a distribution-free null
//! that is enumerated exactly ([`exact_perm_pvalue`], [`attainable_pvalues`]);
//! cascades ending in t are calibrated by Gaussian simulation
//! ([`mc_gaussian_pvalue`]).

pub mod cascade;
pub mod enumerate;
pub mod montecarlo;
pub mod sample;
pub mod scores;

pub use cascade::{student_t, CascadeComponent, CascadeStatistic};
pub use enumerate::{
    attainable_pvalues, exact_perm_pvalue, AttainableSet, Boundary, EnumConfig, ExactPValue,
    PermutationDistribution, ReferenceComparison, TieGroup,
};
pub use montecarlo::{mc_gaussian_pvalue, McEstimate};
pub use sample::{rank_sum, TwoSample};
pub use scores::{score_sum, ScoreScheme};
