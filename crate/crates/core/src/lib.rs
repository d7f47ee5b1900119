//! Generalized test statistics with lexicographically ordered codomains.
//!
//! * [`order`]: ordered values (rationals, ranks, multi-precision scores and
//!   lexicographic tuples of them).
//! * [`trial`]: finite probability trials, induced p-functions and their
//!   classification.
//! * [`randomized`]: randomized and mid p-values, with closed-form exactness
//!   checks.
//! * [`rank_perm`]: two-sample rank statistics, lexicographic cascades and
//!   exact permutation p-values.
//! * [`trial_file`]: the text format for trials and statistics.

pub mod error;
pub mod numeric;
pub mod order;
pub mod randomized;
pub mod rank_perm;
pub mod rational;
pub mod trial;
pub mod trial_file;

pub use error::{Error, Result};
pub use numeric::Precision;
pub use order::{compare, lex_tuple, Comparison, OrdValue, Score, Shape};
pub use trial::{FiniteTrial, PFunction, PFunctionClass, Statistic};
