use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::rational::parse_decimal;

/// Two groups of pairwise distinct observations, held exactly.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoSample {
    xs: Vec<BigRational>,
    ys: Vec<BigRational>,
}

impl TwoSample {
    pub fn new(xs: Vec<BigRational>, ys: Vec<BigRational>) -> Result<Self> {
        if xs.is_empty() || ys.is_empty() {
            return Err(Error::InvalidSample(format!(
                "both groups need observations (m = {}, n = {})",
                xs.len(),
                ys.len()
            )));
        }
        let mut pooled: Vec<&BigRational> = xs.iter().chain(&ys).collect();
        pooled.sort();
        if let Some(w) = pooled.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::DuplicateObservations(w[0].to_string()));
        }
        Ok(TwoSample { xs, ys })
    }

    pub fn from_decimals<S: AsRef<str>>(xs: &[S], ys: &[S]) -> Result<Self> {
        let parse = |v: &[S]| v.iter().map(|s| parse_decimal(s.as_ref())).collect::<Result<Vec<_>>>();
        Self::new(parse(xs)?, parse(ys)?)
    }

    /// Reads `value<sep>group` lines, `sep` being a comma, tab or spaces.
    /// Blank lines and `#` comments are skipped, as is a first line whose
    /// value field is not a number (a header). Exactly two group labels must
    /// occur; the x-role goes to the group labelled `x` when the labels are
    /// `x` and `y`, otherwise to the label that appears first.
    pub fn parse_delimited(text: &str) -> Result<Self> {
        let mut labels: Vec<String> = Vec::new();
        let mut groups: Vec<Vec<BigRational>> = Vec::new();
        let mut seen_data = false;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = if line.contains(',') {
                line.split(',').map(str::trim).collect()
            } else {
                line.split_whitespace().collect()
            };
            let field = format!("line {}", lineno + 1);
            if fields.len() != 2 {
                return Err(Error::Parse {
                    field,
                    line: Some(lineno + 1),
                    message: format!("expected `value,group`, found {} fields", fields.len()),
                });
            }
            let value = match parse_decimal(fields[0]) {
                Ok(v) => v,
                Err(_) if !seen_data => {
                    seen_data = true;
                    continue;
                }
                Err(e) => {
                    return Err(Error::Parse {
                        field,
                        line: Some(lineno + 1),
                        message: e.to_string(),
                    })
                }
            };
            seen_data = true;
            let label = fields[1].to_string();
            let slot = match labels.iter().position(|l| *l == label) {
                Some(i) => i,
                None => {
                    labels.push(label);
                    groups.push(Vec::new());
                    labels.len() - 1
                }
            };
            groups[slot].push(value);
        }
        if labels.len() != 2 {
            return Err(Error::InvalidSample(format!(
                "expected exactly two group labels, found {}: {:?}",
                labels.len(),
                labels
            )));
        }
        let (mut first, mut second) = (groups.remove(0), groups.remove(0));
        if labels[0] == "y" && labels[1] == "x" {
            std::mem::swap(&mut first, &mut second);
        }
        Self::new(first, second)
    }

    pub fn xs(&self) -> &[BigRational] {
        &self.xs
    }

    pub fn ys(&self) -> &[BigRational] {
        &self.ys
    }

    pub fn m(&self) -> usize {
        self.xs.len()
    }

    pub fn n(&self) -> usize {
        self.ys.len()
    }

    pub fn total(&self) -> usize {
        self.xs.len() + self.ys.len()
    }

    /// Ranks (1 = smallest of the pooled observations) of the x-group,
    /// ascending.
    pub fn x_ranks(&self) -> Vec<usize> {
        let mut pooled: Vec<(&BigRational, bool)> = self
            .xs
            .iter()
            .map(|v| (v, true))
            .chain(self.ys.iter().map(|v| (v, false)))
            .collect();
        pooled.sort_by(|a, b| a.0.cmp(b.0));
        pooled
            .iter()
            .enumerate()
            .filter(|(_, (_, is_x))| *is_x)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// The same observations with the group roles exchanged.
    pub fn swapped(&self) -> TwoSample {
        TwoSample {
            xs: self.ys.clone(),
            ys: self.xs.clone(),
        }
    }

    /// Applies `f` to every observation. Distinctness is re-checked, so a
    /// non-injective `f` is an error.
    pub fn map(&self, f: impl Fn(&BigRational) -> BigRational) -> Result<TwoSample> {
        TwoSample::new(self.xs.iter().map(&f).collect(), self.ys.iter().map(&f).collect())
    }
}

/// `R_x`, the sum of the x-group's ranks in the pooled sample.
pub fn rank_sum(sample: &TwoSample) -> u64 {
    sample.x_ranks().iter().map(|&r| r as u64).sum()
}
