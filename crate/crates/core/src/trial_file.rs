//! Text format for a finite trial together with a statistic on it.
//!
//! The document is TOML:
//!
//! ```toml
//! outcomes = [
//!   { label = "a", prob = "1/2" },
//!   { label = "b", prob = "1/4" },
//!   { label = "c", prob = "1/4" },
//! ]
//!
//! [statistic]
//! a = 1            # integer: a rank
//! b = "3/2"        # string: an exact rational
//! c = [2, "1/3"]   # array: a lexicographic tuple of the above
//! ```
//!
//! Probabilities are strings holding an integer or `p/q`; decimal and float
//! notations are rejected because they do not denote the rational the author
//! usually means. Every statistic value must have the same shape.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_rational::BigRational;
use serde::Deserialize;
use toml::Spanned;

use crate::error::{Error, Result};
use crate::order::{lex_tuple, OrdValue};
use crate::rational::parse_rational;
use crate::trial::{FiniteTrial, Statistic};

#[derive(Debug, Clone)]
pub struct TrialDocument {
    pub trial: FiniteTrial,
    pub statistic: Statistic,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDocument {
    outcomes: Vec<RawOutcome>,
    statistic: BTreeMap<String, Spanned<toml::Value>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutcome {
    label: String,
    prob: Spanned<toml::Value>,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

pub fn parse_trial_document(text: &str) -> Result<TrialDocument> {
    let raw: RawDocument = toml::from_str(text).map_err(|e| Error::Parse {
        field: "document".into(),
        line: e.span().map(|s| line_of(text, s.start)),
        message: e.message().to_string(),
    })?;

    let mut outcomes = Vec::with_capacity(raw.outcomes.len());
    for (i, o) in raw.outcomes.iter().enumerate() {
        let field = format!("outcomes[{i}].prob");
        let line = Some(line_of(text, o.prob.span().start));
        let prob = match o.prob.get_ref() {
            toml::Value::String(s) => parse_rational(s).map_err(|e| Error::Parse {
                field: field.clone(),
                line,
                message: e.to_string(),
            })?,
            other => {
                return Err(Error::Parse {
                    field,
                    line,
                    message: format!(
                        "expected an exact rational string such as \"1/3\", found {} `{other}`",
                        other.type_str()
                    ),
                })
            }
        };
        outcomes.push((o.label.clone(), prob));
    }
    let trial = FiniteTrial::new(outcomes).map_err(|e| Error::Parse {
        field: "outcomes".into(),
        line: None,
        message: e.to_string(),
    })?;

    let mut values = Vec::with_capacity(raw.statistic.len());
    // keep trial order where possible so reports follow the outcome list
    let mut entries: Vec<(&String, &Spanned<toml::Value>)> = raw.statistic.iter().collect();
    entries.sort_by_key(|(label, _)| trial.labels().position(|l| l == label.as_str()).unwrap_or(usize::MAX));
    for (label, value) in entries {
        let field = format!("statistic.{label}");
        let line = Some(line_of(text, value.span().start));
        let v = stat_value(value.get_ref()).map_err(|message| Error::Parse {
            field: field.clone(),
            line,
            message,
        })?;
        values.push((label.clone(), v));
    }
    let statistic = Statistic::new(values).map_err(|e| Error::Parse {
        field: "statistic".into(),
        line: None,
        message: e.to_string(),
    })?;
    Ok(TrialDocument { trial, statistic })
}

fn stat_value(v: &toml::Value) -> std::result::Result<OrdValue, String> {
    match v {
        toml::Value::Integer(i) => Ok(OrdValue::Rank(*i)),
        toml::Value::String(s) => parse_rational(s)
            .map(OrdValue::Rational)
            .map_err(|e| e.to_string()),
        toml::Value::Array(items) => {
            let parts = items.iter().map(stat_value).collect::<std::result::Result<Vec<_>, _>>()?;
            lex_tuple(parts).map_err(|e| e.to_string())
        }
        other => Err(format!(
            "expected an integer rank, a rational string or an array, found {} `{other}`",
            other.type_str()
        )),
    }
}

/// Renders a document in the format [`parse_trial_document`] reads. Scores
/// have no textual form in this format and are rejected.
pub fn render_trial_document(trial: &FiniteTrial, statistic: &Statistic) -> Result<String> {
    let mut out = String::from("outcomes = [\n");
    for (label, p) in trial.outcomes() {
        let _ = writeln!(out, "  {{ label = {}, prob = \"{}\" }},", quote(label), p);
    }
    out.push_str("]\n\n[statistic]\n");
    for (label, v) in statistic.iter() {
        let _ = writeln!(out, "{} = {}", quote(label), render_value(v)?);
    }
    Ok(out)
}

fn render_value(v: &OrdValue) -> Result<String> {
    Ok(match v {
        OrdValue::Rank(r) => r.to_string(),
        OrdValue::Rational(q) => format!("\"{q}\""),
        OrdValue::Tuple(t) => {
            let parts = t.components().iter().map(render_value).collect::<Result<Vec<_>>>()?;
            format!("[{}]", parts.join(", "))
        }
        OrdValue::Score(_) => {
            return Err(Error::parse("statistic", "scores cannot be written to a trial file"))
        }
    })
}

fn quote(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

/// Parses a comma-separated list of exact rationals, e.g. `1/924,5/924`.
pub fn parse_rational_list(text: &str) -> Result<Vec<BigRational>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(parse_rational)
        .collect()
}
