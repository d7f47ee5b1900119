use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use toml::{Table, Value};

use ordstat::numeric::format_rational_sci;
use ordstat::randomized::{build_randomized, exactness_cdf, mid_pfunction, randomized_pvalue, UniformSource};
use ordstat::rank_perm::enumerate::DEFAULT_MAX_ENUM;
use ordstat::rank_perm::{
    attainable_pvalues, exact_perm_pvalue, mc_gaussian_pvalue, AttainableSet, CascadeStatistic, EnumConfig,
    TwoSample,
};
use ordstat::rational::parse_rational;
use ordstat::trial::{check_idempotence, classify_pfunction, induce_phat, PFunctionClass};
use ordstat::trial_file::{parse_rational_list, parse_trial_document, TrialDocument};
use ordstat::{Error, Precision};

use crate::report::{digest, strings, RunReport};

/// Grid `{k/97 : 0 ≤ k ≤ 97}` used by `randomize --verify-exact`.
pub const EXACTNESS_GRID: u32 = 97;

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io { path: PathBuf, message: String },
}

impl CliError {
    /// 3 for the enumeration cap, 2 for every other input problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(Error::SizeLimit { .. }) => 3,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Io { .. } => "IoError",
            CliError::Core(e) => match e {
                Error::Parse { .. } => "ParseError",
                Error::ShapeMismatch { .. } => "ShapeMismatch",
                Error::EmptyTuple => "EmptyTuple",
                Error::MissingOutcome(_) => "MissingOutcome",
                Error::UnknownOutcome(_) => "UnknownOutcome",
                Error::InvalidTrial(_) => "InvalidTrial",
                Error::ValueOutOfRange { .. } => "ValueOutOfRange",
                Error::ScaleBelowOne(_) => "ScaleBelowOne",
                Error::ROutOfRange(_) => "ROutOfRange",
                Error::EpsOutOfRange(_) => "EpsOutOfRange",
                Error::EmptyGrid => "EmptyGrid",
                Error::DuplicateObservations(_) => "DuplicateObservations",
                Error::InvalidSample(_) => "InvalidSample",
                Error::DegenerateSpread => "DegenerateSpread",
                Error::InvalidCascade(_) => "InvalidCascade",
                Error::TCascadeNotExact => "TCascadeNotExact",
                Error::SizeLimit { .. } => "SizeLimit",
                Error::Numeric(_) => "NumericError",
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, message } => write!(f, "{}: {message}", path.display()),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Settings {
    pub precision: Precision,
    pub max_enum: u64,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            precision: Precision::default(),
            max_enum: DEFAULT_MAX_ENUM,
        }
    }
}

impl Settings {
    fn enum_config(&self) -> EnumConfig {
        EnumConfig {
            precision: self.precision,
            max_enum: self.max_enum,
        }
    }
}

fn read(path: &Path) -> CliResult<Vec<u8>> {
    std::fs::read(path).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn load_trial(path: &Path) -> CliResult<(TrialDocument, Vec<u8>)> {
    let bytes = read(path)?;
    let text = String::from_utf8(bytes.clone()).map_err(|e| {
        CliError::Core(Error::Parse {
            field: "document".into(),
            line: None,
            message: e.to_string(),
        })
    })?;
    Ok((parse_trial_document(&text)?, bytes))
}

fn rat(q: &BigRational) -> Value {
    Value::String(q.to_string())
}

fn rats(v: &[BigRational]) -> Value {
    Value::Array(v.iter().map(rat).collect())
}

fn ints(v: &[usize]) -> Value {
    Value::Array(v.iter().map(|&i| Value::Integer(i as i64)).collect())
}

fn trial_warnings(report: &mut RunReport, doc: &TrialDocument) {
    for label in doc.trial.zero_probability_labels() {
        report.warn(format!(
            "outcome `{label}` has probability 0; it does not affect any probability computed here"
        ));
    }
}

fn imprecise_warning(report: &mut RunReport, imprecise: bool) {
    if imprecise {
        report.warn(format!(
            "some ties were decided within the score tolerance at {} digits rather than by exact equality",
            report.precision.unwrap_or(Precision::DEFAULT_DIGITS)
        ));
    }
}

fn class_fields(table: &mut Table, prefix: &str, class: &PFunctionClass) {
    table.insert(format!("{prefix}class"), class.name().into());
    if let PFunctionClass::NotPFunction { witness, mass } = class {
        table.insert(format!("{prefix}witness_eps"), rat(witness));
        table.insert(format!("{prefix}witness_mass"), rat(mass));
    }
}

/// The induced p-function of a trial file, its classification and the
/// idempotence check.
pub fn cmd_induce(trial: &Path) -> CliResult<RunReport> {
    let (doc, bytes) = load_trial(trial)?;
    let echo = format!("induce --trial {}", trial.display());
    let mut report = RunReport::new(echo.clone(), digest(&[echo.as_bytes(), &bytes]));
    trial_warnings(&mut report, &doc);

    let phat = induce_phat(&doc.trial, &doc.statistic)?;
    let class = classify_pfunction(&doc.trial, &phat)?;
    let idempotent = check_idempotence(&doc.trial, &doc.statistic)?;

    report.set("outcomes", doc.trial.len() as i64);
    class_fields(&mut report.results, "", &class);
    report.set("idempotent", idempotent);
    let mut values = Table::new();
    for (label, p) in phat.iter() {
        values.insert(label.to_string(), rat(p));
    }
    report.set("phat", values);

    imprecise_warning(&mut report, phat.imprecise_tie());
    if class != PFunctionClass::RangeExact {
        report.fail_check(format!("induced p-function classified {}, expected RangeExact", class.name()));
    }
    if !idempotent {
        report.fail_check("inducing from the induced p-function changed it");
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TieBreak {
    /// An explicit `r` as `p/q`.
    Fixed(String),
    /// `r` drawn from a seeded generator.
    Seed(u64),
}

/// The randomized p-value `low + r·atom` of one outcome, optionally checking
/// `P[p ≤ ε] = ε` on the grid `k/97`.
pub fn cmd_randomize(trial: &Path, outcome: &str, tie: &TieBreak, verify_exact: bool) -> CliResult<RunReport> {
    let (doc, bytes) = load_trial(trial)?;
    let mut echo = format!("randomize --trial {} --outcome {outcome}", trial.display());
    match tie {
        TieBreak::Fixed(r) => echo.push_str(&format!(" --r {r}")),
        TieBreak::Seed(s) => echo.push_str(&format!(" --seed {s}")),
    }
    if verify_exact {
        echo.push_str(" --verify-exact");
    }
    let mut report = RunReport::new(echo.clone(), digest(&[echo.as_bytes(), &bytes]));
    trial_warnings(&mut report, &doc);

    let r = match tie {
        TieBreak::Fixed(text) => parse_rational(text).map_err(|e| Error::Parse {
            field: "--r".into(),
            line: None,
            message: e.to_string(),
        })?,
        TieBreak::Seed(seed) => {
            report.seed = Some(*seed);
            UniformSource::new(*seed).next_r()
        }
    };
    let rpf = build_randomized(&doc.trial, &doc.statistic)?;
    let pair = rpf
        .get(outcome)
        .ok_or_else(|| Error::UnknownOutcome(outcome.to_string()))?
        .clone();
    let value = randomized_pvalue(&rpf, outcome, &r)?;

    report.set("outcome", outcome);
    report.set("low", rat(&pair.low));
    report.set("atom", rat(&pair.atom));
    report.set("r", rat(&r));
    report.set("value", rat(&value));
    imprecise_warning(&mut report, rpf.imprecise_tie());

    if verify_exact {
        let mut failures = Vec::new();
        for k in 0..=EXACTNESS_GRID {
            let eps = BigRational::new(k.into(), EXACTNESS_GRID.into());
            let cdf = exactness_cdf(&rpf, &doc.trial, &eps)?;
            if cdf != eps {
                failures.push(format!("P[p <= {eps}] = {cdf}"));
            }
        }
        let mut verify = Table::new();
        verify.insert("grid".into(), format!("k/{EXACTNESS_GRID}, k = 0..={EXACTNESS_GRID}").into());
        verify.insert("points".into(), Value::Integer(i64::from(EXACTNESS_GRID) + 1));
        verify.insert("exact".into(), failures.is_empty().into());
        verify.insert("failures".into(), strings(&failures));
        report.set("verify_exact", verify);
        if !failures.is_empty() {
            report.fail_check(format!("randomized p-function not exact at {} grid points", failures.len()));
        }
    }
    Ok(report)
}

/// Mid p-values of every outcome and their classification. The induced
/// p-function of the same statistic is classified alongside as a control.
pub fn cmd_midp(trial: &Path) -> CliResult<RunReport> {
    let (doc, bytes) = load_trial(trial)?;
    let echo = format!("midp --trial {}", trial.display());
    let mut report = RunReport::new(echo.clone(), digest(&[echo.as_bytes(), &bytes]));
    trial_warnings(&mut report, &doc);

    let rpf = build_randomized(&doc.trial, &doc.statistic)?;
    let mid = mid_pfunction(&rpf);
    let class = classify_pfunction(&doc.trial, &mid)?;
    let control = classify_pfunction(&doc.trial, &induce_phat(&doc.trial, &doc.statistic)?)?;

    class_fields(&mut report.results, "", &class);
    report.set("control_class", control.name());
    let mut values = Table::new();
    for (label, p) in mid.iter() {
        values.insert(label.to_string(), rat(p));
    }
    report.set("midp", values);
    imprecise_warning(&mut report, rpf.imprecise_tie());
    if control != PFunctionClass::RangeExact {
        report.fail_check(format!("control p-function classified {}, expected RangeExact", control.name()));
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SampleInput {
    File(PathBuf),
    /// Comma-separated decimal lists.
    Lists { xs: String, ys: String },
}

fn split_list(text: &str) -> Vec<&str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

/// An exact permutation p-value for a rank cascade, or a Gaussian Monte Carlo
/// estimate for a cascade ending in `t`.
pub fn cmd_twosample(
    input: &SampleInput,
    cascade: &str,
    mode: Mode,
    seed: u64,
    draws: u64,
    settings: &Settings,
) -> CliResult<RunReport> {
    let cascade: CascadeStatistic = cascade.parse()?;
    let (sample, source, bytes) = match input {
        SampleInput::File(path) => {
            let bytes = read(path)?;
            let text = String::from_utf8_lossy(&bytes).into_owned();
            (TwoSample::parse_delimited(&text)?, format!("--data {}", path.display()), bytes)
        }
        SampleInput::Lists { xs, ys } => (
            TwoSample::from_decimals(&split_list(xs), &split_list(ys))?,
            format!("--xs {xs} --ys {ys}"),
            Vec::new(),
        ),
    };
    let mode_name = match mode {
        Mode::Exact => "exact",
        Mode::Mc => "mc",
    };
    let mut echo = format!("twosample {source} --cascade {cascade} --mode {mode_name}");
    if mode == Mode::Mc {
        echo.push_str(&format!(" --seed {seed} --draws {draws}"));
    }
    let mut report = RunReport::new(echo.clone(), digest(&[echo.as_bytes(), &bytes]));
    report.precision = Some(settings.precision.digits());
    report.set("cascade", cascade.to_string());
    report.set("m", sample.m() as i64);
    report.set("n", sample.n() as i64);
    report.set("mode", mode_name);

    match mode {
        Mode::Exact => {
            let p = exact_perm_pvalue(&sample, &cascade, &settings.enum_config())?;
            report.set("observed", p.observed.to_string());
            report.set("p_value", rat(&p.p_value));
            report.set("count", p.count as i64);
            report.set("enumerated", p.enumerated as i64);
            imprecise_warning(&mut report, p.imprecise);
        }
        Mode::Mc => {
            report.seed = Some(seed);
            let est = mc_gaussian_pvalue(&sample, &cascade, draws, seed, settings.precision)?;
            report.set("observed", est.observed.to_string());
            report.set("p_value", rat(&BigRational::new(est.count.into(), est.draws.into())));
            report.set("estimate", format!("{:.6}", est.estimate));
            report.set("std_error", format!("{:.6}", est.std_error));
            report.set("ci95", strings(&[format!("{:.6}", est.ci95.0), format!("{:.6}", est.ci95.1)]));
            report.set("count", est.count as i64);
            report.set("draws", est.draws as i64);
            imprecise_warning(&mut report, est.imprecise);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TableOptions {
    /// Comma-separated `p/q` reference values for the points this cascade
    /// adds to its baseline.
    pub reference: Option<String>,
    /// Cascade to compare against; defaults to this cascade without its last
    /// component.
    pub baseline: Option<String>,
    /// Upper end of the comparison window; defaults to the largest reference
    /// value.
    pub window: Option<String>,
}

fn boundary_table(set: &AttainableSet, p: &BigRational) -> Option<Table> {
    let k = p * BigRational::from_integer(set.enumerated.into());
    if !k.is_integer() {
        return None;
    }
    let k: usize = k.to_integer().try_into().ok()?;
    let b = set.boundary(k)?;
    let mut t = Table::new();
    t.insert("value".into(), rat(p));
    t.insert("k".into(), Value::Integer(k as i64));
    t.insert("attained".into(), (!b.tied).into());
    t.insert("below_ranks".into(), ints(&b.below_ranks));
    t.insert("below".into(), b.below.to_string().into());
    t.insert("above_ranks".into(), ints(&b.above_ranks));
    t.insert("above".into(), b.above.to_string().into());
    Some(t)
}

/// The attainable p-values of a rank cascade for group sizes `m`, `n`.
pub fn cmd_table(m: usize, n: usize, cascade: &str, opts: &TableOptions, settings: &Settings) -> CliResult<RunReport> {
    let cascade: CascadeStatistic = cascade.parse()?;
    let mut echo = format!("table {m} {n} {cascade}");
    for (flag, v) in [("--reference", &opts.reference), ("--baseline", &opts.baseline), ("--window", &opts.window)] {
        if let Some(v) = v {
            echo.push_str(&format!(" {flag} {v}"));
        }
    }
    let mut report = RunReport::new(echo.clone(), digest(&[echo.as_bytes()]));
    report.precision = Some(settings.precision.digits());
    let cfg = settings.enum_config();
    let set = attainable_pvalues(m, n, &cascade, &cfg)?;

    report.set("cascade", cascade.to_string());
    report.set("m", m as i64);
    report.set("n", n as i64);
    report.set("enumerated", set.enumerated as i64);
    report.set("distinct", set.values.len() as i64);
    report.set("range_exact", set.range_exact);
    report.set("uniform", set.is_uniform());
    report.set("values", rats(&set.values));
    report.set("residual_tie_groups", set.residual_ties.len() as i64);
    let ties: Vec<Value> = set
        .residual_ties
        .iter()
        .map(|g| {
            let mut t = Table::new();
            t.insert("p_value".into(), rat(&g.p_value));
            t.insert("size".into(), Value::Integer(g.subsets.len() as i64));
            t.insert("subsets".into(), Value::Array(g.subsets.iter().map(|s| ints(s)).collect()));
            Value::Table(t)
        })
        .collect();
    imprecise_warning(&mut report, set.imprecise);
    if !set.range_exact {
        report.fail_check("P[p <= eps] = eps failed at some attained eps");
    }

    if let Some(reference) = &opts.reference {
        let reference = parse_rational_list(reference)?;
        let window = opts.window.as_deref().map(parse_rational).transpose()?;
        let baseline: Option<CascadeStatistic> = match &opts.baseline {
            Some(b) => Some(b.parse()?),
            None if cascade.components().len() > 1 => Some(CascadeStatistic::new(
                cascade.components()[..cascade.components().len() - 1].to_vec(),
            )?),
            None => None,
        };
        let added = match &baseline {
            Some(b) => set.added_relative_to(&attainable_pvalues(m, n, b, &cfg)?),
            None => set.values.clone(),
        };
        let cmp = AttainableSet::reference_comparison(&added, &reference, window.as_ref());
        let mut r = Table::new();
        r.insert(
            "baseline".into(),
            baseline.as_ref().map(|b| b.to_string()).unwrap_or_else(|| "none".into()).into(),
        );
        r.insert("window".into(), rat(&cmp.window));
        let in_window: Vec<BigRational> = added.iter().filter(|p| **p <= cmp.window).cloned().collect();
        r.insert("added".into(), rats(&in_window));
        r.insert("matches".into(), cmp.matches().into());
        r.insert("missing".into(), rats(&cmp.missing));
        r.insert("unexpected".into(), rats(&cmp.unexpected));
        let boundaries: Vec<Value> = cmp
            .missing
            .iter()
            .chain(&cmp.unexpected)
            .filter_map(|p| boundary_table(&set, p))
            .map(Value::Table)
            .collect();
        r.insert("boundaries".into(), Value::Array(boundaries));
        if !cmp.matches() {
            report.warn(format!(
                "{} reference values not attained and {} attained values not in the reference; \
                 results.reference.boundaries lists the competing cascade values",
                cmp.missing.len(),
                cmp.unexpected.len()
            ));
        }
        report.set("reference", r);
    }
    report.set("residual_ties", Value::Array(ties));
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Demo {
    Bernoulli1735,
    Arbuthnott1710,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DemoOptions {
    /// Inclination bound in degrees, as `p/q` or an integer.
    pub theta: Option<String>,
    pub k: Option<u32>,
    pub years: Option<u32>,
}

/// Two historical p-values.
///
/// `bernoulli1735`: the largest of `k` mutual inclinations of planetary
/// orbits, each uniform on `[0°, 90°]` under the null, is at most `θ`;
/// `P = (θ/90)^k`, with `θ = 7°30′` and `k = 6` by default.
///
/// `arbuthnott1710`: more male than female christenings in each of `years`
/// consecutive years, each year a fair coin under the null; `P = 2^-years`,
/// 82 years by default.
pub fn cmd_demo(demo: Demo, opts: &DemoOptions) -> CliResult<RunReport> {
    match demo {
        Demo::Bernoulli1735 => {
            let theta_text = opts.theta.clone().unwrap_or_else(|| "15/2".into());
            let k = opts.k.unwrap_or(6);
            let echo = format!("demo bernoulli1735 --theta {theta_text} --k {k}");
            let mut report = RunReport::new(echo.clone(), digest(&[echo.as_bytes()]));
            let theta = parse_rational(&theta_text).map_err(|e| Error::Parse {
                field: "--theta".into(),
                line: None,
                message: e.to_string(),
            })?;
            let ninety = BigRational::from_integer(90.into());
            if theta <= BigRational::zero() || theta > ninety {
                return Err(Error::ValueOutOfRange {
                    label: "theta".into(),
                    value: theta.to_string(),
                }
                .into());
            }
            let ratio = &theta / &ninety;
            let p = (0..k).fold(BigRational::one(), |acc, _| acc * &ratio);
            report.set("demo", "bernoulli1735");
            report.set("theta_degrees", rat(&theta));
            report.set("k", i64::from(k));
            report.set("p_value", rat(&p));
            report.set("p_value_approx", format_rational_sci(&p, 6));
            if p < BigRational::one() {
                report.set("odds_against", format!("{} to 1", (BigRational::one() - &p) / &p));
            }
            Ok(report)
        }
        Demo::Arbuthnott1710 => {
            let years = opts.years.unwrap_or(82);
            let echo = format!("demo arbuthnott1710 --years {years}");
            let mut report = RunReport::new(echo.clone(), digest(&[echo.as_bytes()]));
            let p = BigRational::new(BigInt::one(), BigInt::one() << years);
            report.set("demo", "arbuthnott1710");
            report.set("years", i64::from(years));
            report.set("p_value", rat(&p));
            report.set("p_value_approx", format_rational_sci(&p, 6));
            Ok(report)
        }
    }
}
