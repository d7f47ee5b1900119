use std::path::PathBuf;
use std::process::{Command, Output};

use num_rational::BigRational;
use ordstat::rational::parse_rational;
use proptest::prelude::*;
use toml::{Table, Value};

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
        .display()
        .to_string()
}

fn ordstat(args: &[&str]) -> Output {
    ordstat_env(args, &[])
}

fn ordstat_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ordstat"));
    cmd.args(args).env_remove("ORDSTAT_PRECISION");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn report(args: &[&str]) -> Table {
    let out = ordstat(args);
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    toml::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap()
}

fn results(doc: &Table) -> &Table {
    doc["results"].as_table().unwrap()
}

fn s<'a>(t: &'a Table, key: &str) -> &'a str {
    t[key].as_str().unwrap_or_else(|| panic!("{key} is not a string"))
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

fn rationals(v: &Value) -> Vec<BigRational> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|x| parse_rational(x.as_str().unwrap()).unwrap())
        .collect()
}

#[test]
fn induce_three_outcomes() {
    let doc = report(&["induce", "--trial", &data("three.toml")]);
    let r = results(&doc);
    let phat = r["phat"].as_table().unwrap();
    assert_eq!((s(phat, "a"), s(phat, "b"), s(phat, "c")), ("1/2", "3/4", "1"));
    assert_eq!(s(r, "class"), "RangeExact");
    assert_eq!(r["idempotent"].as_bool(), Some(true));
}

#[test]
fn induce_constant_statistic() {
    let doc = report(&["induce", "--trial", &data("constant.toml")]);
    for (_, v) in results(&doc)["phat"].as_table().unwrap() {
        assert_eq!(v.as_str(), Some("1"));
    }
}

#[test]
fn induce_warns_about_zero_probability() {
    let doc = report(&["induce", "--trial", &data("lexicographic.toml")]);
    let warnings = doc["warnings"].as_array().unwrap();
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].as_str().unwrap().contains("`never`"));
    let phat = results(&doc)["phat"].as_table().unwrap();
    assert_eq!(s(phat, "x"), "1/3");
    assert_eq!(s(phat, "y"), "7/12");
    assert_eq!(s(phat, "w"), "1");
}

#[test]
fn malformed_probability_is_a_parse_error() {
    let out = ordstat(&["induce", "--trial", &data("malformed.toml")]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("ParseError"), "{err}");
    assert!(err.contains("outcomes[1].prob"), "{err}");
    assert!(err.contains("line 3"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_file_is_an_input_error() {
    let out = ordstat(&["induce", "--trial", &data("no_such_file.toml")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn randomize_singleton() {
    let doc = report(&["randomize", "--trial", &data("singleton.toml"), "--outcome", "only", "--r", "3/10"]);
    let r = results(&doc);
    assert_eq!(s(r, "value"), "3/10");
    assert_eq!((s(r, "low"), s(r, "atom")), ("0", "1"));
}

#[test]
fn randomize_closed_form() {
    let doc = report(&["randomize", "--trial", &data("uniform2.toml"), "--outcome", "high", "--r", "1/2"]);
    assert_eq!(s(results(&doc), "value"), "3/4");
}

#[test]
fn randomize_verify_exact_passes() {
    for file in ["three.toml", "lexicographic.toml", "constant.toml"] {
        let outcome = match file {
            "three.toml" => "b",
            "lexicographic.toml" => "z",
            _ => "heads",
        };
        let doc = report(&["randomize", "--trial", &data(file), "--outcome", outcome, "--seed", "9", "--verify-exact"]);
        let v = results(&doc)["verify_exact"].as_table().unwrap();
        assert_eq!(v["exact"].as_bool(), Some(true), "{file}");
        assert_eq!(v["points"].as_integer(), Some(98));
        assert_eq!(doc["failed_checks"].as_array().unwrap().len(), 0);
    }
}

#[test]
fn randomize_seed_is_deterministic() {
    let args = ["randomize", "--trial", &data("three.toml"), "--outcome", "a", "--seed", "2024"];
    let a = ordstat(&args);
    let b = ordstat(&args);
    assert_eq!(a.stdout, b.stdout);
    let doc: Table = toml::from_str(&String::from_utf8(a.stdout).unwrap()).unwrap();
    assert_eq!(doc["seed"].as_integer(), Some(2024));
    let value = parse_rational(s(results(&doc), "value")).unwrap();
    assert!(value >= q(0, 1) && value <= q(1, 2));
}

#[test]
fn randomize_rejects_bad_input() {
    let unknown = ordstat(&["randomize", "--trial", &data("three.toml"), "--outcome", "zz", "--r", "1/2"]);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("UnknownOutcome"));
    let both = ordstat(&["randomize", "--trial", &data("three.toml"), "--outcome", "a", "--r", "1/2", "--seed", "1"]);
    assert_eq!(both.status.code(), Some(2));
    let neither = ordstat(&["randomize", "--trial", &data("three.toml"), "--outcome", "a"]);
    assert_eq!(neither.status.code(), Some(2));
    let big_r = ordstat(&["randomize", "--trial", &data("three.toml"), "--outcome", "a", "--r", "3/2"]);
    assert_eq!(big_r.status.code(), Some(2));
}

#[test]
fn midp_singleton_witness() {
    let doc = report(&["midp", "--trial", &data("singleton.toml")]);
    let r = results(&doc);
    assert_eq!(s(r["midp"].as_table().unwrap(), "only"), "1/2");
    assert_eq!(s(r, "class"), "NotPFunction");
    assert_eq!(s(r, "witness_eps"), "1/2");
    assert_eq!(s(r, "witness_mass"), "1");
    assert_eq!(s(r, "control_class"), "RangeExact");
}

#[test]
fn midp_two_outcomes() {
    let doc = report(&["midp", "--trial", &data("uniform2.toml")]);
    let r = results(&doc);
    let mid = r["midp"].as_table().unwrap();
    assert_eq!((s(mid, "low"), s(mid, "high")), ("1/4", "3/4"));
    assert_eq!(s(r, "class"), "NotPFunction");
    assert_eq!((s(r, "witness_eps"), s(r, "witness_mass")), ("1/4", "1/2"));
}

#[test]
fn twosample_exact() {
    let doc = report(&["twosample", "--xs", "0.5", "--ys", "1.5", "--cascade", "wilcoxon"]);
    assert_eq!(s(results(&doc), "p_value"), "1/2");

    let w = report(&["twosample", "--data", &data("six_smallest.csv"), "--cascade", "wilcoxon"]);
    assert_eq!(s(results(&w), "p_value"), "1/924");
    assert_eq!(results(&w)["enumerated"].as_integer(), Some(924));

    let mixed_w = report(&["twosample", "--data", &data("mixed.csv"), "--cascade", "wilcoxon"]);
    let mixed_wf = report(&["twosample", "--data", &data("mixed.csv"), "--cascade", "wilcoxon,fyt"]);
    let pw = parse_rational(s(results(&mixed_w), "p_value")).unwrap();
    let pwf = parse_rational(s(results(&mixed_wf), "p_value")).unwrap();
    assert_eq!(pw, q(2, 70));
    assert!(pwf <= pw);
}

#[test]
fn twosample_negative_values_in_lists() {
    let doc = report(&["twosample", "--xs", "-3,-2.5", "--ys", "-1,0,4", "--cascade", "wilcoxon,vdw"]);
    assert_eq!(s(results(&doc), "p_value"), "1/10");
}

#[test]
fn twosample_errors() {
    let t = ordstat(&["twosample", "--data", &data("mixed.csv"), "--cascade", "wilcoxon,t"]);
    assert_eq!(t.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&t.stderr).contains("TCascadeNotExact"));

    let cap = ordstat(&["twosample", "--data", &data("six_smallest.csv"), "--max-enum", "100"]);
    assert_eq!(cap.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&cap.stderr).contains("SizeLimit"));

    let dup = ordstat(&["twosample", "--xs", "1,2", "--ys", "2.0,3"]);
    assert_eq!(dup.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&dup.stderr).contains("DuplicateObservations"));

    let bad = ordstat(&["twosample", "--xs", "1", "--ys", "2", "--cascade", "t,wilcoxon"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn twosample_monte_carlo() {
    let args = [
        "twosample", "--data", &data("mixed.csv"), "--cascade", "wilcoxon,t", "--mode", "mc", "--seed", "3", "--draws",
        "5000",
    ];
    let doc = report(&args);
    let r = results(&doc);
    assert_eq!(doc["seed"].as_integer(), Some(3));
    assert_eq!(r["draws"].as_integer(), Some(5000));
    let est: f64 = s(r, "estimate").parse().unwrap();
    // between the strict and the weak rank-sum tail, 1/70 and 2/70
    assert!(est > 0.0 && est < 0.05, "{est}");
    let ci = r["ci95"].as_array().unwrap();
    let lo: f64 = ci[0].as_str().unwrap().parse().unwrap();
    let hi: f64 = ci[1].as_str().unwrap().parse().unwrap();
    assert!(lo <= est && est <= hi);
}

#[test]
fn table_small_and_six_by_six_sets() {
    let one = report(&["table", "1", "1", "wilcoxon"]);
    assert_eq!(rationals(&results(&one)["values"]), vec![q(1, 2), q(1, 1)]);

    let w = report(&["table", "6", "6", "wilcoxon"]);
    let values = rationals(&results(&w)["values"]);
    let prefix: Vec<BigRational> = [1, 2, 4, 7, 12, 19, 30, 43, 61].iter().map(|&k| q(k, 924)).collect();
    assert_eq!(&values[..9], &prefix[..]);
    assert_eq!(results(&w)["range_exact"].as_bool(), Some(true));

    let wfv = report(&["table", "6", "6", "wilcoxon,fyt,vdw"]);
    assert!(rationals(&results(&wfv)["values"]).contains(&q(41, 924)));
}

#[test]
fn table_reference_report_lists_boundaries() {
    let doc = report(&["table", "4", "4", "wilcoxon,fyt", "--reference", "1/70,3/70"]);
    let r = results(&doc)["reference"].as_table().unwrap();
    assert_eq!(s(r, "baseline"), "wilcoxon");
    let mismatches = r["missing"].as_array().unwrap().len() + r["unexpected"].as_array().unwrap().len();
    assert_eq!(r["boundaries"].as_array().unwrap().len(), mismatches);
    assert_eq!(r["matches"].as_bool(), Some(mismatches == 0));
}

#[test]
fn table_size_cap() {
    let out = ordstat(&["table", "20", "20", "wilcoxon"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn demos() {
    let b = report(&["demo", "bernoulli1735"]);
    assert_eq!(s(results(&b), "p_value"), "1/2985984");
    assert_eq!(s(results(&b), "odds_against"), "2985983 to 1");
    let a = report(&["demo", "arbuthnott1710"]);
    assert_eq!(s(results(&a), "p_value"), format!("1/{}", num_bigint::BigUint::from(1u8) << 82));
    let full = report(&["demo", "bernoulli1735", "--theta", "90"]);
    assert_eq!(s(results(&full), "p_value"), "1");
    assert_eq!(ordstat(&["demo", "laplace1812"]).status.code(), Some(2));
    assert_eq!(ordstat(&["demo", "bernoulli1735", "--theta", "91"]).status.code(), Some(2));
}

#[test]
fn output_is_identical_across_thread_counts() {
    let runs: [&[&str]; 3] = [
        &["table", "6", "6", "wilcoxon,fyt,laplace"],
        &["twosample", "--data", &data("mixed.csv"), "--cascade", "fyt,t", "--mode", "mc", "--draws", "3500"],
        &["twosample", "--data", &data("six_smallest.csv"), "--cascade", "wilcoxon,vdw"],
    ];
    for args in runs {
        let one = ordstat_env(args, &[("RAYON_NUM_THREADS", "1")]);
        let four = ordstat_env(args, &[("RAYON_NUM_THREADS", "4")]);
        let again = ordstat_env(args, &[("RAYON_NUM_THREADS", "4")]);
        assert_eq!(one.status.code(), Some(0));
        assert_eq!(one.stdout, four.stdout, "{args:?}");
        assert_eq!(four.stdout, again.stdout, "{args:?}");
    }
}

#[test]
fn precision_from_flag_and_environment() {
    let env = ordstat_env(&["table", "3", "3", "fyt"], &[("ORDSTAT_PRECISION", "30")]);
    let doc: Table = toml::from_str(&String::from_utf8(env.stdout).unwrap()).unwrap();
    assert_eq!(doc["precision"].as_integer(), Some(30));
    let flag = ordstat_env(&["table", "3", "3", "fyt", "--precision", "60"], &[("ORDSTAT_PRECISION", "30")]);
    let doc: Table = toml::from_str(&String::from_utf8(flag.stdout).unwrap()).unwrap();
    assert_eq!(doc["precision"].as_integer(), Some(60));
    assert_eq!(ordstat(&["table", "3", "3", "fyt", "--precision", "5"]).status.code(), Some(2));
}

#[test]
fn plain_output() {
    let out = ordstat(&["demo", "bernoulli1735", "--plain"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("p_value: 1/2985984\n"), "{text}");
    assert!(!text.contains("[results]"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn emitted_rationals_are_reduced_and_round_trip(m in 1usize..=5, n in 1usize..=5, scheme in 0usize..5) {
        let cascade = ["wilcoxon", "fyt", "vdw", "laplace", "savage"][scheme];
        let doc = report(&["table", &m.to_string(), &n.to_string(), cascade]);
        for v in results(&doc)["values"].as_array().unwrap() {
            let text = v.as_str().unwrap();
            let parsed = parse_rational(text).unwrap();
            prop_assert_eq!(parsed.to_string(), text);
        }
    }
}
