use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output};

fn repbf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_repbf")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

const EXAMPLE2: [&str; 15] = [
    "f",
    "--f-orig",
    "4.97",
    "--df-effect",
    "2",
    "--df-error-orig",
    "81",
    "--n-orig",
    "84",
    "--f-rep",
    "0.24",
    "--df-error-rep",
    "122",
    "--n-rep",
    "125",
];

fn with(base: &[&'static str], extra: &[&'static str]) -> Vec<&'static str> {
    base.iter().chain(extra).copied().collect()
}

fn text_field(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(key).filter(|rest| rest.starts_with(' ')))
        .unwrap_or_else(|| panic!("no {key} in\n{text}"))
        .trim()
        .to_string()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn f_command_reports_example2() {
    let o = repbf(&EXAMPLE2);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let br0: f64 = text_field(&text, "br0").parse().unwrap();
    assert!((br0 - 0.031).abs() < 0.004, "{text}");
    assert_eq!(text_field(&text, "interpretation"), "strong_0");
    assert_eq!(text_field(&text, "seed"), "42");
    assert_eq!(text_field(&text, "n_draws"), "100000");
    assert_eq!(text_field(&text, "estimator"), "importance");
}

#[test]
fn missing_flag_is_a_validation_error() {
    let o = repbf(&EXAMPLE2[..EXAMPLE2.len() - 2]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--n-rep"), "{}", stderr(&o));
}

#[test]
fn json_is_byte_identical_for_a_fixed_seed() {
    let args = with(&EXAMPLE2, &["--format", "json", "--seed", "7"]);
    let a = repbf(&args);
    let b = repbf(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(json(&a)["seed"], 7);
}

#[test]
fn json_keys_are_stable() {
    for estimator in ["importance", "monte_carlo", "quadrature"] {
        let v = json(&repbf(&with(&EXAMPLE2, &["--format", "json", "--estimator", estimator])));
        for key in [
            "br0",
            "log10_br0",
            "log_numerator",
            "log_denominator",
            "mc_se_log",
            "estimator",
            "n_draws",
            "seed",
            "interpretation",
        ] {
            assert!(v.get(key).is_some(), "{estimator}: {key} missing in {v}");
        }
        assert_eq!(v["estimator"], estimator);
    }
}

#[test]
fn text_and_json_agree_to_six_digits() {
    let text = stdout(&repbf(&EXAMPLE2));
    let v = json(&repbf(&with(&EXAMPLE2, &["--format", "json"])));
    for key in ["br0", "log10_br0", "log_numerator", "log_denominator", "mc_se_log"] {
        let shown: f64 = text_field(&text, key).parse().unwrap();
        let full = v[key].as_f64().unwrap();
        assert!(((shown - full) / full).abs() < 5e-6, "{key}: {shown} vs {full}");
    }
    assert_eq!(text_field(&text, "interpretation"), v["interpretation"]);
}

const EXAMPLE3_T: [&str; 13] = [
    "t",
    "--t-orig",
    "-3.953",
    "--n1-orig",
    "15",
    "--n2-orig",
    "15",
    "--t-rep",
    "3.6412",
    "--n1-rep",
    "30",
    "--n2-rep",
    "30",
];

#[test]
fn t_command_with_default_df() {
    let o = repbf(&with(&EXAMPLE3_T, &["--format", "json"]));
    assert!(o.status.success(), "{}", stderr(&o));
    let br0 = json(&o)["br0"].as_f64().unwrap();
    assert!((br0 / 0.0015 - 1.0).abs() < 0.2, "{br0}");
    assert_eq!(json(&o)["interpretation"], "decisive_0");
}

#[test]
fn t_command_with_welch_df() {
    let o = repbf(&with(
        &EXAMPLE3_T,
        &["--df-orig", "20.809", "--df-rep", "56.765", "--estimator", "quadrature", "--format", "json"],
    ));
    let br0 = json(&o)["br0"].as_f64().unwrap();
    assert!((br0 / 0.0023022 - 1.0).abs() < 1e-4, "{br0}");
}

#[test]
fn null_replication_of_a_strong_original() {
    let o = repbf(&[
        "t", "--t-orig", "5.0", "--n1-orig", "20", "--n2-orig", "20", "--t-rep", "0", "--n1-rep", "50", "--n2-rep", "50",
        "--format", "json",
    ]);
    assert!(json(&o)["br0"].as_f64().unwrap() < 1.0);
}

#[test]
fn one_sample_t() {
    let o = repbf(&["t", "--t-orig", "3.0", "--n1-orig", "25", "--t-rep", "2.5", "--n1-rep", "40", "--format", "json"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(json(&o)["br0"].as_f64().unwrap() > 1.0);
}

#[test]
fn non_positive_df_is_rejected() {
    for df in ["0", "-3"] {
        let o = repbf(&with(&EXAMPLE3_T, &["--df-orig", df]));
        assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
        assert!(stderr(&o).contains("--df-orig"), "{}", stderr(&o));
    }
    let o = repbf(&[
        "t", "--t-orig", "2", "--n1-orig", "15", "--n2-orig", "1", "--t-rep", "2", "--n1-rep", "30",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--n2-orig"));
}

#[test]
fn numerical_failure_exits_with_3() {
    let mut args = EXAMPLE2.to_vec();
    args[10] = "1e308";
    let o = repbf(&args);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn warnings_go_to_stderr() {
    let o = repbf(&[
        "t", "--t-orig", "2.5", "--n1-orig", "10", "--n2-orig", "20", "--t-rep", "2.0", "--n1-rep", "30", "--n2-rep",
        "30", "--format", "json", "--estimator", "quadrature",
    ]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning: original study has unequal group sizes"));
    json(&o);
}

struct TempFile(PathBuf);

impl TempFile {
    fn new(name: &str, contents: &str) -> Self {
        let path = std::env::temp_dir().join(format!("repbf-cli-{}-{name}", std::process::id()));
        std::fs::File::create(&path).unwrap().write_all(contents.as_bytes()).unwrap();
        TempFile(path)
    }

    fn path(&self) -> &str {
        self.0.to_str().unwrap()
    }
}

impl Drop for TempFile {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.0);
    }
}

const HEADER: &str = "id,test,stat_orig,df_orig,df_error_orig,n_orig,n2_orig,stat_rep,df_rep,df_error_rep,n_rep,n2_rep";

fn batch_rows(out: &str) -> Vec<Vec<String>> {
    csv::Reader::from_reader(out.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn batch_reproduces_the_worked_f_examples() {
    let input = TempFile::new(
        "examples.csv",
        &format!(
            "{HEADER}\ninteraction,f,4.36,2,92,98,,2.532,2,99,105,\nmain,f,7.57,1,92,98,,0.107,1,99,105,\nex2,f,4.97,2,81,84,,0.24,2,122,125,\n"
        ),
    );
    let o = repbf(&["batch", input.path()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().next().unwrap(), format!("{HEADER},br0,log10_br0,mc_se_log,interpretation,status"));
    let rows = batch_rows(&out);
    assert_eq!(rows.len(), 3);
    for (row, (expected, tol)) in rows.iter().zip([(1.153, 0.06), (0.057, 0.006), (0.031, 0.004)]) {
        let br0: f64 = row[12].parse().unwrap();
        assert!((br0 - expected).abs() < tol, "{row:?}");
        assert_eq!(row[16], "ok");
    }
}

#[test]
fn batch_with_no_rows_writes_the_header() {
    let input = TempFile::new("empty.csv", &format!("{HEADER}\n"));
    let o = repbf(&["batch", input.path()]);
    assert!(o.status.success());
    assert_eq!(stdout(&o), format!("{HEADER},br0,log10_br0,mc_se_log,interpretation,status\n"));
}

#[test]
fn batch_isolates_bad_rows() {
    let input = TempFile::new(
        "mixed.csv",
        &format!(
            "{HEADER}\na,f,4.97,2,81,84,,0.24,2,122,125,\nb,f,oops,2,81,84,,0.24,2,122,125,\nc,t,2.5,,,15,15,2.0,,,30,30\nd,z,1,1,1,1,1,1,1,1,1,1\ne,t,2.5,,,15,1,2.0,,,30,30\n"
        ),
    );
    let o = repbf(&["batch", input.path(), "--estimator", "quadrature"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let rows = batch_rows(&stdout(&o));
    let status: Vec<&str> = rows.iter().map(|r| r.last().unwrap().as_str()).collect();
    assert_eq!(status[0], "ok");
    assert!(status[1].starts_with("invalid: stat_orig"), "{}", status[1]);
    assert_eq!(status[2], "ok");
    assert!(status[3].starts_with("invalid: test"), "{}", status[3]);
    assert!(status[4].starts_with("invalid: n2_orig"), "{}", status[4]);
    assert!(rows[1][12].is_empty());
    assert!(!rows[2][12].is_empty());
}

#[test]
fn batch_rejects_a_bad_header() {
    let input = TempFile::new("header.csv", "id,test,stat\n1,f,2\n");
    let o = repbf(&["batch", input.path()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("stat_orig"));
    let o = repbf(&["batch", "/nonexistent/input.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn batch_writes_to_a_file() {
    let input = TempFile::new("in.csv", &format!("{HEADER}\na,f,4.97,2,81,84,,0.24,2,122,125,\n"));
    let output = TempFile::new("out.csv", "");
    let o = repbf(&["batch", input.path(), "--output", output.path(), "--estimator", "quadrature"]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let written = std::fs::read_to_string(&output.0).unwrap();
    assert_eq!(batch_rows(&written).len(), 1);
}

#[test]
fn sim3_footer() {
    let o = repbf(&["sim", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let footer = out.lines().last().unwrap();
    assert!(footer.starts_with("#summary,n_cells=252,"), "{footer}");
    let field = |key: &str| -> f64 {
        footer.split(',').find_map(|kv| kv.strip_prefix(&format!("{key}="))).unwrap().parse().unwrap()
    };
    assert!(field("correlation") >= 0.99);
    assert!((1.8..=2.6).contains(&field("mean_ratio")));
    assert_eq!(out.lines().count(), 1 + 252 + 1);
}

#[test]
fn sim2_has_both_estimates_in_every_row() {
    let o = repbf(&["sim", "2", "--draws", "20000"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let out = stdout(&o);
    let header: Vec<&str> = out.lines().next().unwrap().split(',').collect();
    let (mc, is) = (
        header.iter().position(|h| *h == "br0_mc").unwrap(),
        header.iter().position(|h| *h == "br0_is").unwrap(),
    );
    let rows = batch_rows(&out);
    assert_eq!(rows.len(), 18);
    for row in rows {
        assert!(row[mc].parse::<f64>().is_ok() && row[is].parse::<f64>().is_ok(), "{row:?}");
    }
}

#[test]
fn sim1_is_byte_identical_for_a_fixed_seed() {
    let args = ["sim", "1", "--seed", "3", "--estimator", "quadrature,importance", "--groups", "2", "--n-orig", "15"];
    let a = repbf(&args);
    let b = repbf(&args);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sim_grid_overrides_are_validated() {
    let o = repbf(&["sim", "1", "--es-rep", "-0.5"]);
    assert_eq!(o.status.code(), Some(2));
    let o = repbf(&["sim", "2", "--estimator", "importance"]);
    assert_eq!(o.status.code(), Some(2));
    let o = repbf(&["sim", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn strict_sim_fails_on_degenerate_cells() {
    let args = ["sim", "3", "--estimator", "importance", "--n-orig", "50", "--n-rep", "100", "--es-orig", "2", "--es-rep", "0.00001"];
    let o = repbf(&args);
    assert!(o.status.success());
    assert!(stdout(&o).contains("error"));
    let o = repbf(&[&args[..], &["--strict"]].concat());
    assert_eq!(o.status.code(), Some(3));
}
