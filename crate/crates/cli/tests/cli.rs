use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use hdlaplace::cumulant::expand;
use hdlaplace::models::{logreg_model, quartic_model, random_tensors, Link};
use hdlaplace::quadratize::run_pipeline;
use hdlaplace_cli::{load, parse_lambdas, ModelFile, CSV_HEADER};
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hdlaplace"))
}

fn run(args: &[&str], stdin: Option<&str>) -> Output {
    let mut cmd = bin();
    cmd.args(args).stdin(Stdio::piped()).stdout(Stdio::piped()).stderr(Stdio::piped());
    let mut child = cmd.spawn().expect("spawn hdlaplace");
    if let Some(text) = stdin {
        child.stdin.take().unwrap().write_all(text.as_bytes()).unwrap();
    }
    drop(child.stdin.take());
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad report ({e}): {}", stdout(o)))
}

fn builtin(args: &[&str]) -> String {
    let o = run(&[&["builtin"], args].concat(), None);
    assert!(o.status.success(), "{}", stderr(&o));
    stdout(&o)
}

fn coefficients(report: &Value, path: &str) -> Vec<f64> {
    report["paths"].as_array().unwrap().iter().find(|p| p["path"] == path).unwrap_or_else(|| panic!("no {path} path"))
        ["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn quartic_coefficients_on_both_paths() {
    let model = builtin(&["quartic", "--d", "3", "--L", "2"]);
    let o = run(&["coeffs", "--model", "-", "--method", "both"], Some(&model));
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["schema_version"], 1);
    for path in ["cumulant", "quadratize"] {
        let b = coefficients(&r, path);
        assert_eq!(b.len(), 1);
        assert!((b[0] + 0.625).abs() < 1e-12, "{path}: {b:?}");
    }
    assert!(r["discrepancy"].as_f64().unwrap() < 1e-10);
}

#[test]
fn order_one_has_no_coefficients() {
    let model = builtin(&["quartic", "--d", "2", "--L", "1"]);
    let o = run(&["coeffs", "--model", "-"], Some(&model));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(coefficients(&json(&o), "cumulant").is_empty());
}

#[test]
fn malformed_index_names_the_field() {
    let text = r#"{"d": 2, "L": 2, "f_derivatives": {"4": [[[1, 1, 2, 2], 0.5], [[1, 2], 1.0]]}}"#;
    let o = run(&["coeffs", "--model", "-"], Some(text));
    assert!(!o.status.success());
    let err = stderr(&o);
    assert!(err.contains("f_derivatives.4[1]"), "{err}");
    assert!(err.contains("length 2"), "{err}");
}

#[test]
fn other_model_file_violations_are_rejected() {
    let cases = [
        (r#"{"d": 2, "L": 2, "f_derivatives": {"3": [[[2, 1, 1], 0.5]]}}"#, "not sorted"),
        (r#"{"d": 2, "L": 2, "f_derivatives": {"3": [[[1, 1, 3], 0.5]]}}"#, "outside 1..=2"),
        (r#"{"d": 2, "L": 2, "f_derivatives": {"3": [[[1, 1, 2], 0.5], [[1, 1, 2], 0.1]]}}"#, "permutation class"),
        (r#"{"d": 2, "L": 2, "f_derivatives": {"7": [[[1, 1, 1, 1, 1, 1, 1], 0.5]]}}"#, "f_derivatives.7"),
        (r#"{"d": 2, "L": 2, "bogus": 1}"#, "line 1"),
        ("{\"d\": 2,\n \"L\": }", "line 2"),
    ];
    for (text, needle) in cases {
        let o = run(&["coeffs", "--model", "-"], Some(text));
        assert!(!o.status.success(), "{text}");
        assert!(stderr(&o).contains(needle), "{text}: {}", stderr(&o));
    }
}

#[test]
fn builtin_round_trips_through_coeffs() {
    let text = builtin(&["random", "--d", "2", "--L", "3", "--seed", "11", "--scale", "0.1"]);
    let o = run(&["coeffs", "--model", "-"], Some(&text));
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&o);
    let model = random_tensors(2, 3, 11, 0.1).unwrap();
    assert_eq!(coefficients(&r, "cumulant"), expand(&model).unwrap().coefficients);
    assert_eq!(coefficients(&r, "quadratize"), run_pipeline(&model).unwrap().coefficients);

    let text = builtin(&["logreg", "--d", "2", "--n", "80", "--seed", "3", "--L", "3"]);
    let r = json(&run(&["coeffs", "--model", "-", "--method", "cumulant"], Some(&text)));
    let p = logreg_model(80, 2, 3, &[0.0, 0.0], Link::Logistic, 3).unwrap();
    assert_eq!(coefficients(&r, "cumulant"), expand(p.integrand.model()).unwrap().coefficients);
}

#[test]
fn random_builtin_passes_dual_path_check() {
    let text = builtin(&["random", "--d", "2", "--L", "2", "--scale", "0.1", "--seed", "7"]);
    ModelFile::parse(&text).unwrap();
    let o = run(&["coeffs", "--model", "-", "--method", "both"], Some(&text));
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&o);
    assert!(r["checks"][0]["passed"].as_bool().unwrap());
}

#[test]
fn quartic_builtin_reconstructs_norm4() {
    let file = ModelFile::parse(&builtin(&["quartic", "--d", "2", "--L", "2"])).unwrap();
    let model = file.to_model().unwrap();
    let t = model.f_tensor(4).unwrap();
    for x in [[1.0, 0.0], [0.3, -0.7], [1.5, 2.0]] {
        let r2: f64 = x.iter().map(|v| v * v).sum();
        assert!((t.eval_power(&x).unwrap() - r2 * r2).abs() < 1e-12);
    }
}

#[test]
fn logreg_builtin_is_deterministic() {
    let a = builtin(&["logreg", "--d", "2", "--n", "50", "--seed", "1"]);
    let b = builtin(&["logreg", "--d", "2", "--n", "50", "--seed", "1"]);
    assert_eq!(a, b);
}

#[test]
fn verify_quartic_radial() {
    let model = builtin(&["quartic", "--d", "1", "--L", "2"]);
    let o = run(&["verify", "--model", "-", "--lambda", "100", "--oracle", "radial"], Some(&model));
    assert!(o.status.success(), "{}", stderr(&o));
    let row = &json(&o)["oracle_rows"][0];
    let rem = row["remainder"].as_f64().unwrap();
    assert!(rem.abs() <= 5e-4 && rem != 0.0, "{rem}");
    let sum = row["log_i_expansion"].as_f64().unwrap() + rem;
    assert!((sum - row["log_i_oracle"].as_f64().unwrap()).abs() < 1e-15);
}

#[test]
fn verify_pure_gaussian() {
    let o = run(&["verify", "--model", "-", "--lambda", "30"], Some(r#"{"d": 3, "L": 2}"#));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(json(&o)["oracle_rows"][0]["remainder"].as_f64().unwrap().abs() < 1e-10);
}

#[test]
fn verify_logreg_against_bic() {
    let model = builtin(&["logreg", "--d", "2", "--n", "200", "--seed", "1"]);
    let o = run(&["verify", "--model", "-", "--oracle", "ghq"], Some(&model));
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&o);
    assert_eq!(r["oracle_rows"][0]["lambda"].as_f64().unwrap(), 200.0);
    let gap = r["evidence"]["gap"].as_f64().unwrap();
    let rem = r["oracle_rows"][0]["remainder"].as_f64().unwrap();
    assert!(gap.abs() < 1e-4, "{gap}");
    assert!((gap - rem).abs() < 1e-8, "{gap} vs {rem}");
}

#[test]
fn radial_oracle_requires_radial_model() {
    let model = builtin(&["random", "--d", "2", "--L", "2", "--seed", "1"]);
    let o = run(&["verify", "--model", "-", "--lambda", "50", "--oracle", "radial"], Some(&model));
    assert!(!o.status.success());
    assert!(stderr(&o).contains("oracle precondition"), "{}", stderr(&o));
}

#[test]
fn sweep_writes_csv_and_slope() {
    let dir = tempfile::tempdir().unwrap();
    let model = write(dir.path(), "q.json", &builtin(&["quartic", "--d", "1", "--L", "2"]));
    let csv_path = dir.path().join("sweep.csv");
    let csv = csv_path.to_str().unwrap();
    let args = ["sweep", "--model", &model, "--lambdas", "50:800:2", "--oracle", "radial", "--out", csv];
    let o = run(&args, None);
    assert!(o.status.success(), "{}", stderr(&o));
    let slope = json(&o)["fit"]["slope"].as_f64().unwrap();
    assert!((slope + 2.0).abs() <= 0.15, "{slope}");

    let body = std::fs::read_to_string(&csv_path).unwrap();
    assert!(!body.contains('\r'));
    let lines: Vec<&str> = body.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 6);
    for line in &lines[1..] {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells.len(), 7);
        for c in cells {
            c.parse::<f64>().unwrap_or_else(|_| panic!("cell {c}"));
        }
    }
    assert_eq!(lines[1].split(',').nth(1).unwrap().parse::<f64>().unwrap(), 50.0);

    let again = run(&args, None);
    assert!(again.status.success());
    assert_eq!(std::fs::read_to_string(&csv_path).unwrap(), body);
}

#[test]
fn sweep_without_out_streams_csv() {
    let model = builtin(&["quartic", "--d", "2", "--L", "2"]);
    let o = run(&["sweep", "--model", "-", "--lambdas", "50,100,200"], Some(&model));
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with(CSV_HEADER));
    assert!(stderr(&o).contains("\"slope\""));
}

#[test]
fn sweep_rejects_duplicate_lambdas() {
    let model = builtin(&["quartic", "--d", "1", "--L", "2"]);
    let o = run(&["sweep", "--model", "-", "--lambdas", "50,100,100"], Some(&model));
    assert!(!o.status.success());
    assert!(stderr(&o).contains("duplicate"), "{}", stderr(&o));
}

#[test]
fn noisy_monte_carlo_rows_are_flagged() {
    let model = builtin(&["quartic", "--d", "2", "--L", "2"]);
    let args = ["sweep", "--model", "-", "--lambdas", "50,100,200", "--oracle", "mc", "--samples", "2000"];
    let o = run(&args, Some(&model));
    assert!(!o.status.success());
    assert!(stderr(&o).contains("check failed: oracle precision: rows [0, 1, 2]"), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 4);
}

#[test]
fn order_override() {
    let text = builtin(&["quartic", "--d", "2", "--L", "2"]);
    let o = run(&["coeffs", "--model", "-", "--L", "3"], Some(&text));
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(coefficients(&json(&o), "cumulant").len(), 2);

    let plain = r#"{"d": 1, "L": 2, "f_derivatives": {"4": [[[1, 1, 1, 1], 1.0]]}}"#;
    let o = run(&["coeffs", "--model", "-", "--L", "3"], Some(plain));
    assert!(!o.status.success());
    assert!(stderr(&o).contains("exceeds the model file order"));
}

#[test]
fn edited_source_model_is_rejected() {
    let text = builtin(&["quartic", "--d", "2", "--L", "2"]).replace("0.3333333333333333", "0.5");
    let file = ModelFile::parse(&text).unwrap();
    let err = load(file, None).err().unwrap().to_string();
    assert!(err.contains("recorded source"), "{err}");
}

#[test]
fn lambda_syntax() {
    assert_eq!(parse_lambdas("50:800:2").unwrap(), vec![50.0, 100.0, 200.0, 400.0, 800.0]);
    assert_eq!(parse_lambdas("10, 20,40").unwrap(), vec![10.0, 20.0, 40.0]);
    assert!(parse_lambdas("10:5:2").is_err());
    assert!(parse_lambdas("1:2").is_err());
    assert!(parse_lambdas("a,b").is_err());
}

#[test]
fn quartic_sources_match_builders() {
    let file = ModelFile::parse(&builtin(&["quartic", "--d", "3", "--L", "3"])).unwrap();
    let loaded = load(file, None).unwrap();
    assert_eq!(&loaded.model, quartic_model(3, 3).unwrap().model());
}
