use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn olab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_olab")).args(args).output().expect("binary runs")
}

fn small_config(out: &Path) -> Value {
    json!({
        "grid": { "n": 1, "levels": 6 },
        "u": [{ "kind": "power", "alpha": 0.5, "center": 0.5 }, { "kind": "constant", "value": 1.0 }],
        "v": [{ "kind": "constant", "value": 1.0 }],
        "young": { "r": 1.0, "delta": 0.0 },
        "suites": ["theorem1", "corollaries"],
        "seed": 4,
        "output": out,
    })
}

fn write(dir: &Path, name: &str, cfg: &Value) -> String {
    let p = dir.join(name);
    fs::write(&p, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let cfg = write(tmp.path(), "c.json", &small_config(&out));
    let o = olab(&["run", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["summary.json", "budget_diff.json", "theorem1.csv", "corollaries.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
    let header = fs::read_to_string(out.join("theorem1.csv")).unwrap();
    assert!(header.starts_with("suite,instance_id,k,l,cube,lhs,rhs,ratio,pass,t\n"));

    let o = olab(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("weak_type_e0"));
    let plot = fs::read_to_string(out.join("plot.csv")).unwrap();
    let mut lines = plot.lines();
    assert_eq!(lines.next(), Some("suite,t,ratio"));
    assert!(lines.count() > 0);
}

#[test]
fn budget_regression_exits_one() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(&tmp.path().join("out"));
    cfg["budgets"] = json!({ "theorem1": { "weak_type_e0": 1e-6 } });
    let path = write(tmp.path(), "c.json", &cfg);
    assert_eq!(olab(&["run", &path]).status.code(), Some(1));
    let diff: Vec<Value> =
        serde_json::from_str(&fs::read_to_string(tmp.path().join("out/budget_diff.json")).unwrap()).unwrap();
    let e = diff.iter().find(|e| e["check"] == "weak_type_e0").unwrap();
    assert_eq!(e["status"], "regression");
    let e = diff.iter().find(|e| e["check"] == "weak_type_e1").unwrap();
    assert_eq!(e["status"], "unbudgeted");
}

#[test]
fn config_errors_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut bad_suite = small_config(&out);
    bad_suite["suites"] = json!(["theorem2"]);
    let mut small_a = small_config(&out);
    small_a["ladders"] = json!({ "a": [2.0] });
    let mut unknown_field = small_config(&out);
    unknown_field["colour"] = json!("red");
    for (i, cfg) in [bad_suite, small_a, unknown_field].iter().enumerate() {
        let p = write(tmp.path(), &format!("bad{i}.json"), cfg);
        let o = olab(&["run", &p]);
        assert_eq!(o.status.code(), Some(2), "config {i}");
        assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    }
    assert_eq!(olab(&["run", tmp.path().join("missing.json").to_str().unwrap()]).status.code(), Some(2));
    let good = write(tmp.path(), "good.json", &small_config(&out));
    assert_eq!(olab(&["verify", "no_such_suite", &good]).status.code(), Some(2));
}

#[test]
fn empty_suite_list_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = small_config(&tmp.path().join("out"));
    cfg["suites"] = json!([]);
    let p = write(tmp.path(), "c.json", &cfg);
    assert_eq!(olab(&["run", &p]).status.code(), Some(0));
    let summary: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
}

#[test]
fn verify_runs_one_suite() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let p = write(tmp.path(), "c.json", &small_config(&out));
    assert_eq!(olab(&["verify", "corollaries", &p]).status.code(), Some(0));
    assert!(out.join("corollaries.csv").exists());
    assert!(!out.join("theorem1.csv").exists());
}

#[test]
fn corpus_files_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let mut cfg = small_config(&out);
    cfg["u"] = json!([{ "kind": "constant", "value": 1.0 }]);
    let p = write(tmp.path(), "c.json", &cfg);
    assert_eq!(olab(&["corpus", &p]).status.code(), Some(0));
    let dir = out.join("corpus");
    assert!(dir.join("weight0.csv").exists());
    assert!(!dir.join("weight1.csv").exists(), "u and v share the constant weight");
    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["weights"].as_array().unwrap().len(), 1);
    assert_eq!(manifest["functions"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["weights"][0]["a1"], 1.0);
}

#[test]
fn relative_output_follows_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let sub = tmp.path().join("cfgs");
    fs::create_dir(&sub).unwrap();
    let mut cfg = small_config(Path::new("../rel_out"));
    cfg["suites"] = json!(["corollaries"]);
    let p = write(&sub, "c.json", &cfg);
    assert_eq!(olab(&["run", &p]).status.code(), Some(0));
    assert!(tmp.path().join("rel_out/summary.json").exists());
}
