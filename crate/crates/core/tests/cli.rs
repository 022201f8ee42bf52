mod common;

use std::fs;
use std::process::{Command, Output};

use common::system_path;

fn gdlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gdlab"))
        .args(args)
        .output()
        .expect("gdlab runs")
}

fn sys(name: &str) -> String {
    system_path(name).to_string_lossy().into_owned()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn validate_reports_bundled_system() {
    let out = gdlab(&["validate", "--system", &sys("two_vertex_five_edge.system")]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["valid"], true);
    assert_eq!(v["vertices"], 2);
    assert_eq!(v["edges"], 5);
}

#[test]
fn exit_code_one_on_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("contraction", r#"{"ambient_dim":1,"vertices":["a"],"edges":[{"id":"e","from":"a","to":"a","scale":1}],"condensation":{}}"#),
        ("unknown", r#"{"ambient_dim":1,"vertices":["a"],"edges":[{"id":"e","from":"a","to":"b","scale":"1/2"}],"condensation":{}}"#),
        ("field", r#"{"ambient_dim":1,"vertices":["a"],"edges":[],"condensation":{},"extra":0}"#),
        ("syntax", r#"{"ambient_dim":1,"vertices":["a"],"#),
    ];
    for (name, text) in cases {
        let path = dir.path().join(format!("{name}.system"));
        fs::write(&path, text).unwrap();
        let out = gdlab(&["dim", "--system", path.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(1), "{name}");
        assert!(!out.stderr.is_empty());
    }
    let out = gdlab(&["dim", "--system", "/nonexistent.system"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn dim_prints_perron_vector() {
    let out = gdlab(&["dim", "--system", &sys("cantor.system")]);
    let v = json(&out);
    assert!((v["s_star"].as_f64().unwrap() - 2f64.ln() / 3f64.ln()).abs() < 1e-9);
    assert_eq!(v["perron_vector"], serde_json::json!([1.0]));
    let out = gdlab(&["dim", "--system", &sys("two_vertex_five_edge.system"), "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("vertex,weight\nv1,"));
}

#[test]
fn attractor_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("c.csv");
    let pgm = dir.path().join("c.pgm");
    let common = ["--system", &sys("cantor.system"), "--vertex", "v1", "--epsilon", "0.0041153"];
    let mut args = vec!["attractor"];
    args.extend(common);
    let out = gdlab(&[&args[..], &["--kind", "homogeneous", "--format", "csv", "--out", csv.to_str().unwrap()]].concat());
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().next(), Some("x"));
    assert_eq!(text.lines().count(), 1 + 32);
    let out = gdlab(&[&args[..], &["--format", "pgm", "--out", pgm.to_str().unwrap()]].concat());
    assert_eq!(out.status.code(), Some(0));
    assert!(fs::read(&pgm).unwrap().starts_with(b"P5\n512 51\n255\n"));
    let out = gdlab(&[&args[..], &["--kind", "orbital"]].concat());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn boxdim_cre_measure_osc() {
    let out = gdlab(&[
        "boxdim", "--system", &sys("cantor.system"), "--delta-max", "0.125",
        "--delta-min", "0.00006103515625", "--steps", "12", "--window", "4", "--epsilon", "1e-6",
    ]);
    let v = json(&out);
    assert!((v["estimate"]["slope_global"].as_f64().unwrap() - 0.6309).abs() < 0.03);
    let out = gdlab(&["cre", "--system", &sys("halves_point.system"), "--t", "1", "--delta", "0.0625"]);
    assert_eq!(json(&out)["p"], 0.0);
    let out = gdlab(&["measure", "--system", &sys("halves_point.system"), "--samples", "20000", "--seed", "3"]);
    assert!((json(&out)["mean"][0].as_f64().unwrap() - 1.0).abs() < 0.03);
    let out = gdlab(&["osc", "--system", &sys("halves_point.system")]);
    let v = json(&out);
    assert_eq!(v["holds"], false);
    assert_eq!(v["report"]["condition_iii"]["witness"]["point"], serde_json::json!([2.0]));
}

#[test]
fn experiment_reports_are_reproducible() {
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_gdlab"))
            .env("RAYON_NUM_THREADS", threads)
            .args(["experiment", "--kind", "lowerbound", "--system", &sys("cantor_interval.system")])
            .output()
            .unwrap()
    };
    let a = run("1");
    let b = run("4");
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["cre_table"].as_array().unwrap().len(), 3);
    assert!(v.get("timing_ms").is_some_and(|t| t.is_null()));
}

#[test]
fn continuity_rejects_collapsing_limit() {
    let out = gdlab(&["experiment", "--kind", "continuity", "--system", &sys("collapsing.family"), "--n", "2,3,5"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["limit"]["valid"], false);
    assert_eq!(v["continuity"].as_array().unwrap().len(), 3);
}
