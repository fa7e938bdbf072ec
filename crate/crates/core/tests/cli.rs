use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn data(name: &str) -> String {
    format!("{}/data/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn scratch(name: &str, contents: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("extsym-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extsym")).args(args).output().unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("JSON report on stdout")
}

fn check<'a>(rep: &'a Value, name: &str) -> &'a Value {
    rep["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

const ZERO: &str = r#"{"space": {"n": 1, "p": 1}, "C": [[[0, 0], [0, 0]], [[0, 0], [0, 0]]]}"#;

#[test]
fn zero_family_passes_everything() {
    let path = scratch("zero.json", ZERO);
    let out = run(&["check-lambda", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(rep["passed"], true);
    assert!(rep["checks"].as_array().unwrap().iter().all(|c| c["passed"] == true));
    assert_eq!(rep["data"]["flat"], true);
}

#[test]
fn zero_family_orbit_of_origin() {
    let path = scratch("zero-orbit.json", ZERO);
    for t in ["1", "-7/2"] {
        let out = run(&["orbit", path.to_str().unwrap(), "--x", "0,0", "--t", t]);
        assert_eq!(out.status.code(), Some(0));
        let pt = &report(&out)["data"]["points"][0];
        assert_eq!(pt["x_tilde"], serde_json::json!(["0", "0"]));
        assert_eq!(pt["u_tilde"], serde_json::json!(["0", "0"]));
    }
}

#[test]
fn r8_relations_are_listed() {
    let out = run(&["check-lambda", &data("r8_example.json")]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    assert_eq!(rep["data"]["relations"], serde_json::json!(["A3A4 = A2", "A4A3 = -A2"]));
    assert_eq!(check(&rep, "product_identities")["passed"], true);
}

#[test]
fn malformed_json_exits_with_2() {
    let path = scratch("bad.json", "{\"space\": {\"n\": 1,\n \"p\": 1}, \"C\": [[[0, 0]],");
    let out = run(&["check-lambda", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(out.stdout.is_empty());
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 2"), "{err}");
    let path = scratch("shape.json", r#"{"space": {"n": 1, "p": 1}, "C": [[[0, 1, 0], [0, 0]], [[0, 0], [0, 0]]]}"#);
    let err = String::from_utf8(run(&["check-lambda", path.to_str().unwrap()]).stderr).unwrap();
    assert!(err.contains("C[0][0]"), "{err}");
}

#[test]
fn degenerate_generators_are_rejected_with_rank() {
    let path = scratch(
        "degenerate.json",
        r#"{"space": {"n": 1, "p": 1}, "generators": [
            {"A": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]], "a": [0,0,1,0]},
            {"A": [[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]], "a": [0,0,3,0]}]}"#,
    );
    let out = run(&["surface", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let detail = check(&report(&out), "build_surface")["detail"].as_str().unwrap().to_string();
    assert!(detail.contains("rank 0 < 2"), "{detail}");
}

#[test]
fn parabola_surface_and_star() {
    let out = run(&["surface", &data("parabola.json"), "--verify-symmetry", "50"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(check(&report(&out), "extrinsic_symmetry")["detail"], "50/50 random pairs with F_i(S_x y) = 0");
    let out = run(&["star", &data("parabola.json"), "--f", "z1^2 + z3", "--g", "z2*z4", "--check", "assoc"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(check(&report(&out), "associativity")["passed"], true);
}

#[test]
fn codim2_histogram() {
    let out = run(&["--seed", "7", "classify-codim2", "--n", "2", "--count", "60"]);
    assert_eq!(out.status.code(), Some(0));
    let rep = report(&out);
    let h = &rep["data"]["histogram"];
    assert_eq!(h["violation"], 0);
    assert_eq!(h["flat"].as_u64().unwrap() + h["products_zero"].as_u64().unwrap(), 60);
}

#[test]
fn float_mode_only_for_codim2() {
    let out = run(&["--mode", "float", "check-lambda", &data("parabola.json")]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn text_output() {
    let out = run(&["--output", "text", "orbit", &data("parabola.json")]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("orbit (seed 0, exact mode)"));
    assert!(text.contains("PASS flat_graph: 2/2"));
}
