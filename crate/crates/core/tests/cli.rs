use std::path::PathBuf;

use grandpot::cli::{load_state, run};
use grandpot::lorenz::{build_lorenz, equimajorizes};
use grandpot::work::work_gain;
use serde_json::Value;

fn data(name: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "tests", "data", name].iter().collect();
    p.to_string_lossy().into_owned()
}

/// Exit code, stdout, stderr.
fn call(args: &[&str]) -> (i32, String, String) {
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let mut full = vec!["grandpot"];
    full.extend_from_slice(args);
    let code = run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn json_of(args: &[&str]) -> Value {
    let (code, out, err) = call(args);
    assert_eq!(code, 0, "stderr: {err}");
    serde_json::from_str(&out).unwrap()
}

#[test]
fn b_eps_and_dh_match_the_library() {
    let path = data("fig1_r1.json");
    let s = load_state(path.as_ref()).unwrap();
    let v = json_of(&["b-eps", &path, "--eps", "0.2"]);
    assert_eq!(v["b_eps"].as_f64().unwrap(), build_lorenz(&s).type2_error(0.2).unwrap());
    let v = json_of(&["dh", &path, "--eps", "0.2"]);
    let dh = build_lorenz(&s).dh_entropy(0.2).unwrap().unwrap();
    assert_eq!(v["dh"].as_f64().unwrap(), dh);
    let v = json_of(&["work-gain", &path]);
    assert_eq!(v["eps"].as_f64().unwrap(), 0.05);
    assert_eq!(v["w_gain"].as_f64().unwrap(), work_gain(&s, 0.05).unwrap().unwrap());
}

#[test]
fn gibbs_request_file_is_equilibrium() {
    let v = json_of(&["gibbs", &data("fig1_equilibrium.json")]);
    let g: Vec<f64> = v["gibbs"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let z: f64 = [0.0f64, -1.0, -2.0].iter().map(|x| x.exp()).sum();
    for (gi, e) in g.iter().zip([0.0f64, 1.0, 2.0]) {
        assert!((gi - (-e).exp() / z).abs() < 1e-15);
    }
    assert!((v["log_z"].as_f64().unwrap() - z.ln()).abs() < 1e-15);
}

#[test]
fn compare_and_witness_agree() {
    let (r1, r3) = (data("fig1_r1.json"), data("fig1_r3.json"));
    let v = json_of(&["compare", &r1, &r3, "--alpha", "2", "--a", "1.5"]);
    let (a, b) = (load_state(r1.as_ref()).unwrap(), load_state(r3.as_ref()).unwrap());
    assert_eq!(v["a_to_b"].as_bool().unwrap(), equimajorizes(&a, &b).unwrap());
    assert_eq!(v["b_to_a"].as_bool().unwrap(), equimajorizes(&b, &a).unwrap());
    assert_eq!(v["renyi"].as_array().unwrap().len(), 2);
    assert_eq!(v["hinge"].as_array().unwrap().len(), 2);

    let w = json_of(&["witness", &r1, &r3]);
    assert_eq!(w["exists"], v["a_to_b"]);
    let back = json_of(&["witness", &r3, &r1]);
    assert_eq!(back["exists"], v["b_to_a"]);
}

#[test]
fn exit_codes() {
    assert_eq!(call(&["--help"]).0, 0);
    assert_eq!(call(&["dh", "--help"]).0, 0);
    assert_eq!(call(&["no-such-command"]).0, 2);
    assert_eq!(call(&["dh", "/definitely/not/here.json"]).0, 2);
    // eps outside [0, 1] is a domain error.
    let (code, _, err) = call(&["b-eps", &data("fig1_r1.json"), "--eps", "1.5"]);
    assert_eq!(code, 1, "{err}");
    assert!(err.starts_with("error:"));
}

#[test]
fn malformed_and_invalid_files() {
    let dir = tempfile::tempdir().unwrap();
    let bad_json = dir.path().join("bad.json");
    std::fs::write(&bad_json, "{ not json").unwrap();
    assert_eq!(call(&["dh", bad_json.to_str().unwrap()]).0, 2);

    let unnormalized = dir.path().join("unnorm.json");
    std::fs::write(
        &unnormalized,
        r#"{"beta": 1.0, "mu": 0.0, "levels": [{"E": 0.0, "p": 0.5}, {"E": 1.0, "p": 0.4}]}"#,
    )
    .unwrap();
    assert_eq!(call(&["dh", unnormalized.to_str().unwrap()]).0, 1);
}

#[test]
fn csv_outputs_have_headers() {
    let dir = tempfile::tempdir().unwrap();
    let lz = dir.path().join("lorenz.csv");
    let v = json_of(&["lorenz", &data("fig1_r2.json"), "--csv", lz.to_str().unwrap()]);
    let text = std::fs::read_to_string(&lz).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,L"));
    assert_eq!(lines.count(), v["points"].as_array().unwrap().len());

    let asy = dir.path().join("sweep.csv");
    let v = json_of(&["asymptotics", &data("binary.json"), "--n", "20", "--csv", asy.to_str().unwrap()]);
    assert_eq!(v["exact_available"], Value::Bool(true));
    let text = std::fs::read_to_string(&asy).unwrap();
    assert_eq!(text.lines().next(), Some("n,exact,leading,correction,residual"));
    assert_eq!(text.lines().count() - 1, v["rows"].as_array().unwrap().len());
}

#[test]
fn fit_gibbs_recovers_equilibrium() {
    let dir = tempfile::tempdir().unwrap();
    let grand = dir.path().join("grand.json");
    std::fs::write(
        &grand,
        r#"{"beta": 0.7, "mu": -0.3, "levels": [{"E": 0.0, "n": 0}, {"E": 1.0, "n": 1}, {"E": 0.5, "n": 2}]}"#,
    )
    .unwrap();
    let v = json_of(&["fit-gibbs", grand.to_str().unwrap()]);
    assert!((v["fit"]["beta"].as_f64().unwrap() - 0.7).abs() < 1e-9);
    assert!((v["fit"]["mu"].as_f64().unwrap() + 0.3).abs() < 1e-9);
    let v = json_of(&["check-free", grand.to_str().unwrap()]);
    assert_eq!(v["is_equilibrium"], Value::Bool(true));

    // All particle numbers zero: beta fits, mu cannot be identified.
    let (code, _, err) = call(&["fit-gibbs", &data("fig1_equilibrium.json")]);
    assert_eq!(code, 1);
    assert!(err.contains("mu is not identified"));
    let v = json_of(&["check-free", &data("fig1_equilibrium.json")]);
    assert!(v["fit_note"].is_string());
}
