use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tangentflow"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn scratch(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("tangentflow-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn solve_euler_reaches_e() {
    let out = run(&["solve", "--dim", "1", "--vf", "x1", "--t", "1", "--x0", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["x"][0].as_f64().unwrap() - 2.718281828).abs() < 1e-8);
    assert_eq!(v["t"], 1.0);
}

#[test]
fn blow_up_exits_with_numeric_code() {
    let out = run(&[
        "solve", "--dim", "1", "--vf", "x1^2", "--t", "1", "--x0", "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(
        stderr(&out).contains("step size collapse near t=1.000"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn verify_curve_reports_sigma_laws() {
    let out = run(&["verify", "--suite", "curve"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["version"], "1");
    let laws = v["laws"].as_array().unwrap();
    let sigma = laws
        .iter()
        .find(|l| l["law_id"] == "sigma-commutative")
        .unwrap();
    assert_eq!(sigma["paper_anchor"], "σ is a commutative operation");
    assert!(laws.iter().all(|l| l["passed"] == true));
}

#[test]
fn zero_field_trajectory_stays_put() {
    let out = run(&[
        "solve", "--dim", "2", "--vf", "0; 0", "--t", "1", "--x0", "1.5,-2", "--grid", "3",
        "--format", "csv",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines, ["t,x1,x2", "0,1.5,-2", "0.5,1.5,-2", "1,1.5,-2"]);
}

#[test]
fn time_dependent_and_second_order_solves() {
    let out = run(&[
        "solve",
        "--dim",
        "1",
        "--vf",
        "x1 + cos(t)",
        "--time-dependent",
        "--t",
        "1",
        "--x0",
        "0",
    ]);
    let want = (1f64.exp() + 1f64.sin() - 1f64.cos()) / 2.0;
    assert!((json(&out)["x"][0].as_f64().unwrap() - want).abs() < 1e-6);

    let out = run(&[
        "solve", "--dim", "1", "--order", "2", "--vf", "-x2 - x1", "--t", "1", "--x0", "0,1",
    ]);
    let w = 3f64.sqrt() / 2.0;
    let want = (-0.5f64).exp() * w.sin() / w;
    assert!((json(&out)["x"][0].as_f64().unwrap() - want).abs() < 1e-6);

    // A full second-order map that violates T(p)V = 1.
    let out = run(&[
        "solve",
        "--dim",
        "1",
        "--order",
        "2",
        "--vf",
        "x1; x2; x1; x1",
        "--t",
        "1",
        "--x0",
        "0,1",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("section conditions"));
}

#[test]
fn flow_from_matrix_and_field_agree() {
    let by_matrix = run(&["flow", "--matrix", "0,1;-1,0", "--t", "-0.7", "--x0", "1,2"]);
    let by_field = run(&[
        "flow", "--dim", "2", "--vf", "x2; -x1", "--t", "-0.7", "--x0", "1,2",
    ]);
    let (a, b) = (json(&by_matrix), json(&by_field));
    for i in 0..2 {
        let (p, q) = (a["x"][i].as_f64().unwrap(), b["x"][i].as_f64().unwrap());
        assert!((p - q).abs() < 1e-8);
    }
}

#[test]
fn bracket_of_shears() {
    let out = run(&[
        "bracket",
        "--dim",
        "2",
        "--vf",
        "x2; 0",
        "--vf2",
        "0; x1",
        "--x0",
        "1,1",
        "--as-matrix",
    ]);
    let v = json(&out);
    assert_eq!(v["bracket"], serde_json::json!([-1.0, 1.0]));
    assert_eq!(v["matrix"], serde_json::json!([[-1.0, 0.0], [0.0, 1.0]]));

    let out = run(&[
        "bracket",
        "--dim",
        "1",
        "--vf",
        "x1^2",
        "--vf2",
        "x1",
        "--as-matrix",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["matrix"].is_null());
}

#[test]
fn commute_exit_code_follows_the_theorem() {
    let ok = run(&[
        "commute", "--dim", "2", "--vf", "x2; -x1", "--vf2", "x1; x2",
    ]);
    assert_eq!(ok.status.code(), Some(0));
    let v = json(&ok);
    assert_eq!(v["laws"][0]["law_id"], "flow-commuting-theorem");
    assert_eq!(v["config"]["predicates"]["equivalence_holds"], true);

    let bad = run(&["commute", "--dim", "2", "--vf", "x2; 0", "--vf2", "0; x1"]);
    assert_eq!(bad.status.code(), Some(1));
    assert_eq!(
        json(&bad)["config"]["predicates"]["equivalence_holds"],
        true
    );
}

#[test]
fn expm_outputs() {
    let out = run(&["expm", "--matrix", "0,1;0,0", "--format", "csv"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap(), "1,1\n0,1\n");
    let out = run(&["expm", "--matrix", "1000,0;0,1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn geodesic_and_exp() {
    let out = run(&[
        "geodesic",
        "--dim",
        "2",
        "--christoffel",
        "-2*u1*u2/x2; (u1^2 - u2^2)/x2",
        "--x0",
        "0,1,1,0",
        "--t",
        "1.5",
    ]);
    let x = &json(&out)["x"];
    let (a, b) = (x[0].as_f64().unwrap(), x[1].as_f64().unwrap());
    assert!((a * a + b * b - 1.0).abs() < 1e-5);

    let e = json(&run(&["exp", "--t", "1"]));
    assert!((e["e"].as_f64().unwrap() - std::f64::consts::E).abs() < 1e-8);
    let b = json(&run(&["exp", "--t", "1", "--base-dim", "1", "--x0", "2,3"]));
    assert_eq!(b["x"][0], 2.0);
    assert!((b["x"][1].as_f64().unwrap() - 3.0 * std::f64::consts::E).abs() < 1e-8);
}

#[test]
fn usage_errors_name_the_flag() {
    let cases: [(&[&str], &str); 6] = [
        (&["solve", "--dim", "1", "--t", "1", "--x0", "1"], "--vf"),
        (
            &[
                "solve", "--dim", "1", "--vf", "x1", "--t", "1", "--x0", "1,2",
            ],
            "--x0",
        ),
        (
            &[
                "solve", "--dim", "1", "--vf", "x1 +", "--t", "1", "--x0", "1",
            ],
            "--vf",
        ),
        (
            &["solve", "--dim", "1", "--vf", "x1", "--t", "1", "--x0", "a"],
            "--x0",
        ),
        (&["verify", "--suite", "bogus"], "--suite"),
        (&["expm", "--matrix", "1,2;3", "--t", "1"], "--matrix"),
    ];
    for (args, flag) in cases {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(stderr(&out).contains(flag), "{args:?}: {}", stderr(&out));
    }
    let out = run(&["verify", "--suite", "curve", "--dim", "2"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--dim is not accepted by verify"));
}

#[test]
fn config_file_supplies_flags_and_out_writes_files() {
    let cfg = scratch("solve.toml");
    std::fs::write(&cfg, "dim = 1\nvf = \"x1\"\nt = 1.0\nx0 = \"1\"\n").unwrap();
    let target = scratch("solve.json");
    let out = run(&[
        "solve",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&target).unwrap()).unwrap();
    assert!((v["x"][0].as_f64().unwrap() - std::f64::consts::E).abs() < 1e-8);

    // Command-line flags take precedence.
    let out = run(&["solve", "--config", cfg.to_str().unwrap(), "--t", "0"]);
    assert_eq!(json(&out)["x"][0], 1.0);

    let bad = scratch("bad.toml");
    std::fs::write(&bad, "dims = 1\n").unwrap();
    let out = run(&["solve", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("--config"));
}

#[test]
fn reports_are_byte_identical_for_a_seed() {
    let args = ["verify", "--suite", "flows", "--seed", "11"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.stdout, b.stdout);
    let other = run(&["verify", "--suite", "flows", "--seed", "12"]);
    assert_ne!(a.stdout, other.stdout);
    assert_eq!(json(&a)["seed"], 11);
}
