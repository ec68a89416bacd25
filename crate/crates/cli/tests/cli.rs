use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn colehopf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colehopf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn derive_exponential_convection() {
    let out = colehopf(&[
        "derive",
        "burgers",
        "--m",
        "1",
        "--h",
        "C*exp(alpha*x)",
        "--param",
        "C=1",
        "--param",
        "alpha=1",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for line in [
        "Q = 2*exp(-x)",
        "P = 2*exp(-x)",
        "W = exp(x)",
        "V = -1",
        "constraint: pass",
    ] {
        assert!(text.contains(line), "missing `{line}` in\n{text}");
    }
}

#[test]
fn derive_convective_ode() {
    let out = colehopf(&[
        "derive", "ode", "--f", "1", "--w", "a", "--v", "4*a^2", "--s", "0", "--param", "a=1",
    ]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert!(text.contains("Q = -2"), "{text}");
    assert!(text.contains("P = -2"), "{text}");
    assert!(text.contains("constraint: pass"), "{text}");
}

#[test]
fn incompatible_coefficients_exit_one() {
    let out = colehopf(&["derive", "burgers", "--m", "1", "--h", "x^2+1"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("constraint: fail"));
    let out = colehopf(&["derive", "ode", "--f", "1", "--w", "a", "--v", "0", "--param", "a=1"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn derive_json_is_machine_readable() {
    let out = colehopf(&["derive", "burgers", "--m", "1", "--h", "exp(x)", "--json"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["verdict"], "pass");
    assert_eq!(doc["derived"]["Q"], "2*exp(-x)");
    assert_eq!(doc["constraint"]["equation"], "burgers-constraint");
}

#[test]
fn synthesized_equation_roundtrips() {
    let out = colehopf(&[
        "synth",
        "ode",
        "--u",
        "exp(-2*x)+1",
        "--p",
        "-2",
        "--q",
        "-2",
        "--domain",
        "0:3:61",
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("F = 1") && text.contains("S = 0"), "{text}");
}

#[test]
fn malformed_input_maps_to_exit_three() {
    let cases: &[&[&str]] = &[
        &["derive", "burgers", "--m", "1", "--h", "x^^2"],
        &["derive", "burgers", "--m", "1", "--h", "k*x"],
        &["derive", "burgers", "--m", "1"],
        &["derive", "burgers", "--m", "1", "--h", "1", "--param", "a"],
        &["derive", "burgers", "--m", "1", "--h", "1", "--domain", "1:0:5"],
        &["derive", "heat"],
        &["solve", "burgers", "--h", "1"],
        &["solve", "ode", "--f", "1", "--w", "1", "--v", "4"],
        &[
            "solve",
            "burgers",
            "--m",
            "1",
            "--h",
            "1",
            "--nt",
            "10",
            "--save-every",
            "3",
        ],
        &[
            "solve",
            "burgers",
            "--m",
            "1",
            "--h",
            "1",
            "--set",
            "problem.colour=red",
        ],
        &["verify", "no-such-case"],
        &["families", "h", "--name", "nope"],
        &["families", "q"],
        &[],
    ];
    for args in cases {
        let out = colehopf(args);
        assert_eq!(code(&out), 3, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn runtime_failures_map_to_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.ini");
    let out = colehopf(&["solve", "burgers", "--config", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    // compatible but not parabolic
    let out = colehopf(&[
        "solve", "burgers", "--m", "-1", "--h", "1", "--grid", "0:1:21", "--nt", "10",
    ]);
    assert_eq!(code(&out), 2, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn nothing_panics() {
    let cases: &[&[&str]] = &[
        &["derive", "burgers", "--m", "0", "--h", "1"],
        &["derive", "burgers", "--m", "1", "--h", "0"],
        &["derive", "burgers", "--m", "1", "--h", "x", "--domain", "-1:1:11"],
        &["derive", "ode", "--f", "0", "--w", "1", "--v", "1"],
        &[
            "derive", "ode", "--f", "x", "--w", "1", "--v", "1", "--domain", "-1:1:11",
        ],
        &["derive", "burgers", "--m", "ln(x)", "--h", "1", "--domain", "-1:1:11"],
        &[
            "solve", "ode", "--f", "1", "--w", "1", "--v", "4", "--u0", "1e308", "--grid", "0:3:31",
        ],
        &[
            "solve", "burgers", "--m", "1e6", "--h", "1", "--grid", "0:1:5", "--nt", "1",
        ],
        &["synth", "ode", "--u", "1", "--p", "0", "--q", "0"],
        &["verify", ""],
    ];
    for args in cases {
        let out = colehopf(args);
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(!err.contains("panicked"), "{args:?}: {err}");
        assert!((0..=3).contains(&code(&out)), "{args:?}");
    }
}

#[test]
fn solve_burgers_writes_fields_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("exponential-convection.ini");
    let out = colehopf(&[
        "solve",
        "burgers",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let field = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(field.starts_with("x,t,phi,dphi,psi,mask\n"));
    assert!(!field.contains('\r'));
    assert_eq!(field.lines().count(), 1 + 257 * 101);
    let second = field.lines().nth(1).unwrap();
    assert_eq!(second.split(',').count(), 6);
    assert!(
        second.starts_with("0.0000000000000000e0,0.0000000000000000e0,"),
        "{second}"
    );
    let residual = std::fs::read_to_string(dir.path().join("residual.csv")).unwrap();
    assert!(residual.starts_with("x,t,residual\n"));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["verdict"], "pass");
    assert_eq!(report["residual"]["equation"], "burgers");
    assert!(report["residual"]["linf"].as_f64().unwrap() <= 1e-3);
    assert_eq!(report["config"]["problem.h"], "C*exp(alpha*x)");
    assert_eq!(report["derived"]["V"], "-1");
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("exponential-convection.ini");
    let out = colehopf(&[
        "solve",
        "burgers",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--grid",
        "0:1:65",
        "--nt",
        "500",
        "--save-every",
        "5",
        "--set",
        "output.field=none",
    ]);
    // the coarse grid misses the tolerance; only the overrides matter here
    assert_eq!(code(&out), 1, "{}", stdout(&out));
    assert!(!dir.path().join("field.csv").exists());
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["config"]["grid.n"], "65");
    assert_eq!(report["config"]["time.nt"], "500");
    assert_eq!(report["residual"]["grid"]["levels"], 101);
}

#[test]
fn solve_ode_writes_fields() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("bessel.ini");
    let out = colehopf(&[
        "solve",
        "ode",
        "--config",
        cfg.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let field = std::fs::read_to_string(dir.path().join("field.csv")).unwrap();
    assert!(field.starts_with("x,phi,dphi,psi,mask\n"));
    assert_eq!(field.lines().count(), 1 + 12001);
    assert!(std::fs::read_to_string(dir.path().join("residual.csv"))
        .unwrap()
        .starts_with("x,residual\n"));
    assert_eq!(json(&dir.path().join("report.json"))["verdict"], "pass");
}

#[test]
fn output_is_byte_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for dir in [&a, &b] {
        let out = colehopf(&[
            "solve",
            "ode",
            "--f",
            "1",
            "--w",
            "1",
            "--v",
            "4",
            "--u0",
            "2",
            "--grid",
            "0:3:301",
            "--out-dir",
            dir.path().to_str().unwrap(),
            "--set",
            "output.report=none",
        ]);
        assert!(code(&out) <= 1);
    }
    for f in ["field.csv", "residual.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn degenerate_field_is_flagged() {
    let dir = tempfile::tempdir().unwrap();
    let out = colehopf(&[
        "solve",
        "burgers",
        "--m",
        "1",
        "--h",
        "1",
        "--phi0",
        "0",
        "--grid",
        "0:1:33",
        "--nt",
        "20",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("degenerate field"));
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["degenerate"], true);
    assert_eq!(report["verdict"], "fail");
    assert!(report["notes"]
        .as_array()
        .unwrap()
        .iter()
        .any(|n| n.as_str().unwrap().contains("degenerate field")));

    let out = colehopf(&[
        "solve",
        "ode",
        "--f",
        "1",
        "--w",
        "1",
        "--v",
        "4",
        "--u0",
        "2",
        "--phi0",
        "0",
        "--dphi0",
        "0",
        "--grid",
        "0:3:61",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("degenerate field"));
}

#[test]
fn solve_stops_on_incompatible_coefficients() {
    let dir = tempfile::tempdir().unwrap();
    let out = colehopf(&[
        "solve",
        "burgers",
        "--m",
        "1",
        "--h",
        "x^2+1",
        "--grid",
        "0:1:33",
        "--nt",
        "20",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1);
    let report = json(&dir.path().join("report.json"));
    assert_eq!(report["residual"]["failed_stage"], "constraint");
    assert_eq!(report["constraint"]["verdict"], "fail");
    assert!(!dir.path().join("field.csv").exists());
}

#[test]
fn verify_bundled_cases() {
    for case in ["classical-burgers", "paper-sec2-example", "paper-sec3-bessel"] {
        let out = colehopf(&["verify", case]);
        assert_eq!(code(&out), 0, "{case}: {}", stdout(&out));
        assert!(stdout(&out).contains("overall: pass"));
    }
}

#[test]
fn verify_all_writes_aggregate_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("all.json");
    let out = colehopf(&["verify", "all", "--report", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let doc = json(&path);
    assert_eq!(doc["verdict"], "pass");
    assert_eq!(doc["cases"].as_array().unwrap().len(), 4);
}

#[test]
fn verify_config_file() {
    let cfg = config("classical.ini");
    let out = colehopf(&["verify", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("incompatible.ini");
    std::fs::write(
        &bad,
        "[problem]\nkind = burgers\nm = 1\nh = x^2 + 1\n[grid]\nspec = 0:1:33\n[time]\nnt = 20\n",
    )
    .unwrap();
    let out = colehopf(&["verify", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    std::fs::write(&bad, "[problem]\nkind = heat\n").unwrap();
    assert_eq!(code(&colehopf(&["verify", bad.to_str().unwrap()])), 3);
}

#[test]
fn families_check() {
    let out = colehopf(&["families", "h"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    for name in ["reciprocal-linear", "secant", "exponential"] {
        assert!(text.contains(name), "{text}");
    }
    let out = colehopf(&["families", "m", "--name", "implicit", "--param", "c=2", "--json"]);
    assert_eq!(code(&out), 0);
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc[0]["holds"], true);
    let out = colehopf(&[
        "families",
        "h",
        "--name",
        "exponential",
        "--param",
        "C=2",
        "--param",
        "alpha=-1",
    ]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("2*exp(-x)"), "{}", stdout(&out));
}
