//! End-to-end runs of the command-line binary.

mod common;

use std::path::Path;
use std::process::{Command, Output};

use minoverlap::certify::Certificate;
use minoverlap::cli::{EXIT_FAIL, EXIT_INPUT, EXIT_OK};
use minoverlap::fourier::SineCoefficient;

fn run(args: &[&str]) -> Output {
    Command::new(common::bin()).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn lp_output_verifies_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
    for file in [&a, &b] {
        let out = run(&["lp", "--n", "200", "--r", "4", "--out", path(file)]);
        assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));
        assert!(stderr(&out).starts_with("PASS"));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let out = run(&["verify", path(&a)]);
    assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("\"pass\": true"));

    let mut cert = Certificate::from_json(&std::fs::read_to_string(&a).unwrap()).unwrap();
    cert.objective += 1e-6;
    std::fs::write(&b, cert.to_json().unwrap()).unwrap();
    assert_eq!(code(&run(&["verify", path(&b)])), EXIT_FAIL);
}

#[test]
fn paper_compat_is_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("c.json");
    let out = run(&[
        "bound",
        "--paper-compat",
        "--n",
        "60",
        "--t",
        "24",
        "--r",
        "4",
        "--h",
        "0,0.1",
        "--p",
        "0.3,0.4",
        "--q",
        "-0.05,0.05",
        "--out",
        path(&file),
    ]);
    assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));
    let cert = Certificate::from_json(&std::fs::read_to_string(&file).unwrap()).unwrap();
    assert!(cert.flags.paper_compat);
    assert_eq!(cert.program_input().unwrap().sine, SineCoefficient::PaperCompat);
    assert_eq!(code(&run(&["verify", path(&file)])), EXIT_OK);
}

#[test]
fn large_programs_need_the_long_flag() {
    let out = run(&["lp", "--n", "80000", "--r", "20"]);
    assert_eq!(code(&out), EXIT_INPUT);
    assert!(stderr(&out).contains("--long"));
    let plan = common::fixture_dir().join("plans").join("large.json");
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["sweep", path(&plan), "--out", path(dir.path())]);
    assert_eq!(code(&out), EXIT_INPUT);
    assert!(stderr(&out).contains("--long"));
}

#[test]
fn malformed_inputs_exit_with_the_input_code() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("empty.json");
    std::fs::write(&plan, r#"{"name": "empty", "jobs": []}"#).unwrap();
    assert_eq!(
        code(&run(&["sweep", path(&plan), "--out", path(dir.path())])),
        EXIT_INPUT
    );
    assert_eq!(code(&run(&["bound", "--n", "60", "--t", "4", "--r", "4"])), EXIT_INPUT);
    assert_eq!(code(&run(&["bound", "--h", "0.5"])), EXIT_INPUT);
    assert_eq!(
        code(&run(&["verify", path(&dir.path().join("missing.json"))])),
        EXIT_INPUT
    );
}

#[test]
fn sweep_with_a_failing_job_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    let job = |label: &str, h: [f64; 2], r: usize| {
        serde_json::json!({
            "label": label,
            "program": { "Full": { "n": 60, "t": 24, "r": r, "h1": h[0], "h2": h[1],
                                   "p1": 0.0, "p2": 1.0, "q1": -1.0, "q2": 1.0 } }
        })
    };
    let text = serde_json::json!({ "name": "mixed", "jobs": [job("ok", [0.0, 1.0], 4), job("bad", [1.0, 2.0], 24)] });
    std::fs::write(&plan, text.to_string()).unwrap();
    let out_dir = dir.path().join("out");
    let out = run(&["sweep", path(&plan), "--out", path(&out_dir)]);
    assert_eq!(code(&out), EXIT_FAIL, "{}", stderr(&out));
    assert!(stderr(&out).contains("PARTIAL"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["failed"], 1);
    assert!(report["claimed_bound"].is_null());
}

#[test]
fn ellipses_report_uncovered_boxes() {
    let dir = tempfile::tempdir().unwrap();
    let certs = dir.path().join("certs");
    std::fs::create_dir(&certs).unwrap();
    let out = run(&[
        "bound",
        "--n",
        "200",
        "--t",
        "60",
        "--r",
        "6",
        "--h",
        "0.015,0.015",
        "--p",
        "0.385,0.385",
        "--q",
        "-0.02,0.02",
        "--out",
        path(&certs.join("anchor.json")),
    ]);
    assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));

    let near = dir.path().join("near");
    let out = run(&[
        "ellipses",
        path(&certs),
        "--h",
        "0.0149,0.0151",
        "--p",
        "0.38499,0.38501",
        "--out",
        path(&near),
    ]);
    assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("COVERED"));
    for file in ["regions.csv", "regions.svg", "coverage.json"] {
        assert!(near.join(file).exists(), "{file}");
    }

    let wide = dir.path().join("wide");
    let out = run(&[
        "ellipses",
        path(&certs),
        "--h",
        "0,2",
        "--p",
        "0,1",
        "--out",
        path(&wide),
    ]);
    assert_eq!(code(&out), EXIT_FAIL, "{}", stderr(&out));
    assert!(stderr(&out).starts_with("UNCOVERED"));
    let coverage: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(wide.join("coverage.json")).unwrap()).unwrap();
    assert!(!coverage["witness"].is_null(), "{coverage}");

    let high = dir.path().join("high");
    let out = run(&[
        "ellipses",
        path(&certs),
        "--threshold",
        "0.5",
        "--h",
        "0.014,0.016",
        "--p",
        "0.384,0.386",
        "--out",
        path(&high),
    ]);
    assert_eq!(code(&out), EXIT_FAIL);
}

#[test]
fn oracle_checks_fixture_functions() {
    let f = |name: &str| common::fixture_dir().join("functions").join(format!("{name}.json"));
    let out = run(&["oracle", path(&f("constant")), "--n", "40", "--t", "16", "--r", "4"]);
    assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["feasible"], true);
    assert_eq!(report["sup_norm"], 0.5);

    let out = run(&[
        "oracle",
        path(&f("shifted_step")),
        "--n",
        "40",
        "--t",
        "16",
        "--r",
        "4",
        "--solve",
    ]);
    assert_eq!(code(&out), EXIT_OK, "{}", stderr(&out));

    let out = run(&[
        "oracle",
        path(&f("indicator_0_1")),
        "--n",
        "40",
        "--t",
        "16",
        "--r",
        "4",
    ]);
    assert_eq!(code(&out), EXIT_INPUT, "{}", stderr(&out));
}
