//! End-to-end checks of the command-line surface: flags, exit codes, file
//! schemas and determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_weyl-spectra"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn build_bounded_emits_expected_first_satellite_weight() {
    let out = run(&["measure", "build", "--mu1", "0", "--mu2", "1", "--K", "2", "--J", "1"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let f = doc["meta"]["f_bounded"][0][0].as_f64().unwrap();
    assert_eq!(f, 1.0 / 256.0);
    let sat = doc["meta"]["satellites"][0][0].as_f64().unwrap();
    assert_eq!(sat, 0.625);
}

#[test]
fn build_unbounded_places_atoms_on_harmonic_offsets() {
    let out = run(&["measure", "build", "--mu1", "0", "--mu2", "inf", "--K", "3", "--J", "10"]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let sats = doc["meta"]["satellites"].as_array().unwrap();
    for (k, row) in sats.iter().enumerate() {
        for (j, v) in row.as_array().unwrap().iter().enumerate() {
            let expect = (k as f64 + 1.0) + 1.0 / (j as f64 + 2.0);
            assert_eq!(v.as_f64().unwrap(), expect);
        }
    }
}

#[test]
fn invalid_interval_exits_2() {
    let out = run(&["measure", "build", "--mu1", "1", "--mu2", "0", "--K", "1", "--J", "1"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_exits_3_and_malformed_exits_3() {
    let out = run(&["measure", "verify", "--input", "/nonexistent/m.json"]);
    assert_eq!(out.status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ not json").unwrap();
    let out = run(&["measure", "verify", "--input", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn verify_passes_built_measure_and_fails_tampered_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    let out = run(&[
        "measure", "build", "--mu1", "0", "--mu2", "1", "--K", "2", "--J", "20", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = run(&["measure", "verify", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "verify: {}", stdout(&out));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["verify"]["pass"], serde_json::Value::Bool(true));

    // Tamper with one satellite weight: the window certificate must fail.
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let atoms = doc["atoms"].as_array_mut().unwrap();
    for atom in atoms.iter_mut() {
        let t = atom["t"].as_f64().unwrap();
        if (0.0..1.0).contains(&t) {
            atom["F"][0][0][0] = serde_json::json!(0.5);
            break;
        }
    }
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string(&doc).unwrap()).unwrap();
    let out = run(&["measure", "verify", "--input", tampered.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1), "tampered verify must fail");
}

#[test]
fn determinism_same_flags_byte_identical() {
    let a = run(&["measure", "build", "--mu1", "-2", "--mu2", "3", "--K", "3", "--J", "15"]);
    let b = run(&["measure", "build", "--mu1", "-2", "--mu2", "3", "--K", "3", "--J", "15"]);
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let v1 = run(&["sl", "specmeasure", "--window", "1", "2", "--grid", "16", "--t-match", "10"]);
    let v2 = run(&["sl", "specmeasure", "--window", "1", "2", "--grid", "16", "--t-match", "10"]);
    assert!(v1.status.success());
    assert_eq!(v1.stdout, v2.stdout);
    // Capping the worker pool must not change the merged output.
    let capped = bin()
        .env("WEYL_SPECTRA_THREADS", "1")
        .args(["sl", "specmeasure", "--window", "1", "2", "--grid", "16", "--t-match", "10"])
        .output()
        .unwrap();
    assert!(capped.status.success());
    assert_eq!(capped.stdout, v1.stdout);
}

#[test]
fn extension_eigs_csv_schema_and_infinity_tau() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    run(&[
        "measure", "build", "--mu1", "0", "--mu2", "1", "--K", "2", "--J", "5", "--out",
        path.to_str().unwrap(),
    ]);
    let out = run(&[
        "extension", "eigs", "--input", path.to_str().unwrap(), "--tau", "0.5", "--window",
        "0", "1",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "tau,lambda,left_bracket,right_bracket,residual"
    );
    let first = lines.next().expect("at least one eigenvalue");
    let cols: Vec<&str> = first.split(',').collect();
    assert_eq!(cols.len(), 5);
    assert_eq!(cols[0], "0.5");
    // tau = inf returns the atom abscissas themselves.
    let out = run(&[
        "extension", "eigs", "--input", path.to_str().unwrap(), "--tau", "inf", "--window",
        "0", "1",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.lines().skip(1).all(|l| l.starts_with("inf,")));
    assert_eq!(text.lines().count(), 1 + 10); // K * J atoms inside (0, 1)
}

#[test]
fn extension_condition18_and_gaps_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    run(&[
        "measure", "build", "--mu1", "0", "--mu2", "inf", "--K", "4", "--J", "10", "--out",
        path.to_str().unwrap(),
    ]);
    let out = run(&[
        "extension", "condition18", "--input", path.to_str().unwrap(), "--lambda", "0.5",
        "--points", "accumulation",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["result"]["kind"], "finite");
    let out = run(&[
        "extension", "gaps", "--input", path.to_str().unwrap(), "--window", "0.6", "4.4",
        "--resolution", "0.01",
    ]);
    assert!(out.status.success());
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["all_windows_have_gaps"], serde_json::Value::Bool(true));
}

#[test]
fn sl_subcommands_emit_the_csv_schema() {
    const HEADER: &str = "lambda_re,lambda_im,quantity,value_re,value_im,error";
    let out = run(&["sl", "ivp", "--lambda", "-1", "--init", "1", "-1", "--t-end", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().next().unwrap(), HEADER);
    // y(3) = e^{-3} for the decaying free solution.
    let last_y: Vec<&str> = text
        .lines()
        .filter(|l| l.contains(",y@3,"))
        .flat_map(|l| l.split(','))
        .collect();
    let val: f64 = last_y[3].parse().unwrap();
    assert!((val - (-3.0f64).exp()).abs() < 1e-7);

    let out = run(&["sl", "count-l2", "--lambda", "-1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let count_row = text.lines().find(|l| l.contains(",count,")).unwrap();
    assert_eq!(count_row.split(',').nth(3).unwrap(), "1");

    let out = run(&["sl", "deficiency", "--potential", "expr:t^2"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains(",n_plus,1,"));
    assert!(text.contains(",n_minus,1,"));

    let out = run(&["sl", "m", "--z", "0", "1", "--t-ladder", "10", "20", "40"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let m_row = text.lines().find(|l| l.contains(",m,")).unwrap();
    let cols: Vec<&str> = m_row.split(',').collect();
    let re: f64 = cols[3].parse().unwrap();
    let im: f64 = cols[4].parse().unwrap();
    assert!((re + 0.7071067811865475).abs() < 1e-6);
    assert!((im - 0.7071067811865475).abs() < 1e-6);

    let dir = tempfile::tempdir().unwrap();
    let fpath = dir.path().join("f.json");
    std::fs::write(&fpath, "[[0.0, 0.0], [0.5, 1.0], [1.0, 0.0]]").unwrap();
    let out = run(&[
        "sl", "transform", "--function", fpath.to_str().unwrap(), "--lambda-grid", "1", "4",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.contains(",Vf,")).count(), 2);
}

#[test]
fn measure_files_round_trip_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    run(&[
        "measure", "build", "--mu1", "0", "--mu2", "1", "--K", "3", "--J", "7", "--defect",
        "2", "--out", path.to_str().unwrap(),
    ]);
    let text = std::fs::read_to_string(&path).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["dim"], 2);
    // Re-verify from disk: the loaded measure reproduces its certificates.
    let out = run(&["measure", "verify", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(Path::new(path.to_str().unwrap()).exists());
}
