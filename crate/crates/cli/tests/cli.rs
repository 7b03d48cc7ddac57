use std::path::Path;
use std::process::{Command, Output};

fn sdlab(args: &[&str], config: Option<&str>, dir: &Path) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sdlab"));
    cmd.args(args).env_remove("SDL_THREADS");
    if let Some(text) = config {
        let path = dir.join("config.json");
        std::fs::write(&path, text).unwrap();
        cmd.arg("--config").arg(path);
    }
    cmd.output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

fn all_checks_pass(dir: &Path) {
    let checks = read(&dir.join("checks.csv"));
    assert!(checks.lines().count() > 1);
    assert!(!checks.contains(",false"), "{checks}");
}

#[test]
fn minimal_constants_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = sdlab(
        &["run", "--out", out.to_str().unwrap()],
        Some(r#"{"experiment":"constants","d":3}"#),
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = read(&out.join("constants.csv"));
    assert!(table.starts_with("d,m_d,kappa_d,feller_threshold,delta,p_lo,p_hi\n3,1.9749885583325"));
    all_checks_pass(&out);
    let manifest: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    assert_eq!(manifest["config"]["schema"], 1);
    assert!(manifest["wall_seconds"].is_number());
}

#[test]
fn resolvent_example_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = sdlab(
        &["run", "--out", out.to_str().unwrap()],
        Some(r#"{"experiment":"resolvent","field":{"kind":"hardy","c":0.2},"p":2.5,"grid":{"n":32,"L":16}}"#),
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    all_checks_pass(&out);
    let header = read(&out.join("theta_f.json"));
    assert!(header.contains("\"n_per_axis\": 32"));
    assert_eq!(read(&out.join("theta_f.csv")).lines().count(), 32 * 32 * 32 + 1);
}

#[test]
fn malformed_key_exits_2_naming_it() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = sdlab(
        &["run", "--out", out.to_str().unwrap()],
        Some(r#"{"experiment":"constants","grdi":{"n":8,"L":2}}"#),
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`grdi`"), "{}", stderr(&o));

    let o = sdlab(
        &["resolvent", "--out", out.to_str().unwrap()],
        Some(r#"{"grid":{"n":"eight","L":2}}"#),
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("grid.n"), "{}", stderr(&o));
}

#[test]
fn config_and_environment_mistakes_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = sdlab(&["run", "--out", out.to_str().unwrap()], Some("{}"), tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("experiment"));

    let o = sdlab(
        &["resolvent", "--out", out.to_str().unwrap()],
        Some(r#"{"experiment":"constants"}"#),
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));

    let o = Command::new(env!("CARGO_BIN_EXE_sdlab"))
        .args(["constants", "--out", out.to_str().unwrap()])
        .env("SDL_THREADS", "many")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("SDL_THREADS"));

    let o = sdlab(
        &["verify-kernels", "--which", "A1,A7", "--out", out.to_str().unwrap()],
        None,
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--which"));
}

#[test]
fn forced_delta_exits_with_guard_code() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    // m_3 c_2.5 ≈ 2.06, so δ = 0.6 puts m_d c_p δ above one.
    let forced = r#"{"delta":0.6,"lambda":1.0}"#;
    for sub in ["acceptance", "resolvent"] {
        let o = sdlab(&[sub, "--out", out.to_str().unwrap()], Some(forced), tmp.path());
        assert_eq!(o.status.code(), Some(3), "{sub}: {}", stderr(&o));
        assert!(stderr(&o).contains("guard"), "{}", stderr(&o));
    }
    let o = sdlab(
        &["resolvent", "--out", out.to_str().unwrap()],
        Some(r#"{"delta":0.1}"#),
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lambda"));
}

#[test]
fn reruns_give_identical_csv_bodies() {
    let tmp = tempfile::tempdir().unwrap();
    let config = r#"{
        "experiment": "simulate",
        "grid": {"n": 16, "L": 4},
        "simulation": {"t": 0.05, "dt": 0.005, "paths": 2000, "seed": 9, "safety_half_width": 3.0},
        "separations": [0.1, 0.2, 0.4]
    }"#;
    let dirs: Vec<_> = (0..2).map(|i| tmp.path().join(format!("run{i}"))).collect();
    for d in &dirs {
        let o = sdlab(&["run", "--out", d.to_str().unwrap()], Some(config), tmp.path());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let mut compared = 0;
    for entry in std::fs::read_dir(&dirs[0]).unwrap() {
        let name = entry.unwrap().file_name();
        if Path::new(&name).extension().is_some_and(|e| e == "csv") {
            assert_eq!(read(&dirs[0].join(&name)), read(&dirs[1].join(&name)), "{name:?}");
            compared += 1;
        }
    }
    assert!(compared >= 3);
    let manifest = read(&dirs[0].join("manifest.json"));
    assert!(manifest.contains("wall_seconds"));
}

#[test]
fn report_on_empty_dir_fails() {
    let tmp = tempfile::tempdir().unwrap();
    let o = sdlab(&["report", "--out", tmp.path().to_str().unwrap()], None, tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing artifacts"));
}

#[test]
fn report_after_partial_acceptance_flags_gaps() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = sdlab(
        &["acceptance", "--out", out.to_str().unwrap()],
        Some(r#"{"criteria":[1]}"#),
        tmp.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS [ 1] constants"), "{stdout}");
    let o = sdlab(&["report", "--out", out.to_str().unwrap()], None, tmp.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let digest = read(&out.join("digest.md"));
    let sections = digest.lines().filter(|l| l.starts_with("## ")).count();
    assert!(sections >= 12, "{digest}");
    assert!(digest.contains("Status: **PASS**"));
    assert!(digest.contains("**Gap:** `criterion_12.csv` missing"));
}

#[test]
fn sign_flip_mutation_fails_acceptance() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let o = sdlab(
        &["acceptance", "--out", out.to_str().unwrap()],
        Some(r#"{"criteria":[11],"flip_sde_sign":true}"#),
        tmp.path(),
    );
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("FAIL [11] feller-monte-carlo"), "{stdout}");
    assert!(read(&out.join("criterion_11.csv")).contains(",false"));
}
