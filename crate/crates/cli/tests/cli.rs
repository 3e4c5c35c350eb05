//! End-to-end behavior of the `orbit-localize` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SU2: &str = r#"
[algebra]
family = "su"
n = 2

[orbit]
lambda = [1.3]

[grid]
ranges = [[-1.0, 1.0]]
steps = [5]

[oracle]
seed = 3
samples = 20000
points = 10
"#;

const SL2_ELLIPTIC: &str = r#"
[algebra]
family = "sl_real"
n = 2

[orbit]
lambda = [4.0]
mode = "maximally_split"

[grid]
ranges = [[0.1, 2.0]]
steps = [8]
directions = [[0.0, 1.0, -1.0]]
"#;

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbit-localize")).args(args).output().unwrap()
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_orbit-localize"))
        .args(args)
        .env(key, value)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn eval_csv_schema_and_degenerate_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "su2.toml", SU2);
    let o = run(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x1,re_f,im_f,degenerate,mode,s0,version");
    assert_eq!(lines.len(), 6);
    // t = 0 sits on the wall
    assert!(lines[3].starts_with("0,NaN,NaN,true,compact,1,"), "{}", lines[3]);
    let row: Vec<&str> = lines[1].split(',').collect();
    let expected = (1.3f64).sin(); // sin(c t) / t at t = -1
    assert!((row[1].parse::<f64>().unwrap() - expected).abs() < 1e-12);
}

#[test]
fn eval_json_carries_resolved_config_and_terms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "su2.toml", SU2);
    let out = dir.path().join("r.json");
    let o = run(&[
        "eval",
        "--config",
        cfg.to_str().unwrap(),
        "--format",
        "json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(v["command"], "eval");
    assert_eq!(v["config"]["orbit"]["mode"], "compact");
    assert_eq!(v["config"]["orbit"]["s0"], 1);
    assert_eq!(v["config"]["output"]["format"], "json");
    assert_eq!(v["rows"].as_array().unwrap().len(), 5);
    assert_eq!(v["rows"][0]["terms"].as_array().unwrap().len(), 2);
    assert_eq!(v["rows"][2]["degenerate"], true);
}

#[test]
fn elliptic_sector_is_identically_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "ell.toml", SL2_ELLIPTIC);
    let o = run(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    for line in stdout(&o).lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!((f[1], f[2], f[3]), ("0", "0", "false"), "{line}");
    }
}

#[test]
fn degenerate_only_grid_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = SU2.replace("ranges = [[-1.0, 1.0]]\nsteps = [5]", "ranges = [[0.0, 0.0]]\nsteps = [1]");
    let cfg = write(dir.path(), "deg.toml", &text);
    let o = run(&["eval", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn configuration_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_lambda = write(dir.path(), "a.toml", &SU2.replace("[1.3]", "[0.0]"));
    let unknown_key = write(dir.path(), "b.toml", &format!("{SU2}\n[extra]\nx = 1\n"));
    let good = write(dir.path(), "c.toml", SU2);
    for args in [
        vec!["eval", "--config", bad_lambda.to_str().unwrap()],
        vec!["eval", "--config", unknown_key.to_str().unwrap()],
        vec!["eval", "--config", "/nonexistent/config.toml"],
        vec!["verify", "--config", good.to_str().unwrap(), "--suite", "nope"],
        vec!["eval", "--config", good.to_str().unwrap(), "--format", "xml"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
    }
    let o = run_env(&["eval", "--config", good.to_str().unwrap()], "ORBIT_LOCALIZE_THREADS", "zero");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn calibrate_requires_oracle_block() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "e.toml", SL2_ELLIPTIC);
    let o = run(&["calibrate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("[oracle]"), "{}", stderr(&o));
}

#[test]
fn calibrate_writes_sibling_and_never_overwrites_input() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "su2.toml", SU2);
    let o = run(&["calibrate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(&cfg).unwrap(), SU2);
    let sibling = dir.path().join("su2.calibrated.toml");
    let text = std::fs::read_to_string(&sibling).unwrap();
    assert!(text.starts_with("# calibrated by orbit-localize"));
    assert!(text.contains("seed = 3, samples = 20000"));
    assert!(text.contains("calibration = "));
    // the calibrated file is itself a valid config
    let o = run(&["eval", "--config", sibling.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));

    let o = run(&["calibrate", "--config", cfg.to_str().unwrap(), "--out", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(std::fs::read_to_string(&cfg).unwrap(), SU2);
}

#[test]
fn split_sign_calibration_is_stable() {
    let dir = tempfile::tempdir().unwrap();
    let text = SL2_ELLIPTIC.replace("mode = \"maximally_split\"", "mode = \"maximally_split\"\ns0 = 1")
        + "\n[oracle]\nseed = 1\n";
    let cfg = write(dir.path(), "sl2.toml", &text);
    for seed in ["1", "2", "3"] {
        let out = dir.path().join(format!("cal{seed}.toml"));
        let o = run(&[
            "calibrate",
            "--config",
            cfg.to_str().unwrap(),
            "--seed",
            seed,
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let t = std::fs::read_to_string(&out).unwrap();
        assert!(t.contains("s0 = -1"), "{t}");
    }
}

#[test]
fn verify_reports_and_fails_with_exit_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "su2.toml", SU2);
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--suite", "algebra"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).starts_with("suite,name,measured,threshold,pass,detail,version"));
    assert!(stderr(&o).contains("[PASS] algebra/jacobi"));

    // a step far too coarse for the oscillation scale breaks the eigendistribution check
    let coarse = SU2.replace("[1.3]", "[40.0]") + "\n[verify]\ncasimir_step = 0.05\npoints = 10\n";
    let cfg = write(dir.path(), "coarse.toml", &coarse);
    let o = run(&["verify", "--config", cfg.to_str().unwrap(), "--suite", "localize"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("[FAIL] localize/eigendistribution"));
}

#[test]
fn cycle_limit_outputs_linear_defects() {
    let dir = tempfile::tempdir().unwrap();
    let text = SL2_ELLIPTIC.to_string() + "\n[geometry]\nsamples = 300\nmax_exponent = 10\n";
    let cfg = write(dir.path(), "sl2.toml", &text);
    let o = run(&["cycle-limit", "--config", cfg.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "s,base_defect,imaginary_defect,ratio,version");
    assert_eq!(lines.len(), 12);
    let ratio: f64 = lines[11].split(',').nth(3).unwrap().parse().unwrap();
    assert!((ratio - 0.5).abs() < 1e-6);

    let su2 = write(dir.path(), "su2.toml", SU2);
    let o = run(&["cycle-limit", "--config", su2.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "su2.toml", SU2);
    let args = ["oracle", "--config", cfg.to_str().unwrap(), "--format", "json"];
    let a = run_env(&args, "ORBIT_LOCALIZE_THREADS", "1");
    let b = run_env(&args, "ORBIT_LOCALIZE_THREADS", "3");
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    assert_eq!(v["config"]["oracle"]["seed"], 3);
    assert_eq!(v["rows"].as_array().unwrap().len(), 10);
}
