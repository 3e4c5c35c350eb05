//! Acceptance criteria 1-7. Prints one PASS/FAIL line per criterion (written
//! straight to stderr so it shows without `--nocapture`), then asserts.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use orbit_localize::fixedpoints::MultiplicityMode;
use orbit_localize::localize::OrbitSpec;
use orbit_localize::verify::{
    casimir_sweep, compact_agreement, geometry_sweep, invariance_sweep, small_t_sequence, split_form_sweep,
};
use orbit_localize::{AlgebraSpec, Family};

const SEED: u64 = 20240601;

fn orbit(family: Family, n: usize, lambda: &[f64]) -> OrbitSpec {
    let algebra = Arc::new(AlgebraSpec::build(family, n).unwrap());
    OrbitSpec::with_defaults(algebra, lambda).unwrap()
}

fn su2() -> OrbitSpec {
    orbit(Family::Su, 2, &[1.3])
}
fn su3() -> OrbitSpec {
    orbit(Family::Su, 3, &[1.0, 0.7])
}
fn sl2() -> OrbitSpec {
    orbit(Family::SlReal, 2, &[4.0])
}
fn sl3() -> OrbitSpec {
    orbit(Family::SlReal, 3, &[1.0, 0.7])
}

fn report(k: usize, pass: bool, detail: String) -> bool {
    let line = format!("criterion {k}: {} - {detail}\n", if pass { "PASS" } else { "FAIL" });
    std::io::stderr().write_all(line.as_bytes()).unwrap();
    pass
}

fn criterion_1() -> bool {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec) in [("su(2)", su2()), ("su(3)", su3())] {
        let t = Instant::now();
        let a = compact_agreement(&spec, SEED, 1_000_000, 20).unwrap();
        let secs = t.elapsed().as_secs_f64();
        let worst = a.rows.iter().map(|r| r.z_score).fold(0.0, f64::max);
        pass &= a.rows.len() == 20 && a.misses <= 2 && secs <= 300.0;
        parts.push(format!(
            "{name}: {}/20 beyond 3 stderr, max z {worst:.2}, c = {:.6}, {secs:.1}s",
            a.misses, a.calibration.constant
        ));
    }
    report(1, pass, parts.join("; "))
}

fn criterion_2() -> bool {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec) in [("su(2)", su2()), ("su(3)", su3()), ("sl(2,R) split", sl2())] {
        let s = casimir_sweep(&spec, SEED, 100, 1e-3, 1e-3).unwrap();
        pass &= s.points == 100 && s.failures == 0 && s.worst <= 1e-4;
        parts.push(format!("{name}: worst {:.2e} over {} points", s.worst, s.points));
    }
    report(2, pass, parts.join("; "))
}

fn criterion_3() -> bool {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, spec) in [("su(2)", su2()), ("su(3)", su3()), ("sl(2,R)", sl2()), ("sl(3,R)", sl3())] {
        let s = invariance_sweep(&spec, SEED, 50, 1e-3).unwrap();
        pass &= s.points == 50 && s.worst <= 1e-9;
        parts.push(format!("{name}: {:.2e}", s.worst));
    }
    report(3, pass, format!("max |F(Ad(g)X) - F(X)| over 50 pairs: {}", parts.join(", ")))
}

fn criterion_4() -> bool {
    let s = split_form_sweep(&sl2(), SEED, 100).unwrap();
    let pass = s.elliptic_points == 100
        && s.elliptic_nonzero == 0
        && s.split_points == 100
        && s.max_imaginary <= 1e-12
        && s.max_form_residual <= 1e-12;
    report(
        4,
        pass,
        format!(
            "elliptic nonzero {}/{}; split max |Im F| {:.1e}, two-exponential residual {:.1e} over {}",
            s.elliptic_nonzero, s.elliptic_points, s.max_imaginary, s.max_form_residual, s.split_points
        ),
    )
}

fn criterion_5() -> bool {
    let ones = [su2(), su3()].iter().all(|spec| {
        *spec.mode() == MultiplicityMode::Compact && spec.fixed_points().iter().all(|f| f.multiplicity == 1)
    });
    let l = small_t_sequence(&su2(), 20).unwrap();
    let bounded = l.values.iter().all(|v| v.1.is_finite()) && l.max_abs <= 10.0;
    let pass = ones && bounded && l.tail_step <= 1e-6;
    report(
        5,
        pass,
        format!(
            "multiplicities all 1: {ones}; su(2) along t = 2^-k, k <= 20: max |F| {:.4}, tail step {:.1e}",
            l.max_abs, l.tail_step
        ),
    )
}

fn criterion_6() -> bool {
    let g = geometry_sweep(4.0, 0.3, SEED, 10_000).unwrap();
    let checks = g.checks();
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    let pass = failed.is_empty();
    report(
        6,
        pass,
        format!(
            "nilpotent {:.1e}, equivariance {:.1e}, round trip {:.1e}, sup Re {:.4} <= bound {:.4} (10^4 samples), \
             subspace/fiber {:.1e}, defect at 2^-20 {:.1e}, slope {:.4}{}",
            g.nilpotency,
            g.equivariance,
            g.round_trip,
            g.max_real_part,
            g.real_part_bound,
            g.fiber_invariant_drift.max(g.fiber_conormal_defect),
            g.final_defect(),
            g.scaling.fitted_slope,
            if pass { String::new() } else { format!("; failed: {}", failed.join(", ")) }
        ),
    )
}

const SU2_CONFIG: &str = r#"
[algebra]
family = "su"
n = 2

[orbit]
lambda = [1.3]

[grid]
ranges = [[-2.0, 2.0]]
steps = [17]

[oracle]
seed = 11
samples = 100000
points = 20

[verify]
points = 20
"#;

const SL2_CONFIG: &str = r#"
[algebra]
family = "sl_real"
n = 2

[orbit]
lambda = [4.0]

[grid]
ranges = [[0.2, 1.0]]
steps = [5]

[oracle]
seed = 11

[verify]
points = 20

[geometry]
samples = 2000
"#;

fn run_bin(dir: &Path, args: &[&str], out: &str, threads: &str) -> (Vec<u8>, Option<i32>) {
    let path = dir.join(out);
    let _ = std::fs::remove_file(&path);
    let status = Command::new(env!("CARGO_BIN_EXE_orbit-localize"))
        .args(args)
        .arg("--out")
        .arg(&path)
        .env("ORBIT_LOCALIZE_THREADS", threads)
        .stderr(std::process::Stdio::null())
        .status()
        .unwrap();
    (std::fs::read(&path).unwrap_or_default(), status.code())
}

fn criterion_7() -> bool {
    let dir = tempfile::tempdir().unwrap();
    let su2 = dir.path().join("su2.toml");
    let sl2 = dir.path().join("sl2.toml");
    std::fs::write(&su2, SU2_CONFIG).unwrap();
    std::fs::write(&sl2, SL2_CONFIG).unwrap();
    let (su2, sl2) = (su2.to_str().unwrap().to_string(), sl2.to_str().unwrap().to_string());
    let commands: Vec<Vec<&str>> = vec![
        vec!["eval", "--config", &su2],
        vec!["eval", "--config", &su2, "--format", "json"],
        vec!["eval", "--config", &sl2, "--format", "json"],
        vec!["verify", "--config", &su2, "--suite", "localize", "--seed", "5"],
        vec!["verify", "--config", &sl2, "--suite", "fixedpoints", "--format", "json"],
        vec!["calibrate", "--config", &su2],
        vec!["calibrate", "--config", &sl2],
        vec!["oracle", "--config", &su2, "--format", "json"],
        vec!["oracle", "--config", &sl2],
        vec!["cycle-limit", "--config", &sl2],
    ];
    let mut mismatched = Vec::new();
    let mut failed = Vec::new();
    for (i, args) in commands.iter().enumerate() {
        let out = format!("out{i}");
        let first = run_bin(dir.path(), args, &out, "1");
        let second = run_bin(dir.path(), args, &out, "4");
        if first.1 != Some(0) || second.1 != Some(0) {
            failed.push(args[0]);
        }
        if first.0.is_empty() || first != second {
            mismatched.push(args[0]);
        }
    }
    let pass = mismatched.is_empty() && failed.is_empty();
    report(
        7,
        pass,
        format!(
            "{} seeded commands run twice (1 and 4 threads): {} byte mismatches, {} nonzero exits",
            commands.len(),
            mismatched.len(),
            failed.len()
        ),
    )
}

#[test]
fn acceptance_criteria() {
    let results = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        criterion_7(),
    ];
    let failed: Vec<usize> = results
        .iter()
        .enumerate()
        .filter(|(_, ok)| !**ok)
        .map(|(i, _)| i + 1)
        .collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
