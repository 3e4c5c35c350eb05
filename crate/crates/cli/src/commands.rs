//! Subcommand bodies. Every command renders its whole output in memory and
//! writes it once, so results do not depend on thread scheduling.

use std::path::{Path, PathBuf};

use orbit_localize::localize::{fourier_grid, fourier_value, EvalResult, Term};
use orbit_localize::oracle::{calibrate_compact, calibrate_split_sign, damped_oscillatory_integral};
use orbit_localize::verify::{compact_agreement, run_suite, scaling_sweep, CheckResult, Suite};
use orbit_localize::{Error, Family};
use serde::Serialize;

use crate::config::{Format, Overrides, RunConfig};
use crate::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn emit(cfg: &RunConfig, body: &[u8]) -> Result<(), CliError> {
    match &cfg.output.path {
        Some(path) => std::fs::write(path, body).map_err(|e| CliError::Runtime(format!("cannot write {path}: {e}"))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(body)
                .map_err(|e| CliError::Runtime(e.to_string()))
        }
    }
}

fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

fn csv_bytes(header: &[String], rows: &[Vec<String>]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(|e| CliError::Runtime(e.to_string()))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::Runtime(e.to_string()))?;
    }
    w.into_inner().map_err(|e| CliError::Runtime(e.to_string()))
}

fn coord_names(prefix: &str, k: usize) -> Vec<String> {
    (1..=k).map(|i| format!("{prefix}{i}")).collect()
}

fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::NotRegular | Error::Indeterminate { .. } | Error::Degenerate { .. })
}

#[derive(Serialize)]
struct EvalRow<'a> {
    x: &'a [f64],
    re_f: Option<f64>,
    im_f: Option<f64>,
    degenerate: bool,
    support_empty: bool,
    terms: &'a [Term],
    note: Option<String>,
}

#[derive(Serialize)]
struct Document<'a, T: Serialize> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    #[serde(flatten)]
    body: T,
}

pub fn eval(cfg: &RunConfig) -> Result<(), CliError> {
    let spec = cfg.orbit_spec()?;
    let points = cfg.grid_points(&spec)?;
    let xs: Vec<_> = points.iter().map(|(_, x)| x.clone()).collect();
    let results = fourier_grid(&spec, &xs);
    let mut values: Vec<Option<EvalResult>> = Vec::with_capacity(results.len());
    let mut notes = Vec::with_capacity(results.len());
    for r in results {
        match r {
            Ok(v) => {
                values.push(Some(v));
                notes.push(None);
            }
            Err(e) if is_degenerate(&e) => {
                values.push(None);
                notes.push(Some(e.to_string()));
            }
            Err(e) => return Err(e.into()),
        }
    }
    let mode = spec.mode().tag();
    let s0 = spec.s0();
    let body = match cfg.output.format {
        Format::Csv => {
            let mut header = coord_names("x", points.first().map_or(0, |p| p.0.len()));
            header.extend(["re_f", "im_f", "degenerate", "mode", "s0", "version"].map(String::from));
            let rows: Vec<Vec<String>> = points
                .iter()
                .zip(&values)
                .map(|((coords, _), v)| {
                    let mut row: Vec<String> = coords.iter().map(|c| c.to_string()).collect();
                    match v {
                        Some(r) => row.extend([r.total.re.to_string(), r.total.im.to_string(), "false".into()]),
                        None => row.extend(["NaN".into(), "NaN".into(), "true".into()]),
                    }
                    row.extend([mode.to_string(), s0.to_string(), VERSION.to_string()]);
                    row
                })
                .collect();
            csv_bytes(&header, &rows)?
        }
        Format::Json => {
            let rows: Vec<EvalRow> = points
                .iter()
                .zip(&values)
                .zip(&notes)
                .map(|(((coords, _), v), note)| EvalRow {
                    x: coords,
                    re_f: v.as_ref().map(|r| r.total.re),
                    im_f: v.as_ref().map(|r| r.total.im),
                    degenerate: v.is_none(),
                    support_empty: v.as_ref().is_some_and(|r| r.support_empty),
                    terms: v.as_ref().map_or(&[][..], |r| &r.terms[..]),
                    note: note.clone(),
                })
                .collect();
            #[derive(Serialize)]
            struct Body<'a> {
                mode: &'a str,
                s0: i32,
                rows: Vec<EvalRow<'a>>,
            }
            json(&Document {
                command: "eval",
                version: VERSION,
                config: cfg,
                body: Body { mode, s0, rows },
            })?
        }
    };
    emit(cfg, &body)?;
    if !values.is_empty() && values.iter().all(Option::is_none) {
        return Err(CliError::DegenerateOnly(values.len()));
    }
    Ok(())
}

pub fn verify(cfg: &RunConfig, suite: &str) -> Result<(), CliError> {
    let suite: Suite = suite.parse().map_err(|e: Error| CliError::Config(e.to_string()))?;
    let params = cfg.suite_params()?;
    let checks = run_suite(suite, &params)?;
    for c in &checks {
        eprintln!("{c}");
    }
    let body = match cfg.output.format {
        Format::Csv => {
            let header: Vec<String> = ["suite", "name", "measured", "threshold", "pass", "detail", "version"]
                .map(String::from)
                .to_vec();
            let rows: Vec<Vec<String>> = checks
                .iter()
                .map(|c| {
                    vec![
                        c.suite.clone(),
                        c.name.clone(),
                        c.measured.to_string(),
                        c.threshold.to_string(),
                        c.passed.to_string(),
                        c.detail.clone(),
                        VERSION.to_string(),
                    ]
                })
                .collect();
            csv_bytes(&header, &rows)?
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                checks: &'a [CheckResult],
                passed: bool,
            }
            json(&Document {
                command: "verify",
                version: VERSION,
                config: cfg,
                body: Body {
                    checks: &checks,
                    passed: checks.iter().all(|c| c.passed),
                },
            })?
        }
    };
    emit(cfg, &body)?;
    let failed: Vec<&str> = checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{} check(s) failed: {}", failed.len(), failed.join(", "))))
    }
}

/// `input.toml` -> `input.calibrated.toml` in the same directory.
pub fn sibling_path(input: &Path) -> PathBuf {
    let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("config");
    input.with_file_name(format!("{stem}.calibrated.toml"))
}

/// Split-sign calibration points `X = a H`.
const SPLIT_CALIBRATION_POINTS: [f64; 3] = [0.2, 0.3, 0.4];

pub fn calibrate(cfg: &RunConfig, input: &Path, overrides: &Overrides) -> Result<(), CliError> {
    let oracle = cfg.oracle()?;
    let spec = cfg.orbit_spec()?;
    // the written config keeps the file's own output section
    let mut out_cfg = RunConfig::load(
        input,
        &Overrides {
            seed: overrides.seed,
            ..Default::default()
        },
    )?;
    let mut provenance = vec![format!("# calibrated by orbit-localize {VERSION}")];
    provenance.push(format!(
        "# source: {}",
        input.file_name().and_then(|s| s.to_str()).unwrap_or("?")
    ));
    match (spec.algebra().family(), spec.algebra().n()) {
        (Family::Su, _) => {
            let seed = cfg.oracle_seed()?;
            let x0 = spec.reference_point(0.05);
            let cal = calibrate_compact(&spec, &x0, seed, oracle.samples).map_err(|e| match e {
                Error::CalibrationZero { .. } => CliError::Verification(e.to_string()),
                other => other.into(),
            })?;
            provenance.push(format!("# oracle: Haar Monte Carlo, seed = {seed}, samples = {}", oracle.samples));
            provenance.push(format!(
                "# reference point (algebra coordinates) = {:?}",
                x0.real_coords()
            ));
            provenance.push(format!(
                "# raw mean = {} + {}i, stderr = {}, relative stderr of constant = {}",
                cal.raw.mean.re, cal.raw.mean.im, cal.raw.stderr, cal.relative_stderr
            ));
            if let Some(o) = out_cfg.oracle.as_mut() {
                o.calibration = Some(cal.constant);
            }
        }
        (Family::SlReal, 2) => {
            let mut signs = Vec::new();
            for a in SPLIT_CALIBRATION_POINTS {
                let x = spec.cartan_element(&[a])?;
                let cal = calibrate_split_sign(&spec, &x, &oracle.eps, (oracle.mesh[0], oracle.mesh[1]))
                    .map_err(|e| match e {
                        Error::CalibrationZero { .. } => CliError::Verification(e.to_string()),
                        other => other.into(),
                    })?;
                provenance.push(format!(
                    "# a = {a}: damped integral {} (eps = {:?}), formula with s0 = +1: {} -> s0 = {}",
                    cal.oracle.re, oracle.eps, cal.formula_unit, cal.s0
                ));
                signs.push(cal.s0);
            }
            if signs.iter().any(|s| *s != signs[0]) {
                return Err(CliError::Verification(format!("s0 unstable across calibration points: {signs:?}")));
            }
            provenance.push(format!(
                "# oracle: damped hyperboloid quadrature, mesh = {:?}",
                oracle.mesh
            ));
            out_cfg.orbit.s0 = Some(signs[0]);
        }
        (Family::SlReal, n) => {
            return Err(CliError::Config(format!(
                "no calibration oracle for sl({n}, R); only sl(2, R) and su(n) are supported"
            )))
        }
    }
    let target = cfg
        .output
        .path
        .as_ref()
        .filter(|_| overrides.out.is_some())
        .map(PathBuf::from)
        .unwrap_or_else(|| sibling_path(input));
    let same = match (std::fs::canonicalize(input), std::fs::canonicalize(&target)) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    if same {
        return Err(CliError::Config("calibrate never overwrites its input; choose another --out".into()));
    }
    let body = toml::to_string(&out_cfg).map_err(|e| CliError::Runtime(e.to_string()))?;
    let text = format!("{}\n\n{body}", provenance.join("\n"));
    std::fs::write(&target, text).map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", target.display())))?;
    eprintln!("wrote {}", target.display());
    Ok(())
}

#[derive(Serialize)]
struct OracleRow {
    x: Vec<f64>,
    re_f: f64,
    im_f: f64,
    re_oracle: f64,
    im_oracle: f64,
    /// Combined standard error (compact) or extrapolation step (split).
    uncertainty: f64,
    /// z-score (compact) or relative error (split).
    score: f64,
}

pub fn oracle(cfg: &RunConfig) -> Result<(), CliError> {
    let o = cfg.oracle()?;
    let spec = cfg.orbit_spec()?;
    let (rows, kind, failure, extra) = match (spec.algebra().family(), spec.algebra().n()) {
        (Family::Su, _) => {
            let seed = cfg.oracle_seed()?;
            let a = compact_agreement(&spec, seed, o.samples, o.points).map_err(|e| match e {
                Error::CalibrationZero { .. } => CliError::Verification(e.to_string()),
                other => other.into(),
            })?;
            let rows: Vec<OracleRow> = a
                .rows
                .iter()
                .map(|r| OracleRow {
                    x: r.x.clone(),
                    re_f: r.formula.re,
                    im_f: r.formula.im,
                    re_oracle: r.oracle.re,
                    im_oracle: r.oracle.im,
                    uncertainty: r.combined_stderr,
                    score: r.z_score,
                })
                .collect();
            let allowed = o.points / 10;
            eprintln!(
                "calibration constant {} (relative stderr {:.3e}); {} of {} points beyond 3 stderr (allowed {allowed})",
                a.calibration.constant,
                a.calibration.relative_stderr,
                a.misses,
                rows.len()
            );
            let failure = (a.misses > allowed).then(|| format!("{} misses (allowed {allowed})", a.misses));
            (rows, "monte_carlo", failure, serde_json::to_value(a.calibration).ok())
        }
        (Family::SlReal, 2) => {
            let points = cfg.grid_points(&spec)?;
            let mut rows = Vec::new();
            let mut skipped = 0;
            for (coords, x) in &points {
                let f = match fourier_value(&spec, x) {
                    Ok(r) if !r.support_empty => r.total,
                    Ok(_) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) if is_degenerate(&e) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };
                let seq = damped_oscillatory_integral(&spec, x, &o.eps, (o.mesh[0], o.mesh[1]))?;
                let last = seq.estimates.last().map_or(seq.extrapolated, |e| e.value);
                rows.push(OracleRow {
                    x: coords.clone(),
                    re_f: f.re,
                    im_f: f.im,
                    re_oracle: seq.extrapolated.re,
                    im_oracle: seq.extrapolated.im,
                    uncertainty: (last - seq.extrapolated).norm(),
                    score: (seq.extrapolated - f).norm() / f.norm().max(1e-300),
                });
            }
            if skipped > 0 {
                eprintln!("{skipped} grid point(s) skipped (degenerate or outside the split set)");
            }
            let worst = rows.iter().map(|r| r.score).fold(0.0, f64::max);
            eprintln!("{} points, worst relative error {worst:.3e} (threshold 0.1)", rows.len());
            let failure = (worst > 0.1).then(|| format!("worst relative error {worst:.3e} > 0.1"));
            (rows, "damped_quadrature", failure, None)
        }
        (Family::SlReal, n) => {
            return Err(CliError::Config(format!("no oracle for sl({n}, R); only sl(2, R) and su(n) are supported")))
        }
    };
    let body = match cfg.output.format {
        Format::Csv => {
            let k = rows.first().map_or(0, |r| r.x.len());
            let mut header = coord_names("x", k);
            header.extend(
                ["re_f", "im_f", "re_oracle", "im_oracle", "uncertainty", "score", "version"].map(String::from),
            );
            let table: Vec<Vec<String>> = rows
                .iter()
                .map(|r| {
                    let mut row: Vec<String> = r.x.iter().map(|c| c.to_string()).collect();
                    row.extend(
                        [r.re_f, r.im_f, r.re_oracle, r.im_oracle, r.uncertainty, r.score].map(|v| v.to_string()),
                    );
                    row.push(VERSION.to_string());
                    row
                })
                .collect();
            csv_bytes(&header, &table)?
        }
        Format::Json => {
            #[derive(Serialize)]
            struct Body<'a> {
                oracle: &'a str,
                calibration: Option<serde_json::Value>,
                rows: &'a [OracleRow],
                passed: bool,
            }
            json(&Document {
                command: "oracle",
                version: VERSION,
                config: cfg,
                body: Body {
                    oracle: kind,
                    calibration: extra,
                    rows: &rows,
                    passed: failure.is_none(),
                },
            })?
        }
    };
    emit(cfg, &body)?;
    match failure {
        Some(m) => Err(CliError::Verification(m)),
        None => Ok(()),
    }
}

pub fn cycle_limit(cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.algebra.family != Family::SlReal || cfg.algebra.n != 2 {
        return Err(CliError::Config("cycle-limit uses the sl(2, R) flag-variety model; set family = \"sl_real\", n = 2".into()));
    }
    let seed = cfg.suite_params()?.seed;
    let g = &cfg.geometry;
    let report = scaling_sweep(cfg.orbit.lambda[0], g.kappa, seed, g.max_exponent, g.samples)?;
    let ratio_at = |s: f64| report.ratios.iter().find(|(t, _)| *t == s).map(|(_, r)| *r);
    let slope_ok = (report.fitted_slope - 1.0).abs() <= 0.1;
    eprintln!(
        "fitted slope {:.4}, identity at s = 1: {}",
        report.fitted_slope, report.identity_at_one
    );
    let body = match cfg.output.format {
        Format::Csv => {
            let header: Vec<String> = ["s", "base_defect", "imaginary_defect", "ratio", "version"]
                .map(String::from)
                .to_vec();
            let rows: Vec<Vec<String>> = report
                .rows
                .iter()
                .map(|r| {
                    vec![
                        r.s.to_string(),
                        r.base_defect.to_string(),
                        r.imaginary_defect.to_string(),
                        ratio_at(r.s).map_or(String::new(), |v| v.to_string()),
                        VERSION.to_string(),
                    ]
                })
                .collect();
            csv_bytes(&header, &rows)?
        }
        Format::Json => json(&Document {
            command: "cycle-limit",
            version: VERSION,
            config: cfg,
            body: &report,
        })?,
    };
    emit(cfg, &body)?;
    if !report.identity_at_one || !slope_ok {
        return Err(CliError::Verification(format!(
            "scaling limit: identity at s = 1 {}, fitted slope {:.4}",
            report.identity_at_one, report.fitted_slope
        )));
    }
    Ok(())
}
