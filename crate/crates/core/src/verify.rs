//! Named property suites. Each check reports a measured residual against a
//! threshold; the CLI prints them and the acceptance tests assert on them.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{real_matrix, AlgebraElement, AlgebraSpec, Family};
use crate::cartan::{cartan_of, reduce_to_cartan, regular_radius, CartanDatum, Reduction};
use crate::error::{Error, Result};
use crate::fixedpoints::{closed_orbit_support, enumerate_fixed_points, split_positive_system, MultiplicityMode};
use crate::geometry::{nilpotency_residual, FlagModel};
use crate::iwasawa::iwasawa;
use crate::linalg::{self, c, C64};
use crate::localize::{casimir_check, fourier_value, invariance_checks, EvalResult, OrbitSpec};
use crate::oracle::{calibrate_compact, damped_oscillatory_integral, haar_orbit_sample, mc_raw_batch, orbit_invariants};

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub measured: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    /// Passes when `measured <= threshold`.
    pub fn at_most(suite: &str, name: &str, measured: f64, threshold: f64, detail: impl Into<String>) -> Self {
        CheckResult {
            suite: suite.into(),
            name: name.into(),
            measured,
            threshold,
            passed: measured <= threshold,
            detail: detail.into(),
        }
    }

    pub fn flag(suite: &str, name: &str, ok: bool, detail: impl Into<String>) -> Self {
        CheckResult {
            suite: suite.into(),
            name: name.into(),
            measured: if ok { 0.0 } else { 1.0 },
            threshold: 0.0,
            passed: ok,
            detail: detail.into(),
        }
    }
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}] {}/{}: measured {:.3e} threshold {:.3e} {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.suite,
            self.name,
            self.measured,
            self.threshold,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Algebra,
    Fixedpoints,
    Localize,
    Geometry,
    Oracle,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "algebra" => Ok(Suite::Algebra),
            "fixedpoints" => Ok(Suite::Fixedpoints),
            "localize" => Ok(Suite::Localize),
            "geometry" => Ok(Suite::Geometry),
            "oracle" => Ok(Suite::Oracle),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!(
                "unknown suite `{other}` (expected algebra, fixedpoints, localize, geometry, oracle or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteParams {
    pub family: Family,
    pub n: usize,
    pub lambda: Vec<f64>,
    pub mode: MultiplicityMode,
    pub s0: i32,
    pub seed: u64,
    /// Random points for the analytic checks.
    pub points: usize,
    pub casimir_step: f64,
    /// Smallest accepted relative root value for random test points.
    pub min_wall_distance: f64,
    pub oracle_samples: usize,
    pub oracle_points: usize,
    pub eps_schedule: Vec<f64>,
    pub mesh: (usize, usize),
    pub kappa: f64,
    pub geometry_samples: usize,
}

impl SuiteParams {
    pub fn orbit(&self) -> Result<OrbitSpec> {
        let algebra = Arc::new(AlgebraSpec::build(self.family, self.n)?);
        OrbitSpec::new(algebra, &self.lambda, self.mode.clone(), self.s0)
    }
}

pub fn run_suite(suite: Suite, params: &SuiteParams) -> Result<Vec<CheckResult>> {
    match suite {
        Suite::Algebra => algebra_suite(params),
        Suite::Fixedpoints => fixedpoints_suite(params),
        Suite::Localize => localize_suite(params),
        Suite::Geometry => geometry_suite(params),
        Suite::Oracle => oracle_suite(params),
        Suite::All => {
            let mut out = Vec::new();
            for s in [Suite::Algebra, Suite::Fixedpoints, Suite::Localize, Suite::Geometry, Suite::Oracle] {
                out.extend(run_suite(s, params)?);
            }
            Ok(out)
        }
    }
}

fn factorial(n: usize) -> usize {
    (1..=n).product()
}

/// Random real regular element. Draws until one is regular (and not in the
/// guard band).
pub fn random_regular<R: Rng + ?Sized>(algebra: &AlgebraSpec, rng: &mut R, scale: f64) -> AlgebraElement {
    loop {
        let x = algebra.random_element(rng, scale);
        if let Ok(true) = algebra.is_regular_semisimple(&x) {
            return x;
        }
    }
}

/// Random points where the fixed-point sum is defined, nonzero-supported and
/// at least `min_wall` away from every wall.
pub fn sample_evaluable<R: Rng + ?Sized>(
    spec: &OrbitSpec,
    rng: &mut R,
    count: usize,
    scale: f64,
    min_wall: f64,
) -> Vec<(AlgebraElement, EvalResult)> {
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let x = spec.algebra().random_element(rng, scale);
        if let Ok(r) = fourier_value(spec, &x) {
            if !r.support_empty && r.wall_distance >= min_wall {
                out.push((x, r));
            }
        }
    }
    out
}

/// Random elliptic regular element `Ad(g)(t J)` of `sl(2, R)`, `J` the rotation generator.
pub fn random_elliptic<R: Rng + ?Sized>(algebra: &AlgebraSpec, rng: &mut R) -> AlgebraElement {
    let t: f64 = rng.random_range(0.1..3.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
    let j = algebra
        .element_from_matrix(&real_matrix(2, &[0.0, t, -t, 0.0]))
        .expect("2x2");
    let g = algebra.random_group_element(rng, 0.6, 3);
    let y = algebra.adjoint_action(&g, &j).expect("invertible");
    AlgebraElement::from_real(&y.real_coords())
}

fn algebra_suite(p: &SuiteParams) -> Result<Vec<CheckResult>> {
    const S: &str = "algebra";
    let algebra = Arc::new(AlgebraSpec::build(p.family, p.n)?);
    let mut out = vec![
        CheckResult::at_most(S, "jacobi", algebra.jacobi_residual(), 1e-12, "all basis triples"),
        CheckResult::at_most(S, "killing_invariance", algebra.killing_invariance_residual(), 1e-12, "all basis triples"),
    ];
    let (pos, neg) = algebra.killing_signature();
    let sig_ok = match p.family {
        Family::Su => pos == 0,
        Family::SlReal => pos > 0 && neg > 0,
    };
    out.push(CheckResult::flag(S, "killing_signature", sig_ok, format!("(+{pos}, -{neg})")));

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let x = random_regular(&algebra, &mut rng, 1.0);
    let t = cartan_of(algebra.clone(), &x)?;
    out.push(CheckResult::flag(
        S,
        "root_count",
        t.roots().len() == algebra.dim() - algebra.rank(),
        format!("{} roots", t.roots().len()),
    ));
    let mut eig = 0.0f64;
    for (root, ev) in t.roots().iter().zip(t.root_vectors()) {
        for (k, h) in t.basis().iter().enumerate() {
            let lhs = algebra.bracket(h, ev)?;
            eig = eig.max(lhs.sub(&ev.scale_complex(root.coords[k])).norm() / ev.norm());
        }
    }
    out.push(CheckResult::at_most(S, "root_vectors", eig, 1e-10, "[H, E_a] = a(H) E_a"));
    let w = t.weyl_group();
    let closed = w.iter().all(|u| w.iter().all(|v| t.find_weyl(&(&u.matrix * &v.matrix)).is_some()));
    out.push(CheckResult::flag(
        S,
        "weyl_group",
        closed && w.len() == factorial(p.n),
        format!("order {} (expected {})", w.len(), factorial(p.n)),
    ));
    let kernel = {
        let ad = algebra.adjoint_matrix(&x)?;
        let sv = ad.svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        sv.iter().filter(|s| **s <= 1e-9 * smax).count()
    };
    out.push(CheckResult::flag(
        S,
        "kernel_dimension",
        kernel == algebra.rank(),
        format!("dim ker ad X = {kernel}"),
    ));

    let iw = iwasawa(algebra.clone())?;
    out.push(CheckResult::at_most(S, "iwasawa_involution", iw.involution_residual(), 1e-12, "theta^2 = 1"));
    out.push(CheckResult::at_most(S, "iwasawa_homomorphism", iw.homomorphism_residual()?, 1e-12, "theta preserves brackets"));
    out.push(CheckResult::flag(S, "iwasawa_dimensions", iw.dimension_defect() == 0, "dim g = dim k + dim a + dim n"));
    out.push(CheckResult::flag(
        S,
        "iwasawa_nilpotent",
        iw.nilpotency_length()?.is_some(),
        "lower central series of n reaches 0",
    ));

    let target = CartanDatum::standard_upper(algebra.clone())?;
    let mut worst = 0.0f64;
    let mut conj = 0;
    for _ in 0..p.points.max(1) {
        let x = random_regular(&algebra, &mut rng, 1.0);
        if let Reduction::Conjugate { g, reduced, .. } = reduce_to_cartan(&x, &target)? {
            conj += 1;
            let ad = algebra.adjoint_action(&g, &x)?;
            worst = worst.max(ad.sub(&reduced).norm() / x.norm().max(1.0));
            for h in target.basis() {
                worst = worst.max(algebra.bracket(h, &reduced)?.norm());
            }
        }
    }
    out.push(CheckResult::at_most(
        S,
        "reduce_to_cartan",
        worst,
        1e-10,
        format!("{conj} conjugate of {}", p.points.max(1)),
    ));
    Ok(out)
}

/// Conditions a) and b) for a splitting of a positive system at Cartan coordinates `x`.
pub fn split_conditions_hold(cartan: &CartanDatum, x: &nalgebra::DVector<C64>, positive: &[usize], lower: &[usize], upper: &[usize]) -> bool {
    let values = cartan.root_values(x);
    let cond_a = positive.iter().all(|&a| {
        let re = values[a].re;
        re == 0.0 || ((re < 0.0) == lower.contains(&a) && (re > 0.0) == upper.contains(&a))
    });
    let cond_b = positive.iter().all(|&a| {
        positive.iter().all(|&b| {
            let sum = &cartan.roots()[a].coords + &cartan.roots()[b].coords;
            match cartan.find_root(&sum) {
                Some(s) if positive.contains(&s) => {
                    (!(lower.contains(&a) && lower.contains(&b)) || lower.contains(&s))
                        && (!(upper.contains(&a) && upper.contains(&b)) || upper.contains(&s))
                }
                _ => true,
            }
        })
    });
    cond_a && cond_b
}

fn fixedpoints_suite(p: &SuiteParams) -> Result<Vec<CheckResult>> {
    const S: &str = "fixedpoints";
    let spec = p.orbit()?;
    let cartan = spec.cartan();
    let fps = spec.fixed_points();
    let mut out = vec![CheckResult::flag(
        S,
        "count",
        fps.len() == factorial(p.n),
        format!("{} fixed points", fps.len()),
    )];
    out.push(CheckResult::flag(
        S,
        "base_borel",
        fps[0].label == "e" && fps[0].borel_roots == cartan.negative_roots(),
        "base point carries the negative roots",
    ));
    let structure = fps.iter().all(|fp| {
        let mut all = fp.borel_roots.clone();
        for &a in &fp.borel_roots {
            if let Some(neg) = cartan.find_root(&(-&cartan.roots()[a].coords)) {
                all.push(neg);
            }
        }
        all.sort_unstable();
        all.dedup();
        let closed = fp.borel_roots.iter().all(|&a| {
            fp.borel_roots.iter().all(|&b| {
                cartan
                    .find_root(&(&cartan.roots()[a].coords + &cartan.roots()[b].coords))
                    .is_none_or(|s| fp.borel_roots.contains(&s))
            })
        });
        all.len() == cartan.roots().len() && closed
    });
    out.push(CheckResult::flag(S, "borel_structure", structure, "list + negation = all roots; additively closed"));
    let lam_ok = fps.iter().all(|fp| {
        let w = &cartan.weyl_group()[fp.weyl_index];
        (&fp.lambda_x - w.act(spec.lambda())).norm() < 1e-12
    });
    out.push(CheckResult::flag(S, "lambda_x", lam_ok, "lambda_x = w lambda"));

    let mut rng = ChaCha8Rng::seed_from_u64(p.seed ^ 0x5eed);
    let mut split_ok = true;
    for _ in 0..p.points.max(1) {
        let coords: Vec<f64> = (0..cartan.rank()).map(|_| rng.random_range(-2.0..2.0)).collect();
        let x = spec.cartan_element(&coords)?;
        if !spec.algebra().is_regular_semisimple(&x).unwrap_or(false) {
            continue;
        }
        let xc = cartan.coords_of(&x)?;
        let pos = cartan.positive_roots();
        let (lower, upper) = split_positive_system(cartan, &xc, &pos);
        split_ok &= split_conditions_hold(cartan, &xc, &pos, &lower, &upper);
    }
    out.push(CheckResult::flag(S, "split_conditions", split_ok, "conditions a) and b), brute force"));

    let support = closed_orbit_support(cartan, fps)?;
    let support_ok = match p.family {
        Family::Su => support.iter().all(|s| *s),
        Family::SlReal => support.iter().all(|s| *s),
    };
    out.push(CheckResult::flag(
        S,
        "closed_orbit_support",
        support_ok,
        format!("{} of {} in support", support.iter().filter(|s| **s).count(), support.len()),
    ));
    let values: Vec<i32> = fps.iter().map(|f| f.multiplicity).collect();
    let mult_ok = match spec.mode() {
        MultiplicityMode::Compact => values.iter().all(|d| *d == 1),
        MultiplicityMode::MaximallySplit => fps
            .iter()
            .zip(&support)
            .all(|(f, on)| if *on { f.multiplicity == f.sign * spec.s0() } else { f.multiplicity == 0 }),
        MultiplicityMode::UserSupplied { .. } => fps.iter().zip(&support).all(|(f, on)| *on || f.multiplicity == 0),
    };
    out.push(CheckResult::flag(S, "multiplicities", mult_ok, format!("{values:?}")));
    let flipped = spec.with_s0(-spec.s0())?;
    let cov = match spec.mode() {
        MultiplicityMode::MaximallySplit => fps
            .iter()
            .zip(flipped.fixed_points())
            .all(|(a, b)| a.multiplicity == -b.multiplicity),
        _ => true,
    };
    out.push(CheckResult::flag(S, "sign_covariance", cov, "s0 -> -s0 negates nonzero d"));

    // an elliptic Cartan of sl(2, R) has no real Borels
    if p.family == Family::SlReal && p.n == 2 {
        let algebra = spec.algebra().clone();
        let j = algebra.element_from_matrix(&real_matrix(2, &[0.0, 1.0, -1.0, 0.0]))?;
        let t = cartan_of(algebra, &j)?;
        let fp = enumerate_fixed_points(&t, spec.lambda())?;
        let sup = closed_orbit_support(&t, &fp)?;
        out.push(CheckResult::flag(S, "elliptic_support_empty", sup.iter().all(|s| !s), "no sigma-stable Borel"));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub points: usize,
    pub worst: f64,
    pub failures: usize,
}

/// `casimir_check` at random evaluable points whose certified distance to the
/// non-regular set is at least `10 h`.
pub fn casimir_sweep(spec: &OrbitSpec, seed: u64, points: usize, h: f64, min_wall: f64) -> Result<SweepSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(points);
    while samples.len() < points {
        let (x, r) = sample_evaluable(spec, &mut rng, 1, 1.0, min_wall).remove(0);
        if regular_radius(spec.algebra(), &x)? >= 10.0 * h {
            samples.push((x, r));
        }
    }
    let mut worst = 0.0f64;
    let mut failures = 0;
    for (x, _) in &samples {
        let r = casimir_check(spec, x, h)?;
        worst = worst.max(r.residual);
        if r.residual > 1e-4 {
            failures += 1;
        }
    }
    Ok(SweepSummary {
        points: samples.len(),
        worst,
        failures,
    })
}

/// `|F(Ad(g) X) - F(X)|` (and Weyl relabeling in compact mode) at random `(g, X)`.
pub fn invariance_sweep(spec: &OrbitSpec, seed: u64, points: usize, min_wall: f64) -> Result<SweepSummary> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut failures = 0;
    let mut done = 0;
    while done < points {
        let (x, _) = sample_evaluable(spec, &mut rng, 1, 1.0, min_wall).remove(0);
        let g = spec.algebra().random_group_element(&mut rng, 0.5, 3);
        let report = invariance_checks(spec, &x, &g)?;
        if report.ad_difference.is_none() {
            continue;
        }
        let d = report.max_difference();
        worst = worst.max(d);
        if d > 1e-9 {
            failures += 1;
        }
        done += 1;
    }
    Ok(SweepSummary {
        points: done,
        worst,
        failures,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitFormSummary {
    pub elliptic_points: usize,
    /// Elliptic points whose value is not exactly zero.
    pub elliptic_nonzero: usize,
    pub split_points: usize,
    pub max_imaginary: f64,
    /// Largest deviation from `(d_e e^z + d_s e^{-z}) / D` with `z` imaginary.
    pub max_form_residual: f64,
}

/// `sl(2, R)` in split mode: exact vanishing on elliptic elements and the
/// real two-exponential form on split elements.
pub fn split_form_sweep(spec: &OrbitSpec, seed: u64, points: usize) -> Result<SplitFormSummary> {
    if spec.algebra().family() != Family::SlReal || spec.algebra().n() != 2 {
        return Err(Error::UnsupportedRealForm("split sweep is for sl(2, R)".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s = SplitFormSummary {
        elliptic_points: 0,
        elliptic_nonzero: 0,
        split_points: 0,
        max_imaginary: 0.0,
        max_form_residual: 0.0,
    };
    while s.elliptic_points < points {
        let x = random_elliptic(spec.algebra(), &mut rng);
        let r = fourier_value(spec, &x)?;
        s.elliptic_points += 1;
        if !(r.support_empty && r.total == c(0.0, 0.0)) {
            s.elliptic_nonzero += 1;
        }
    }
    for (_, r) in sample_evaluable(spec, &mut rng, points, 1.0, 1e-3) {
        s.split_points += 1;
        s.max_imaginary = s.max_imaginary.max(r.total.im.abs());
        let form = if r.terms.len() == 2 {
            let (a, b) = (&r.terms[0], &r.terms[1]);
            let rebuilt = (a.exponent.exp() * a.multiplicity as f64 + (-a.exponent).exp() * b.multiplicity as f64
                * (a.denominator / b.denominator))
                / a.denominator;
            a.exponent.re.abs() + (a.exponent + b.exponent).norm() + (rebuilt - r.total).norm()
        } else {
            f64::INFINITY
        };
        s.max_form_residual = s.max_form_residual.max(form);
    }
    Ok(s)
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitSummary {
    /// `(t, F(t H))` along `t = 2^-k`.
    pub values: Vec<(f64, f64)>,
    pub max_abs: f64,
    /// `|F(t_k) - F(t_{k-1})|` at the tail.
    pub tail_step: f64,
}

/// `F` along `t X0` for `t = 2^-k`, `k = 0..=kmax`, with `X0` the reference direction.
pub fn small_t_sequence(spec: &OrbitSpec, kmax: i32) -> Result<LimitSummary> {
    let x0 = spec.reference_point(1.0);
    let mut values = Vec::new();
    for k in 0..=kmax {
        let t = 2f64.powi(-k);
        values.push((t, fourier_value(spec, &x0.scale(t))?.total.re));
    }
    let max_abs = values.iter().map(|v| v.1.abs()).fold(0.0, f64::max);
    let k = values.len();
    let tail_step = (values[k - 1].1 - values[k - 2].1).abs();
    Ok(LimitSummary {
        values,
        max_abs,
        tail_step,
    })
}

fn localize_suite(p: &SuiteParams) -> Result<Vec<CheckResult>> {
    const S: &str = "localize";
    let spec = p.orbit()?;
    let mut out = Vec::new();
    let cas = casimir_sweep(&spec, p.seed, p.points, p.casimir_step, p.min_wall_distance)?;
    out.push(CheckResult::at_most(
        S,
        "eigendistribution",
        cas.worst,
        1e-4,
        format!("{} points, h = {}", cas.points, p.casimir_step),
    ));
    let inv = invariance_sweep(&spec, p.seed.wrapping_add(1), p.points.min(50), p.min_wall_distance)?;
    out.push(CheckResult::at_most(S, "ad_invariance", inv.worst, 1e-9, format!("{} (g, X) pairs", inv.points)));
    let flipped = spec.with_s0(-spec.s0())?;
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed.wrapping_add(2));
    let mut cov = 0.0f64;
    for (x, r) in sample_evaluable(&spec, &mut rng, 10, 1.0, p.min_wall_distance) {
        let other = fourier_value(&flipped, &x)?.total;
        let expect = match spec.mode() {
            MultiplicityMode::MaximallySplit => -r.total,
            _ => r.total,
        };
        cov = cov.max((other - expect).norm());
    }
    out.push(CheckResult::at_most(S, "sign_covariance", cov, 1e-12, "s0 -> -s0"));
    if p.family == Family::SlReal && p.n == 2 {
        let s = split_form_sweep(&spec, p.seed.wrapping_add(3), p.points)?;
        out.push(CheckResult::flag(
            S,
            "elliptic_vanishing",
            s.elliptic_nonzero == 0,
            format!("{} of {} elliptic values nonzero", s.elliptic_nonzero, s.elliptic_points),
        ));
        out.push(CheckResult::at_most(S, "split_reality", s.max_imaginary, 1e-12, "max |Im F|"));
        out.push(CheckResult::at_most(S, "two_exponential_form", s.max_form_residual, 1e-12, "term structure"));
    }
    if matches!(spec.mode(), MultiplicityMode::Compact) && p.n == 2 {
        let l = small_t_sequence(&spec, 20)?;
        out.push(CheckResult::at_most(S, "limit_at_zero", l.tail_step, 1e-6, format!("max |F| = {:.4}", l.max_abs)));
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct GeometrySummary {
    pub nilpotency: f64,
    pub equivariance: f64,
    pub round_trip: f64,
    pub image_invariants: f64,
    pub real_line_distance: f64,
    pub max_real_part: f64,
    pub real_part_bound: f64,
    pub base_point_distance: f64,
    pub fiber_invariant_drift: f64,
    pub fiber_base_drift: f64,
    pub fiber_conormal_defect: f64,
    pub fiber_dimension_ok: bool,
    pub scaling: crate::geometry::ScalingReport,
}

/// Every geometric check on `samples` random points.
pub fn geometry_sweep(lambda: f64, kappa: f64, seed: u64, samples: usize) -> Result<GeometrySummary> {
    let model = FlagModel::new(lambda, kappa)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zetas: Vec<_> = (0..samples).map(|_| model.random_cotangent(&mut rng, 2.0)).collect();
    let nilpotency = nilpotency_residual(&model, &zetas);
    let mut equivariance = 0.0f64;
    let mut round_trip = 0.0f64;
    let mut image_invariants = 0.0f64;
    for z in &zetas {
        let u = model.random_compact(&mut rng);
        let lhs = model.lambda_at_matrix(&z.base.transform(&u)?);
        let rhs = &u * model.lambda_at_matrix(&z.base) * linalg::inverse(&u).expect("unitary");
        equivariance = equivariance.max(linalg::max_abs(&(lhs - rhs)));
        let n = model.twisted_moment_matrix(z);
        image_invariants = image_invariants.max(model.invariant_mismatch(&n));
        round_trip = round_trip.max(model.twisted_moment_inverse_matrix(&n)?.distance(z));
    }
    let image = model.orbit_image_check(&mut rng, samples, 0.8)?;
    let mut fiber = (0.0f64, 0.0f64, 0.0f64, true);
    for _ in 0..10 {
        let nu = model.real_orbit_point(&model.random_real_group(&mut rng, 0.5));
        let r = model.fiber_structure_check(&nu, &[0.0, 1.0, -1.0, 10.0, -10.0, 100.0, -100.0])?;
        fiber.0 = fiber.0.max(r.max_invariant_drift);
        fiber.1 = fiber.1.max(r.max_base_drift);
        fiber.2 = fiber.2.max(r.max_conormal_defect);
        fiber.3 &= r.dimension_count_holds();
    }
    let schedule: Vec<f64> = (0..=20).map(|k| 2f64.powi(-k)).collect();
    let scaling = model.cycle_scaling_limit(&mut rng, &schedule, samples.min(2000), 0.8)?;
    Ok(GeometrySummary {
        nilpotency,
        equivariance,
        round_trip,
        image_invariants,
        real_line_distance: image.max_distance_to_real_line,
        max_real_part: image.max_real_part,
        real_part_bound: image.real_part_bound,
        base_point_distance: image.base_point_distance,
        fiber_invariant_drift: fiber.0,
        fiber_base_drift: fiber.1,
        fiber_conormal_defect: fiber.2,
        fiber_dimension_ok: fiber.3,
        scaling,
    })
}

/// Scaling-limit report for `s = 2^-k`, `k = 0..=max_exponent`, on `count` seeded samples.
pub fn scaling_sweep(
    lambda: f64,
    kappa: f64,
    seed: u64,
    max_exponent: i32,
    count: usize,
) -> Result<crate::geometry::ScalingReport> {
    let model = FlagModel::new(lambda, kappa)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let schedule: Vec<f64> = (0..=max_exponent).map(|k| 2f64.powi(-k)).collect();
    model.cycle_scaling_limit(&mut rng, &schedule, count, 0.8)
}

impl GeometrySummary {
    /// Whether the fitted rate is linear and the dyadic ratios sit in `[0.3, 0.7]`.
    pub fn linear_rate(&self) -> bool {
        (self.scaling.fitted_slope - 1.0).abs() <= 0.1
            && self
                .scaling
                .ratios
                .iter()
                .filter(|(s, _)| *s <= 1.0 / 64.0)
                .all(|(_, r)| (0.3..=0.7).contains(r))
    }

    pub fn final_defect(&self) -> f64 {
        self.scaling
            .rows
            .iter()
            .min_by(|a, b| a.s.partial_cmp(&b.s).unwrap())
            .map(|r| r.imaginary_defect.max(r.base_defect))
            .unwrap_or(f64::NAN)
    }

    pub fn checks(&self) -> Vec<CheckResult> {
        const S: &str = "geometry";
        vec![
            CheckResult::at_most(S, "nilpotent_cone", self.nilpotency, 1e-10, "trace and det of I^-1 mu"),
            CheckResult::at_most(S, "equivariance", self.equivariance, 1e-10, "lambda_{u x} = u lambda_x"),
            CheckResult::at_most(S, "twisted_round_trip", self.round_trip, 1e-9, "inverse o forward"),
            CheckResult::at_most(S, "twisted_image", self.image_invariants, 1e-8, "orbit invariants"),
            CheckResult::at_most(S, "orbit_image", self.real_line_distance, 1e-9, "distance to RP^1"),
            CheckResult::at_most(S, "base_point", self.base_point_distance, 1e-12, "nu = lambda -> [0:1]"),
            CheckResult::at_most(
                S,
                "bounded_real_part",
                self.max_real_part,
                self.real_part_bound * (1.0 + 1e-9),
                "sup ||Re mu|| vs max ||Re lambda_x||",
            ),
            CheckResult::at_most(S, "subspace", self.fiber_invariant_drift, 1e-8, "nu + i t I(n) stays on the orbit"),
            CheckResult::at_most(
                S,
                "fiber",
                self.fiber_conormal_defect.max(self.fiber_base_drift),
                1e-9,
                "offset is conormal to RP^1",
            ),
            CheckResult::flag(S, "fiber_dimension", self.fiber_dimension_ok, "1 = dim X - dim O"),
            CheckResult::flag(S, "scaling_identity", self.scaling.identity_at_one, "s = 1 is the identity"),
            CheckResult::at_most(S, "scaling_limit", self.final_defect(), 1e-5, "defect at s = 2^-20"),
            CheckResult::flag(
                S,
                "scaling_rate",
                self.linear_rate(),
                format!("fitted slope {:.4}", self.scaling.fitted_slope),
            ),
        ]
    }
}

fn geometry_suite(p: &SuiteParams) -> Result<Vec<CheckResult>> {
    let lambda = if p.family == Family::SlReal && p.n == 2 {
        p.lambda[0]
    } else {
        1.0
    };
    Ok(geometry_sweep(lambda, p.kappa, p.seed, p.geometry_samples)?.checks())
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementRow {
    pub x: Vec<f64>,
    pub formula: C64,
    pub oracle: C64,
    pub combined_stderr: f64,
    pub z_score: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementSummary {
    pub calibration: crate::oracle::Calibration,
    pub rows: Vec<AgreementRow>,
    pub misses: usize,
}

/// Calibrates at the reference point (seed `seed`) and compares at `points`
/// random regular `X` (independent stream `seed + 1`).
pub fn compact_agreement(spec: &OrbitSpec, seed: u64, samples: usize, points: usize) -> Result<AgreementSummary> {
    let x0 = spec.reference_point(0.05);
    let cal = calibrate_compact(spec, &x0, seed, samples)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xa11ce);
    let xs: Vec<(AlgebraElement, EvalResult)> = sample_evaluable(spec, &mut rng, points, 0.7, 1e-3);
    let elems: Vec<AlgebraElement> = xs.iter().map(|(x, _)| x.clone()).collect();
    let est = mc_raw_batch(spec, &elems, seed.wrapping_add(1), samples)?;
    let mut rows = Vec::new();
    let mut misses = 0;
    for ((x, r), e) in xs.iter().zip(&est) {
        let oracle = e.mean * cal.constant;
        let se = cal.constant.abs() * (e.stderr.powi(2) + (e.mean.norm() * cal.relative_stderr).powi(2)).sqrt();
        let z = (oracle - r.total).norm() / se;
        if z > 3.0 {
            misses += 1;
        }
        rows.push(AgreementRow {
            x: x.real_coords(),
            formula: r.total,
            oracle,
            combined_stderr: se,
            z_score: z,
        });
    }
    Ok(AgreementSummary {
        calibration: cal,
        rows,
        misses,
    })
}

fn oracle_suite(p: &SuiteParams) -> Result<Vec<CheckResult>> {
    const S: &str = "oracle";
    let spec = p.orbit()?;
    let mut out = Vec::new();
    match p.family {
        Family::Su => {
            let zs = haar_orbit_sample(&spec, p.seed, 1000)?;
            let lam = spec
                .algebra()
                .trace_covector(&(spec.lambda_dual_matrix() * c(spec.algebra().trace_scale(), 0.0)));
            let base = orbit_invariants(&spec, &lam)?;
            let mut drift = 0.0f64;
            for z in &zs {
                for (a, b) in orbit_invariants(&spec, z)?.iter().zip(&base) {
                    drift = drift.max((a - b).norm());
                }
            }
            out.push(CheckResult::at_most(S, "samples_on_orbit", drift, 1e-10, "eigenvalues preserved"));

            let agreement = compact_agreement(&spec, p.seed, p.oracle_samples, p.oracle_points)?;
            out.push(CheckResult::at_most(
                S,
                "agreement",
                agreement.misses as f64,
                (p.oracle_points / 10) as f64,
                format!(
                    "{} points at N = {}, c = {:.6}",
                    agreement.rows.len(),
                    p.oracle_samples,
                    agreement.calibration.constant
                ),
            ));

            // stderr ~ 1/sqrt(N) over dyadic N
            let x = spec.reference_point(0.3);
            let base_n = (p.oracle_samples / 8).max(1024);
            let ests: Vec<_> = (0..4)
                .map(|k| mc_raw_batch(&spec, std::slice::from_ref(&x), p.seed, base_n << k).map(|v| v[0]))
                .collect::<Result<_>>()?;
            let ratios: Vec<f64> = ests.windows(2).map(|w| w[0].stderr / w[1].stderr).collect();
            let ok = ratios.iter().all(|r| (2f64.sqrt() / 2.0..=2.0 * 2f64.sqrt()).contains(r));
            out.push(CheckResult::flag(S, "stderr_scaling", ok, format!("ratios {ratios:.3?}")));
            let mut worst = 0.0f64;
            for a in &ests {
                for b in &ests {
                    let z = (a.mean - b.mean).norm() / (a.stderr.powi(2) + b.stderr.powi(2)).sqrt().max(1e-300);
                    worst = worst.max(z);
                }
            }
            out.push(CheckResult::at_most(S, "dyadic_consistency", worst, 3.0, "max pairwise z"));
        }
        Family::SlReal if p.n == 2 => {
            let x = spec.cartan_element(&[0.3])?;
            let seq = damped_oscillatory_integral(&spec, &x, &p.eps_schedule, p.mesh)?;
            let exact = fourier_value(&spec, &x)?.total;
            out.push(CheckResult::at_most(
                S,
                "damped_extrapolation",
                (seq.extrapolated - exact).norm() / exact.norm(),
                0.1,
                format!("extrapolated {:.5} vs formula {:.5}", seq.extrapolated.re, exact.re),
            ));
            let fine = damped_oscillatory_integral(&spec, &x, &p.eps_schedule, (p.mesh.0 * 2, p.mesh.1 * 2))?;
            let mesh_change = seq
                .estimates
                .iter()
                .zip(&fine.estimates)
                .map(|(a, b)| (a.value - b.value).norm() / b.value.norm())
                .fold(0.0, f64::max);
            out.push(CheckResult::at_most(S, "mesh_refinement", mesh_change, 0.01, "halving the mesh"));
        }
        Family::SlReal => {
            out.push(CheckResult::flag(S, "not_applicable", true, "no oracle for sl(n, R), n > 2"));
        }
    }
    Ok(out)
}
