//! Frozen reference values, computed independently of this crate
//! (closed forms evaluated in 20-digit arithmetic; digits kept as computed).
#![allow(clippy::excessive_precision)]

use std::sync::Arc;

use approx::assert_relative_eq;
use orbit_localize::fixedpoints::MultiplicityMode;
use orbit_localize::linalg::{self, c, C64};
use orbit_localize::localize::{fourier_value, OrbitSpec};
use orbit_localize::oracle::mc_raw_batch;
use orbit_localize::{AlgebraElement, AlgebraSpec, Family};
use rand::SeedableRng;

fn algebra(family: Family, n: usize) -> Arc<AlgebraSpec> {
    Arc::new(AlgebraSpec::build(family, n).unwrap())
}

#[test]
fn killing_form_normalization() {
    let sl2 = algebra(Family::SlReal, 2);
    let h = sl2.basis_element(0);
    assert_relative_eq!(sl2.killing_form(&h, &h).unwrap().re, 8.0, epsilon = 1e-14);
    let su2 = algebra(Family::Su, 2);
    let ih = su2.basis_element(0);
    assert_relative_eq!(su2.killing_form(&ih, &ih).unwrap().re, -8.0, epsilon = 1e-14);
    // B = 6 Tr on sl(3): B(H1, H1) = 6 * 2
    let sl3 = algebra(Family::SlReal, 3);
    let h1 = sl3.basis_element(0);
    assert_relative_eq!(sl3.killing_form(&h1, &h1).unwrap().re, 12.0, epsilon = 1e-13);
}

#[test]
fn su2_closed_form() {
    let spec = OrbitSpec::with_defaults(algebra(Family::Su, 2), &[1.3]).unwrap();
    for (t, expected) in [(0.7, 1.1278624852713577313), (2.0, 0.25775068591073211763), (-2.0, 0.25775068591073211763)] {
        let x = spec.cartan_element(&[t]).unwrap();
        let f = fourier_value(&spec, &x).unwrap().total;
        assert_relative_eq!(f.re, expected, max_relative = 1e-13);
        assert!(f.im.abs() < 1e-14);
    }
}

#[test]
fn sl2_split_closed_forms() {
    let alg = algebra(Family::SlReal, 2);
    // s0 = +1: -cos(c a) / a
    let plus = OrbitSpec::new(alg.clone(), &[0.9], MultiplicityMode::MaximallySplit, 1).unwrap();
    let f = fourier_value(&plus, &plus.cartan_element(&[0.4]).unwrap()).unwrap().total;
    assert_relative_eq!(f.re, -2.3397420591948371459, max_relative = 1e-13);
    // calibrated default s0 = -1: +cos(c a) / a
    let spec = OrbitSpec::with_defaults(alg, &[4.0]).unwrap();
    assert_eq!(spec.s0(), -1);
    for (a, expected) in [(0.3, 1.2078591815889119255), (0.7, -1.346031915240940218)] {
        let f = fourier_value(&spec, &spec.cartan_element(&[a]).unwrap()).unwrap().total;
        assert_relative_eq!(f.re, expected, max_relative = 1e-13);
    }
}

#[test]
fn casimir_eigenvalues() {
    // lambda is imaginary on both real forms: (i c)^2 / B(H, H) = -c^2 / 8 and (i c)^2 / B(iH, iH) = c^2 / 8
    let split = OrbitSpec::with_defaults(algebra(Family::SlReal, 2), &[4.0]).unwrap();
    assert_relative_eq!(split.casimir_eigenvalue().re, -2.0, epsilon = 1e-13);
    let compact = OrbitSpec::with_defaults(algebra(Family::Su, 2), &[1.3]).unwrap();
    assert_relative_eq!(compact.casimir_eigenvalue().re, 0.21125, epsilon = 1e-13);
}

#[test]
fn sl3_weyl_labels() {
    let spec = OrbitSpec::with_defaults(algebra(Family::SlReal, 3), &[1.0, 0.7]).unwrap();
    let labels: Vec<String> = spec.cartan().weyl_group().iter().map(|w| w.label()).collect();
    assert_eq!(labels, ["e", "s1", "s2", "s1s2", "s2s1", "s1s2s1"]);
    let signs: Vec<i32> = spec.cartan().weyl_group().iter().map(|w| w.sign).collect();
    assert_eq!(signs, [1, -1, -1, 1, 1, -1]);
}

/// Unitary-group integral `int exp(tr(A U B U*)) dU = prod_{p<n} p! det[e^{a_i b_j}] / (V(a) V(b))`.
fn unitary_integral(a: &[C64], b: &[C64]) -> C64 {
    let n = a.len();
    let m = linalg::CMat::from_fn(n, n, |i, j| (a[i] * b[j]).exp());
    let vandermonde = |v: &[C64]| {
        let mut p = c(1.0, 0.0);
        for i in 0..n {
            for j in i + 1..n {
                p *= v[j] - v[i];
            }
        }
        p
    };
    let factorials: f64 = (1..n).map(|p| (1..=p).product::<usize>() as f64).product();
    linalg::determinant(&m) * factorials / (vandermonde(a) * vandermonde(b))
}

fn closed_form(spec: &OrbitSpec, x: &AlgebraElement) -> C64 {
    let alg = spec.algebra();
    let a = linalg::eigenvalues(&(alg.to_matrix(x).unwrap() * c(alg.trace_scale(), 0.0)));
    let b = linalg::eigenvalues(&spec.lambda_dual_matrix());
    unitary_integral(&a, &b)
}

#[test]
fn su3_fixed_point_sum_is_proportional_to_unitary_integral() {
    let spec = OrbitSpec::with_defaults(algebra(Family::Su, 3), &[1.0, 0.7]).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut ratios = Vec::new();
    while ratios.len() < 8 {
        let x = spec.algebra().random_element(&mut rng, 0.8);
        if let Ok(r) = fourier_value(&spec, &x) {
            if r.wall_distance > 0.05 {
                ratios.push(r.total / closed_form(&spec, &x));
            }
        }
    }
    for r in &ratios {
        assert!((r - ratios[0]).norm() < 1e-9 * ratios[0].norm(), "{ratios:?}");
    }
    assert!(ratios[0].im.abs() < 1e-9 * ratios[0].re.abs());
}

#[test]
fn monte_carlo_matches_unitary_integral() {
    let spec = OrbitSpec::with_defaults(algebra(Family::Su, 3), &[1.0, 0.7]).unwrap();
    let x = spec.reference_point(0.3);
    let est = mc_raw_batch(&spec, std::slice::from_ref(&x), 99, 200_000).unwrap()[0];
    let exact = closed_form(&spec, &x);
    assert!((est.mean - exact).norm() < 4.0 * est.stderr, "{est:?} vs {exact}");
}
