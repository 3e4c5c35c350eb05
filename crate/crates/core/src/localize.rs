//! Evaluation of the fixed-point formula
//!
//! ```text
//! F(X) = sum_x d_x exp(<X, lambda_x>) / (a_{x,1}(X) ... a_{x,n}(X))
//! ```
//!
//! and the analytic checks it should satisfy.
//!
//! `X` is first conjugated into the standard (diagonal) Cartan and then into
//! the chamber on which every positive root takes positive value (real part
//! plus imaginary part). Multiplicities that alternate with `det(w)` are only
//! conjugation-invariant with respect to such a fixed chamber.

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{AlgebraElement, AlgebraSpec, Family};
use crate::cartan::{reduce_to_cartan, CartanDatum, Reduction};
use crate::error::{Error, Result};
use crate::fixedpoints::{
    assign_multiplicities, closed_orbit_support, enumerate_fixed_points, FixedPoint, MultiplicityAssignment,
    MultiplicityMode,
};
use crate::linalg::{self, c, CMat, C64, I};

/// Relative distance to a root hyperplane below which evaluation is refused.
pub const TAU_WALL: f64 = 1e-8;

/// Orientation sign for the maximally split mode, fixed by comparison with
/// the damped orbit integral on `sl(2, R)` (see `oracle::calibrate_split_sign`).
pub const CALIBRATED_SPLIT_S0: i32 = -1;

#[derive(Debug, Clone)]
pub struct OrbitSpec {
    algebra: Arc<AlgebraSpec>,
    cartan: CartanDatum,
    lambda_real: Vec<f64>,
    lambda: DVector<C64>,
    mode: MultiplicityMode,
    s0: i32,
    fixed_points: Vec<FixedPoint>,
    multiplicities: MultiplicityAssignment,
}

/// Default multiplicity mode for a family.
pub fn default_mode(family: Family) -> MultiplicityMode {
    match family {
        Family::Su => MultiplicityMode::Compact,
        Family::SlReal => MultiplicityMode::MaximallySplit,
    }
}

impl OrbitSpec {
    /// Orbit of `lambda = i lambda'`, where `lambda_real[k]` is the value of
    /// `lambda'` on the `k`-th real Cartan basis element (`iH_k` for `su`,
    /// `H_k` for `sl_real`).
    pub fn new(algebra: Arc<AlgebraSpec>, lambda_real: &[f64], mode: MultiplicityMode, s0: i32) -> Result<Self> {
        let r = algebra.rank();
        if lambda_real.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: lambda_real.len(),
            });
        }
        if lambda_real.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("lambda coordinates must be finite".into()));
        }
        // lambda(H_k) = i lambda'(H_k); for su the real basis is iH_k, so the
        // factor i cancels.
        let lambda: DVector<C64> = match algebra.family() {
            Family::Su => DVector::from_iterator(r, lambda_real.iter().map(|v| c(*v, 0.0))),
            Family::SlReal => DVector::from_iterator(r, lambda_real.iter().map(|v| c(0.0, *v))),
        };

        let cartan = match algebra.family() {
            // positive system on which lambda is antidominant
            Family::Su => {
                let probe = CartanDatum::standard_upper(algebra.clone())?;
                crate::fixedpoints::check_regular_lambda(&probe, &lambda)?;
                let lam = lambda.clone();
                CartanDatum::standard(algebra.clone(), move |root| probe.dual_form(&lam, &root.coords).re < 0.0)?
            }
            Family::SlReal => CartanDatum::standard_upper(algebra.clone())?,
        };

        let mut fixed_points = enumerate_fixed_points(&cartan, &lambda)?;
        let support = closed_orbit_support(&cartan, &fixed_points)?;
        for (fp, on) in fixed_points.iter_mut().zip(&support) {
            fp.in_closed_orbit = *on;
        }
        let multiplicities = assign_multiplicities(algebra.family(), &fixed_points, &support, &mode, s0)?;
        multiplicities.apply(&mut fixed_points);

        Ok(OrbitSpec {
            algebra,
            cartan,
            lambda_real: lambda_real.to_vec(),
            lambda,
            mode,
            s0,
            fixed_points,
            multiplicities,
        })
    }

    /// Orbit with the family's default mode (and the calibrated split sign).
    pub fn with_defaults(algebra: Arc<AlgebraSpec>, lambda_real: &[f64]) -> Result<Self> {
        let mode = default_mode(algebra.family());
        Self::new(algebra, lambda_real, mode, CALIBRATED_SPLIT_S0)
    }

    /// Same algebra, mode and sign with a different orbit parameter.
    pub fn with_lambda(&self, lambda_real: &[f64]) -> Result<Self> {
        Self::new(self.algebra.clone(), lambda_real, self.mode.clone(), self.s0)
    }

    pub fn with_s0(&self, s0: i32) -> Result<Self> {
        Self::new(self.algebra.clone(), &self.lambda_real, self.mode.clone(), s0)
    }

    pub fn algebra(&self) -> &Arc<AlgebraSpec> {
        &self.algebra
    }

    pub fn cartan(&self) -> &CartanDatum {
        &self.cartan
    }

    pub fn lambda_real(&self) -> &[f64] {
        &self.lambda_real
    }

    /// `lambda` as values on the complex Cartan basis.
    pub fn lambda(&self) -> &DVector<C64> {
        &self.lambda
    }

    pub fn mode(&self) -> &MultiplicityMode {
        &self.mode
    }

    pub fn s0(&self) -> i32 {
        self.s0
    }

    pub fn fixed_points(&self) -> &[FixedPoint] {
        &self.fixed_points
    }

    pub fn multiplicities(&self) -> &MultiplicityAssignment {
        &self.multiplicities
    }

    /// `p2(lambda) = B*(lambda, lambda)`.
    pub fn casimir_eigenvalue(&self) -> C64 {
        self.cartan.dual_form(&self.lambda, &self.lambda)
    }

    /// Defining-representation matrix of `I^{-1}(lambda)`, where `lambda` is
    /// extended by zero on the root spaces.
    pub fn lambda_dual_matrix(&self) -> CMat {
        let r = self.cartan.rank();
        let kt = self.cartan.killing();
        let coeffs = linalg::inverse(kt).expect("Cartan Killing matrix is invertible") * &self.lambda;
        let mut m = CMat::zeros(self.algebra.n(), self.algebra.n());
        for k in 0..r {
            m += self.algebra.to_matrix(&self.cartan.basis()[k]).expect("dimension") * coeffs[k];
        }
        m
    }

    /// Real Cartan coordinates (on the real basis used for `lambda'`) of the
    /// element with complex Cartan coordinates `x`.
    pub fn real_cartan_coords(&self, x: &DVector<C64>) -> Vec<f64> {
        match self.algebra.family() {
            Family::Su => x.iter().map(|z| (z / I).re).collect(),
            Family::SlReal => x.iter().map(|z| z.re).collect(),
        }
    }

    /// Small regular element `scale * diag(n-1, n-3, ..., 1-n)` of the real
    /// Cartan (times `i` for `su`), used as a calibration reference.
    pub fn reference_point(&self, scale: f64) -> AlgebraElement {
        let n = self.algebra.n();
        let mut acc = 0.0;
        let coords: Vec<f64> = (0..n - 1)
            .map(|i| {
                acc += scale * (n as f64 - 1.0 - 2.0 * i as f64);
                acc
            })
            .collect();
        self.cartan_element(&coords).expect("rank-sized coordinates")
    }

    /// Real element of the standard Cartan with the given real coordinates.
    pub fn cartan_element(&self, coords: &[f64]) -> Result<AlgebraElement> {
        let r = self.cartan.rank();
        if coords.len() != r {
            return Err(Error::DimensionMismatch {
                expected: r,
                found: coords.len(),
            });
        }
        let mut v = vec![0.0; self.algebra.dim()];
        // the first `rank` basis elements of both realizations span the diagonal Cartan
        v[..r].copy_from_slice(coords);
        Ok(AlgebraElement::from_real(&v))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub label: String,
    /// `<X, lambda_x>`.
    pub exponent: C64,
    /// `prod a_{x,j}(X)`.
    pub denominator: C64,
    pub multiplicity: i32,
    pub value: C64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalResult {
    pub total: C64,
    pub terms: Vec<Term>,
    /// `X` is not conjugate into the support Cartan; the value is exactly 0.
    pub support_empty: bool,
    /// Cartan coordinates of the conjugated element used in the sum.
    pub cartan_coords: Vec<C64>,
    /// Weyl label of the element moving `X` into the positive chamber.
    pub chamber: String,
    /// `min |a(X)| / max(1, max |a(X)|)` over roots.
    pub wall_distance: f64,
}

impl EvalResult {
    fn empty() -> Self {
        EvalResult {
            total: c(0.0, 0.0),
            terms: Vec::new(),
            support_empty: true,
            cartan_coords: Vec::new(),
            chamber: String::new(),
            wall_distance: f64::NAN,
        }
    }
}

fn chamber_key(z: C64) -> f64 {
    z.re + z.im
}

/// Moves Cartan coordinates into the chamber where every positive root has
/// positive key `Re + Im`. Returns the Weyl index and the moved coordinates.
fn canonical_chamber(cartan: &CartanDatum, x: &DVector<C64>) -> (usize, DVector<C64>) {
    let positive = cartan.positive_roots();
    let mut best: Option<(usize, DVector<C64>, f64)> = None;
    for (idx, w) in cartan.weyl_group().iter().enumerate() {
        let y = w.act_on_cartan(x);
        let worst = positive
            .iter()
            .map(|&a| chamber_key(cartan.roots()[a].eval(&y)))
            .fold(f64::INFINITY, f64::min);
        if worst > 0.0 {
            return (idx, y);
        }
        if best.as_ref().is_none_or(|b| worst > b.2) {
            best = Some((idx, y, worst));
        }
    }
    let (idx, y, _) = best.expect("Weyl group is never empty");
    (idx, y)
}

/// `F_lambda(X)` through the fixed-point sum.
pub fn fourier_value(spec: &OrbitSpec, x: &AlgebraElement) -> Result<EvalResult> {
    let algebra = spec.algebra();
    if x.dim() != algebra.dim() {
        return Err(Error::DimensionMismatch {
            expected: algebra.dim(),
            found: x.dim(),
        });
    }
    if !algebra.is_regular_semisimple(x)? {
        return Err(Error::NotRegular);
    }
    let cartan = spec.cartan();
    let coords = match reduce_to_cartan(x, cartan)? {
        Reduction::NotConjugate => return Ok(EvalResult::empty()),
        Reduction::Conjugate { cartan_coords, .. } => cartan_coords,
    };
    evaluate_in_cartan(spec, &coords)
}

/// The fixed-point sum at an element of the standard Cartan, given by its
/// complex Cartan coordinates.
pub fn evaluate_in_cartan(spec: &OrbitSpec, coords: &DVector<C64>) -> Result<EvalResult> {
    let cartan = spec.cartan();
    let (chamber_idx, y) = canonical_chamber(cartan, coords);
    let values = cartan.root_values(&y);
    let hi = values.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let lo = values.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let wall_distance = lo / hi.max(1.0);
    if wall_distance <= TAU_WALL {
        return Err(Error::Degenerate { distance: wall_distance });
    }

    let mut total = c(0.0, 0.0);
    let mut terms = Vec::with_capacity(spec.fixed_points().len());
    for fp in spec.fixed_points() {
        let exponent = y.dot(&fp.lambda_x);
        let denominator: C64 = fp.borel_roots.iter().map(|&a| values[a]).product();
        let value = if fp.multiplicity == 0 {
            c(0.0, 0.0)
        } else {
            exponent.exp() / denominator * fp.multiplicity as f64
        };
        total += value;
        terms.push(Term {
            label: fp.label.clone(),
            exponent,
            denominator,
            multiplicity: fp.multiplicity,
            value,
        });
    }
    Ok(EvalResult {
        total,
        terms,
        support_empty: false,
        cartan_coords: y.iter().cloned().collect(),
        chamber: cartan.weyl_group()[chamber_idx].label(),
        wall_distance,
    })
}

/// One result per sample, in input order; failures are kept as per-row errors.
pub fn fourier_grid(spec: &OrbitSpec, samples: &[AlgebraElement]) -> Vec<Result<EvalResult>> {
    samples.par_iter().map(|x| fourier_value(spec, x)).collect()
}

/// Basis `v_k` with `B(v_k, v_l) = eps_k delta_kl`, `eps_k = +-1`.
pub fn killing_orthonormal_basis(algebra: &AlgebraSpec) -> Vec<(AlgebraElement, f64)> {
    let eig = algebra.killing_matrix().clone().symmetric_eigen();
    (0..algebra.dim())
        .map(|k| {
            let lam = eig.eigenvalues[k];
            let v: Vec<f64> = eig.eigenvectors.column(k).iter().map(|q| q / lam.abs().sqrt()).collect();
            (AlgebraElement::from_real(&v), lam.signum())
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct CasimirReport {
    pub f: C64,
    /// Central-difference `d(p2) F`.
    pub laplacian: C64,
    pub eigenvalue: C64,
    /// `|d(p2) F - p2(lambda) F| / |F|`, or the absolute residual when `relative` is false.
    pub residual: f64,
    pub relative: bool,
}

/// Applies the invariant operator `d(p2) = sum_k eps_k d^2/dv_k^2` by central
/// differences with step `h` and compares with `B*(lambda, lambda) F`.
pub fn casimir_check(spec: &OrbitSpec, x: &AlgebraElement, h: f64) -> Result<CasimirReport> {
    let f0 = fourier_value(spec, x)?.total;
    let mut lap = c(0.0, 0.0);
    // sixth-order central stencil: on split forms the signed sum cancels large
    // individual second derivatives, which swamps low-order truncation error
    const W: [f64; 3] = [3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
    let at = |t: f64, v: &AlgebraElement| fourier_value(spec, &x.add(&v.scale(t))).map(|r| r.total);
    for (v, eps) in killing_orthonormal_basis(spec.algebra()) {
        let mut d2 = f0 * (-49.0 / 18.0);
        for (k, w) in W.iter().enumerate() {
            let t = (k + 1) as f64 * h;
            d2 += (at(t, &v)? + at(-t, &v)?) * *w;
        }
        lap += d2 * (eps / (h * h));
    }
    let eigenvalue = spec.casimir_eigenvalue();
    let abs = (lap - eigenvalue * f0).norm();
    let relative = f0.norm() >= 1e-12;
    Ok(CasimirReport {
        f: f0,
        laplacian: lap,
        eigenvalue,
        residual: if relative { abs / f0.norm() } else { abs },
        relative,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    /// `|F(Ad(g) X) - F(X)|`; `None` when `Ad(g) X` left the regular set.
    pub ad_difference: Option<f64>,
    /// `(label, |F_{w lambda}(X) - F_lambda(X)|)` for every Weyl element (compact mode only).
    pub weyl_differences: Vec<(String, f64)>,
}

impl InvarianceReport {
    pub fn max_difference(&self) -> f64 {
        self.weyl_differences
            .iter()
            .map(|(_, d)| *d)
            .chain(self.ad_difference)
            .fold(0.0, f64::max)
    }
}

pub fn invariance_checks(spec: &OrbitSpec, x: &AlgebraElement, g: &CMat) -> Result<InvarianceReport> {
    let algebra = spec.algebra();
    let fx = fourier_value(spec, x)?.total;
    let gx = algebra.adjoint_action(g, x)?;
    let gx = AlgebraElement::from_real(&gx.real_coords());
    let ad_difference = match fourier_value(spec, &gx) {
        Ok(r) => Some((r.total - fx).norm()),
        Err(Error::NotRegular | Error::Indeterminate { .. } | Error::Degenerate { .. }) => None,
        Err(e) => return Err(e),
    };
    let mut weyl_differences = Vec::new();
    if *spec.mode() == MultiplicityMode::Compact {
        for w in spec.cartan().weyl_group() {
            let moved = w.act(spec.lambda());
            let moved_real: Vec<f64> = moved.iter().map(|z| z.re).collect();
            let other = spec.with_lambda(&moved_real)?;
            let fw = fourier_value(&other, x)?.total;
            weyl_differences.push((w.label(), (fw - fx).norm()));
        }
    }
    Ok(InvarianceReport {
        ad_difference,
        weyl_differences,
    })
}
