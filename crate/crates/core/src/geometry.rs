//! The flag variety of `sl(2, C)` as `CP^1`, with moment and twisted moment maps.
//!
//! A point `[z0 : z1]` is the line `v = (z0, z1)`; its Borel subalgebra is the
//! stabilizer of `v`. The base point `[0 : 1]` has the lower triangular Borel,
//! which contains the diagonal Cartan and the negative root space.
//!
//! Cotangent vectors are stored in the affine chart owning the larger
//! homogeneous coordinate: chart 0 uses `w = z1 / z0`, chart 1 uses
//! `w' = z0 / z1`, and the fiber coordinates are related by `p' = -p w^2`.
//! The moment map is `mu(zeta)(X) = Tr(X M)`, with
//!
//! ```text
//! chart 0: M = -p [[w, -1], [w^2, -w]]      chart 1: M = p' [[w', -w'^2], [1, -w']]
//! ```
//!
//! so `I^{-1} mu = M / 4` (the Killing form is `4 Tr`). Real and complex
//! pairings on `T*CP^1` differ by the factor 2: the real pairing of `p dw` with
//! a real tangent vector `dw = t` is `2 Re(p t)`.
//!
//! The compact form is `U = g SU(2) g^{-1}` with `g = exp(kappa * i(E - F))`;
//! `kappa = 0` gives `SU(2)` itself.

use std::sync::Arc;

use num_complex::ComplexFloat;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::algebra::{AlgebraSpec, Covector, Family};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, RMat, C64, I};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FlagPoint {
    pub z: [C64; 2],
    /// Index of the affine chart (the larger coordinate).
    pub chart: usize,
}

impl FlagPoint {
    /// Normalizes to unit length with the chart coordinate real and positive.
    pub fn new(z0: C64, z1: C64) -> Result<Self> {
        let norm = (z0.norm_sqr() + z1.norm_sqr()).sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidArgument("homogeneous coordinates must be nonzero".into()));
        }
        let chart = if z0.norm() >= z1.norm() { 0 } else { 1 };
        let lead = if chart == 0 { z0 } else { z1 };
        let phase = lead.conj() / lead.norm();
        Ok(FlagPoint {
            z: [z0 * phase / norm, z1 * phase / norm],
            chart,
        })
    }

    pub fn from_vector(v: &[C64]) -> Result<Self> {
        Self::new(v[0], v[1])
    }

    /// Affine coordinate in the owning chart.
    pub fn affine(&self) -> C64 {
        if self.chart == 0 {
            self.z[1] / self.z[0]
        } else {
            self.z[0] / self.z[1]
        }
    }

    pub fn vector(&self) -> [C64; 2] {
        self.z
    }

    /// `|Im(z0 conj(z1))|` for the unit representative: zero exactly on `RP^1`.
    pub fn distance_to_real_line(&self) -> f64 {
        (self.z[0] * self.z[1].conj()).im.abs()
    }

    /// Action of an invertible 2x2 matrix.
    pub fn transform(&self, g: &CMat) -> Result<Self> {
        let v = g * nalgebra::DVector::from_row_slice(&self.z);
        Self::new(v[0], v[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CotangentPoint {
    pub base: FlagPoint,
    /// Fiber coordinate in the base point's chart.
    pub p: C64,
}

impl CotangentPoint {
    pub fn new(base: FlagPoint, p: C64) -> Self {
        CotangentPoint { base, p }
    }

    pub fn zero(base: FlagPoint) -> Self {
        CotangentPoint { base, p: c(0.0, 0.0) }
    }

    /// Fiber coordinate in `chart`; `None` if the base is at that chart's infinity.
    pub fn p_in_chart(&self, chart: usize) -> Option<C64> {
        if chart == self.base.chart {
            return Some(self.p);
        }
        let w = self.base.affine();
        if w.norm() == 0.0 {
            return None;
        }
        // p' = -p w^2 in both directions, with w the current chart coordinate
        Some(-self.p * w * w)
    }

    /// Fiber scaling `zeta -> s zeta`.
    pub fn scale(&self, s: f64) -> Self {
        CotangentPoint {
            base: self.base,
            p: self.p * s,
        }
    }

    pub fn distance(&self, other: &CotangentPoint) -> f64 {
        let base = (0..2)
            .map(|i| (self.base.z[i] - other.base.z[i]).norm())
            .fold(0.0, f64::max);
        let fiber = match other.p_in_chart(self.base.chart) {
            Some(q) => (self.p - q).norm(),
            None => f64::INFINITY,
        };
        base.max(fiber)
    }
}

fn real_part_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.re * z.re).sum::<f64>().sqrt()
}

/// `CP^1` model for `sl(2)` with orbit parameter `lambda(H) = i c` on the
/// diagonal `H = diag(1, -1)`.
#[derive(Debug, Clone)]
pub struct FlagModel {
    algebra: Arc<AlgebraSpec>,
    kappa: f64,
    g: CMat,
    g_inv: CMat,
    /// `lambda(H)`.
    lambda_h: C64,
}

#[derive(Debug, Clone, Serialize)]
pub struct OrbitImageReport {
    pub samples: usize,
    pub max_distance_to_real_line: f64,
    pub max_invariant_mismatch: f64,
    /// `sup ||Re mu(mu_lambda^{-1}(nu))||` over the samples.
    pub max_real_part: f64,
    /// `max_x ||Re lambda_x||` over the whole flag variety.
    pub real_part_bound: f64,
    pub base_point_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FiberReport {
    pub base: FlagPoint,
    /// `(t, orbit invariant drift, base drift, |Re offset| / |offset|)`.
    pub rows: Vec<(f64, f64, f64, f64)>,
    pub max_invariant_drift: f64,
    pub max_base_drift: f64,
    pub max_conormal_defect: f64,
    pub nilradical_dim: usize,
    pub orbit_dim: usize,
    pub flag_real_dim: usize,
}

impl FiberReport {
    pub fn dimension_count_holds(&self) -> bool {
        self.nilradical_dim == self.flag_real_dim - self.orbit_dim
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingRow {
    pub s: f64,
    pub base_defect: f64,
    pub imaginary_defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// `defect(s) / defect(2 s)` for consecutive dyadic rows.
    pub ratios: Vec<(f64, f64)>,
    /// Least-squares slope of `log defect` against `log s` for `s <= 1/64`.
    pub fitted_slope: f64,
    /// `s = 1` leaves every sample unchanged.
    pub identity_at_one: bool,
}

impl FlagModel {
    pub fn new(lambda_real: f64, kappa: f64) -> Result<Self> {
        if !lambda_real.is_finite() || lambda_real == 0.0 {
            return Err(Error::NonRegularLambda("lambda(H) must be nonzero".into()));
        }
        if !kappa.is_finite() {
            return Err(Error::InvalidArgument("kappa must be finite".into()));
        }
        let algebra = Arc::new(AlgebraSpec::build(Family::SlReal, 2)?);
        let gen = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), I, -I, c(0.0, 0.0)]);
        let g = linalg::expm(&(gen * c(kappa, 0.0)));
        let g_inv = linalg::inverse(&g).expect("exponential is invertible");
        Ok(FlagModel {
            algebra,
            kappa,
            g,
            g_inv,
            lambda_h: c(0.0, lambda_real),
        })
    }

    pub fn algebra(&self) -> &Arc<AlgebraSpec> {
        &self.algebra
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `l` with `I^{-1}(lambda) = l H`.
    fn ell(&self) -> C64 {
        self.lambda_h / 8.0
    }

    pub fn base_point() -> FlagPoint {
        FlagPoint::new(c(0.0, 0.0), c(1.0, 0.0)).expect("nonzero")
    }

    /// Defining-representation matrix of `I^{-1} mu(zeta)`.
    pub fn moment_matrix(&self, zeta: &CotangentPoint) -> CMat {
        let w = zeta.base.affine();
        let p = zeta.p;
        let m = if zeta.base.chart == 0 {
            CMat::from_row_slice(2, 2, &[w, c(-1.0, 0.0), w * w, -w]) * (-p)
        } else {
            CMat::from_row_slice(2, 2, &[w, -w * w, c(1.0, 0.0), -w]) * p
        };
        m / c(4.0, 0.0)
    }

    pub fn moment(&self, zeta: &CotangentPoint) -> Covector {
        self.algebra.trace_covector(&(self.moment_matrix(zeta) * c(4.0, 0.0)))
    }

    /// Element of `U` for a Haar-random `SU(2)` element.
    pub fn random_compact<R: Rng + ?Sized>(&self, rng: &mut R) -> CMat {
        let u = crate::oracle::haar_unitary(rng, 2);
        let det = linalg::determinant(&u);
        let u = u * (c(0.0, -det.arg() / 2.0)).exp();
        &self.g * u * &self.g_inv
    }

    /// The Cartan element `H_x`: the element of the `U`-stabilizer torus of `x`
    /// that corresponds to `H` under `b_x / n_x = h`.
    pub fn cartan_at(&self, x: &FlagPoint) -> CMat {
        let v = x.vector();
        let gv = &self.g_inv * nalgebra::DVector::from_row_slice(&v);
        let perp = nalgebra::DVector::from_row_slice(&[-gv[1].conj(), gv[0].conj()]);
        let w = &self.g * perp;
        let p = CMat::from_row_slice(2, 2, &[w[0], v[0], w[1], v[1]]);
        let p_inv = linalg::inverse(&p).expect("w and v are independent");
        &p * CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]) * p_inv
    }

    /// Matrix of `I^{-1}(lambda_x)`.
    pub fn lambda_at_matrix(&self, x: &FlagPoint) -> CMat {
        self.cartan_at(x) * self.ell()
    }

    pub fn lambda_at(&self, x: &FlagPoint) -> Covector {
        self.algebra.trace_covector(&(self.lambda_at_matrix(x) * c(4.0, 0.0)))
    }

    /// Matrix of `I^{-1}(mu(zeta) + lambda_x)`.
    pub fn twisted_moment_matrix(&self, zeta: &CotangentPoint) -> CMat {
        self.moment_matrix(zeta) + self.lambda_at_matrix(&zeta.base)
    }

    pub fn twisted_moment(&self, zeta: &CotangentPoint) -> Covector {
        self.algebra.trace_covector(&(self.twisted_moment_matrix(zeta) * c(4.0, 0.0)))
    }

    /// `|det(N) + l^2| + |tr N|` relative to the scale of `N`: zero iff `N` lies on the orbit.
    pub fn invariant_mismatch(&self, n: &CMat) -> f64 {
        let l = self.ell();
        let scale = linalg::max_abs(n).max(l.norm());
        let tr = linalg::trace(n).norm() / scale;
        (linalg::determinant(n) + l * l).norm() / (scale * scale) + tr
    }

    /// Inverse of the twisted moment map on matrices `N = I^{-1}(nu)`.
    pub fn twisted_moment_inverse_matrix(&self, n: &CMat) -> Result<CotangentPoint> {
        let mismatch = self.invariant_mismatch(n);
        if mismatch > 1e-8 {
            return Err(Error::OffOrbit { mismatch });
        }
        let l = self.ell();
        // the base point is the (-l)-eigenline
        let v = linalg::null_vector(&(n + CMat::identity(2, 2) * l));
        let base = FlagPoint::new(v[0], v[1])?;
        let m = (n - self.lambda_at_matrix(&base)) * c(4.0, 0.0);
        let w = base.affine();
        let shape = if base.chart == 0 {
            CMat::from_row_slice(2, 2, &[w, c(-1.0, 0.0), w * w, -w]) * c(-1.0, 0.0)
        } else {
            CMat::from_row_slice(2, 2, &[w, -w * w, c(1.0, 0.0), -w])
        };
        let num: C64 = shape.iter().zip(m.iter()).map(|(a, b)| a.conj() * b).sum();
        let den: f64 = shape.iter().map(|a| a.norm_sqr()).sum();
        Ok(CotangentPoint::new(base, num / den))
    }

    pub fn twisted_moment_inverse(&self, nu: &Covector) -> Result<CotangentPoint> {
        let y = self.algebra.iso_i_inv(nu)?;
        let n = self.algebra.to_matrix(&y)?;
        self.twisted_moment_inverse_matrix(&n)
    }

    /// `I^{-1}` of the real orbit point `Ad*(h) lambda`.
    pub fn real_orbit_point(&self, h: &CMat) -> CMat {
        let hinv = linalg::inverse(h).expect("invertible");
        h * CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]) * hinv * self.ell()
    }

    /// Random element of `SL(2, R)`: product of exponentials of Gaussian real elements.
    pub fn random_real_group<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> CMat {
        self.algebra.random_group_element(rng, scale, 3)
    }

    /// Random cotangent vector with Gaussian homogeneous and fiber coordinates.
    pub fn random_cotangent<R: Rng + ?Sized>(&self, rng: &mut R, fiber_scale: f64) -> CotangentPoint {
        let mut g = || -> f64 { rng.sample(StandardNormal) };
        let base = FlagPoint::new(c(g(), g()), c(g(), g())).expect("nonzero with probability one");
        CotangentPoint::new(base, c(g(), g()) * fiber_scale)
    }

    /// `max_x ||Re lambda_x||` over `CP^1`: Bloch-sphere grid plus local refinement.
    pub fn real_part_bound(&self) -> f64 {
        let point = |theta: f64, phi: f64| {
            let x = FlagPoint::new(c((theta / 2.0).cos(), 0.0), c(0.0, phi).exp() * (theta / 2.0).sin());
            x.map(|x| real_part_norm(&self.lambda_at_matrix(&x))).unwrap_or(0.0)
        };
        let (nt, np) = (120, 240);
        let mut best = (0.0, 0.0, f64::NEG_INFINITY);
        for i in 0..=nt {
            let theta = std::f64::consts::PI * i as f64 / nt as f64;
            for j in 0..np {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / np as f64;
                let v = point(theta, phi);
                if v > best.2 {
                    best = (theta, phi, v);
                }
            }
        }
        let mut step = std::f64::consts::PI / nt as f64;
        while step > 1e-12 {
            let mut moved = false;
            for (dt, dp) in [(step, 0.0), (-step, 0.0), (0.0, step), (0.0, -step)] {
                let v = point(best.0 + dt, best.1 + dp);
                if v > best.2 {
                    best = (best.0 + dt, best.1 + dp, v);
                    moved = true;
                }
            }
            if !moved {
                step /= 2.0;
            }
        }
        best.2
    }

    /// Real-orbit samples `Ad*(h) lambda` for random `h` in `SL(2, R)`.
    fn real_orbit_samples<R: Rng + ?Sized>(&self, rng: &mut R, count: usize, spread: f64) -> Vec<CMat> {
        (0..count)
            .map(|_| self.real_orbit_point(&self.random_real_group(rng, spread)))
            .collect()
    }

    /// Image of the real orbit under `pi o mu_lambda^{-1}` and the real-part bound.
    pub fn orbit_image_check<R: Rng + ?Sized>(&self, rng: &mut R, count: usize, spread: f64) -> Result<OrbitImageReport> {
        let bound = self.real_part_bound();
        let base = self.twisted_moment_inverse_matrix(&self.real_orbit_point(&CMat::identity(2, 2)))?;
        let base_point_distance = (0..2)
            .map(|i| (base.base.z[i] - FlagModel::base_point().z[i]).norm())
            .fold(0.0, f64::max);
        let mut report = OrbitImageReport {
            samples: count,
            max_distance_to_real_line: 0.0,
            max_invariant_mismatch: 0.0,
            max_real_part: 0.0,
            real_part_bound: bound,
            base_point_distance,
        };
        for nu in self.real_orbit_samples(rng, count, spread) {
            let zeta = self.twisted_moment_inverse_matrix(&nu)?;
            report.max_distance_to_real_line = report.max_distance_to_real_line.max(zeta.base.distance_to_real_line());
            report.max_invariant_mismatch = report.max_invariant_mismatch.max(self.invariant_mismatch(&nu));
            report.max_real_part = report.max_real_part.max(real_part_norm(&self.moment_matrix(&zeta)));
        }
        Ok(report)
    }

    /// Real matrices `N` with `N v = 0` and image in `v` (the real nilradical at a real point).
    fn real_nilradical(&self, x: &FlagPoint) -> Vec<RMat> {
        // phase-normalized real points have real coordinates
        let v = [x.z[0].re, x.z[1].re];
        let perp = [-v[1], v[0]];
        // coordinates (a, b, c) of [[a, b], [c, -a]]
        let mut eqs = RMat::zeros(4, 3);
        // N v = 0
        eqs.set_row(0, &nalgebra::RowVector3::new(v[0], v[1], 0.0));
        eqs.set_row(1, &nalgebra::RowVector3::new(-v[1], 0.0, v[0]));
        // perp^T N = 0
        eqs.set_row(2, &nalgebra::RowVector3::new(perp[0], 0.0, perp[1]));
        eqs.set_row(3, &nalgebra::RowVector3::new(-perp[1], perp[0], 0.0));
        linalg::real_null_space(&eqs, 1e-10)
            .into_iter()
            .map(|s| RMat::from_row_slice(2, 2, &[s[0], s[1], s[2], -s[0]]))
            .collect()
    }

    /// Real dimension of the `SL(2, R)`-orbit through `x` (rank of the infinitesimal action).
    fn real_orbit_dim(&self, x: &FlagPoint) -> usize {
        let v = nalgebra::DVector::from_row_slice(&x.z);
        let mut tangent = RMat::zeros(2, 3);
        for k in 0..3 {
            let e = self.algebra.basis_matrix(k);
            let dv = e * &v;
            // tangent of the line: component of dv transverse to v, in the chart
            let w_dot = if x.chart == 0 {
                (dv[1] * v[0] - v[1] * dv[0]) / (v[0] * v[0])
            } else {
                (dv[0] * v[1] - v[0] * dv[1]) / (v[1] * v[1])
            };
            tangent[(0, k)] = w_dot.re;
            tangent[(1, k)] = w_dot.im;
        }
        let sv = tangent.svd(false, false).singular_values;
        let smax = sv.iter().cloned().fold(0.0, f64::max);
        sv.iter().filter(|s| **s > 1e-10 * smax.max(1e-300)).count()
    }

    /// Translates `nu` along `i t I(n)` for `n` in the real nilradical at its
    /// base point and measures orbit drift and the conormal character of the
    /// fiber offset.
    pub fn fiber_structure_check(&self, nu: &CMat, ts: &[f64]) -> Result<FiberReport> {
        let zeta0 = self.twisted_moment_inverse_matrix(nu)?;
        let x0 = zeta0.base;
        let nil = self.real_nilradical(&x0);
        let n = nil
            .first()
            .ok_or_else(|| Error::Construction("empty real nilradical".into()))?
            .map(|v| c(v, 0.0));
        let mut rows = Vec::new();
        let (mut inv, mut base_drift, mut conormal) = (0.0f64, 0.0f64, 0.0f64);
        for &t in ts {
            let moved = nu + &n * c(0.0, t);
            let drift = self.invariant_mismatch(&moved);
            let zeta = self.twisted_moment_inverse_matrix(&moved)?;
            let bd = (0..2).map(|i| (zeta.base.z[i] - x0.z[i]).norm()).fold(0.0, f64::max);
            let q = zeta.p_in_chart(x0.chart).unwrap_or(zeta.p);
            let offset = q - zeta0.p;
            let defect = if offset.norm() > 0.0 {
                offset.re.abs() / offset.norm()
            } else {
                0.0
            };
            inv = inv.max(drift);
            base_drift = base_drift.max(bd);
            conormal = conormal.max(defect);
            rows.push((t, drift, bd, defect));
        }
        Ok(FiberReport {
            base: x0,
            rows,
            max_invariant_drift: inv,
            max_base_drift: base_drift,
            max_conormal_defect: conormal,
            nilradical_dim: nil.len(),
            orbit_dim: self.real_orbit_dim(&x0),
            flag_real_dim: 2,
        })
    }

    /// Samples `s mu_lambda^{-1}(nu)` over the real orbit and measures the
    /// distance of the base point to `RP^1` and `||Re mu||`.
    pub fn cycle_scaling_limit<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        schedule: &[f64],
        count: usize,
        spread: f64,
    ) -> Result<ScalingReport> {
        if schedule.iter().any(|s| !(*s > 0.0 && *s <= 1.0)) {
            return Err(Error::InvalidArgument("scaling factors must lie in (0, 1]".into()));
        }
        let zetas: Vec<CotangentPoint> = self
            .real_orbit_samples(rng, count, spread)
            .iter()
            .map(|nu| self.twisted_moment_inverse_matrix(nu))
            .collect::<Result<_>>()?;
        let identity_at_one = zetas.iter().all(|z| z.scale(1.0) == *z);
        let rows: Vec<ScalingRow> = schedule
            .iter()
            .map(|&s| {
                let mut row = ScalingRow {
                    s,
                    base_defect: 0.0,
                    imaginary_defect: 0.0,
                };
                for z in &zetas {
                    let scaled = z.scale(s);
                    row.base_defect = row.base_defect.max(scaled.base.distance_to_real_line());
                    row.imaginary_defect = row.imaginary_defect.max(real_part_norm(&self.moment_matrix(&scaled)));
                }
                row
            })
            .collect();
        let mut ratios = Vec::new();
        for a in &rows {
            if let Some(b) = rows.iter().find(|b| (b.s - 2.0 * a.s).abs() <= 1e-15 * b.s) {
                if b.imaginary_defect > 0.0 {
                    ratios.push((a.s, a.imaginary_defect / b.imaginary_defect));
                }
            }
        }
        let pts: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.s <= 1.0 / 64.0 && r.imaginary_defect > 0.0)
            .map(|r| (r.s.ln(), r.imaginary_defect.ln()))
            .collect();
        let fitted_slope = if pts.len() >= 2 {
            let k = pts.len() as f64;
            let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
            let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
            let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
            let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
            sxy / sxx
        } else {
            f64::NAN
        };
        Ok(ScalingReport {
            rows,
            ratios,
            fitted_slope,
            identity_at_one,
        })
    }
}

/// Largest `|trace|` and `|det|` of `I^{-1} mu` over the given covectors.
pub fn nilpotency_residual(model: &FlagModel, zetas: &[CotangentPoint]) -> f64 {
    zetas
        .iter()
        .map(|z| {
            let m = model.moment_matrix(z);
            let scale = linalg::max_abs(&m).max(1.0);
            linalg::trace(&m).abs().max(linalg::determinant(&m).abs() / scale)
        })
        .fold(0.0, f64::max)
}
