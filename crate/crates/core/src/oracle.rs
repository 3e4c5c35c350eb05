//! Direct numeric integration over orbits, independent of the fixed-point sum.
//!
//! Compact forms: Monte Carlo over `zeta = Ad*(u) lambda` with `u` Haar-random
//! in `U(n)`, so `<X, zeta> = B(X, u L u^*)` with `L = I^{-1}(lambda)`. The
//! Haar-to-Liouville constant is fixed by one-point calibration.
//!
//! `sl(2, R)`: the orbit through `lambda = i c H*` is the one-sheeted
//! hyperboloid `i b Y`, `b = c / 8`,
//! `Y = cosh u cos p H + cosh u sin p (E + F) + sinh u (E - F)`, integrated by
//! the trapezoid rule against the Liouville form with Gaussian damping.
//!
//! Random numbers come from ChaCha20 with the stream id set to the block
//! index, so every block is reproducible on its own and partial sums are
//! reduced in block order regardless of thread count.

use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{AlgebraElement, Covector, Family};
use crate::cartan::{reduce_to_cartan, Reduction};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, RMat, C64};
use crate::localize::{fourier_value, OrbitSpec};

/// Samples per RNG stream.
pub const BLOCK_SIZE: usize = 4096;

/// Name of the generator, reported in outputs.
pub const RNG_NAME: &str = "ChaCha20 (stream = block index)";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub mean: C64,
    pub stderr: f64,
    pub samples: usize,
    pub seed: u64,
}

impl McEstimate {
    pub fn scaled(&self, s: f64) -> McEstimate {
        McEstimate {
            mean: self.mean * s,
            stderr: self.stderr * s.abs(),
            ..*self
        }
    }
}

fn block_rng(seed: u64, block: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(block as u64);
    rng
}

/// Haar-distributed unitary matrix: QR of a complex Gaussian matrix with the
/// phases of `diag(R)` moved into `Q`.
pub fn haar_unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMat {
    let z = CMat::from_fn(n, n, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

fn require_compact(spec: &OrbitSpec) -> Result<()> {
    if spec.algebra().family() != Family::Su {
        return Err(Error::UnsupportedRealForm("Haar sampling needs a compact form".into()));
    }
    Ok(())
}

/// `n` orbit points `Ad*(u) lambda`, returned as covectors on the algebra.
pub fn haar_orbit_sample(spec: &OrbitSpec, seed: u64, n: usize) -> Result<Vec<Covector>> {
    require_compact(spec)?;
    let dim = spec.algebra().n();
    let scale = spec.algebra().trace_scale();
    let l = spec.lambda_dual_matrix();
    let blocks = n.div_ceil(BLOCK_SIZE);
    let out: Vec<Vec<Covector>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let count = BLOCK_SIZE.min(n - b * BLOCK_SIZE);
            (0..count)
                .map(|_| {
                    let u = haar_unitary(&mut rng, dim);
                    let m = &u * &l * u.adjoint() * c(scale, 0.0);
                    spec.algebra().trace_covector(&m)
                })
                .collect()
        })
        .collect();
    Ok(out.into_iter().flatten().collect())
}

#[derive(Default, Clone, Copy)]
struct Moments {
    sum: C64,
    sum_sq_re: f64,
    sum_sq_im: f64,
}

impl Moments {
    fn push(&mut self, z: C64) {
        self.sum += z;
        self.sum_sq_re += z.re * z.re;
        self.sum_sq_im += z.im * z.im;
    }

    fn merge(&mut self, o: &Moments) {
        self.sum += o.sum;
        self.sum_sq_re += o.sum_sq_re;
        self.sum_sq_im += o.sum_sq_im;
    }

    fn estimate(&self, n: usize, seed: u64) -> McEstimate {
        if n == 0 {
            return McEstimate {
                mean: c(0.0, 0.0),
                stderr: f64::INFINITY,
                samples: 0,
                seed,
            };
        }
        let nf = n as f64;
        let mean = self.sum / nf;
        let var_re = (self.sum_sq_re / nf - mean.re * mean.re).max(0.0);
        let var_im = (self.sum_sq_im / nf - mean.im * mean.im).max(0.0);
        let denom = if n > 1 { nf - 1.0 } else { 1.0 };
        McEstimate {
            mean,
            stderr: ((var_re + var_im) * nf / denom / nf).sqrt(),
            samples: n,
            seed,
        }
    }
}

/// Uncalibrated Haar averages of `exp(<X, zeta>)` for several `X`, sharing
/// the same orbit samples.
pub fn mc_raw_batch(spec: &OrbitSpec, xs: &[AlgebraElement], seed: u64, n: usize) -> Result<Vec<McEstimate>> {
    require_compact(spec)?;
    let algebra = spec.algebra();
    let dim = algebra.n();
    let scale = algebra.trace_scale();
    let l = spec.lambda_dual_matrix();
    let xm: Vec<CMat> = xs.iter().map(|x| algebra.to_matrix(x)).collect::<Result<_>>()?;
    let blocks = n.div_ceil(BLOCK_SIZE);
    let partial: Vec<Vec<Moments>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut rng = block_rng(seed, b);
            let count = BLOCK_SIZE.min(n - b * BLOCK_SIZE);
            let mut acc = vec![Moments::default(); xm.len()];
            for _ in 0..count {
                let u = haar_unitary(&mut rng, dim);
                let m = &u * &l * u.adjoint();
                for (a, x) in acc.iter_mut().zip(&xm) {
                    a.push((linalg::trace_product(x, &m) * scale).exp());
                }
            }
            acc
        })
        .collect();
    let mut total = vec![Moments::default(); xm.len()];
    for block in &partial {
        for (t, p) in total.iter_mut().zip(block) {
            t.merge(p);
        }
    }
    Ok(total.iter().map(|m| m.estimate(n, seed)).collect())
}

/// `normalization * E[exp(<X, zeta>)]` over Haar-random orbit points.
pub fn mc_fourier_integral(
    spec: &OrbitSpec,
    x: &AlgebraElement,
    seed: u64,
    n: usize,
    normalization: f64,
) -> Result<McEstimate> {
    let raw = mc_raw_batch(spec, std::slice::from_ref(x), seed, n)?;
    Ok(raw[0].scaled(normalization))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Calibration {
    /// Haar-to-Liouville constant.
    pub constant: f64,
    /// Relative standard error of the constant.
    pub relative_stderr: f64,
    pub reference_value: f64,
    pub raw: McEstimate,
}

/// One-point calibration `c = F(X0) / E[exp(<X0, zeta>)]`.
pub fn calibrate_compact(spec: &OrbitSpec, x0: &AlgebraElement, seed: u64, n: usize) -> Result<Calibration> {
    require_compact(spec)?;
    let f = fourier_value(spec, x0)?.total;
    let raw = mc_raw_batch(spec, std::slice::from_ref(x0), seed, n)?[0];
    if raw.mean.norm() <= 3.0 * raw.stderr {
        return Err(Error::CalibrationZero {
            estimate: raw.mean.norm(),
            stderr: raw.stderr,
        });
    }
    let ratio = f / raw.mean;
    Ok(Calibration {
        constant: ratio.re,
        relative_stderr: raw.stderr / raw.mean.norm(),
        reference_value: f.re,
        raw,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DampedEstimate {
    pub eps: f64,
    pub value: C64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DampedSequence {
    pub estimates: Vec<DampedEstimate>,
    /// `2 I(eps_k) - I(eps_{k-1})` from the last two estimates (linear in `eps`).
    pub extrapolated: C64,
}

/// Liouville density `|d beta / du dp|` on the `sl(2, R)` orbit at `(u, p)`,
/// from the orbit form `B(Y, [Z1, Z2]) * b / (2 pi)` with `[Zj, Y] = dY/dtj`.
fn hyperboloid_density(b: f64, u: f64, p: f64) -> f64 {
    let (ch, sh) = (u.cosh(), u.sinh());
    let (cp, sp) = (p.cos(), p.sin());
    // coordinates on (H, E+F, E-F) as 2x2 real matrices [[x, y+z], [y-z, -x]]
    let mat = |x: f64, y: f64, z: f64| RMat::from_row_slice(2, 2, &[x, y + z, y - z, -x]);
    let y = mat(ch * cp, ch * sp, sh);
    let du = mat(sh * cp, sh * sp, ch);
    let dp = mat(-ch * sp, ch * cp, 0.0);
    let basis = [mat(1.0, 0.0, 0.0), mat(0.0, 1.0, 1.0), mat(0.0, 1.0, -1.0)];
    let solve = |t: &RMat| -> RMat {
        // [Z, Y] = T for Z in span(H, E, F): 4 equations, 3 unknowns
        let mut a = RMat::zeros(4, 3);
        for (j, e) in basis.iter().enumerate() {
            let br = e * &y - &y * e;
            for k in 0..4 {
                a[(k, j)] = br[(k / 2, k % 2)];
            }
        }
        let rhs: Vec<f64> = (0..4).map(|k| t[(k / 2, k % 2)]).collect();
        let z = linalg::real_lstsq(&a, &rhs);
        basis.iter().zip(&z).fold(RMat::zeros(2, 2), |acc, (e, w)| acc + e * *w)
    };
    let z1 = solve(&du);
    let z2 = solve(&dp);
    let br = &z1 * &z2 - &z2 * &z1;
    let killing = 4.0 * (&y * br).trace();
    (killing * b / (2.0 * std::f64::consts::PI)).abs()
}

/// Gaussian-damped orbit integrals of `exp(<X, zeta>)` on the `sl(2, R)`
/// hyperboloid, one per `eps`, with `mesh = (n_u, n_p)` trapezoid nodes.
pub fn damped_oscillatory_integral(
    spec: &OrbitSpec,
    x: &AlgebraElement,
    eps_schedule: &[f64],
    mesh: (usize, usize),
) -> Result<DampedSequence> {
    let algebra = spec.algebra();
    if algebra.family() != Family::SlReal || algebra.n() != 2 {
        return Err(Error::UnsupportedRealForm("damped quadrature is implemented for sl(2, R)".into()));
    }
    if eps_schedule.is_empty() || eps_schedule.windows(2).any(|w| w[1] >= w[0]) || eps_schedule.iter().any(|e| *e <= 0.0)
    {
        return Err(Error::InvalidArgument("eps schedule must be positive and strictly decreasing".into()));
    }
    if !algebra.is_regular_semisimple(x)? {
        return Err(Error::NotRegular);
    }
    let a = match reduce_to_cartan(x, spec.cartan())? {
        Reduction::Conjugate { cartan_coords, .. } => cartan_coords[0].re,
        Reduction::NotConjugate => return Err(Error::NonSplit("elliptic element".into())),
    };
    let c_lambda = spec.lambda_real()[0];
    let b = c_lambda / 8.0;
    let (n_u, n_p) = mesh;
    if n_u < 2 || n_p < 2 {
        return Err(Error::InvalidArgument("mesh needs at least 2 nodes per direction".into()));
    }

    let estimates = eps_schedule
        .iter()
        .map(|&eps| {
            // eps * b^2 cosh(2U) = 40 bounds the damping factor by e^{-40}
            let big_u = 0.5 * (40.0 / (eps * b * b)).max(1.0).acosh();
            let hu = 2.0 * big_u / (n_u - 1) as f64;
            let hp = 2.0 * std::f64::consts::PI / n_p as f64;
            let rows: Vec<C64> = (0..n_u)
                .into_par_iter()
                .map(|i| {
                    let u = -big_u + hu * i as f64;
                    let w = if i == 0 || i == n_u - 1 { 0.5 } else { 1.0 };
                    let damp = (-eps * b * b * (2.0 * u).cosh()).exp();
                    // the density is invariant under the rotation p -> p + t
                    let density = hyperboloid_density(b, u, 0.0);
                    let mut acc = c(0.0, 0.0);
                    for j in 0..n_p {
                        let p = hp * j as f64;
                        // <X, zeta> = B(aH, i b Y) = 8 i a b cosh u cos p
                        acc += c(0.0, 8.0 * a * b * u.cosh() * p.cos()).exp();
                    }
                    acc * (w * damp * density * hu * hp)
                })
                .collect();
            DampedEstimate {
                eps,
                value: rows.into_iter().sum(),
            }
        })
        .collect::<Vec<_>>();
    let extrapolated = match estimates.len() {
        1 => estimates[0].value,
        k => {
            let (e1, e2) = (&estimates[k - 2], &estimates[k - 1]);
            // linear extrapolation to eps = 0
            let t = e2.eps / (e1.eps - e2.eps);
            e2.value + (e2.value - e1.value) * t
        }
    };
    Ok(DampedSequence {
        estimates,
        extrapolated,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SplitSignCalibration {
    pub s0: i32,
    pub oracle: C64,
    /// Formula value with `s0 = +1`.
    pub formula_unit: f64,
    pub sequence: DampedSequence,
}

/// Sign `s0` for which the split-mode formula agrees in sign with the damped
/// integral at `x`.
pub fn calibrate_split_sign(
    spec: &OrbitSpec,
    x: &AlgebraElement,
    eps_schedule: &[f64],
    mesh: (usize, usize),
) -> Result<SplitSignCalibration> {
    let unit = spec.with_s0(1)?;
    let f = fourier_value(&unit, x)?.total.re;
    let seq = damped_oscillatory_integral(spec, x, eps_schedule, mesh)?;
    let o = seq.extrapolated.re;
    if f.abs() < 1e-9 || o.abs() < 1e-9 {
        return Err(Error::CalibrationZero {
            estimate: o,
            stderr: 0.0,
        });
    }
    Ok(SplitSignCalibration {
        s0: if f.signum() == o.signum() { 1 } else { -1 },
        oracle: seq.extrapolated,
        formula_unit: f,
        sequence: seq,
    })
}

/// Eigenvalues of `I^{-1}(zeta)` sorted by `Re + Im` (for orbit membership checks).
pub fn orbit_invariants(spec: &OrbitSpec, zeta: &Covector) -> Result<Vec<C64>> {
    let y = spec.algebra().iso_i_inv(zeta)?;
    let m = spec.algebra().to_matrix(&y)?;
    let mut ev = linalg::eigenvalues(&m);
    ev.sort_by(|a, b| (a.re + a.im).partial_cmp(&(b.re + b.im)).unwrap());
    Ok(ev)
}

/// Pearson statistic of the height coordinate of `su(2)` orbit samples over
/// `bins` equal slices; uniform on the sphere iff the height is uniform.
pub fn sphere_height_chi_square(spec: &OrbitSpec, samples: &[Covector], bins: usize) -> Result<f64> {
    if spec.algebra().family() != Family::Su || spec.algebra().n() != 2 {
        return Err(Error::UnsupportedRealForm("sphere test is for su(2)".into()));
    }
    let radius = orbit_radius(spec, samples.first())?;
    let mut counts = vec![0usize; bins];
    for z in samples {
        let y = spec.algebra().iso_i_inv(z)?.real_coords();
        let h = (y[0] / radius).clamp(-1.0, 1.0 - 1e-15);
        counts[((h + 1.0) / 2.0 * bins as f64) as usize] += 1;
    }
    let expected = samples.len() as f64 / bins as f64;
    Ok(counts.iter().map(|&k| (k as f64 - expected).powi(2) / expected).sum())
}

fn orbit_radius(spec: &OrbitSpec, first: Option<&Covector>) -> Result<f64> {
    let z = first.ok_or_else(|| Error::InvalidArgument("no samples".into()))?;
    let y = spec.algebra().iso_i_inv(z)?.real_coords();
    Ok(DVector::from_vec(y).norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::AlgebraSpec;
    use crate::localize::default_mode;
    use std::sync::Arc;

    fn orbit(f: Family, n: usize, lam: &[f64], s0: i32) -> OrbitSpec {
        OrbitSpec::new(Arc::new(AlgebraSpec::build(f, n).unwrap()), lam, default_mode(f), s0).unwrap()
    }

    #[test]
    fn haar_is_unitary() {
        let mut rng = block_rng(3, 0);
        for n in 2..5 {
            let u = haar_unitary(&mut rng, n);
            assert!(linalg::max_abs(&(u.adjoint() * &u - CMat::identity(n, n))) < 1e-12);
        }
    }

    #[test]
    fn samples_stay_on_orbit() {
        let spec = orbit(Family::Su, 3, &[1.0, 0.6], 1);
        let zs = haar_orbit_sample(&spec, 11, 200).unwrap();
        assert!(haar_orbit_sample(&spec, 11, 0).unwrap().is_empty());
        let lam = spec.algebra().trace_covector(&(spec.lambda_dual_matrix() * c(6.0, 0.0)));
        let base = orbit_invariants(&spec, &lam).unwrap();
        for z in &zs {
            let ev = orbit_invariants(&spec, z).unwrap();
            for (a, b) in ev.iter().zip(&base) {
                assert!((a - b).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn deterministic_and_thread_independent() {
        let spec = orbit(Family::Su, 2, &[1.3], 1);
        let x = spec.cartan_element(&[0.4]).unwrap();
        let a = mc_raw_batch(&spec, std::slice::from_ref(&x), 5, 10_000).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| mc_raw_batch(&spec, &[x], 5, 10_000).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn damped_sl2_matches_closed_form() {
        let spec = orbit(Family::SlReal, 2, &[4.0], -1);
        let x = spec.cartan_element(&[0.3]).unwrap();
        let seq = damped_oscillatory_integral(&spec, &x, &[0.1, 0.05, 0.025], (1200, 256)).unwrap();
        let exact = fourier_value(&spec, &x).unwrap().total.re;
        assert!((seq.extrapolated.re - exact).abs() < 0.1 * exact.abs());
        let cal = calibrate_split_sign(&spec, &x, &[0.1, 0.05, 0.025], (1200, 256)).unwrap();
        assert_eq!(cal.s0, crate::localize::CALIBRATED_SPLIT_S0);
    }

    #[test]
    fn density_is_rotation_invariant() {
        for u in [-1.0, 0.0, 0.7] {
            let d0 = hyperboloid_density(0.5, u, 0.0);
            for p in [0.3, 1.7, 4.0] {
                assert!((hyperboloid_density(0.5, u, p) - d0).abs() < 1e-10 * d0);
            }
        }
    }
}
