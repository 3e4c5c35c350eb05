//! Matrix realizations of `su(n)` and `sl(n, R)`.
//!
//! Both families live inside `sl(n, C)` and share its Killing form
//! `B(X, Y) = 2n Tr(XY)`. Elements are stored as coordinate vectors against a
//! fixed real basis of the real form, so the same coordinates with complex
//! entries describe the complexification.
//!
//! Basis order for `sl(n, R)`: `H1..H{n-1}` (with `Hk = E_kk - E_{k+1,k+1}`),
//! then `Eij` for `i < j`, then `Eij` for `i > j`.
//!
//! Basis order for `su(n)`: `iH1..iH{n-1}`, then for each `i < j` the pair
//! `Aij = E_ij - E_ji`, `Sij = i(E_ij + E_ji)`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, RMat, C64, I};

/// Relative root-separation threshold below which an element is treated as singular.
pub const TAU_RS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Su,
    SlReal,
}

impl Family {
    pub fn is_compact(self) -> bool {
        matches!(self, Family::Su)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Su => write!(f, "su"),
            Family::SlReal => write!(f, "sl_real"),
        }
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "su" => Ok(Family::Su),
            "sl_real" | "sl" => Ok(Family::SlReal),
            other => Err(Error::UnsupportedFamily(other.to_string())),
        }
    }
}

/// Whether an element is known to lie in the real form or only in its complexification.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Real,
    Complex,
}

/// Element of the real form (or of its complexification) in basis coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AlgebraElement {
    coords: DVector<C64>,
    field: Field,
}

impl AlgebraElement {
    pub fn from_real(coords: &[f64]) -> Self {
        Self {
            coords: DVector::from_iterator(coords.len(), coords.iter().map(|&x| c(x, 0.0))),
            field: Field::Real,
        }
    }

    pub fn from_complex(coords: Vec<C64>) -> Self {
        Self {
            coords: DVector::from_vec(coords),
            field: Field::Complex,
        }
    }

    pub fn zero(dim: usize) -> Self {
        Self::from_real(&vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &DVector<C64> {
        &self.coords
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Real parts of the coordinates.
    pub fn real_coords(&self) -> Vec<f64> {
        self.coords.iter().map(|z| z.re).collect()
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.coords.iter().all(|z| z.im.abs() <= tol)
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            coords: &self.coords + &other.coords,
            field: join(self.field, other.field),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            coords: &self.coords - &other.coords,
            field: join(self.field, other.field),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            coords: &self.coords * c(s, 0.0),
            field: self.field,
        }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self {
            coords: &self.coords * s,
            field: Field::Complex,
        }
    }
}

fn join(a: Field, b: Field) -> Field {
    if a == Field::Real && b == Field::Real {
        Field::Real
    } else {
        Field::Complex
    }
}

/// Complex-linear functional on the algebra, stored by its values on the basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Covector {
    coords: DVector<C64>,
}

impl Covector {
    pub fn new(coords: Vec<C64>) -> Self {
        Self {
            coords: DVector::from_vec(coords),
        }
    }

    pub fn coords(&self) -> &DVector<C64> {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `<self, x>`, bilinear (no conjugation).
    pub fn pair(&self, x: &AlgebraElement) -> C64 {
        self.coords.iter().zip(x.coords.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            coords: &self.coords + &other.coords,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            coords: &self.coords - &other.coords,
        }
    }

    pub fn scale_complex(&self, s: C64) -> Self {
        Self {
            coords: &self.coords * s,
        }
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }
}

/// A validated matrix realization of a semisimple real Lie algebra.
#[derive(Debug, Clone)]
pub struct AlgebraSpec {
    family: Family,
    n: usize,
    labels: Vec<String>,
    basis: Vec<CMat>,
    /// `structure[(i * d + j) * d + k]` is the coefficient of basis `k` in `[e_i, e_j]`.
    structure: Vec<f64>,
    killing: RMat,
    killing_inv: RMat,
}

impl AlgebraSpec {
    /// Builds and validates `su(n)` or `sl(n, R)`.
    pub fn build(family: Family, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidRank(n));
        }
        let (labels, basis) = match family {
            Family::SlReal => sl_basis(n),
            Family::Su => su_basis(n),
        };
        let d = basis.len();
        let mut spec = AlgebraSpec {
            family,
            n,
            labels,
            basis,
            structure: vec![0.0; d * d * d],
            killing: RMat::zeros(d, d),
            killing_inv: RMat::zeros(d, d),
        };

        for i in 0..d {
            for j in 0..d {
                let br = linalg::commutator(&spec.basis[i], &spec.basis[j]);
                let coords = spec.matrix_coords(&br);
                for (k, z) in coords.iter().enumerate() {
                    if z.im.abs() > 1e-12 {
                        return Err(Error::Construction(format!(
                            "bracket [{}, {}] leaves the real form",
                            spec.labels[i], spec.labels[j]
                        )));
                    }
                    spec.structure[(i * d + j) * d + k] = z.re;
                }
            }
        }

        // B_ij = Tr(ad e_i ad e_j) = sum_{k,l} c_{i k}^l c_{j l}^k
        for i in 0..d {
            for j in 0..d {
                let mut acc = 0.0;
                for k in 0..d {
                    for l in 0..d {
                        acc += spec.c(i, k, l) * spec.c(j, l, k);
                    }
                }
                spec.killing[(i, j)] = acc;
            }
        }
        spec.killing_inv = spec
            .killing
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Construction("Killing form is degenerate".into()))?;

        spec.validate()?;
        Ok(spec)
    }

    #[inline]
    fn c(&self, i: usize, j: usize, k: usize) -> f64 {
        let d = self.basis.len();
        self.structure[(i * d + j) * d + k]
    }

    /// Structure constant: coefficient of basis `k` in `[e_i, e_j]`.
    pub fn structure_constant(&self, i: usize, j: usize, k: usize) -> f64 {
        self.c(i, j, k)
    }

    fn validate(&self) -> Result<()> {
        let d = self.dim();
        let scale = self.structure.iter().fold(0.0f64, |m, x| m.max(x.abs())).max(1.0);
        let tol = 1e-12 * scale * scale;
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    if (self.c(i, j, k) + self.c(j, i, k)).abs() > 1e-12 * scale {
                        return Err(Error::Construction("structure constants not antisymmetric".into()));
                    }
                }
            }
        }
        if self.jacobi_residual() > tol {
            return Err(Error::Construction("Jacobi identity fails".into()));
        }
        let kscale = self.killing.amax().max(1.0);
        if (&self.killing - self.killing.transpose()).amax() > 1e-12 * kscale {
            return Err(Error::Construction("Killing form not symmetric".into()));
        }
        if self.killing_invariance_residual() > 1e-10 * kscale * scale {
            return Err(Error::Construction("Killing form not ad-invariant".into()));
        }
        let (pos, neg) = self.killing_signature();
        let ok = match self.family {
            Family::Su => pos == 0 && neg == d,
            Family::SlReal => pos > 0 && neg > 0 && pos + neg == d,
        };
        if !ok {
            return Err(Error::Construction(format!(
                "unexpected Killing signature ({pos}, {neg}) for {}",
                self.family
            )));
        }
        Ok(())
    }

    /// Largest violation of the Jacobi identity over basis triples.
    pub fn jacobi_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for a in 0..d {
            for b in 0..d {
                for e in 0..d {
                    for out in 0..d {
                        // [a,[b,e]] + [b,[e,a]] + [e,[a,b]]
                        let mut acc = 0.0;
                        for m in 0..d {
                            acc += self.c(b, e, m) * self.c(a, m, out)
                                + self.c(e, a, m) * self.c(b, m, out)
                                + self.c(a, b, m) * self.c(e, m, out);
                        }
                        worst = worst.max(acc.abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest `|B([z,x],y) + B(x,[z,y])|` over basis triples.
    pub fn killing_invariance_residual(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for z in 0..d {
            for x in 0..d {
                for y in 0..d {
                    let mut acc = 0.0;
                    for m in 0..d {
                        acc += self.c(z, x, m) * self.killing[(m, y)] + self.c(z, y, m) * self.killing[(x, m)];
                    }
                    worst = worst.max(acc.abs());
                }
            }
        }
        worst
    }

    /// Number of positive and negative eigenvalues of the Killing matrix.
    pub fn killing_signature(&self) -> (usize, usize) {
        let eig = self.killing.clone().symmetric_eigen();
        let scale = eig.eigenvalues.amax();
        let pos = eig.eigenvalues.iter().filter(|&&l| l > 1e-9 * scale).count();
        let neg = eig.eigenvalues.iter().filter(|&&l| l < -1e-9 * scale).count();
        (pos, neg)
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Matrix size of the defining representation.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn rank(&self) -> usize {
        self.n - 1
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn basis_matrix(&self, i: usize) -> &CMat {
        &self.basis[i]
    }

    pub fn killing_matrix(&self) -> &RMat {
        &self.killing
    }

    pub fn killing_inverse(&self) -> &RMat {
        &self.killing_inv
    }

    /// `B(X, Y) = trace_scale() * Tr(XY)` for the defining representation.
    pub fn trace_scale(&self) -> f64 {
        2.0 * self.n as f64
    }

    pub fn basis_element(&self, i: usize) -> AlgebraElement {
        let mut v = vec![0.0; self.dim()];
        v[i] = 1.0;
        AlgebraElement::from_real(&v)
    }

    fn check_dim(&self, found: usize) -> Result<()> {
        if found != self.dim() {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found,
            })
        } else {
            Ok(())
        }
    }

    /// Complex-linear coordinate extraction for a traceless `n x n` matrix.
    fn matrix_coords(&self, m: &CMat) -> Vec<C64> {
        let n = self.n;
        let mut out = Vec::with_capacity(self.dim());
        match self.family {
            Family::SlReal => {
                let mut acc = c(0.0, 0.0);
                for k in 0..n - 1 {
                    acc += m[(k, k)];
                    out.push(acc);
                }
                for i in 0..n {
                    for j in i + 1..n {
                        out.push(m[(i, j)]);
                    }
                }
                for i in 0..n {
                    for j in 0..i {
                        out.push(m[(i, j)]);
                    }
                }
            }
            Family::Su => {
                let mut acc = c(0.0, 0.0);
                for k in 0..n - 1 {
                    acc += m[(k, k)];
                    out.push(-I * acc);
                }
                for i in 0..n {
                    for j in i + 1..n {
                        out.push((m[(i, j)] - m[(j, i)]) * 0.5);
                        out.push((m[(i, j)] + m[(j, i)]) / (2.0 * I));
                    }
                }
            }
        }
        out
    }

    /// Element of the complexified algebra represented by a traceless matrix.
    pub fn element_from_matrix(&self, m: &CMat) -> Result<AlgebraElement> {
        if m.nrows() != self.n || m.ncols() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: m.nrows(),
            });
        }
        let coords = self.matrix_coords(m);
        let x = AlgebraElement::from_complex(coords);
        let scale = linalg::max_abs(m).max(1.0);
        if x.is_real(1e-13 * scale) {
            Ok(AlgebraElement::from_real(&x.real_coords()))
        } else {
            Ok(x)
        }
    }

    pub fn to_matrix(&self, x: &AlgebraElement) -> Result<CMat> {
        self.check_dim(x.dim())?;
        let mut m = CMat::zeros(self.n, self.n);
        for (k, z) in x.coords().iter().enumerate() {
            if *z != c(0.0, 0.0) {
                m += &self.basis[k] * *z;
            }
        }
        Ok(m)
    }

    /// Complex conjugation of the complexification with respect to the real form.
    pub fn real_structure(&self, x: &AlgebraElement) -> AlgebraElement {
        AlgebraElement::from_complex(x.coords().iter().map(|z| z.conj()).collect())
    }

    pub fn bracket(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<AlgebraElement> {
        self.check_dim(x.dim())?;
        self.check_dim(y.dim())?;
        let d = self.dim();
        let mut out = vec![c(0.0, 0.0); d];
        for i in 0..d {
            let xi = x.coords[i];
            if xi == c(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                let xy = xi * y.coords[j];
                if xy == c(0.0, 0.0) {
                    continue;
                }
                for (k, o) in out.iter_mut().enumerate() {
                    let s = self.c(i, j, k);
                    if s != 0.0 {
                        *o += xy * s;
                    }
                }
            }
        }
        let field = join(x.field, y.field);
        Ok(AlgebraElement {
            coords: DVector::from_vec(out),
            field,
        })
    }

    pub fn killing_form(&self, x: &AlgebraElement, y: &AlgebraElement) -> Result<C64> {
        self.check_dim(x.dim())?;
        self.check_dim(y.dim())?;
        let d = self.dim();
        let mut acc = c(0.0, 0.0);
        for i in 0..d {
            for j in 0..d {
                acc += x.coords[i] * self.killing[(i, j)] * y.coords[j];
            }
        }
        Ok(acc)
    }

    /// The isomorphism `I: g -> g*`, `<I(X), Y> = B(X, Y)`.
    pub fn iso_i(&self, x: &AlgebraElement) -> Result<Covector> {
        self.check_dim(x.dim())?;
        let k = linalg::to_complex(&self.killing);
        Ok(Covector {
            coords: k * &x.coords,
        })
    }

    pub fn iso_i_inv(&self, zeta: &Covector) -> Result<AlgebraElement> {
        self.check_dim(zeta.dim())?;
        let k = linalg::to_complex(&self.killing_inv);
        let coords = k * &zeta.coords;
        let x = AlgebraElement::from_complex(coords.iter().cloned().collect());
        let scale = x.norm().max(1.0);
        if x.is_real(1e-13 * scale) {
            Ok(AlgebraElement::from_real(&x.real_coords()))
        } else {
            Ok(x)
        }
    }

    /// Covector `Y -> Tr(Y M)` for an `n x n` matrix `M`.
    pub fn trace_covector(&self, m: &CMat) -> Covector {
        Covector::new(self.basis.iter().map(|b| linalg::trace_product(b, m)).collect())
    }

    /// Matrix of `ad(X)` in the algebra basis: column `j` holds `[X, e_j]`.
    pub fn adjoint_matrix(&self, x: &AlgebraElement) -> Result<CMat> {
        self.check_dim(x.dim())?;
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for i in 0..d {
            let xi = x.coords[i];
            if xi == c(0.0, 0.0) {
                continue;
            }
            for j in 0..d {
                for k in 0..d {
                    let s = self.c(i, j, k);
                    if s != 0.0 {
                        m[(k, j)] += xi * s;
                    }
                }
            }
        }
        Ok(m)
    }

    /// Relative separation `min |a(X)| / max |a(X)|` over roots `a`, computed from
    /// the eigenvalues of the defining matrix (the eigenvalues of `ad X` are
    /// exactly their pairwise differences plus `rank` zeros).
    ///
    /// Returns `None` when every root value vanishes (e.g. `X` nilpotent or zero).
    pub fn root_separation(&self, x: &AlgebraElement) -> Result<Option<f64>> {
        let m = self.to_matrix(x)?;
        let ev = linalg::eigenvalues(&m);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for i in 0..ev.len() {
            for j in i + 1..ev.len() {
                let d = (ev[i] - ev[j]).norm();
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        if hi <= 1e-300 || hi <= 1e-14 * linalg::max_abs(&m) {
            return Ok(None);
        }
        Ok(Some(lo / hi))
    }

    /// Whether `ad X` is diagonalizable with kernel of dimension exactly `rank`.
    ///
    /// Separations inside `[TAU_RS, 10 * TAU_RS]` are reported as
    /// [`Error::Indeterminate`] instead of a guess.
    pub fn is_regular_semisimple(&self, x: &AlgebraElement) -> Result<bool> {
        match self.root_separation(x)? {
            None => Ok(false),
            Some(sep) if sep < TAU_RS => Ok(false),
            Some(sep) if sep <= 10.0 * TAU_RS => Err(Error::Indeterminate { separation: sep }),
            Some(_) => Ok(true),
        }
    }

    /// `Ad(g) X = g X g^{-1}` for an invertible `n x n` matrix `g`.
    pub fn adjoint_action(&self, g: &CMat, x: &AlgebraElement) -> Result<AlgebraElement> {
        let m = self.to_matrix(x)?;
        let g_inv = linalg::inverse(g).ok_or_else(|| Error::InvalidArgument("singular group element".into()))?;
        let y = g * m * g_inv;
        let out = self.element_from_matrix(&y)?;
        if x.field() == Field::Real && out.is_real(1e-9 * out.norm().max(1.0)) {
            Ok(AlgebraElement::from_real(&out.real_coords()))
        } else {
            Ok(out)
        }
    }

    /// Random real element with independent Gaussian coordinates.
    pub fn random_element<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64) -> AlgebraElement {
        let v: Vec<f64> = (0..self.dim())
            .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
            .collect();
        AlgebraElement::from_real(&v)
    }

    /// Random group element: a product of `factors` exponentials of random real elements.
    pub fn random_group_element<R: Rng + ?Sized>(&self, rng: &mut R, scale: f64, factors: usize) -> CMat {
        let mut g = CMat::identity(self.n, self.n);
        for _ in 0..factors {
            let x = self.random_element(rng, scale);
            let m = self.to_matrix(&x).expect("dimension matches");
            g *= linalg::expm(&m);
        }
        g
    }
}

fn unit(n: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(i, j)] = c(1.0, 0.0);
    m
}

fn sl_basis(n: usize) -> (Vec<String>, Vec<CMat>) {
    let mut labels = Vec::new();
    let mut basis = Vec::new();
    for k in 0..n - 1 {
        labels.push(format!("H{}", k + 1));
        basis.push(unit(n, k, k) - unit(n, k + 1, k + 1));
    }
    for i in 0..n {
        for j in i + 1..n {
            labels.push(format!("E{}{}", i + 1, j + 1));
            basis.push(unit(n, i, j));
        }
    }
    for i in 0..n {
        for j in 0..i {
            labels.push(format!("E{}{}", i + 1, j + 1));
            basis.push(unit(n, i, j));
        }
    }
    (labels, basis)
}

fn su_basis(n: usize) -> (Vec<String>, Vec<CMat>) {
    let mut labels = Vec::new();
    let mut basis = Vec::new();
    for k in 0..n - 1 {
        labels.push(format!("iH{}", k + 1));
        basis.push((unit(n, k, k) - unit(n, k + 1, k + 1)) * I);
    }
    for i in 0..n {
        for j in i + 1..n {
            labels.push(format!("A{}{}", i + 1, j + 1));
            basis.push(unit(n, i, j) - unit(n, j, i));
            labels.push(format!("S{}{}", i + 1, j + 1));
            basis.push((unit(n, i, j) + unit(n, j, i)) * I);
        }
    }
    (labels, basis)
}

/// Real `n x n` matrix as a complex matrix, row-major input.
pub fn real_matrix(n: usize, rows: &[f64]) -> CMat {
    linalg::to_complex(&DMatrix::from_row_slice(n, n, rows))
}
