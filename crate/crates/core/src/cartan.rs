//! Cartan subalgebras, roots, Weyl groups and conjugation into a fixed Cartan.
//!
//! A Cartan subalgebra of `sl(n, C)` is stored through a diagonalizing matrix
//! `P`: the subalgebra is `P diag(h) P^{-1}` with `sum(h) = 0`. The complex
//! basis is `H_k = P diag(e_k - e_{k+1}) P^{-1}` and functionals on the Cartan
//! are stored by their values on that basis.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use nalgebra::DVector;

use crate::algebra::{AlgebraElement, AlgebraSpec, Family};
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, RMat, C64};

/// Rounding grid for deduplicating Weyl group elements.
const WEYL_KEY_SCALE: f64 = 1e9;

#[derive(Debug, Clone)]
pub struct Root {
    /// Values of the root on the Cartan basis.
    pub coords: DVector<C64>,
    /// Index pair `(i, j)`: the root is `h -> h_i - h_j` in the diagonal frame.
    pub pair: (usize, usize),
}

impl Root {
    pub fn eval(&self, x: &DVector<C64>) -> C64 {
        self.coords.dot(x)
    }
}

#[derive(Debug, Clone)]
pub struct WeylElement {
    /// Reduced word in the simple reflections (0-based indices).
    pub word: Vec<usize>,
    /// Action on functionals (values on the Cartan basis).
    pub matrix: CMat,
    /// Contragredient action on Cartan coordinates.
    pub cartan_matrix: CMat,
    /// `det` of the action, `+1` or `-1`.
    pub sign: i32,
    /// `root_perm[r]` is the index of `w(root r)`.
    pub root_perm: Vec<usize>,
}

impl WeylElement {
    pub fn label(&self) -> String {
        weyl_label(&self.word)
    }

    pub fn act(&self, functional: &DVector<C64>) -> DVector<C64> {
        &self.matrix * functional
    }

    pub fn act_on_cartan(&self, x: &DVector<C64>) -> DVector<C64> {
        &self.cartan_matrix * x
    }
}

/// `"e"` for the identity, otherwise `s1s2...` with 1-based simple reflection indices.
pub fn weyl_label(word: &[usize]) -> String {
    if word.is_empty() {
        "e".to_string()
    } else {
        word.iter().map(|i| format!("s{}", i + 1)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct CartanDatum {
    algebra: Arc<AlgebraSpec>,
    diagonalizer: CMat,
    basis: Vec<AlgebraElement>,
    killing: CMat,
    killing_dual: CMat,
    roots: Vec<Root>,
    root_vectors: Vec<AlgebraElement>,
    positive: Vec<bool>,
    simple: Vec<usize>,
    weyl: Vec<WeylElement>,
}

/// Lexicographic positivity on complex values: real part first, then imaginary.
pub fn lex_positive(z: C64) -> bool {
    let tol = 1e-12 * z.norm();
    if z.re.abs() > tol {
        z.re > 0.0
    } else {
        z.im > 0.0
    }
}

impl CartanDatum {
    /// Cartan subalgebra `P diag P^{-1}` with the positive system selected by `is_positive`.
    ///
    /// `is_positive` must pick exactly one root from each `{a, -a}` pair and
    /// yield an additively closed set.
    pub fn from_diagonalizer<F>(algebra: Arc<AlgebraSpec>, p: CMat, is_positive: F) -> Result<Self>
    where
        F: Fn(&Root) -> bool,
    {
        let n = algebra.n();
        let r = algebra.rank();
        let p_inv = linalg::inverse(&p).ok_or_else(|| Error::InvalidArgument("singular diagonalizer".into()))?;
        let frame = |m: &CMat| &p * m * &p_inv;

        let mut basis = Vec::with_capacity(r);
        for k in 0..r {
            let mut d = CMat::zeros(n, n);
            d[(k, k)] = c(1.0, 0.0);
            d[(k + 1, k + 1)] = c(-1.0, 0.0);
            basis.push(algebra.element_from_matrix(&frame(&d))?);
        }

        let mut killing = CMat::zeros(r, r);
        for a in 0..r {
            for b in 0..r {
                killing[(a, b)] = algebra.killing_form(&basis[a], &basis[b])?;
            }
        }
        let killing_dual = linalg::inverse(&killing).ok_or_else(|| Error::Construction("Cartan is degenerate".into()))?;

        // Root vectors are the simultaneous eigenvectors P E_ij P^{-1}; root
        // values come from ad(H_k) acting on them.
        let mut roots = Vec::new();
        let mut root_vectors = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let mut e = CMat::zeros(n, n);
                e[(i, j)] = c(1.0, 0.0);
                let ev = algebra.element_from_matrix(&frame(&e))?;
                let norm2: f64 = ev.coords().iter().map(|z| z.norm_sqr()).sum();
                let mut coords = Vec::with_capacity(r);
                for h in &basis {
                    let br = algebra.bracket(h, &ev)?;
                    let proj: C64 = ev.coords().iter().zip(br.coords().iter()).map(|(a, b)| a.conj() * b).sum();
                    coords.push(proj / norm2);
                }
                roots.push(Root {
                    coords: DVector::from_vec(coords),
                    pair: (i, j),
                });
                root_vectors.push(ev);
            }
        }

        let positive: Vec<bool> = roots.iter().map(&is_positive).collect();
        let mut datum = CartanDatum {
            algebra,
            diagonalizer: p,
            basis,
            killing,
            killing_dual,
            roots,
            root_vectors,
            positive,
            simple: Vec::new(),
            weyl: Vec::new(),
        };
        datum.check_positive_system()?;
        datum.simple = datum.find_simple_roots();
        datum.weyl = datum.generate_weyl_group()?;
        Ok(datum)
    }

    /// Diagonal Cartan subalgebra (`P = 1`).
    pub fn standard<F>(algebra: Arc<AlgebraSpec>, is_positive: F) -> Result<Self>
    where
        F: Fn(&Root) -> bool,
    {
        let n = algebra.n();
        Self::from_diagonalizer(algebra, CMat::identity(n, n), is_positive)
    }

    /// Diagonal Cartan with the upper-triangular positive system `{e_i - e_j : i < j}`.
    pub fn standard_upper(algebra: Arc<AlgebraSpec>) -> Result<Self> {
        Self::standard(algebra, |root| root.pair.0 < root.pair.1)
    }

    fn check_positive_system(&self) -> Result<()> {
        for (a, ra) in self.roots.iter().enumerate() {
            let neg = self.find_root(&(-&ra.coords)).ok_or_else(|| Error::Construction("root set not symmetric".into()))?;
            if self.positive[a] == self.positive[neg] {
                return Err(Error::InvalidArgument("positive system must split every {a, -a} pair".into()));
            }
        }
        for a in self.positive_roots() {
            for b in self.positive_roots() {
                let sum = &self.roots[a].coords + &self.roots[b].coords;
                if let Some(s) = self.find_root(&sum) {
                    if !self.positive[s] {
                        return Err(Error::InvalidArgument("positive system is not additively closed".into()));
                    }
                }
            }
        }
        Ok(())
    }

    fn find_simple_roots(&self) -> Vec<usize> {
        let pos = self.positive_roots();
        pos.iter()
            .copied()
            .filter(|&a| {
                !pos.iter().any(|&b| {
                    let diff = &self.roots[a].coords - &self.roots[b].coords;
                    self.find_root(&diff).map(|d| self.positive[d]).unwrap_or(false)
                })
            })
            .collect()
    }

    /// `B*(mu, nu)` for functionals given by their values on the Cartan basis.
    pub fn dual_form(&self, mu: &DVector<C64>, nu: &DVector<C64>) -> C64 {
        (mu.transpose() * &self.killing_dual * nu)[(0, 0)]
    }

    /// Reflection in the root `a` acting on functionals.
    pub fn reflection(&self, a: usize) -> CMat {
        let alpha = &self.roots[a].coords;
        let r = self.rank();
        let coroot = &self.killing_dual * alpha;
        let denom = self.dual_form(alpha, alpha);
        CMat::identity(r, r) - (alpha * coroot.transpose()) * (c(2.0, 0.0) / denom)
    }

    fn weyl_key(m: &CMat) -> Vec<i64> {
        m.iter()
            .flat_map(|z| [(z.re * WEYL_KEY_SCALE).round() as i64, (z.im * WEYL_KEY_SCALE).round() as i64])
            .collect()
    }

    /// Breadth-first closure over simple reflections. Words extended on the
    /// right in generator order, so each element keeps its lexicographically
    /// smallest reduced word.
    fn generate_weyl_group(&self) -> Result<Vec<WeylElement>> {
        let r = self.rank();
        let gens: Vec<CMat> = self.simple.iter().map(|&a| self.reflection(a)).collect();
        let mut seen: HashMap<Vec<i64>, usize> = HashMap::new();
        let mut out: Vec<(Vec<usize>, CMat)> = Vec::new();
        let mut queue: VecDeque<(Vec<usize>, CMat)> = VecDeque::new();
        queue.push_back((Vec::new(), CMat::identity(r, r)));
        while let Some((word, m)) = queue.pop_front() {
            let key = Self::weyl_key(&m);
            if seen.contains_key(&key) {
                continue;
            }
            seen.insert(key, out.len());
            for (g, gm) in gens.iter().enumerate() {
                let mut w = word.clone();
                w.push(g);
                queue.push_back((w, &m * gm));
            }
            out.push((word, m));
            if out.len() > 100_000 {
                return Err(Error::Construction("Weyl group closure did not terminate".into()));
            }
        }

        out.into_iter()
            .map(|(word, matrix)| {
                let det = linalg::determinant(&matrix);
                let sign = if det.re > 0.0 { 1 } else { -1 };
                let cartan_matrix = linalg::inverse(&matrix)
                    .ok_or_else(|| Error::Construction("singular Weyl element".into()))?
                    .transpose();
                let root_perm = self
                    .roots
                    .iter()
                    .map(|root| {
                        self.find_root(&(&matrix * &root.coords))
                            .ok_or_else(|| Error::Construction("Weyl element does not permute roots".into()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(WeylElement {
                    word,
                    matrix,
                    cartan_matrix,
                    sign,
                    root_perm,
                })
            })
            .collect()
    }

    /// Index of the root with the given coordinates, if any.
    pub fn find_root(&self, coords: &DVector<C64>) -> Option<usize> {
        let scale = coords.iter().map(|z| z.norm()).fold(1.0, f64::max);
        self.roots
            .iter()
            .position(|r| (&r.coords - coords).iter().all(|z| z.norm() <= 1e-8 * scale))
    }

    /// Index of the Weyl element with the given action matrix, if any.
    pub fn find_weyl(&self, m: &CMat) -> Option<usize> {
        self.weyl
            .iter()
            .position(|w| (&w.matrix - m).iter().all(|z| z.norm() <= 1e-8))
    }

    pub fn algebra(&self) -> &Arc<AlgebraSpec> {
        &self.algebra
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[AlgebraElement] {
        &self.basis
    }

    pub fn diagonalizer(&self) -> &CMat {
        &self.diagonalizer
    }

    pub fn killing(&self) -> &CMat {
        &self.killing
    }

    pub fn roots(&self) -> &[Root] {
        &self.roots
    }

    pub fn root_vectors(&self) -> &[AlgebraElement] {
        &self.root_vectors
    }

    pub fn is_positive(&self, root: usize) -> bool {
        self.positive[root]
    }

    pub fn positive_roots(&self) -> Vec<usize> {
        (0..self.roots.len()).filter(|&a| self.positive[a]).collect()
    }

    pub fn negative_roots(&self) -> Vec<usize> {
        (0..self.roots.len()).filter(|&a| !self.positive[a]).collect()
    }

    pub fn simple_roots(&self) -> &[usize] {
        &self.simple
    }

    pub fn weyl_group(&self) -> &[WeylElement] {
        &self.weyl
    }

    /// Element of the Cartan with the given coordinates.
    pub fn element(&self, x: &DVector<C64>) -> AlgebraElement {
        let mut out = AlgebraElement::from_complex(vec![c(0.0, 0.0); self.algebra.dim()]);
        for (k, h) in self.basis.iter().enumerate() {
            out = out.add(&h.scale_complex(x[k]));
        }
        out
    }

    /// Cartan coordinates of `P diag(d) P^{-1}`.
    pub fn coords_from_diagonal(&self, d: &[C64]) -> DVector<C64> {
        let mut acc = c(0.0, 0.0);
        DVector::from_iterator(
            self.rank(),
            d.iter().take(self.rank()).map(|z| {
                acc += z;
                acc
            }),
        )
    }

    /// Cartan coordinates of an element known to lie in this Cartan.
    pub fn coords_of(&self, x: &AlgebraElement) -> Result<DVector<C64>> {
        let m = self.algebra.to_matrix(x)?;
        let p_inv = linalg::inverse(&self.diagonalizer).expect("diagonalizer is invertible");
        let d = p_inv * m * &self.diagonalizer;
        let diag: Vec<C64> = (0..d.nrows()).map(|i| d[(i, i)]).collect();
        Ok(self.coords_from_diagonal(&diag))
    }

    /// Whether `x` commutes with the whole Cartan.
    pub fn contains(&self, x: &AlgebraElement) -> Result<bool> {
        let scale = x.norm().max(1e-300);
        for h in &self.basis {
            if self.algebra.bracket(h, x)?.norm() > 1e-10 * scale * h.norm() {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Root values `a(X)` at Cartan coordinates `x`.
    pub fn root_values(&self, x: &DVector<C64>) -> Vec<C64> {
        self.roots.iter().map(|r| r.eval(x)).collect()
    }

    /// Whether every Cartan basis element is real.
    pub fn is_defined_over_reals(&self) -> bool {
        self.basis.iter().all(|h| h.is_real(1e-10 * h.norm().max(1.0)))
            || linalg::is_real(&self.diagonalizer, 1e-12)
    }
}

/// The Cartan subalgebra containing a regular semisimple `x`, with the positive
/// system `{a : a(x) > 0}` (lexicographic on real then imaginary part).
pub fn cartan_of(algebra: Arc<AlgebraSpec>, x: &AlgebraElement) -> Result<CartanDatum> {
    if !algebra.is_regular_semisimple(x)? {
        return Err(Error::NotRegular);
    }
    let m = algebra.to_matrix(x)?;
    let (d, p) = diagonalize(&algebra, &m)?;
    CartanDatum::from_diagonalizer(algebra, p, move |root| {
        let (i, j) = root.pair;
        lex_positive(d[i] - d[j])
    })
}

/// Lower bound on the matrix 2-norm distance from `X` to the non-regular set.
///
/// Bauer-Fike: a perturbation `E` moves each eigenvalue by at most
/// `cond(P) ||E||`, so two eigenvalues cannot meet before `gap / (2 cond(P))`.
pub fn regular_radius(algebra: &AlgebraSpec, x: &AlgebraElement) -> Result<f64> {
    if !algebra.is_regular_semisimple(x)? {
        return Ok(0.0);
    }
    let m = algebra.to_matrix(x)?;
    let (d, p) = diagonalize(algebra, &m)?;
    let mut gap = f64::INFINITY;
    for i in 0..d.len() {
        for j in i + 1..d.len() {
            gap = gap.min((d[i] - d[j]).norm());
        }
    }
    let sv = p.singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let smin = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(gap * smin / (2.0 * smax))
}

/// Eigen-decomposition of a diagonalizable matrix with distinct eigenvalues.
///
/// Real matrices with real spectrum get real eigenvectors; anti-Hermitian
/// matrices get a unitary eigenbasis.
fn diagonalize(algebra: &AlgebraSpec, m: &CMat) -> Result<(Vec<C64>, CMat)> {
    let n = m.nrows();
    let scale = linalg::max_abs(m).max(1e-300);
    if algebra.family() == Family::Su {
        let herm = m * c(0.0, -1.0);
        let eig = herm.symmetric_eigen();
        let mut idx: Vec<usize> = (0..n).collect();
        idx.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
        let evals = idx.iter().map(|&i| c(0.0, eig.eigenvalues[i])).collect();
        let mut p = CMat::zeros(n, n);
        for (col, &i) in idx.iter().enumerate() {
            p.set_column(col, &eig.eigenvectors.column(i));
        }
        return Ok((evals, p));
    }
    let ev = linalg::eigenvalues(m);
    let all_real = ev.iter().all(|z| z.im.abs() <= 1e-10 * scale) && linalg::is_real(m, 0.0);
    let mut evals = ev.clone();
    if all_real {
        evals = ev.iter().map(|z| c(z.re, 0.0)).collect();
        evals.sort_by(|a, b| b.re.partial_cmp(&a.re).unwrap());
    } else {
        evals.sort_by(|a, b| {
            b.re.partial_cmp(&a.re)
                .unwrap()
                .then(b.im.partial_cmp(&a.im).unwrap())
        });
    }
    let mut p = CMat::zeros(n, n);
    for (col, e) in evals.iter().enumerate() {
        let v = if all_real {
            let shifted = m.map(|z| z.re) - RMat::identity(n, n) * e.re;
            normalize_real(linalg::real_null_vector(&shifted))
                .into_iter()
                .map(|x| c(x, 0.0))
                .collect::<Vec<_>>()
        } else {
            let shifted = m - CMat::identity(n, n) * *e;
            linalg::null_vector(&shifted)
        };
        for (row, z) in v.into_iter().enumerate() {
            p[(row, col)] = z;
        }
    }
    Ok((evals, p))
}

/// Sign convention: largest-magnitude entry positive.
fn normalize_real(mut v: Vec<f64>) -> Vec<f64> {
    let (imax, _) = v
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (i, x)| if x.abs() > acc.1 { (i, x.abs()) } else { acc });
    if v[imax] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

/// Outcome of conjugating an element into a target Cartan.
#[derive(Debug, Clone)]
pub enum Reduction {
    Conjugate {
        /// Group element `g` with `g X g^{-1}` in the target.
        g: CMat,
        /// `Ad(g) X`.
        reduced: AlgebraElement,
        /// Coordinates of `Ad(g) X` in the target's Cartan basis.
        cartan_coords: DVector<C64>,
    },
    NotConjugate,
}

impl Reduction {
    pub fn is_conjugate(&self) -> bool {
        matches!(self, Reduction::Conjugate { .. })
    }
}

/// Conjugates a regular semisimple real `x` into `target` by an element of the real group.
///
/// `su(n)`: unitary diagonalization, always succeeds when the target is
/// diagonalized by a unitary matrix. `sl(n, R)`: succeeds iff the defining
/// matrix has real spectrum and the target is diagonalized by a real matrix;
/// the conjugating matrix is real with unit determinant. Eigenvalues are
/// placed in descending order unless `x` already lies in the target.
pub fn reduce_to_cartan(x: &AlgebraElement, target: &CartanDatum) -> Result<Reduction> {
    let algebra = target.algebra();
    if !algebra.is_regular_semisimple(x)? {
        return Err(Error::NotRegular);
    }
    let n = algebra.n();
    let p = target.diagonalizer();

    if target.contains(x)? {
        let coords = target.coords_of(x)?;
        return Ok(Reduction::Conjugate {
            g: CMat::identity(n, n),
            reduced: x.clone(),
            cartan_coords: coords,
        });
    }

    let m = algebra.to_matrix(x)?;
    let scale = linalg::max_abs(&m).max(1e-300);
    match algebra.family() {
        Family::Su => {
            let pp = p.adjoint() * p;
            if (pp - CMat::identity(n, n)).iter().any(|z| z.norm() > 1e-10) {
                return Err(Error::UnsupportedTarget("compact form needs a unitary diagonalizer".into()));
            }
            let (evals, q) = diagonalize(algebra, &m)?;
            let q_inv = q.adjoint();
            let mut g = p * q_inv;
            let det = linalg::determinant(&g);
            let phase = (c(0.0, -det.arg() / n as f64)).exp();
            g *= phase;
            finish(target, g, &evals)
        }
        Family::SlReal => {
            if !linalg::is_real(p, 1e-12) {
                return Err(Error::UnsupportedTarget("split form needs a real diagonalizer".into()));
            }
            let ev = linalg::eigenvalues(&m);
            if ev.iter().any(|z| z.im.abs() > 1e-10 * scale) {
                return Ok(Reduction::NotConjugate);
            }
            let (evals, mut q) = diagonalize(algebra, &m)?;
            if linalg::determinant(&q).re < 0.0 {
                for row in 0..n {
                    q[(row, 0)] = -q[(row, 0)];
                }
            }
            let q_inv = linalg::inverse(&q).ok_or(Error::NotRegular)?;
            let mut g = p * q_inv;
            let det = linalg::determinant(&g).re;
            if det < 0.0 {
                for col in 0..n {
                    g[(0, col)] = -g[(0, col)];
                }
            }
            let det = linalg::determinant(&g).re;
            g /= c(det.abs().powf(1.0 / n as f64), 0.0);
            finish(target, g.map(|z| c(z.re, 0.0)), &evals)
        }
    }
}

fn finish(target: &CartanDatum, g: CMat, evals: &[C64]) -> Result<Reduction> {
    let coords = target.coords_from_diagonal(evals);
    let reduced = target.element(&coords);
    let reduced = if reduced.is_real(1e-9 * reduced.norm().max(1.0)) {
        AlgebraElement::from_real(&reduced.real_coords())
    } else {
        reduced
    };
    Ok(Reduction::Conjugate {
        g,
        reduced,
        cartan_coords: coords,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::real_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn alg(f: Family, n: usize) -> Arc<AlgebraSpec> {
        Arc::new(AlgebraSpec::build(f, n).unwrap())
    }

    #[test]
    fn su2_cartan_has_two_roots_and_weyl_order_two() {
        let a = alg(Family::Su, 2);
        let x = AlgebraElement::from_real(&[0.3, 0.7, -0.2]);
        let t = cartan_of(a, &x).unwrap();
        assert_eq!(t.rank(), 1);
        assert_eq!(t.roots().len(), 2);
        assert_eq!(t.weyl_group().len(), 2);
    }

    #[test]
    fn sl3_diag_cartan() {
        let a = alg(Family::SlReal, 3);
        let m = real_matrix(3, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0, -3.0]);
        let x = a.element_from_matrix(&m).unwrap();
        let t = cartan_of(a.clone(), &x).unwrap();
        assert_eq!(t.rank(), 2);
        assert_eq!(t.roots().len(), 6);
        assert_eq!(t.weyl_group().len(), 6);
        assert!(t.contains(&x).unwrap());
        for h in t.basis() {
            for k in t.basis() {
                assert!(a.bracket(h, k).unwrap().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn root_vectors_are_eigenvectors() {
        let a = alg(Family::SlReal, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = a.random_element(&mut rng, 1.0);
        let t = cartan_of(a.clone(), &x).unwrap();
        for (root, ev) in t.roots().iter().zip(t.root_vectors()) {
            for (k, h) in t.basis().iter().enumerate() {
                let lhs = a.bracket(h, ev).unwrap();
                let rhs = ev.scale_complex(root.coords[k]);
                assert!(lhs.sub(&rhs).norm() < 1e-10 * ev.norm());
            }
        }
    }

    #[test]
    fn weyl_group_closed_and_permutes_roots() {
        for (f, n, order) in [(Family::SlReal, 2, 2), (Family::Su, 3, 6), (Family::SlReal, 4, 24)] {
            let a = alg(f, n);
            let t = CartanDatum::standard_upper(a).unwrap();
            let w = t.weyl_group();
            assert_eq!(w.len(), order);
            for u in w {
                for v in w {
                    assert!(t.find_weyl(&(&u.matrix * &v.matrix)).is_some());
                }
                let mut perm = u.root_perm.clone();
                perm.sort();
                assert_eq!(perm, (0..t.roots().len()).collect::<Vec<_>>());
            }
            for a in 0..t.roots().len() {
                assert!(t.find_weyl(&t.reflection(a)).is_some());
            }
        }
    }

    #[test]
    fn weyl_words_are_reduced_and_lexicographic() {
        let t = CartanDatum::standard_upper(alg(Family::SlReal, 3)).unwrap();
        let labels: Vec<String> = t.weyl_group().iter().map(|w| w.label()).collect();
        assert_eq!(labels, vec!["e", "s1", "s2", "s1s2", "s2s1", "s1s2s1"]);
        // length = number of positive roots sent negative
        for w in t.weyl_group() {
            let inversions = t
                .positive_roots()
                .into_iter()
                .filter(|&a| !t.is_positive(w.root_perm[a]))
                .count();
            assert_eq!(inversions, w.word.len());
            assert_eq!(w.sign, if w.word.len() % 2 == 0 { 1 } else { -1 });
        }
    }

    #[test]
    fn rotation_is_not_conjugate_to_split_cartan() {
        let a = alg(Family::SlReal, 2);
        let t = CartanDatum::standard_upper(a.clone()).unwrap();
        let x = a.element_from_matrix(&real_matrix(2, &[0.0, 1.0, -1.0, 0.0])).unwrap();
        assert!(matches!(reduce_to_cartan(&x, &t).unwrap(), Reduction::NotConjugate));
    }

    #[test]
    fn symmetric_matrix_conjugates_to_diag() {
        let a = alg(Family::SlReal, 2);
        let t = CartanDatum::standard_upper(a.clone()).unwrap();
        let x = a.element_from_matrix(&real_matrix(2, &[0.0, 1.0, 1.0, 0.0])).unwrap();
        match reduce_to_cartan(&x, &t).unwrap() {
            Reduction::Conjugate { g, reduced, cartan_coords } => {
                assert!(linalg::is_real(&g, 0.0));
                assert!((linalg::determinant(&g) - c(1.0, 0.0)).norm() < 1e-12);
                let expect = real_matrix(2, &[1.0, 0.0, 0.0, -1.0]);
                assert!(linalg::max_abs(&(a.to_matrix(&reduced).unwrap() - expect)) < 1e-12);
                assert!((cartan_coords[0] - c(1.0, 0.0)).norm() < 1e-12);
                let ad = a.adjoint_action(&g, &x).unwrap();
                assert!(ad.sub(&reduced).norm() < 1e-10);
            }
            Reduction::NotConjugate => panic!("split element must conjugate"),
        }
    }

    #[test]
    fn element_in_target_gets_identity() {
        let a = alg(Family::Su, 3);
        let t = CartanDatum::standard_upper(a.clone()).unwrap();
        let x = AlgebraElement::from_real(&[0.4, -1.1, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        match reduce_to_cartan(&x, &t).unwrap() {
            Reduction::Conjugate { g, reduced, .. } => {
                assert_eq!(g, CMat::identity(3, 3));
                assert_eq!(reduced, x);
            }
            _ => panic!(),
        }
    }

    #[test]
    fn non_regular_input_is_an_error() {
        let a = alg(Family::SlReal, 2);
        let t = CartanDatum::standard_upper(a.clone()).unwrap();
        let e = a.basis_element(1);
        assert_eq!(reduce_to_cartan(&e, &t).unwrap_err(), Error::NotRegular);
        assert_eq!(cartan_of(a, &e).unwrap_err(), Error::NotRegular);
    }

    #[test]
    fn random_reductions_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (f, n) in [(Family::Su, 2), (Family::Su, 3), (Family::SlReal, 3)] {
            let a = alg(f, n);
            let t = CartanDatum::standard_upper(a.clone()).unwrap();
            let mut hits = 0;
            for _ in 0..30 {
                let x = a.random_element(&mut rng, 1.0);
                if let Reduction::Conjugate { g, reduced, .. } = reduce_to_cartan(&x, &t).unwrap() {
                    hits += 1;
                    let ad = a.adjoint_action(&g, &x).unwrap();
                    assert!(ad.sub(&reduced).norm() < 1e-10 * x.norm().max(1.0));
                    assert!(t.contains(&reduced).unwrap());
                    assert!((linalg::determinant(&g) - c(1.0, 0.0)).norm() < 1e-10);
                }
            }
            if f == Family::Su {
                assert_eq!(hits, 30);
            }
        }
    }
}
